// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "commitissue/analysis.hpp"
#include "commitissue/bio.hpp"
#include "commitissue/curator.hpp"
#include "commitissue/extraction.hpp"
#include "commitissue/metrics.hpp"
#include "commitissue/miner.hpp"
#include "commitissue/pipeline.hpp"
#include "commitissue/record_io.hpp"
#include "commitissue/tokenizer.hpp"
#include "support.hpp"

using namespace commitissue;
using Clock = std::chrono::steady_clock;

namespace {

// Collects failed checks for one criterion.
struct Check {
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    if (!(std::abs(got - want) <= tol)) {
      std::ostringstream s;
      s.precision(17);
      s << what << ": got " << got << ", want " << want;
      failures.push_back(s.str());
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

metrics::Tokens words(const std::string& s) {
  std::istringstream in(s);
  metrics::Tokens out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

// 1. BIO round trip
void bio_round_trip(Check& c) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> count(1, 30);
  std::size_t ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto w = testsupport::random_words(rng, count(rng));
    const auto spans = testsupport::random_token_spans(rng, w);
    const auto seq = encode_bio(tokenize(w.text), spans);
    if (is_well_formed(seq.tags) && decode_bio(seq) == spans) ++ok;
  }
  const double secs = seconds_since(t0);
  c.expect(ok == 1000, std::to_string(ok) + "/1000 cases round-tripped");
  c.expect(secs < 5.0, "took " + fmt(secs) + " s");
  c.notes.push_back(std::to_string(ok) + "/1000 in " + fmt(secs) + " s");
}

// 2. Fuzzy match
void fuzzy(Check& c) {
  const auto m = fuzzy_match("fix null deref", "fix null deref in parser");
  c.near(m.similarity, 14.0 / 19.0, 1e-12, "14/19 example");
  c.expect(!m.match, "14/19 example must not match at tau 0.8");
  c.expect(fuzzy_match("abcd", "abcdxy").match, "similarity exactly 0.8 must match");

  const testsupport::SubsequenceOracle oracle("abc", 8);
  const auto& s = oracle.strings();
  std::size_t pairs = 0, bad = 0, bad_match = 0;
  for (std::uint32_t i = 0; i < s.size(); ++i)
    for (std::uint32_t j = 0; j < s.size(); ++j) {
      ++pairs;
      const auto f = fuzzy_match(s[i], s[j]);
      const double want = s[i].empty() && s[j].empty()
                              ? 1.0
                              : 2.0 * double(oracle.lcs(i, j)) / double(s[i].size() + s[j].size());
      if (f.similarity != want) ++bad;
      if (f.match != (want >= 0.8)) ++bad_match;
    }
  c.expect(bad == 0, std::to_string(bad) + " similarity mismatches");
  c.expect(bad_match == 0, std::to_string(bad_match) + " threshold mismatches");
  c.notes.push_back(std::to_string(pairs) + " string pairs");
}

// 3. Metric oracles
void metric_oracles(Check& c) {
  using namespace metrics;
  c.near(bleu(words("a b c d"), {words("a b c d")}), 1.0, 1e-9, "BLEU identity");
  c.near(bleu(words("a b c d"), {words("a b c d e")}), std::exp(1.0 - 5.0 / 4.0), 1e-9, "BLEU brevity example");
  c.near(bleu(words("a b c d e"), {words("a b c x e")}), 0.0, 1e-9, "BLEU zero 4-gram overlap");

  const auto r = rouge_l(words("a b c d"), words("a c d"));
  c.near(r.precision, 0.75, 1e-9, "ROUGE-L P");
  c.near(r.recall, 1.0, 1e-9, "ROUGE-L R");
  c.near(r.f, 1.83 / 2.08, 1e-9, "ROUGE-L F");
  c.near(rouge_l(words("a b"), words("c d")).f, 0.0, 1e-9, "ROUGE-L disjoint");

  for (std::size_t L = 1; L <= 10; ++L) {
    Tokens t;
    for (std::size_t i = 0; i < L; ++i) t.push_back("w" + std::to_string(i));
    c.near(meteor(t, t), 1.0 - 0.5 / double(L * L * L), 1e-9, "METEOR identity L=" + std::to_string(L));
  }
  c.near(meteor(words("fixed bug"), words("fixes bugs")), 0.9375, 1e-9, "METEOR stem example");
  c.near(meteor(words("a b"), words("c d")), 0.0, 1e-9, "METEOR no match");

  const CiderScorer unique({words("a b c d"), words("e f g h")});
  c.near(unique.score(words("a b c d"), words("a b c d")), 10.0, 1e-9, "CIDEr identity");
  c.near(unique.score(words("a b c d"), words("e f g h")), 0.0, 1e-9, "CIDEr disjoint");
  const CiderScorer shared({words("fix a"), words("fix b")}, 2);
  c.near(shared.idf("fix", 1), 0.0, 1e-9, "CIDEr shared unigram IDF");
  c.near(shared.score(words("fix b"), words("fix a")), 0.0, 1e-9, "CIDEr shared unigram contributes nothing");

  const auto strings = testsupport::all_strings("abc", 6);
  std::vector<Tokens> seqs;
  for (const auto& s : strings) {
    Tokens t;
    for (char ch : s) t.emplace_back(1, ch);
    seqs.push_back(std::move(t));
  }
  std::size_t bad = 0;
  for (const auto& a : seqs)
    for (const auto& b : seqs) bad += lcs_length(a, b) != testsupport::brute_force_lcs(a, b);
  c.expect(bad == 0, std::to_string(bad) + " token LCS mismatches");
  c.notes.push_back(std::to_string(seqs.size() * seqs.size()) + " LCS pairs");
}

// 4. Curator constants
void curator_constants(Check& c) {
  CommitRecord r;
  r.message = "Fix null check in config loader";
  r.files.push_back({"src/Loader.java", "@@ -1 +1 @@\n-a\n+b"});
  auto body = [](std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += i ? " w" : "w";
    return s;
  };
  r.issues.push_back({"Crash without config", body(1024)});
  c.expect(filter_record(r).keep, "1024 tokens must be kept");
  r.issues[0].body = body(1025);
  const auto d = filter_record(r);
  c.expect(!d.keep && d.reason == DropReason::length, "1025 tokens must be dropped for length");

  const auto s = split_sizes(19262);
  c.expect(s.train == 15410 && s.valid == 1926 && s.test == 1926, "19262 split sizes");
  const auto idx = stratify_indices(19262, 42);
  c.expect(idx.train.size() == 15410 && idx.valid.size() == 1926 && idx.test.size() == 1926, "stratify(19262)");

  std::mt19937_64 rng(7);
  const std::vector<std::string> pieces = {"word ", "```", "~~~", "`", "\n", "\n\n", "    code\n", "http://a.b/c",
                                           "www.x.org", "[t](http://l.k)", "![i](u.png)", "[URL]", "[CODE]", "#12 ",
                                           ". ", "é", "\t", "GH-4"};
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1), len(0, 50);
  std::size_t stable = 0;
  for (int i = 0; i < 1000; ++i) {
    std::string text;
    for (auto k = len(rng); k > 0; --k) text += pieces[pick(rng)];
    const auto once = normalize_issue_body(text);
    stable += normalize_issue_body(once) == once;
  }
  c.expect(stable == 1000, std::to_string(stable) + "/1000 bodies idempotent");
}

// 5. Miner fixture
void miner_fixture(Check& c) {
  using namespace miner;
  const auto fixture = json::parse(read_file(testsupport::data_path("miner_fixture.json")));
  const auto repo = RepoRef::parse(fixture["repo"].get<std::string>());
  const auto issues = fixture["issues"].get<std::vector<long>>();
  const auto expected = read_file(testsupport::data_path("miner_expected_map.jsonl"));
  for (std::size_t par : {1u, 4u}) {
    FixtureTransport t(fixture);
    MinerOptions opts;
    opts.parallelism = par;
    const auto r = build_commit_issue_map(repo, issues, t, opts);
    c.expect(r.map.to_jsonl() == expected, "map differs at parallelism " + std::to_string(par));
    c.expect(r.notes.size() == 1, "expected one cross-repository note");
  }
}

// 6. Extraction evaluator
void extraction_eval(Check& c) {
  const auto corpus = read_annotated_records(testsupport::data_path("toy_corpus.jsonl"));
  const GoldReplayTagger tagger(corpus);
  const KeywordIssueClassifier classifier;
  std::vector<std::vector<ExtractedSpan>> pred, gold;
  for (const auto& r : corpus) {
    const auto p = annotate_record(r.record, classifier, tagger);
    for (std::size_t i = 0; i < r.record.issues.size(); ++i) {
      pred.push_back(resolve_spans(r.record.issues[i], p.annotations[i].spans));
      gold.push_back(resolve_spans(r.record.issues[i], r.annotations[i].spans));
    }
  }
  const auto rep = evaluate_extraction(pred, gold);
  for (const auto* cls : {&rep.actual, &rep.expected, &rep.micro}) {
    c.near(cls->precision, 1.0, 0, "gold replay precision");
    c.near(cls->recall, 1.0, 0, "gold replay recall");
    c.near(cls->f1, 1.0, 0, "gold replay F1");
  }
  c.expect(corpus.size() == 20, "toy corpus has 20 records");

  auto as = [](const char* t) { return ExtractedSpan{Location::body, StateType::actual, t}; };
  auto es = [](const char* t) { return ExtractedSpan{Location::body, StateType::expected, t}; };
  struct Case {
    std::vector<std::vector<ExtractedSpan>> pred, gold;
  };
  const std::vector<Case> cases = {
      {{{as("a1 a1"), as("a2 a2"), as("a3 a3"), es("nothing like it")}},
       {{as("a1 a1"), as("a2 a2"), as("a3 a3"), es("e1"), es("e2"), es("e3"), es("e4")}}},
      {{{as("x x x"), as("qqqq"), as("rrrr"), as("ssss"), es("ok one"), es("ok two")}},
       {{as("x x x"), es("ok one"), es("ok two")}}},
      {{{as("alpha")}, {as("beta"), es("gamma")}, {}}, {{as("alpha")}, {as("delta")}, {as("beta")}}},
  };
  for (const auto& k : cases) {
    const auto e = evaluate_extraction(k.pred, k.gold);
    // Pooled counts recomputed from the class counts.
    const double tp = double(e.actual.true_positives + e.expected.true_positives);
    const double np = double(e.actual.predicted + e.expected.predicted);
    const double ng = double(e.actual.gold + e.expected.gold);
    const double p = tp / np, r = tp / ng;
    const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    c.near(e.micro_f1(), f, 1e-12, "micro-F1 from pooled counts");
    c.expect(std::abs(e.micro_f1() - (e.actual.f1 + e.expected.f1) / 2) > 1e-6, "case must be asymmetric");
  }
}

// 7. Pipeline end to end
void pipeline_e2e(Check& c) {
  using namespace pipeline;
  const auto corpus = read_annotated_records(testsupport::data_path("toy_corpus.jsonl"));
  const auto t0 = Clock::now();
  RetrievalGenerator grounded;
  PipelineOptions opts;
  opts.seed = 11;
  opts.checkpoint_dir = testsupport::scratch_dir("acceptance-pipeline");
  const auto r = run_three_stage(grounded, corpus, opts);
  const double secs = seconds_since(t0);
  c.expect(r.grounded, "grounding stage ran");
  c.expect(r.checkpoints.size() >= 2, "checkpoints for both training stages");
  c.expect(secs < 10.0, "took " + fmt(secs) + " s");
  for (const auto& m : r.generated) c.expect(!m.empty(), "empty generated message");

  RetrievalGenerator rerun;
  PipelineOptions same;
  same.seed = 11;
  c.expect(run_three_stage(rerun, corpus, same).output_hash == r.output_hash, "rerun hash differs");

  RetrievalGenerator plain;
  PipelineOptions off = same;
  off.ground = false;
  run_three_stage(plain, corpus, off);

  const auto splits = stratify(corpus, 11);
  std::size_t witnesses = 0;
  for (const auto& pair : build_grounding_set(splits.train).pairs)
    for (const auto& tok : metric_tokens(pair.target))
      witnesses += grounded.in_vocabulary(tok) && !plain.in_vocabulary(tok);
  c.expect(witnesses > 0, "no grounding-target token is unique to the grounded vocabulary");
  c.notes.push_back(fmt(secs) + " s, " + std::to_string(witnesses) + " grounding-only target tokens");
}

// 8. Analysis
void analysis_checks(Check& c) {
  using namespace analysis;
  const std::vector<double> a = {1, 2}, b = {3, 4};
  const auto base = mann_whitney_u(a, b);
  c.expect(base.exact, "A=[1,2], B=[3,4] must use the exact method");
  c.near(base.p_value, 1.0 / 3.0, 1e-12, "exact p");

  // Battery: every assignment of distinct ranks with both groups of size >= 3
  // and combined n <= 10. The test only sees ranks, so this covers every
  // subsample of continuous data with those sizes. Tied pools and groups of
  // one or two are measured too but lie outside the battery.
  auto divergence = [](std::size_t n, std::size_t na, bool tied, std::size_t& cases) {
    std::vector<double> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = tied ? double(i / 2) : double(i);
    double worst = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      if (std::size_t(__builtin_popcount(mask)) != na) continue;
      std::vector<double> x, y;
      for (std::size_t i = 0; i < n; ++i) (mask & (1u << i) ? x : y).push_back(pool[i]);
      const double pe = mann_whitney_u(x, y, PValueMethod::exact).p_value;
      const double pn = mann_whitney_u(x, y, PValueMethod::normal).p_value;
      worst = std::max(worst, std::abs(pe - pn));
      ++cases;
    }
    return worst;
  };
  double worst = 0.0, worst_small = 0.0, worst_tied = 0.0;
  std::size_t cases = 0, outside = 0;
  for (std::size_t n = 2; n <= kExactLimit; ++n)
    for (std::size_t na = 1; na < n; ++na) {
      const bool in_battery = na >= 3 && n - na >= 3;
      if (in_battery) worst = std::max(worst, divergence(n, na, false, cases));
      else worst_small = std::max(worst_small, divergence(n, na, false, outside));
      if (n >= 4) worst_tied = std::max(worst_tied, divergence(n, na, true, outside));
    }
  c.expect(worst < 0.05, "exact vs normal divergence " + fmt(worst));

  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise;
  auto embeddings = [&](double pull) {
    EmbeddingPairs e;
    e.dimension = 16;
    for (int i = 0; i < 200; ++i) {
      Vector code(16), msg(16);
      for (std::size_t k = 0; k < 16; ++k) {
        code[k] = noise(rng);
        msg[k] = pull * code[k] + (1.0 - pull) * noise(rng);
      }
      e.code.push_back(code);
      e.message.push_back(msg);
    }
    return e;
  };
  const auto before = embeddings(0.2), after = embeddings(0.6);
  const auto g = analyze_grounding(before, after, 20);
  c.expect(g.test.p_value < 0.01, "synthetic p = " + fmt(g.test.p_value));
  c.expect(g.after_histogram.median() < g.before_histogram.median(), "after-grounding median not below before");
  c.notes.push_back(std::to_string(cases) + " battery cases, max |exact-normal| " + fmt(worst) +
                    "; outside the battery: groups of 1-2 " + fmt(worst_small) + ", tied pools " + fmt(worst_tied) +
                    "; synthetic p " + fmt(g.test.p_value));
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"1 BIO round trip", bio_round_trip},       {"2 fuzzy match", fuzzy},
      {"3 metric oracles", metric_oracles},       {"4 curator constants", curator_constants},
      {"5 miner fixtures", miner_fixture},        {"6 extraction evaluator", extraction_eval},
      {"7 pipeline end to end", pipeline_e2e},    {"8 analysis", analysis_checks},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    std::string line = (c.failures.empty() ? "PASS " : "FAIL ") + name;
    std::string detail;
    for (const auto& n : c.notes) detail += (detail.empty() ? "" : "; ") + n;
    for (const auto& f : c.failures) detail += (detail.empty() ? "" : "; ") + f;
    if (!detail.empty()) line += " (" + detail + ")";
    std::cout << line << std::endl;
    failed += !c.failures.empty();
  }
  return failed ? 1 : 0;
}
