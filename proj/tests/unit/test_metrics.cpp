#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "commitissue/error.hpp"
#include "commitissue/metrics.hpp"
#include "support.hpp"

using namespace commitissue;
using namespace commitissue::metrics;

namespace {

Tokens toks(const std::string& s) {
  Tokens out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Tokens chars(const std::string& s) {
  Tokens out;
  for (char c : s) out.emplace_back(1, c);
  return out;
}

// Fewest contiguous hyp segments that each map onto consecutive reference
// positions, over every way of cutting the permutation.
std::size_t brute_force_chunks(const std::vector<std::size_t>& perm) {
  const std::size_t n = perm.size();
  std::size_t best = n;
  for (std::uint32_t cuts = 0; cuts < (1u << (n - 1)); ++cuts) {
    bool ok = true;
    for (std::size_t i = 0; i + 1 < n && ok; ++i)
      if (!(cuts & (1u << i)) && perm[i + 1] != perm[i] + 1) ok = false;
    if (ok) best = std::min<std::size_t>(best, 1 + __builtin_popcount(cuts));
  }
  return best;
}

}  // namespace

TEST_CASE("BLEU examples") {
  CHECK(bleu(toks("a b c d"), {toks("a b c d")}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(bleu(toks("a b c d"), {toks("a b c d e")}) - std::exp(1.0 - 5.0 / 4.0)) < 1e-9);
  CHECK(std::exp(-0.25) == doctest::Approx(0.7788).epsilon(1e-4));
  CHECK(bleu(toks("a b c d e"), {toks("a b c x e")}) == 0.0);  // no shared 4-gram, unsmoothed
  CHECK(bleu({}, {toks("a b")}) == 0.0);
  BleuOptions smooth;
  smooth.smoothing = true;
  CHECK(bleu(toks("a b c d e"), {toks("a b c x e")}, smooth) > 0.0);
  // Identity on hypotheses shorter than max_n.
  CHECK(bleu(toks("fix"), {toks("fix")}) == doctest::Approx(1.0));
}

TEST_CASE("BLEU clipping and closest reference length") {
  const auto s = bleu_stats(toks("the the the the"), {toks("the cat"), toks("the the dog")});
  CHECK(s.matches[0] == 2);
  CHECK(s.totals[0] == 4);
  CHECK(s.ref_length == 3);
  // Ties in distance go to the shorter reference.
  CHECK(bleu_stats(toks("a b c"), {toks("a b c d"), toks("a b")}).ref_length == 2);
}

TEST_CASE("brevity penalty is monotone below the reference length") {
  for (std::size_t r = 1; r <= 40; ++r) {
    double prev = 0.0;
    for (std::size_t c = 1; c <= r; ++c) {
      const double bp = brevity_penalty(c, r);
      CHECK(bp == doctest::Approx(std::exp(1.0 - double(r) / double(c))));
      CHECK(bp >= prev);
      CHECK(bp <= 1.0);
      prev = bp;
    }
    CHECK(brevity_penalty(r + 1, r) == 1.0);
  }
  CHECK(brevity_penalty(0, 3) == 0.0);
  // A prefix of the reference has precision 1, so BLEU is exactly BP.
  const auto ref = toks("a b c d e f g h i j");
  for (std::size_t c = 4; c <= ref.size(); ++c) {
    const Tokens hyp(ref.begin(), ref.begin() + long(c));
    CHECK(bleu(hyp, {ref}) == doctest::Approx(brevity_penalty(c, ref.size())).epsilon(1e-12));
  }
}

TEST_CASE("corpus BLEU pools counts") {
  CHECK(corpus_bleu({toks("a b c d"), toks("e f g h")}, {{toks("a b c d")}, {toks("e f g h")}}) == doctest::Approx(1.0));
  const std::vector<Tokens> hyps = {toks("a b c d e"), toks("x y z w")};
  const std::vector<std::vector<Tokens>> refs = {{toks("a b c d e")}, {toks("x y q w")}};
  // Pooled: p1 = 8/9, p2 = 5/7, p3 = 3/5, p4 = 2/3 (hand counted), c = r.
  const double expected = std::exp((std::log(8.0 / 9) + std::log(5.0 / 7) + std::log(3.0 / 5) + std::log(2.0 / 3)) / 4);
  CHECK(std::abs(corpus_bleu(hyps, refs) - expected) < 1e-9);
}

TEST_CASE("ROUGE-L examples") {
  const auto same = rouge_l(toks("a b c"), toks("a b c"));
  CHECK(same.f == doctest::Approx(1.0));
  const auto r = rouge_l(toks("a b c d"), toks("a c d"));
  CHECK(r.precision == 0.75);
  CHECK(r.recall == 1.0);
  CHECK(std::abs(r.f - 1.83 / 2.08) < 1e-9);
  CHECK(rouge_l(toks("a b"), toks("c d")).f == 0.0);
  CHECK(rouge_l({}, toks("c d")).f == 0.0);
  // Breaking the LCS by permuting never helps.
  CHECK(rouge_l(toks("b a d c"), toks("a b c d")).f < rouge_l(toks("a b c d"), toks("a b c d")).f);
}

TEST_CASE("token LCS agrees with brute force") {
  const auto strings = testsupport::all_strings("xyz", 5);
  std::vector<Tokens> seqs;
  for (const auto& s : strings) seqs.push_back(chars(s));
  for (const auto& a : seqs)
    for (const auto& b : seqs) REQUIRE(lcs_length(a, b) == testsupport::brute_force_lcs(a, b));
}

TEST_CASE("METEOR examples") {
  for (std::size_t L = 1; L <= 8; ++L) {
    Tokens t;
    for (std::size_t i = 0; i < L; ++i) t.push_back("w" + std::to_string(i));
    CHECK(std::abs(meteor(t, t) - (1.0 - 0.5 / double(L * L * L))) < 1e-9);
  }
  CHECK(meteor(toks("a b"), toks("c d")) == 0.0);
  const auto al = meteor_align(toks("fixed bug"), toks("fixes bugs"));
  CHECK(al.exact_matches == 0);
  CHECK(al.stem_matches == 2);
  CHECK(al.chunks == 1);
  CHECK(std::abs(meteor(toks("fixed bug"), toks("fixes bugs")) - 0.9375) < 1e-9);
}

TEST_CASE("METEOR chunk count agrees with brute force over permutations") {
  for (std::size_t L = 1; L <= 6; ++L) {
    std::vector<std::size_t> perm(L);
    std::iota(perm.begin(), perm.end(), 0);
    Tokens ref;
    for (std::size_t i = 0; i < L; ++i) ref.push_back("t" + std::to_string(i));
    do {
      Tokens hyp;
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      for (std::size_t i = 0; i < L; ++i) {
        hyp.push_back(ref[perm[i]]);
        pairs.emplace_back(i, perm[i]);
      }
      const auto chunks = brute_force_chunks(perm);
      REQUIRE(count_chunks(pairs) == chunks);
      REQUIRE(meteor_align(hyp, ref).chunks == chunks);
      const double frag = double(chunks) / double(L);
      REQUIRE(std::abs(meteor(hyp, ref) - (1.0 - 0.5 * frag * frag * frag)) < 1e-12);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
}

TEST_CASE("CIDEr examples") {
  const std::vector<Tokens> corpus = {toks("a b c d"), toks("e f g h")};
  const CiderScorer scorer(corpus);
  CHECK(std::abs(scorer.score(toks("a b c d"), toks("a b c d")) - 10.0) < 1e-9);
  CHECK(scorer.score(toks("a b c d"), toks("e f g h")) == 0.0);
  CHECK(scorer.idf("a", 1) == doctest::Approx(std::log(2.0)));

  // The shared unigram occurs in both documents, so its IDF is log(2/2) = 0.
  const CiderScorer two({toks("fix a"), toks("fix b")}, 2);
  CHECK(two.idf("fix", 1) == 0.0);
  CHECK(two.tfidf(toks("fix a"), 1).at("fix") == 0.0);
  CHECK(two.score(toks("fix b"), toks("fix a")) == 0.0);
  CHECK(std::abs(two.score(toks("fix a"), toks("fix a")) - 10.0) < 1e-9);

  CHECK_THROWS_AS(CiderScorer({toks("one")}), UsageError);
  const auto res = cider({toks("a b c d"), toks("e f g x")}, corpus);
  REQUIRE(res.scores.size() == 2);
  CHECK(res.scores[0] == doctest::Approx(10.0));
  CHECK(res.mean == doctest::Approx((res.scores[0] + res.scores[1]) / 2));
}

TEST_CASE("CIDEr agrees with a naive TF-IDF cosine") {
  const std::vector<Tokens> corpus = {toks("fix the bug in parser"), toks("add the parser option"),
                                      toks("fix typo in docs"), toks("the the parser")};
  const CiderScorer scorer(corpus);
  const auto hyp = toks("fix the parser bug"), ref = toks("fix the bug in parser");
  double total = 0;
  for (int n = 1; n <= 4; ++n) {
    auto grams = [&](const Tokens& t) {
      std::map<std::string, double> m;
      for (std::size_t i = 0; i + std::size_t(n) <= t.size(); ++i) {
        std::string k;
        for (int j = 0; j < n; ++j) k += (j ? " " : "") + t[i + std::size_t(j)];
        m[k] += 1;
      }
      return m;
    };
    auto weigh = [&](std::map<std::string, double> m) {
      for (auto& [k, v] : m) {
        double df = 0;
        for (const auto& doc : corpus) df += grams(doc).count(k) ? 1 : 0;
        v *= std::log(double(corpus.size()) / std::max(1.0, df));
      }
      return m;
    };
    const auto h = weigh(grams(hyp)), r = weigh(grams(ref));
    double dot = 0, nh = 0, nr = 0;
    for (const auto& [k, v] : h) {
      nh += v * v;
      if (r.count(k)) dot += v * r.at(k);
    }
    for (const auto& [k, v] : r) nr += v * v;
    total += nh > 0 && nr > 0 ? dot / std::sqrt(nh * nr) : 0.0;
  }
  CHECK(std::abs(scorer.score(hyp, ref) - 10.0 * total / 4) < 1e-9);
}

TEST_CASE("Porter stemmer matches the reference word list") {
  std::ifstream in(testsupport::data_path("porter_oracle.tsv"));
  REQUIRE(in);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    REQUIRE(tab != std::string::npos);
    const auto word = line.substr(0, tab), stem = line.substr(tab + 1);
    INFO(word);
    CHECK(porter_stem(word) == stem);
    ++n;
  }
  CHECK(n > 2000);
  CHECK(porter_stem("fixes") == "fix");
  CHECK(porter_stem("fixed") == "fix");
  CHECK(porter_stem("bugs") == "bug");
}

TEST_CASE("score_generation") {
  const auto report = score_generation({"Fix NPE in loader", "Add YAML support"}, {"Fix NPE in loader", "Add YAML support"});
  CHECK(report.corpus_bleu == doctest::Approx(1.0));
  CHECK(report.rouge_l.f == doctest::Approx(1.0));
  REQUIRE(report.cider.has_value());
  const auto json = report.to_json();
  CHECK(json["corpus"]["n"] == 2);
  CHECK(report.to_csv().rfind("example,bleu,", 0) == 0);
  CHECK_FALSE(score_generation({"x"}, {"x"}).cider.has_value());
  CHECK_THROWS_AS(score_generation({"x"}, {"x", "y"}), UsageError);
  CHECK_THROWS_AS(score_generation({}, {}), UsageError);
}
