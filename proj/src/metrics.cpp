#include "commitissue/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "commitissue/error.hpp"
#include "commitissue/tokenizer.hpp"

namespace commitissue::metrics {
namespace {

using Counts = std::unordered_map<std::string, std::size_t>;

std::string ngram_key(const Tokens& t, std::size_t pos, int n) {
  std::string key = t[pos];
  for (int k = 1; k < n; ++k) {
    key += ' ';
    key += t[pos + k];
  }
  return key;
}

Counts ngram_counts(const Tokens& t, int n) {
  Counts out;
  if (t.size() < static_cast<std::size_t>(n)) return out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) ++out[ngram_key(t, i, n)];
  return out;
}

std::size_t closest_ref_length(std::size_t hyp_len, const std::vector<Tokens>& refs) {
  std::size_t best = refs.front().size();
  for (const auto& r : refs) {
    auto d = [&](std::size_t len) { return len > hyp_len ? len - hyp_len : hyp_len - len; };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
  }
  return best;
}

}  // namespace

BleuStats bleu_stats(const Tokens& hyp, const std::vector<Tokens>& refs, int max_n) {
  if (refs.empty()) throw UsageError("bleu: at least one reference is required");
  if (max_n < 1) throw UsageError("bleu: max_n must be positive");
  BleuStats s;
  s.hyp_length = hyp.size();
  s.ref_length = closest_ref_length(hyp.size(), refs);
  for (int n = 1; n <= max_n; ++n) {
    Counts h = ngram_counts(hyp, n);
    Counts max_ref;
    for (const auto& r : refs)
      for (const auto& [k, c] : ngram_counts(r, n)) max_ref[k] = std::max(max_ref[k], c);
    std::size_t matches = 0, total = 0;
    for (const auto& [k, c] : h) {
      total += c;
      auto it = max_ref.find(k);
      if (it != max_ref.end()) matches += std::min(c, it->second);
    }
    s.matches.push_back(matches);
    s.totals.push_back(total);
  }
  return s;
}

double brevity_penalty(std::size_t hyp_length, std::size_t ref_length) {
  if (hyp_length == 0) return 0.0;
  if (hyp_length > ref_length) return 1.0;
  return std::exp(1.0 - static_cast<double>(ref_length) / static_cast<double>(hyp_length));
}

double bleu_from_stats(const BleuStats& s, const BleuOptions& options) {
  if (s.hyp_length == 0) return 0.0;
  // Orders longer than the hypothesis have no n-grams to judge and are left
  // out of the mean, so a short hypothesis equal to its reference scores 1.
  std::size_t n_orders = 0;
  double log_sum = 0.0;
  for (std::size_t i = 0; i < s.matches.size(); ++i) {
    if (s.totals[i] == 0) continue;
    ++n_orders;
    double p;
    if (s.matches[i] > 0) {
      p = static_cast<double>(s.matches[i]) / static_cast<double>(s.totals[i]);
    } else if (options.smoothing && i >= 1) {
      p = options.epsilon / static_cast<double>(s.totals[i]);
    } else {
      return 0.0;
    }
    log_sum += std::log(p);
  }
  return brevity_penalty(s.hyp_length, s.ref_length) * std::exp(log_sum / static_cast<double>(n_orders));
}

double bleu(const Tokens& hyp, const std::vector<Tokens>& refs, const BleuOptions& options) {
  return bleu_from_stats(bleu_stats(hyp, refs, options.max_n), options);
}

double corpus_bleu(const std::vector<Tokens>& hyps, const std::vector<std::vector<Tokens>>& refs, int max_n) {
  if (hyps.size() != refs.size()) throw UsageError("corpus_bleu: hypothesis and reference counts differ");
  BleuStats total;
  total.matches.assign(max_n, 0);
  total.totals.assign(max_n, 0);
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    BleuStats s = bleu_stats(hyps[i], refs[i], max_n);
    for (int n = 0; n < max_n; ++n) {
      total.matches[n] += s.matches[n];
      total.totals[n] += s.totals[n];
    }
    total.hyp_length += s.hyp_length;
    total.ref_length += s.ref_length;
  }
  return bleu_from_stats(total, BleuOptions{max_n, false, 0.0});
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (const auto& x : a) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t up = row[j];
      row[j] = x == b[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

RougeL rouge_l(const Tokens& hyp, const Tokens& ref, double beta) {
  RougeL r;
  if (hyp.empty() || ref.empty()) return r;
  const double lcs = static_cast<double>(lcs_length(hyp, ref));
  if (lcs == 0) return r;
  r.precision = lcs / static_cast<double>(hyp.size());
  r.recall = lcs / static_cast<double>(ref.size());
  const double b2 = beta * beta;
  r.f = (1 + b2) * r.precision * r.recall / (r.recall + b2 * r.precision);
  return r;
}

std::size_t count_chunks(const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  if (pairs.empty()) return 0;
  std::size_t chunks = 1;
  for (std::size_t k = 1; k < pairs.size(); ++k)
    if (pairs[k].first != pairs[k - 1].first + 1 || pairs[k].second != pairs[k - 1].second + 1) ++chunks;
  return chunks;
}

MeteorAlignment meteor_align(const Tokens& hyp, const Tokens& ref) {
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> partner(hyp.size(), kNone);
  std::vector<bool> ref_used(ref.size(), false);

  auto run_stage = [&](const Tokens& h, const Tokens& r) {
    std::size_t matched = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (partner[i] != kNone) continue;
      std::size_t pick = kNone;
      if (i > 0 && partner[i - 1] != kNone) {
        std::size_t j = partner[i - 1] + 1;
        if (j < r.size() && !ref_used[j] && r[j] == h[i]) pick = j;
      }
      for (std::size_t j = 0; pick == kNone && j < r.size(); ++j)
        if (!ref_used[j] && r[j] == h[i]) pick = j;
      if (pick != kNone) {
        partner[i] = pick;
        ref_used[pick] = true;
        ++matched;
      }
    }
    return matched;
  };

  MeteorAlignment a;
  a.exact_matches = run_stage(hyp, ref);
  Tokens hs, rs;
  for (const auto& t : hyp) hs.push_back(porter_stem(t));
  for (const auto& t : ref) rs.push_back(porter_stem(t));
  a.stem_matches = run_stage(hs, rs);
  for (std::size_t i = 0; i < hyp.size(); ++i)
    if (partner[i] != kNone) a.pairs.emplace_back(i, partner[i]);
  a.chunks = count_chunks(a.pairs);
  return a;
}

double meteor(const Tokens& hyp, const Tokens& ref, const MeteorParams& p) {
  if (hyp.empty() || ref.empty()) return 0.0;
  MeteorAlignment a = meteor_align(hyp, ref);
  const double m = static_cast<double>(a.pairs.size());
  if (m == 0) return 0.0;
  const double precision = m / static_cast<double>(hyp.size());
  const double recall = m / static_cast<double>(ref.size());
  const double fmean = precision * recall / (p.alpha * precision + (1 - p.alpha) * recall);
  const double penalty = p.gamma * std::pow(static_cast<double>(a.chunks) / m, p.beta);
  return fmean * (1 - penalty);
}

CiderScorer::CiderScorer(const std::vector<Tokens>& corpus, int max_n)
    : max_n_(max_n), corpus_size_(corpus.size()), df_(max_n) {
  if (corpus.size() < 2) throw UsageError("cider: the reference corpus needs at least two documents");
  if (max_n < 1) throw UsageError("cider: max_n must be positive");
  for (const auto& doc : corpus)
    for (int n = 1; n <= max_n; ++n)
      for (const auto& [k, c] : ngram_counts(doc, n)) ++df_[n - 1][k];
}

double CiderScorer::idf(const std::string& key, int n) const {
  const auto& table = df_.at(n - 1);
  auto it = table.find(key);
  const double df = it == table.end() ? 1.0 : static_cast<double>(std::max<std::size_t>(it->second, 1));
  return std::log(static_cast<double>(corpus_size_) / df);
}

std::map<std::string, double> CiderScorer::tfidf(const Tokens& tokens, int n) const {
  std::map<std::string, double> v;
  for (const auto& [k, c] : ngram_counts(tokens, n)) v[k] = static_cast<double>(c) * idf(k, n);
  return v;
}

double CiderScorer::score(const Tokens& hyp, const Tokens& ref) const {
  double sum = 0.0;
  for (int n = 1; n <= max_n_; ++n) {
    auto h = tfidf(hyp, n);
    auto r = tfidf(ref, n);
    double dot = 0, nh = 0, nr = 0;
    for (const auto& [k, w] : h) {
      nh += w * w;
      auto it = r.find(k);
      if (it != r.end()) dot += w * it->second;
    }
    for (const auto& [k, w] : r) nr += w * w;
    if (nh > 0 && nr > 0) sum += dot / (std::sqrt(nh) * std::sqrt(nr));
  }
  return 10.0 * sum / static_cast<double>(max_n_);
}

CiderResult cider(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs, const std::vector<Tokens>& corpus,
                  int max_n) {
  if (hyps.size() != refs.size()) throw UsageError("cider: hypothesis and reference counts differ");
  CiderScorer scorer(corpus.empty() ? refs : corpus, max_n);
  CiderResult out;
  for (std::size_t i = 0; i < hyps.size(); ++i) out.scores.push_back(scorer.score(hyps[i], refs[i]));
  double total = 0;
  for (double s : out.scores) total += s;
  out.mean = out.scores.empty() ? 0.0 : total / static_cast<double>(out.scores.size());
  return out;
}

MetricReport score_generation(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
                              const ReportOptions& options) {
  if (hypotheses.size() != references.size())
    throw UsageError("eval-generation: " + std::to_string(hypotheses.size()) + " hypotheses but " +
                     std::to_string(references.size()) + " references");
  if (hypotheses.empty()) throw UsageError("eval-generation: no examples");

  std::vector<Tokens> hyps, refs;
  for (const auto& h : hypotheses) hyps.push_back(metric_tokens(h));
  for (const auto& r : references) refs.push_back(metric_tokens(r));

  MetricReport rep;
  rep.options = options;
  std::optional<CiderScorer> scorer;
  if (refs.size() >= 2) scorer.emplace(refs, 4);

  std::vector<std::vector<Tokens>> ref_sets;
  const double n = static_cast<double>(hyps.size());
  double cider_sum = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    ExampleScores e;
    ref_sets.push_back({refs[i]});
    e.bleu = bleu(hyps[i], ref_sets.back(), options.bleu);
    e.rouge_l = rouge_l(hyps[i], refs[i], options.rouge_beta);
    e.meteor = meteor(hyps[i], refs[i], options.meteor);
    if (scorer) {
      e.cider = scorer->score(hyps[i], refs[i]);
      cider_sum += *e.cider;
    }
    e.hyp_tokens = hyps[i].size();
    e.ref_tokens = refs[i].size();

    rep.sentence_bleu += e.bleu / n;
    rep.rouge_l.precision += e.rouge_l.precision / n;
    rep.rouge_l.recall += e.rouge_l.recall / n;
    rep.rouge_l.f += e.rouge_l.f / n;
    rep.meteor += e.meteor / n;
    rep.hyp_tokens += e.hyp_tokens;
    rep.ref_tokens += e.ref_tokens;
    rep.examples.push_back(e);
  }
  if (scorer) rep.cider = cider_sum / n;
  rep.corpus_bleu = corpus_bleu(hyps, ref_sets, options.bleu.max_n);
  return rep;
}

nlohmann::json MetricReport::to_json() const {
  using nlohmann::json;
  auto rouge = [](const RougeL& r) { return json{{"precision", r.precision}, {"recall", r.recall}, {"f", r.f}}; };
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json ex = json::array();
  for (const auto& e : examples)
    ex.push_back({{"bleu", e.bleu},
                  {"rouge_l", rouge(e.rouge_l)},
                  {"meteor", e.meteor},
                  {"cider", opt(e.cider)},
                  {"hyp_tokens", e.hyp_tokens},
                  {"ref_tokens", e.ref_tokens}});
  return {{"corpus",
           {{"n", examples.size()},
            {"bleu", corpus_bleu},
            {"sentence_bleu", sentence_bleu},
            {"rouge_l", rouge(rouge_l)},
            {"meteor", meteor},
            {"cider", opt(cider)},
            {"hyp_tokens", hyp_tokens},
            {"ref_tokens", ref_tokens}}},
          {"options",
           {{"bleu_max_n", options.bleu.max_n},
            {"bleu_smoothing", options.bleu.smoothing},
            {"bleu_epsilon", options.bleu.epsilon},
            {"rouge_beta", options.rouge_beta},
            {"meteor_alpha", options.meteor.alpha},
            {"meteor_beta", options.meteor.beta},
            {"meteor_gamma", options.meteor.gamma}}},
          {"examples", ex}};
}

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(10);
  auto opt = [&](const std::optional<double>& v) {
    if (v) os << *v;
  };
  os << "example,bleu,rouge_l_p,rouge_l_r,rouge_l_f,meteor,cider,hyp_tokens,ref_tokens\n";
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& e = examples[i];
    os << i << ',' << e.bleu << ',' << e.rouge_l.precision << ',' << e.rouge_l.recall << ',' << e.rouge_l.f << ','
       << e.meteor << ',';
    opt(e.cider);
    os << ',' << e.hyp_tokens << ',' << e.ref_tokens << '\n';
  }
  os << "corpus," << corpus_bleu << ',' << rouge_l.precision << ',' << rouge_l.recall << ',' << rouge_l.f << ','
     << meteor << ',';
  opt(cider);
  os << ',' << hyp_tokens << ',' << ref_tokens << '\n';
  return os.str();
}

}  // namespace commitissue::metrics
