#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

// Generation metrics over token lists. Use metric_tokens() (lowercased schema
// tokens) to turn text into tokens; scores are only comparable between runs
// of this toolkit.

namespace commitissue::metrics {

using Tokens = std::vector<std::string>;

/// Porter's suffix-stripping stemmer, original 1980 rule set. Input is
/// lowercased first.
std::string porter_stem(std::string_view word);

// ---- BLEU ---------------------------------------------------------------

struct BleuOptions {
  int max_n = 4;
  /// Replace a zero match count for n >= 2 by epsilon, giving p_n = epsilon / total_n.
  bool smoothing = false;
  double epsilon = 0.1;
};

/// Clipped n-gram matches and hypothesis n-gram totals for n = 1..max_n,
/// plus the hypothesis length and the closest reference length.
struct BleuStats {
  std::vector<std::size_t> matches;
  std::vector<std::size_t> totals;
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;
};

BleuStats bleu_stats(const Tokens& hyp, const std::vector<Tokens>& refs, int max_n = 4);

/// min(1, exp(1 - r/c)); 0 when c is 0.
double brevity_penalty(std::size_t hyp_length, std::size_t ref_length);

double bleu_from_stats(const BleuStats& stats, const BleuOptions& options = {});

/// Sentence BLEU. An empty hypothesis scores 0. Orders n longer than the
/// hypothesis are dropped from the geometric mean.
double bleu(const Tokens& hyp, const std::vector<Tokens>& refs, const BleuOptions& options = {});

/// Corpus BLEU: counts and lengths are summed before the geometric mean, no
/// smoothing.
double corpus_bleu(const std::vector<Tokens>& hyps, const std::vector<std::vector<Tokens>>& refs, int max_n = 4);

// ---- ROUGE-L --------------------------------------------------------------

std::size_t lcs_length(const Tokens& a, const Tokens& b);

struct RougeL {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

inline constexpr double kRougeBeta = 1.2;

/// F = (1 + beta^2) P R / (R + beta^2 P).
RougeL rouge_l(const Tokens& hyp, const Tokens& ref, double beta = kRougeBeta);

// ---- METEOR -------------------------------------------------------------

struct MeteorParams {
  double alpha = 0.9;  // Fmean = P R / (alpha P + (1 - alpha) R) = 10PR / (R + 9P)
  double beta = 3.0;
  double gamma = 0.5;
};

struct MeteorAlignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (hyp index, ref index), sorted by hyp index
  std::size_t exact_matches = 0;
  std::size_t stem_matches = 0;
  std::size_t chunks = 0;
};

/// Counts maximal runs of pairs that are adjacent in both sequences. `pairs`
/// must be sorted by hypothesis index.
std::size_t count_chunks(const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

/// One-to-one unigram alignment: exact matches first, then Porter-stem matches
/// on what is left. Within a stage each hypothesis token, left to right, takes
/// the reference token right after its predecessor's partner when that one
/// qualifies, otherwise the leftmost free qualifying reference token.
MeteorAlignment meteor_align(const Tokens& hyp, const Tokens& ref);

double meteor(const Tokens& hyp, const Tokens& ref, const MeteorParams& params = {});

// ---- CIDEr --------------------------------------------------------------

/// TF-IDF n-gram weighting over a reference corpus. The document-frequency
/// table is built once and then only read.
class CiderScorer {
 public:
  /// Throws UsageError when the corpus has fewer than two documents.
  explicit CiderScorer(const std::vector<Tokens>& corpus, int max_n = 4);

  /// log(|corpus| / max(1, df)).
  double idf(const std::string& ngram_key, int n) const;

  /// Raw n-gram counts times IDF, keyed by the n-gram joined with ' '.
  std::map<std::string, double> tfidf(const Tokens& tokens, int n) const;

  /// 10 times the mean over n of the cosine between the TF-IDF vectors.
  double score(const Tokens& hyp, const Tokens& ref) const;

  std::size_t corpus_size() const { return corpus_size_; }
  int max_n() const { return max_n_; }

 private:
  int max_n_;
  std::size_t corpus_size_;
  std::vector<std::unordered_map<std::string, std::size_t>> df_;  // per n
};

struct CiderResult {
  std::vector<double> scores;
  double mean = 0.0;
};

/// One reference per hypothesis. IDF comes from `corpus`, or from the
/// references when `corpus` is empty.
CiderResult cider(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs,
                  const std::vector<Tokens>& corpus = {}, int max_n = 4);

// ---- reports ------------------------------------------------------------

struct ExampleScores {
  double bleu = 0.0;
  RougeL rouge_l;
  double meteor = 0.0;
  std::optional<double> cider;
  std::size_t hyp_tokens = 0;
  std::size_t ref_tokens = 0;
};

struct ReportOptions {
  BleuOptions bleu{4, true, 0.1};
  double rouge_beta = kRougeBeta;
  MeteorParams meteor;
};

struct MetricReport {
  std::vector<ExampleScores> examples;
  double corpus_bleu = 0.0;
  double sentence_bleu = 0.0;  // mean of per-example BLEU
  RougeL rouge_l;              // means
  double meteor = 0.0;
  std::optional<double> cider;  // absent for fewer than two examples
  std::size_t hyp_tokens = 0;
  std::size_t ref_tokens = 0;
  ReportOptions options;

  nlohmann::json to_json() const;
  /// One row per example plus a final "corpus" row.
  std::string to_csv() const;
};

/// Tokenizes both sides with metric_tokens() and scores every pair.
MetricReport score_generation(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references,
                              const ReportOptions& options = {});

}  // namespace commitissue::metrics
