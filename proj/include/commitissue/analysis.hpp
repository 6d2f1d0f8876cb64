#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace commitissue::analysis {

using Vector = std::vector<double>;

/// Per-dimension z-scores over the pooled set, population standard deviation.
/// Dimensions with zero variance become 0. Needs at least two vectors of one
/// dimension; throws UsageError otherwise.
std::vector<Vector> standardize(const std::vector<Vector>& vectors);

/// Euclidean distance between a[i] and b[i].
std::vector<double> pair_distances(const std::vector<Vector>& a, const std::vector<Vector>& b);

/// 1-based ranks with ties sharing their mean rank.
std::vector<double> midranks(std::span<const double> values);

enum class PValueMethod { automatic, exact, normal };

/// Combined sample sizes up to this use the exact null distribution under
/// PValueMethod::automatic.
inline constexpr std::size_t kExactLimit = 10;

struct MannWhitneyResult {
  double u = 0.0;        // U of sample a: rank sum of a minus n_a (n_a + 1) / 2
  double u_other = 0.0;  // n_a n_b - u
  double p_value = 1.0;  // two-sided
  bool exact = false;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

/// Two-sided Mann-Whitney-Wilcoxon test. Exact p enumerates every assignment
/// of the pooled midranks to the groups and counts those at least as far from
/// the null mean; the normal approximation uses the tie-corrected variance and
/// a 0.5 continuity correction. Exact is only offered up to 20 values.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                 PValueMethod method = PValueMethod::automatic);

enum class SampleLabel { before_grounding, after_grounding };
std::string_view to_string(SampleLabel label);

struct PairDistanceSample {
  SampleLabel label = SampleLabel::before_grounding;
  std::vector<double> distances;
};

struct Histogram {
  std::vector<double> edges;  // bins + 1 values
  std::vector<std::size_t> counts;

  std::size_t total() const;
  /// Median read off the histogram by linear interpolation inside the bin
  /// holding the middle observation.
  double median() const;
};

/// Equal-width bins over [min, max] of the sample; the maximum lands in the
/// last bin. Throws UsageError for an empty sample, bins == 0 or a negative or
/// non-finite distance.
Histogram emit_histogram(const PairDistanceSample& sample, std::size_t bins);
/// Same, over a caller-chosen range [lo, hi]; values outside are clamped.
Histogram emit_histogram(const PairDistanceSample& sample, std::size_t bins, double lo, double hi);

double median(std::vector<double> values);

/// Embedding file: one header line holding the dimension, then one row of
/// space-separated reals per vector. Rows alternate code change, message.
struct EmbeddingPairs {
  std::size_t dimension = 0;
  std::vector<Vector> code;
  std::vector<Vector> message;
};

EmbeddingPairs parse_embedding_file(std::string_view text, std::string_view source = "<input>");
EmbeddingPairs read_embedding_file(const std::filesystem::path& path);
std::string format_embedding_file(const EmbeddingPairs& pairs);

/// Standardizes each file's vectors jointly, measures code/message distances
/// and compares the before and after samples.
struct GroundingAnalysis {
  PairDistanceSample before;
  PairDistanceSample after;
  MannWhitneyResult test;
  Histogram before_histogram;
  Histogram after_histogram;  // same edges as before_histogram

  nlohmann::json to_json() const;
  /// label,bin,lower,upper,count
  std::string histogram_csv() const;
};

GroundingAnalysis analyze_grounding(const EmbeddingPairs& before, const EmbeddingPairs& after, std::size_t bins = 20,
                                    PValueMethod method = PValueMethod::automatic);

}  // namespace commitissue::analysis
