#include "commitissue/analysis.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>

#include "commitissue/error.hpp"
#include "commitissue/kernels.hpp"
#include "commitissue/record_io.hpp"

namespace commitissue::analysis {

std::vector<Vector> standardize(const std::vector<Vector>& vectors) {
  if (vectors.size() < 2) throw UsageError("standardize: needs at least two vectors");
  const std::size_t dim = vectors.front().size();
  for (std::size_t i = 0; i < vectors.size(); ++i)
    if (vectors[i].size() != dim)
      throw UsageError("standardize: vector " + std::to_string(i) + " has dimension " +
                       std::to_string(vectors[i].size()) + ", expected " + std::to_string(dim));

  const auto& k = kernels::active();
  const double n = static_cast<double>(vectors.size());
  Vector mean(dim, 0.0), var(dim, 0.0), scale(dim, 0.0);
  for (const auto& v : vectors) k.accumulate(mean.data(), v.data(), dim);
  for (auto& m : mean) m /= n;
  for (const auto& v : vectors) k.accumulate_centered_squares(var.data(), v.data(), mean.data(), dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const double sd = std::sqrt(var[d] / n);
    // Treat round-off sized spread as constant.
    scale[d] = sd > 1e-12 * std::max(1.0, std::abs(mean[d])) ? 1.0 / sd : 0.0;
  }
  std::vector<Vector> out(vectors.size(), Vector(dim));
  for (std::size_t i = 0; i < vectors.size(); ++i)
    k.standardize(out[i].data(), vectors[i].data(), mean.data(), scale.data(), dim);
  return out;
}

std::vector<double> pair_distances(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  if (a.size() != b.size())
    throw UsageError("pair_distances: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " vectors");
  std::vector<double> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) throw UsageError("pair_distances: dimension mismatch at pair " + std::to_string(i));
    out.push_back(std::sqrt(kernels::squared_distance(a[i], b[i])));
  }
  return out;
}

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b, PValueMethod method) {
  if (a.empty() || b.empty()) throw UsageError("mann_whitney_u: both samples must be non-empty");
  MannWhitneyResult r;
  r.n_a = a.size();
  r.n_b = b.size();
  const std::size_t n = r.n_a + r.n_b;

  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  for (double v : pooled)
    if (!std::isfinite(v)) throw UsageError("mann_whitney_u: non-finite value");
  const std::vector<double> ranks = midranks(pooled);

  const double na = static_cast<double>(r.n_a), nb = static_cast<double>(r.n_b);
  const double offset = na * (na + 1) / 2;
  double rank_sum = 0;
  for (std::size_t i = 0; i < r.n_a; ++i) rank_sum += ranks[i];
  r.u = rank_sum - offset;
  r.u_other = na * nb - r.u;
  const double mean = na * nb / 2;
  const double observed = std::abs(r.u - mean);

  if (method == PValueMethod::automatic) method = n <= kExactLimit ? PValueMethod::exact : PValueMethod::normal;

  if (method == PValueMethod::exact) {
    if (n > 20) throw UsageError("mann_whitney_u: exact p is limited to 20 values in total");
    r.exact = true;
    std::uint64_t hits = 0, total = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) != r.n_a) continue;
      double s = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (1u << i)) s += ranks[i];
      ++total;
      if (std::abs(s - offset - mean) >= observed - 1e-9) ++hits;
    }
    r.p_value = static_cast<double>(hits) / static_cast<double>(total);
    return r;
  }

  // Tie correction: sum over tie groups of t^3 - t.
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double ties = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  const double nn = static_cast<double>(n);
  const double var = na * nb / 12.0 * ((nn + 1) - ties / (nn * (nn - 1)));
  if (var <= 0) {
    r.p_value = 1.0;
    return r;
  }
  const double z = std::max(0.0, observed - 0.5) / std::sqrt(var);
  r.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return r;
}

std::string_view to_string(SampleLabel label) {
  return label == SampleLabel::before_grounding ? "before_grounding" : "after_grounding";
}

std::size_t Histogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

double Histogram::median() const {
  const std::size_t n = total();
  if (n == 0) throw UsageError("histogram median of an empty histogram");
  const double half = static_cast<double>(n) / 2.0;
  double cum = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double c = static_cast<double>(counts[i]);
    if (c > 0 && cum + c >= half) return edges[i] + (edges[i + 1] - edges[i]) * (half - cum) / c;
    cum += c;
  }
  return edges.back();
}

namespace {

void check_sample(const PairDistanceSample& sample, std::size_t bins) {
  if (sample.distances.empty()) throw UsageError("emit_histogram: empty sample");
  if (bins == 0) throw UsageError("emit_histogram: bins must be at least 1");
  for (double d : sample.distances)
    if (!std::isfinite(d) || d < 0) throw UsageError("emit_histogram: distances must be finite and non-negative");
}

}  // namespace

Histogram emit_histogram(const PairDistanceSample& sample, std::size_t bins, double lo, double hi) {
  check_sample(sample, bins);
  if (!(hi >= lo)) throw UsageError("emit_histogram: empty range");
  Histogram h;
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) h.edges.push_back(i == bins ? hi : lo + width * static_cast<double>(i));
  h.counts.assign(bins, 0);
  for (double d : sample.distances) {
    std::size_t bin = 0;
    if (width > 0) {
      const double pos = std::floor((d - lo) / width);
      bin = pos <= 0 ? 0 : std::min(bins - 1, static_cast<std::size_t>(pos));
    }
    ++h.counts[bin];
  }
  return h;
}

Histogram emit_histogram(const PairDistanceSample& sample, std::size_t bins) {
  check_sample(sample, bins);
  const auto [lo, hi] = std::minmax_element(sample.distances.begin(), sample.distances.end());
  return emit_histogram(sample, bins, *lo, *hi);
}

double median(std::vector<double> values) {
  if (values.empty()) throw UsageError("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : (values[m - 1] + values[m]) / 2.0;
}

// ---- embedding files ------------------------------------------------------

EmbeddingPairs parse_embedding_file(std::string_view text, std::string_view source) {
  EmbeddingPairs out;
  std::vector<Vector> rows;
  bool header = false;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw DataError(std::string(source) + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;

    Vector values;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (true) {
      while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
      if (p == end) break;
      double v;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc() || !std::isfinite(v)) fail("not a finite number");
      values.push_back(v);
      p = next;
    }
    if (values.empty()) continue;
    if (!header) {
      if (values.size() != 1 || values[0] < 1 || values[0] != std::floor(values[0]))
        fail("header must be a single positive integer dimension");
      out.dimension = static_cast<std::size_t>(values[0]);
      header = true;
      continue;
    }
    if (values.size() != out.dimension)
      fail("expected " + std::to_string(out.dimension) + " values, found " + std::to_string(values.size()));
    rows.push_back(std::move(values));
  }
  if (!header) throw DataError(std::string(source) + ": missing dimension header");
  if (rows.size() % 2) throw DataError(std::string(source) + ": odd number of rows; expected code/message pairs");
  for (std::size_t i = 0; i < rows.size(); i += 2) {
    out.code.push_back(std::move(rows[i]));
    out.message.push_back(std::move(rows[i + 1]));
  }
  return out;
}

EmbeddingPairs read_embedding_file(const std::filesystem::path& path) {
  return parse_embedding_file(read_file(path), path.string());
}

std::string format_embedding_file(const EmbeddingPairs& pairs) {
  std::ostringstream os;
  os.precision(17);
  os << pairs.dimension << '\n';
  auto row = [&](const Vector& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
    os << '\n';
  };
  for (std::size_t i = 0; i < pairs.code.size(); ++i) {
    row(pairs.code[i]);
    row(pairs.message[i]);
  }
  return os.str();
}

// ---- grounding comparison -------------------------------------------------

namespace {

PairDistanceSample distances_of(const EmbeddingPairs& e, SampleLabel label) {
  if (e.code.empty()) throw UsageError(std::string(to_string(label)) + ": no vector pairs");
  std::vector<Vector> pooled = e.code;
  pooled.insert(pooled.end(), e.message.begin(), e.message.end());
  pooled = standardize(pooled);
  const std::size_t n = e.code.size();
  std::vector<Vector> code(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<Vector> msg(pooled.begin() + static_cast<std::ptrdiff_t>(n), pooled.end());
  return {label, pair_distances(code, msg)};
}

}  // namespace

GroundingAnalysis analyze_grounding(const EmbeddingPairs& before, const EmbeddingPairs& after, std::size_t bins,
                                    PValueMethod method) {
  GroundingAnalysis g;
  g.before = distances_of(before, SampleLabel::before_grounding);
  g.after = distances_of(after, SampleLabel::after_grounding);
  g.test = mann_whitney_u(g.before.distances, g.after.distances, method);
  double lo = g.before.distances.front(), hi = lo;
  for (const auto* s : {&g.before, &g.after})
    for (double d : s->distances) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  g.before_histogram = emit_histogram(g.before, bins, lo, hi);
  g.after_histogram = emit_histogram(g.after, bins, lo, hi);
  return g;
}

nlohmann::json GroundingAnalysis::to_json() const {
  return {{"u", test.u},
          {"u_other", test.u_other},
          {"p_value", test.p_value},
          {"method", test.exact ? "exact" : "normal"},
          {"n", {{"before", before.distances.size()}, {"after", after.distances.size()}}},
          {"medians", {{"before", median(before.distances)}, {"after", median(after.distances)}}},
          {"histogram_medians", {{"before", before_histogram.median()}, {"after", after_histogram.median()}}},
          {"bins", before_histogram.counts.size()}};
}

std::string GroundingAnalysis::histogram_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "label,bin,lower,upper,count\n";
  auto emit = [&](const Histogram& h, SampleLabel label) {
    for (std::size_t i = 0; i < h.counts.size(); ++i)
      os << to_string(label) << ',' << i << ',' << h.edges[i] << ',' << h.edges[i + 1] << ',' << h.counts[i] << '\n';
  };
  emit(before_histogram, SampleLabel::before_grounding);
  emit(after_histogram, SampleLabel::after_grounding);
  return os.str();
}

}  // namespace commitissue::analysis
