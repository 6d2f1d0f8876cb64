#include <cstdlib>
#include <string>

#include "commitissue/error.hpp"
#include "kernels_internal.hpp"

namespace commitissue::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double sparse_dot_scalar(const std::uint32_t* idx, const double* val, std::size_t nnz, const double* dense) {
  double s = 0.0;
  for (std::size_t k = 0; k < nnz; ++k) s += val[k] * dense[idx[k]];
  return s;
}

void accumulate_scalar(double* acc, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += x[i];
}

void accumulate_centered_squares_scalar(double* acc, const double* x, const double* mean, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - mean[i];
    acc[i] += d * d;
  }
}

void standardize_scalar(double* out, const double* x, const double* mean, const double* scale, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = (x[i] - mean[i]) * scale[i];
}

bool cpu_has_avx2() {
#if defined(COMMITISSUE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select() {
  if (const char* forced = std::getenv("COMMITISSUE_SIMD"); forced != nullptr && *forced != '\0') {
    const std::string want(forced);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (want == to_string(isa) && available(isa)) return table(isa);
    }
  }
  if (available(Isa::avx2)) return table(Isa::avx2);
  if (available(Isa::neon)) return table(Isa::neon);
  return scalar_table();
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{Isa::scalar,     dot_scalar,
                             squared_distance_scalar, sparse_dot_scalar,
                             accumulate_scalar, accumulate_centered_squares_scalar,
                             standardize_scalar};
  return t;
}

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "scalar";
}

bool available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return cpu_has_avx2();
    case Isa::neon:
#if defined(COMMITISSUE_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!available(isa)) throw UsageError("SIMD variant " + std::string(to_string(isa)) + " is not available");
  switch (isa) {
#if defined(COMMITISSUE_HAVE_AVX2)
    case Isa::avx2:
      return avx2_table();
#endif
#if defined(COMMITISSUE_HAVE_NEON)
    case Isa::neon:
      return neon_table();
#endif
    default:
      return scalar_table();
  }
}

const KernelTable& active() {
  static const KernelTable& t = select();
  return t;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw UsageError("dot: dimension mismatch");
  return active().dot(a.data(), b.data(), a.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw UsageError("squared_distance: dimension mismatch");
  return active().squared_distance(a.data(), b.data(), a.size());
}

double sparse_dot(std::span<const std::uint32_t> idx, std::span<const double> val, std::span<const double> dense) {
  if (idx.size() != val.size()) throw UsageError("sparse_dot: index/value length mismatch");
  return active().sparse_dot(idx.data(), val.data(), idx.size(), dense.data());
}

}  // namespace commitissue::kernels
