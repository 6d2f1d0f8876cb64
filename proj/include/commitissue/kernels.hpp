#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

// Dense double-precision inner loops shared by retrieval and analysis.
// Each kernel has a scalar reference implementation and vectorized variants;
// the variant is chosen once at runtime from the CPU's capabilities and can
// be pinned with COMMITISSUE_SIMD=scalar|avx2|neon.

namespace commitissue::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa);

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // sum_k val[k] * dense[idx[k]]
  double (*sparse_dot)(const std::uint32_t* idx, const double* val, std::size_t nnz, const double* dense);
  // acc[i] += x[i]
  void (*accumulate)(double* acc, const double* x, std::size_t n);
  // acc[i] += (x[i] - mean[i])^2
  void (*accumulate_centered_squares)(double* acc, const double* x, const double* mean, std::size_t n);
  // out[i] = (x[i] - mean[i]) * scale[i]
  void (*standardize)(double* out, const double* x, const double* mean, const double* scale, std::size_t n);
};

bool available(Isa isa);

/// Table for a specific ISA. Throws UsageError when the ISA is not compiled in
/// or the CPU lacks it.
const KernelTable& table(Isa isa);

/// Table used by the convenience wrappers below.
const KernelTable& active();

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
double sparse_dot(std::span<const std::uint32_t> idx, std::span<const double> val, std::span<const double> dense);

}  // namespace commitissue::kernels
