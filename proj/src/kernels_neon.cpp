#include <arm_neon.h>

#include "kernels_internal.hpp"

namespace commitissue::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double squared_distance_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vfmaq_f64(acc, d, d);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double sparse_dot_neon(const std::uint32_t* idx, const double* val, std::size_t nnz, const double* dense) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= nnz; k += 2) {
    const double g[2] = {dense[idx[k]], dense[idx[k + 1]]};
    acc = vfmaq_f64(acc, vld1q_f64(val + k), vld1q_f64(g));
  }
  double s = vaddvq_f64(acc);
  for (; k < nnz; ++k) s += val[k] * dense[idx[k]];
  return s;
}

void accumulate_neon(double* acc, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(acc + i, vaddq_f64(vld1q_f64(acc + i), vld1q_f64(x + i)));
  for (; i < n; ++i) acc[i] += x[i];
}

void accumulate_centered_squares_neon(double* acc, const double* x, const double* mean, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(x + i), vld1q_f64(mean + i));
    vst1q_f64(acc + i, vfmaq_f64(vld1q_f64(acc + i), d, d));
  }
  for (; i < n; ++i) {
    const double d = x[i] - mean[i];
    acc[i] += d * d;
  }
}

void standardize_neon(double* out, const double* x, const double* mean, const double* scale, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(x + i), vld1q_f64(mean + i));
    vst1q_f64(out + i, vmulq_f64(d, vld1q_f64(scale + i)));
  }
  for (; i < n; ++i) out[i] = (x[i] - mean[i]) * scale[i];
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable t{Isa::neon,      dot_neon,
                             squared_distance_neon, sparse_dot_neon,
                             accumulate_neon, accumulate_centered_squares_neon,
                             standardize_neon};
  return t;
}

}  // namespace commitissue::kernels
