// AVX2 variant of the batch polynomial kernels. Compiled with -mavx2 in its
// own translation unit; callers reach it through the runtime dispatch in
// kernels.cpp. Keeps the same per-lane operation order as the scalar
// reference (multiplies and adds only, no FMA contraction) so results agree
// to rounding.

#include "saddle/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>

namespace saddle::kernels {

void eval_batch_avx2(const PackedPoly& p, const double* pts, std::size_t n, double* out) {
  const int d = p.dim;
  const std::size_t n4 = n - (n % 4);
  for (std::size_t j = 0; j < n; ++j) out[j] = 0.0;
  for (std::size_t t = 0; t < p.n_terms(); ++t) {
    const __m256d c = _mm256_set1_pd(p.coef[t]);
    const int* e = &p.exps[t * d];
    for (std::size_t j = 0; j < n4; j += 4) {
      __m256d m = c;
      for (int i = 0; i < d; ++i) {
        const __m256d x = _mm256_loadu_pd(&pts[i * n + j]);
        for (int q = 0; q < e[i]; ++q) m = _mm256_mul_pd(m, x);
      }
      __m256d acc = _mm256_loadu_pd(&out[j]);
      _mm256_storeu_pd(&out[j], _mm256_add_pd(acc, m));
    }
    for (std::size_t j = n4; j < n; ++j) {
      double m = p.coef[t];
      for (int i = 0; i < d; ++i) {
        const double x = pts[i * n + j];
        for (int q = 0; q < e[i]; ++q) m *= x;
      }
      out[j] += m;
    }
  }
}

}  // namespace saddle::kernels

#else

namespace saddle::kernels {

void eval_batch_avx2(const PackedPoly& p, const double* pts, std::size_t n, double* out) {
  eval_batch_scalar(p, pts, n, out);
}

}  // namespace saddle::kernels

#endif
