#include "saddle/kernels.hpp"

#include "saddle/errors.hpp"

namespace saddle::kernels {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

namespace {
Backend g_backend = cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

Backend active_backend() { return g_backend; }

void set_backend(Backend b) {
  if (b == Backend::Avx2 && !cpu_has_avx2())
    throw DomainError("kernels: AVX2 backend requested but CPU lacks AVX2");
  g_backend = b;
}

std::string backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
  }
  return "?";
}

PackedPoly pack(const Polynomial& p) {
  PackedPoly pp;
  pp.dim = p.dim();
  for (const auto& [a, c] : p.terms()) {
    pp.coef.push_back(c);
    pp.exps.insert(pp.exps.end(), a.begin(), a.end());
  }
  return pp;
}

void eval_batch_scalar(const PackedPoly& p, const double* pts, std::size_t n, double* out) {
  const int d = p.dim;
  for (std::size_t j = 0; j < n; ++j) out[j] = 0.0;
  for (std::size_t t = 0; t < p.n_terms(); ++t) {
    const double c = p.coef[t];
    const int* e = &p.exps[t * d];
    for (std::size_t j = 0; j < n; ++j) {
      double m = c;
      for (int i = 0; i < d; ++i) {
        const double x = pts[i * n + j];
        for (int q = 0; q < e[i]; ++q) m *= x;
      }
      out[j] += m;
    }
  }
}

void eval_batch(const PackedPoly& p, const double* pts, std::size_t n, double* out) {
  if (g_backend == Backend::Avx2)
    eval_batch_avx2(p, pts, n, out);
  else
    eval_batch_scalar(p, pts, n, out);
}

Eigen::VectorXd eval_batch(const Polynomial& p, const Eigen::MatrixXd& pts) {
  if (pts.rows() != p.dim()) throw ShapeMismatch("kernels::eval_batch: point dimension mismatch");
  const std::size_t n = static_cast<std::size_t>(pts.cols());
  const int d = p.dim();
  // repack column-points into SoA
  std::vector<double> soa(static_cast<std::size_t>(d) * n);
  for (int i = 0; i < d; ++i)
    for (std::size_t j = 0; j < n; ++j) soa[i * n + j] = pts(i, static_cast<Eigen::Index>(j));
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  eval_batch(pack(p), soa.data(), n, out.data());
  return out;
}

}  // namespace saddle::kernels
