#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <vector>

#include "saddle/poly.hpp"

namespace saddle::kernels {

// Batch evaluation of sparse polynomials over many points. The inner loops
// are data-parallel over points; an AVX2 variant is selected at runtime when
// the CPU supports it. Point layout is structure-of-arrays:
// pts[i * n + j] = coordinate i of point j.

enum class Backend { Scalar, Avx2 };

Backend active_backend();
void set_backend(Backend b);  // throws DomainError if unsupported on this CPU
std::string backend_name(Backend b);

/// Polynomial flattened for kernel consumption.
struct PackedPoly {
  int dim = 0;
  std::vector<double> coef;  // one per term
  std::vector<int> exps;     // term-major, dim entries per term
  std::size_t n_terms() const { return coef.size(); }
};

PackedPoly pack(const Polynomial& p);

/// out[j] = P(point j), j = 0..n-1.
void eval_batch(const PackedPoly& p, const double* pts_soa, std::size_t n, double* out);

/// Convenience wrapper: points are columns of a d x n matrix.
Eigen::VectorXd eval_batch(const Polynomial& p, const Eigen::MatrixXd& pts);

// Reference implementations, exposed for equivalence tests.
void eval_batch_scalar(const PackedPoly& p, const double* pts_soa, std::size_t n, double* out);
void eval_batch_avx2(const PackedPoly& p, const double* pts_soa, std::size_t n, double* out);
bool cpu_has_avx2();

}  // namespace saddle::kernels
