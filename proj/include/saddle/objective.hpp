#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <variant>

#include <nlohmann/json_fwd.hpp>

#include "saddle/poly.hpp"

namespace saddle {

/// Black-box objective: value callback, optional gradient callback.
/// Wherever a gradient (or Hessian) is required and no callback is given,
/// central finite differences with step h_fd are used.
struct BlackBox {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;  // may be empty
  double h_fd = 1e-5;
};

/// Objective f on R^d, either an exact polynomial or a black box.
class ObjectiveSpec {
 public:
  static ObjectiveSpec from_polynomial(Polynomial p);
  static ObjectiveSpec black_box(int dim, BlackBox bb);

  int dim() const { return dim_; }
  bool is_polynomial() const { return std::holds_alternative<Polynomial>(impl_); }
  const Polynomial& polynomial() const;

  double eval(const Eigen::VectorXd& w) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& w) const;  // symmetrized

  static ObjectiveSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;  // polynomial variant only

 private:
  ObjectiveSpec(int dim, std::variant<Polynomial, BlackBox> impl)
      : dim_(dim), impl_(std::move(impl)) {}
  int dim_;
  std::variant<Polynomial, BlackBox> impl_;
};

struct VanishingOpts {
  int k_max = 12;
  double tol = 1e-9;  // black-box zero threshold, relative to local scale
};

/// Order of vanishing: largest k <= k_max such that all partial derivatives
/// of f - f(w*) of order <= k-1 vanish at w*. Exact for polynomials;
/// directional-probe fits for black boxes. Throws OrderExceedsCap if no
/// nonvanishing term is found up to k_max.
int vanishing_order(const ObjectiveSpec& obj, const Eigen::VectorXd& w_star,
                    const VanishingOpts& opts = {});

/// Degree-k Taylor coefficient polynomial of f at w*:
/// f(w* + h) = f(w*) + P(h) + O(|h|^{k+1}).
std::pair<int, HomogeneousPoly> leading_term(const ObjectiveSpec& obj,
                                             const Eigen::VectorXd& w_star,
                                             const VanishingOpts& opts = {});

}  // namespace saddle
