#pragma once

#include "hasd/core.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

namespace hasd {

/// ℓ_p norm for p in [1, ∞]. Entries are rescaled by the largest magnitude
/// before exponentiation so large p neither overflows nor underflows.
template <class Derived>
double lp_norm(const Eigen::MatrixBase<Derived>& x, double p) {
  if (x.size() == 0) return 0.0;
  const double m = x.cwiseAbs().maxCoeff();
  if (std::isinf(p)) return m;
  if (m == 0.0) return 0.0;
  if (p == 1.0) return x.cwiseAbs().sum();
  if (p == 2.0) return m * (x / m).norm();
  double acc = 0.0;
  for (Index i = 0; i < x.size(); ++i) acc += std::pow(std::abs(x[i]) / m, p);
  return m * std::pow(acc, 1.0 / p);
}

/// Hölder conjugate of p ∈ [1, ∞].
inline double dual_exponent(double p) {
  if (std::isinf(p)) return 1.0;
  if (p == 1.0) return kInf;
  return p / (p - 1.0);
}

/// The primal norm exponent p ∈ [2, ∞] together with its dual p*.
class Geometry {
 public:
  explicit Geometry(double p) : p_(p), dual_(0.0) {
    if (std::isnan(p) || p < 2.0) {
      throw std::domain_error("geometry: exponent p must lie in [2, inf], got " + std::to_string(p));
    }
    dual_ = dual_exponent(p);
  }

  static Geometry infinity() { return Geometry(kInf); }

  /// Accepts a decimal number or "inf"/"infinity".
  static Geometry parse(const std::string& text) {
    if (text == "inf" || text == "infinity" || text == "Inf") return infinity();
    std::size_t used = 0;
    double p = 0.0;
    try {
      p = std::stod(text, &used);
    } catch (const std::exception&) {
      throw std::domain_error("geometry: cannot parse exponent '" + text + "'");
    }
    if (used != text.size()) throw std::domain_error("geometry: cannot parse exponent '" + text + "'");
    return Geometry(p);
  }

  double p() const { return p_; }
  double dual() const { return dual_; }
  bool is_inf() const { return std::isinf(p_); }
  bool is_euclidean() const { return p_ == 2.0; }

  template <class Derived>
  double norm(const Eigen::MatrixBase<Derived>& x) const {
    return lp_norm(x, p_);
  }
  template <class Derived>
  double dual_norm(const Eigen::MatrixBase<Derived>& x) const {
    return lp_norm(x, dual_);
  }

  /// Largest possible ‖g‖_{p*}/‖g‖₂ in d dimensions, d^{1/2 - 1/p}.
  double max_dual_ratio(Index d) const {
    const double inv_p = is_inf() ? 0.0 : 1.0 / p_;
    return std::pow(static_cast<double>(d), 0.5 - inv_p);
  }

  std::string label() const { return is_inf() ? std::string("inf") : trimmed(p_); }

 private:
  static std::string trimmed(double v) {
    std::string s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

  double p_;
  double dual_;
};

/// Exact minimizer of x ↦ ⟨grad, x − y⟩ + L‖x − y‖_p².
///
/// The displacement has ℓ_p length ‖grad‖_{p*}/(2L) and points along
/// −sign(grad_i)|grad_i|^{1/(p−1)}. Zero gradient coordinates stay put. At
/// p = ∞ the direction degenerates to −sign(grad) with sign(0) = 0.
inline Vector steepest_step(const Vector& y, const Vector& grad, double L, const Geometry& geom) {
  require_dim(grad, y.size(), "steepest_step");
  if (!(L > 0.0)) throw std::domain_error("steepest_step: L must be positive");
  const double gmax = grad.size() == 0 ? 0.0 : grad.cwiseAbs().maxCoeff();
  if (gmax == 0.0) return y;

  if (geom.is_euclidean()) return y - grad / (2.0 * L);

  if (geom.is_inf()) {
    const double radius = grad.cwiseAbs().sum() / (2.0 * L);
    Vector out = y;
    for (Index i = 0; i < y.size(); ++i) {
      if (grad[i] > 0.0) out[i] -= radius;
      else if (grad[i] < 0.0) out[i] += radius;
    }
    return out;
  }

  const double p = geom.p();
  const double radius = geom.dual_norm(grad) / (2.0 * L);
  Vector dir(grad.size());
  for (Index i = 0; i < grad.size(); ++i) {
    const double mag = std::pow(std::abs(grad[i]) / gmax, 1.0 / (p - 1.0));
    dir[i] = grad[i] > 0.0 ? mag : (grad[i] < 0.0 ? -mag : 0.0);
  }
  return y - (radius / lp_norm(dir, p)) * dir;
}

/// ⟨grad, x − y⟩ + L‖x − y‖_p²
inline double subproblem_value(const Vector& y, const Vector& grad, double L, const Geometry& geom,
                               const Vector& x) {
  require_dim(grad, y.size(), "subproblem_value");
  require_dim(x, y.size(), "subproblem_value");
  const Vector disp = x - y;
  const double n = geom.norm(disp);
  return grad.dot(disp) + L * n * n;
}

/// s(z)_i = |z_i|^{p−2} z_i
inline Vector signed_power(const Vector& z, double p) {
  Vector s(z.size());
  for (Index i = 0; i < z.size(); ++i) s[i] = std::pow(std::abs(z[i]), p - 2.0) * z[i];
  return s;
}

namespace detail {
inline void check_hessian_args(const Vector& z, double p) {
  if (std::isinf(p) || std::isnan(p) || p < 2.0) {
    throw std::domain_error("lp_sq_hessian: p must be finite and >= 2");
  }
  if (z.size() == 0 || z.cwiseAbs().maxCoeff() == 0.0) {
    throw std::domain_error("lp_sq_hessian: undefined at z = 0");
  }
}
}  // namespace detail

/// Hessian of z ↦ ‖z‖_p² for finite p ≥ 2 and z ≠ 0:
/// 2(p−1)‖z‖^{2−p} Diag(|z_i|^{p−2}) + 2(2−p)‖z‖^{2(1−p)} s(z)s(z)ᵀ.
/// The map is homogeneous of degree zero, so it is evaluated at z/‖z‖_p.
inline Matrix lp_sq_hessian(const Vector& z, double p) {
  detail::check_hessian_args(z, p);
  const Index d = z.size();
  if (p == 2.0) return 2.0 * Matrix::Identity(d, d);
  const Vector u = z / lp_norm(z, p);
  const Vector s = signed_power(u, p);
  Matrix h = 2.0 * (2.0 - p) * (s * s.transpose());
  for (Index i = 0; i < d; ++i) h(i, i) += 2.0 * (p - 1.0) * std::pow(std::abs(u[i]), p - 2.0);
  return h;
}

/// The rank-one term 2‖z‖^{2(1−p)} s(z)s(z)ᵀ that lower-bounds the
/// Hessian of ‖z‖_p² in the Loewner order.
inline Matrix lp_sq_hessian_rank_one_floor(const Vector& z, double p) {
  detail::check_hessian_args(z, p);
  const Vector u = z / lp_norm(z, p);
  const Vector s = signed_power(u, p);
  return 2.0 * (s * s.transpose());
}

/// max_v ‖Mv‖_p / ‖v‖_p over the supplied candidate directions; a lower
/// bound on the induced p-norm of M.
inline double induced_norm_lower_bound(const Matrix& m, double p, std::span<const Vector> candidates) {
  double best = 0.0;
  for (const Vector& v : candidates) {
    const double denom = lp_norm(v, p);
    if (denom == 0.0) continue;
    best = std::max(best, lp_norm(m * v, p) / denom);
  }
  return best;
}

}  // namespace hasd
