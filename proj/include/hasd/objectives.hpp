#pragma once

#include "hasd/core.hpp"
#include "hasd/geometry.hpp"
#include "hasd/random.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>

namespace hasd {

/// First-order oracle bundle. Objectives may additionally expose
/// `reference_optimum()` and `analytic_smoothness(const Geometry&)`.
template <class F>
concept SmoothObjective = requires(const F& f, const Vector& x) {
  { f.dim() } -> std::convertible_to<Index>;
  { f.value(x) } -> std::convertible_to<double>;
  { f.gradient(x) } -> std::convertible_to<Vector>;
};

template <SmoothObjective F>
std::optional<ReferenceOptimum> reference_optimum(const F& f) {
  if constexpr (requires { { f.reference_optimum() } -> std::convertible_to<std::optional<ReferenceOptimum>>; }) {
    return f.reference_optimum();
  } else {
    return std::nullopt;
  }
}

template <SmoothObjective F>
std::optional<double> analytic_smoothness(const F& f, const Geometry& geom) {
  if constexpr (requires { { f.analytic_smoothness(geom) } -> std::convertible_to<std::optional<double>>; }) {
    return f.analytic_smoothness(geom);
  } else {
    return std::nullopt;
  }
}

/// Rescales a smoothness constant between ℓ_q and ℓ_p geometries. Moving to
/// a larger exponent costs d^{2/q − 2/p}; moving to a smaller one is free.
inline double convert_smoothness(double L, const Geometry& from, const Geometry& to, Index d) {
  if (to.p() <= from.p()) return L;
  const double inv_from = from.is_inf() ? 0.0 : 1.0 / from.p();
  const double inv_to = to.is_inf() ? 0.0 : 1.0 / to.p();
  return std::pow(static_cast<double>(d), 2.0 * inv_from - 2.0 * inv_to) * L;
}

/// f(x) = ½ (x − c)ᵀ Q (x − c) with Q symmetric positive semidefinite.
class Quadratic {
 public:
  Quadratic(Matrix q, Vector center) : q_(std::move(q)), c_(std::move(center)) {
    if (q_.rows() != q_.cols() || q_.rows() != c_.size()) {
      throw DimensionError("Quadratic: Q must be square and match the center");
    }
    if (!q_.isApprox(q_.transpose(), 1e-14)) throw std::invalid_argument("Quadratic: Q must be symmetric");
    diagonal_ = q_.isDiagonal(0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(q_, Eigen::EigenvaluesOnly);
    lambda_min_ = eig.eigenvalues().minCoeff();
    lambda_max_ = eig.eigenvalues().maxCoeff();
    if (lambda_min_ < -1e-12 * std::max(1.0, lambda_max_)) {
      throw std::invalid_argument("Quadratic: Q must be positive semidefinite");
    }
  }

  static Quadratic diagonal(const Vector& q, Vector center) {
    return Quadratic(Matrix(q.asDiagonal()), std::move(center));
  }

  /// ½‖x‖₂²
  static Quadratic isotropic(Index d) { return diagonal(Vector::Ones(d), Vector::Zero(d)); }

  Index dim() const { return c_.size(); }

  double value(const Vector& x) const {
    require_dim(x, dim(), "Quadratic::value");
    const Vector r = x - c_;
    return 0.5 * r.dot(q_ * r);
  }

  Vector gradient(const Vector& x) const {
    require_dim(x, dim(), "Quadratic::gradient");
    return q_ * (x - c_);
  }

  std::optional<ReferenceOptimum> reference_optimum() const { return ReferenceOptimum{c_, 0.0}; }

  /// Exact for diagonal Q (Hölder with exponent p/(p−2)); otherwise the
  /// Euclidean constant converted to ℓ_p.
  std::optional<double> analytic_smoothness(const Geometry& geom) const {
    if (geom.is_euclidean()) return lambda_max_;
    if (diagonal_) {
      const Vector q = q_.diagonal();
      if (geom.is_inf()) return q.sum();
      return lp_norm(q, geom.p() / (geom.p() - 2.0));
    }
    double bound = convert_smoothness(lambda_max_, Geometry(2.0), geom, dim());
    if (geom.is_inf()) bound = std::min(bound, q_.cwiseAbs().sum());
    return bound;
  }

  double strong_convexity() const { return std::max(0.0, lambda_min_); }
  const Matrix& hessian() const { return q_; }
  const Vector& center() const { return c_; }

 private:
  Matrix q_;
  Vector c_;
  bool diagonal_ = false;
  double lambda_min_ = 0.0;
  double lambda_max_ = 0.0;
};

/// α log Σ_i (e^{x_i/α} + e^{−x_i/α}), a smooth surrogate for α log(2d) + ‖x‖_∞.
class SymmetricSoftmax {
 public:
  SymmetricSoftmax(double alpha, Index d) : alpha_(alpha), d_(d) {
    if (!(alpha > 0.0)) throw std::invalid_argument("SymmetricSoftmax: alpha must be positive");
    if (d < 1) throw std::invalid_argument("SymmetricSoftmax: dimension must be positive");
  }

  Index dim() const { return d_; }
  double alpha() const { return alpha_; }

  double value(const Vector& x) const {
    require_dim(x, d_, "SymmetricSoftmax::value");
    const double m = x.cwiseAbs().maxCoeff() / alpha_;
    double z = 0.0;
    for (Index i = 0; i < d_; ++i) z += std::exp(x[i] / alpha_ - m) + std::exp(-x[i] / alpha_ - m);
    return alpha_ * (m + std::log(z));
  }

  Vector gradient(const Vector& x) const {
    require_dim(x, d_, "SymmetricSoftmax::gradient");
    const double m = x.cwiseAbs().maxCoeff() / alpha_;
    Vector g(d_);
    double z = 0.0;
    for (Index i = 0; i < d_; ++i) {
      const double up = std::exp(x[i] / alpha_ - m);
      const double down = std::exp(-x[i] / alpha_ - m);
      g[i] = up - down;
      z += up + down;
    }
    return g / z;
  }

  std::optional<ReferenceOptimum> reference_optimum() const {
    return ReferenceOptimum{Vector::Zero(d_), alpha_ * std::log(2.0 * static_cast<double>(d_))};
  }

  /// Curvature along u is at most ‖u‖_∞²/α, and ‖u‖_∞ ≤ ‖u‖_p.
  std::optional<double> analytic_smoothness(const Geometry&) const { return 1.0 / alpha_; }

 private:
  double alpha_;
  Index d_;
};

/// LogSumExp(Ax − b) + (μ/2)‖x‖₂²
class LogSumExpAffine {
 public:
  LogSumExpAffine(Matrix a, Vector b, double mu) : a_(std::move(a)), b_(std::move(b)), mu_(mu) {
    if (a_.rows() != b_.size()) throw DimensionError("LogSumExpAffine: rows of A must match b");
    if (a_.rows() < 1 || a_.cols() < 1) throw std::invalid_argument("LogSumExpAffine: empty A");
    if (!(mu >= 0.0)) throw std::invalid_argument("LogSumExpAffine: mu must be nonnegative");
  }

  Index dim() const { return a_.cols(); }
  Index rows() const { return a_.rows(); }
  const Matrix& a() const { return a_; }
  const Vector& b() const { return b_; }
  double mu() const { return mu_; }

  double value(const Vector& x) const {
    require_dim(x, dim(), "LogSumExpAffine::value");
    const Vector v = a_ * x - b_;
    const double m = v.maxCoeff();
    return m + std::log((v.array() - m).exp().sum()) + 0.5 * mu_ * x.squaredNorm();
  }

  Vector gradient(const Vector& x) const {
    require_dim(x, dim(), "LogSumExpAffine::gradient");
    return a_.transpose() * softmax(x) + mu_ * x;
  }

  Matrix hessian(const Vector& x) const {
    const Vector s = softmax(x);
    const Vector as = a_.transpose() * s;
    Matrix h = a_.transpose() * s.asDiagonal() * a_ - as * as.transpose();
    h.diagonal().array() += mu_;
    return h;
  }

  /// Curvature along u is Var_s(Au) + μ‖u‖₂² ≤ ¼ max_{i,j}‖A_i − A_j‖_{p*}²‖u‖_p²
  /// + μ d^{1−2/p}‖u‖_p² (Popoviciu's variance inequality, then Hölder).
  std::optional<double> analytic_smoothness(const Geometry& geom) const {
    double spread = 0.0;
    for (Index i = 0; i < a_.rows(); ++i) {
      for (Index j = i + 1; j < a_.rows(); ++j) {
        spread = std::max(spread, geom.dual_norm(a_.row(i) - a_.row(j)));
      }
    }
    return 0.25 * spread * spread + mu_ * geom.max_dual_ratio(dim()) * geom.max_dual_ratio(dim());
  }

  std::optional<ReferenceOptimum> reference_optimum() const { return reference_; }
  void set_reference_optimum(std::optional<ReferenceOptimum> ref) { reference_ = std::move(ref); }

  Vector softmax(const Vector& x) const {
    const Vector v = a_ * x - b_;
    const Vector e = (v.array() - v.maxCoeff()).exp().matrix();
    return e / e.sum();
  }

 private:
  Matrix a_;
  Vector b_;
  double mu_;
  std::optional<ReferenceOptimum> reference_;
};

/// A_ij ~ Bernoulli(0.8) on {0, 1}, b_i ~ N(0, 1); A is drawn row-major
/// before b, so instances are reproducible from (n, d, seed).
inline LogSumExpAffine make_logsumexp_instance(Index n, Index d, double mu, std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("make_logsumexp_instance: n and d must be >= 1");
  Rng rng(seed);
  Matrix a(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = rng.bernoulli(0.8) ? 1.0 : 0.0;
  Vector b(n);
  for (Index i = 0; i < n; ++i) b[i] = rng.normal();
  return LogSumExpAffine(std::move(a), std::move(b), mu);
}

struct NewtonOptions {
  double grad_tol = 1e-10;
  int max_iters = 2000;
};

/// Damped Newton with Armijo backtracking. Stops at ‖∇f‖₂ ≤ grad_tol or
/// once the Newton decrement puts f within rounding of f*. Returns nullopt
/// otherwise (e.g. μ = 0, where f is unbounded below).
inline std::optional<ReferenceOptimum> solve_reference(const LogSumExpAffine& f, const NewtonOptions& opts = {}) {
  Vector x = Vector::Zero(f.dim());
  double fx = f.value(x);
  for (int it = 0; it < opts.max_iters; ++it) {
    const Vector g = f.gradient(x);
    if (g.norm() <= opts.grad_tol) return ReferenceOptimum{x, fx};
    Matrix h = f.hessian(x);
    h.diagonal().array() += 1e-14 * (1.0 + h.diagonal().cwiseAbs().maxCoeff());
    Eigen::LDLT<Matrix> ldlt(h);
    const Vector step = -ldlt.solve(g);
    const double slope = g.dot(step);
    if (!(slope < 0.0)) return std::nullopt;
    // half the squared Newton decrement estimates f − f*; below rounding in f
    // the value is as good as double precision allows
    if (-0.5 * slope <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(fx))) {
      return ReferenceOptimum{x, fx};
    }
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vector trial = x + t * step;
      const double ft = f.value(trial);
      // second clause: near the optimum the decrease is below rounding in f
      if (ft <= fx + 1e-4 * t * slope || (t == 1.0 && ft <= fx + 1e-13 * (1.0 + std::abs(fx)))) {
        x = trial;
        fx = ft;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  const Vector g = f.gradient(x);
  if (g.norm() <= opts.grad_tol) return ReferenceOptimum{x, fx};
  return std::nullopt;
}

/// Ad-hoc objective from callables; handy for tests and small experiments.
class FunctionObjective {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;

  FunctionObjective(Index d, ValueFn value, GradientFn gradient)
      : d_(d), value_(std::move(value)), gradient_(std::move(gradient)) {}

  Index dim() const { return d_; }
  double value(const Vector& x) const {
    require_dim(x, d_, "FunctionObjective::value");
    return value_(x);
  }
  Vector gradient(const Vector& x) const {
    require_dim(x, d_, "FunctionObjective::gradient");
    return gradient_(x);
  }

  FunctionObjective& with_reference(ReferenceOptimum ref) {
    reference_ = std::move(ref);
    return *this;
  }
  /// Declares L-smoothness with respect to `geom`; other exponents are converted.
  FunctionObjective& with_smoothness(double L, const Geometry& geom) {
    smoothness_ = std::pair{L, geom};
    return *this;
  }

  std::optional<ReferenceOptimum> reference_optimum() const { return reference_; }
  std::optional<double> analytic_smoothness(const Geometry& geom) const {
    if (!smoothness_) return std::nullopt;
    return convert_smoothness(smoothness_->first, smoothness_->second, geom, d_);
  }

 private:
  Index d_;
  ValueFn value_;
  GradientFn gradient_;
  std::optional<ReferenceOptimum> reference_;
  std::optional<std::pair<double, Geometry>> smoothness_;
};

/// Closed set of objectives the command-line harness can build at run time.
class AnyObjective {
 public:
  using Variant = std::variant<Quadratic, SymmetricSoftmax, LogSumExpAffine>;

  template <class T>
    requires std::constructible_from<Variant, T>
  AnyObjective(T obj) : obj_(std::move(obj)) {}

  Index dim() const {
    return std::visit([](const auto& o) { return o.dim(); }, obj_);
  }
  double value(const Vector& x) const {
    return std::visit([&](const auto& o) { return o.value(x); }, obj_);
  }
  Vector gradient(const Vector& x) const {
    return std::visit([&](const auto& o) -> Vector { return o.gradient(x); }, obj_);
  }
  /// A stored override wins over the wrapped objective's own reference.
  std::optional<ReferenceOptimum> reference_optimum() const {
    if (reference_) return reference_;
    return std::visit([](const auto& o) { return o.reference_optimum(); }, obj_);
  }
  void set_reference_optimum(std::optional<ReferenceOptimum> ref) { reference_ = std::move(ref); }
  std::optional<double> analytic_smoothness(const Geometry& geom) const {
    return std::visit([&](const auto& o) { return o.analytic_smoothness(geom); }, obj_);
  }

  const Variant& variant() const { return obj_; }
  Variant& variant() { return obj_; }

 private:
  Variant obj_;
  std::optional<ReferenceOptimum> reference_;
};

struct SmoothnessEstimateOptions {
  int pairs = 2000;
  double safety = 1.5;
  double spread = 1.0;
  std::uint64_t seed = 7;
};

/// max ‖∇f(y) − ∇f(x)‖_{p*}/‖y − x‖_p over sampled pairs, times a safety
/// factor. Directions mix Gaussian and random-sign vectors at several radii.
template <SmoothObjective F>
double estimate_smoothness(const F& f, const Geometry& geom, const SmoothnessEstimateOptions& opts = {}) {
  Rng rng(opts.seed);
  const Index d = f.dim();
  const double radii[] = {1e-3, 1e-1, 1.0};
  double best = 0.0;
  for (int k = 0; k < opts.pairs; ++k) {
    Vector x(d), dir(d);
    for (Index i = 0; i < d; ++i) x[i] = opts.spread * rng.normal();
    const bool signs = (k % 2) == 1;
    for (Index i = 0; i < d; ++i) dir[i] = signs ? rng.sign() : rng.normal();
    const double r = radii[k % 3];
    const Vector y = x + r * dir / geom.norm(dir);
    const double num = geom.dual_norm(f.gradient(y) - f.gradient(x));
    const double den = geom.norm(y - x);
    if (den > 0.0 && std::isfinite(num)) best = std::max(best, num / den);
  }
  if (!(best > 0.0) || !std::isfinite(best)) {
    throw SmoothnessUnavailable("estimate_smoothness: no finite positive gradient-difference ratio observed");
  }
  return opts.safety * best;
}

/// Analytic constant when the objective declares one, otherwise the
/// empirical estimate.
template <SmoothObjective F>
double smoothness_bound(const F& f, const Geometry& geom, const SmoothnessEstimateOptions& opts = {}) {
  if (auto L = analytic_smoothness(f, geom)) return *L;
  return estimate_smoothness(f, geom, opts);
}

}  // namespace hasd
