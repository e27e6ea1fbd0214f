#pragma once

#include "hasd/core.hpp"
#include "hasd/geometry.hpp"
#include "hasd/objectives.hpp"
#include "hasd/random.hpp"
#include "hasd/trace.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <vector>

// Randomized probes for the norm, step, Hessian and objective properties.
// Each returns a tally whose violations are amounts beyond tolerance.

namespace hasd {

inline Vector random_normal(Rng& rng, Index d, double scale = 1.0) {
  Vector v(d);
  for (Index i = 0; i < d; ++i) v[i] = scale * rng.normal();
  return v;
}

template <SmoothObjective F>
Vector fd_gradient(const F& f, const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  Vector xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double hi = h * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + hi;
    const double fp = f.value(xp);
    xp[i] = x[i] - hi;
    const double fm = f.value(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * hi);
  }
  return g;
}

/// Gradient against central differences: ‖∇f − FD‖₂ ≤ 1e−5 (1 + ‖∇f‖₂).
template <SmoothObjective F>
InvariantTally probe_gradient(const F& f, Rng& rng, int probes, double spread = 1.0) {
  InvariantTally t;
  for (int k = 0; k < probes; ++k) {
    const Vector x = random_normal(rng, f.dim(), spread);
    const Vector g = f.gradient(x);
    t.record((g - fd_gradient(f, x)).norm() - 1e-5 * (1.0 + g.norm()));
  }
  return t;
}

template <SmoothObjective F>
InvariantTally probe_convexity(const F& f, Rng& rng, int triples, double spread = 1.0) {
  InvariantTally t;
  for (int k = 0; k < triples; ++k) {
    const Vector x = random_normal(rng, f.dim(), spread);
    const Vector y = random_normal(rng, f.dim(), spread);
    const double lam = rng.uniform();
    const double fx = f.value(x);
    const double fy = f.value(y);
    const double chord = lam * fx + (1.0 - lam) * fy;
    t.record(f.value(lam * x + (1.0 - lam) * y) - chord - tolerance(1e-12, std::abs(fx) + std::abs(fy)));
  }
  return t;
}

/// ‖∇f(y) − ∇f(x)‖_{p*} ≤ L‖y − x‖_p on random pairs at several radii.
template <SmoothObjective F>
InvariantTally probe_smoothness(const F& f, double L, const Geometry& geom, Rng& rng, int pairs,
                                double spread = 1.0) {
  InvariantTally t;
  const double radii[] = {1e-3, 1e-1, 1.0, 10.0};
  for (int k = 0; k < pairs; ++k) {
    const Vector x = random_normal(rng, f.dim(), spread);
    const Vector dir = random_normal(rng, f.dim());
    const Vector y = x + radii[k % 4] * dir / geom.norm(dir);
    const double lhs = geom.dual_norm(f.gradient(y) - f.gradient(x));
    const double rhs = L * geom.norm(y - x);
    t.record(lhs - rhs - tolerance(1e-9, rhs));
  }
  return t;
}

/// |⟨u, v⟩| ≤ ‖u‖_{p*}‖v‖_p
inline InvariantTally probe_holder(const Geometry& geom, Index d, Rng& rng, int samples) {
  InvariantTally t;
  for (int k = 0; k < samples; ++k) {
    const Vector u = random_normal(rng, d);
    const Vector v = random_normal(rng, d);
    const double rhs = geom.dual_norm(u) * geom.norm(v);
    t.record(std::abs(u.dot(v)) - rhs - tolerance(1e-13, rhs));
  }
  return t;
}

/// ‖x‖_{p*} ≥ ‖x‖₂ ≥ ‖x‖_p and ‖x‖_{p*} ≤ d^{1/2−1/p}‖x‖₂
inline InvariantTally probe_norm_order(const Geometry& geom, Index d, Rng& rng, int samples) {
  InvariantTally t;
  const double c = geom.max_dual_ratio(d);
  for (int k = 0; k < samples; ++k) {
    const Vector x = random_normal(rng, d);
    const double q = geom.dual_norm(x);
    const double two = lp_norm(x, 2.0);
    const double p = geom.norm(x);
    const double tol = tolerance(1e-13, q);
    t.record(std::max({two - q - tol, p - two - tol, q - c * two - tol}));
  }
  return t;
}

/// The closed-form step is no worse than `perturbations` random nearby points.
inline InvariantTally probe_step_optimality(const Geometry& geom, Index d, Rng& rng, int instances,
                                            int perturbations) {
  InvariantTally t;
  for (int k = 0; k < instances; ++k) {
    const Vector y = random_normal(rng, d);
    const Vector g = random_normal(rng, d);
    const double L = std::exp(rng.uniform(-2.0, 2.0));
    const Vector x = steepest_step(y, g, L, geom);
    const double best = subproblem_value(y, g, L, geom, x);
    const double radius = geom.norm(x - y);
    double worst = -kInf;
    for (int j = 0; j < perturbations; ++j) {
      const double r = radius * std::pow(10.0, rng.uniform(-4.0, 0.0));
      const Vector xp = x + r * random_normal(rng, d);
      worst = std::max(worst, best - subproblem_value(y, g, L, geom, xp));
    }
    t.record(worst - tolerance(1e-12, best));
  }
  return t;
}

/// Coordinatewise stationarity of the step for finite p:
/// g_i + 2L‖x−y‖_p^{2−p}|x_i−y_i|^{p−2}(x_i−y_i) = 0.
inline InvariantTally probe_step_foc(const Geometry& geom, Index d, Rng& rng, int instances) {
  InvariantTally t;
  if (geom.is_inf()) {
    ++t.skipped;
    return t;
  }
  const double p = geom.p();
  for (int k = 0; k < instances; ++k) {
    const Vector y = random_normal(rng, d);
    const Vector g = random_normal(rng, d);
    const double L = std::exp(rng.uniform(-2.0, 2.0));
    const Vector disp = steepest_step(y, g, L, geom) - y;
    const double n = geom.norm(disp);
    double worst = 0.0;
    for (Index i = 0; i < d; ++i) {
      if (g[i] == 0.0) continue;
      const double term = 2.0 * L * std::pow(n, 2.0 - p) * std::pow(std::abs(disp[i]), p - 2.0) * disp[i];
      worst = std::max(worst, std::abs(g[i] + term) - tolerance(1e-8, g[i]));
    }
    t.record(worst);
  }
  return t;
}

/// Smallest eigenvalue of Hessian − rank-one floor is ≥ −1e−10.
inline InvariantTally probe_hessian_psd(double p, Index d, Rng& rng, int samples) {
  InvariantTally t;
  for (int k = 0; k < samples; ++k) {
    const Vector z = random_normal(rng, d);
    const Matrix m = lp_sq_hessian(z, p) - lp_sq_hessian_rank_one_floor(z, p);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    t.record(-eig.eigenvalues().minCoeff() - 1e-10);
  }
  return t;
}

/// Some direction among s(z), z and random draws reaches ‖Mv‖_p/‖v‖_p ≥ 2/d^{(p−2)/2}.
inline InvariantTally probe_hessian_witness(double p, Index d, Rng& rng, int samples, int random_dirs = 16) {
  InvariantTally t;
  const double bound = 2.0 / std::pow(static_cast<double>(d), (p - 2.0) / 2.0);
  for (int k = 0; k < samples; ++k) {
    const Vector z = random_normal(rng, d);
    std::vector<Vector> cands{signed_power(z, p), z};
    for (int j = 0; j < random_dirs; ++j) cands.push_back(random_normal(rng, d));
    const double got = induced_norm_lower_bound(lp_sq_hessian(z, p), p, cands);
    t.record(bound - got - 1e-8);
  }
  return t;
}

}  // namespace hasd
