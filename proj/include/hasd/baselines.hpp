#pragma once

#include "hasd/core.hpp"
#include "hasd/geometry.hpp"
#include "hasd/objectives.hpp"
#include "hasd/trace.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace hasd {

enum class Method { HASD, GD, AGD, LC, SDP };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::HASD: return "HASD";
    case Method::GD: return "GD";
    case Method::AGD: return "AGD";
    case Method::LC: return "LC";
    case Method::SDP: return "SD_P";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "HASD" || s == "hasd") return Method::HASD;
  if (s == "GD" || s == "gd") return Method::GD;
  if (s == "AGD" || s == "agd") return Method::AGD;
  if (s == "LC" || s == "lc") return Method::LC;
  if (s == "SD_P" || s == "sdp" || s == "SDP") return Method::SDP;
  throw std::invalid_argument("unknown method '" + s + "'");
}

struct BaselineConfig {
  Method method = Method::GD;
  double stepsize = 1e-2;
  Geometry geom = Geometry::infinity();
  int iters = 100;
  std::optional<double> momentum;  // AGD only: fixed β in place of (t−1)/(t+2)

  void validate() const {
    if (method == Method::HASD) throw std::invalid_argument("BaselineConfig: HASD is not a baseline");
    if (!(stepsize > 0.0) || !std::isfinite(stepsize)) {
      throw std::invalid_argument("BaselineConfig: stepsize must be positive");
    }
    if (iters < 0) throw std::invalid_argument("BaselineConfig: iters must be >= 0");
  }
};

namespace detail {

template <SmoothObjective F>
class BaselineRecorder {
 public:
  BaselineRecorder(const F& f, const BaselineConfig& cfg) : f_(f), cfg_(cfg), ref_(reference_optimum(f)) {
    report_.method = to_string(cfg.method);
    report_.stepsize = cfg.stepsize;
  }

  /// Logs the output iterate; returns false once f stops being finite.
  bool record(int iter, const Vector& x, const Vector& g) {
    IterationTrace row;
    row.iter = iter;
    row.f = f_.value(x);
    if (ref_) row.gap = row.f - ref_->f;
    row.grad_l2 = lp_norm(g, 2.0);
    row.grad_dual = cfg_.geom.dual_norm(g);
    report_.trace.push_back(row);
    last_ = x;
    if (!std::isfinite(row.f) || !std::isfinite(row.grad_dual)) {
      report_.diverged = true;
      return false;
    }
    return true;
  }

  RunReport finish(long oracle_calls) {
    const IterationTrace& last = report_.trace.back();
    report_.x_final = last_;
    report_.f_final = last.f;
    report_.gap_final = last.gap;
    report_.iterations = last.iter;
    report_.oracle_calls = oracle_calls;
    report_.value_calls = static_cast<long>(report_.trace.size());
    InvariantTally finite;
    for (const IterationTrace& r : report_.trace) finite.record(std::isfinite(r.f) ? 0.0 : 1.0);
    report_.invariants["finite_values"] = finite;
    return std::move(report_);
  }

  void set_start(const Vector& x0) {
    if (ref_) report_.initial_distance = (x0 - ref_->x).norm();
  }

 private:
  const F& f_;
  const BaselineConfig& cfg_;
  std::optional<ReferenceOptimum> ref_;
  RunReport report_;
  Vector last_;
};

}  // namespace detail

/// x_{t+1} = x_t − α∇f(x_t)
template <SmoothObjective F>
RunReport gd_run(const F& f, const Vector& x0, const BaselineConfig& cfg) {
  cfg.validate();
  require_dim(x0, f.dim(), "gd_run");
  detail::BaselineRecorder<F> rec(f, cfg);
  rec.set_start(x0);
  Vector x = x0;
  Vector g = f.gradient(x);
  long calls = 1;
  if (!rec.record(0, x, g)) return rec.finish(calls);
  for (int t = 1; t <= cfg.iters; ++t) {
    x -= cfg.stepsize * g;
    g = f.gradient(x);
    ++calls;
    if (!rec.record(t, x, g)) break;
  }
  return rec.finish(calls);
}

/// y_t = x_{t−1} − α∇f(x_{t−1}),  x_t = y_t + β_t(y_t − y_{t−1}),
/// β_t = (t−1)/(t+2) unless a fixed momentum is given. The logged iterate is y_t.
template <SmoothObjective F>
RunReport agd_run(const F& f, const Vector& x0, const BaselineConfig& cfg) {
  cfg.validate();
  require_dim(x0, f.dim(), "agd_run");
  detail::BaselineRecorder<F> rec(f, cfg);
  rec.set_start(x0);
  Vector x = x0;
  Vector y_prev = x0;
  Vector g = f.gradient(x);
  long calls = 1;
  if (!rec.record(0, x0, g)) return rec.finish(calls);
  for (int t = 1; t <= cfg.iters; ++t) {
    const Vector y = x - cfg.stepsize * g;
    const double beta = cfg.momentum.value_or((t - 1.0) / (t + 2.0));
    x = y + beta * (y - y_prev);
    y_prev = y;
    g = f.gradient(x);
    ++calls;
    if (!rec.record(t, y, f.gradient(y))) break;
  }
  return rec.finish(calls);
}

/// Linear coupling of an ℓ_p steepest step and a Euclidean mirror step:
///   x_{t+1} = β_t z_t + (1−β_t) y_t,            β_t = 2/(t+2)
///   y_{t+1} = argmin ⟨∇f(x_{t+1}), y − x_{t+1}⟩ + (1/2α)‖y − x_{t+1}‖_p²
///   z_{t+1} = z_t − γ_t ∇f(x_{t+1}),            γ_t = (t+1)α/2
/// The logged iterate is y_t.
template <SmoothObjective F>
RunReport lc_run(const F& f, const Vector& x0, const BaselineConfig& cfg) {
  cfg.validate();
  require_dim(x0, f.dim(), "lc_run");
  detail::BaselineRecorder<F> rec(f, cfg);
  rec.set_start(x0);
  Vector y = x0;
  Vector z = x0;
  long calls = 0;
  if (!rec.record(0, x0, f.gradient(x0))) return rec.finish(calls);
  const double step_L = 1.0 / (2.0 * cfg.stepsize);
  for (int t = 0; t < cfg.iters; ++t) {
    const double beta = 2.0 / (t + 2.0);
    const double gamma = (t + 1.0) * cfg.stepsize / 2.0;
    const Vector x = beta * z + (1.0 - beta) * y;
    const Vector g = f.gradient(x);
    ++calls;
    y = steepest_step(x, g, step_L, cfg.geom);
    z -= gamma * g;
    if (!rec.record(t + 1, y, f.gradient(y))) break;
  }
  return rec.finish(calls);
}

/// x_{t+1} = argmin ⟨∇f(x_t), x − x_t⟩ + (1/2α)‖x − x_t‖_p²
template <SmoothObjective F>
RunReport sdp_run(const F& f, const Vector& x0, const BaselineConfig& cfg) {
  cfg.validate();
  require_dim(x0, f.dim(), "sdp_run");
  detail::BaselineRecorder<F> rec(f, cfg);
  rec.set_start(x0);
  Vector x = x0;
  Vector g = f.gradient(x);
  long calls = 1;
  if (!rec.record(0, x, g)) return rec.finish(calls);
  const double step_L = 1.0 / (2.0 * cfg.stepsize);
  for (int t = 1; t <= cfg.iters; ++t) {
    x = steepest_step(x, g, step_L, cfg.geom);
    g = f.gradient(x);
    ++calls;
    if (!rec.record(t, x, g)) break;
  }
  return rec.finish(calls);
}

template <SmoothObjective F>
RunReport run_baseline(const F& f, const Vector& x0, const BaselineConfig& cfg) {
  switch (cfg.method) {
    case Method::GD: return gd_run(f, x0, cfg);
    case Method::AGD: return agd_run(f, x0, cfg);
    case Method::LC: return lc_run(f, x0, cfg);
    case Method::SDP: return sdp_run(f, x0, cfg);
    case Method::HASD: break;
  }
  throw std::invalid_argument("run_baseline: HASD is not a baseline");
}

}  // namespace hasd
