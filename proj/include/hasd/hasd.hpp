#pragma once

#include "hasd/core.hpp"
#include "hasd/geometry.hpp"
#include "hasd/objectives.hpp"
#include "hasd/trace.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace hasd {

struct HasdConfig {
  double L = 1.0;
  Geometry geom = Geometry::infinity();
  double eps = 1e-9;  // search accuracy; also the gap exit when enabled
  int max_search_calls = 200;
  int max_iters = 100;
  double grad_threshold = 1e-12;
  double step_scale = 1.0;  // steepest step uses L / step_scale; coupling keeps L
  bool gap_exit = false;    // stop the search once f(x_θ) − f* ≤ eps (needs a reference optimum)

  void validate() const {
    if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("HasdConfig: L must be positive and finite");
    if (!(eps > 0.0)) throw std::invalid_argument("HasdConfig: eps must be positive");
    if (max_search_calls < 1) throw std::invalid_argument("HasdConfig: max_search_calls must be >= 1");
    if (max_iters < 0) throw std::invalid_argument("HasdConfig: max_iters must be >= 0");
    if (!(step_scale > 0.0) || !std::isfinite(step_scale)) {
      throw std::invalid_argument("HasdConfig: step_scale must be positive");
    }
    if (!(grad_threshold >= 0.0)) throw std::invalid_argument("HasdConfig: grad_threshold must be >= 0");
  }
  double step_L() const { return L / step_scale; }
};

/// ψ_t(x) = ½‖x − x₀‖₂² + ⟨u, x⟩ + c is kept as (x₀, u, c); its minimizer is
/// v_t = x₀ − u.
struct HasdState {
  int t = 0;
  double A = 0.0;
  double B = 0.0;
  Vector x;
  Vector x0;
  Vector grad_accum;
  double psi_linear_const = 0.0;
  double G_sum = 0.0;
  bool converged = false;

  static HasdState start(const Vector& x0) {
    HasdState s;
    s.x = x0;
    s.x0 = x0;
    s.grad_accum = Vector::Zero(x0.size());
    return s;
  }

  Vector v() const { return x0 - grad_accum; }
  double psi(const Vector& z) const {
    return 0.5 * (z - x0).squaredNorm() + grad_accum.dot(z) + psi_linear_const;
  }
  double psi_at_v() const { return grad_accum.dot(x0) - 0.5 * grad_accum.squaredNorm() + psi_linear_const; }
  Vector psi_gradient(const Vector& z) const { return z - x0 + grad_accum; }
};

struct CouplingResult {
  double theta = 0.0;
  double rho = 0.0;
  double a_next = 0.0;
  Vector y;
  Vector x_next;
  Vector grad_next;
  double zeta = 0.0;
  int oracle_calls = 0;
  bool early_converged = false;
  bool used_fallback = false;
};

/// The search ran out of oracle calls without entering the window; usually
/// a sign that L underestimates the true smoothness.
class CouplingSearchError : public std::runtime_error {
 public:
  CouplingSearchError(double lo, double hi, int calls)
      : std::runtime_error("find_coupling: window [1/2, 2] not reached after " + std::to_string(calls) +
                           " oracle calls; last bracket [" + format_double(lo) + ", " + format_double(hi) + "]"),
        theta_lo(lo),
        theta_hi(hi),
        calls(calls) {}
  double theta_lo;
  double theta_hi;
  int calls;
};

inline constexpr double kThetaMin = 1e-12;
inline constexpr double kZetaTarget = 1.25;
inline constexpr double kWindowLo = 0.5;
inline constexpr double kWindowHi = 2.0;
inline constexpr int kFallbackGridPoints = 64;

/// Positive root of 18Lρa² = A + a.
inline double a_from_rho(double A, double L, double rho) {
  if (!(L > 0.0) || !(rho > 0.0)) throw std::domain_error("a_from_rho: L and rho must be positive");
  if (!(A >= 0.0)) throw std::domain_error("a_from_rho: A must be nonnegative");
  return (1.0 + std::sqrt(1.0 + 72.0 * L * rho * A)) / (36.0 * L * rho);
}

/// (‖g‖₂ / ‖g‖_{p*})², computed on the max-rescaled vector.
inline double sq_norm_ratio(const Vector& g, const Geometry& geom) {
  const double q = geom.dual_norm(g);
  if (q == 0.0) return 1.0;
  const double r = lp_norm(g, 2.0) / q;
  return r * r;
}

inline bool in_window(double zeta) { return zeta >= kWindowLo && zeta <= kWindowHi; }

struct ZetaEval {
  double zeta = 0.0;
  Vector y;
  Vector x;
  Vector grad_x;
  double grad_dual = 0.0;
  bool stationary = false;  // ∇f(x_θ) vanished (up to the threshold)
};

/// ζ(θ) = 18L(1−θ)²A/θ · ‖∇f(x_θ)‖₂²/‖∇f(x_θ)‖²_{p*} with y_θ = θx_t + (1−θ)v_t
/// and x_θ the steepest step from y_θ. Two gradient evaluations.
template <SmoothObjective F>
ZetaEval zeta_eval(double theta, const HasdState& s, const F& f, const HasdConfig& cfg) {
  if (s.t < 1 || !(s.A > 0.0)) throw std::domain_error("zeta_eval: requires t >= 1");
  if (!(theta > 0.0 && theta < 1.0)) throw std::domain_error("zeta_eval: theta must lie in (0, 1)");
  ZetaEval out;
  out.y = theta * s.x + (1.0 - theta) * s.v();
  const Vector gy = f.gradient(out.y);
  out.x = steepest_step(out.y, gy, cfg.step_L(), cfg.geom);
  out.grad_x = f.gradient(out.x);
  out.grad_dual = cfg.geom.dual_norm(out.grad_x);
  if (!std::isfinite(out.grad_dual)) throw std::runtime_error("zeta_eval: non-finite gradient at x_theta");
  if (out.grad_dual <= cfg.grad_threshold) {
    out.stationary = true;
    out.zeta = 0.0;
    return out;
  }
  const double one_minus = 1.0 - theta;
  out.zeta = 18.0 * cfg.L * one_minus * one_minus * s.A / theta * sq_norm_ratio(out.grad_x, cfg.geom);
  return out;
}

namespace detail {

/// θ at which 18LA(1−θ)²/θ equals `prefactor`: the root in (0, 1) of
/// kθ² − (2k + P)θ + k = 0 with k = 18LA, written to avoid cancellation.
inline double theta_for_prefactor(double k, double prefactor) {
  return 2.0 * k / (2.0 * k + prefactor + std::sqrt(prefactor * prefactor + 4.0 * k * prefactor));
}

inline CouplingResult accept(double theta, double A, double L, ZetaEval&& ev, int calls, bool fallback) {
  CouplingResult r;
  r.theta = theta;
  r.rho = theta / (18.0 * L * (1.0 - theta) * (1.0 - theta) * A);
  r.a_next = A * (1.0 - theta) / theta;
  r.y = std::move(ev.y);
  r.x_next = std::move(ev.x);
  r.grad_next = std::move(ev.grad_x);
  r.zeta = ev.zeta;
  r.oracle_calls = calls;
  r.used_fallback = fallback;
  return r;
}

inline CouplingResult early(double theta, ZetaEval&& ev, int calls) {
  CouplingResult r;
  r.theta = theta;
  r.y = std::move(ev.y);
  r.x_next = std::move(ev.x);
  r.grad_next = std::move(ev.grad_x);
  r.zeta = ev.zeta;
  r.oracle_calls = calls;
  r.early_converged = true;
  return r;
}

}  // namespace detail

/// Bisection for ζ(θ) = 5/4 on [1e−12, 1 − 1e−12], returning at the first
/// θ whose ζ lies in [1/2, 2]. If the bracket collapses without a hit, a
/// 64-point scan follows; it is placed log-uniformly in the prefactor
/// 18LA(1−θ)²/θ over [1/2, 2d^{1−2/p}], the only range where a window hit
/// is possible given ‖g‖₂²/‖g‖²_{p*} ∈ [d^{−(1−2/p)}, 1].
template <SmoothObjective F>
CouplingResult find_coupling(const HasdState& s, const F& f, const HasdConfig& cfg) {
  if (s.t < 1) throw std::domain_error("find_coupling: requires t >= 1");
  const int cap = cfg.max_search_calls;
  const bool scan_fits = cap >= 2 * kFallbackGridPoints + 2;
  const int bisect_cap = scan_fits ? cap - 2 * kFallbackGridPoints : cap;
  const std::optional<ReferenceOptimum> ref = cfg.gap_exit ? reference_optimum(f) : std::nullopt;

  int calls = 0;
  const auto done = [&](const ZetaEval& ev) {
    if (ev.stationary) return true;
    return ref && f.value(ev.x) - ref->f <= cfg.eps;
  };

  double lo = kThetaMin;
  double hi = 1.0 - kThetaMin;
  while (calls + 2 <= bisect_cap) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    ZetaEval ev = zeta_eval(mid, s, f, cfg);
    calls += 2;
    if (done(ev)) return detail::early(mid, std::move(ev), calls);
    if (in_window(ev.zeta)) return detail::accept(mid, s.A, cfg.L, std::move(ev), calls, false);
    if (ev.zeta > kZetaTarget) lo = mid;
    else hi = mid;
  }

  const double k = 18.0 * cfg.L * s.A;
  const double r2 = cfg.geom.max_dual_ratio(s.x.size());
  const double p_lo = kWindowLo;
  const double p_hi = kWindowHi * r2 * r2;
  for (int i = 0; i < kFallbackGridPoints && calls + 2 <= cap; ++i) {
    const double frac = kFallbackGridPoints == 1 ? 0.0 : static_cast<double>(i) / (kFallbackGridPoints - 1);
    const double prefactor = p_lo * std::pow(p_hi / p_lo, frac);
    const double theta = std::clamp(detail::theta_for_prefactor(k, prefactor), kThetaMin, 1.0 - kThetaMin);
    ZetaEval ev = zeta_eval(theta, s, f, cfg);
    calls += 2;
    if (done(ev)) return detail::early(theta, std::move(ev), calls);
    if (in_window(ev.zeta)) return detail::accept(theta, s.A, cfg.L, std::move(ev), calls, true);
  }
  throw CouplingSearchError(lo, hi, calls);
}

namespace detail {

inline IterationTrace base_row(int iter, double fx, const Vector& g, const Geometry& geom,
                               const std::optional<ReferenceOptimum>& ref) {
  IterationTrace row;
  row.iter = iter;
  row.f = fx;
  if (ref) row.gap = fx - ref->f;
  row.grad_l2 = lp_norm(g, 2.0);
  row.grad_dual = geom.dual_norm(g);
  return row;
}

/// Folds x_{t+1} into the estimate sequence and records every quantity the
/// invariant checks need.
template <SmoothObjective F>
IterationTrace commit(HasdState& s, const F& f, const HasdConfig& cfg, double theta, double rho, double a,
                      const Vector& y, const Vector& x_next, const Vector& g_next, double zeta, int calls,
                      bool fallback) {
  const std::optional<ReferenceOptimum> ref = reference_optimum(f);
  const double f_next = f.value(x_next);
  const double g_dual = cfg.geom.dual_norm(g_next);
  const double g_l2 = lp_norm(g_next, 2.0);
  const double L = cfg.L;

  StepDiagnostics d;
  const Vector disp = x_next - y;
  const double step_norm = cfg.geom.norm(disp);
  d.progress_inner = g_next.dot(y - x_next);
  d.progress_step = cfg.step_L() * step_norm * step_norm;
  d.progress_grad = g_dual * g_dual / (9.0 * cfg.step_L());
  d.a_prev = s.A;
  d.a_next = a;
  d.recurrence_lhs = 18.0 * L * rho * a * a;
  d.recurrence_rhs = s.A + a;
  d.window_ratio = g_dual > 0.0 ? sq_norm_ratio(g_next, cfg.geom) : 1.0;
  d.dual_ratio = g_l2 > 0.0 ? g_dual / g_l2 : 1.0;

  s.A += a;
  s.grad_accum += a * g_next;
  s.psi_linear_const += a * (f_next - g_next.dot(x_next));
  s.B += s.A / (18.0 * L) * g_dual * g_dual;
  s.G_sum += d.dual_ratio;
  s.x = x_next;
  s.t += 1;

  d.estimate_lhs = s.A * f_next + s.B;
  d.estimate_psi = s.psi_at_v();
  d.growth_sqrt_a = std::sqrt(s.A);
  d.growth_rhs = s.G_sum / (18.0 * std::sqrt(L));
  const Vector v = s.v();
  d.psi_grad_at_v = s.psi_gradient(v).norm();
  d.psi_grad_scale = s.x0.norm() + s.grad_accum.norm();
  if (ref) d.v_dist_to_opt = (v - ref->x).norm();

  IterationTrace row = base_row(s.t, f_next, g_next, cfg.geom, ref);
  row.rho = rho;
  row.theta = theta;
  row.zeta = zeta;
  row.search_calls = calls;
  row.a = s.A;
  row.b = s.B;
  row.g_running = s.G_sum / s.t;
  row.used_fallback = fallback;
  row.diag = d;
  return row;
}

template <SmoothObjective F>
IterationTrace early_row(HasdState& s, const F& f, const HasdConfig& cfg, const Vector& x, const Vector& g,
                         std::optional<double> theta, std::optional<double> zeta, int calls) {
  s.x = x;
  s.converged = true;
  IterationTrace row = base_row(s.t + 1, f.value(x), g, cfg.geom, reference_optimum(f));
  row.theta = theta;
  row.zeta = zeta;
  row.search_calls = calls;
  row.a = s.A;
  row.b = s.B;
  if (s.t > 0) row.g_running = s.G_sum / s.t;
  row.early_stop = true;
  return row;
}

}  // namespace detail

/// First iteration. With A₀ = 0 the coupling forces y₀ = x₀, so x₁ needs no
/// search and ρ₀ is set to the exact norm ratio at x₁.
template <SmoothObjective F>
IterationTrace step_t0(HasdState& s, const F& f, const HasdConfig& cfg) {
  if (s.t != 0) throw std::logic_error("step_t0: state is past t = 0");
  require_dim(s.x0, f.dim(), "step_t0");
  const Vector g0 = f.gradient(s.x0);
  if (cfg.geom.dual_norm(g0) <= cfg.grad_threshold) {
    return detail::early_row(s, f, cfg, s.x0, g0, std::nullopt, std::nullopt, 1);
  }
  const Vector x1 = steepest_step(s.x0, g0, cfg.step_L(), cfg.geom);
  const Vector g1 = f.gradient(x1);
  if (cfg.geom.dual_norm(g1) <= cfg.grad_threshold) {
    return detail::early_row(s, f, cfg, x1, g1, 0.0, std::nullopt, 2);
  }
  const double rho = sq_norm_ratio(g1, cfg.geom);
  const double a = a_from_rho(0.0, cfg.L, rho);
  return detail::commit(s, f, cfg, 0.0, rho, a, s.x0, x1, g1, 1.0, 2, false);
}

/// One HASD iteration; t = 0 is routed to step_t0.
template <SmoothObjective F>
IterationTrace step(HasdState& s, const F& f, const HasdConfig& cfg) {
  if (s.converged) throw std::logic_error("step: state already converged");
  if (s.t == 0) return step_t0(s, f, cfg);
  CouplingResult c = find_coupling(s, f, cfg);
  if (c.early_converged) {
    return detail::early_row(s, f, cfg, c.x_next, c.grad_next, c.theta, c.zeta, c.oracle_calls);
  }
  return detail::commit(s, f, cfg, c.theta, c.rho, c.a_next, c.y, c.x_next, c.grad_next, c.zeta,
                        c.oracle_calls, c.used_fallback);
}

/// Upper bound on gradient evaluations per coupling search: two per ζ
/// evaluation times 9 + (5(p−2)/2p) log₂ d + log₂(L·D_R/ε).
inline double search_call_bound(double L, double R, double eps, const Geometry& geom, Index d) {
  const double DR = (R + 1458.0 * R * R) * (20.0 * R + 4374.0 * R * R);
  const double pfrac = geom.is_inf() ? 2.5 : 5.0 * (geom.p() - 2.0) / (2.0 * geom.p());
  return 2.0 * (9.0 + pfrac * std::log2(static_cast<double>(d)) + std::log2(L * DR / eps));
}

inline double certificate_bound(double L, double R, double G_sum) { return 324.0 * L * R * R / (G_sum * G_sum); }

inline double improved_gradnorm_bound(double L, double R, double G_hat, double T) {
  return 8748.0 * L * L * R * R / (G_hat * G_hat * T * T * T);
}

/// Replays every per-step and run-level inequality over a HASD trace.
/// Checks that need x* are marked skipped when no reference is known.
inline InvariantReport check_hasd_trace(const std::vector<IterationTrace>& trace, const HasdConfig& cfg, Index d,
                                        std::optional<double> R, std::optional<double> gap_final, int T,
                                        double G_sum) {
  InvariantReport rep;
  const double L = cfg.L;
  const double ratio_hi = cfg.geom.max_dual_ratio(d);
  double prev_A = 0.0;
  double min_grad_sq = kInf;
  const char* xstar_checks[] = {"gap_vs_A", "v_distance", "B_bound", "search_calls_bound", "gap_to_gradnorm"};

  for (const IterationTrace& row : trace) {
    if (row.iter == 0) continue;
    min_grad_sq = std::min(min_grad_sq, row.grad_dual * row.grad_dual);
    if (!row.diag) continue;
    const StepDiagnostics& g = *row.diag;
    const double s = g.progress_step;
    rep["step_progress"].record(std::max(s - g.progress_inner - tolerance(1e-8, s),
                                        g.progress_grad - s - tolerance(1e-8, s)));
    rep["estimate_sequence"].record(g.estimate_lhs - g.estimate_psi - tolerance(1e-8, g.estimate_psi));
    rep["accumulator_growth"].record(g.growth_rhs - g.growth_sqrt_a - tolerance(1e-8, g.growth_rhs));
    rep["coupling_window"].record(std::max(0.5 * g.window_ratio - *row.rho - tolerance(1e-12, *row.rho),
                                           *row.rho - 2.0 * g.window_ratio - tolerance(1e-12, *row.rho)));
    rep["a_recurrence"].record(std::abs(g.recurrence_lhs - g.recurrence_rhs) - tolerance(1e-8, g.recurrence_rhs));
    rep["monotone_A"].record(prev_A - *row.a + (g.a_next > 0.0 ? 0.0 : 1.0));
    prev_A = *row.a;
    rep["psi_minimizer"].record(g.psi_grad_at_v - tolerance(1e-8, g.psi_grad_scale));
    rep["dual_ratio_range"].record(std::max(1.0 - g.dual_ratio - 1e-12, g.dual_ratio - ratio_hi - 1e-12 * ratio_hi));

    if (R) {
      const double r2 = *R * *R;
      if (row.gap) {
        const double bound = r2 / (2.0 * *row.a);
        rep["gap_vs_A"].record(*row.gap - bound - tolerance(1e-8, bound));
        rep["gap_to_gradnorm"].record(row.grad_dual * row.grad_dual - 2.0 * L * *row.gap -
                                      tolerance(1e-8, 2.0 * L * std::max(*row.gap, 0.0)));
      }
      if (g.v_dist_to_opt) rep["v_distance"].record(*g.v_dist_to_opt - *R - tolerance(1e-8, *R));
      rep["B_bound"].record(*row.b - 0.5 * r2 - tolerance(1e-8, 0.5 * r2));
      rep["search_calls_bound"].record(*row.search_calls - search_call_bound(L, *R, cfg.eps, cfg.geom, d));
    } else {
      for (const char* name : xstar_checks) ++rep[name].skipped;
    }
  }

  if (T > 0 && G_sum > 0.0) {
    if (R && gap_final) {
      const double bound = certificate_bound(L, *R, G_sum);
      rep["rate_certificate"].record(*gap_final - bound - tolerance(1e-8, bound));
      const double gbound = improved_gradnorm_bound(L, *R, 1.0, T);
      rep["gradnorm_improved"].record(min_grad_sq - gbound - tolerance(1e-8, gbound));
    } else {
      ++rep["rate_certificate"].skipped;
      ++rep["gradnorm_improved"].skipped;
    }
  }
  return rep;
}

namespace detail {

template <SmoothObjective F>
void finish_report(RunReport& r, const HasdState& s, const F& f, const HasdConfig& cfg) {
  const std::optional<ReferenceOptimum> ref = reference_optimum(f);
  r.x_final = s.x;
  r.f_final = f.value(s.x);
  ++r.value_calls;
  r.iterations = s.t;
  r.converged_early = s.converged;
  r.diverged = !std::isfinite(r.f_final);
  if (s.t > 0) r.g_mean = s.G_sum / s.t;
  std::optional<double> R;
  if (ref) {
    r.gap_final = r.f_final - ref->f;
    R = (s.x0 - ref->x).norm();
    r.initial_distance = R;
    if (s.t > 0) r.certificate_bound = certificate_bound(cfg.L, *R, s.G_sum);
  }
  r.invariants = check_hasd_trace(r.trace, cfg, f.dim(), R, r.gap_final, s.t, s.G_sum);
}

}  // namespace detail

/// Runs up to cfg.max_iters HASD iterations from x0. Row 0 of the trace is
/// the starting point.
template <SmoothObjective F>
RunReport run(const F& f, const Vector& x0, const HasdConfig& cfg) {
  cfg.validate();
  require_dim(x0, f.dim(), "hasd::run");
  const std::optional<ReferenceOptimum> ref = reference_optimum(f);
  RunReport report;
  report.method = "HASD";
  report.stepsize = cfg.step_scale;
  report.trace.push_back(detail::base_row(0, f.value(x0), f.gradient(x0), cfg.geom, ref));

  HasdState s = HasdState::start(x0);
  while (s.t < cfg.max_iters && !s.converged) {
    IterationTrace row = step(s, f, cfg);
    report.oracle_calls += row.search_calls.value_or(0);
    report.value_calls += 1;
    const bool stop = !std::isfinite(row.f);
    report.trace.push_back(std::move(row));
    if (stop) break;
  }
  detail::finish_report(report, s, f, cfg);
  return report;
}

/// Inner length ⌈(36/Ĝ)√(L/μ)⌉ of one restart round.
inline int restart_round_length(double L, double mu, double G_hat) {
  if (!(mu > 0.0)) throw std::domain_error("restart_round_length: mu must be positive");
  if (!(G_hat >= 1.0)) throw std::domain_error("restart_round_length: G_hat must be >= 1");
  return static_cast<int>(std::ceil(36.0 / G_hat * std::sqrt(L / mu)));
}

/// HASD with restarts for μ-strongly convex f (w.r.t. ℓ₂). Each round
/// re-centres ψ at its start point and runs a fresh inner HASD.
/// K = ⌈log₂(gap₀/eps)⌉ when f* is known, otherwise `rounds` must be given.
/// Rounds stop once the gap reaches eps.
template <SmoothObjective F>
RunReport run_restarting(const F& f, const Vector& x0, double mu, double G_hat, double eps, HasdConfig cfg,
                         std::optional<int> rounds = std::nullopt) {
  if (!(eps > 0.0)) throw std::domain_error("run_restarting: eps must be positive");
  const int T = restart_round_length(cfg.L, mu, G_hat);
  const std::optional<ReferenceOptimum> ref = reference_optimum(f);
  int K = 0;
  if (rounds) {
    K = *rounds;
  } else if (ref) {
    const double gap0 = f.value(x0) - ref->f;
    K = gap0 > eps ? static_cast<int>(std::ceil(std::log2(gap0 / eps))) : 0;
  } else {
    throw std::invalid_argument("run_restarting: round count required when f* is unknown");
  }
  cfg.max_iters = T;

  RunReport report;
  report.method = "HASD-restart";
  report.stepsize = cfg.step_scale;
  Vector x = x0;
  int offset = 0;
  double G_total = 0.0;
  report.trace.push_back(detail::base_row(0, f.value(x0), f.gradient(x0), cfg.geom, ref));
  for (int i = 0; i < K; ++i) {
    RoundSummary round;
    round.round = i;
    if (ref) round.start_gap = f.value(x) - ref->f;
    if (round.start_gap && *round.start_gap <= eps) break;
    RunReport inner = run(f, x, cfg);
    round.iterations = inner.iterations;
    round.end_gap = inner.gap_final;
    round.g_mean = inner.g_mean;
    if (inner.g_mean) G_total += *inner.g_mean * inner.iterations;
    for (std::size_t k = 1; k < inner.trace.size(); ++k) {
      IterationTrace row = inner.trace[k];
      row.iter += offset;
      report.trace.push_back(std::move(row));
    }
    offset += inner.iterations;
    report.oracle_calls += inner.oracle_calls;
    report.value_calls += inner.value_calls;
    merge_into(report.invariants, inner.invariants);
    if (round.start_gap && round.end_gap) {
      if (round.g_mean && *round.g_mean >= G_hat) {
        const double half = 0.5 * *round.start_gap;
        report.invariants["restart_halving"].record(*round.end_gap - half - tolerance(1e-8, half));
      } else {
        ++report.invariants["restart_halving"].skipped;
      }
    }
    x = inner.x_final;
    report.rounds.push_back(round);
    if (inner.converged_early || inner.diverged) break;
  }
  report.x_final = x;
  report.f_final = f.value(x);
  report.iterations = offset;
  if (offset > 0) report.g_mean = G_total / offset;
  if (ref) {
    report.gap_final = report.f_final - ref->f;
    report.initial_distance = (x0 - ref->x).norm();
  }
  return report;
}

struct GradNormStopping {
  long t_naive = 0;
  long t_improved = 0;
  double min_grad_dual = 0.0;
};

/// Iteration counts after which min_t ‖∇f(x_t)‖_{p*} ≤ eps is guaranteed,
/// via the plain rate (T_naive) and via the B_t term (T_improved), plus the
/// smallest dual gradient norm observed in `trace`.
inline GradNormStopping grad_norm_stopping(const std::vector<IterationTrace>& trace, double L, double R,
                                           double G_hat, double eps) {
  if (trace.empty()) throw std::invalid_argument("grad_norm_stopping: empty trace");
  GradNormStopping out;
  const double k = L * R / (G_hat * eps);
  out.t_naive = static_cast<long>(std::ceil(18.0 * std::sqrt(2.0) * k));
  out.t_improved = static_cast<long>(std::ceil(21.0 * std::cbrt(k * k)));
  out.min_grad_dual = kInf;
  for (const IterationTrace& r : trace) out.min_grad_dual = std::min(out.min_grad_dual, r.grad_dual);
  return out;
}

/// Gap below which ‖∇f‖_{p*} ≤ eps is implied: eps²/(2L).
inline double gradnorm_gap_threshold(double eps, double L) { return eps * eps / (2.0 * L); }

}  // namespace hasd
