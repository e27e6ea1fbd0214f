// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "hasd/harness.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

using namespace hasd;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string tally_detail(const InvariantTally& t) {
  return fmt("%ld checked, %ld failed, max violation %.3g", t.checked, t.failed, t.max_violation);
}

InvariantTally get(const InvariantReport& r, const std::string& key) {
  auto it = r.find(key);
  return it == r.end() ? InvariantTally{} : it->second;
}

void step_oracle() {
  const auto t0 = Clock::now();
  const double ps[] = {2.0, 2.5, 3.0, 4.0, 8.0, kInf};
  oracle::Lcg rng(2024);
  double worst_arg = 0.0, worst_val = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double p = ps[k % 6];
    const Index d = 1 + static_cast<Index>(rng.uniform() * 5);
    const Vector y = rng.normal_vec(d), g = rng.normal_vec(d);
    const double L = std::pow(10.0, rng.uniform(-1, 1));
    const Vector ours = steepest_step(y, g, L, Geometry(p));
    const Vector ref = oracle::subproblem_argmin(y, g, L, p);
    const double v_ours = oracle::subproblem(g, L, p, ours - y);
    const double v_ref = oracle::subproblem(g, L, p, ref - y);
    worst_arg = std::max(worst_arg, (ours - ref).norm() / std::max(1e-300, (ref - y).norm()));
    worst_val = std::max(worst_val, std::abs(v_ours - v_ref) / std::max(1e-300, std::abs(v_ref)));
  }
  const double secs = seconds_since(t0);
  report(1, "step-oracle equivalence", worst_arg <= 1e-6 && worst_val <= 1e-6 && secs < 10.0,
         fmt("100 instances, max rel err arg %.2e value %.2e, %.2fs", worst_arg, worst_val, secs));
}

struct MatrixOutcome {
  InvariantReport merged;
  std::vector<int> search_calls;
  int runs = 0;
  int errors = 0;
};

MatrixOutcome run_default_matrix() {
  MatrixOutcome out;
  for (const MatrixCase& mc : default_matrix()) {
    ++out.runs;
    try {
      const RunReport r = run(mc.f, mc.x0, mc.cfg);
      merge_into(out.merged, r.invariants);
      for (const IterationTrace& row : r.trace)
        if (row.iter >= 2 && row.search_calls) out.search_calls.push_back(*row.search_calls);
    } catch (const std::exception& e) {
      std::printf("  %s: %s\n", mc.label.c_str(), e.what());
      ++out.errors;
    }
  }
  return out;
}

void matrix_criteria(const MatrixOutcome& m) {
  const auto chain = get(m.merged, "step_progress");
  report(2, "steepest-step progress chain", m.errors == 0 && chain.checked > 0 && chain.ok(),
         fmt("%d runs, ", m.runs) + tally_detail(chain));

  const auto est = get(m.merged, "estimate_sequence");
  report(3, "estimate-sequence bound", m.errors == 0 && est.checked > 0 && est.ok(), tally_detail(est));

  const auto growth = get(m.merged, "accumulator_growth");
  report(4, "accumulator growth", m.errors == 0 && growth.checked > 0 && growth.ok(), tally_detail(growth));

  const auto win = get(m.merged, "coupling_window");
  const auto rec = get(m.merged, "a_recurrence");
  report(7, "coupling window and recurrence", m.errors == 0 && win.checked > 0 && win.ok() && rec.ok(),
         "window " + tally_detail(win) + "; recurrence " + tally_detail(rec));

  const auto calls = get(m.merged, "search_calls_bound");
  std::vector<int> sc = m.search_calls;
  double median = kInf;
  if (!sc.empty()) {
    std::sort(sc.begin(), sc.end());
    const std::size_t n = sc.size();
    median = n % 2 ? sc[n / 2] : 0.5 * (sc[n / 2 - 1] + sc[n / 2]);
  }
  report(8, "binary-search economy", calls.checked > 0 && calls.ok() && calls.skipped == 0 && median <= 20.0,
         fmt("%zu searches, median %.1f, max %d calls; bound ", sc.size(), median, sc.empty() ? 0 : sc.back()) +
             tally_detail(calls));

  const auto gn = get(m.merged, "gradnorm_improved");
  const auto conv = get(m.merged, "gap_to_gradnorm");
  report(10, "gradient-norm corollaries",
         gn.checked > 0 && gn.ok() && gn.skipped == 0 && conv.checked > 0 && conv.ok() && conv.skipped == 0,
         "T^-3 bound " + tally_detail(gn) + "; gap-to-gradnorm " + tally_detail(conv));
}

void certificate() {
  std::vector<std::pair<std::string, AnyObjective>> instances;
  for (std::uint64_t s = 1; s <= 4; ++s) instances.emplace_back("quadratic", make_quadratic_instance(8, s));
  for (Index d : {4, 8, 16}) instances.emplace_back("softmax", SymmetricSoftmax(0.5, d));
  for (std::uint64_t s = 1; s <= 4; ++s)
    instances.emplace_back("logsumexp", build_objective(ObjectiveSpec{"logsumexp", 20, 8, 1e-2, 0.5, s}));
  int checked = 0, bad = 0, with_ref = 0;
  double worst = 0.0;
  for (const auto& [name, f] : instances) {
    if (!f.reference_optimum()) continue;
    ++with_ref;
    Rng rng(1000 + with_ref);
    const Vector x0 = random_normal(rng, f.dim());
    for (double p : {2.0, 3.0, 4.0, kInf}) {
      for (int T : {10, 50, 200}) {
        HasdConfig c;
        c.geom = Geometry(p);
        c.L = smoothness_bound(f, c.geom);
        c.max_iters = T;
        const RunReport r = run(f, x0, c);
        if (r.iterations == 0 || !r.certificate_bound) continue;
        ++checked;
        const double ratio = *r.gap_final / *r.certificate_bound;
        worst = std::max(worst, ratio);
        if (*r.gap_final > *r.certificate_bound * (1.0 + 1e-8)) ++bad;
      }
    }
  }
  report(5, "rate certificate", with_ref >= 10 && checked > 0 && bad == 0,
         fmt("%d instances x 4 exponents x T in {10,50,200}: %d runs, %d violations, max gap/bound %.3g", with_ref,
             checked, bad, worst));
}

void softmax_exactness() {
  bool ok = true;
  std::string detail;
  for (Index d : {4, 16, 64}) {
    const SymmetricSoftmax f(1.0, d);
    HasdConfig c;
    c.geom = Geometry::infinity();
    c.L = smoothness_bound(f, c.geom);
    c.max_iters = 100;
    const RunReport r = run(f, Vector::Ones(d), c);
    const double err = r.g_mean ? std::abs(*r.g_mean - std::sqrt(double(d))) : kInf;
    double lo = kInf, hi = 0.0;
    for (const IterationTrace& row : r.trace) {
      if (!row.rho) continue;
      lo = std::min(lo, *row.rho * d);
      hi = std::max(hi, *row.rho * d);
    }
    ok = ok && err <= 1e-10 && lo >= 0.5 && hi <= 2.0 && r.iterations > 0;
    detail += fmt("d=%ld |G-sqrt d|=%.1e rho*d in [%.3f,%.3f]; ", long(d), err, lo, hi);
  }
  report(6, "symmetric softmax exactness", ok, detail);
}

void restarting() {
  struct Case {
    std::string name;
    AnyObjective f;
    double mu;
    double p;
  };
  std::vector<Case> cases;
  const Quadratic q = make_quadratic_instance(8, 1);
  cases.push_back({"quadratic p=4", q, q.strong_convexity(), 4.0});
  cases.push_back({"logsumexp p=inf", build_objective(ObjectiveSpec{"logsumexp", 20, 8, 1e-2, 0.5, 1}), 1e-2, kInf});
  bool ok = true;
  std::string detail;
  for (const Case& c : cases) {
    HasdConfig cfg;
    cfg.geom = Geometry(c.p);
    cfg.L = smoothness_bound(c.f, cfg.geom);
    Rng rng(77);
    const Vector x0 = 3.0 * random_normal(rng, c.f.dim());
    const RunReport r = run_restarting(c.f, x0, c.mu, 1.0, 1e-9, cfg);
    const auto t = get(r.invariants, "restart_halving");
    bool g_ok = true;
    for (const RoundSummary& rs : r.rounds) g_ok = g_ok && rs.g_mean && *rs.g_mean >= 1.0;
    ok = ok && t.checked > 0 && t.ok() && t.skipped == 0 && g_ok;
    detail += fmt("%s: T=%d, %zu rounds, halving %ld/%ld, final gap %.2e; ", c.name.c_str(),
                  restart_round_length(cfg.L, c.mu, 1.0), r.rounds.size(), t.checked - t.failed, t.checked,
                  *r.gap_final);
  }
  report(9, "restarting halves the gap", ok, detail);
}

void hessian() {
  oracle::Lcg rng(31);
  double worst_fd = 0.0, worst_eig = kInf, worst_witness = kInf;
  for (double p : {2.0, 3.0, 4.0}) {
    for (Index d : {2, 5, 10}) {
      const double bound = 2.0 / std::pow(double(d), (p - 2.0) / 2.0);
      for (int k = 0; k < 100; ++k) {
        Vector z(d);
        for (Index i = 0; i < d; ++i) z[i] = rng.uniform(0.1, 2.0) * (rng.uniform() < 0.5 ? -1 : 1);
        const Matrix h = lp_sq_hessian(z, p);
        const Matrix fd = oracle::fd_hessian_sq_pnorm(z, p);
        worst_fd = std::max(worst_fd, (h - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff()));
        Eigen::SelfAdjointEigenSolver<Matrix> eig(h - lp_sq_hessian_rank_one_floor(z, p), Eigen::EigenvaluesOnly);
        worst_eig = std::min(worst_eig, eig.eigenvalues().minCoeff());
        std::vector<Vector> cands{signed_power(z, p), z};
        for (int j = 0; j < 8; ++j) cands.push_back(rng.normal_vec(d));
        worst_witness = std::min(worst_witness, induced_norm_lower_bound(h, p, cands) / bound);
      }
    }
  }
  report(11, "lp Hessian", worst_fd <= 1e-5 && worst_eig >= -1e-10 && worst_witness >= 1.0 - 1e-12,
         fmt("900 points, max FD err %.2e, min residual eigenvalue %.2e, min witness/bound %.4f", worst_fd, worst_eig,
             worst_witness));
}

void benchmark_ordering() {
  ExperimentConfig cfg;
  cfg.out_dir = "acceptance_bench";
  const auto t0 = Clock::now();
  const BenchResult b = bench(cfg);
  const double secs = seconds_since(t0);
  write_bench_outputs(cfg, b);
  std::string detail;
  for (const BenchMu& c : b.per_mu) {
    detail += "mu=" + mu_tag(c.mu) + "[";
    for (const BenchRow& r : c.rows) detail += fmt(" %s %.2f", to_string(r.method).c_str(), r.log10_gap);
    detail += " ] ";
  }
  detail += fmt("below LC %d/%zu, within 1 of AGD %d/%zu, %.0fs", b.hasd_beats_lc, b.per_mu.size(), b.hasd_near_agd,
                b.per_mu.size(), secs);
  report(12, "LogSumExp benchmark ordering", b.qualitative_ok && secs < 300.0, detail);
}

}  // namespace

int main() {
  step_oracle();
  const MatrixOutcome m = run_default_matrix();
  matrix_criteria(m);
  certificate();
  softmax_exactness();
  restarting();
  hessian();
  benchmark_ordering();
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
