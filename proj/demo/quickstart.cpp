// Minimal use of the library: HASD in the l_inf geometry on a small
// LogSumExp instance with the analytic L, then HASD and AGD tuned over
// the stepsize grid.

#include "hasd/harness.hpp"

#include <cstdio>

int main() {
  using namespace hasd;

  LogSumExpAffine f = make_logsumexp_instance(40, 10, 1e-2, 3);
  f.set_reference_optimum(solve_reference(f));

  const Geometry geom = Geometry::infinity();
  HasdConfig cfg;
  cfg.L = smoothness_bound(f, geom);
  cfg.geom = geom;
  cfg.max_iters = 300;

  const Vector x0 = Vector::Zero(f.dim());
  const RunReport r = run(f, x0, cfg);
  std::printf("HASD  L=%.4g  T=%d  gap=%.3e  G=%.3f  bound=%.3e  invariants %s\n", cfg.L, r.iterations,
              *r.gap_final, *r.g_mean, *r.certificate_bound, r.invariants_ok() ? "ok" : "FAILED");

  for (Method m : {Method::HASD, Method::AGD}) {
    const TuneEntry e = tune_method(f, x0, m, geom, 300, default_grid());
    const RunReport t = run_method(f, x0, m, e.stepsize, geom, 300);
    std::printf("%-5s tuned alpha=%g  gap=%.3e\n", to_string(m).c_str(), e.stepsize, *t.gap_final);
  }
  return 0;
}
