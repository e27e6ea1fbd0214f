// hasd: run, tune, benchmark and verify the HASD optimizer from the shell.
//
// Exit codes: 0 success, 1 invariant failure, 2 configuration error.

#include "hasd/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace hasd;

struct CommonFlags {
  std::string config;
  std::string objective;
  std::optional<long> n, d, seed, iters;
  std::optional<double> mu, alpha;
  std::string p;
  std::string grid;
  std::string out;
  std::string ref_optimum;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "JSON file mirroring the experiment config");
  app->add_option("--objective", f.objective, "logsumexp | softmax | quadratic");
  app->add_option("--n", f.n, "rows of A (logsumexp)");
  app->add_option("--d", f.d, "dimension");
  app->add_option("--mu", f.mu, "ridge weight (logsumexp)");
  app->add_option("--alpha", f.alpha, "temperature (softmax)");
  app->add_option("--p", f.p, "norm exponent in [2, inf]; accepts 'inf'");
  app->add_option("--iters", f.iters, "iteration budget T");
  app->add_option("--seed", f.seed, "instance seed");
  app->add_option("--grid", f.grid, "comma-separated stepsizes (default {1,2,5}e-10 ... {1,2,5}e-1 and 1)");
  app->add_option("--out", f.out, "output path");
  app->add_option("--ref-optimum", f.ref_optimum, "JSON with x and f (or an instance file)");
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> g;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string tok = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      std::size_t used = 0;
      g.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("--grid: cannot parse '" + tok + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return g;
}

ExperimentConfig resolve(const CommonFlags& f) {
  json j = f.config.empty() ? json::object() : read_json_file(f.config);
  json& o = j["objective"];
  if (o.is_null()) o = json::object();
  if (!f.objective.empty()) o["kind"] = f.objective;
  if (f.n) o["n"] = *f.n;
  if (f.d) o["d"] = *f.d;
  if (f.mu) o["mu"] = *f.mu;
  if (f.alpha) o["alpha"] = *f.alpha;
  if (f.seed) o["seed"] = *f.seed;
  if (!f.p.empty()) j["p"] = f.p;
  if (f.iters) j["iters"] = *f.iters;
  if (!f.grid.empty()) j["grid"] = parse_grid(f.grid);
  if (!f.out.empty()) j["out"] = f.out;
  if (!f.ref_optimum.empty()) j["ref_optimum"] = f.ref_optimum;
  return experiment_config_from_json(j);
}

AnyObjective load_objective(const ExperimentConfig& cfg) {
  AnyObjective f = build_objective(cfg.objective);
  if (cfg.ref_optimum_path) {
    ReferenceOptimum ref = reference_from_json(read_json_file(*cfg.ref_optimum_path));
    if (ref.x.size() != f.dim()) throw ConfigError("reference optimum has the wrong dimension");
    f.set_reference_optimum(std::move(ref));
  }
  return f;
}

void print_invariants(const InvariantReport& rep) {
  for (const auto& [name, t] : rep) {
    std::printf("%-22s %s checked=%ld failed=%ld skipped=%ld max_violation=%.3g\n", name.c_str(),
                t.ok() ? "PASS" : "FAIL", t.checked, t.failed, t.skipped, t.max_violation);
  }
}

int cmd_run(const CommonFlags& flags, const std::string& method, std::optional<double> stepsize, bool check) {
  const ExperimentConfig cfg = resolve(flags);
  const AnyObjective f = load_objective(cfg);
  const Method m = parse_method(method);
  const double a = stepsize ? *stepsize : default_stepsize(f, m, cfg.geom);
  if (!(a > 0.0)) throw ConfigError("--stepsize must be positive");
  const Vector x0 = default_start(cfg.objective);
  RunReport r;
  if (m == Method::HASD) {
    HasdConfig c;
    c.L = 1.0 / a;
    c.geom = cfg.geom;
    c.max_iters = cfg.iters;
    c.eps = cfg.search_eps;
    r = run(f, x0, c);
  } else {
    r = run_method(f, x0, m, a, cfg.geom, cfg.iters);
  }
  json cj = to_json(cfg);
  cj["method"] = to_string(m);
  cj["stepsize"] = a;
  const std::string hash = config_hash(cj);
  json summary = to_json(r);
  summary["config"] = cj;
  summary["config_hash"] = hash;
  if (flags.out.empty()) {
    std::cout << summary.dump(2) << '\n';
  } else {
    std::ostringstream csv;
    write_trace_csv(csv, r, hash);
    write_text_file(std::filesystem::path(cfg.out_dir) / "trace.csv", csv.str());
    write_text_file(std::filesystem::path(cfg.out_dir) / "summary.json", summary.dump(2) + "\n");
    std::printf("%s T=%d f=%.17g oracle_calls=%ld -> %s\n", to_string(m).c_str(), r.iterations, r.f_final,
                r.oracle_calls, cfg.out_dir.c_str());
  }
  if (check && !r.invariants_ok()) {
    print_invariants(r.invariants);
    return 1;
  }
  return 0;
}

int cmd_tune(const CommonFlags& flags, const std::vector<std::string>& methods) {
  ExperimentConfig cfg = resolve(flags);
  if (!methods.empty()) {
    cfg.methods.clear();
    for (const auto& m : methods) cfg.methods.push_back(parse_method(m));
  }
  const AnyObjective f = load_objective(cfg);
  const Vector x0 = default_start(cfg.objective);
  json out = json::array();
  for (Method m : cfg.methods) {
    const TuneEntry e = tune_method(f, x0, m, cfg.geom, cfg.iters, cfg.grid, cfg.search_eps);
    if (e.all_diverged) std::fprintf(stderr, "warning: every stepsize diverged for %s\n", to_string(m).c_str());
    out.push_back(to_json(e));
  }
  if (flags.out.empty()) std::cout << out.dump(2) << '\n';
  else write_text_file(cfg.out_dir, out.dump(2) + "\n");
  return 0;
}

int cmd_bench(const CommonFlags& flags) {
  ExperimentConfig cfg = resolve(flags);
  const BenchResult b = bench(cfg);
  write_bench_outputs(cfg, b);
  for (const BenchMu& c : b.per_mu) {
    std::printf("mu=%-8s f*=%.10g (%s)\n", mu_tag(c.mu).c_str(), c.fstar, c.fstar_source.c_str());
    for (const BenchRow& r : c.rows) {
      std::printf("  %-5s stepsize=%-8g log10_gap=%8.3f\n", to_string(r.method).c_str(), r.tuning.stepsize,
                  r.log10_gap);
    }
  }
  std::printf("HASD below LC on %d/%zu mu; within one order of AGD on %d/%zu -> %s\n", b.hasd_beats_lc,
              b.per_mu.size(), b.hasd_near_agd, b.per_mu.size(), b.qualitative_ok ? "PASS" : "FAIL");
  std::printf("outputs in %s\n", cfg.out_dir.c_str());
  return 0;
}

int cmd_check(const CommonFlags& flags, double l_scale, bool as_json) {
  CheckOptions opt;
  if (flags.iters) opt.iters = static_cast<int>(*flags.iters);
  if (opt.iters < 1) throw ConfigError("--iters must be >= 1");
  if (!(l_scale > 0.0)) throw ConfigError("--l-scale must be positive");
  opt.l_scale = l_scale;
  if (!flags.p.empty()) opt.exponents = {Geometry::parse(flags.p).p()};
  if (flags.seed) opt.seeds = {static_cast<std::uint64_t>(*flags.seed)};
  const CheckResult r = check_invariants(opt);
  if (as_json) {
    std::cout << to_json(r).dump(2) << '\n';
  } else {
    print_invariants(r.report);
    for (const auto& fail : r.failures) std::printf("failed run: %s\n", fail.c_str());
    std::printf("%d runs: %s\n", r.runs, r.ok() ? "all invariants hold" : "INVARIANT FAILURE");
  }
  if (!flags.out.empty()) write_text_file(flags.out, to_json(r).dump(2) + "\n");
  return r.ok() ? 0 : 1;
}

int cmd_gen(const CommonFlags& flags, bool with_data) {
  const ExperimentConfig cfg = resolve(flags);
  const AnyObjective f = load_objective(cfg);
  const std::string text = instance_to_json(cfg.objective, f, with_data).dump(2) + "\n";
  if (flags.out.empty()) std::cout << text;
  else write_text_file(flags.out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HASD: hyper-accelerated steepest descent experiments"};
  app.require_subcommand(1);

  CommonFlags run_f, tune_f, bench_f, check_f, gen_f;
  std::string method = "HASD";
  std::optional<double> stepsize;
  bool run_check = false;
  auto* run_cmd = app.add_subcommand("run", "run one method and write its trace");
  add_common(run_cmd, run_f);
  run_cmd->add_option("--method", method, "HASD | GD | AGD | LC | SD_P");
  run_cmd->add_option("--stepsize", stepsize, "stepsize; for HASD L = 1/stepsize");
  run_cmd->add_flag("--check", run_check, "exit 1 if a HASD invariant fails");

  std::vector<std::string> tune_methods;
  auto* tune_cmd = app.add_subcommand("tune", "pick the best stepsize per method over the grid");
  add_common(tune_cmd, tune_f);
  tune_cmd->add_option("--method", tune_methods, "methods to tune (repeatable)");

  auto* bench_cmd = app.add_subcommand("bench", "full LogSumExp matrix over the mu grid");
  add_common(bench_cmd, bench_f);

  double l_scale = 1.0;
  bool check_json = false;
  auto* check_cmd = app.add_subcommand("check-invariants", "run the invariant suite over the default matrix");
  add_common(check_cmd, check_f);
  check_cmd->add_option("--l-scale", l_scale, "multiply every L by this factor (negative testing)");
  check_cmd->add_flag("--json", check_json, "print the report as JSON");

  bool with_data = false;
  auto* gen_cmd = app.add_subcommand("gen-instance", "write an instance document");
  add_common(gen_cmd, gen_f);
  gen_cmd->add_flag("--with-data", with_data, "include dense A and b (or q and c)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) return cmd_run(run_f, method, stepsize, run_check);
    if (*tune_cmd) return cmd_tune(tune_f, tune_methods);
    if (*bench_cmd) return cmd_bench(bench_f);
    if (*check_cmd) return cmd_check(check_f, l_scale, check_json);
    if (*gen_cmd) return cmd_gen(gen_f, with_data);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const CouplingSearchError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
