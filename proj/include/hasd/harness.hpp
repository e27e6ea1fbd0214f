#pragma once

#include "hasd/baselines.hpp"
#include "hasd/core.hpp"
#include "hasd/geometry.hpp"
#include "hasd/hasd.hpp"
#include "hasd/invariants.hpp"
#include "hasd/objectives.hpp"
#include "hasd/random.hpp"
#include "hasd/trace.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hasd {

using nlohmann::json;

/// Raised for malformed or inconsistent experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------- instances

struct ObjectiveSpec {
  std::string kind = "logsumexp";  // logsumexp | softmax | quadratic
  Index n = 200;
  Index d = 50;
  double mu = 0.0;
  double alpha = 0.5;
  std::uint64_t seed = 1;

  void validate() const {
    if (kind != "logsumexp" && kind != "softmax" && kind != "quadratic") {
      throw ConfigError("objective kind must be logsumexp, softmax or quadratic, got '" + kind + "'");
    }
    if (n < 1 || d < 1) throw ConfigError("objective dimensions must be >= 1");
    if (!(mu >= 0.0)) throw ConfigError("mu must be >= 0");
    if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  }
};

inline json to_json(const ObjectiveSpec& s) {
  return {{"kind", s.kind}, {"n", s.n}, {"d", s.d}, {"mu", s.mu}, {"alpha", s.alpha}, {"seed", s.seed}};
}

inline ObjectiveSpec objective_spec_from_json(const json& j) {
  ObjectiveSpec s;
  s.kind = j.value("kind", s.kind);
  s.n = j.value("n", s.n);
  s.d = j.value("d", s.d);
  s.mu = j.value("mu", s.mu);
  s.alpha = j.value("alpha", s.alpha);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

/// Diagonal quadratic with curvatures uniform in [0.1, 1] and a Gaussian centre.
inline Quadratic make_quadratic_instance(Index d, std::uint64_t seed) {
  Rng rng(seed);
  Vector q(d), c(d);
  for (Index i = 0; i < d; ++i) q[i] = rng.uniform(0.1, 1.0);
  for (Index i = 0; i < d; ++i) c[i] = rng.normal();
  return Quadratic::diagonal(q, c);
}

/// Builds the objective; LogSumExp instances get a Newton reference when
/// one exists.
inline AnyObjective build_objective(const ObjectiveSpec& s, bool solve_ref = true) {
  s.validate();
  if (s.kind == "softmax") return SymmetricSoftmax(s.alpha, s.d);
  if (s.kind == "quadratic") return make_quadratic_instance(s.d, s.seed);
  LogSumExpAffine f = make_logsumexp_instance(s.n, s.d, s.mu, s.seed);
  if (solve_ref && s.mu > 0.0) f.set_reference_optimum(solve_reference(f));
  return f;
}

/// All-ones for the symmetric softmax, the origin otherwise.
inline Vector default_start(const ObjectiveSpec& s) {
  return s.kind == "softmax" ? Vector::Ones(s.d) : Vector::Zero(s.d);
}

namespace detail {
inline json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
inline Vector json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}
}  // namespace detail

inline json reference_to_json(const ReferenceOptimum& r) { return {{"x", detail::vec_json(r.x)}, {"f", r.f}}; }

/// Accepts either {"x": [...], "f": v} or an instance document carrying "reference".
inline ReferenceOptimum reference_from_json(const json& j) {
  const json& r = j.contains("reference") ? j.at("reference") : j;
  if (!r.contains("x") || !r.contains("f")) throw ConfigError("reference optimum needs fields x and f");
  return ReferenceOptimum{detail::json_vec(r.at("x")), r.at("f").get<double>()};
}

/// Replayable instance document: the generating spec, optional dense data
/// and the reference optimum when known.
inline json instance_to_json(const ObjectiveSpec& spec, const AnyObjective& f, bool with_data) {
  json j = to_json(spec);
  if (with_data) {
    if (const auto* lse = std::get_if<LogSumExpAffine>(&f.variant())) {
      json rows = json::array();
      for (Index i = 0; i < lse->rows(); ++i) rows.push_back(detail::vec_json(lse->a().row(i).transpose()));
      j["A"] = rows;
      j["b"] = detail::vec_json(lse->b());
    } else if (const auto* q = std::get_if<Quadratic>(&f.variant())) {
      j["q"] = detail::vec_json(q->hessian().diagonal());
      j["c"] = detail::vec_json(q->center());
    }
  }
  if (auto ref = f.reference_optimum()) j["reference"] = reference_to_json(*ref);
  return j;
}

inline AnyObjective instance_from_json(const json& j) {
  const ObjectiveSpec spec = objective_spec_from_json(j);
  AnyObjective f = [&]() -> AnyObjective {
    if (spec.kind == "logsumexp" && j.contains("A")) {
      const auto rows = j.at("A").get<std::vector<std::vector<double>>>();
      Matrix a(static_cast<Index>(rows.size()), spec.d);
      for (Index i = 0; i < a.rows(); ++i) {
        if (static_cast<Index>(rows[i].size()) != spec.d) throw ConfigError("instance: row length differs from d");
        for (Index k = 0; k < spec.d; ++k) a(i, k) = rows[i][k];
      }
      return LogSumExpAffine(std::move(a), detail::json_vec(j.at("b")), spec.mu);
    }
    if (spec.kind == "quadratic" && j.contains("q")) {
      return Quadratic::diagonal(detail::json_vec(j.at("q")), detail::json_vec(j.at("c")));
    }
    return build_objective(spec, false);
  }();
  if (j.contains("reference")) f.set_reference_optimum(reference_from_json(j));
  return f;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

// ---------------------------------------------------------------- experiments

/// {1, 2, 5} × 10^k for k = −10 … −1, then 1.
inline std::vector<double> default_grid() {
  std::vector<double> g;
  for (int e = -10; e <= -1; ++e)
    for (double m : {1.0, 2.0, 5.0}) g.push_back(m * std::pow(10.0, e));
  g.push_back(1.0);
  return g;
}

struct ExperimentConfig {
  ObjectiveSpec objective;
  std::vector<Method> methods{Method::HASD, Method::GD, Method::AGD, Method::LC};
  Geometry geom = Geometry::infinity();
  int iters = 500;
  std::vector<double> grid = default_grid();
  std::vector<double> mu_grid{0.0, 1e-6, 1e-4, 1e-2};
  std::string out_dir = "out";
  bool check_invariants = false;
  std::optional<std::string> ref_optimum_path;
  double search_eps = 1e-9;

  void validate() const {
    objective.validate();
    if (grid.empty()) throw ConfigError("stepsize grid must be nonempty");
    for (double a : grid)
      if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("stepsize grid entries must be positive");
    if (iters < 1) throw ConfigError("iteration budget must be >= 1");
    if (methods.empty()) throw ConfigError("method list must be nonempty");
    if (!(search_eps > 0.0)) throw ConfigError("search_eps must be > 0");
  }
};

inline json to_json(const ExperimentConfig& c) {
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(to_string(m));
  return {{"objective", to_json(c.objective)},
          {"methods", methods},
          {"p", c.geom.label()},
          {"iters", c.iters},
          {"grid", c.grid},
          {"mu_grid", c.mu_grid},
          {"out", c.out_dir},
          {"check_invariants", c.check_invariants},
          {"ref_optimum", c.ref_optimum_path ? json(*c.ref_optimum_path) : json(nullptr)},
          {"search_eps", c.search_eps}};
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("objective")) c.objective = objective_spec_from_json(j.at("objective"));
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (j.contains("p")) {
      const json& p = j.at("p");
      c.geom = p.is_string() ? Geometry::parse(p.get<std::string>()) : Geometry(p.get<double>());
    }
    c.iters = j.value("iters", c.iters);
    if (j.contains("grid")) c.grid = j.at("grid").get<std::vector<double>>();
    if (j.contains("mu_grid")) c.mu_grid = j.at("mu_grid").get<std::vector<double>>();
    c.out_dir = j.value("out", c.out_dir);
    c.check_invariants = j.value("check_invariants", c.check_invariants);
    if (j.contains("ref_optimum") && !j.at("ref_optimum").is_null()) {
      c.ref_optimum_path = j.at("ref_optimum").get<std::string>();
    }
    c.search_eps = j.value("search_eps", c.search_eps);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

/// Stepsize used when none is given: 1/L₂ for GD and AGD, 1/L_p for LC
/// and SD_P; for HASD the stepsize is 1/L.
template <SmoothObjective F>
double default_stepsize(const F& f, Method m, const Geometry& geom) {
  const bool euclid = m == Method::GD || m == Method::AGD;
  return 1.0 / smoothness_bound(f, euclid ? Geometry(2.0) : geom);
}

/// One run of `m`. For HASD the stepsize α sets L = 1/α for the whole
/// method (step and coupling); a failed coupling search ends the run and
/// is reported as divergence.
template <SmoothObjective F>
RunReport run_method(const F& f, const Vector& x0, Method m, double stepsize, const Geometry& geom, int iters,
                     double search_eps = 1e-9) {
  if (m != Method::HASD) {
    BaselineConfig b;
    b.method = m;
    b.stepsize = stepsize;
    b.geom = geom;
    b.iters = iters;
    return run_baseline(f, x0, b);
  }
  HasdConfig c;
  c.L = 1.0 / stepsize;
  c.geom = geom;
  c.max_iters = iters;
  c.eps = search_eps;
  try {
    return run(f, x0, c);
  } catch (const CouplingSearchError&) {
    RunReport r;
    r.method = "HASD";
    r.stepsize = stepsize;
    r.x_final = x0;
    r.f_final = kInf;
    r.diverged = true;
    return r;
  }
}

struct TuneEntry {
  Method method = Method::GD;
  double stepsize = 0.0;
  double f_final = kInf;
  bool all_diverged = false;
  std::vector<std::pair<double, double>> scores;  // (stepsize, final f)
};

/// Runs every grid point and keeps the one with the smallest final f. When
/// every point diverges the run that survived longest is returned, flagged.
template <SmoothObjective F>
TuneEntry tune_method(const F& f, const Vector& x0, Method m, const Geometry& geom, int iters,
                      const std::vector<double>& grid, double search_eps = 1e-9) {
  if (grid.empty()) throw ConfigError("tune: empty grid");
  TuneEntry e;
  e.method = m;
  int longest = -1;
  double longest_step = grid.front();
  for (double a : grid) {
    const RunReport r = run_method(f, x0, m, a, geom, iters, search_eps);
    const bool ok = !r.diverged && std::isfinite(r.f_final);
    e.scores.emplace_back(a, ok ? r.f_final : kInf);
    if (ok && r.f_final < e.f_final) {
      e.f_final = r.f_final;
      e.stepsize = a;
    }
    const int lasted = static_cast<int>(r.trace.size());
    if (lasted > longest) {
      longest = lasted;
      longest_step = a;
    }
  }
  if (!std::isfinite(e.f_final)) {
    e.all_diverged = true;
    e.stepsize = longest_step;
  }
  return e;
}

inline json to_json(const TuneEntry& e) {
  json scores = json::array();
  for (const auto& [a, fv] : e.scores) scores.push_back({a, std::isfinite(fv) ? json(fv) : json(nullptr)});
  return {{"method", to_string(e.method)},
          {"stepsize", e.stepsize},
          {"f_final", std::isfinite(e.f_final) ? json(e.f_final) : json(nullptr)},
          {"all_diverged", e.all_diverged},
          {"scores", scores}};
}

inline std::string mu_tag(double mu) {
  std::ostringstream os;
  os << mu;
  return os.str();
}

struct BenchRow {
  Method method = Method::GD;
  double mu = 0.0;
  TuneEntry tuning;
  RunReport report;
  double log10_gap = 0.0;
};

struct BenchMu {
  double mu = 0.0;
  double fstar = 0.0;
  std::string fstar_source;  // "newton" or "surrogate"
  std::vector<BenchRow> rows;
};

struct BenchResult {
  std::vector<BenchMu> per_mu;
  int hasd_beats_lc = 0;
  int hasd_near_agd = 0;
  bool qualitative_ok = false;
};

/// log10 of a gap, floored at the rounding level of f*.
inline double log10_gap(double gap, double fstar) {
  return std::log10(std::max(gap, 1e-16 * std::max(1.0, std::abs(fstar))));
}

/// Benchmark matrix: for each μ, a LogSumExp instance, every method
/// tuned over the grid, the best run re-traced. Where Newton cannot certify
/// f* (μ = 0 is unbounded below) the gap is taken against the lowest value
/// seen by any method or by a reference AGD run ten times longer.
inline BenchResult bench(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.objective.kind != "logsumexp") throw ConfigError("bench requires the logsumexp objective");
  BenchResult out;
  for (double mu : cfg.mu_grid) {
    ObjectiveSpec spec = cfg.objective;
    spec.mu = mu;
    const AnyObjective f = build_objective(spec);
    const Vector x0 = default_start(spec);
    BenchMu cell;
    cell.mu = mu;
    for (Method m : cfg.methods) {
      BenchRow row;
      row.method = m;
      row.mu = mu;
      row.tuning = tune_method(f, x0, m, cfg.geom, cfg.iters, cfg.grid, cfg.search_eps);
      row.report = run_method(f, x0, m, row.tuning.stepsize, cfg.geom, cfg.iters, cfg.search_eps);
      cell.rows.push_back(std::move(row));
    }
    if (auto ref = f.reference_optimum()) {
      cell.fstar = ref->f;
      cell.fstar_source = "newton";
    } else {
      double lowest = kInf;
      for (const BenchRow& r : cell.rows)
        for (const IterationTrace& t : r.report.trace)
          if (std::isfinite(t.f)) lowest = std::min(lowest, t.f);
      double agd_step = cfg.grid.back();
      for (const BenchRow& r : cell.rows)
        if (r.method == Method::AGD) agd_step = r.tuning.stepsize;
      const RunReport long_run = run_method(f, x0, Method::AGD, agd_step, cfg.geom, 10 * cfg.iters);
      for (const IterationTrace& t : long_run.trace)
        if (std::isfinite(t.f)) lowest = std::min(lowest, t.f);
      cell.fstar = lowest;
      cell.fstar_source = "surrogate";
      for (BenchRow& r : cell.rows) {
        for (IterationTrace& t : r.report.trace) t.gap = t.f - lowest;
        r.report.gap_final = r.report.f_final - lowest;
      }
    }
    for (BenchRow& r : cell.rows) {
      r.log10_gap = std::isfinite(r.report.f_final) ? log10_gap(r.report.f_final - cell.fstar, cell.fstar) : kInf;
    }
    out.per_mu.push_back(std::move(cell));
  }

  for (const BenchMu& cell : out.per_mu) {
    std::optional<double> h, lc, agd;
    for (const BenchRow& r : cell.rows) {
      if (r.method == Method::HASD) h = r.log10_gap;
      if (r.method == Method::LC) lc = r.log10_gap;
      if (r.method == Method::AGD) agd = r.log10_gap;
    }
    if (h && lc && *h < *lc) ++out.hasd_beats_lc;
    if (h && agd && *h <= *agd + 1.0) ++out.hasd_near_agd;
  }
  const int n_mu = static_cast<int>(out.per_mu.size());
  out.qualitative_ok = n_mu > 0 && out.hasd_beats_lc >= std::min(3, n_mu) && out.hasd_near_agd == n_mu;
  return out;
}

inline json to_json(const BenchResult& b) {
  json cells = json::array();
  for (const BenchMu& c : b.per_mu) {
    json rows = json::array();
    for (const BenchRow& r : c.rows) {
      json jr = to_json(r.report);
      jr["log10_gap"] = std::isfinite(r.log10_gap) ? json(r.log10_gap) : json(nullptr);
      jr["tuned_stepsize"] = r.tuning.stepsize;
      jr["all_diverged"] = r.tuning.all_diverged;
      rows.push_back(jr);
    }
    cells.push_back({{"mu", c.mu}, {"fstar", c.fstar}, {"fstar_source", c.fstar_source}, {"runs", rows}});
  }
  return {{"cells", cells},
          {"hasd_beats_lc", b.hasd_beats_lc},
          {"hasd_within_order_of_agd", b.hasd_near_agd},
          {"qualitative_ok", b.qualitative_ok}};
}

/// Writes one CSV per (method, μ), the JSON summary and the long-format
/// plot data (method, mu, iter, log10_gap).
inline void write_bench_outputs(const ExperimentConfig& cfg, const BenchResult& b) {
  namespace fs = std::filesystem;
  const json cj = to_json(cfg);
  const std::string hash = config_hash(cj);
  const fs::path dir(cfg.out_dir);
  std::ostringstream plot;
  plot << "# config_hash=" << hash << '\n' << "method,mu,iter,log10_gap\n";
  for (const BenchMu& c : b.per_mu) {
    for (const BenchRow& r : c.rows) {
      std::ostringstream csv;
      write_trace_csv(csv, r.report, hash);
      write_text_file(dir / (to_string(r.method) + "_mu" + mu_tag(c.mu) + ".csv"), csv.str());
      for (const IterationTrace& t : r.report.trace) {
        if (!t.gap || !std::isfinite(t.f)) continue;
        plot << to_string(r.method) << ',' << format_double(c.mu) << ',' << t.iter << ','
             << format_double(log10_gap(*t.gap, c.fstar)) << '\n';
      }
    }
  }
  write_text_file(dir / "plot_data.csv", plot.str());
  json summary = to_json(b);
  summary["config"] = cj;
  summary["config_hash"] = hash;
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");
}

// ---------------------------------------------------------------- invariant matrix

struct CheckOptions {
  std::vector<double> exponents{2.0, 3.0, 4.0, kInf};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int iters = 200;
  double l_scale = 1.0;  // < 1 deliberately understates L
  int probes = 200;
};

struct CheckResult {
  InvariantReport report;
  std::vector<std::string> failures;
  int runs = 0;

  bool ok() const {
    if (!failures.empty()) return false;
    for (const auto& [k, v] : report)
      if (!v.ok()) return false;
    return true;
  }
};

/// One HASD run of the default invariant matrix.
struct MatrixCase {
  std::string label;
  AnyObjective f;
  HasdConfig cfg;
  Vector x0;
};

/// p ∈ exponents × {diagonal quadratic, symmetric softmax, small LogSumExp}
/// × seeds, each with L from smoothness_bound scaled by l_scale and a
/// Gaussian start.
inline std::vector<MatrixCase> default_matrix(const CheckOptions& opt = {}) {
  std::vector<MatrixCase> cases;
  const Index d = 8;
  for (double p : opt.exponents) {
    const Geometry geom(p);
    for (std::uint64_t seed : opt.seeds) {
      const std::vector<std::pair<std::string, AnyObjective>> objectives = {
          {"quadratic", make_quadratic_instance(d, seed)},
          {"softmax", SymmetricSoftmax(0.5, d)},
          {"logsumexp", build_objective(ObjectiveSpec{"logsumexp", 20, d, 1e-2, 0.5, seed})},
      };
      Rng rng(seed * 104729 + 3);
      for (const auto& [name, f] : objectives) {
        HasdConfig c;
        c.L = smoothness_bound(f, geom) * opt.l_scale;
        c.geom = geom;
        c.max_iters = opt.iters;
        cases.push_back({name + " p=" + geom.label() + " seed=" + std::to_string(seed), f, c, random_normal(rng, d)});
      }
    }
  }
  return cases;
}

/// Geometry and objective probes plus every HASD invariant over the
/// default matrix.
inline CheckResult check_invariants(const CheckOptions& opt = {}) {
  CheckResult res;
  for (double p : opt.exponents) {
    const Geometry geom(p);
    for (std::uint64_t seed : opt.seeds) {
      Rng rng(seed * 7919 + 17);
      const Index d = 8;
      merge_into(res.report, {{"holder", probe_holder(geom, d, rng, opt.probes)},
                              {"norm_order", probe_norm_order(geom, d, rng, opt.probes)},
                              {"step_optimality", probe_step_optimality(geom, 4, rng, 20, 500)},
                              {"step_foc", probe_step_foc(geom, d, rng, opt.probes)}});
      if (!geom.is_inf()) {
        merge_into(res.report, {{"hessian_psd", probe_hessian_psd(p, d, rng, 20)},
                                {"hessian_witness", probe_hessian_witness(p, d, rng, 20)}});
      }
    }
  }
  for (const MatrixCase& mc : default_matrix(opt)) {
    Rng rng(res.runs + 1);
    const double L = mc.cfg.L / opt.l_scale;
    merge_into(res.report, {{"gradient_fd", probe_gradient(mc.f, rng, 10)},
                            {"convexity", probe_convexity(mc.f, rng, 50)},
                            {"smoothness", probe_smoothness(mc.f, L, mc.cfg.geom, rng, opt.probes)}});
    ++res.runs;
    try {
      const RunReport r = run(mc.f, mc.x0, mc.cfg);
      merge_into(res.report, r.invariants);
      if (!r.invariants_ok()) res.failures.push_back(mc.label);
    } catch (const CouplingSearchError& e) {
      res.report["coupling_search"].record(1.0);
      res.failures.push_back(mc.label + ": " + e.what());
    }
  }
  return res;
}

inline json to_json(const CheckResult& r) {
  json j = to_json(r.report);
  return {{"invariants", j}, {"failures", r.failures}, {"runs", r.runs}, {"ok", r.ok()}};
}

}  // namespace hasd
