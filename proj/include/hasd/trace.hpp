#pragma once

#include "hasd/core.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace hasd {

/// Quantities recorded at every accepted HASD step so the invariant checks can
/// be replayed from the trace alone.
struct StepDiagnostics {
  // ⟨∇f(x_{t+1}), y_t − x_{t+1}⟩ ≥ L‖x_{t+1} − y_t‖_p² ≥ ‖∇f(x_{t+1})‖²_{p*}/(9L)
  double progress_inner = 0.0;
  double progress_step = 0.0;
  double progress_grad = 0.0;
  // A_t f(x_t) + B_t ≤ ψ_t(v_t)
  double estimate_lhs = 0.0;
  double estimate_psi = 0.0;
  // √A_t ≥ Σ ratio / (18√L)
  double growth_sqrt_a = 0.0;
  double growth_rhs = 0.0;
  // window: ½ r ≤ ρ ≤ 2 r with r = ‖∇f‖₂²/‖∇f‖²_{p*}
  double window_ratio = 0.0;
  // 18 L ρ a² = A_prev + a
  double recurrence_lhs = 0.0;
  double recurrence_rhs = 0.0;
  double a_prev = 0.0;
  double a_next = 0.0;
  double psi_grad_at_v = 0.0;
  double psi_grad_scale = 0.0;
  double dual_ratio = 0.0;
  std::optional<double> v_dist_to_opt;
};

struct IterationTrace {
  int iter = 0;
  double f = 0.0;
  std::optional<double> gap;
  double grad_l2 = 0.0;
  double grad_dual = 0.0;
  // HASD-only columns
  std::optional<double> rho;
  std::optional<double> theta;
  std::optional<double> zeta;
  std::optional<int> search_calls;
  std::optional<double> a;
  std::optional<double> b;
  std::optional<double> g_running;
  bool early_stop = false;
  bool used_fallback = false;
  std::optional<StepDiagnostics> diag;
};

/// Outcome of one invariant across a run or a matrix of runs.
struct InvariantTally {
  long checked = 0;
  long failed = 0;
  long skipped = 0;
  double max_violation = 0.0;

  void record(double violation) {
    ++checked;
    if (violation > 0.0) ++failed;
    if (violation > max_violation) max_violation = violation;
  }
  void merge(const InvariantTally& o) {
    checked += o.checked;
    failed += o.failed;
    skipped += o.skipped;
    max_violation = std::max(max_violation, o.max_violation);
  }
  bool ok() const { return failed == 0; }
};

using InvariantReport = std::map<std::string, InvariantTally>;

inline void merge_into(InvariantReport& into, const InvariantReport& from) {
  for (const auto& [k, v] : from) into[k].merge(v);
}

struct RoundSummary {
  int round = 0;
  int iterations = 0;
  std::optional<double> start_gap;
  std::optional<double> end_gap;
  std::optional<double> g_mean;
};

struct RunReport {
  std::string method;
  double stepsize = 1.0;
  Vector x_final;
  double f_final = 0.0;
  std::optional<double> gap_final;
  std::optional<double> g_mean;  // 𝒢 = (1/T) Σ ‖∇f(x_{t+1})‖_{p*}/‖∇f(x_{t+1})‖₂
  int iterations = 0;
  long oracle_calls = 0;
  long value_calls = 0;
  std::optional<double> certificate_bound;  // 324 L R² / (𝒢² T²)
  std::optional<double> initial_distance;   // R = ‖x₀ − x*‖₂
  bool converged_early = false;
  bool diverged = false;
  std::vector<IterationTrace> trace;
  InvariantReport invariants;
  std::vector<RoundSummary> rounds;

  bool invariants_ok() const {
    for (const auto& [k, v] : invariants)
      if (!v.ok()) return false;
    return true;
  }
};

/// %.17g: round-trips every double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline constexpr std::string_view kTraceCsvHeader =
    "iter,f,gap,grad_l2,grad_dual,rho,theta,zeta,search_calls,A,B,G_running";

/// One row per trace entry; HASD-only and unknown-gap cells are empty.
/// The first line is a comment carrying the config hash.
inline void write_trace_csv(std::ostream& os, const RunReport& report, std::string_view config_hash) {
  os << "# method=" << report.method << " config_hash=" << config_hash << '\n';
  os << kTraceCsvHeader << '\n';
  const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const IterationTrace& r : report.trace) {
    os << r.iter << ',' << format_double(r.f) << ',' << opt(r.gap) << ',' << format_double(r.grad_l2) << ','
       << format_double(r.grad_dual) << ',' << opt(r.rho) << ',' << opt(r.theta) << ',' << opt(r.zeta) << ','
       << (r.search_calls ? std::to_string(*r.search_calls) : std::string()) << ',' << opt(r.a) << ','
       << opt(r.b) << ',' << opt(r.g_running) << '\n';
  }
}

inline nlohmann::json to_json(const InvariantReport& inv) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, t] : inv) {
    j[name] = {{"checked", t.checked}, {"failed", t.failed}, {"skipped", t.skipped}, {"max_violation", t.max_violation}};
  }
  return j;
}

inline nlohmann::json to_json(const RunReport& r) {
  const auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json j = {
      {"method", r.method},
      {"stepsize", r.stepsize},
      {"f_final", r.f_final},
      {"gap_final", opt(r.gap_final)},
      {"G", opt(r.g_mean)},
      {"T", r.iterations},
      {"oracle_calls", r.oracle_calls},
      {"value_calls", r.value_calls},
      {"certificate_bound", opt(r.certificate_bound)},
      {"initial_distance", opt(r.initial_distance)},
      {"converged_early", r.converged_early},
      {"diverged", r.diverged},
      {"invariants", to_json(r.invariants)},
  };
  if (!r.rounds.empty()) {
    nlohmann::json rounds = nlohmann::json::array();
    for (const RoundSummary& s : r.rounds) {
      rounds.push_back({{"round", s.round},
                        {"iterations", s.iterations},
                        {"start_gap", opt(s.start_gap)},
                        {"end_gap", opt(s.end_gap)},
                        {"G", opt(s.g_mean)}});
    }
    j["rounds"] = rounds;
  }
  return j;
}

/// FNV-1a over the canonical (key-sorted) JSON dump.
inline std::string config_hash(const nlohmann::json& config) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hasd
