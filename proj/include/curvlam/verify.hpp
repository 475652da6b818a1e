#pragma once

// Numerical check that elapsed time and both actions stay constant when the
// ends of an arc follow a Lambert path at fixed energy.
//
// The end pair is moved along the flow of a field on M x M; at each sampled
// pair the arc of the same energy is re-solved, warm-started from the
// previous sample so that every arc stays on the seed's branch.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "curvlam/bvp.hpp"
#include "curvlam/error.hpp"
#include "curvlam/geometry.hpp"
#include "curvlam/integrate.hpp"
#include "curvlam/lambert.hpp"
#include "curvlam/systems.hpp"

namespace curvlam {

class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class FlowField {
  Lambert,    // the system's non-trivial Lambert field
  Trivial,    // rotation about O
  Perturbed,  // rotation plus a translation of A alone; not a Lambert field
};

inline std::string to_string(FlowField field) {
  switch (field) {
    case FlowField::Trivial:
      return "trivial";
    case FlowField::Perturbed:
      return "perturbed";
    case FlowField::Lambert:
      break;
  }
  return "lambert";
}

inline FlowField parse_flow_field(const std::string& name) {
  if (name == "lambert") return FlowField::Lambert;
  if (name == "trivial") return FlowField::Trivial;
  if (name == "perturbed") return FlowField::Perturbed;
  throw ConfigError("unknown field '" + name + "'");
}

struct ExperimentConfig {
  std::string name;
  SystemSpec spec;
  EndPair start_pair;
  double energy = 0.0;
  double flow_span = 0.5;
  int n_samples = 20;
  std::uint64_t seed = 0;
  Tolerances tol;
  ShootingGuess guess;
  FlowField field = FlowField::Lambert;
  double flow_step = 1e-3;
  double spread_threshold = 1e-6;
  // Allowed invariant drift per unit of flow parameter.
  double drift_threshold = 1e-9;
};

struct ReportRow {
  double s = 0.0;
  EndPair pair;
  bool solved = false;
  std::string error;
  double dt = 0.0;
  double S = 0.0;
  double w = 0.0;
  InvariantPair invariants;
  double defect = 0.0;
  int iterations = 0;
};

struct ReportSummary {
  double spread_dt = 0.0;
  double spread_S = 0.0;
  double spread_w = 0.0;
  double invariant_drift = 0.0;
  double max_defect = 0.0;
  int solved = 0;
  bool flow_truncated = false;
  bool pass_dt = false;
  bool pass_S = false;
  bool pass_w = false;
  bool pass_invariants = false;
  bool pass_solved = false;
  bool pass = false;
};

struct Report {
  ExperimentConfig config;
  std::vector<ReportRow> rows;
  ReportSummary summary;
  std::string flow_error;
};

/// (max - min) / max(1, max |x|); the unit floor keeps near-zero actions
/// (e.g. S on a Hooke circle) from inflating the ratio.
inline double relative_spread(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  double scale = 1.0;
  for (const double v : values) scale = std::max(scale, std::abs(v));
  return (*hi - *lo) / scale;
}

inline PairField make_field(const SystemSpec& spec, FlowField field) {
  switch (field) {
    case FlowField::Trivial:
      return [](const EndPair& p) { return trivial_lambert_vector(p); };
    case FlowField::Perturbed:
      return [](const EndPair& p) {
        LambertVector X = trivial_lambert_vector(p);
        X.dA += Vec2(1.0, 0.0);
        return X;
      };
    case FlowField::Lambert:
      break;
  }
  return [spec](const EndPair& p) { return lambert_vector(spec, p); };
}

/// Recomputes the verdicts from the rows; used by run_theorem_check and
/// usable on a report read back from disk.
inline ReportSummary summarize(const ExperimentConfig& cfg, const std::vector<ReportRow>& rows,
                               bool flow_truncated) {
  ReportSummary sum;
  std::vector<double> dts, Ss, ws;
  const ReportRow* first = nullptr;
  for (const ReportRow& r : rows) {
    if (!first) first = &r;
    sum.invariant_drift =
        std::max({sum.invariant_drift, std::abs(r.invariants.first - first->invariants.first),
                  std::abs(r.invariants.second - first->invariants.second)});
    if (!r.solved) continue;
    ++sum.solved;
    dts.push_back(r.dt);
    Ss.push_back(r.S);
    ws.push_back(r.w);
    sum.max_defect = std::max(sum.max_defect, r.defect);
  }
  sum.spread_dt = relative_spread(dts);
  sum.spread_S = relative_spread(Ss);
  sum.spread_w = relative_spread(ws);
  sum.flow_truncated = flow_truncated;
  const double drift_limit = cfg.drift_threshold * std::max(1.0, cfg.flow_span);
  sum.pass_dt = sum.spread_dt <= cfg.spread_threshold;
  sum.pass_S = sum.spread_S <= cfg.spread_threshold;
  sum.pass_w = sum.spread_w <= cfg.spread_threshold;
  sum.pass_invariants = sum.invariant_drift <= drift_limit;
  sum.pass_solved = !flow_truncated && sum.solved == static_cast<int>(rows.size()) &&
                    static_cast<int>(rows.size()) == cfg.n_samples;
  sum.pass = sum.pass_dt && sum.pass_S && sum.pass_w && sum.pass_invariants && sum.pass_solved;
  return sum;
}

inline Report run_theorem_check(const ExperimentConfig& cfg) {
  if (cfg.n_samples < 2) throw ConfigError("n_samples must be at least 2");
  if (!(cfg.flow_span > 0.0)) throw ConfigError("flow_span must be positive");

  Report report;
  report.config = cfg;

  // Seed arc; failure here aborts the experiment.
  BvpSolution seed = solve_arc({cfg.spec, cfg.start_pair.A, cfg.start_pair.B, cfg.energy, cfg.guess},
                               cfg.tol);

  const FlowPath path =
      integrate_pair_field(cfg.spec, make_field(cfg.spec, cfg.field), cfg.start_pair,
                           uniform_grid(cfg.flow_span, static_cast<std::size_t>(cfg.n_samples)),
                           cfg.flow_step);
  if (path.truncated) report.flow_error = path.reason;

  const PairField field = make_field(cfg.spec, cfg.field);
  ShootingGuess guess{seed.psi, seed.arc.dt};
  for (std::size_t i = 0; i < path.pairs.size(); ++i) {
    ReportRow row;
    row.s = path.s[i];
    row.pair = path.pairs[i];
    row.invariants = invariant_pair(cfg.spec, row.pair);
    try {
      const BvpSolution sol =
          i == 0 ? seed
                 : solve_arc({cfg.spec, row.pair.A, row.pair.B, cfg.energy, guess}, cfg.tol);
      row.solved = true;
      row.dt = sol.arc.dt;
      row.S = sol.arc.S;
      row.w = sol.arc.w;
      row.iterations = sol.iterations;
      row.defect = lambert_defect(field(row.pair), sol.arc);
      guess = {sol.psi, sol.arc.dt};
    } catch (const Error& e) {
      row.error = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  report.summary = summarize(cfg, report.rows, path.truncated);
  return report;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline Vec2 json_point(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
    throw ConfigError(std::string("'") + key + "' must be a 2-element numeric array");
  }
  return {a[0].get<double>(), a[1].get<double>()};
}

template <typename T>
T json_get(const nlohmann::json& j, const char* key, std::optional<T> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(std::string("missing key '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("key '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  ExperimentConfig cfg;
  try {
    cfg.name = detail::json_get<std::string>(j, "name", std::string());
    cfg.spec.problem = parse_problem(detail::json_get<std::string>(j, "problem"));
    cfg.spec.space = parse_space(detail::json_get<std::string>(j, "space"));
    cfg.spec.force_sign = parse_force_sign(detail::json_get<int>(j, "force_sign", 1));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  cfg.start_pair = {detail::json_point(j, "a"), detail::json_point(j, "b")};
  cfg.energy = detail::json_get<double>(j, "energy");
  cfg.flow_span = detail::json_get<double>(j, "flow_span", 0.5);
  cfg.n_samples = detail::json_get<int>(j, "n_samples", 20);
  cfg.seed = detail::json_get<std::uint64_t>(j, "seed", 0);
  cfg.tol.rel = detail::json_get<double>(j, "tol_rel", cfg.tol.rel);
  cfg.tol.abs = detail::json_get<double>(j, "tol_abs", cfg.tol.abs);
  const Vec2 guess = detail::json_point(j, "guess");
  cfg.guess = {guess.x(), guess.y()};
  cfg.field = parse_flow_field(detail::json_get<std::string>(j, "field", std::string("lambert")));
  cfg.flow_step = detail::json_get<double>(j, "flow_step", cfg.flow_step);
  cfg.spread_threshold = detail::json_get<double>(j, "spread_threshold", cfg.spread_threshold);
  cfg.drift_threshold = detail::json_get<double>(j, "drift_threshold", cfg.drift_threshold);

  if (cfg.n_samples < 2) throw ConfigError("n_samples must be at least 2");
  if (!(cfg.flow_span > 0.0)) throw ConfigError("flow_span must be positive");
  if (!(cfg.tol.rel > 0.0) || !(cfg.tol.abs > 0.0)) throw ConfigError("tolerances must be positive");
  if (!(cfg.guess.dt > 0.0)) throw ConfigError("guess dt must be positive");
  if (!(cfg.flow_step > 0.0)) throw ConfigError("flow_step must be positive");
  try {
    check_chart_domain(cfg.spec.space, cfg.start_pair.A);
    check_chart_domain(cfg.spec.space, cfg.start_pair.B);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  return {{"name", cfg.name},
          {"problem", to_string(cfg.spec.problem)},
          {"space", to_string(cfg.spec.space)},
          {"force_sign", static_cast<int>(cfg.spec.force_sign)},
          {"a", {cfg.start_pair.A.x(), cfg.start_pair.A.y()}},
          {"b", {cfg.start_pair.B.x(), cfg.start_pair.B.y()}},
          {"energy", cfg.energy},
          {"flow_span", cfg.flow_span},
          {"n_samples", cfg.n_samples},
          {"seed", cfg.seed},
          {"tol_rel", cfg.tol.rel},
          {"tol_abs", cfg.tol.abs},
          {"guess", {cfg.guess.psi, cfg.guess.dt}},
          {"field", to_string(cfg.field)},
          {"flow_step", cfg.flow_step},
          {"spread_threshold", cfg.spread_threshold},
          {"drift_threshold", cfg.drift_threshold}};
}

inline nlohmann::json to_json(const Report& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const ReportRow& r : report.rows) {
    nlohmann::json row = {{"s", r.s},
                          {"a", {r.pair.A.x(), r.pair.A.y()}},
                          {"b", {r.pair.B.x(), r.pair.B.y()}},
                          {"solved", r.solved},
                          {"invariants", {r.invariants.first, r.invariants.second}}};
    if (r.solved) {
      row["dt"] = r.dt;
      row["S"] = r.S;
      row["w"] = r.w;
      row["defect"] = r.defect;
      row["iterations"] = r.iterations;
    } else {
      row["error"] = r.error;
    }
    rows.push_back(std::move(row));
  }
  const ReportSummary& s = report.summary;
  nlohmann::json summary = {{"spread_dt", s.spread_dt},
                            {"spread_S", s.spread_S},
                            {"spread_w", s.spread_w},
                            {"invariant_drift", s.invariant_drift},
                            {"max_defect", s.max_defect},
                            {"solved", s.solved},
                            {"flow_truncated", s.flow_truncated},
                            {"pass",
                             {{"dt", s.pass_dt},
                              {"S", s.pass_S},
                              {"w", s.pass_w},
                              {"invariants", s.pass_invariants},
                              {"solved", s.pass_solved},
                              {"all", s.pass}}}};
  nlohmann::json out = {{"config", to_json(report.config)}, {"rows", rows}, {"summary", summary}};
  if (!report.flow_error.empty()) out["flow_error"] = report.flow_error;
  return out;
}

/// Configs of a single-experiment document or of {"experiments": [...]}.
inline std::vector<ExperimentConfig> configs_from_json(const nlohmann::json& doc) {
  std::vector<ExperimentConfig> configs;
  if (doc.is_object() && doc.contains("experiments")) {
    if (!doc.at("experiments").is_array()) throw ConfigError("'experiments' must be an array");
    for (const auto& e : doc.at("experiments")) configs.push_back(config_from_json(e));
    if (configs.empty()) throw ConfigError("'experiments' is empty");
  } else {
    configs.push_back(config_from_json(doc));
  }
  return configs;
}

/// A report, or the error that stopped the experiment before sampling.
struct BatchResult {
  ExperimentConfig config;
  std::optional<Report> report;
  std::string error;

  bool pass() const { return report && report->summary.pass; }
};

/// Runs independent experiments concurrently; results keep the input order.
inline std::vector<BatchResult> run_batch(const std::vector<ExperimentConfig>& configs) {
  std::vector<std::future<Report>> jobs;
  jobs.reserve(configs.size());
  for (const auto& cfg : configs) {
    jobs.push_back(std::async(std::launch::async, [cfg] { return run_theorem_check(cfg); }));
  }
  std::vector<BatchResult> results;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    BatchResult r{configs[i], std::nullopt, {}};
    try {
      r.report = jobs[i].get();
    } catch (const Error& e) {
      r.error = e.what();
    }
    results.push_back(std::move(r));
  }
  return results;
}

inline nlohmann::json report_document(const std::vector<BatchResult>& results,
                                      bool with_timestamp = true) {
  nlohmann::json experiments = nlohmann::json::array();
  bool all = true;
  for (const BatchResult& r : results) {
    all = all && r.pass();
    if (r.report) {
      experiments.push_back(to_json(*r.report));
    } else {
      experiments.push_back({{"config", to_json(r.config)}, {"error", r.error}, {"pass", false}});
    }
  }
  nlohmann::json out = {{"schema", 1}, {"experiments", experiments}, {"pass", all}};
  if (with_timestamp) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    out["generated_at"] = buf;
  }
  return out;
}

/// Parses, runs and reports in one call. Returns the report document and
/// whether every experiment passed.
inline std::pair<nlohmann::json, bool> run_config(const nlohmann::json& doc,
                                                  bool with_timestamp = true) {
  const std::vector<BatchResult> results = run_batch(configs_from_json(doc));
  const bool all = std::all_of(results.begin(), results.end(),
                               [](const BatchResult& r) { return r.pass(); });
  return {report_document(results, with_timestamp), all};
}

}  // namespace curvlam
