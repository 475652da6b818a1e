// curvlam: command-line front end.
//
//   curvlam propagate --spec kepler:flat --q 1,0 --v 0,1 --dt 3.14159 [--csv out.csv]
//   curvlam project   --spec kepler:flat --target sphere --q 0.5,0 --v 0,1.3 --dt 1
//   curvlam flow      --spec hooke:sphere --a 0.5,0 --b 0,0.5 --span 0.5 [--h 1e-3] [--csv f.csv]
//   curvlam solve     --spec hooke:sphere --a 0.5,0 --b 0,0.5 --energy 0.8 --guess 1.57,1.5
//   curvlam verify    --config cfg.json [--csv-dir dir]
//
// Exit status: 0 success, 1 numerical or experiment failure, 2 usage error.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "curvlam/curvlam.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace curvlam;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("curvlam");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  const char* env = std::getenv("CURVLAM_LOG");
  if (!env) return;
  const std::string name = env;
  if (name == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (name == "warn") {
    spdlog::set_level(spdlog::level::warn);
  } else if (name == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (name == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::warn("ignoring CURVLAM_LOG={} (expected error, warn, info or debug)", name);
  }
}

Vec2 parse_pair(const std::string& text, const std::string& what) {
  std::stringstream ss(text);
  std::string item;
  std::vector<double> values;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(what + ": '" + text + "' is not a pair of numbers");
    }
  }
  if (values.size() != 2) throw UsageError(what + ": expected two comma-separated numbers");
  return {values[0], values[1]};
}

SystemSpec parse_spec_arg(const std::string& text) {
  try {
    return parse_spec(text);
  } catch (const Error& e) {
    throw UsageError(std::string("--spec: ") + e.what());
  }
}

ChartPoint parse_point(const std::string& text, const std::string& what, SpaceKind space) {
  const ChartPoint p = parse_pair(text, what);
  try {
    check_chart_domain(space, p);
  } catch (const Error& e) {
    throw UsageError(what + ": " + e.what());
  }
  return p;
}

void require_positive(double value, const std::string& what) {
  if (!(value > 0.0) || !std::isfinite(value)) throw UsageError(what + " must be positive");
}

json vec_json(const Vec2& v) { return {v.x(), v.y()}; }
json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

json state_json(SpaceKind space, const State& s) {
  json j = {{"t", s.t},
            {"chart_q", vec_json(chart_position(space, s))},
            {"chart_v", vec_json(chart_velocity(space, s))}};
  if (space != SpaceKind::Flat) {
    j["q"] = vec_json(s.q);
    j["v"] = vec_json(s.v);
  }
  return j;
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  return out;
}

void write_arc_file(const std::string& path, const Arc& arc) {
  if (path.empty()) return;
  std::ofstream out = open_output(path);
  write_arc_csv(out, arc);
  spdlog::info("wrote {} samples to {}", arc.samples.size(), path);
}

struct TolOptions {
  double rel = Tolerances{}.rel;
  double abs = Tolerances{}.abs;

  void add(CLI::App* cmd) {
    cmd->add_option("--tol-rel", rel, "relative integration tolerance")->capture_default_str();
    cmd->add_option("--tol-abs", abs, "absolute integration tolerance")->capture_default_str();
  }

  Tolerances get() const {
    require_positive(rel, "--tol-rel");
    require_positive(abs, "--tol-abs");
    Tolerances tol;
    tol.rel = rel;
    tol.abs = abs;
    return tol;
  }
};

// ---------------------------------------------------------------------------

struct PropagateCmd {
  std::string spec, q, v, csv;
  double dt = 0.0;
  TolOptions tol;

  void add(CLI::App& app) {
    CLI::App* cmd = app.add_subcommand("propagate", "propagate an orbit and report actions");
    cmd->add_option("--spec", spec, "system, e.g. kepler:flat or hooke:sphere:repulsive")->required();
    cmd->add_option("--q", q, "start position (chart), x,y")->required();
    cmd->add_option("--v", v, "start velocity (chart), vx,vy")->required();
    cmd->add_option("--dt", dt, "elapsed time")->required();
    cmd->add_option("--csv", csv, "write the sampled arc to this file");
    tol.add(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    const SystemSpec s = parse_spec_arg(spec);
    const ChartPoint p = parse_point(q, "--q", s.space);
    const Vec2 vel = parse_pair(v, "--v");
    require_positive(dt, "--dt");
    const Tolerances t = tol.get();
    const State start = make_state(s.space, p, vel);
    spdlog::debug("propagating {} from ({}, {}) for {}", to_string(s), p.x(), p.y(), dt);

    const Arc arc = propagate(s, start, dt, t);
    write_arc_file(csv, arc);
    print({{"spec", to_string(s)},
           {"dt", arc.dt},
           {"steps", arc.steps.size()},
           {"start", state_json(s.space, arc.start)},
           {"end", state_json(s.space, arc.end)},
           {"energy_start", total_energy(s, arc.start)},
           {"energy_end", total_energy(s, arc.end)},
           {"S", arc.S},
           {"w", arc.w}});
  }
};

struct ProjectCmd {
  std::string spec, target, q, v, csv;
  double dt = 0.0;
  TolOptions tol;

  void add(CLI::App& app) {
    CLI::App* cmd =
        app.add_subcommand("project", "project a flat arc onto a curved space and compare");
    cmd->add_option("--spec", spec, "flat system, e.g. kepler:flat")->required();
    cmd->add_option("--target", target, "sphere or hyperbolic")->required();
    cmd->add_option("--q", q, "flat start position, x,y")->required();
    cmd->add_option("--v", v, "flat start velocity, vx,vy")->required();
    cmd->add_option("--dt", dt, "flat elapsed time")->required();
    cmd->add_option("--csv", csv, "write the curved arc to this file");
    tol.add(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    const SystemSpec s = parse_spec_arg(spec);
    if (s.space != SpaceKind::Flat) throw UsageError("--spec must be a flat system");
    SpaceKind space;
    try {
      space = parse_space(target);
    } catch (const Error& e) {
      throw UsageError(std::string("--target: ") + e.what());
    }
    if (space == SpaceKind::Flat) throw UsageError("--target must be sphere or hyperbolic");
    const ChartPoint p = parse_point(q, "--q", space);
    const Vec2 vel = parse_pair(v, "--v");
    require_positive(dt, "--dt");
    const Tolerances t = tol.get();

    const ProjectionMap map(space);
    const Arc flat = propagate(s, make_state(SpaceKind::Flat, p, vel), dt, t);
    const ProjectionReport report = verify_projection(flat, map, t);
    spdlog::info("flat time {} maps to curved time {}", report.dt_flat, report.dt_curved);
    if (!csv.empty()) {
      const SystemSpec curved = map.target_spec(s);
      write_arc_file(csv, propagate(curved, project_state(map, flat.start), report.dt_curved, t));
    }
    print({{"spec", to_string(s)},
           {"target", to_string(map.target_spec(s))},
           {"dt_flat", report.dt_flat},
           {"dt_curved", report.dt_curved},
           {"projected_start", state_json(space, project_state(map, flat.start))},
           {"projected_end", state_json(space, project_state(map, flat.end))},
           {"endpoint_residual", report.endpoint_residual},
           {"max_sample_residual", report.max_sample_residual}});
  }
};

struct FlowCmd {
  std::string spec, a, b, csv, field = "lambert";
  double span = 0.0;
  double h = 1e-3;

  void add(CLI::App& app) {
    CLI::App* cmd = app.add_subcommand("flow", "move an end pair along a Lambert path");
    cmd->set_help_flag("--help", "print this help message and exit");
    cmd->add_option("--spec", spec, "system")->required();
    cmd->add_option("--a", a, "first end point (chart), x,y")->required();
    cmd->add_option("--b", b, "second end point (chart), x,y")->required();
    cmd->add_option("--span", span, "flow parameter length")->required();
    cmd->add_option("--h", h, "integration step")->capture_default_str();
    cmd->add_option("--field", field, "lambert, trivial or perturbed")->capture_default_str();
    cmd->add_option("--csv", csv, "write the path to this file");
    cmd->callback([this] { run(); });
  }

  void run() {
    const SystemSpec s = parse_spec_arg(spec);
    const EndPair start{parse_point(a, "--a", s.space), parse_point(b, "--b", s.space)};
    require_positive(span, "--span");
    require_positive(h, "--h");
    FlowField kind;
    try {
      kind = parse_flow_field(field);
    } catch (const Error& e) {
      throw UsageError(std::string("--field: ") + e.what());
    }

    const auto n = static_cast<std::size_t>(std::ceil(span / h - 1e-9));
    const FlowPath path =
        integrate_pair_field(s, make_field(s, kind), start, uniform_grid(span, n + 1), h);
    if (path.truncated) spdlog::warn("flow stopped at s = {}: {}", path.s.back(), path.reason);
    if (!csv.empty()) {
      std::ofstream out = open_output(csv);
      write_flow_csv(out, s, path);
    }

    const InvariantPair first = invariant_pair(s, path.pairs.front());
    double drift = 0.0;
    for (const EndPair& p : path.pairs) {
      const InvariantPair inv = invariant_pair(s, p);
      drift = std::max({drift, std::abs(inv.first - first.first),
                        std::abs(inv.second - first.second)});
    }
    const EndPair& last = path.pairs.back();
    const InvariantPair end = invariant_pair(s, last);
    json out = {{"spec", to_string(s)},
                {"field", to_string(kind)},
                {"span", path.s.back()},
                {"nodes", path.pairs.size()},
                {"start", {{"a", vec_json(start.A)}, {"b", vec_json(start.B)}}},
                {"end", {{"a", vec_json(last.A)}, {"b", vec_json(last.B)}}},
                {"invariants_start", {first.first, first.second}},
                {"invariants_end", {end.first, end.second}},
                {"max_invariant_drift", drift},
                {"truncated", path.truncated}};
    if (path.truncated) out["reason"] = path.reason;
    print(out);
    if (path.truncated) throw Error("flow left the domain");
  }
};

struct SolveCmd {
  std::string spec, a, b, guess, csv;
  double energy = 0.0;
  TolOptions tol;

  void add(CLI::App& app) {
    CLI::App* cmd = app.add_subcommand("solve", "find an arc from A to B at a given energy");
    cmd->add_option("--spec", spec, "system")->required();
    cmd->add_option("--a", a, "departure point (chart), x,y")->required();
    cmd->add_option("--b", b, "arrival point (chart), x,y")->required();
    cmd->add_option("--energy", energy, "total energy")->required();
    cmd->add_option("--guess", guess, "departure angle and elapsed time, psi,dt")->required();
    cmd->add_option("--csv", csv, "write the arc to this file");
    tol.add(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    const SystemSpec s = parse_spec_arg(spec);
    const ChartPoint A = parse_point(a, "--a", s.space);
    const ChartPoint B = parse_point(b, "--b", s.space);
    const Vec2 g = parse_pair(guess, "--guess");
    require_positive(g.y(), "--guess elapsed time");
    const Tolerances t = tol.get();
    try {
      initial_speed(s, A, energy);
    } catch (const Error& e) {
      throw UsageError(std::string("--energy: ") + e.what());
    }

    const BvpSolution sol = solve_arc({s, A, B, energy, {g.x(), g.y()}}, t);
    spdlog::info("converged in {} iterations, miss {}", sol.iterations, sol.miss);
    const Arc check = propagate(s, sol.arc.start, sol.arc.dt, t);
    write_arc_file(csv, sol.arc);
    print({{"spec", to_string(s)},
           {"a", vec_json(A)},
           {"b", vec_json(B)},
           {"energy", energy},
           {"psi", sol.psi},
           {"dt", sol.arc.dt},
           {"S", sol.arc.S},
           {"w", sol.arc.w},
           {"v_a", vec_json(chart_velocity(s.space, sol.arc.start))},
           {"v_b", vec_json(chart_velocity(s.space, sol.arc.end))},
           {"iterations", sol.iterations},
           {"miss", sol.miss},
           {"arc_energy", sol.arc.energy()},
           {"repropagation_miss", (chart_position(s.space, check.end) - B).norm()}});
  }
};

struct VerifyCmd {
  std::string config, csv_dir;
  bool no_timestamp = false;

  void add(CLI::App& app) {
    CLI::App* cmd = app.add_subcommand("verify", "run theorem-check experiments from a config");
    cmd->add_option("--config", config, "experiment config (JSON)")->required();
    cmd->add_option("--csv-dir", csv_dir, "write per-experiment sample tables here");
    cmd->add_flag("--no-timestamp", no_timestamp, "omit generated_at from the report");
    cmd->callback([this] { run(); });
  }

  void run() {
    std::ifstream in(config);
    if (!in) throw UsageError("cannot read '" + config + "'");
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError(config + ": " + e.what());
    }
    std::vector<ExperimentConfig> configs;
    try {
      configs = configs_from_json(doc);
    } catch (const Error& e) {
      throw UsageError(config + ": " + e.what());
    }
    if (!csv_dir.empty()) {
      std::error_code ec;
      fs::create_directories(csv_dir, ec);
      if (ec) throw UsageError("cannot create '" + csv_dir + "': " + ec.message());
    }

    spdlog::info("running {} experiment(s)", configs.size());
    const std::vector<BatchResult> results = run_batch(configs);
    bool all = true;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const BatchResult& r = results[i];
      const std::string name = r.config.name.empty() ? "experiment_" + std::to_string(i) : r.config.name;
      all = all && r.pass();
      if (!r.report) {
        spdlog::error("{}: {}", name, r.error);
        continue;
      }
      const ReportSummary& sum = r.report->summary;
      spdlog::info("{}: spreads dt {:.3g} S {:.3g} w {:.3g}, drift {:.3g}, {}", name, sum.spread_dt,
                   sum.spread_S, sum.spread_w, sum.invariant_drift, sum.pass ? "pass" : "FAIL");
      for (const ReportRow& row : r.report->rows) {
        if (!row.solved) spdlog::warn("{}: s = {}: {}", name, row.s, row.error);
      }
      if (!csv_dir.empty()) write_rows(fs::path(csv_dir) / (name + ".csv"), *r.report);
    }
    print(report_document(results, !no_timestamp));
    if (!all) throw Error("at least one experiment failed");
  }

  static void write_rows(const fs::path& path, const Report& report) {
    std::ofstream out = open_output(path);
    out << "s,A_x,A_y,B_x,B_y,invariant1,invariant2,solved,dt,S,w,defect,iterations\n";
    for (const ReportRow& r : report.rows) {
      out << format_number(r.s) << ',' << format_number(r.pair.A.x()) << ','
          << format_number(r.pair.A.y()) << ',' << format_number(r.pair.B.x()) << ','
          << format_number(r.pair.B.y()) << ',' << format_number(r.invariants.first) << ','
          << format_number(r.invariants.second) << ',' << (r.solved ? 1 : 0);
      if (r.solved) {
        out << ',' << format_number(r.dt) << ',' << format_number(r.S) << ','
            << format_number(r.w) << ',' << format_number(r.defect) << ',' << r.iterations;
      } else {
        out << ",,,,,";
      }
      out << '\n';
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Lambert-type invariance checks for Kepler and Hooke problems"};
  app.require_subcommand(1);

  PropagateCmd propagate_cmd;
  ProjectCmd project_cmd;
  FlowCmd flow_cmd;
  SolveCmd solve_cmd;
  VerifyCmd verify_cmd;
  propagate_cmd.add(app);
  project_cmd.add(app);
  flow_cmd.add(app);
  solve_cmd.add(app);
  verify_cmd.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return 0;
}
