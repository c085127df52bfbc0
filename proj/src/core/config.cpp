#include "config.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>

#include "calibration.hpp"
#include "error.hpp"
#include "linalg.hpp"
#include "rng.hpp"

namespace neckcalib {

namespace {

constexpr std::uint64_t kSelftestSalt = 0xC0B1E7ULL;

struct CommandInfo {
  Command command;
  const char* name;
  std::vector<const char*> keys;
};

const std::vector<CommandInfo>& command_table() {
  static const std::vector<CommandInfo> table{
      {Command::selftest, "selftest", {"instances", "max_n"}},
      {Command::find_q0, "find-q0", {"grid", "refine_tol"}},
      {Command::calibrate, "calibrate", {"grid", "refine_tol", "points", "frames_per_point", "mode"}},
      {Command::comass_max, "comass-max", {"grid", "refine_tol", "restarts", "iters", "initial_step", "decay"}},
      {Command::probe,
       "probe",
       {"grid", "refine_tol", "points", "frames_per_point", "restarts", "iters", "initial_step", "decay"}},
      {Command::volume_compare,
       "volume-compare",
       {"grid", "refine_tol", "nodes_per_angle", "modes", "amplitudes", "trials"}},
      {Command::minimality, "minimality", {"grid", "refine_tol", "nodes_per_angle", "modes", "step"}},
  };
  return table;
}

const CommandInfo& info(Command c) {
  for (const auto& i : command_table())
    if (i.command == c) return i;
  fail(ErrorKind::config, "unknown command");
}

std::uint64_t read_count(const Json& j, const std::string& key) {
  require(j.is_number_integer(), ErrorKind::config, key + " must be an integer");
  require(j.is_number_unsigned() || j.get<std::int64_t>() >= 0, ErrorKind::config, key + " must be >= 0");
  return j.get<std::uint64_t>();
}

int read_int(const Json& j, const std::string& key) {
  const std::uint64_t v = read_count(j, key);
  require(v <= 1000000000ULL, ErrorKind::config, key + " is too large");
  return static_cast<int>(v);
}

double read_real(const Json& j, const std::string& key) {
  require(j.is_number(), ErrorKind::config, key + " must be a number");
  const double v = j.get<double>();
  require(std::isfinite(v), ErrorKind::config, key + " must be finite");
  return v;
}

void read_param(CommandParams& p, const std::string& key, const Json& v) {
  const std::string where = "command parameter " + key;
  if (key == "grid") {
    p.grid = read_int(v, where);
    require(p.grid >= 3, ErrorKind::config, "grid must be >= 3");
  } else if (key == "refine_tol") {
    p.refine_tol = read_real(v, where);
    require(p.refine_tol > 0.0, ErrorKind::config, "refine_tol must be > 0");
  } else if (key == "points") {
    p.points = read_count(v, where);
  } else if (key == "frames_per_point") {
    p.frames_per_point = read_count(v, where);
  } else if (key == "mode") {
    require(v.is_string(), ErrorKind::config, where + " must be a string");
    p.mode = v.get<std::string>();
    require(p.mode == "random" || p.mode == "lifted", ErrorKind::config, "mode must be 'random' or 'lifted'");
  } else if (key == "restarts") {
    p.restarts = read_int(v, where);
  } else if (key == "iters") {
    p.iters = read_int(v, where);
  } else if (key == "initial_step") {
    p.initial_step = read_real(v, where);
    require(p.initial_step > 0.0, ErrorKind::config, "initial_step must be > 0");
  } else if (key == "decay") {
    p.decay = read_real(v, where);
    require(p.decay > 0.0 && p.decay < 1.0, ErrorKind::config, "decay must lie in (0, 1)");
  } else if (key == "instances") {
    p.instances = read_count(v, where);
  } else if (key == "max_n") {
    p.max_n = read_int(v, where);
    require(p.max_n >= 1 && p.max_n <= linalg::kMaxUniverse, ErrorKind::config, "max_n must lie in 1..20");
  } else if (key == "nodes_per_angle") {
    p.nodes_per_angle = read_int(v, where);
    require(p.nodes_per_angle >= 1, ErrorKind::config, "nodes_per_angle must be >= 1");
  } else if (key == "modes") {
    require(v.is_array(), ErrorKind::config, where + " must be an array of strings");
    p.modes.clear();
    for (const auto& m : v) {
      require(m.is_string(), ErrorKind::config, where + " must be an array of strings");
      p.modes.push_back(m.get<std::string>());
    }
  } else if (key == "amplitudes") {
    require(v.is_array(), ErrorKind::config, where + " must be an array of numbers");
    p.amplitudes.clear();
    for (const auto& a : v) p.amplitudes.push_back(read_real(a, where));
  } else if (key == "trials") {
    p.trials = read_count(v, where);
  } else if (key == "step") {
    p.step = read_real(v, where);
    require(p.step > 0.0, ErrorKind::config, "step must be > 0");
  } else {
    fail(ErrorKind::config, "unknown command parameter '" + key + "'");
  }
}

Json param_json(const CommandParams& p, const std::string& key) {
  if (key == "grid") return p.grid;
  if (key == "refine_tol") return p.refine_tol;
  if (key == "points") return p.points;
  if (key == "frames_per_point") return p.frames_per_point;
  if (key == "mode") return p.mode;
  if (key == "restarts") return p.restarts;
  if (key == "iters") return p.iters;
  if (key == "initial_step") return p.initial_step;
  if (key == "decay") return p.decay;
  if (key == "instances") return p.instances;
  if (key == "max_n") return p.max_n;
  if (key == "nodes_per_angle") return p.nodes_per_angle;
  if (key == "modes") return p.modes;
  if (key == "amplitudes") return p.amplitudes;
  if (key == "trials") return p.trials;
  if (key == "step") return p.step;
  fail(ErrorKind::config, "unknown command parameter '" + key + "'");
}

// ---- selftest ---------------------------------------------------------------

linalg::DenseMatrix gaussian_matrix(int rows, int cols, CounterRng& rng) {
  std::vector<double> e(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  rng.fill_normal(e);
  return linalg::DenseMatrix(rows, cols, std::move(e));
}

Json run_selftest(const CommandParams& p, std::uint64_t seed, bool& passed) {
  constexpr double tol = 1e-9;
  std::uint64_t cb_fail = 0, weighted_fail = 0, unit_fail = 0;
  double cb_worst = 0.0, weighted_worst = 0.0;
  for (std::uint64_t i = 0; i < p.instances; ++i) {
    CounterRng rng = stream_for(seed ^ kSelftestSalt, i);
    const int n = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(p.max_n));
    const int k = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n));
    const auto a = gaussian_matrix(k, n, rng);
    const auto cb = linalg::cauchy_binet_check(a);
    const double cb_gap = linalg::relative_gap(cb.lhs, cb.rhs);
    cb_worst = std::max(cb_worst, cb_gap);
    if (!(cb_gap <= tol)) ++cb_fail;

    const auto b = gaussian_matrix(k, n, rng);
    Vec w(static_cast<std::size_t>(n));
    for (double& x : w) x = rng.uniform(0.1, 4.0);
    const double expansion = linalg::weighted_minor_expansion(b, w);
    const double direct = linalg::det(linalg::weighted_gram(b, w));
    const double w_gap = linalg::relative_gap(direct, expansion);
    weighted_worst = std::max(weighted_worst, w_gap);
    if (!(w_gap <= tol)) ++weighted_fail;

    const Vec ones(static_cast<std::size_t>(n), 1.0);
    if (linalg::weighted_minor_expansion(b, ones) != linalg::cauchy_binet_check(b).rhs) ++unit_fail;
  }

  // One-row B: the minors are the entries, so the expansion is w1 + w2 while
  // the full-product reading would be 3 w1 w2 w3.
  const auto witness_b = linalg::DenseMatrix::from_rows({{1.0, 1.0, 0.0}});
  const Vec witness_w{2.0, 3.0, 5.0};
  const double corrected = linalg::weighted_minor_expansion(witness_b, witness_w);
  const double uncorrected = witness_w[0] * witness_w[1] * witness_w[2] * linalg::cauchy_binet_check(witness_b).rhs;
  const bool witness_ok = std::abs(corrected - 5.0) <= 1e-12 && std::abs(uncorrected - corrected) > 1.0;

  passed = cb_fail == 0 && weighted_fail == 0 && unit_fail == 0 && witness_ok;
  return Json{{"instances", p.instances},
              {"max_n", p.max_n},
              {"cauchy_binet", {{"failures", cb_fail}, {"max_relative_gap", cb_worst}}},
              {"weighted_expansion", {{"failures", weighted_fail}, {"max_relative_gap", weighted_worst}}},
              {"unit_weights", {{"failures", unit_fail}}},
              {"witness",
               {{"b", {1.0, 1.0, 0.0}},
                {"w", witness_w},
                {"expansion", corrected},
                {"full_product_form", uncorrected},
                {"differs", witness_ok}}},
              {"passed", passed}};
}

std::vector<Mode> resolve_modes(const CommandParams& p, int n) {
  if (p.modes.empty()) return all_modes(n);
  std::vector<Mode> modes;
  for (const auto& m : p.modes) modes.push_back(Mode::parse(m, n));
  return modes;
}

Json vec_or_null(const Vec& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number_or_null(x));
  return a;
}

// ---- CSV ----------------------------------------------------------------------

std::string csv_number(const Json& j) {
  if (j.is_null()) return "";
  if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
  if (j.is_number_integer()) return j.dump();
  if (j.is_number()) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", j.get<double>());
    return buf;
  }
  if (j.is_array()) {
    std::string out;
    for (std::size_t i = 0; i < j.size(); ++i) out += (i ? ";" : "") + csv_number(j[i]);
    return out;
  }
  const std::string s = j.is_string() ? j.get<std::string>() : j.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
  return quoted + "\"";
}

Json frame_fiber_norm(const Json& frame) {
  if (frame.is_null()) return nullptr;
  double s = 0.0;
  for (const auto& v : frame["vectors"])
    for (const auto& x : v["fiber"]) s += x.get<double>() * x.get<double>();
  return std::sqrt(s);
}

Json frame_q_norm(const Json& frame) {
  if (frame.is_null()) return nullptr;
  double s = 0.0;
  for (const auto& x : frame["point"]["q"]) s += x.get<double>() * x.get<double>();
  return std::sqrt(s);
}

}  // namespace

const char* to_string(Command c) noexcept {
  for (const auto& i : command_table())
    if (i.command == c) return i.name;
  return "unknown";
}

std::optional<Command> parse_command(const std::string& name) noexcept {
  for (const auto& i : command_table())
    if (name == i.name) return i.command;
  return std::nullopt;
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::numerical_degeneracy:
    case ErrorKind::sampling:
    case ErrorKind::state: return 2;
    default: return 1;
  }
}

RunConfig parse_config(const Json& doc) {
  require(doc.is_object(), ErrorKind::config, "config must be a JSON object");
  for (const auto& [key, value] : doc.items())
    require(key == "spec" || key == "command" || key == "seed" || key == "output", ErrorKind::config,
            "unknown config field '" + key + "'");
  RunConfig cfg;

  require(doc.contains("command"), ErrorKind::config, "config is missing the command block");
  const Json& cmd = doc["command"];
  require(cmd.is_object() && cmd.size() == 1, ErrorKind::config, "command must hold exactly one command block");
  const std::string name = cmd.begin().key();
  const auto command = parse_command(name);
  require(command.has_value(), ErrorKind::config, "unknown command '" + name + "'");
  cfg.command = *command;
  const Json& params = cmd.begin().value();
  require(params.is_object(), ErrorKind::config, "command block '" + name + "' must be an object");
  const auto& allowed = info(cfg.command).keys;
  for (const auto& [key, value] : params.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    require(ok, ErrorKind::config, "command '" + name + "' does not take parameter '" + key + "'");
    read_param(cfg.params, key, value);
  }

  if (doc.contains("seed")) {
    const Json& s = doc["seed"];
    require(s.is_number_unsigned() || (s.is_number_integer() && s.get<std::int64_t>() >= 0), ErrorKind::config,
            "seed must be an unsigned 64-bit integer");
    cfg.seed = s.get<std::uint64_t>();
  }

  if (doc.contains("output")) {
    const Json& o = doc["output"];
    require(o.is_object(), ErrorKind::config, "output must be an object");
    for (const auto& [key, value] : o.items()) {
      if (key == "path") {
        require(value.is_string() || value.is_null(), ErrorKind::config, "output.path must be a string");
        cfg.output.path = value.is_string() ? value.get<std::string>() : std::string();
      } else if (key == "format") {
        require(value.is_string() && (value == "json" || value == "csv"), ErrorKind::config,
                "output.format must be 'json' or 'csv'");
        cfg.output.format = value == "csv" ? OutputFormat::csv : OutputFormat::json;
      } else {
        fail(ErrorKind::config, "unknown output field '" + key + "'");
      }
    }
  }

  if (doc.contains("spec") && !doc["spec"].is_null()) {
    cfg.spec = spec_to_json(spec_from_json(doc["spec"]));
  } else {
    require(cfg.command == Command::selftest, ErrorKind::config, "command '" + name + "' needs a spec");
  }
  if (cfg.spec && (cfg.command == Command::volume_compare || cfg.command == Command::minimality)) {
    const int n = (*cfg.spec)["n"].get<int>();
    for (const auto& m : cfg.params.modes) Mode::parse(m, n);
  }
  return cfg;
}

Json emit_config(const RunConfig& config) {
  Json params = Json::object();
  for (const char* key : info(config.command).keys) params[key] = param_json(config.params, key);
  Json doc{{"command", {{to_string(config.command), params}}},
           {"seed", config.seed},
           {"output",
            {{"path", config.output.path}, {"format", config.output.format == OutputFormat::csv ? "csv" : "json"}}}};
  if (config.spec) doc["spec"] = *config.spec;
  return doc;
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string::npos && eq > 0, ErrorKind::config,
          "override '" + assignment + "' must look like key.path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  require(doc.is_object(), ErrorKind::config, "config must be a JSON object");
  Json* node = &doc;
  std::size_t pos = 0;
  while (true) {
    const auto dot = path.find('.', pos);
    const std::string seg = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    require(!seg.empty(), ErrorKind::config, "override path '" + path + "' has an empty segment");
    Json* next = nullptr;
    if (node->is_array()) {
      require(seg.find_first_not_of("0123456789") == std::string::npos, ErrorKind::config,
              "override path '" + path + "' indexes an array with '" + seg + "'");
      const std::size_t idx = std::stoul(seg);
      require(idx < node->size(), ErrorKind::config, "override path '" + path + "' index out of range");
      next = &(*node)[idx];
    } else {
      if (node->is_null()) *node = Json::object();
      require(node->is_object(), ErrorKind::config, "override path '" + path + "' descends into a scalar");
      next = &(*node)[seg];
    }
    if (dot == std::string::npos) {
      *next = value;
      return;
    }
    node = next;
    pos = dot + 1;
  }
}

RunResult run(const RunConfig& config, unsigned threads) {
  RunResult out;
  Json report{{"command", to_string(config.command)},
              {"config", emit_config(config)},
              {"seed", config.seed},
              {"coordinatewise_min", nullptr},
              {"q0", nullptr}};
  const CommandParams& p = config.params;

  if (config.command == Command::selftest) {
    bool passed = false;
    report["result"] = run_selftest(p, config.seed, passed);
    out.exit_code = passed ? 0 : 2;
    out.report = std::move(report);
    return out;
  }

  const NeckSpec raw = spec_from_json(*config.spec);
  const Q0Result q0 = find_q0(raw, p.grid, p.refine_tol);
  const NeckSpec spec = raw.with_q0(q0);
  report["coordinatewise_min"] = q0.coordinatewise_min;
  report["q0"] = vec_or_null(q0.q0);

  switch (config.command) {
    case Command::find_q0:
      report["result"] = {{"q0", vec_or_null(q0.q0)},
                          {"product", number_or_null(q0.product)},
                          {"coordinatewise_min", q0.coordinatewise_min}};
      break;
    case Command::calibrate: {
      SweepOptions o{p.points, p.frames_per_point, config.seed, threads,
                     p.mode == "lifted" ? SweepMode::lifted_at_q0 : SweepMode::random_frames};
      const ComassReport r = comass_sweep(spec, o);
      report["result"] = comass_report_to_json(r);
      if (!r.violations.empty()) out.exit_code = 3;
      break;
    }
    case Command::comass_max: {
      SearchOptions o{p.restarts, p.iters, config.seed, threads, p.initial_step, p.decay};
      const SearchResult r = max_ratio_search(spec, o);
      report["result"] = search_result_to_json(r);
      if (r.ratio > 1.0 + kViolationTol) out.exit_code = 3;
      break;
    }
    case Command::probe: {
      ProbeOptions o;
      o.sweep = {p.points, p.frames_per_point, config.seed, threads, SweepMode::random_frames};
      o.search = {p.restarts, p.iters, config.seed, threads, p.initial_step, p.decay};
      const ProbeReport r = probe_hypothesis(spec, o);
      report["result"] = probe_report_to_json(r);
      if (r.witness) out.exit_code = 3;
      break;
    }
    case Command::volume_compare: {
      const QuadratureRule rule(spec.n(), p.nodes_per_angle);
      PerturbationOptions o{resolve_modes(p, spec.n()), p.amplitudes, p.trials, config.seed, threads};
      const VolumeReport r = perturbation_test(spec, o, rule);
      report["result"] = volume_report_to_json(r);
      if (r.min_excess < -kExcessTol) out.exit_code = 3;
      break;
    }
    case Command::minimality: {
      const QuadratureRule rule(spec.n(), p.nodes_per_angle);
      const VolumeReport r = mean_curvature_defect(spec, resolve_modes(p, spec.n()), p.step, rule, threads);
      report["result"] = volume_report_to_json(r);
      break;
    }
    case Command::selftest: break;
  }
  out.report = std::move(report);
  return out;
}

const std::vector<std::string>& csv_columns(Command c) {
  static const std::vector<std::string> selftest{"command", "seed", "instances", "cauchy_binet_failures",
                                                 "weighted_failures", "unit_weight_failures", "witness_differs",
                                                 "passed"};
  static const std::vector<std::string> find_q0{"command", "spec_id", "seed", "coordinatewise_min", "q0", "product"};
  static const std::vector<std::string> calibrate{"command", "spec_id", "seed", "coordinatewise_min", "q0",
                                                  "samples", "max_ratio", "violations", "wall_time_s"};
  static const std::vector<std::string> comass_max{"command", "spec_id",    "seed",  "coordinatewise_min",
                                                   "q0",      "max_ratio", "fiber_norm", "q_norm"};
  static const std::vector<std::string> probe{"command",       "spec_id",         "seed",        "coordinatewise_min",
                                              "q0",            "max_ratio",       "witness",     "sweep_samples",
                                              "sweep_max_ratio", "search_ratio",  "wall_time_s"};
  static const std::vector<std::string> volume{"command", "spec_id",  "seed",       "coordinatewise_min", "q0",
                                               "baseline_volume", "entries", "min_excess", "defect"};
  switch (c) {
    case Command::selftest: return selftest;
    case Command::find_q0: return find_q0;
    case Command::calibrate: return calibrate;
    case Command::comass_max: return comass_max;
    case Command::probe: return probe;
    case Command::volume_compare:
    case Command::minimality: return volume;
  }
  return selftest;
}

std::string render_report(const Json& report, OutputFormat format) {
  if (format == OutputFormat::json) return report.dump(2) + "\n";

  const auto command = parse_command(report.at("command").get<std::string>());
  require(command.has_value(), ErrorKind::config, "report has an unknown command");
  const Json& r = report.at("result");
  const Json spec_id = report["config"].contains("spec") ? report["config"]["spec"]["id"] : Json(nullptr);

  Json row = Json::object();
  row["command"] = report["command"];
  row["spec_id"] = spec_id;
  row["seed"] = report["seed"];
  row["coordinatewise_min"] = report["coordinatewise_min"];
  row["q0"] = report["q0"];
  switch (*command) {
    case Command::selftest:
      row["instances"] = r["instances"];
      row["cauchy_binet_failures"] = r["cauchy_binet"]["failures"];
      row["weighted_failures"] = r["weighted_expansion"]["failures"];
      row["unit_weight_failures"] = r["unit_weights"]["failures"];
      row["witness_differs"] = r["witness"]["differs"];
      row["passed"] = r["passed"];
      break;
    case Command::find_q0: row["product"] = r["product"]; break;
    case Command::calibrate:
      row["samples"] = r["samples"];
      row["max_ratio"] = r["max_ratio"];
      row["violations"] = r["violations"].size();
      row["wall_time_s"] = r["wall_time_s"];
      break;
    case Command::comass_max:
      row["max_ratio"] = r["ratio"];
      row["fiber_norm"] = frame_fiber_norm(r["frame"]);
      row["q_norm"] = frame_q_norm(r["frame"]);
      break;
    case Command::probe:
      row["max_ratio"] = r["max_ratio"];
      row["witness"] = r["witness"].is_null() ? Json(nullptr) : r["witness"]["ratio"];
      row["sweep_samples"] = r["sweep"]["samples"];
      row["sweep_max_ratio"] = r["sweep"]["max_ratio"];
      row["search_ratio"] = r["search"]["ratio"];
      row["wall_time_s"] = r["sweep"]["wall_time_s"];
      break;
    case Command::volume_compare:
    case Command::minimality:
      row["baseline_volume"] = r["baseline_volume"];
      row["entries"] = r["entries"].size();
      row["min_excess"] = r["min_excess"];
      row["defect"] = r["defect"];
      break;
  }

  std::string header, line;
  const auto& cols = csv_columns(*command);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    header += (i ? "," : "") + cols[i];
    line += (i ? "," : "") + csv_number(row.contains(cols[i]) ? row[cols[i]] : Json(nullptr));
  }
  return header + "\n" + line + "\n";
}

}  // namespace neckcalib
