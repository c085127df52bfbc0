#include "neckcalib/neckcalib.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "calibration.hpp"
#include "catalog.hpp"
#include "config.hpp"
#include "error.hpp"
#include "serialization.hpp"

using namespace neckcalib;

struct nc_config {
  Json doc = Json::object();
};

struct nc_report {
  RunResult result;
  OutputFormat format = OutputFormat::json;
  std::string path;
};

struct nc_spec {
  NeckSpec spec;
};

namespace {

thread_local std::string g_last_error;

nc_status status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return NC_ERR_INVALID_ARGUMENT;
    case ErrorKind::domain: return NC_ERR_DOMAIN;
    case ErrorKind::spec_violation: return NC_ERR_SPEC_VIOLATION;
    case ErrorKind::numerical_degeneracy: return NC_ERR_NUMERICAL_DEGENERACY;
    case ErrorKind::state: return NC_ERR_STATE;
    case ErrorKind::sampling: return NC_ERR_SAMPLING;
    case ErrorKind::config: return NC_ERR_CONFIG;
    case ErrorKind::io: return NC_ERR_IO;
  }
  return NC_ERR_INTERNAL;
}

template <class F>
nc_status guarded(F&& fn) {
  try {
    fn();
    g_last_error.clear();
    return NC_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("malformed JSON: ") + e.what();
    return NC_ERR_CONFIG;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return NC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NC_ERR_INTERNAL;
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

void need(const void* p, const char* what) {
  require(p != nullptr, ErrorKind::invalid_argument, std::string(what) + " must not be NULL");
}

Json parse_json_text(const std::string& text, const std::string& origin) {
  Json doc = Json::parse(text, nullptr, false);
  require(!doc.is_discarded(), ErrorKind::config, origin + " is not valid JSON");
  return doc;
}

}  // namespace

extern "C" {

const char* nc_last_error(void) { return g_last_error.c_str(); }

int nc_status_exit_code(nc_status status) {
  switch (status) {
    case NC_OK: return 0;
    case NC_ERR_NUMERICAL_DEGENERACY: return exit_code_for(ErrorKind::numerical_degeneracy);
    case NC_ERR_SAMPLING: return exit_code_for(ErrorKind::sampling);
    case NC_ERR_STATE: return exit_code_for(ErrorKind::state);
    case NC_ERR_INTERNAL: return 2;
    default: return 1;
  }
}

void nc_string_free(char* s) { std::free(s); }

nc_status nc_config_parse(const char* json_text, nc_config** out) {
  return guarded([&] {
    need(json_text, "json_text");
    need(out, "out");
    auto cfg = std::make_unique<nc_config>();
    cfg->doc = parse_json_text(json_text, "config");
    require(cfg->doc.is_object(), ErrorKind::config, "config must be a JSON object");
    *out = cfg.release();
  });
}

nc_status nc_config_load(const char* path, nc_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, std::string("cannot read config file '") + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    auto cfg = std::make_unique<nc_config>();
    cfg->doc = parse_json_text(ss.str(), std::string("config file '") + path + "'");
    require(cfg->doc.is_object(), ErrorKind::config, "config must be a JSON object");
    *out = cfg.release();
  });
}

nc_status nc_config_new(nc_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new nc_config;
  });
}

void nc_config_free(nc_config* config) { delete config; }

nc_status nc_config_set(nc_config* config, const char* assignment) {
  return guarded([&] {
    need(config, "config");
    need(assignment, "assignment");
    apply_override(config->doc, assignment);
  });
}

nc_status nc_config_select_command(nc_config* config, const char* command) {
  return guarded([&] {
    need(config, "config");
    need(command, "command");
    require(parse_command(command).has_value(), ErrorKind::config, std::string("unknown command '") + command + "'");
    Json& doc = config->doc;
    if (doc.contains("command") && doc["command"].is_object() && !doc["command"].empty()) {
      const Json& block = doc["command"];
      require(block.size() == 1 && block.contains(command), ErrorKind::config,
              std::string("config holds a command block other than '") + command + "'");
      return;
    }
    doc["command"] = Json{{command, Json::object()}};
  });
}

nc_status nc_config_set_seed(nc_config* config, uint64_t seed) {
  return guarded([&] {
    need(config, "config");
    config->doc["seed"] = seed;
  });
}

nc_status nc_config_set_output(nc_config* config, const char* path, const char* format) {
  return guarded([&] {
    need(config, "config");
    Json& doc = config->doc;
    if (!doc.contains("output") || !doc["output"].is_object()) doc["output"] = Json::object();
    if (path != nullptr) doc["output"]["path"] = path;
    if (format != nullptr) {
      const std::string f = format;
      require(f == "json" || f == "csv", ErrorKind::config, "output format must be json or csv, not '" + f + "'");
      doc["output"]["format"] = f;
    }
  });
}

nc_status nc_config_emit(const nc_config* config, char** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = copy_string(emit_config(parse_config(config->doc)).dump(2) + "\n");
  });
}

nc_status nc_run(const nc_config* config, unsigned threads, nc_report** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    const RunConfig cfg = parse_config(config->doc);
    auto report = std::make_unique<nc_report>();
    report->result = run(cfg, threads);
    report->format = cfg.output.format;
    report->path = cfg.output.path;
    *out = report.release();
  });
}

void nc_report_free(nc_report* report) { delete report; }

int nc_report_exit_code(const nc_report* report) { return report == nullptr ? 2 : report->result.exit_code; }

nc_status nc_report_render(const nc_report* report, char** out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    *out = copy_string(render_report(report->result.report, report->format));
  });
}

const char* nc_report_output_path(const nc_report* report) { return report == nullptr ? "" : report->path.c_str(); }

nc_status nc_spec_from_json(const char* json_text, nc_spec** out) {
  return guarded([&] {
    need(json_text, "json_text");
    need(out, "out");
    *out = new nc_spec{spec_from_json(parse_json_text(json_text, "spec"))};
  });
}

nc_status nc_spec_jlt(const double* a, size_t n, double fiber_window, nc_spec** out) {
  return guarded([&] {
    need(a, "a");
    need(out, "out");
    *out = new nc_spec{jlt_neck(std::span<const double>(a, n), fiber_window)};
  });
}

void nc_spec_free(nc_spec* spec) { delete spec; }

nc_status nc_spec_to_json(const nc_spec* spec, char** out) {
  return guarded([&] {
    need(spec, "spec");
    need(out, "out");
    *out = copy_string(spec_to_json(spec->spec).dump(2) + "\n");
  });
}

nc_status nc_spec_find_q0(nc_spec* spec, int grid_per_axis, double refine_tol, double* q0_out,
                          int* coordinatewise_min_out) {
  return guarded([&] {
    need(spec, "spec");
    const Q0Result r = find_q0(spec->spec, grid_per_axis, refine_tol);
    spec->spec = spec->spec.with_q0(r);
    if (q0_out != nullptr) std::copy(r.q0.begin(), r.q0.end(), q0_out);
    if (coordinatewise_min_out != nullptr) *coordinatewise_min_out = r.coordinatewise_min ? 1 : 0;
  });
}

nc_status nc_spec_product_factor(const nc_spec* spec, const double* q, double* out) {
  return guarded([&] {
    need(spec, "spec");
    need(q, "q");
    need(out, "out");
    *out = product_factor(spec->spec, std::span<const double>(q, static_cast<std::size_t>(spec->spec.t())));
  });
}

nc_status nc_spec_eval_g(const nc_spec* spec, const double* q, const double* x, const double* y, double* out) {
  return guarded([&] {
    need(spec, "spec");
    need(q, "q");
    need(x, "x");
    need(y, "y");
    need(out, "out");
    const auto n = static_cast<std::size_t>(spec->spec.n());
    const auto t = static_cast<std::size_t>(spec->spec.t());
    *out = eval_g(spec->spec, std::span<const double>(q, t), std::span<const double>(x, n),
                  std::span<const double>(y, n));
  });
}

nc_status nc_spec_comass_ratio(const nc_spec* spec, const double* p, const double* q, const double* base,
                               const double* fiber, double* out) {
  return guarded([&] {
    need(spec, "spec");
    need(p, "p");
    need(q, "q");
    need(base, "base");
    need(fiber, "fiber");
    need(out, "out");
    const auto n = static_cast<std::size_t>(spec->spec.n());
    const auto k = static_cast<std::size_t>(spec->spec.k());
    const auto t = static_cast<std::size_t>(spec->spec.t());
    TangentFrame frame;
    frame.at = {Vec(p, p + n), Vec(q, q + t)};
    for (std::size_t i = 0; i < k; ++i)
      frame.vectors.push_back({Vec(base + i * n, base + (i + 1) * n), Vec(fiber + i * t, fiber + (i + 1) * t)});
    validate_frame(spec->spec, frame);
    *out = comass_ratio(spec->spec, frame);
  });
}

int nc_spec_n(const nc_spec* spec) { return spec == nullptr ? 0 : spec->spec.n(); }
int nc_spec_k(const nc_spec* spec) { return spec == nullptr ? 0 : spec->spec.k(); }
int nc_spec_t(const nc_spec* spec) { return spec == nullptr ? 0 : spec->spec.t(); }

}  // extern "C"
