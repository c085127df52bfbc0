// neckcalib <command> [--config path] [--seed n] [--out path] [--format json|csv]
//                     [--threads n] [--set key=value ...]

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "neckcalib/neckcalib.h"

namespace {

const char* const kCommands[] = {"selftest",       "find-q0",   "calibrate", "comass-max", "probe",
                                 "volume-compare", "minimality"};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> format;
  unsigned threads = 0;
  std::vector<std::string> overrides;
};

int diagnose(const std::string& msg, int code) {
  std::string line = msg;
  for (char& c : line)
    if (c == '\n' || c == '\r') c = ' ';
  std::cerr << "neckcalib: " << line << "\n";
  return code;
}

int fail_status(nc_status status) { return diagnose(nc_last_error(), nc_status_exit_code(status)); }

int execute(const std::string& command, const Options& opt) {
  nc_config* cfg = nullptr;
  nc_status st = opt.config.empty() ? nc_config_new(&cfg) : nc_config_load(opt.config.c_str(), &cfg);
  if (st != NC_OK) return fail_status(st);
  std::unique_ptr<nc_config, decltype(&nc_config_free)> cfg_guard(cfg, nc_config_free);

  for (const auto& o : opt.overrides)
    if ((st = nc_config_set(cfg, o.c_str())) != NC_OK) return fail_status(st);
  if ((st = nc_config_select_command(cfg, command.c_str())) != NC_OK) return fail_status(st);
  if (opt.seed && (st = nc_config_set_seed(cfg, *opt.seed)) != NC_OK) return fail_status(st);
  if ((opt.out || opt.format) &&
      (st = nc_config_set_output(cfg, opt.out ? opt.out->c_str() : nullptr, opt.format ? opt.format->c_str() : nullptr)) !=
          NC_OK)
    return fail_status(st);

  nc_report* report = nullptr;
  if ((st = nc_run(cfg, opt.threads, &report)) != NC_OK) return fail_status(st);
  std::unique_ptr<nc_report, decltype(&nc_report_free)> report_guard(report, nc_report_free);

  char* text = nullptr;
  if ((st = nc_report_render(report, &text)) != NC_OK) return fail_status(st);
  const std::string rendered(text);
  nc_string_free(text);

  const std::string path = nc_report_output_path(report);
  if (path.empty()) {
    std::cout << rendered;
    std::cout.flush();
  } else {
    std::ofstream file(path, std::ios::binary);
    if (!file) return diagnose("cannot write report to '" + path + "'", 1);
    file << rendered;
    if (!file.flush()) return diagnose("cannot write report to '" + path + "'", 1);
  }
  return nc_report_exit_code(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks of calibrated submanifolds in neck manifolds", "neckcalib"};
  app.require_subcommand(1);
  Options opt;
  std::string chosen;

  for (const char* name : kCommands) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " command");
    sub->add_option("--config", opt.config, "config document (JSON)");
    sub->add_option("--seed", opt.seed, "master seed (unsigned 64-bit)");
    sub->add_option("--out", opt.out, "report path (default: standard output)");
    sub->add_option("--format", opt.format, "report format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--threads", opt.threads, "worker threads (0: hardware parallelism)");
    sub->add_option("--set", opt.overrides, "override a config field: key.path=value")->take_all();
    sub->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return diagnose(e.what(), 1);
  }
  return execute(chosen, opt);
}
