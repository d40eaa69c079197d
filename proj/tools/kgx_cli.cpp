#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kgx/kgx.h"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string scope;
  std::string rule_mode;
  std::vector<std::string> predicates;
  std::string out;
};

int fail(kgx_status status) {
  std::cerr << "kgx: " << kgx_last_error() << '\n';
  return static_cast<int>(status);
}

// Loads the config file (or defaults) and applies command-line overrides.
kgx_status build_config(const Options& opt, kgx_config** cfg) {
  auto status = opt.config.empty() ? kgx_config_new(cfg) : kgx_config_load(opt.config.c_str(), cfg);
  if (status != KGX_OK) return status;
  auto set = [&](const char* key, const std::string& value) {
    if (status == KGX_OK && !value.empty()) status = kgx_config_set(*cfg, key, value.c_str());
  };
  set("explain.scope", opt.scope);
  set("mining.mode", opt.rule_mode);
  set("output.dir", opt.out);
  if (!opt.predicates.empty()) {
    std::string joined;
    for (const auto& p : opt.predicates) joined += (joined.empty() ? "" : ",") + p;
    set("explain.predicates", joined);
  }
  if (status == KGX_OK && opt.seed) status = kgx_config_set_seed(*cfg, *opt.seed);
  return status;
}

int run_stages(const Options& opt, const std::vector<std::string>& stages) {
  kgx_config* cfg = nullptr;
  if (auto s = build_config(opt, &cfg); s != KGX_OK) {
    kgx_config_free(cfg);
    return fail(s);
  }
  for (const auto& stage : stages) {
    char* log = nullptr;
    const auto s = kgx_run(cfg, stage.c_str(), &log);
    if (log) {
      std::cout << log;
      kgx_string_free(log);
    }
    if (s != KGX_OK) {
      kgx_config_free(cfg);
      return fail(s);
    }
  }
  kgx_config_free(cfg);
  return 0;
}

int print_config(const Options& opt) {
  kgx_config* cfg = nullptr;
  auto s = build_config(opt, &cfg);
  char* text = nullptr;
  if (s == KGX_OK) s = kgx_config_render(cfg, &text);
  kgx_config_free(cfg);
  if (s != KGX_OK) return fail(s);
  std::cout << text;
  kgx_string_free(text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Horn-rule explanations for knowledge-graph embeddings", "kgx"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--config", opt.config, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", opt.seed, "override every seed");
  app.add_option("--scope", opt.scope, "explanation scope")->check(CLI::IsMember({"global", "local", "instance"}));
  app.add_option("--rule-mode", opt.rule_mode, "rule language")->check(CLI::IsMember({"unbounded", "bounded"}));
  app.add_option("--predicate", opt.predicates, "restrict to a predicate label (repeatable)");
  app.add_option("--out", opt.out, "output directory");
  app.set_version_flag("--version", kgx_version());

  const std::vector<std::pair<std::string, std::string>> stages = {
      {"ingest", "read the TSV splits and write dictionaries"},
      {"train", "train the embedding model"},
      {"mine", "build global contexts, calibrate thresholds, mine global rules"},
      {"explain", "explain every predicate in the configured scope"},
      {"evaluate", "reload explanations and measure fidelity"},
      {"report", "summarise evaluations into fidelity tables and top rules"},
  };
  for (const auto& [name, help] : stages) app.add_subcommand(name, help)->fallthrough();
  app.add_subcommand("all", "run every stage in order")->fallthrough();
  app.add_subcommand("print-config", "print the effective configuration with defaults")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const auto* sub = app.get_subcommands().front();
  const auto name = sub->get_name();
  if (name == "print-config") return print_config(opt);
  if (name == "all") {
    std::vector<std::string> names;
    for (const auto& [n, h] : stages) names.push_back(n);
    return run_stages(opt, names);
  }
  return run_stages(opt, {name});
}
