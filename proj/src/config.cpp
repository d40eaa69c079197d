#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "kgx/error.hpp"
#include "kgx/pipeline.hpp"

namespace kgx {

namespace {

template <typename T>
T parse_integer(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError({key + ": expected an integer, got '" + text + "'"});
  return value;
}

double parse_real(const std::string& key, const std::string& text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError({key + ": expected a number, got '" + text + "'"});
  return value;
}

std::string real_text(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (auto t = trim(item); !t.empty()) out.push_back(t);
  return out;
}

template <typename F>
auto wrap(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError({key + ": " + e.what()});
  }
}

// Keys in rendering order.
const std::vector<std::pair<std::string, std::vector<std::string>>>& layout() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> sections = {
      {"data", {"train", "valid", "test"}},
      {"model",
       {"kind", "dim", "norm", "learning_rate", "epochs", "batch_size", "margin", "negatives", "l2", "seed"}},
      {"mining", {"mode", "max_atoms", "min_correct", "min_precision", "max_rules_per_level"}},
      {"explain",
       {"scope", "k_min", "k_max", "linkage", "test_fraction", "l2", "seed", "max_instances", "predicates",
        "threads"}},
      {"output", {"dir"}},
  };
  return sections;
}

bool is_path_key(const std::string& key) {
  return key == "data.train" || key == "data.valid" || key == "data.test" || key == "output.dir";
}

}  // namespace

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig cfg;
  cfg.training.seed = 0;
  cfg.training.epochs = 200;
  cfg.training.learning_rate = 0.05;
  cfg.training.batch_size = 64;
  cfg.training.negatives = 2;
  cfg.scoping.explain.miner.min_correct = 2;
  cfg.scoping.explain.miner.min_precision = 0.1;
  return cfg;
}

void PipelineConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  auto& m = scoping.explain.miner;
  if (key == "data.train") train_path = value;
  else if (key == "data.valid") valid_path = value;
  else if (key == "data.test") test_path = value;
  else if (key == "model.kind") model_kind = wrap(key, [&] { return parse_model_kind(value); });
  else if (key == "model.dim") dim = parse_integer<int>(key, value);
  else if (key == "model.norm") norm = parse_integer<int>(key, value);
  else if (key == "model.learning_rate") training.learning_rate = parse_real(key, value);
  else if (key == "model.epochs") training.epochs = parse_integer<int>(key, value);
  else if (key == "model.batch_size") training.batch_size = parse_integer<int>(key, value);
  else if (key == "model.margin") training.margin = parse_real(key, value);
  else if (key == "model.negatives") training.negatives = parse_integer<int>(key, value);
  else if (key == "model.l2") training.l2 = parse_real(key, value);
  else if (key == "model.seed") training.seed = parse_integer<std::uint64_t>(key, value);
  else if (key == "mining.mode") m.mode = wrap(key, [&] { return parse_rule_mode(value); });
  else if (key == "mining.max_atoms") m.max_atoms = parse_integer<std::size_t>(key, value);
  else if (key == "mining.min_correct") m.min_correct = parse_integer<std::size_t>(key, value);
  else if (key == "mining.min_precision") m.min_precision = parse_real(key, value);
  else if (key == "mining.max_rules_per_level") m.max_rules_per_level = parse_integer<std::size_t>(key, value);
  else if (key == "explain.scope") scope = wrap(key, [&] { return parse_scope_kind(value); });
  else if (key == "explain.k_min") scoping.k_min = parse_integer<std::size_t>(key, value);
  else if (key == "explain.k_max") scoping.k_max = parse_integer<std::size_t>(key, value);
  else if (key == "explain.linkage") scoping.linkage = wrap(key, [&] { return parse_linkage(value); });
  else if (key == "explain.test_fraction") scoping.test_fraction = parse_real(key, value);
  else if (key == "explain.l2") scoping.explain.l2 = parse_real(key, value);
  else if (key == "explain.seed") {
    scoping.seed = parse_integer<std::uint64_t>(key, value);
    explain_seed_set_ = true;
  } else if (key == "explain.max_instances") scoping.max_instances = parse_integer<std::size_t>(key, value);
  else if (key == "explain.predicates") predicates = split_list(value);
  else if (key == "explain.threads") threads = parse_integer<unsigned>(key, value);
  else if (key == "output.dir") out_dir = value;
  else throw ConfigError({"unknown key '" + key + "'"});
}

void PipelineConfig::set_seed(std::uint64_t seed) {
  training.seed = seed;
  scoping.seed = seed;
  explain_seed_set_ = true;
}

PipelineConfig PipelineConfig::parse(std::istream& in, const std::filesystem::path& base_dir) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError({std::string("syntax: ") + e.what()});
  }
  PipelineConfig cfg = defaults();
  cfg.training.seed.reset();
  cfg.explain_seed_set_ = false;
  std::vector<std::string> problems;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      problems.push_back("key '" + section + "' outside any section");
      continue;
    }
    for (const auto& [name, node] : body) {
      const std::string key = section + "." + name;
      try {
        std::string value = node.data();
        if (is_path_key(key) && !trim(value).empty() && !base_dir.empty()) {
          const std::filesystem::path p = trim(value);
          if (p.is_relative()) value = (base_dir / p).lexically_normal().string();
        }
        cfg.set(key, value);
      } catch (const ConfigError& e) {
        problems.insert(problems.end(), e.problems().begin(), e.problems().end());
      }
    }
  }
  if (!problems.empty()) throw ConfigError(problems);
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file " + path.string()});
  return parse(in, path.parent_path());
}

std::vector<std::string> PipelineConfig::problems() const {
  std::vector<std::string> out;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) out.push_back(msg);
  };
  check(training.seed.has_value(), "model.seed is required");
  check(explain_seed_set_, "explain.seed is required");
  check(dim > 0, "model.dim must be positive");
  check(norm == 1 || norm == 2, "model.norm must be 1 or 2");
  check(model_kind != ModelKind::kComplEx || dim % 2 == 0, "model.dim must be even for complex");
  try {
    if (training.seed) training.validate();
  } catch (const std::invalid_argument& e) {
    out.push_back(std::string("model: ") + e.what());
  }
  try {
    scoping.explain.miner.validate();
  } catch (const std::invalid_argument& e) {
    out.push_back(std::string("mining: ") + e.what());
  }
  check(scoping.k_min >= 2, "explain.k_min must be at least 2");
  check(scoping.k_max >= scoping.k_min, "explain.k_max must be at least explain.k_min");
  check(scoping.test_fraction > 0.0 && scoping.test_fraction < 1.0, "explain.test_fraction must lie in (0, 1)");
  check(scoping.explain.l2 > 0.0, "explain.l2 must be positive");
  check(threads >= 1, "explain.threads must be at least 1");
  check(!out_dir.empty(), "output.dir is required");
  return out;
}

void PipelineConfig::validate() const {
  if (auto p = problems(); !p.empty()) throw ConfigError(std::move(p));
}

std::string PipelineConfig::render() const {
  std::map<std::string, std::string> values;
  const auto& m = scoping.explain.miner;
  values["data.train"] = train_path.string();
  values["data.valid"] = valid_path.string();
  values["data.test"] = test_path.string();
  values["model.kind"] = to_string(model_kind);
  values["model.dim"] = std::to_string(dim);
  values["model.norm"] = std::to_string(norm);
  values["model.learning_rate"] = real_text(training.learning_rate);
  values["model.epochs"] = std::to_string(training.epochs);
  values["model.batch_size"] = std::to_string(training.batch_size);
  values["model.margin"] = real_text(training.margin);
  values["model.negatives"] = std::to_string(training.negatives);
  values["model.l2"] = real_text(training.l2);
  values["model.seed"] = training.seed ? std::to_string(*training.seed) : "";
  values["mining.mode"] = to_string(m.mode);
  values["mining.max_atoms"] = std::to_string(m.max_atoms);
  values["mining.min_correct"] = std::to_string(m.min_correct);
  values["mining.min_precision"] = real_text(m.min_precision);
  values["mining.max_rules_per_level"] = std::to_string(m.max_rules_per_level);
  values["explain.scope"] = to_string(scope);
  values["explain.k_min"] = std::to_string(scoping.k_min);
  values["explain.k_max"] = std::to_string(scoping.k_max);
  values["explain.linkage"] = to_string(scoping.linkage);
  values["explain.test_fraction"] = real_text(scoping.test_fraction);
  values["explain.l2"] = real_text(scoping.explain.l2);
  values["explain.seed"] = explain_seed_set_ ? std::to_string(scoping.seed) : "";
  values["explain.max_instances"] = std::to_string(scoping.max_instances);
  std::string preds;
  for (const auto& p : predicates) preds += (preds.empty() ? "" : ",") + p;
  values["explain.predicates"] = preds;
  values["explain.threads"] = std::to_string(threads);
  values["output.dir"] = out_dir.string();

  std::ostringstream out;
  bool first = true;
  for (const auto& [section, keys] : layout()) {
    if (!first) out << '\n';
    first = false;
    out << '[' << section << "]\n";
    for (const auto& k : keys) out << k << " = " << values.at(section + "." + k) << '\n';
  }
  return out.str();
}

}  // namespace kgx
