#include "kgx/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "kgx/error.hpp"
#include "kgx/eval.hpp"
#include "kgx/explainer.hpp"
#include "kgx/miner.hpp"

namespace kgx {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path ArtifactPaths::explanations_dir(ScopeKind scope, RuleMode mode) const {
  return root / "explanations" / (to_string(scope) + "-" + to_string(mode));
}

fs::path ArtifactPaths::evaluation_file(ScopeKind scope, RuleMode mode) const {
  return root / "evaluation" / (to_string(scope) + "-" + to_string(mode) + ".json");
}

std::string predicate_stem(const Vocabulary& vocab, PredicateId p) {
  std::string label = vocab.predicates.label(p);
  for (auto& c : label)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-') c = '_';
  if (label.size() > 80) label.resize(80);
  return std::to_string(p) + "_" + label;
}

std::uint64_t predicate_seed(std::uint64_t base, PredicateId p) { return derive_seed(base, 1000, p); }

Context predicate_context(const Dataset& ds, PredicateId p, std::uint64_t seed) {
  const auto truths = ds.test_facts(p);
  if (truths.empty()) throw DataError("predicate has no test facts");
  return global_context(ds.universe, p, truths, derive_seed(seed, 0));
}

double predicate_threshold(const Scorer& f, const Context& global, const ScopingConfig& cfg) {
  const auto [train, test] = split_context(global, cfg.test_fraction, derive_seed(cfg.seed, 1));
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& cf : train.facts) {
    scores.push_back(f(cf.fact));
    labels.push_back(cf.truth ? 1 : -1);
  }
  return calibrate_threshold(scores, labels);
}

ScopeResult explain_scope(const Scorer& f, const EmbeddingModel& model, const ExplainGraphs& graphs,
                          const Context& global, ScopeKind scope, const ScopingConfig& cfg, double theta) {
  switch (scope) {
    case ScopeKind::kGlobal:
      return explain_global(f, graphs, global, cfg, theta);
    case ScopeKind::kLocal:
      return select_k(f, model, graphs, global, cfg, theta);
    case ScopeKind::kInstance:
      return explain_instances(f, graphs, global, cfg, theta);
  }
  throw std::invalid_argument("unknown scope");
}

namespace {

void ensure_exists(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) throw MissingArtifactError(path.string(), producer);
}

std::ofstream open_out(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path, const std::string& producer) {
  ensure_exists(path, producer);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return in;
}

Dictionary read_dict(const fs::path& path) {
  auto in = open_in(path, "ingest");
  try {
    return Dictionary::read(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace

Dataset load_ingested(const ArtifactPaths& paths) {
  const auto dir = paths.kg_dir();
  auto vocab = std::make_shared<Vocabulary>();
  vocab->entities = read_dict(dir / "entities.dict");
  vocab->predicates = read_dict(dir / "predicates.dict");
  const auto n_e = vocab->entities.size(), n_p = vocab->predicates.size();
  auto load = [&](const char* name) {
    auto in = open_in(dir / name, "ingest");
    auto facts = read_triples(in, *vocab);
    if (vocab->entities.size() != n_e || vocab->predicates.size() != n_p)
      throw DataError((dir / name).string() + " uses labels missing from the dictionaries");
    return facts;
  };
  auto train = load("train.tsv");
  auto valid = load("valid.tsv");
  auto test = load("test.tsv");
  return Dataset::from_parts(std::move(vocab), std::move(train), std::move(valid), std::move(test));
}

void write_context_csv(std::ostream& out, const Vocabulary& vocab,
                       const std::vector<std::pair<const Context*, std::string>>& parts) {
  out << "subject,predicate,object,label,group,scope,split\n";
  auto field = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  for (const auto& [ctx, split] : parts) {
    const auto tag = ctx->scope.tag(vocab);
    for (const auto& cf : ctx->facts)
      out << field(vocab.entities.label(cf.fact.s)) << ',' << field(vocab.predicates.label(cf.fact.p)) << ','
          << field(vocab.entities.label(cf.fact.o)) << ',' << (cf.truth ? 1 : 0) << ',' << cf.group << ','
          << field(tag) << ',' << field(split) << '\n';
  }
}

namespace {

std::vector<std::string> parse_csv_line(const std::string& line, std::size_t lineno) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw ParseError("unterminated quote", lineno);
  return fields;
}

}  // namespace

Context read_context_csv(std::istream& in, const Vocabulary& vocab, const std::string& split) {
  Context ctx;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line != "subject,predicate,object,label,group,scope,split") throw ParseError("bad context header", lineno);
      continue;
    }
    const auto f = parse_csv_line(line, lineno);
    if (f.size() != 7) throw ParseError("expected 7 fields", lineno);
    if (!split.empty() && f[6] != split) continue;
    ContextFact cf;
    cf.fact = {vocab.entities.at(f[0]), vocab.predicates.at(f[1]), vocab.entities.at(f[2])};
    if (f[3] != "0" && f[3] != "1") throw ParseError("label must be 0 or 1", lineno);
    cf.truth = f[3] == "1";
    try {
      cf.group = std::stoul(f[4]);
    } catch (const std::exception&) {
      throw ParseError("bad group", lineno);
    }
    if (!ctx.facts.empty() && cf.fact.p != ctx.predicate) throw ParseError("mixed predicates", lineno);
    ctx.predicate = cf.fact.p;
    ctx.facts.push_back(cf);
  }
  return ctx;
}

Command parse_command(std::string_view name) {
  if (name == "ingest") return Command::kIngest;
  if (name == "train") return Command::kTrain;
  if (name == "mine") return Command::kMine;
  if (name == "explain") return Command::kExplain;
  if (name == "evaluate") return Command::kEvaluate;
  if (name == "report") return Command::kReport;
  throw std::invalid_argument("unknown command '" + std::string(name) + "'");
}

std::string to_string(Command command) {
  switch (command) {
    case Command::kIngest: return "ingest";
    case Command::kTrain: return "train";
    case Command::kMine: return "mine";
    case Command::kExplain: return "explain";
    case Command::kEvaluate: return "evaluate";
    case Command::kReport: return "report";
  }
  return "?";
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json fidelity_json(const FidelityRecord& r) {
  return {{"roc_auc", optional_number(r.roc_auc)},
          {"s_mrr", optional_number(r.s_mrr)},
          {"o_mrr", optional_number(r.o_mrr)},
          {"test_size", r.test_size}};
}

json read_json(const fs::path& path, const std::string& producer) {
  auto in = open_in(path, producer);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

std::string index_name(std::size_t i) {
  std::ostringstream s;
  s << std::setw(4) << std::setfill('0') << i;
  return s.str();
}

// Runs jobs on `threads` workers. Jobs must only touch their own outputs.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& job) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(threads, n); ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

// Predicates to process: those with test facts, optionally restricted.
std::vector<PredicateId> selected_predicates(const Dataset& ds, const PipelineConfig& cfg) {
  auto preds = ds.test_predicates();
  if (cfg.predicates.empty()) return preds;
  std::vector<PredicateId> out;
  for (const auto& label : cfg.predicates) {
    const auto id = ds.vocab->predicates.find(label);
    if (!id) throw DataError("unknown predicate '" + label + "'");
    if (!std::binary_search(preds.begin(), preds.end(), *id))
      throw DataError("predicate '" + label + "' has no test facts");
    out.push_back(*id);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void run_ingest(const PipelineConfig& cfg, const ArtifactPaths& paths, std::ostream& log) {
  std::vector<std::string> problems;
  for (const auto& [key, p] : {std::pair{"data.train", cfg.train_path}, std::pair{"data.valid", cfg.valid_path},
                               std::pair{"data.test", cfg.test_path}}) {
    if (p.empty())
      problems.push_back(std::string(key) + " is required");
    else if (!fs::exists(p))
      problems.push_back(std::string(key) + ": no such file " + p.string());
  }
  if (!problems.empty()) throw ConfigError(problems);
  const auto ds = Dataset::from_files(cfg.train_path, cfg.valid_path, cfg.test_path);
  const auto dir = paths.kg_dir();
  {
    auto out = open_out(dir / "entities.dict");
    ds.vocab->entities.write(out);
  }
  {
    auto out = open_out(dir / "predicates.dict");
    ds.vocab->predicates.write(out);
  }
  {
    auto out = open_out(dir / "train.tsv");
    write_triples(out, ds.train.facts(), *ds.vocab);
  }
  {
    auto out = open_out(dir / "valid.tsv");
    write_triples(out, ds.valid, *ds.vocab);
  }
  {
    auto out = open_out(dir / "test.tsv");
    write_triples(out, ds.test, *ds.vocab);
  }
  log << "ingest: " << ds.vocab->entities.size() << " entities, " << ds.vocab->predicates.size() << " predicates, "
      << ds.train.facts().size() << "/" << ds.valid.size() << "/" << ds.test.size() << " train/valid/test facts\n";
}

void run_train(const PipelineConfig& cfg, const ArtifactPaths& paths, std::ostream& log) {
  const auto ds = load_ingested(paths);
  auto model = init_model(cfg.model_kind, cfg.dim, ds.vocab->entities.size(), ds.vocab->predicates.size(),
                          cfg.model_seed(), cfg.norm);
  const auto report = train(model, ds.train, cfg.training);
  {
    auto out = open_out(paths.model_file());
    save_model(model, out);
  }
  {
    auto out = open_out(paths.model_dir() / "model.csv");
    export_csv(model, *ds.vocab, out);
  }
  {
    auto out = open_out(paths.model_dir() / "train_log.csv");
    out << "epoch,loss\n" << std::setprecision(17);
    for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) out << e + 1 << ',' << report.epoch_loss[e] << '\n';
  }
  log << "train: " << to_string(cfg.model_kind) << " d=" << cfg.dim << ", final loss "
      << (report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back()) << '\n';
}

EmbeddingModel load_trained(const ArtifactPaths& paths, const Dataset& ds) {
  ensure_exists(paths.model_file(), "train");
  auto model = load_model(paths.model_file());
  if (model.entity_count() != ds.vocab->entities.size() || model.predicate_count() != ds.vocab->predicates.size())
    throw DataError("model does not match the ingested graph; rerun `train`");
  return model;
}

ScopingConfig scoping_for(const PipelineConfig& cfg, PredicateId p) {
  ScopingConfig sc = cfg.scoping;
  sc.seed = predicate_seed(cfg.explain_seed(), p);
  return sc;
}

struct Calibration {
  std::optional<double> theta;
  std::string status = "ok";
};

void run_mine(const PipelineConfig& cfg, const ArtifactPaths& paths, std::ostream& log) {
  const auto ds = load_ingested(paths);
  const auto model = load_trained(paths, ds);
  const auto f = model.scorer();
  const auto preds = selected_predicates(ds, cfg);
  const auto mode = cfg.scoping.explain.miner.mode;
  std::vector<Calibration> calib(preds.size());
  std::vector<std::size_t> rule_counts(preds.size(), 0);

  parallel_for(preds.size(), cfg.threads, [&](std::size_t i) {
    const auto p = preds[i];
    const auto stem = predicate_stem(*ds.vocab, p);
    const auto sc = scoping_for(cfg, p);
    const auto ctx = predicate_context(ds, p, sc.seed);
    {
      auto out = open_out(paths.contexts_dir() / (stem + ".csv"));
      write_context_csv(out, *ds.vocab, {{&ctx, "all"}});
    }
    std::vector<HornRule> rules;
    try {
      const double theta = predicate_threshold(f, ctx, sc);
      calib[i].theta = theta;
      const auto [train, test] = split_context(ctx, sc.test_fraction, derive_seed(sc.seed, 1));
      const auto annotated = binarize(f, train, theta);
      AugmentedGraph aug(ds.train);
      aug.annotate(p, annotated.accepted(), annotated.rejected());
      const std::vector<PredicateId> heads{aug.surrogate(p, true), aug.surrogate(p, false)};
      rules = mine(aug, heads, sc.explain.miner);
    } catch (const DataError& e) {
      calib[i].status = std::string("data: ") + e.what();
    } catch (const NumericError& e) {
      calib[i].status = std::string("numeric: ") + e.what();
    }
    rule_counts[i] = rules.size();
    auto out = open_out(paths.rules_dir(mode) / (stem + ".rules"));
    const auto symbols = surrogate_symbols(*ds.vocab);
    for (const auto& r : rules) out << format_rule_with_stats(r, symbols) << '\n';
  });

  auto out = open_out(paths.calibration_file());
  out << "predicate\ttheta\tstatus\n" << std::setprecision(17);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out << ds.vocab->predicates.label(preds[i]) << '\t';
    if (calib[i].theta)
      out << *calib[i].theta;
    else
      out << "nan";
    out << '\t' << calib[i].status << '\n';
    log << "mine: " << ds.vocab->predicates.label(preds[i]) << ": " << rule_counts[i] << " rules ("
        << calib[i].status << ")\n";
  }
}

std::map<PredicateId, Calibration> read_calibration(const ArtifactPaths& paths, const Vocabulary& vocab) {
  auto in = open_in(paths.calibration_file(), "mine");
  std::map<PredicateId, Calibration> out;
  std::string line;
  std::getline(in, line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto t1 = line.find('\t'), t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) throw ParseError("calibration.tsv: bad row", lineno);
    Calibration c;
    const auto theta = line.substr(t1 + 1, t2 - t1 - 1);
    if (theta != "nan") c.theta = std::stod(theta);
    c.status = line.substr(t2 + 1);
    out[vocab.predicates.at(line.substr(0, t1))] = c;
  }
  return out;
}

void run_explain(const PipelineConfig& cfg, const ArtifactPaths& paths, std::ostream& log) {
  const auto ds = load_ingested(paths);
  const auto model = load_trained(paths, ds);
  const auto f = model.scorer();
  const auto calibration = read_calibration(paths, *ds.vocab);
  const auto preds = selected_predicates(ds, cfg);
  const auto mode = cfg.scoping.explain.miner.mode;
  const auto dir = paths.explanations_dir(cfg.scope, mode);
  const ExplainGraphs graphs{ds.train, ds.universe};
  for (auto p : preds)
    if (!calibration.count(p))
      throw MissingArtifactError(paths.calibration_file().string() + " entry for " + ds.vocab->predicates.label(p),
                                 "mine");
  std::error_code ec;
  fs::remove_all(dir, ec);
  std::vector<std::string> lines(preds.size());

  parallel_for(preds.size(), cfg.threads, [&](std::size_t i) {
    const auto p = preds[i];
    const auto stem = predicate_stem(*ds.vocab, p);
    const auto pdir = dir / stem;
    const auto sc = scoping_for(cfg, p);
    json summary = {{"predicate", ds.vocab->predicates.label(p)},
                    {"scope", to_string(cfg.scope)},
                    {"mode", to_string(mode)},
                    {"error", nullptr}};
    ScopeResult result;
    try {
      const auto& cal = calibration.at(p);
      if (!cal.theta) throw DataError("no calibrated threshold: " + cal.status);
      auto in = open_in(paths.contexts_dir() / (stem + ".csv"), "mine");
      auto global = read_context_csv(in, *ds.vocab);
      result = explain_scope(f, model, graphs, global, cfg.scope, sc, *cal.theta);
    } catch (const DataError& e) {
      summary["error"] = std::string("data: ") + e.what();
    } catch (const NumericError& e) {
      summary["error"] = std::string("numeric: ") + e.what();
    }
    std::vector<std::pair<const Context*, std::string>> parts;
    std::size_t covered = 0;
    for (std::size_t e = 0; e < result.explanations.size(); ++e) {
      auto out = open_out(pdir / (index_name(e) + ".json"));
      write_explanation(result.explanations[e], *ds.vocab, out);
      covered += result.explanations[e].covered();
      parts.emplace_back(&result.splits[e].first, index_name(e) + ":train");
      parts.emplace_back(&result.splits[e].second, index_name(e) + ":test");
    }
    {
      auto out = open_out(pdir / "contexts.csv");
      write_context_csv(out, *ds.vocab, parts);
    }
    summary["explanations"] = result.explanations.size();
    summary["covered_explanations"] = covered;
    summary["k"] = cfg.scope == ScopeKind::kLocal ? json(result.k) : json(nullptr);
    json ks = json::array();
    for (const auto& [k, s] : result.k_scores) ks.push_back({{"k", k}, {"roc_auc", s}});
    summary["k_scores"] = ks;
    summary["aggregate"] = fidelity_json(result.aggregate);
    write_json(pdir / "summary.json", summary);
    std::ostringstream msg;
    msg << "explain " << to_string(cfg.scope) << "-" << to_string(mode) << ": " << ds.vocab->predicates.label(p)
        << ": " << covered << "/" << result.explanations.size() << " covered";
    if (!summary["error"].is_null()) msg << " (" << summary["error"].get<std::string>() << ")";
    lines[i] = msg.str();
  });
  for (const auto& l : lines) log << l << '\n';
}

// Predicate directories of one explanation run, sorted by predicate id.
std::vector<fs::path> predicate_dirs(const fs::path& dir) {
  std::vector<std::pair<unsigned long, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory()) found.emplace_back(std::stoul(entry.path().filename().string()), entry.path());
  std::sort(found.begin(), found.end());
  std::vector<fs::path> out;
  for (auto& [id, p] : found) out.push_back(p);
  return out;
}

std::vector<fs::path> explanation_files(const fs::path& pdir) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(pdir)) {
    const auto name = entry.path().filename().string();
    if (entry.path().extension() == ".json" && name != "summary.json") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void run_evaluate(const PipelineConfig& cfg, const ArtifactPaths& paths, std::ostream& log) {
  const auto ds = load_ingested(paths);
  const auto model = load_trained(paths, ds);
  const auto f = model.scorer();
  const auto mode = cfg.scoping.explain.miner.mode;
  const auto dir = paths.explanations_dir(cfg.scope, mode);
  if (!fs::is_directory(dir)) throw MissingArtifactError(dir.string(), "explain");
  const ExplainGraphs graphs{ds.train, ds.universe};
  const auto pdirs = predicate_dirs(dir);

  std::vector<json> rows(pdirs.size());
  std::vector<std::vector<FidelityRecord>> records(pdirs.size());
  parallel_for(pdirs.size(), cfg.threads, [&](std::size_t i) {
    const auto summary = read_json(pdirs[i] / "summary.json", "explain");
    std::size_t covered = 0;
    std::stringstream ctx_text;
    {
      auto in = open_in(pdirs[i] / "contexts.csv", "explain");
      ctx_text << in.rdbuf();
    }
    for (const auto& file : explanation_files(pdirs[i])) {
      auto in = open_in(file, "explain");
      const auto expl = read_explanation(in, *ds.vocab);
      const auto stem = file.stem().string();
      std::istringstream a(ctx_text.str()), b(ctx_text.str());
      const auto train = read_context_csv(a, *ds.vocab, stem + ":train");
      auto test = read_context_csv(b, *ds.vocab, stem + ":test");
      test.predicate = expl.predicate;
      std::vector<Triple> truths;
      for (const Context* c : {&train, static_cast<const Context*>(&test)})
        for (const auto& cf : c->facts)
          if (cf.truth) truths.push_back(cf.fact);
      std::sort(truths.begin(), truths.end());
      truths.erase(std::unique(truths.begin(), truths.end()), truths.end());
      auto rec = measure_fidelity(expl, graphs, binarize(f, test, expl.theta), truths);
      if (expl.covered()) {
        ++covered;
        records[i].push_back(rec);
      }
    }
    FidelityRecord agg;
    if (!records[i].empty()) agg = weighted_fidelity(records[i]);
    rows[i] = {{"predicate", summary.at("predicate")},
               {"error", summary.at("error")},
               {"explanations", summary.at("explanations")},
               {"covered_explanations", covered},
               {"k", summary.at("k")},
               {"fidelity", fidelity_json(agg)}};
  });

  std::vector<FidelityRecord> all;
  std::size_t covered_predicates = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    all.insert(all.end(), records[i].begin(), records[i].end());
    covered_predicates += !records[i].empty();
  }
  FidelityRecord overall;
  if (!all.empty()) overall = weighted_fidelity(all);
  json out = {{"model", to_string(model.kind())},
              {"scope", to_string(cfg.scope)},
              {"mode", to_string(mode)},
              {"predicates", rows},
              {"overall", fidelity_json(overall)},
              {"covered_predicates", covered_predicates}};
  write_json(paths.evaluation_file(cfg.scope, mode), out);
  log << "evaluate " << to_string(cfg.scope) << "-" << to_string(mode) << ": " << covered_predicates << "/"
      << rows.size() << " predicates covered";
  if (overall.roc_auc) log << ", ROC-AUC " << std::setprecision(4) << *overall.roc_auc;
  log << '\n';
}

std::string csv_number(const json& v) {
  if (v.is_null()) return "";
  std::ostringstream s;
  s << std::setprecision(6) << std::fixed << v.get<double>();
  return s.str();
}

void run_report(const PipelineConfig&, const ArtifactPaths& paths, std::ostream& log) {
  std::vector<std::pair<ScopeKind, RuleMode>> runs;
  for (auto scope : {ScopeKind::kGlobal, ScopeKind::kLocal, ScopeKind::kInstance})
    for (auto mode : {RuleMode::kUnbounded, RuleMode::kBounded})
      if (fs::exists(paths.evaluation_file(scope, mode))) runs.emplace_back(scope, mode);
  if (runs.empty()) throw MissingArtifactError((paths.root / "evaluation").string(), "evaluate");

  std::ostringstream csv, top;
  csv << "model,scope,mode,roc_auc,s_mrr,o_mrr,test_size,predicates,covered_predicates\n";
  top << "scope\tmode\tpredicate\texplanation\trank\tcoefficient\tconf\trule\n";
  json fidelity = json::array(), coverage = json::array();
  for (const auto& [scope, mode] : runs) {
    const auto ev = read_json(paths.evaluation_file(scope, mode), "evaluate");
    const auto& o = ev.at("overall");
    const auto n_preds = ev.at("predicates").size();
    csv << ev.at("model").get<std::string>() << ',' << to_string(scope) << ',' << to_string(mode) << ','
        << csv_number(o.at("roc_auc")) << ',' << csv_number(o.at("s_mrr")) << ',' << csv_number(o.at("o_mrr")) << ','
        << o.at("test_size").get<std::size_t>() << ',' << n_preds << ','
        << ev.at("covered_predicates").get<std::size_t>() << '\n';
    fidelity.push_back({{"model", ev.at("model")},
                        {"scope", to_string(scope)},
                        {"mode", to_string(mode)},
                        {"overall", o},
                        {"predicates", ev.at("predicates")}});

    // Coverage and top rules from the explanation files alone.
    const auto dir = paths.explanations_dir(scope, mode);
    if (!fs::is_directory(dir)) throw MissingArtifactError(dir.string(), "explain");
    std::size_t predicates = 0, covered_predicates = 0, explanations = 0, covered_explanations = 0, rules = 0,
                attributing = 0;
    for (const auto& pdir : predicate_dirs(dir)) {
      ++predicates;
      const auto summary = read_json(pdir / "summary.json", "explain");
      const auto label = summary.at("predicate").get<std::string>();
      struct Ranked {
        double coefficient, conf;
        std::string rule, explanation;
      };
      std::vector<Ranked> ranked;
      bool any = false;
      for (const auto& file : explanation_files(pdir)) {
        const auto e = read_json(file, "explain");
        ++explanations;
        const bool cov = e.at("covered").get<bool>();
        covered_explanations += cov;
        any = any || cov;
        rules += e.at("rules").size();
        for (const auto& r : e.at("rules")) {
          const double g = r.at("coefficient").get<double>();
          if (g != 0.0) ++attributing;
          if (cov && g != 0.0)
            ranked.push_back({g, r.at("conf").get<double>(), r.at("rule").get<std::string>(),
                              e.at("scope").at("tag").get<std::string>()});
        }
      }
      covered_predicates += any;
      std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (std::abs(a.coefficient) != std::abs(b.coefficient)) return std::abs(a.coefficient) > std::abs(b.coefficient);
        if (a.rule != b.rule) return a.rule < b.rule;
        return a.explanation < b.explanation;
      });
      for (std::size_t r = 0; r < std::min<std::size_t>(5, ranked.size()); ++r)
        top << to_string(scope) << '\t' << to_string(mode) << '\t' << label << '\t' << ranked[r].explanation << '\t'
            << r + 1 << '\t' << std::setprecision(6) << std::fixed << ranked[r].coefficient << '\t'
            << ranked[r].conf << '\t' << ranked[r].rule << '\n';
    }
    coverage.push_back({{"scope", to_string(scope)},
                        {"mode", to_string(mode)},
                        {"predicates", predicates},
                        {"covered_predicates", covered_predicates},
                        {"explanations", explanations},
                        {"covered_explanations", covered_explanations},
                        {"rules", rules},
                        {"attributing_rules", attributing}});
    log << "report " << to_string(scope) << "-" << to_string(mode) << ": " << covered_predicates << "/" << predicates
        << " predicates covered, " << attributing << "/" << rules << " rules attributing\n";
  }
  const auto dir = paths.report_dir();
  open_out(dir / "fidelity.csv") << csv.str();
  open_out(dir / "top_rules.tsv") << top.str();
  write_json(dir / "fidelity.json", fidelity);
  write_json(dir / "coverage.json", coverage);
}

}  // namespace

void run(Command command, const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  const ArtifactPaths paths{cfg.out_dir};
  switch (command) {
    case Command::kIngest: return run_ingest(cfg, paths, log);
    case Command::kTrain: return run_train(cfg, paths, log);
    case Command::kMine: return run_mine(cfg, paths, log);
    case Command::kExplain: return run_explain(cfg, paths, log);
    case Command::kEvaluate: return run_evaluate(cfg, paths, log);
    case Command::kReport: return run_report(cfg, paths, log);
  }
}

}  // namespace kgx
