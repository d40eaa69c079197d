#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kgx/context.hpp"
#include "kgx/dataset.hpp"
#include "kgx/embeddings.hpp"
#include "kgx/scoping.hpp"

namespace kgx {

struct PipelineConfig {
  std::filesystem::path train_path, valid_path, test_path;

  ModelKind model_kind = ModelKind::kTransE;
  int dim = 32;
  int norm = 2;
  TrainConfig training;

  ScopeKind scope = ScopeKind::kGlobal;
  ScopingConfig scoping;
  std::vector<std::string> predicates;  // empty: every predicate with test facts
  unsigned threads = 1;

  std::filesystem::path out_dir = "out";

  /// Defaults with both seeds set.
  static PipelineConfig defaults();

  /// Parses an INI file on top of the defaults. Relative data and output
  /// paths resolve against the file's directory. Every problem is collected
  /// into one ConfigError.
  static PipelineConfig load(const std::filesystem::path& path);
  static PipelineConfig parse(std::istream& in, const std::filesystem::path& base_dir = {});

  /// Sets `section.key`; throws ConfigError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Overrides both stochastic seeds.
  void set_seed(std::uint64_t seed);

  std::vector<std::string> problems() const;
  void validate() const;  // throws ConfigError
  std::string render() const;

  std::uint64_t model_seed() const { return training.seed.value_or(0); }
  std::uint64_t explain_seed() const { return scoping.seed; }

 private:
  bool explain_seed_set_ = true;
};

/// Artifact layout below the output directory.
struct ArtifactPaths {
  std::filesystem::path root;

  std::filesystem::path kg_dir() const { return root / "kg"; }
  std::filesystem::path model_dir() const { return root / "model"; }
  std::filesystem::path model_file() const { return model_dir() / "model.bin"; }
  std::filesystem::path contexts_dir() const { return root / "contexts" / "global"; }
  std::filesystem::path calibration_file() const { return root / "calibration.tsv"; }
  std::filesystem::path rules_dir(RuleMode mode) const { return root / "rules" / to_string(mode); }
  std::filesystem::path explanations_dir(ScopeKind scope, RuleMode mode) const;
  std::filesystem::path evaluation_file(ScopeKind scope, RuleMode mode) const;
  std::filesystem::path report_dir() const { return root / "report"; }
};

/// File stem for a predicate: `<id>_<label with non-alphanumerics as _>`.
std::string predicate_stem(const Vocabulary& vocab, PredicateId p);

/// Global context for `p`: its test facts plus corruptions against the
/// universe, seeded per predicate.
Context predicate_context(const Dataset& ds, PredicateId p, std::uint64_t seed);

/// Calibrated θ on the global context's training split.
double predicate_threshold(const Scorer& f, const Context& global, const ScopingConfig& cfg);

/// Explanations of one predicate in one scope.
ScopeResult explain_scope(const Scorer& f, const EmbeddingModel& model, const ExplainGraphs& graphs,
                          const Context& global, ScopeKind scope, const ScopingConfig& cfg, double theta);

/// Per-predicate seed used by mine and explain.
std::uint64_t predicate_seed(std::uint64_t base, PredicateId p);

Dataset load_ingested(const ArtifactPaths& paths);

/// Context CSV: subject,predicate,object,label,group,scope,split.
void write_context_csv(std::ostream& out, const Vocabulary& vocab,
                       const std::vector<std::pair<const Context*, std::string>>& parts);
/// Reads rows whose split column equals `split` (any split when empty).
Context read_context_csv(std::istream& in, const Vocabulary& vocab, const std::string& split = {});

enum class Command { kIngest, kTrain, kMine, kExplain, kEvaluate, kReport };
Command parse_command(std::string_view name);
std::string to_string(Command command);

/// Runs one stage. Progress lines go to `log`.
void run(Command command, const PipelineConfig& cfg, std::ostream& log);

}  // namespace kgx
