#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "kgx/kg.hpp"

namespace kgx {

/// Train/valid/test splits over one shared vocabulary.
///
/// `train` is what link predictors and rule bodies see. `universe` holds
/// every known-true fact (all splits); predicate domains, corruption
/// exclusion and filtered ranking are computed against it.
struct Dataset {
  std::shared_ptr<Vocabulary> vocab;
  KnowledgeGraph train;
  KnowledgeGraph universe;
  std::vector<Triple> valid;
  std::vector<Triple> test;

  static Dataset from_streams(std::istream& train, std::istream* valid, std::istream* test);
  static Dataset from_files(const std::filesystem::path& train, const std::filesystem::path& valid,
                            const std::filesystem::path& test);
  /// Rebuilds a dataset from triples already interned into `vocab`.
  static Dataset from_parts(std::shared_ptr<Vocabulary> vocab, std::vector<Triple> train,
                            std::vector<Triple> valid, std::vector<Triple> test);

  /// Test facts of predicate p, sorted.
  std::vector<Triple> test_facts(PredicateId p) const;
  /// Predicates with at least one test fact, ascending.
  std::vector<PredicateId> test_predicates() const;
};

}  // namespace kgx
