#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "kgx/kg.hpp"

namespace kgx {

enum class ScopeKind { kGlobal, kLocal, kInstance };

std::string to_string(ScopeKind kind);
ScopeKind parse_scope_kind(std::string_view name);  // "global" | "local" | "instance"

struct ScopeDescriptor {
  ScopeKind kind = ScopeKind::kGlobal;
  std::size_t cluster = 0;       // local only
  std::size_t k = 0;             // local only
  std::optional<Triple> target;  // instance only

  /// `global`, `local:<cluster>/<k>` or `instance:<s>|<p>|<o>` with labels.
  std::string tag(const Vocabulary& vocab) const;
  friend bool operator==(const ScopeDescriptor&, const ScopeDescriptor&) = default;
};

struct ContextFact {
  Triple fact;
  bool truth = false;
  std::size_t group = 0;  // the true fact this one was derived from
};

/// Labeled sample of Ω^p for one predicate: true facts and their
/// corruptions, grouped by originating true fact.
struct Context {
  PredicateId predicate = 0;
  std::vector<ContextFact> facts;
  ScopeDescriptor scope;

  std::vector<Triple> true_facts() const;
  /// All facts, sorted, for exclusion lookups.
  std::vector<Triple> sorted_facts() const;
  std::size_t positives() const;
  std::size_t negatives() const { return facts.size() - positives(); }
};

}  // namespace kgx
