#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kgx/kg.hpp"
#include "kgx/rules.hpp"

namespace kgx {

using EntityPair = std::pair<EntityId, EntityId>;

enum class RuleMode { kUnbounded, kBounded };
std::string to_string(RuleMode mode);
RuleMode parse_rule_mode(std::string_view name);

/// Surrogate predicate ids live after the graph's own predicates:
/// p^f = P + 2p and ¬p^f = P + 2p + 1 for a vocabulary of P predicates.
PredicateId surrogate_id(std::size_t predicate_count, PredicateId p, bool positive);

/// Rule symbols for a vocabulary extended with surrogate predicates, which
/// print as `label^f` and `~label^f`.
RuleSymbols surrogate_symbols(const Vocabulary& vocab);

/// K ∪ K̂: the original graph plus black-box verdicts for one or more
/// predicates, stored as labeled (subject, object) pairs per surrogate.
/// Rule bodies range over the original graph only.
class AugmentedGraph {
 public:
  explicit AugmentedGraph(const KnowledgeGraph& base) : base_(&base) {}

  /// Records p^f(s,o) for `accepted` pairs and ¬p^f(s,o) for `rejected`.
  void annotate(PredicateId p, std::vector<EntityPair> accepted, std::vector<EntityPair> rejected);

  const KnowledgeGraph& base() const { return *base_; }
  PredicateId surrogate(PredicateId p, bool positive) const {
    return surrogate_id(base_->predicate_count(), p, positive);
  }
  bool is_surrogate(PredicateId id) const { return id >= base_->predicate_count(); }
  /// +1 for p^f, -1 for ¬p^f.
  int polarity(PredicateId surrogate) const;

  /// Facts of `head` (positives) and of its opposite surrogate (negatives).
  struct Examples {
    std::span<const EntityPair> positives;
    std::span<const EntityPair> negatives;
  };
  Examples examples(PredicateId head) const;

  RuleSymbols symbols() const { return surrogate_symbols(base_->vocabulary()); }

 private:
  const KnowledgeGraph* base_;
  std::map<PredicateId, std::vector<EntityPair>> facts_;  // surrogate -> sorted pairs
};

/// True iff some substitution grounds every body atom in `graph` while
/// mapping the head onto (s, o).
bool fires(const HornRule& rule, const KnowledgeGraph& graph, EntityId s, EntityId o);

/// All ground heads derivable from `graph`, sorted and de-duplicated.
/// The rule must be safe.
std::vector<Triple> predictions(const HornRule& rule, const KnowledgeGraph& graph);

/// Number of labeled positives of the head the rule predicts. Defined for
/// unsafe (partial) rules too, where it is monotone under refinement.
std::size_t support(const HornRule& rule, const AugmentedGraph& aug);

/// Precision against explicit counter-examples: predictions on unlabeled
/// pairs are ignored.
RuleStats rule_stats(const HornRule& rule, const AugmentedGraph& aug);

/// Every atom has a variable and at most one constant, no atom repeats a
/// variable, constants only in the head object or the body, and the rule is
/// closed, safe and connected with 1..max_atoms-1 body atoms.
bool is_valid_rule(const HornRule& rule, RuleMode mode, std::size_t max_atoms = 3);

/// The bare head p(?x, ?y).
HornRule head_rule(PredicateId head);

/// One refinement step: closing atoms over two existing variables, dangling
/// atoms with one fresh variable (only where the rule can still be closed
/// within `max_atoms`), and in bounded mode instantiation of a variable that
/// occurs once with each constant seen in that position. Results are
/// de-duplicated up to variable renaming.
std::vector<HornRule> refine(const HornRule& rule, const AugmentedGraph& aug, RuleMode mode,
                             std::size_t max_atoms = 3);

struct MinerConfig {
  std::size_t max_atoms = 3;
  std::size_t min_correct = 2;
  double min_precision = 0.10;
  RuleMode mode = RuleMode::kUnbounded;
  std::size_t max_rules_per_level = 0;  // 0: exhaustive search

  void validate() const;
};

/// Breadth-first refinement from the bare heads, pruning on support.
/// Output is sorted by precision desc, correct desc, canonical form asc.
std::vector<HornRule> mine(const AugmentedGraph& aug, std::span<const PredicateId> heads,
                           const MinerConfig& cfg);

}  // namespace kgx
