#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kgx {

using EntityId = std::uint32_t;
using PredicateId = std::uint32_t;
using Rng = std::mt19937_64;

struct Triple {
  EntityId s = 0;
  PredicateId p = 0;
  EntityId o = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

// Ordering used by the per-predicate indexes: (p, s, o).
struct PsoLess {
  bool operator()(const Triple& a, const Triple& b) const {
    if (a.p != b.p) return a.p < b.p;
    if (a.s != b.s) return a.s < b.s;
    return a.o < b.o;
  }
};

/// Bijective label <-> dense id map. Ids are contiguous from 0 in order of
/// first interning.
class Dictionary {
 public:
  std::uint32_t intern(std::string_view label);
  std::optional<std::uint32_t> find(std::string_view label) const;
  std::uint32_t at(std::string_view label) const;  // throws DataError
  const std::string& label(std::uint32_t id) const;
  std::size_t size() const { return labels_.size(); }
  std::span<const std::string> labels() const { return labels_; }

  // `id TAB label` per line.
  void write(std::ostream& out) const;
  static Dictionary read(std::istream& in);

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>> ids_;
  std::vector<std::string> labels_;
};

struct Vocabulary {
  Dictionary entities;
  Dictionary predicates;
};

struct Pattern {
  std::optional<EntityId> s;
  std::optional<PredicateId> p;
  std::optional<EntityId> o;
};

struct Domains {
  std::span<const EntityId> subjects;  // D^p, sorted
  std::span<const EntityId> objects;   // D̄^p, sorted
};

struct PredicateStats {
  std::size_t facts = 0;
  double tails_per_head = 0.0;  // tph
  double heads_per_tail = 0.0;  // hpt
};

enum class Side { kSubject, kObject };

/// Immutable fact store with (p,s,o) and (p,o,s) indexes.
///
/// Holds the positive facts K+ and, optionally, explicit negatives K-. All
/// lookups are binary searches over sorted per-predicate arrays, so any
/// number of readers may share one instance.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  KnowledgeGraph(std::shared_ptr<const Vocabulary> vocab, std::vector<Triple> positives,
                 std::vector<Triple> negatives = {});

  const Vocabulary& vocabulary() const { return *vocab_; }
  std::shared_ptr<const Vocabulary> shared_vocabulary() const { return vocab_; }
  std::size_t entity_count() const { return vocab_->entities.size(); }
  std::size_t predicate_count() const { return vocab_->predicates.size(); }

  std::span<const Triple> facts() const { return positives_; }  // sorted (p,s,o)
  std::span<const Triple> negatives() const { return negatives_; }
  std::span<const Triple> facts_of(PredicateId p) const;
  bool contains(const Triple& t) const;
  bool contains_negative(const Triple& t) const;

  std::span<const EntityId> objects_of(PredicateId p, EntityId s) const;
  std::span<const EntityId> subjects_of(PredicateId p, EntityId o) const;

  Domains domains(PredicateId p) const;  // throws DataError for unknown p
  PredicateStats stats(PredicateId p) const;
  std::size_t potential_set_size(PredicateId p) const;

  /// All positive facts matching the pattern, sorted by (s, p, o).
  std::vector<Triple> match(const Pattern& pattern) const;

  std::string describe(const Triple& t) const;

 private:
  struct PredicateIndex {
    std::size_t begin = 0, end = 0;  // range in positives_
    std::vector<EntityId> by_subject_s, by_subject_o;  // sorted by (s, o)
    std::vector<EntityId> by_object_o, by_object_s;    // sorted by (o, s)
    std::vector<EntityId> subjects, objects;           // distinct, sorted
  };
  const PredicateIndex* index(PredicateId p) const;

  std::shared_ptr<const Vocabulary> vocab_ = std::make_shared<Vocabulary>();
  std::vector<Triple> positives_;
  std::vector<Triple> negatives_;
  std::vector<PredicateIndex> indexes_;
};

/// Parses `subject TAB predicate TAB object` lines, interning labels into
/// `vocab`. Blank lines are skipped; CRLF endings are accepted. Duplicate
/// triples are kept; the KnowledgeGraph constructor removes them.
std::vector<Triple> read_triples(std::istream& in, Vocabulary& vocab);

/// Reads a whole TSV stream into a fresh graph. Empty input is an error.
KnowledgeGraph ingest_triples(std::istream& in);

void write_triples(std::ostream& out, std::span<const Triple> facts, const Vocabulary& vocab);

struct CorruptionResult {
  std::vector<Triple> negatives;
  std::size_t skipped = 0;  // slots abandoned after the attempt cap
};

inline constexpr int kCorruptionAttempts = 100;

/// Replaces one side of `fact` with an entity drawn uniformly from the
/// predicate's domain on that side. The result is never in `graph`'s
/// positives, never equal to `fact`, and never in `exclude` (sorted).
std::optional<Triple> corrupt_side(const KnowledgeGraph& graph, const Triple& fact, Side side,
                                   Rng& rng, std::span<const Triple> exclude = {});

/// Bernoulli negative sampling: the subject is replaced with probability
/// tph / (tph + hpt), the object otherwise. `fact` must be a positive of
/// `graph`.
CorruptionResult corrupt_fact(const KnowledgeGraph& graph, const Triple& fact, Rng& rng,
                              std::size_t n);

}  // namespace kgx
