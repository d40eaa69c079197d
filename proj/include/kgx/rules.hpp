#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgx/kg.hpp"

namespace kgx {

/// A rule argument: a variable or an entity constant. The kind tag keeps
/// variable ids disjoint from entity ids.
class Term {
 public:
  enum class Kind : std::uint8_t { kVariable, kConstant };

  static constexpr Term variable(std::uint32_t id) { return Term(Kind::kVariable, id); }
  static constexpr Term constant(EntityId e) { return Term(Kind::kConstant, e); }

  constexpr bool is_variable() const { return kind_ == Kind::kVariable; }
  constexpr bool is_constant() const { return kind_ == Kind::kConstant; }
  constexpr std::uint32_t value() const { return value_; }

  friend constexpr auto operator<=>(const Term&, const Term&) = default;

 private:
  constexpr Term(Kind kind, std::uint32_t value) : kind_(kind), value_(value) {}
  Kind kind_ = Kind::kVariable;
  std::uint32_t value_ = 0;
};

// Conventional variable ids: the head subject is x, the head object y.
inline constexpr std::uint32_t kVarX = 0;
inline constexpr std::uint32_t kVarY = 1;
inline constexpr std::uint32_t kVarZ = 2;

struct Atom {
  PredicateId predicate = 0;
  Term subject = Term::variable(kVarX);
  Term object = Term::variable(kVarY);

  bool bounded() const { return subject.is_constant() || object.is_constant(); }
  bool ground() const { return subject.is_constant() && object.is_constant(); }
  friend auto operator<=>(const Atom&, const Atom&) = default;
};

struct RuleStats {
  std::size_t correct = 0;          // predictions landing on labeled positives
  std::size_t labeled = 0;          // predictions landing on any labeled fact
  double precision = 0.0;           // correct / labeled
  bool evaluable = false;           // labeled > 0

  double conf() const { return precision; }
  friend bool operator==(const RuleStats&, const RuleStats&) = default;
};

struct HornRule {
  std::vector<Atom> body;
  Atom head;
  RuleStats stats;

  std::size_t size() const { return body.size() + 1; }
  /// Rules compare equal when their atoms do; stats are ignored.
  friend bool operator==(const HornRule& a, const HornRule& b) {
    return a.head == b.head && a.body == b.body;
  }
};

/// Partial map from variables to constants.
class Substitution {
 public:
  Substitution() = default;
  Substitution(std::initializer_list<std::pair<const std::uint32_t, EntityId>> init) : map_(init) {}

  void bind(std::uint32_t var, EntityId e) { map_[var] = e; }
  std::optional<EntityId> lookup(std::uint32_t var) const;
  bool empty() const { return map_.empty(); }

  Term apply(const Term& t) const;
  Atom apply(const Atom& a) const;
  HornRule apply(const HornRule& r) const;

 private:
  std::map<std::uint32_t, EntityId> map_;
};

/// Number of occurrences of each variable across head and body.
std::map<std::uint32_t, int> variable_occurrences(const HornRule& rule);

bool is_safe(const HornRule& rule);       // head variables occur in the body
bool is_closed(const HornRule& rule);     // every variable occurs at least twice
bool is_connected(const HornRule& rule);  // atoms linked through shared variables

/// Variables renamed to a canonical numbering and body atoms sorted, so two
/// rules equal up to variable renaming map to the same key.
HornRule canonicalize(const HornRule& rule);
std::vector<std::uint32_t> canonical_key(const HornRule& rule);

/// Label lookups for printing and parsing; lets surrogate predicates that are
/// not in the graph vocabulary take part.
struct RuleSymbols {
  std::function<std::string(PredicateId)> predicate_label;
  std::function<std::optional<PredicateId>(std::string_view)> predicate_id;
  const Dictionary* entities = nullptr;
};

// `body & body => head`, atoms as `pred(arg,arg)`, variables `?x ?y ?z ?w...`.
// Constants containing any of `(),&"` or whitespace, or starting with `?`, are
// double-quoted with `\` escapes.
std::string format_atom(const Atom& atom, const RuleSymbols& symbols);
std::string format_rule(const HornRule& rule, const RuleSymbols& symbols);
/// Adds `  precision=<float> correct=<int>`.
std::string format_rule_with_stats(const HornRule& rule, const RuleSymbols& symbols);
/// Parses either form; stats are read back when present.
HornRule parse_rule(std::string_view text, const RuleSymbols& symbols);

}  // namespace kgx
