#include "kgx/miner.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>

#include "kgx/error.hpp"

namespace kgx {

std::string to_string(RuleMode mode) {
  return mode == RuleMode::kBounded ? "bounded" : "unbounded";
}

RuleMode parse_rule_mode(std::string_view name) {
  if (name == "bounded") return RuleMode::kBounded;
  if (name == "unbounded") return RuleMode::kUnbounded;
  throw std::invalid_argument("unknown rule mode '" + std::string(name) + "'");
}

PredicateId surrogate_id(std::size_t predicate_count, PredicateId p, bool positive) {
  return static_cast<PredicateId>(predicate_count + 2 * static_cast<std::size_t>(p) +
                                  (positive ? 0 : 1));
}

RuleSymbols surrogate_symbols(const Vocabulary& vocab) {
  const auto* v = &vocab;
  RuleSymbols sym;
  sym.entities = &vocab.entities;
  sym.predicate_label = [v](PredicateId id) -> std::string {
    const auto n = v->predicates.size();
    if (id < n) return v->predicates.label(id);
    const auto p = (id - n) / 2;
    const bool positive = (id - n) % 2 == 0;
    return (positive ? "" : "~") + v->predicates.label(static_cast<PredicateId>(p)) + "^f";
  };
  sym.predicate_id = [v](std::string_view label) -> std::optional<PredicateId> {
    if (auto id = v->predicates.find(label)) return *id;
    if (label.size() > 2 && label.substr(label.size() - 2) == "^f") {
      auto base = label.substr(0, label.size() - 2);
      bool positive = true;
      if (!base.empty() && base.front() == '~') {
        positive = false;
        base.remove_prefix(1);
      }
      if (auto p = v->predicates.find(base)) return surrogate_id(v->predicates.size(), *p, positive);
    }
    return std::nullopt;
  };
  return sym;
}

void AugmentedGraph::annotate(PredicateId p, std::vector<EntityPair> accepted,
                              std::vector<EntityPair> rejected) {
  if (p >= base_->predicate_count()) throw DataError("cannot annotate unknown predicate");
  auto normalize = [](std::vector<EntityPair>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  normalize(accepted);
  normalize(rejected);
  facts_[surrogate(p, true)] = std::move(accepted);
  facts_[surrogate(p, false)] = std::move(rejected);
}

int AugmentedGraph::polarity(PredicateId s) const {
  if (!is_surrogate(s)) throw DataError("not a surrogate predicate");
  return (s - base_->predicate_count()) % 2 == 0 ? 1 : -1;
}

AugmentedGraph::Examples AugmentedGraph::examples(PredicateId head) const {
  if (!is_surrogate(head)) throw DataError("rule heads must be surrogate predicates");
  const PredicateId opposite = polarity(head) > 0 ? head + 1 : head - 1;
  Examples ex;
  if (auto it = facts_.find(head); it != facts_.end()) ex.positives = it->second;
  if (auto it = facts_.find(opposite); it != facts_.end()) ex.negatives = it->second;
  return ex;
}

namespace {

constexpr EntityId kUnbound = std::numeric_limits<EntityId>::max();

std::size_t variable_slots(const HornRule& rule) {
  std::uint32_t top = kVarY;
  auto see = [&](const Term& t) {
    if (t.is_variable()) top = std::max(top, t.value());
  };
  see(rule.head.subject);
  see(rule.head.object);
  for (const auto& a : rule.body) {
    see(a.subject);
    see(a.object);
  }
  return top + 1;
}

// Backtracking join of body atoms against the graph indexes. Visitors return
// true to stop the search.
class Grounder {
 public:
  Grounder(const KnowledgeGraph& graph, std::span<const Atom> body) : graph_(graph), body_(body) {}

  template <class Visit>
  bool run(std::vector<EntityId>& b, Visit&& visit) const {
    return step(b, 0, visit);
  }

 private:
  EntityId value(const Term& t, const std::vector<EntityId>& b) const {
    return t.is_constant() ? t.value() : b[t.value()];
  }

  template <class Visit>
  bool step(std::vector<EntityId>& b, std::uint32_t done, Visit& visit) const {
    if (done == (1u << body_.size()) - 1) return visit(b);
    // Most-bound atom first.
    std::size_t pick = body_.size();
    int best = -1;
    for (std::size_t i = 0; i < body_.size(); ++i) {
      if (done & (1u << i)) continue;
      const int bound = (value(body_[i].subject, b) != kUnbound) + (value(body_[i].object, b) != kUnbound);
      if (bound > best) {
        best = bound;
        pick = i;
      }
    }
    const Atom& a = body_[pick];
    const auto mask = done | (1u << pick);
    const EntityId s = value(a.subject, b);
    const EntityId o = value(a.object, b);
    if (s != kUnbound && o != kUnbound) {
      return graph_.contains({s, a.predicate, o}) && step(b, mask, visit);
    }
    if (s != kUnbound) {
      auto& slot = b[a.object.value()];
      for (EntityId v : graph_.objects_of(a.predicate, s)) {
        slot = v;
        if (step(b, mask, visit)) {
          slot = kUnbound;
          return true;
        }
      }
      slot = kUnbound;
      return false;
    }
    if (o != kUnbound) {
      auto& slot = b[a.subject.value()];
      for (EntityId v : graph_.subjects_of(a.predicate, o)) {
        slot = v;
        if (step(b, mask, visit)) {
          slot = kUnbound;
          return true;
        }
      }
      slot = kUnbound;
      return false;
    }
    const auto sv = a.subject.value();
    const auto ov = a.object.value();
    for (const auto& t : graph_.facts_of(a.predicate)) {
      if (sv == ov && t.s != t.o) continue;
      b[sv] = t.s;
      b[ov] = t.o;
      if (step(b, mask, visit)) {
        b[sv] = b[ov] = kUnbound;
        return true;
      }
    }
    b[sv] = b[ov] = kUnbound;
    return false;
  }

  const KnowledgeGraph& graph_;
  std::span<const Atom> body_;
};

// Binds the head onto (s, o); false when the head cannot match.
bool bind_head(const Atom& head, EntityId s, EntityId o, std::vector<EntityId>& b) {
  auto bind = [&](const Term& t, EntityId v) {
    if (t.is_constant()) return t.value() == v;
    auto& slot = b[t.value()];
    if (slot != kUnbound) return slot == v;
    slot = v;
    return true;
  };
  return bind(head.subject, s) && bind(head.object, o);
}

}  // namespace

bool fires(const HornRule& rule, const KnowledgeGraph& graph, EntityId s, EntityId o) {
  std::vector<EntityId> b(variable_slots(rule), kUnbound);
  if (!bind_head(rule.head, s, o, b)) return false;
  return Grounder(graph, rule.body).run(b, [](const std::vector<EntityId>&) { return true; });
}

std::vector<Triple> predictions(const HornRule& rule, const KnowledgeGraph& graph) {
  if (!is_safe(rule)) throw std::invalid_argument("predictions require a safe rule");
  std::vector<Triple> out;
  std::vector<EntityId> b(variable_slots(rule), kUnbound);
  auto resolve = [&](const Term& t) { return t.is_constant() ? t.value() : b[t.value()]; };
  Grounder(graph, rule.body).run(b, [&](const std::vector<EntityId>&) {
    out.push_back({resolve(rule.head.subject), rule.head.predicate, resolve(rule.head.object)});
    return false;
  });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t support(const HornRule& rule, const AugmentedGraph& aug) {
  std::size_t n = 0;
  for (const auto& [s, o] : aug.examples(rule.head.predicate).positives)
    if (fires(rule, aug.base(), s, o)) ++n;
  return n;
}

RuleStats rule_stats(const HornRule& rule, const AugmentedGraph& aug) {
  RuleStats st;
  const auto ex = aug.examples(rule.head.predicate);
  for (const auto& [s, o] : ex.positives)
    if (fires(rule, aug.base(), s, o)) ++st.correct;
  std::size_t wrong = 0;
  for (const auto& [s, o] : ex.negatives)
    if (fires(rule, aug.base(), s, o)) ++wrong;
  st.labeled = st.correct + wrong;
  st.evaluable = st.labeled > 0;
  st.precision = st.evaluable ? static_cast<double>(st.correct) / static_cast<double>(st.labeled) : 0.0;
  return st;
}

bool is_valid_rule(const HornRule& rule, RuleMode mode, std::size_t max_atoms) {
  if (rule.body.empty() || rule.size() > max_atoms) return false;
  if (!rule.head.subject.is_variable()) return false;
  if (rule.head.object.is_constant() && mode == RuleMode::kUnbounded) return false;
  auto atom_ok = [&](const Atom& a) {
    if (a.ground()) return false;
    if (a.subject == a.object) return false;
    if (mode == RuleMode::kUnbounded && a.bounded()) return false;
    return true;
  };
  if (!atom_ok(rule.head)) return false;
  for (std::size_t i = 0; i < rule.body.size(); ++i) {
    if (!atom_ok(rule.body[i])) return false;
    for (std::size_t j = 0; j < i; ++j)
      if (rule.body[i] == rule.body[j]) return false;
  }
  return is_closed(rule) && is_safe(rule) && is_connected(rule);
}

HornRule head_rule(PredicateId head) {
  return {{}, {head, Term::variable(kVarX), Term::variable(kVarY)}, {}};
}

namespace {

struct Refinement {
  HornRule rule;
  // Set for instantiation refinements.
  bool instantiated = false;
  std::uint32_t variable = 0;
  EntityId constant = 0;
};

// The atom holding the single occurrence of `var`, or nullptr.
const Atom* atom_with(const HornRule& rule, std::uint32_t var) {
  auto has = [&](const Atom& a) {
    return (a.subject.is_variable() && a.subject.value() == var) ||
           (a.object.is_variable() && a.object.value() == var);
  };
  if (has(rule.head)) return &rule.head;
  for (const auto& a : rule.body)
    if (has(a)) return &a;
  return nullptr;
}

bool instantiable(const HornRule& rule, std::uint32_t var, RuleMode mode) {
  if (mode != RuleMode::kBounded) return false;
  if (rule.head.subject.is_variable() && rule.head.subject.value() == var) return false;
  const Atom* a = atom_with(rule, var);
  if (!a) return false;
  const Term& other = (a->subject.is_variable() && a->subject.value() == var) ? a->object : a->subject;
  return other.is_variable() && other.value() != var;
}

// Necessary condition for reaching a valid rule: every open variable that
// cannot be instantiated needs a free atom slot to close it.
bool completable(const HornRule& rule, RuleMode mode, std::size_t max_atoms) {
  if (rule.size() > max_atoms) return false;
  std::size_t stuck = 0;
  for (const auto& [var, n] : variable_occurrences(rule))
    if (n == 1 && !instantiable(rule, var, mode)) ++stuck;
  return stuck <= 2 * (max_atoms - rule.size());
}

bool has_open_instantiable(const HornRule& rule, RuleMode mode) {
  for (const auto& [var, n] : variable_occurrences(rule))
    if (n == 1 && instantiable(rule, var, mode)) return true;
  return false;
}

std::vector<Refinement> refine_impl(const HornRule& rule, const AugmentedGraph& aug, RuleMode mode,
                                    std::size_t max_atoms) {
  std::vector<Refinement> out;
  const auto& graph = aug.base();
  const auto occ = variable_occurrences(rule);
  std::vector<std::uint32_t> vars;
  for (const auto& [v, n] : occ) vars.push_back(v);
  const std::uint32_t fresh = std::max<std::uint32_t>(kVarZ, vars.empty() ? 0 : vars.back() + 1);

  std::vector<PredicateId> predicates;
  for (PredicateId q = 0; q < graph.predicate_count(); ++q)
    if (!graph.facts_of(q).empty()) predicates.push_back(q);

  auto keep = [&](HornRule r, bool inst = false, std::uint32_t var = 0, EntityId c = 0) {
    if (completable(r, mode, max_atoms)) out.push_back({std::move(r), inst, var, c});
  };
  auto with_atom = [&](const Atom& a) {
    if (std::find(rule.body.begin(), rule.body.end(), a) != rule.body.end()) return;
    HornRule r{rule.body, rule.head, {}};
    r.body.push_back(a);
    keep(std::move(r));
  };

  if (rule.size() < max_atoms) {
    for (auto u : vars)
      for (auto v : vars)
        if (u != v)
          for (auto q : predicates) with_atom({q, Term::variable(u), Term::variable(v)});
    for (auto u : vars)
      for (auto q : predicates) {
        with_atom({q, Term::variable(u), Term::variable(fresh)});
        with_atom({q, Term::variable(fresh), Term::variable(u)});
      }
  }

  if (mode == RuleMode::kBounded) {
    for (const auto& [var, n] : occ) {
      if (n != 1 || !instantiable(rule, var, mode)) continue;
      const Atom* a = atom_with(rule, var);
      const bool in_subject = a->subject.is_variable() && a->subject.value() == var;
      std::vector<EntityId> constants;
      if (a == &rule.head) {
        for (const auto& [s, o] : aug.examples(rule.head.predicate).positives) constants.push_back(o);
        std::sort(constants.begin(), constants.end());
        constants.erase(std::unique(constants.begin(), constants.end()), constants.end());
      } else {
        const auto d = graph.domains(a->predicate);
        const auto pool = in_subject ? d.subjects : d.objects;
        constants.assign(pool.begin(), pool.end());
      }
      Substitution sigma;
      for (EntityId c : constants) {
        sigma.bind(var, c);
        keep(sigma.apply(rule), true, var, c);
      }
    }
  }

  std::set<std::vector<std::uint32_t>> seen;
  std::vector<Refinement> unique;
  for (auto& r : out)
    if (seen.insert(canonical_key(r.rule)).second) unique.push_back(std::move(r));
  return unique;
}

// Support of every instantiation of `var`, computed in one pass.
std::map<EntityId, std::size_t> support_by_constant(const HornRule& rule, const AugmentedGraph& aug,
                                                    std::uint32_t var) {
  std::map<EntityId, std::size_t> counts;
  const Grounder grounder(aug.base(), rule.body);
  std::vector<EntityId> b(variable_slots(rule), kUnbound);
  std::set<EntityId> values;
  for (const auto& [s, o] : aug.examples(rule.head.predicate).positives) {
    std::fill(b.begin(), b.end(), kUnbound);
    if (!bind_head(rule.head, s, o, b)) continue;
    values.clear();
    if (b[var] != kUnbound) {
      const EntityId v = b[var];
      if (grounder.run(b, [](const std::vector<EntityId>&) { return true; })) values.insert(v);
    } else {
      grounder.run(b, [&](const std::vector<EntityId>& full) {
        values.insert(full[var]);
        return false;
      });
    }
    for (auto v : values) ++counts[v];
  }
  return counts;
}

bool rule_order(const HornRule& a, const HornRule& b) {
  if (a.stats.precision != b.stats.precision) return a.stats.precision > b.stats.precision;
  if (a.stats.correct != b.stats.correct) return a.stats.correct > b.stats.correct;
  return canonical_key(a) < canonical_key(b);
}

}  // namespace

std::vector<HornRule> refine(const HornRule& rule, const AugmentedGraph& aug, RuleMode mode,
                             std::size_t max_atoms) {
  std::vector<HornRule> out;
  for (auto& r : refine_impl(rule, aug, mode, max_atoms)) out.push_back(std::move(r.rule));
  return out;
}

void MinerConfig::validate() const {
  if (max_atoms < 2 || max_atoms > 3)
    throw std::invalid_argument("max_atoms must be 2 or 3 (rules longer than 3 atoms are not supported)");
  if (min_correct < 1) throw std::invalid_argument("min_correct must be >= 1");
  if (!(min_precision >= 0.0 && min_precision <= 1.0))
    throw std::invalid_argument("min_precision must lie in [0, 1]");
}

std::vector<HornRule> mine(const AugmentedGraph& aug, std::span<const PredicateId> heads,
                           const MinerConfig& cfg) {
  cfg.validate();
  std::set<std::vector<std::uint32_t>> seen;
  std::vector<HornRule> results;
  struct Node {
    HornRule rule;
    std::size_t support;
  };
  std::vector<Node> frontier;
  for (auto h : heads) {
    auto r = head_rule(h);
    const auto sup = support(r, aug);
    if (seen.insert(canonical_key(r)).second && sup >= cfg.min_correct)
      frontier.push_back({std::move(r), sup});
  }

  while (!frontier.empty()) {
    std::vector<Node> next;
    for (const auto& parent : frontier) {
      std::map<std::uint32_t, std::map<EntityId, std::size_t>> histograms;
      for (auto& child : refine_impl(parent.rule, aug, cfg.mode, cfg.max_atoms)) {
        if (!seen.insert(canonical_key(child.rule)).second) continue;
        std::size_t sup = 0;
        if (child.instantiated) {
          auto it = histograms.find(child.variable);
          if (it == histograms.end())
            it = histograms.emplace(child.variable, support_by_constant(parent.rule, aug, child.variable)).first;
          const auto hit = it->second.find(child.constant);
          sup = hit == it->second.end() ? 0 : hit->second;
        } else {
          sup = support(child.rule, aug);
        }
        if (sup < cfg.min_correct) continue;
        if (is_valid_rule(child.rule, cfg.mode, cfg.max_atoms)) {
          auto st = rule_stats(child.rule, aug);
          if (st.evaluable && st.precision >= cfg.min_precision) {
            HornRule r = canonicalize(child.rule);
            r.stats = st;
            results.push_back(std::move(r));
          }
        }
        if (child.rule.size() < cfg.max_atoms || has_open_instantiable(child.rule, cfg.mode))
          next.push_back({std::move(child.rule), sup});
      }
    }
    if (cfg.max_rules_per_level > 0 && next.size() > cfg.max_rules_per_level) {
      std::stable_sort(next.begin(), next.end(),
                       [](const Node& a, const Node& b) { return a.support > b.support; });
      next.resize(cfg.max_rules_per_level);
    }
    frontier = std::move(next);
  }
  std::sort(results.begin(), results.end(), rule_order);
  return results;
}

}  // namespace kgx
