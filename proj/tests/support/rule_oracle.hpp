#pragma once

// Brute-force reference for the rule miner: enumerates every syntactically
// valid rule of at most three atoms and scores it by trying every variable
// assignment. Shares no code with the miner beyond the rule data types.

#include <algorithm>
#include <cstdint>
#include <map>
#include <unordered_set>
#include <vector>

#include "kgx/kg.hpp"
#include "kgx/miner.hpp"
#include "kgx/rules.hpp"

namespace kgx::testing {

inline std::uint64_t pack_fact(PredicateId p, EntityId s, EntityId o) {
  return (static_cast<std::uint64_t>(p) << 42) | (static_cast<std::uint64_t>(s) << 21) | o;
}

class RuleOracle {
 public:
  RuleOracle(const KnowledgeGraph& graph, std::size_t entities) : entities_(entities) {
    for (const auto& t : graph.facts()) facts_.insert(pack_fact(t.p, t.s, t.o));
  }

  // Tries every assignment of the non-head variables.
  bool fires(const HornRule& rule, EntityId s, EntityId o) const {
    std::map<std::uint32_t, EntityId> b;
    if (!rule.head.subject.is_variable()) return false;
    b[rule.head.subject.value()] = s;
    if (rule.head.object.is_constant()) {
      if (rule.head.object.value() != o) return false;
    } else {
      b[rule.head.object.value()] = o;
    }
    std::vector<std::uint32_t> free;
    for (const auto& a : rule.body)
      for (const auto& t : {a.subject, a.object})
        if (t.is_variable() && !b.count(t.value()) &&
            std::find(free.begin(), free.end(), t.value()) == free.end())
          free.push_back(t.value());
    return search(rule, b, free, 0);
  }

  RuleStats stats(const HornRule& rule, std::span<const EntityPair> positives,
                  std::span<const EntityPair> negatives) const {
    RuleStats st;
    std::size_t wrong = 0;
    for (const auto& [s, o] : positives) st.correct += fires(rule, s, o);
    for (const auto& [s, o] : negatives) wrong += fires(rule, s, o);
    st.labeled = st.correct + wrong;
    st.evaluable = st.labeled > 0;
    st.precision = st.evaluable ? static_cast<double>(st.correct) / static_cast<double>(st.labeled) : 0.0;
    return st;
  }

 private:
  bool search(const HornRule& rule, std::map<std::uint32_t, EntityId>& b,
              const std::vector<std::uint32_t>& free, std::size_t i) const {
    if (i == free.size()) {
      auto val = [&](const Term& t) { return t.is_constant() ? t.value() : b.at(t.value()); };
      for (const auto& a : rule.body)
        if (!facts_.count(pack_fact(a.predicate, val(a.subject), val(a.object)))) return false;
      return true;
    }
    for (EntityId e = 0; e < entities_; ++e) {
      b[free[i]] = e;
      if (search(rule, b, free, i + 1)) return true;
    }
    b.erase(free[i]);
    return false;
  }

  std::size_t entities_;
  std::unordered_set<std::uint64_t> facts_;
};

// Independent restatement of the rule language.
inline bool oracle_valid(const HornRule& rule, bool bounded) {
  std::vector<const Atom*> atoms{&rule.head};
  for (const auto& a : rule.body) atoms.push_back(&a);
  std::map<std::uint32_t, int> occ;
  for (const auto* a : atoms) {
    if (a->subject.is_constant() && a->object.is_constant()) return false;
    if (a->subject == a->object) return false;
    if (!bounded && (a->subject.is_constant() || a->object.is_constant())) return false;
    for (const auto& t : {a->subject, a->object})
      if (t.is_variable()) ++occ[t.value()];
  }
  if (!rule.head.subject.is_variable()) return false;
  for (const auto& [v, n] : occ)
    if (n < 2) return false;
  // Connectivity by flood fill over shared variables.
  std::vector<bool> reached(atoms.size(), false);
  reached[0] = true;
  for (bool grew = true; grew;) {
    grew = false;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (reached[i]) continue;
      for (std::size_t j = 0; j < atoms.size(); ++j) {
        if (!reached[j]) continue;
        for (const auto& t : {atoms[i]->subject, atoms[i]->object})
          if (t.is_variable() && (t == atoms[j]->subject || t == atoms[j]->object)) {
            reached[i] = true;
            grew = true;
          }
      }
    }
  }
  return std::all_of(reached.begin(), reached.end(), [](bool r) { return r; });
}

struct OracleRule {
  HornRule rule;
  RuleStats stats;
};

// Every valid rule with head in `heads` meeting the thresholds, keyed by
// canonical form.
inline std::map<std::vector<std::uint32_t>, OracleRule> oracle_mine(
    const AugmentedGraph& aug, std::span<const PredicateId> heads, bool bounded,
    std::size_t min_correct, double min_precision) {
  const auto& g = aug.base();
  const auto n = static_cast<EntityId>(g.entity_count());
  RuleOracle oracle(g, n);
  std::map<std::vector<std::uint32_t>, OracleRule> out;

  for (PredicateId h : heads) {
    const auto ex = aug.examples(h);
    std::vector<Atom> head_atoms{{h, Term::variable(kVarX), Term::variable(kVarY)}};
    if (bounded)
      for (EntityId c = 0; c < n; ++c) head_atoms.push_back({h, Term::variable(kVarX), Term::constant(c)});

    for (const auto& head : head_atoms) {
      std::vector<Term> terms{Term::variable(kVarX), Term::variable(kVarZ)};
      if (head.object.is_variable()) terms.push_back(Term::variable(kVarY));
      if (bounded)
        for (EntityId c = 0; c < n; ++c) terms.push_back(Term::constant(c));
      std::vector<Atom> candidates;
      for (PredicateId q = 0; q < g.predicate_count(); ++q)
        for (const auto& a : terms)
          for (const auto& b : terms)
            if (!(a == b) && !(a.is_constant() && b.is_constant())) candidates.push_back({q, a, b});

      auto consider = [&](std::vector<Atom> body) {
        HornRule r{std::move(body), head, {}};
        if (!oracle_valid(r, bounded)) return;
        const auto st = oracle.stats(r, ex.positives, ex.negatives);
        if (st.correct < min_correct || !st.evaluable || st.precision < min_precision) return;
        out[canonical_key(r)] = {r, st};
      };
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        consider({candidates[i]});
        for (std::size_t j = i + 1; j < candidates.size(); ++j) consider({candidates[i], candidates[j]});
      }
    }
  }
  return out;
}

struct RandomMiningInstance {
  KnowledgeGraph graph;
  PredicateId target = 0;
  std::vector<EntityPair> accepted, rejected;
};

// A random graph plus black-box style verdicts for one predicate. Labeled
// pairs are biased toward pairs linked by one or two hops so that rules have
// support.
inline RandomMiningInstance random_instance(std::mt19937_64& rng, std::size_t max_entities,
                                            std::size_t max_predicates, std::size_t max_facts) {
  std::uniform_int_distribution<std::size_t> ne(6, max_entities), np(2, max_predicates);
  const auto n_ent = ne(rng);
  const auto n_pred = np(rng);
  std::uniform_int_distribution<std::size_t> nf(n_ent, max_facts);
  const auto n_facts = nf(rng);
  auto vocab = std::make_shared<Vocabulary>();
  for (std::size_t i = 0; i < n_ent; ++i) vocab->entities.intern("e" + std::to_string(i));
  for (std::size_t i = 0; i < n_pred; ++i) vocab->predicates.intern("r" + std::to_string(i));
  std::uniform_int_distribution<EntityId> ent(0, static_cast<EntityId>(n_ent - 1));
  std::uniform_int_distribution<PredicateId> pred(0, static_cast<PredicateId>(n_pred - 1));
  // A few hub entities make constants and two-hop paths recur.
  std::uniform_int_distribution<EntityId> hub(0, static_cast<EntityId>(std::min<std::size_t>(n_ent, 4) - 1));
  std::bernoulli_distribution use_hub(0.3);
  std::vector<Triple> facts;
  for (std::size_t i = 0; i < n_facts; ++i) {
    Triple t{ent(rng), pred(rng), use_hub(rng) ? hub(rng) : ent(rng)};
    if (t.s != t.o) facts.push_back(t);
  }
  KnowledgeGraph g(vocab, facts);

  std::vector<EntityPair> linked;
  for (const auto& a : g.facts()) {
    linked.push_back({a.s, a.o});
    for (const auto& b : g.facts())
      if (b.s == a.o && a.s != b.o) linked.push_back({a.s, b.o});
  }
  std::uniform_int_distribution<std::size_t> nl(10, 60);
  const auto n_labeled = nl(rng);
  std::bernoulli_distribution from_linked(0.7), accept(0.6);
  std::map<EntityPair, bool> verdict;
  for (std::size_t i = 0; i < n_labeled; ++i) {
    EntityPair pr;
    if (from_linked(rng) && !linked.empty())
      pr = linked[std::uniform_int_distribution<std::size_t>(0, linked.size() - 1)(rng)];
    else
      pr = {ent(rng), ent(rng)};
    verdict.emplace(pr, accept(rng));
  }
  RandomMiningInstance inst{std::move(g), pred(rng), {}, {}};
  for (const auto& [pr, yes] : verdict) (yes ? inst.accepted : inst.rejected).push_back(pr);
  return inst;
}

}  // namespace kgx::testing
