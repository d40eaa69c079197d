#include "kgx/kg.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "kgx/error.hpp"

namespace kgx {

std::uint32_t Dictionary::intern(std::string_view label) {
  if (auto it = ids_.find(label); it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(labels_.size());
  labels_.emplace_back(label);
  ids_.emplace(std::string(label), id);
  return id;
}

std::optional<std::uint32_t> Dictionary::find(std::string_view label) const {
  if (auto it = ids_.find(label); it != ids_.end()) return it->second;
  return std::nullopt;
}

std::uint32_t Dictionary::at(std::string_view label) const {
  if (auto id = find(label)) return *id;
  throw DataError("unknown label '" + std::string(label) + "'");
}

const std::string& Dictionary::label(std::uint32_t id) const {
  if (id >= labels_.size()) throw DataError("id " + std::to_string(id) + " out of range");
  return labels_[id];
}

void Dictionary::write(std::ostream& out) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) out << i << '\t' << labels_[i] << '\n';
}

Dictionary Dictionary::read(std::istream& in) {
  Dictionary dict;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("expected `id TAB label`", lineno);
    std::size_t id = 0;
    try {
      id = std::stoul(line.substr(0, tab));
    } catch (const std::exception&) {
      throw ParseError("bad id", lineno);
    }
    if (id != dict.size()) throw ParseError("ids must be contiguous from 0", lineno);
    const auto label = std::string_view(line).substr(tab + 1);
    if (dict.find(label)) throw ParseError("duplicate label '" + std::string(label) + "'", lineno);
    dict.intern(label);
  }
  return dict;
}

KnowledgeGraph::KnowledgeGraph(std::shared_ptr<const Vocabulary> vocab,
                               std::vector<Triple> positives, std::vector<Triple> negatives)
    : vocab_(std::move(vocab)), positives_(std::move(positives)), negatives_(std::move(negatives)) {
  const auto n_entities = vocab_->entities.size();
  const auto n_predicates = vocab_->predicates.size();
  auto check = [&](const Triple& t) {
    if (t.s >= n_entities || t.o >= n_entities || t.p >= n_predicates)
      throw DataError("fact references an id outside the vocabulary");
  };
  for (const auto& t : positives_) check(t);
  for (const auto& t : negatives_) check(t);

  auto normalize = [](std::vector<Triple>& v) {
    std::sort(v.begin(), v.end(), PsoLess{});
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  normalize(positives_);
  normalize(negatives_);
  for (const auto& t : negatives_)
    if (contains(t)) throw DataError("fact is both positive and negative: " + describe(t));

  indexes_.resize(n_predicates);
  std::size_t i = 0;
  for (PredicateId p = 0; p < n_predicates; ++p) {
    auto& idx = indexes_[p];
    idx.begin = i;
    while (i < positives_.size() && positives_[i].p == p) ++i;
    idx.end = i;
    const auto range = std::span(positives_).subspan(idx.begin, idx.end - idx.begin);

    std::vector<std::pair<EntityId, EntityId>> pairs;
    pairs.reserve(range.size());
    for (const auto& t : range) {
      idx.by_subject_s.push_back(t.s);
      idx.by_subject_o.push_back(t.o);
      pairs.emplace_back(t.o, t.s);
    }
    std::sort(pairs.begin(), pairs.end());
    for (const auto& [o, s] : pairs) {
      idx.by_object_o.push_back(o);
      idx.by_object_s.push_back(s);
    }
    idx.subjects = idx.by_subject_s;
    idx.subjects.erase(std::unique(idx.subjects.begin(), idx.subjects.end()), idx.subjects.end());
    idx.objects = idx.by_object_o;
    idx.objects.erase(std::unique(idx.objects.begin(), idx.objects.end()), idx.objects.end());
  }
}

const KnowledgeGraph::PredicateIndex* KnowledgeGraph::index(PredicateId p) const {
  return p < indexes_.size() ? &indexes_[p] : nullptr;
}

std::span<const Triple> KnowledgeGraph::facts_of(PredicateId p) const {
  const auto* idx = index(p);
  if (!idx) return {};
  return std::span(positives_).subspan(idx->begin, idx->end - idx->begin);
}

bool KnowledgeGraph::contains(const Triple& t) const {
  return std::binary_search(positives_.begin(), positives_.end(), t, PsoLess{});
}

bool KnowledgeGraph::contains_negative(const Triple& t) const {
  return std::binary_search(negatives_.begin(), negatives_.end(), t, PsoLess{});
}

std::span<const EntityId> KnowledgeGraph::objects_of(PredicateId p, EntityId s) const {
  const auto* idx = index(p);
  if (!idx) return {};
  auto [lo, hi] = std::equal_range(idx->by_subject_s.begin(), idx->by_subject_s.end(), s);
  const auto first = static_cast<std::size_t>(lo - idx->by_subject_s.begin());
  return std::span(idx->by_subject_o).subspan(first, static_cast<std::size_t>(hi - lo));
}

std::span<const EntityId> KnowledgeGraph::subjects_of(PredicateId p, EntityId o) const {
  const auto* idx = index(p);
  if (!idx) return {};
  auto [lo, hi] = std::equal_range(idx->by_object_o.begin(), idx->by_object_o.end(), o);
  const auto first = static_cast<std::size_t>(lo - idx->by_object_o.begin());
  return std::span(idx->by_object_s).subspan(first, static_cast<std::size_t>(hi - lo));
}

Domains KnowledgeGraph::domains(PredicateId p) const {
  const auto* idx = index(p);
  if (!idx) throw DataError("unknown predicate id " + std::to_string(p));
  return {idx->subjects, idx->objects};
}

PredicateStats KnowledgeGraph::stats(PredicateId p) const {
  const auto* idx = index(p);
  if (!idx) throw DataError("unknown predicate id " + std::to_string(p));
  PredicateStats st;
  st.facts = idx->end - idx->begin;
  if (st.facts > 0) {
    st.tails_per_head = static_cast<double>(st.facts) / static_cast<double>(idx->subjects.size());
    st.heads_per_tail = static_cast<double>(st.facts) / static_cast<double>(idx->objects.size());
  }
  return st;
}

std::size_t KnowledgeGraph::potential_set_size(PredicateId p) const {
  const auto d = domains(p);
  return d.subjects.size() * d.objects.size();
}

std::vector<Triple> KnowledgeGraph::match(const Pattern& pattern) const {
  std::vector<Triple> out;
  auto scan = [&](PredicateId p) {
    if (pattern.s && pattern.o) {
      const Triple t{*pattern.s, p, *pattern.o};
      if (contains(t)) out.push_back(t);
    } else if (pattern.s) {
      for (auto o : objects_of(p, *pattern.s)) out.push_back({*pattern.s, p, o});
    } else if (pattern.o) {
      for (auto s : subjects_of(p, *pattern.o)) out.push_back({s, p, *pattern.o});
    } else {
      for (const auto& t : facts_of(p)) out.push_back(t);
    }
  };
  if (pattern.p) {
    scan(*pattern.p);
  } else {
    for (PredicateId p = 0; p < indexes_.size(); ++p) scan(p);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string KnowledgeGraph::describe(const Triple& t) const {
  auto name = [](const Dictionary& d, std::uint32_t id) {
    return id < d.size() ? d.label(id) : "#" + std::to_string(id);
  };
  return name(vocab_->predicates, t.p) + "(" + name(vocab_->entities, t.s) + ", " +
         name(vocab_->entities, t.o) + ")";
}

std::vector<Triple> read_triples(std::istream& in, Vocabulary& vocab) {
  std::vector<Triple> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string_view rest = line;
    std::string_view fields[3];
    std::size_t n = 0;
    while (true) {
      const auto tab = rest.find('\t');
      if (n == 3) {
        n = 4;
        break;
      }
      fields[n++] = rest.substr(0, tab);
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    if (n != 3) throw ParseError("expected 3 tab-separated fields", lineno);
    for (auto f : fields)
      if (f.empty()) throw ParseError("empty field", lineno);
    out.push_back({vocab.entities.intern(fields[0]), vocab.predicates.intern(fields[1]),
                   vocab.entities.intern(fields[2])});
  }
  return out;
}

KnowledgeGraph ingest_triples(std::istream& in) {
  auto vocab = std::make_shared<Vocabulary>();
  auto facts = read_triples(in, *vocab);
  if (facts.empty()) throw ParseError("no triples in input");
  return KnowledgeGraph(std::move(vocab), std::move(facts));
}

void write_triples(std::ostream& out, std::span<const Triple> facts, const Vocabulary& vocab) {
  for (const auto& t : facts)
    out << vocab.entities.label(t.s) << '\t' << vocab.predicates.label(t.p) << '\t'
        << vocab.entities.label(t.o) << '\n';
}

std::optional<Triple> corrupt_side(const KnowledgeGraph& graph, const Triple& fact, Side side,
                                   Rng& rng, std::span<const Triple> exclude) {
  const auto dom = graph.domains(fact.p);
  const auto pool = side == Side::kSubject ? dom.subjects : dom.objects;
  if (pool.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (int attempt = 0; attempt < kCorruptionAttempts; ++attempt) {
    Triple t = fact;
    (side == Side::kSubject ? t.s : t.o) = pool[pick(rng)];
    if (t == fact || graph.contains(t)) continue;
    if (std::binary_search(exclude.begin(), exclude.end(), t)) continue;
    return t;
  }
  return std::nullopt;
}

CorruptionResult corrupt_fact(const KnowledgeGraph& graph, const Triple& fact, Rng& rng,
                              std::size_t n) {
  if (!graph.contains(fact)) throw DataError("cannot corrupt a non-fact: " + graph.describe(fact));
  CorruptionResult result;
  if (n == 0) return result;
  const auto st = graph.stats(fact.p);
  const double p_subject = st.tails_per_head / (st.tails_per_head + st.heads_per_tail);
  std::bernoulli_distribution subject_side(p_subject);
  for (std::size_t i = 0; i < n; ++i) {
    const auto side = subject_side(rng) ? Side::kSubject : Side::kObject;
    if (auto t = corrupt_side(graph, fact, side, rng))
      result.negatives.push_back(*t);
    else
      ++result.skipped;
  }
  return result;
}

}  // namespace kgx
