#include "kgx/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "kgx/error.hpp"

namespace kgx {

std::pair<Context, Context> split_context(const Context& context, double test_fraction,
                                          std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("test_fraction must lie in (0, 1)");
  if (context.facts.size() < 4) throw DataError("context has fewer than 4 facts");
  if (context.positives() == 0 || context.negatives() == 0)
    throw DataError("context has a single class");

  // group id -> (has positive, has negative)
  std::map<std::size_t, std::pair<bool, bool>> composition;
  for (const auto& f : context.facts) {
    auto& c = composition[f.group];
    (f.truth ? c.first : c.second) = true;
  }
  if (composition.size() < 2) throw DataError("context has fewer than 2 groups");

  std::map<std::pair<bool, bool>, std::vector<std::size_t>> strata;
  for (const auto& [g, c] : composition) strata[c].push_back(g);
  Rng rng(seed);
  std::vector<std::size_t> test_groups;
  std::vector<std::size_t> leftovers;
  for (auto& [key, groups] : strata) {
    std::shuffle(groups.begin(), groups.end(), rng);
    const auto n = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(groups.size())));
    test_groups.insert(test_groups.end(), groups.begin(), groups.begin() + static_cast<std::ptrdiff_t>(n));
    leftovers.insert(leftovers.end(), groups.begin() + static_cast<std::ptrdiff_t>(n), groups.end());
  }
  if (test_groups.empty()) {
    test_groups.push_back(leftovers.front());
  } else if (leftovers.empty()) {
    test_groups.pop_back();
  }
  std::sort(test_groups.begin(), test_groups.end());

  Context train{context.predicate, {}, context.scope};
  Context test{context.predicate, {}, context.scope};
  for (const auto& f : context.facts)
    (std::binary_search(test_groups.begin(), test_groups.end(), f.group) ? test : train).facts.push_back(f);
  for (const auto* side : {&train, &test})
    if (side->positives() == 0 || side->negatives() == 0)
      throw DataError("context split leaves a side with a single class");
  return {std::move(train), std::move(test)};
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Mann-Whitney U from mid-ranks of the positives.
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = (static_cast<double>(i) + static_cast<double>(j) + 1.0) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] > 0) {
        rank_sum += mid;
        ++pos;
      }
    i = j;
  }
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) throw DataError("ROC-AUC needs both classes");
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

double filtered_rank(const std::function<double(const Triple&)>& score, const RankQuery& query,
                     const KnowledgeGraph& universe, std::span<const Triple> extra_true) {
  const auto dom = universe.domains(query.fact.p);
  const auto pool = query.side == Side::kSubject ? dom.subjects : dom.objects;
  if (pool.empty()) throw DataError("empty candidate pool");
  const EntityId truth = query.side == Side::kSubject ? query.fact.s : query.fact.o;
  if (!std::binary_search(pool.begin(), pool.end(), truth))
    throw DataError("true entity is outside the candidate pool");
  const double target = score(query.fact);
  double higher = 0.0, ties = 0.0;
  for (EntityId c : pool) {
    if (c == truth) continue;
    Triple t = query.fact;
    (query.side == Side::kSubject ? t.s : t.o) = c;
    if (universe.contains(t) || std::binary_search(extra_true.begin(), extra_true.end(), t)) continue;
    const double v = score(t);
    if (v > target)
      higher += 1.0;
    else if (v == target)
      ties += 1.0;
  }
  return 1.0 + higher + ties / 2.0;
}

double mrr(const std::function<double(const Triple&)>& score, std::span<const RankQuery> queries,
           const KnowledgeGraph& universe, std::span<const Triple> extra_true) {
  if (queries.empty()) throw DataError("MRR needs at least one query");
  double sum = 0.0;
  for (const auto& q : queries) sum += 1.0 / filtered_rank(score, q, universe, extra_true);
  return sum / static_cast<double>(queries.size());
}

FidelityRecord weighted_fidelity(std::span<const FidelityRecord> records) {
  if (records.empty()) throw std::invalid_argument("weighted_fidelity needs at least one record");
  FidelityRecord out;
  out.scope = records.front().scope;
  for (const auto& r : records) out.test_size += r.test_size;
  auto combine = [&](std::optional<double> FidelityRecord::*metric) -> std::optional<double> {
    double sum = 0.0, weight = 0.0;
    std::size_t present = 0;
    std::optional<double> only;
    for (const auto& r : records)
      if (r.*metric) {
        sum += static_cast<double>(r.test_size) * *(r.*metric);
        weight += static_cast<double>(r.test_size);
        only = r.*metric;
        ++present;
      }
    if (present == 1) return only;
    if (weight == 0.0) return std::nullopt;
    return sum / weight;
  };
  out.roc_auc = combine(&FidelityRecord::roc_auc);
  out.s_mrr = combine(&FidelityRecord::s_mrr);
  out.o_mrr = combine(&FidelityRecord::o_mrr);
  return out;
}

}  // namespace kgx
