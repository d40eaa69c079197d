#include "kgx/scoping.hpp"

#include <algorithm>
#include <stdexcept>

#include "kgx/error.hpp"

namespace kgx {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ b);
}

Context global_context(const KnowledgeGraph& universe, PredicateId p, std::span<const Triple> true_facts,
                       std::uint64_t seed, std::size_t* skipped) {
  std::vector<Triple> truths(true_facts.begin(), true_facts.end());
  for (const auto& t : truths)
    if (t.p != p) throw std::invalid_argument("true fact of another predicate in context input");
  std::sort(truths.begin(), truths.end());
  truths.erase(std::unique(truths.begin(), truths.end()), truths.end());

  Context c;
  c.predicate = p;
  std::vector<Triple> taken = truths;
  Rng rng(seed);
  std::size_t dropped = 0;
  for (std::size_t g = 0; g < truths.size(); ++g) {
    c.facts.push_back({truths[g], true, g});
    for (auto side : {Side::kSubject, Side::kObject}) {
      if (auto neg = corrupt_side(universe, truths[g], side, rng, taken)) {
        c.facts.push_back({*neg, false, g});
        taken.insert(std::upper_bound(taken.begin(), taken.end(), *neg), *neg);
      } else {
        ++dropped;
      }
    }
  }
  if (skipped) *skipped = dropped;
  return c;
}

std::vector<Context> local_contexts(const Context& context, const EmbeddingModel& model,
                                    const KnowledgeGraph& universe, std::size_t k, Linkage linkage,
                                    std::uint64_t seed) {
  auto truths = context.true_facts();
  std::sort(truths.begin(), truths.end());
  truths.erase(std::unique(truths.begin(), truths.end()), truths.end());
  if (k < 2 || k > truths.size())
    throw std::invalid_argument("k must lie in [2, " + std::to_string(truths.size()) + "]");
  std::vector<std::vector<double>> points;
  points.reserve(truths.size());
  for (const auto& t : truths) points.push_back(pair_vector(model, t.s, t.o));
  const auto labels = agglomerative(points, k, linkage);

  std::vector<std::vector<Triple>> members(k);
  for (std::size_t i = 0; i < truths.size(); ++i) members[labels[i]].push_back(truths[i]);
  std::vector<Context> out;
  for (std::size_t c = 0; c < k; ++c) {
    auto local = global_context(universe, context.predicate, members[c], derive_seed(seed, k, c));
    local.scope = {ScopeKind::kLocal, c, k, std::nullopt};
    out.push_back(std::move(local));
  }
  return out;
}

Context instance_context(const Context& context, const Triple& target) {
  const bool present = std::any_of(context.facts.begin(), context.facts.end(),
                                   [&](const ContextFact& f) { return f.fact == target; });
  if (!present) throw DataError("target fact is not in the context");
  Context out;
  out.predicate = context.predicate;
  out.scope = {ScopeKind::kInstance, 0, 0, target};
  for (const auto& f : context.facts)
    if (f.fact.s == target.s || f.fact.o == target.o) out.facts.push_back(f);
  return out;
}

Explanation explain_context(const Scorer& f, const ExplainGraphs& graphs, const Context& context,
                            const ScopingConfig& cfg, std::optional<double> theta, std::uint64_t seed,
                            std::pair<Context, Context>* split) {
  std::pair<Context, Context> parts;
  try {
    parts = split_context(context, cfg.test_fraction, seed);
  } catch (const DataError&) {
    Explanation empty;
    empty.predicate = context.predicate;
    empty.scope = context.scope;
    empty.theta = theta.value_or(0.0);
    empty.train_size = context.facts.size();
    empty.fidelity.scope = to_string(context.scope.kind);
    if (split) *split = {context, Context{context.predicate, {}, context.scope}};
    return empty;
  }
  auto expl = build_explanation(f, graphs, parts.first, parts.second, cfg.explain, theta);
  if (split) *split = std::move(parts);
  return expl;
}

namespace {

FidelityRecord aggregate(const std::vector<Explanation>& explanations, ScopeKind kind) {
  std::vector<FidelityRecord> records;
  for (const auto& e : explanations)
    if (e.covered()) records.push_back(e.fidelity);
  if (records.empty()) return FidelityRecord{std::nullopt, std::nullopt, std::nullopt, 0, to_string(kind)};
  auto out = weighted_fidelity(records);
  out.scope = to_string(kind);
  return out;
}

}  // namespace

ScopeResult explain_global(const Scorer& f, const ExplainGraphs& graphs, const Context& context,
                           const ScopingConfig& cfg, std::optional<double> theta) {
  ScopeResult out;
  Context scoped = context;
  scoped.scope = {ScopeKind::kGlobal, 0, 0, std::nullopt};
  out.splits.emplace_back();
  out.explanations.push_back(
      explain_context(f, graphs, scoped, cfg, theta, derive_seed(cfg.seed, 1), &out.splits.back()));
  out.aggregate = aggregate(out.explanations, ScopeKind::kGlobal);
  return out;
}

ScopeResult select_k(const Scorer& f, const EmbeddingModel& model, const ExplainGraphs& graphs,
                     const Context& context, const ScopingConfig& cfg, std::optional<double> theta) {
  auto truths = context.true_facts();
  std::sort(truths.begin(), truths.end());
  truths.erase(std::unique(truths.begin(), truths.end()), truths.end());
  const std::size_t k_hi = std::min(cfg.k_max, truths.size());
  if (cfg.k_min < 2 || cfg.k_min > cfg.k_max) throw std::invalid_argument("k range must satisfy 2 <= k_min <= k_max");
  if (k_hi < cfg.k_min) throw DataError("too few true facts for local explanations");

  std::optional<ScopeResult> best;
  double best_score = -1.0;
  std::vector<std::pair<std::size_t, double>> scores;
  for (std::size_t k = cfg.k_min; k <= k_hi; ++k) {
    ScopeResult candidate;
    candidate.k = k;
    const auto locals = local_contexts(context, model, graphs.universe, k, cfg.linkage, derive_seed(cfg.seed, 2));
    for (std::size_t c = 0; c < locals.size(); ++c) {
      candidate.splits.emplace_back();
      candidate.explanations.push_back(
          explain_context(f, graphs, locals[c], cfg, theta, derive_seed(cfg.seed, 3 + k, c), &candidate.splits.back()));
    }
    candidate.aggregate = aggregate(candidate.explanations, ScopeKind::kLocal);
    if (!candidate.aggregate.roc_auc) continue;
    const double score = *candidate.aggregate.roc_auc;
    scores.emplace_back(k, score);
    if (score > best_score) {
      best_score = score;
      best = std::move(candidate);
    }
  }
  if (!best) throw DataError("no k yields a local explanation");
  best->k_scores = std::move(scores);
  return std::move(*best);
}

ScopeResult explain_instances(const Scorer& f, const ExplainGraphs& graphs, const Context& context,
                              const ScopingConfig& cfg, std::optional<double> theta) {
  auto targets = context.true_facts();
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  if (cfg.max_instances > 0 && targets.size() > cfg.max_instances) {
    Rng rng(derive_seed(cfg.seed, 4));
    std::shuffle(targets.begin(), targets.end(), rng);
    targets.resize(cfg.max_instances);
    std::sort(targets.begin(), targets.end());
  }
  ScopeResult out;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto local = instance_context(context, targets[i]);
    out.splits.emplace_back();
    out.explanations.push_back(
        explain_context(f, graphs, local, cfg, theta, derive_seed(cfg.seed, 5, i), &out.splits.back()));
  }
  out.aggregate = aggregate(out.explanations, ScopeKind::kInstance);
  return out;
}

}  // namespace kgx
