#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kgx/clustering.hpp"
#include "kgx/context.hpp"
#include "kgx/embeddings.hpp"
#include "kgx/explainer.hpp"

namespace kgx {

/// splitmix64 of the base seed mixed with job coordinates.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// True facts (sorted, de-duplicated) plus one subject and one object
/// corruption each, never known-true in `universe` and never repeating a
/// context fact. Impossible corruptions are dropped and counted in
/// `skipped`.
Context global_context(const KnowledgeGraph& universe, PredicateId p, std::span<const Triple> true_facts,
                       std::uint64_t seed, std::size_t* skipped = nullptr);

/// Clusters the context's true facts on s ⊕ o and re-corrupts each cluster.
/// Throws std::invalid_argument unless 2 <= k <= number of true facts.
std::vector<Context> local_contexts(const Context& context, const EmbeddingModel& model,
                                    const KnowledgeGraph& universe, std::size_t k, Linkage linkage,
                                    std::uint64_t seed);

/// Facts of `context` sharing the subject or object of `target`, which must
/// be in the context (DataError otherwise).
Context instance_context(const Context& context, const Triple& target);

struct ScopingConfig {
  ExplainConfig explain;
  Linkage linkage = Linkage::kWard;
  std::size_t k_min = 2;
  std::size_t k_max = 6;
  double test_fraction = 0.3;
  std::size_t max_instances = 50;  // 0: every true fact
  std::uint64_t seed = 0;
};

/// Explanations for one scope of one predicate, with their contexts.
struct ScopeResult {
  std::vector<Explanation> explanations;
  std::vector<std::pair<Context, Context>> splits;  // (train, test), aligned with explanations
  FidelityRecord aggregate;       // weighted over covered explanations
  std::size_t k = 0;              // local scope only
  std::vector<std::pair<std::size_t, double>> k_scores;  // local scope only
};

/// Splits and explains a single context; contexts too small to split give
/// an empty explanation.
Explanation explain_context(const Scorer& f, const ExplainGraphs& graphs, const Context& context,
                            const ScopingConfig& cfg, std::optional<double> theta, std::uint64_t seed,
                            std::pair<Context, Context>* split = nullptr);

ScopeResult explain_global(const Scorer& f, const ExplainGraphs& graphs, const Context& context,
                           const ScopingConfig& cfg, std::optional<double> theta);

/// Tries every k in [k_min, min(k_max, true facts)] and keeps the one with
/// the highest size-weighted held-out ROC-AUC (smallest k on ties). Throws
/// DataError when no k produces a covered explanation.
ScopeResult select_k(const Scorer& f, const EmbeddingModel& model, const ExplainGraphs& graphs,
                     const Context& context, const ScopingConfig& cfg, std::optional<double> theta);

ScopeResult explain_instances(const Scorer& f, const ExplainGraphs& graphs, const Context& context,
                              const ScopingConfig& cfg, std::optional<double> theta);

}  // namespace kgx
