#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kgx/context.hpp"
#include "kgx/kg.hpp"

namespace kgx {

struct FidelityRecord {
  std::optional<double> roc_auc;
  std::optional<double> s_mrr;
  std::optional<double> o_mrr;
  std::size_t test_size = 0;
  std::string scope;

  friend bool operator==(const FidelityRecord&, const FidelityRecord&) = default;
};

/// Group-level split: a true fact and its corruptions always land on the
/// same side. Groups are stratified by their label composition and each
/// stratum contributes round(test_fraction * size) groups to the test side.
/// Throws DataError when the context is too small or a side lacks a class.
std::pair<Context, Context> split_context(const Context& context, double test_fraction,
                                          std::uint64_t seed);

/// Probability that a random positive outranks a random negative, ties
/// counting one half. Labels are +1 / -1. Throws DataError on a single class.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct RankQuery {
  Triple fact;
  Side side;  // which argument is replaced by candidates
};

/// Filtered rank of the query's true entity among the predicate's domain on
/// that side, by descending score. Other candidates forming known-true facts
/// (in `universe` or in `extra_true`, sorted) are removed; ties share the
/// average rank.
double filtered_rank(const std::function<double(const Triple&)>& score, const RankQuery& query,
                     const KnowledgeGraph& universe, std::span<const Triple> extra_true = {});

/// Mean of 1 / filtered_rank. Throws DataError for an empty query list, an
/// empty candidate pool, or a true entity outside the pool.
double mrr(const std::function<double(const Triple&)>& score, std::span<const RankQuery> queries,
           const KnowledgeGraph& universe, std::span<const Triple> extra_true = {});

/// Per-metric mean weighted by test_size, skipping absent metrics.
FidelityRecord weighted_fidelity(std::span<const FidelityRecord> records);

}  // namespace kgx
