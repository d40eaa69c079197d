#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgx/kg.hpp"

namespace kgx {

enum class ModelKind : std::uint32_t { kTransE = 0, kComplEx = 1, kHolE = 2 };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);  // "transe" | "complex" | "hole"

/// Any link predictor f: higher means more plausible.
using Scorer = std::function<double(const Triple&)>;

/// Entity and predicate tables for one of the supported score functions.
///
/// Rows have `width()` reals: `dim` for TransE and HolE, `2 * dim` for
/// ComplEx where component j is stored as the pair (re, im) at 2j, 2j+1.
class EmbeddingModel {
 public:
  EmbeddingModel() = default;
  EmbeddingModel(ModelKind kind, int dim, int norm, std::size_t entities, std::size_t predicates);

  ModelKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int norm() const { return norm_; }
  std::size_t width() const { return width_; }
  std::size_t entity_count() const { return entity_count_; }
  std::size_t predicate_count() const { return predicate_count_; }

  std::span<const double> entity(EntityId e) const;
  std::span<double> entity(EntityId e);
  std::span<const double> predicate(PredicateId p) const;
  std::span<double> predicate(PredicateId p);
  std::span<const double> entity_table() const { return entities_; }
  std::span<const double> predicate_table() const { return predicates_; }
  std::span<double> entity_table() { return entities_; }
  std::span<double> predicate_table() { return predicates_; }

  double score(const Triple& t) const;
  Scorer scorer() const;

  friend bool operator==(const EmbeddingModel&, const EmbeddingModel&) = default;

 private:
  ModelKind kind_ = ModelKind::kTransE;
  int dim_ = 0;
  int norm_ = 2;
  std::size_t width_ = 0;
  std::size_t entity_count_ = 0;
  std::size_t predicate_count_ = 0;
  std::vector<double> entities_;
  std::vector<double> predicates_;
};

/// Uniform init in [-6/sqrt(d), 6/sqrt(d)] for every kind.
EmbeddingModel init_model(ModelKind kind, int dim, std::size_t entities, std::size_t predicates,
                          std::uint64_t seed, int norm = 2);

// Score functions on raw rows.
//   TransE:  -||s + p - o||_l
//   ComplEx: Re(sum_j s_j p_j conj(o_j))
//   HolE:    sum_k p_k sum_i s_i o_{(i+k) mod d}
double score_rows(ModelKind kind, int norm, std::span<const double> s, std::span<const double> p,
                  std::span<const double> o);

/// The complex trilinear sum behind the ComplEx score, before taking Re.
std::complex<double> complex_trilinear(std::span<const double> s, std::span<const double> p,
                                       std::span<const double> o);

/// Circular correlation (s ⋆ o)_k = sum_i s_i o_{(i+k) mod d}.
std::vector<double> circular_correlation(std::span<const double> s, std::span<const double> o);

struct SlotGradient {
  std::vector<double> subject, predicate, object;
};

/// d score / d (s, p, o), slot by slot. TransE uses the zero subgradient where
/// the norm is not differentiable.
SlotGradient score_gradient(ModelKind kind, int norm, std::span<const double> s,
                            std::span<const double> p, std::span<const double> o);

enum class Loss { kMargin, kLogistic };

/// Per-fact loss term used by training.
///   kMargin:   -label * score  (the fact's share of an active hinge)
///   kLogistic: log(1 + exp(-label * score)) + l2 * (|s|^2 + |p|^2 + |o|^2)
double fact_loss(ModelKind kind, int norm, Loss loss, double label, double l2,
                 std::span<const double> s, std::span<const double> p, std::span<const double> o);
SlotGradient fact_loss_gradient(ModelKind kind, int norm, Loss loss, double label, double l2,
                                std::span<const double> s, std::span<const double> p,
                                std::span<const double> o);

/// Gradient of the per-fact loss with respect to the fact's rows in `model`.
SlotGradient gradient(const EmbeddingModel& model, const Triple& fact, Loss loss,
                      double label = 1.0, double l2 = 0.0);

struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 100;
  int batch_size = 32;
  double margin = 1.0;          // TransE only
  int negatives = 1;            // per positive
  double l2 = 1e-4;             // ComplEx/HolE only
  std::optional<std::uint64_t> seed;

  void validate() const;  // throws std::invalid_argument
};

struct TrainReport {
  std::vector<double> epoch_loss;  // mean loss per positive, one entry per epoch
};

/// Mini-batch SGD. TransE minimises the margin ranking loss and renormalises
/// entity rows to unit l2 norm after every epoch; ComplEx and HolE minimise
/// the regularised logistic loss. Negatives come from corrupt_fact.
/// Deterministic for a given seed. Throws NumericError on divergence.
TrainReport train(EmbeddingModel& model, const KnowledgeGraph& graph, const TrainConfig& cfg);

/// s ⊕ o: the subject row followed by the object row.
std::vector<double> pair_vector(const EmbeddingModel& model, EntityId s, EntityId o);

// Checkpoint: 8-byte magic, u32 kind, u32 dim, u32 norm, u32 reserved,
// u64 entities, u64 predicates, then both tables as row-major little-endian
// float64.
void save_model(const EmbeddingModel& model, std::ostream& out);
EmbeddingModel load_model(std::istream& in);
void save_model(const EmbeddingModel& model, const std::filesystem::path& path);
EmbeddingModel load_model(const std::filesystem::path& path);

/// `table,label,v0,v1,...` rows for inspection.
void export_csv(const EmbeddingModel& model, const Vocabulary& vocab, std::ostream& out);

}  // namespace kgx
