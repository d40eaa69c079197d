#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgx/context.hpp"
#include "kgx/embeddings.hpp"
#include "kgx/eval.hpp"
#include "kgx/miner.hpp"

namespace kgx {

/// f_c(score) = sigmoid(slope * (score - mean) / sd + intercept).
struct CalibrationCurve {
  double slope = 0.0;
  double intercept = 0.0;
  double mean = 0.0;
  double sd = 1.0;

  double probability(double score) const;
  double theta() const { return mean + sd * (-intercept / slope); }
};

/// Fits sigmoid(a * x + b) to (score, label); calibrate_threshold returns the
/// score where it crosses one half. Scores are standardised first; a negligible ridge on the
/// slope keeps separable inputs finite. Throws DataError for fewer than four
/// points or a single class, NumericError when a <= 0.
CalibrationCurve fit_calibration(std::span<const double> scores, std::span<const int> labels);
double calibrate_threshold(std::span<const double> scores, std::span<const int> labels);

struct AnnotatedFact {
  ContextFact source;
  double score = 0.0;
  bool verdict = false;  // score >= theta
};

struct AnnotatedContext {
  PredicateId predicate = 0;
  double theta = 0.0;
  std::vector<AnnotatedFact> facts;

  std::vector<EntityPair> accepted() const;
  std::vector<EntityPair> rejected() const;
};

AnnotatedContext binarize(const Scorer& f, const Context& context, double theta);

/// x[i] = polarity(head_i) * conf(R_i) when R_i fires at (s, o), else 0.
/// For an annotated fact A this equals sgn(A) * conf when R_i derives A and
/// -sgn(A) * conf when it derives the opposite verdict at the same pair.
std::vector<double> encode_features(EntityId s, EntityId o, std::span<const HornRule> rules,
                                    const AugmentedGraph& aug);

struct SurrogateModel {
  std::vector<double> coefficients;
  double intercept = 0.0;
  bool degenerate = false;  // fitted on a single class
  int iterations = 0;
  double gradient_norm = 0.0;

  double probability(std::span<const double> x) const;
};

/// Minimises sum_i log(1 + exp(-y_i (w.x_i + b))) + reg/2 |w|^2 with L-BFGS
/// from zero, stopping at |grad| <= 1e-8 or 10000 iterations. A single class
/// yields a constant model flagged degenerate.
SurrogateModel fit_surrogate(const std::vector<std::vector<double>>& X, std::span<const int> y,
                             double reg = 1.0);

struct ExplainConfig {
  MinerConfig miner;
  double l2 = 1.0;
};

struct Explanation {
  PredicateId predicate = 0;
  ScopeDescriptor scope;
  double theta = 0.0;
  std::vector<HornRule> rules;
  SurrogateModel surrogate;
  FidelityRecord fidelity;
  std::size_t train_size = 0;

  /// No rules were mined; fidelity is undefined.
  bool empty() const { return rules.empty(); }
  /// Has rules and a surrogate fitted on both verdict classes.
  bool covered() const { return !empty() && !surrogate.degenerate; }
  /// Rules with a non-zero coefficient.
  std::size_t attributing_rules() const;
};

/// Graphs an explanation is computed against: rule bodies and features use
/// `train`; domains and filtering use `universe`.
struct ExplainGraphs {
  const KnowledgeGraph& train;
  const KnowledgeGraph& universe;
};

/// Calibrate (unless `theta` is given), binarize, mine {p^f, ~p^f} on the
/// training verdicts, encode, fit, and measure fidelity on `test`.
Explanation build_explanation(const Scorer& f, const ExplainGraphs& graphs, const Context& train,
                              const Context& test, const ExplainConfig& cfg,
                              std::optional<double> theta = std::nullopt);

/// sigmoid(w . x_A + b). Throws std::invalid_argument for another predicate.
double surrogate_score(const Explanation& expl, const KnowledgeGraph& train, const Triple& fact);

/// Fidelity of `expl` on an annotated test context.
FidelityRecord measure_fidelity(const Explanation& expl, const ExplainGraphs& graphs,
                                const AnnotatedContext& test, std::span<const Triple> context_truths);

void write_explanation(const Explanation& expl, const Vocabulary& vocab, std::ostream& out);
Explanation read_explanation(std::istream& in, const Vocabulary& vocab);

}  // namespace kgx
