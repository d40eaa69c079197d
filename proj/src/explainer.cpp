#include "kgx/explainer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <numeric>
#include <ostream>

#include "json.hpp"

#include "kgx/error.hpp"

namespace kgx {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

constexpr double kCalibrationRidge = 1e-8;

}  // namespace

CalibrationCurve fit_calibration(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
  if (scores.size() < 4) throw DataError("calibration needs at least 4 scored facts");
  const auto pos = std::count_if(labels.begin(), labels.end(), [](int y) { return y > 0; });
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size()))
    throw DataError("calibration needs both classes");
  for (double s : scores)
    if (!std::isfinite(s)) throw NumericError("non-finite score in calibration input");

  const double n = static_cast<double>(scores.size());
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / n);
  if (!(sd > 0)) throw NumericError("calibration scores are constant; no threshold separates them");
  std::vector<double> x(scores.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (scores[i] - mean) / sd;

  auto objective = [&](double a, double b) {
    double f = 0.5 * kCalibrationRidge * a * a;
    for (std::size_t i = 0; i < x.size(); ++i) f += softplus(-(labels[i] > 0 ? 1.0 : -1.0) * (a * x[i] + b));
    return f;
  };
  // Damped Newton on (a, b).
  double a = 0.0, b = 0.0;
  double f = objective(a, b);
  for (int it = 0; it < 500; ++it) {
    double ga = kCalibrationRidge * a, gb = 0.0;
    double haa = kCalibrationRidge, hab = 0.0, hbb = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double p = sigmoid(a * x[i] + b);
      const double t = labels[i] > 0 ? 1.0 : 0.0;
      ga += (p - t) * x[i];
      gb += (p - t);
      const double w = p * (1.0 - p);
      haa += w * x[i] * x[i];
      hab += w * x[i];
      hbb += w;
    }
    if (std::hypot(ga, gb) < 1e-12) break;
    hbb += 1e-12;
    const double det = haa * hbb - hab * hab;
    double da, db;
    if (det > 1e-300) {
      da = -(hbb * ga - hab * gb) / det;
      db = -(haa * gb - hab * ga) / det;
    } else {
      da = -ga;
      db = -gb;
    }
    double step = 1.0;
    double next = objective(a + da, b + db);
    while (next > f && step > 1e-12) {
      step *= 0.5;
      next = objective(a + step * da, b + step * db);
    }
    if (next > f) break;
    a += step * da;
    b += step * db;
    const double change = std::abs(step) * std::hypot(da, db);
    f = next;
    if (change < 1e-12) break;
  }
  if (!(a > 0)) throw NumericError("scores are not positively associated with truth (calibration slope <= 0)");
  const CalibrationCurve curve{a, b, mean, sd};
  if (!std::isfinite(curve.theta())) throw NumericError("calibration produced a non-finite threshold");
  return curve;
}

double CalibrationCurve::probability(double score) const { return sigmoid(slope * (score - mean) / sd + intercept); }

double calibrate_threshold(std::span<const double> scores, std::span<const int> labels) {
  return fit_calibration(scores, labels).theta();
}

std::vector<EntityPair> AnnotatedContext::accepted() const {
  std::vector<EntityPair> out;
  for (const auto& f : facts)
    if (f.verdict) out.push_back({f.source.fact.s, f.source.fact.o});
  return out;
}

std::vector<EntityPair> AnnotatedContext::rejected() const {
  std::vector<EntityPair> out;
  for (const auto& f : facts)
    if (!f.verdict) out.push_back({f.source.fact.s, f.source.fact.o});
  return out;
}

AnnotatedContext binarize(const Scorer& f, const Context& context, double theta) {
  AnnotatedContext out{context.predicate, theta, {}};
  out.facts.reserve(context.facts.size());
  for (const auto& cf : context.facts) {
    const double s = f(cf.fact);
    out.facts.push_back({cf, s, s >= theta});
  }
  return out;
}

std::vector<double> encode_features(EntityId s, EntityId o, std::span<const HornRule> rules,
                                    const AugmentedGraph& aug) {
  std::vector<double> x(rules.size(), 0.0);
  for (std::size_t i = 0; i < rules.size(); ++i)
    if (fires(rules[i], aug.base(), s, o))
      x[i] = aug.polarity(rules[i].head.predicate) * rules[i].stats.conf();
  return x;
}

double SurrogateModel::probability(std::span<const double> x) const {
  return sigmoid(dot(coefficients, x) + intercept);
}

namespace {

constexpr int kMaxIterations = 10000;
constexpr double kGradientTolerance = 1e-8;
constexpr std::size_t kHistory = 10;

}  // namespace

SurrogateModel fit_surrogate(const std::vector<std::vector<double>>& X, std::span<const int> y, double reg) {
  if (X.size() != y.size()) throw std::invalid_argument("feature rows and labels differ in length");
  if (X.empty()) throw DataError("cannot fit a surrogate on zero rows");
  if (!(reg >= 0)) throw std::invalid_argument("regularisation must be >= 0");
  const std::size_t d = X.front().size();
  for (const auto& row : X) {
    if (row.size() != d) throw std::invalid_argument("ragged feature matrix");
    for (double v : row)
      if (!std::isfinite(v)) throw NumericError("non-finite feature value");
  }
  SurrogateModel model;
  model.coefficients.assign(d, 0.0);
  const auto pos = static_cast<std::size_t>(std::count_if(y.begin(), y.end(), [](int v) { return v > 0; }));
  if (pos == 0 || pos == y.size()) {
    model.degenerate = true;
    model.intercept = (pos ? 1.0 : -1.0) * std::log(static_cast<double>(y.size()) + 1.0);
    return model;
  }

  // Parameters: w (d entries) then b.
  const std::size_t n = d + 1;
  auto evaluate = [&](const std::vector<double>& theta, std::vector<double>& grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double f = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) {
      const double yi = y[i] > 0 ? 1.0 : -1.0;
      const double z = dot(std::span(theta).first(d), X[i]) + theta[d];
      f += softplus(-yi * z);
      const double r = -yi * sigmoid(-yi * z);
      for (std::size_t j = 0; j < d; ++j) grad[j] += r * X[i][j];
      grad[d] += r;
    }
    for (std::size_t j = 0; j < d; ++j) {
      f += 0.5 * reg * theta[j] * theta[j];
      grad[j] += reg * theta[j];
    }
    return f;
  };

  std::vector<double> theta(n, 0.0), grad(n), next(n), next_grad(n), dir(n);
  double f = evaluate(theta, grad);
  std::deque<std::pair<std::vector<double>, std::vector<double>>> memory;  // (s, y)
  int it = 0;
  for (; it < kMaxIterations && norm2(grad) > kGradientTolerance; ++it) {
    // Two-loop recursion.
    dir = grad;
    std::vector<double> alpha(memory.size());
    for (std::size_t k = memory.size(); k-- > 0;) {
      const auto& [s, yv] = memory[k];
      alpha[k] = dot(s, dir) / dot(yv, s);
      for (std::size_t j = 0; j < n; ++j) dir[j] -= alpha[k] * yv[j];
    }
    if (!memory.empty()) {
      const auto& [s, yv] = memory.back();
      const double gamma = dot(s, yv) / dot(yv, yv);
      for (auto& v : dir) v *= gamma;
    } else {
      const double g = norm2(grad);
      for (auto& v : dir) v /= std::max(1.0, g);
    }
    for (std::size_t k = 0; k < memory.size(); ++k) {
      const auto& [s, yv] = memory[k];
      const double beta = dot(yv, dir) / dot(yv, s);
      for (std::size_t j = 0; j < n; ++j) dir[j] += s[j] * (alpha[k] - beta);
    }
    for (auto& v : dir) v = -v;
    double slope = dot(grad, dir);
    if (!(slope < 0)) {
      memory.clear();
      for (std::size_t j = 0; j < n; ++j) dir[j] = -grad[j];
      slope = dot(grad, dir);
    }

    // Backtracking; near the optimum rounding hides the decrease, so a step
    // that does not raise the loss and shrinks the gradient is also taken.
    double step = 1.0;
    double f_next = 0.0;
    bool accepted = false;
    const double g_now = norm2(grad);
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t j = 0; j < n; ++j) next[j] = theta[j] + step * dir[j];
      f_next = evaluate(next, next_grad);
      if (f_next <= f + 1e-4 * step * slope ||
          (f_next <= f + 1e-14 * std::abs(f) && norm2(next_grad) < g_now)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    std::vector<double> s(n), yv(n);
    for (std::size_t j = 0; j < n; ++j) {
      s[j] = next[j] - theta[j];
      yv[j] = next_grad[j] - grad[j];
    }
    if (dot(s, yv) > 1e-300) {
      memory.emplace_back(std::move(s), std::move(yv));
      if (memory.size() > kHistory) memory.pop_front();
    }
    theta.swap(next);
    grad.swap(next_grad);
    f = f_next;
  }
  for (double v : theta)
    if (!std::isfinite(v)) throw NumericError("surrogate fit diverged");
  model.coefficients.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(d));
  model.intercept = theta[d];
  model.iterations = it;
  model.gradient_norm = norm2(grad);
  return model;
}

std::size_t Explanation::attributing_rules() const {
  return static_cast<std::size_t>(std::count_if(surrogate.coefficients.begin(), surrogate.coefficients.end(),
                                                [](double w) { return w != 0.0; }));
}

namespace {

std::vector<double> features(const Explanation& expl, const KnowledgeGraph& train, EntityId s, EntityId o) {
  const AugmentedGraph aug(train);
  return encode_features(s, o, expl.rules, aug);
}

}  // namespace

double surrogate_score(const Explanation& expl, const KnowledgeGraph& train, const Triple& fact) {
  if (fact.p != expl.predicate) throw std::invalid_argument("fact predicate differs from the explanation's");
  return expl.surrogate.probability(features(expl, train, fact.s, fact.o));
}

FidelityRecord measure_fidelity(const Explanation& expl, const ExplainGraphs& graphs, const AnnotatedContext& test,
                                std::span<const Triple> context_truths) {
  FidelityRecord rec;
  rec.test_size = test.facts.size();
  rec.scope = to_string(expl.scope.kind);
  if (!expl.covered()) return rec;
  std::vector<double> scores;
  std::vector<int> verdicts;
  std::size_t accepted = 0;
  for (const auto& f : test.facts) {
    scores.push_back(surrogate_score(expl, graphs.train, f.source.fact));
    verdicts.push_back(f.verdict ? 1 : -1);
    accepted += f.verdict;
  }
  if (accepted > 0 && accepted < test.facts.size()) rec.roc_auc = roc_auc(scores, verdicts);

  std::vector<RankQuery> subject_queries, object_queries;
  for (const auto& f : test.facts)
    if (f.source.truth) {
      subject_queries.push_back({f.source.fact, Side::kSubject});
      object_queries.push_back({f.source.fact, Side::kObject});
    }
  if (!subject_queries.empty()) {
    auto score = [&](const Triple& t) { return surrogate_score(expl, graphs.train, t); };
    rec.s_mrr = mrr(score, subject_queries, graphs.universe, context_truths);
    rec.o_mrr = mrr(score, object_queries, graphs.universe, context_truths);
  }
  return rec;
}

Explanation build_explanation(const Scorer& f, const ExplainGraphs& graphs, const Context& train,
                              const Context& test, const ExplainConfig& cfg, std::optional<double> theta) {
  if (train.predicate != test.predicate) throw std::invalid_argument("train and test contexts differ in predicate");
  Explanation expl;
  expl.predicate = train.predicate;
  expl.scope = train.scope;
  expl.train_size = train.facts.size();

  if (!theta) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& cf : train.facts) {
      scores.push_back(f(cf.fact));
      labels.push_back(cf.truth ? 1 : -1);
    }
    theta = calibrate_threshold(scores, labels);
  }
  expl.theta = *theta;

  const auto annotated_train = binarize(f, train, *theta);
  const auto annotated_test = binarize(f, test, *theta);
  AugmentedGraph aug(graphs.train);
  aug.annotate(train.predicate, annotated_train.accepted(), annotated_train.rejected());
  const std::vector<PredicateId> heads{aug.surrogate(train.predicate, true), aug.surrogate(train.predicate, false)};
  expl.rules = mine(aug, heads, cfg.miner);

  std::vector<Triple> truths;
  for (const auto* c : {&train, &test})
    for (const auto& cf : c->facts)
      if (cf.truth) truths.push_back(cf.fact);
  std::sort(truths.begin(), truths.end());
  truths.erase(std::unique(truths.begin(), truths.end()), truths.end());

  if (expl.rules.empty()) {
    expl.fidelity = measure_fidelity(expl, graphs, annotated_test, truths);
    return expl;
  }

  std::vector<std::vector<double>> X;
  std::vector<int> y;
  X.reserve(annotated_train.facts.size());
  for (const auto& a : annotated_train.facts) {
    X.push_back(encode_features(a.source.fact.s, a.source.fact.o, expl.rules, aug));
    y.push_back(a.verdict ? 1 : -1);
  }
  expl.surrogate = fit_surrogate(X, y, cfg.l2);
  expl.fidelity = measure_fidelity(expl, graphs, annotated_test, truths);
  return expl;
}

namespace {

using nlohmann::json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

void write_explanation(const Explanation& expl, const Vocabulary& vocab, std::ostream& out) {
  const auto symbols = surrogate_symbols(vocab);
  json j;
  j["predicate"] = vocab.predicates.label(expl.predicate);
  json scope;
  scope["kind"] = to_string(expl.scope.kind);
  scope["tag"] = expl.scope.tag(vocab);
  if (expl.scope.kind == ScopeKind::kLocal) {
    scope["cluster"] = expl.scope.cluster;
    scope["k"] = expl.scope.k;
  }
  if (expl.scope.target) {
    const auto& t = *expl.scope.target;
    scope["target"] = {vocab.entities.label(t.s), vocab.predicates.label(t.p), vocab.entities.label(t.o)};
  }
  j["scope"] = scope;
  j["covered"] = expl.covered();
  j["theta"] = expl.theta;
  j["intercept"] = expl.surrogate.intercept;
  j["degenerate"] = expl.surrogate.degenerate;
  j["train_size"] = expl.train_size;
  j["rules"] = json::array();
  for (std::size_t i = 0; i < expl.rules.size(); ++i) {
    const auto& r = expl.rules[i];
    j["rules"].push_back({{"rule", format_rule(r, symbols)},
                          {"conf", r.stats.precision},
                          {"correct", r.stats.correct},
                          {"labeled", r.stats.labeled},
                          {"coefficient", i < expl.surrogate.coefficients.size() ? expl.surrogate.coefficients[i] : 0.0}});
  }
  j["attributing_rules"] = expl.attributing_rules();
  j["fidelity"] = {{"roc_auc", optional_number(expl.fidelity.roc_auc)},
                   {"s_mrr", optional_number(expl.fidelity.s_mrr)},
                   {"o_mrr", optional_number(expl.fidelity.o_mrr)},
                   {"test_size", expl.fidelity.test_size},
                   {"scope", expl.fidelity.scope}};
  out << j.dump(2) << '\n';
}

Explanation read_explanation(std::istream& in, const Vocabulary& vocab) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("explanation file: ") + e.what());
  }
  try {
    const auto symbols = surrogate_symbols(vocab);
    Explanation expl;
    expl.predicate = vocab.predicates.at(j.at("predicate").get<std::string>());
    const auto& scope = j.at("scope");
    expl.scope.kind = parse_scope_kind(scope.at("kind").get<std::string>());
    if (scope.contains("cluster")) expl.scope.cluster = scope.at("cluster").get<std::size_t>();
    if (scope.contains("k")) expl.scope.k = scope.at("k").get<std::size_t>();
    if (scope.contains("target")) {
      const auto t = scope.at("target").get<std::vector<std::string>>();
      if (t.size() != 3) throw ParseError("explanation target must have 3 labels");
      expl.scope.target = Triple{vocab.entities.at(t[0]), vocab.predicates.at(t[1]), vocab.entities.at(t[2])};
    }
    expl.theta = j.at("theta").get<double>();
    expl.surrogate.intercept = j.at("intercept").get<double>();
    expl.surrogate.degenerate = j.value("degenerate", false);
    expl.train_size = j.value("train_size", std::size_t{0});
    for (const auto& r : j.at("rules")) {
      HornRule rule = parse_rule(r.at("rule").get<std::string>(), symbols);
      rule.stats.precision = r.at("conf").get<double>();
      rule.stats.correct = r.at("correct").get<std::size_t>();
      rule.stats.labeled = r.at("labeled").get<std::size_t>();
      rule.stats.evaluable = rule.stats.labeled > 0;
      expl.rules.push_back(std::move(rule));
      expl.surrogate.coefficients.push_back(r.at("coefficient").get<double>());
    }
    const auto& fid = j.at("fidelity");
    expl.fidelity.roc_auc = read_optional(fid, "roc_auc");
    expl.fidelity.s_mrr = read_optional(fid, "s_mrr");
    expl.fidelity.o_mrr = read_optional(fid, "o_mrr");
    expl.fidelity.test_size = fid.at("test_size").get<std::size_t>();
    expl.fidelity.scope = fid.value("scope", std::string{});
    return expl;
  } catch (const json::exception& e) {
    throw ParseError(std::string("explanation file: ") + e.what());
  }
}

}  // namespace kgx
