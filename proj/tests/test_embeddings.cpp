#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <sstream>

#include "kgx/embeddings.hpp"
#include "kgx/error.hpp"
#include "support/gradcheck.hpp"
#include "support/graphs.hpp"

using namespace kgx;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST(Scores, TransEMatchesDefinition) {
  const std::vector<double> s{1, 0}, p{0, 1}, o{0, 0};
  EXPECT_DOUBLE_EQ(score_rows(ModelKind::kTransE, 2, s, p, o), -std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(score_rows(ModelKind::kTransE, 1, s, p, o), -2.0);
  EXPECT_DOUBLE_EQ(score_rows(ModelKind::kTransE, 2, s, std::vector<double>{-1, 0}, o), 0.0);
}

TEST(Scores, ComplExMatchesComplexArithmetic) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t d = 1 + rep % 7;
    const auto s = random_vec(2 * d, rng), p = random_vec(2 * d, rng), o = random_vec(2 * d, rng);
    std::complex<double> sum = 0;
    for (std::size_t j = 0; j < d; ++j)
      sum += std::complex<double>(s[2 * j], s[2 * j + 1]) * std::complex<double>(p[2 * j], p[2 * j + 1]) *
             std::conj(std::complex<double>(o[2 * j], o[2 * j + 1]));
    EXPECT_NEAR(score_rows(ModelKind::kComplEx, 2, s, p, o), sum.real(), 1e-12);
    EXPECT_NEAR(complex_trilinear(s, p, o).imag(), sum.imag(), 1e-12);
  }
}

TEST(Scores, ComplExIsAsymmetric) {
  const std::vector<double> s{1, 0}, p{0, 1}, o{0, 1};
  EXPECT_NE(score_rows(ModelKind::kComplEx, 2, s, p, o), score_rows(ModelKind::kComplEx, 2, o, p, s));
}

TEST(Scores, HolEMatchesCorrelationDefinition) {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t d = 1 + rep % 9;
    const auto s = random_vec(d, rng), p = random_vec(d, rng), o = random_vec(d, rng);
    // Brute force over all (i, j) with j - i = k mod d.
    double expected = 0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) expected += p[(j + d - i) % d] * s[i] * o[j];
    EXPECT_NEAR(score_rows(ModelKind::kHolE, 2, s, p, o), expected, 1e-12);
  }
}

TEST(Scores, CircularCorrelationSmall) {
  const auto c = circular_correlation(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6});
  EXPECT_EQ(c, (std::vector<double>{1 * 4 + 2 * 5 + 3 * 6, 1 * 5 + 2 * 6 + 3 * 4, 1 * 6 + 2 * 4 + 3 * 5}));
}

class GradientCheck : public ::testing::TestWithParam<std::pair<ModelKind, int>> {};

TEST_P(GradientCheck, AnalyticMatchesFiniteDifferences) {
  const auto [kind, norm] = GetParam();
  std::mt19937_64 rng(100 + static_cast<int>(kind) * 10 + norm);
  int checked = 0;
  while (checked < 100) {
    const auto c = kgx::testing::random_case(kind, norm, rng);
    if (kgx::testing::near_kink(c)) continue;
    ASSERT_LE(kgx::testing::gradient_relative_error(c), 1e-4);
    ++checked;
  }
}

INSTANTIATE_TEST_SUITE_P(Kinds, GradientCheck,
                         ::testing::Values(std::pair{ModelKind::kTransE, 1}, std::pair{ModelKind::kTransE, 2},
                                           std::pair{ModelKind::kComplEx, 2}, std::pair{ModelKind::kHolE, 2}));

TEST(Gradient, TransEZeroResidualUsesZeroSubgradient) {
  const std::vector<double> v{0.5, 0.5}, z{0, 0};
  const auto g = score_gradient(ModelKind::kTransE, 2, v, z, v);
  for (double x : g.subject) EXPECT_EQ(x, 0.0);
}

TEST(Model, ConstructorValidates) {
  EXPECT_THROW(EmbeddingModel(ModelKind::kTransE, 0, 2, 1, 1), std::invalid_argument);
  EXPECT_THROW(EmbeddingModel(ModelKind::kTransE, 4, 3, 1, 1), std::invalid_argument);
  EXPECT_EQ(EmbeddingModel(ModelKind::kComplEx, 4, 2, 1, 1).width(), 8u);
}

TEST(Model, InitIsBoundedAndDeterministic) {
  const auto a = init_model(ModelKind::kHolE, 16, 10, 3, 1);
  const auto b = init_model(ModelKind::kHolE, 16, 10, 3, 1);
  const auto c = init_model(ModelKind::kHolE, 16, 10, 3, 2);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (double v : a.entity_table()) EXPECT_LE(std::abs(v), 6.0 / 4.0);
}

TEST(Model, ParseKind) {
  EXPECT_EQ(parse_model_kind("complex"), ModelKind::kComplEx);
  EXPECT_EQ(to_string(ModelKind::kHolE), "hole");
  EXPECT_THROW(parse_model_kind("rescal"), std::invalid_argument);
}

TEST(Model, CheckpointRoundTrip) {
  for (auto kind : {ModelKind::kTransE, ModelKind::kComplEx, ModelKind::kHolE}) {
    const auto m = init_model(kind, 5, 7, 2, 3, 1);
    std::stringstream ss;
    save_model(m, ss);
    EXPECT_EQ(load_model(ss), m);
  }
}

TEST(Model, CheckpointRejectsGarbage) {
  std::stringstream bad("not a model");
  EXPECT_THROW(load_model(bad), ParseError);
  const auto m = init_model(ModelKind::kTransE, 4, 3, 1, 0);
  std::stringstream ss;
  save_model(m, ss);
  auto bytes = ss.str();
  bytes.resize(bytes.size() - 5);
  std::stringstream truncated(bytes);
  EXPECT_THROW(load_model(truncated), ParseError);
}

TEST(Model, PairVectorConcatenates) {
  const auto m = init_model(ModelKind::kTransE, 3, 4, 1, 0);
  const auto v = pair_vector(m, 1, 2);
  ASSERT_EQ(v.size(), 6u);
  EXPECT_EQ(v[0], m.entity(1)[0]);
  EXPECT_EQ(v[3], m.entity(2)[0]);
}

TEST(Model, ExportCsvHasOneRowPerEmbedding) {
  const auto g = kgx::testing::make_graph({{"a", "p", "b"}});
  const auto m = init_model(ModelKind::kTransE, 2, 2, 1, 0);
  std::stringstream ss;
  export_csv(m, g.vocabulary(), ss);
  int lines = 0;
  for (std::string line; std::getline(ss, line);) ++lines;
  EXPECT_GE(lines, 3);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.seed = 1;
  EXPECT_NO_THROW(cfg.validate());
  cfg.learning_rate = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

namespace {

KnowledgeGraph chain_graph() {
  std::vector<kgx::testing::LabeledTriple> facts;
  for (int i = 0; i < 20; ++i) {
    facts.push_back({"e" + std::to_string(i), "next", "e" + std::to_string((i + 1) % 20)});
    facts.push_back({"e" + std::to_string(i), "twoAhead", "e" + std::to_string((i + 2) % 20)});
  }
  return kgx::testing::make_graph(facts);
}

}  // namespace

TEST(Training, LossDecreasesForEveryKind) {
  const auto g = chain_graph();
  for (auto kind : {ModelKind::kTransE, ModelKind::kComplEx, ModelKind::kHolE}) {
    auto m = init_model(kind, 8, g.entity_count(), g.predicate_count(), 11);
    TrainConfig cfg;
    cfg.seed = 4;
    cfg.epochs = 60;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 8;
    const auto report = train(m, g, cfg);
    ASSERT_EQ(report.epoch_loss.size(), 60u);
    EXPECT_LT(report.epoch_loss.back(), report.epoch_loss.front()) << to_string(kind);
  }
}

TEST(Training, TransEEntitiesAreUnitNorm) {
  const auto g = chain_graph();
  auto m = init_model(ModelKind::kTransE, 6, g.entity_count(), g.predicate_count(), 2);
  TrainConfig cfg;
  cfg.seed = 1;
  cfg.epochs = 3;
  train(m, g, cfg);
  for (EntityId e = 0; e < m.entity_count(); ++e) {
    double sq = 0;
    for (double v : m.entity(e)) sq += v * v;
    EXPECT_NEAR(sq, 1.0, 1e-12);
  }
}

TEST(Training, DeterministicForSeed) {
  const auto g = chain_graph();
  auto a = init_model(ModelKind::kComplEx, 4, g.entity_count(), g.predicate_count(), 2);
  auto b = a;
  TrainConfig cfg;
  cfg.seed = 8;
  cfg.epochs = 5;
  train(a, g, cfg);
  train(b, g, cfg);
  EXPECT_EQ(a, b);
}

TEST(Training, DivergenceIsNumericError) {
  const auto g = chain_graph();
  auto m = init_model(ModelKind::kHolE, 8, g.entity_count(), g.predicate_count(), 2);
  TrainConfig cfg;
  cfg.seed = 1;
  cfg.epochs = 50;
  cfg.learning_rate = 1e6;
  cfg.l2 = 1.0;
  EXPECT_THROW(train(m, g, cfg), NumericError);
}

TEST(Training, ModelTooSmallIsDataError) {
  const auto g = chain_graph();
  auto m = init_model(ModelKind::kTransE, 4, 2, 2, 0);
  TrainConfig cfg;
  cfg.seed = 1;
  EXPECT_THROW(train(m, g, cfg), DataError);
}
