#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "kgx/error.hpp"
#include "kgx/eval.hpp"
#include "support/graphs.hpp"
#include "support/metric_oracles.hpp"

using namespace kgx;

namespace {

Context grouped_context(std::size_t groups, std::size_t negatives_per_group) {
  Context c;
  for (std::size_t g = 0; g < groups; ++g) {
    c.facts.push_back({{static_cast<EntityId>(g), 0, 100}, true, g});
    for (std::size_t k = 0; k < negatives_per_group; ++k)
      c.facts.push_back({{static_cast<EntityId>(g), 0, static_cast<EntityId>(200 + k)}, false, g});
  }
  return c;
}

}  // namespace

TEST(SplitContext, ThirtyFacts) {
  const auto c = grouped_context(10, 2);
  const auto [train, test] = split_context(c, 0.3, 1);
  EXPECT_EQ(train.facts.size(), 21u);
  EXPECT_EQ(test.facts.size(), 9u);
}

TEST(SplitContext, GroupsStayTogether) {
  const auto c = grouped_context(17, 2);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto [train, test] = split_context(c, 0.3, seed);
    std::set<std::size_t> a, b;
    for (const auto& f : train.facts) a.insert(f.group);
    for (const auto& f : test.facts) b.insert(f.group);
    for (auto g : a) EXPECT_FALSE(b.count(g));
    EXPECT_EQ(train.facts.size() + test.facts.size(), c.facts.size());
  }
}

TEST(SplitContext, Deterministic) {
  const auto c = grouped_context(12, 2);
  const auto a = split_context(c, 0.3, 5);
  const auto b = split_context(c, 0.3, 5);
  ASSERT_EQ(a.second.facts.size(), b.second.facts.size());
  for (std::size_t i = 0; i < a.second.facts.size(); ++i) EXPECT_EQ(a.second.facts[i].fact, b.second.facts[i].fact);
}

TEST(SplitContext, RejectsDegenerateInput) {
  EXPECT_THROW(split_context(grouped_context(1, 2), 0.3, 0), DataError);
  EXPECT_THROW(split_context(grouped_context(6, 0), 0.3, 0), DataError);
  EXPECT_THROW(split_context(grouped_context(6, 2), 1.5, 0), std::invalid_argument);
}

TEST(RocAuc, Examples) {
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.9, 0.8, 0.7, 0.6}, std::vector<int>{1, -1, 1, -1}), 0.75);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{3, 2, 1, 0}, std::vector<int>{1, 1, -1, -1}), 1.0);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0, 1, 2, 3}, std::vector<int>{1, 1, -1, -1}), 0.0);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{1, 1}, std::vector<int>{1, -1}), 0.5);
  EXPECT_THROW(roc_auc(std::vector<double>{1, 2}, std::vector<int>{1, 1}), DataError);
}

TEST(RocAuc, MatchesPairCountingAndIsMonotoneInvariant) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> len(2, 15), level(0, 4);
  for (int rep = 0; rep < 500; ++rep) {
    const int n = len(rng);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = level(rng) * 0.25;
      y[i] = i == 0 ? 1 : (i == 1 ? -1 : (level(rng) % 2 ? 1 : -1));
    }
    const double auc = roc_auc(s, y);
    EXPECT_NEAR(auc, kgx::testing::pairwise_auc(s, y), 1e-12);
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = std::exp(3 * s[i]) - 7;
    EXPECT_NEAR(roc_auc(t, y), auc, 1e-12);
  }
}

namespace {

struct RankFixture {
  // p: subjects s0..s4, objects o0..o4; s0 -> o0 and s0 -> o1 are true.
  KnowledgeGraph g = kgx::testing::make_graph({{"s0", "p", "o0"},
                                               {"s0", "p", "o1"},
                                               {"s1", "p", "o2"},
                                               {"s2", "p", "o3"},
                                               {"s3", "p", "o4"}});
  Triple t(const std::string& s, const std::string& o) const { return kgx::testing::triple(g, s, "p", o); }
};

}  // namespace

TEST(Mrr, FilteredAverageRank) {
  RankFixture f;
  std::map<Triple, double> table{{f.t("s0", "o0"), 1.0}, {f.t("s0", "o1"), 5.0}, {f.t("s0", "o2"), 2.0},
                                 {f.t("s0", "o3"), 1.0}, {f.t("s0", "o4"), 0.0}};
  auto score = [&](const Triple& t) { return table.count(t) ? table.at(t) : 0.0; };
  // o1 is filtered; o2 beats the truth; o3 ties.
  EXPECT_DOUBLE_EQ(filtered_rank(score, {f.t("s0", "o0"), Side::kObject}, f.g), 2.5);
}

TEST(Mrr, PerfectAndSecond) {
  RankFixture f;
  const std::vector<RankQuery> q{{f.t("s1", "o2"), Side::kObject}, {f.t("s2", "o3"), Side::kObject}};
  auto truth_first = [&](const Triple& t) { return f.g.contains(t) ? 1.0 : 0.0; };
  EXPECT_DOUBLE_EQ(mrr(truth_first, q, f.g), 1.0);
  // A distinct, always-preferred decoy object makes each truth second.
  const auto decoy = f.g.vocabulary().entities.at("o4");
  auto second = [&](const Triple& t) { return t.o == decoy ? 2.0 : (f.g.contains(t) ? 1.0 : 0.0); };
  EXPECT_DOUBLE_EQ(mrr(second, q, f.g), 0.5);
}

TEST(Mrr, ExtraTrueFactsAreFiltered) {
  RankFixture f;
  std::vector<Triple> extra{f.t("s1", "o4")};
  const auto decoy = f.g.vocabulary().entities.at("o4");
  auto score = [&](const Triple& t) { return t.o == decoy ? 2.0 : (f.g.contains(t) ? 1.0 : 0.0); };
  EXPECT_DOUBLE_EQ(filtered_rank(score, {f.t("s1", "o2"), Side::kObject}, f.g, extra), 1.0);
}

TEST(Mrr, Errors) {
  RankFixture f;
  auto score = [](const Triple&) { return 0.0; };
  EXPECT_THROW(mrr(score, {}, f.g), DataError);
  const auto s4 = f.g.vocabulary().entities.at("o4");
  EXPECT_THROW(filtered_rank(score, {{s4, 0, s4}, Side::kSubject}, f.g), DataError);
}

TEST(Mrr, MatchesRankOracle) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> level(0, 3);
  RankFixture f;
  const auto& dom = f.g.domains(0).objects;
  for (int rep = 0; rep < 300; ++rep) {
    std::map<Triple, double> table;
    for (auto s : f.g.domains(0).subjects)
      for (auto o : dom) table[{s, 0, o}] = level(rng);
    auto score = [&](const Triple& t) { return table.at(t); };
    std::vector<RankQuery> queries;
    double expected = 0.0;
    for (const auto& fact : f.g.facts()) {
      queries.push_back({fact, Side::kObject});
      std::vector<double> kept;
      std::size_t target = 0;
      for (auto o : dom) {
        const Triple t{fact.s, 0, o};
        if (o != fact.o && f.g.contains(t)) continue;
        if (o == fact.o) target = kept.size();
        kept.push_back(table.at(t));
      }
      expected += 1.0 / kgx::testing::average_rank(kept, target);
    }
    EXPECT_NEAR(mrr(score, queries, f.g), expected / static_cast<double>(queries.size()), 1e-12);
  }
}

TEST(Mrr, ThreeQueriesArithmetic) {
  EXPECT_NEAR((1.0 + 1.0 / 2 + 1.0 / 4) / 3, 0.583333333333, 1e-9);
}

TEST(WeightedFidelity, Arithmetic) {
  const std::vector<FidelityRecord> r{{1.0, std::nullopt, 0.2, 10, "x"}, {0.5, 0.4, std::nullopt, 30, "x"}};
  const auto w = weighted_fidelity(r);
  EXPECT_DOUBLE_EQ(*w.roc_auc, 0.625);
  EXPECT_DOUBLE_EQ(*w.s_mrr, 0.4);
  EXPECT_DOUBLE_EQ(*w.o_mrr, 0.2);
  EXPECT_EQ(w.test_size, 40u);
}

TEST(WeightedFidelity, IdentityAndBounds) {
  const FidelityRecord one{0.3, 0.7, 0.9, 7, "s"};
  EXPECT_EQ(weighted_fidelity(std::vector<FidelityRecord>{one}), one);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<FidelityRecord> rs;
    for (int i = 0; i < 5; ++i) rs.push_back({u(rng), u(rng), u(rng), static_cast<std::size_t>(1 + rep % 9 + i), ""});
    const auto w = weighted_fidelity(rs);
    double lo = 1, hi = 0;
    for (const auto& r : rs) {
      lo = std::min(lo, *r.roc_auc);
      hi = std::max(hi, *r.roc_auc);
    }
    EXPECT_GE(*w.roc_auc, lo - 1e-12);
    EXPECT_LE(*w.roc_auc, hi + 1e-12);
    std::reverse(rs.begin(), rs.end());
    EXPECT_NEAR(*weighted_fidelity(rs).roc_auc, *w.roc_auc, 1e-12);
  }
  EXPECT_THROW(weighted_fidelity(std::vector<FidelityRecord>{}), std::invalid_argument);
}
