#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "kgx/clustering.hpp"
#include "kgx/error.hpp"
#include "kgx/scoping.hpp"
#include "support/graphs.hpp"

using namespace kgx;
using kgx::testing::make_graph;

namespace {

using Points = std::vector<std::vector<double>>;

// Naive greedy agglomeration recomputing linkage costs from members.
std::vector<std::size_t> naive_clustering(const Points& pts, std::size_t k, Linkage linkage) {
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < pts.size(); ++i) clusters.push_back({i});
  auto dist = [&](std::size_t a, std::size_t b) {
    double s = 0;
    for (std::size_t t = 0; t < pts[a].size(); ++t) s += (pts[a][t] - pts[b][t]) * (pts[a][t] - pts[b][t]);
    return std::sqrt(s);
  };
  auto cost = [&](const std::vector<std::size_t>& A, const std::vector<std::size_t>& B) {
    if (linkage == Linkage::kWard) {
      std::vector<double> ca(pts[0].size(), 0), cb(pts[0].size(), 0);
      for (auto i : A)
        for (std::size_t t = 0; t < ca.size(); ++t) ca[t] += pts[i][t] / A.size();
      for (auto i : B)
        for (std::size_t t = 0; t < cb.size(); ++t) cb[t] += pts[i][t] / B.size();
      double s = 0;
      for (std::size_t t = 0; t < ca.size(); ++t) s += (ca[t] - cb[t]) * (ca[t] - cb[t]);
      return static_cast<double>(A.size() * B.size()) / static_cast<double>(A.size() + B.size()) * s;
    }
    double best = linkage == Linkage::kComplete ? 0.0 : 0.0;
    for (auto i : A)
      for (auto j : B) best = linkage == Linkage::kComplete ? std::max(best, dist(i, j)) : best + dist(i, j);
    return linkage == Linkage::kComplete ? best : best / static_cast<double>(A.size() * B.size());
  };
  while (clusters.size() > k) {
    std::size_t ba = 0, bb = 1;
    double bc = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < clusters.size(); ++a)
      for (std::size_t b = a + 1; b < clusters.size(); ++b)
        if (const double c = cost(clusters[a], clusters[b]); c < bc) {
          bc = c;
          ba = a;
          bb = b;
        }
    clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
  }
  std::vector<std::size_t> labels(pts.size());
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (auto i : clusters[c]) labels[i] = c;
  return labels;
}

// Partitions compared up to label renaming.
std::set<std::set<std::size_t>> as_partition(const std::vector<std::size_t>& labels) {
  std::map<std::size_t, std::set<std::size_t>> m;
  for (std::size_t i = 0; i < labels.size(); ++i) m[labels[i]].insert(i);
  std::set<std::set<std::size_t>> out;
  for (auto& [l, s] : m) out.insert(s);
  return out;
}

Points random_points(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::normal_distribution<double> u(0, 1);
  Points p(n, std::vector<double>(dim));
  for (auto& row : p)
    for (auto& v : row) v = u(rng);
  return p;
}

}  // namespace

class LinkageOracle : public ::testing::TestWithParam<Linkage> {};

TEST_P(LinkageOracle, MatchesNaiveGreedy) {
  std::mt19937_64 rng(static_cast<int>(GetParam()) + 1);
  for (int rep = 0; rep < 30; ++rep) {
    const auto pts = random_points(rng, 3 + rep % 10, 1 + rep % 4);
    const auto merges = hierarchical_linkage(pts, GetParam());
    ASSERT_EQ(merges.size(), pts.size() - 1);
    for (std::size_t i = 1; i < merges.size(); ++i) EXPECT_LE(merges[i - 1].height, merges[i].height);
    for (std::size_t k = 1; k <= pts.size(); ++k)
      EXPECT_EQ(as_partition(cut_tree(merges, pts.size(), k)), as_partition(naive_clustering(pts, k, GetParam())))
          << "k=" << k;
  }
}

INSTANTIATE_TEST_SUITE_P(All, LinkageOracle, ::testing::Values(Linkage::kWard, Linkage::kComplete, Linkage::kAverage));

TEST(Clustering, SeparatedBlobsMatchExhaustivePartition) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0, 0.01);
  Points pts;
  for (int i = 0; i < 8; ++i) pts.push_back({(i < 3 ? 0.0 : 1.0) + noise(rng), noise(rng)});
  // Exhaustive minimum within-cluster sum of squares over 2-partitions.
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_labels;
  for (unsigned mask = 1; mask < (1u << pts.size()) - 1; ++mask) {
    double sse = 0;
    for (unsigned side = 0; side < 2; ++side) {
      double cx = 0, cy = 0, n = 0;
      for (std::size_t i = 0; i < pts.size(); ++i)
        if (((mask >> i) & 1u) == side) {
          cx += pts[i][0];
          cy += pts[i][1];
          ++n;
        }
      cx /= n;
      cy /= n;
      for (std::size_t i = 0; i < pts.size(); ++i)
        if (((mask >> i) & 1u) == side) sse += std::pow(pts[i][0] - cx, 2) + std::pow(pts[i][1] - cy, 2);
    }
    if (sse < best) {
      best = sse;
      best_labels.clear();
      for (std::size_t i = 0; i < pts.size(); ++i) best_labels.push_back((mask >> i) & 1u);
    }
  }
  EXPECT_EQ(as_partition(agglomerative(pts, 2, Linkage::kWard)), as_partition(best_labels));
}

TEST(Clustering, SingletonsAndLabels) {
  std::mt19937_64 rng(1);
  const auto pts = random_points(rng, 6, 2);
  const auto labels = agglomerative(pts, 6, Linkage::kWard);
  EXPECT_EQ(labels, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(agglomerative(pts, 1, Linkage::kAverage), std::vector<std::size_t>(6, 0));
  EXPECT_THROW(agglomerative(pts, 7, Linkage::kWard), std::invalid_argument);
  EXPECT_EQ(parse_linkage("complete"), Linkage::kComplete);
  EXPECT_THROW(parse_linkage("single"), std::invalid_argument);
}

namespace {

struct ScopeFixture {
  KnowledgeGraph g;
  PredicateId p = 0;
  std::vector<Triple> truths;

  explicit ScopeFixture(int n = 10) {
    std::vector<kgx::testing::LabeledTriple> facts;
    for (int i = 0; i < n; ++i) facts.push_back({"s" + std::to_string(i), "p", "o" + std::to_string(i)});
    g = make_graph(facts);
    p = g.vocabulary().predicates.at("p");
    truths.assign(g.facts().begin(), g.facts().end());
  }
};

}  // namespace

TEST(GlobalContext, TwoCorruptionsPerFact) {
  ScopeFixture fx;
  std::size_t skipped = 99;
  const auto c = global_context(fx.g, fx.p, fx.truths, 3, &skipped);
  EXPECT_EQ(c.facts.size(), 30u);
  EXPECT_EQ(skipped, 0u);
  std::set<Triple> seen;
  for (const auto& f : c.facts) {
    EXPECT_TRUE(seen.insert(f.fact).second);
    EXPECT_EQ(f.truth, fx.g.contains(f.fact));
    if (!f.truth) {
      const auto& t = fx.truths[f.group];
      EXPECT_TRUE((f.fact.s == t.s) != (f.fact.o == t.o));
    }
  }
}

TEST(GlobalContext, SingleSubjectDomain) {
  std::vector<kgx::testing::LabeledTriple> facts;
  for (int i = 0; i < 10; ++i) facts.push_back({"s", "p", "o" + std::to_string(i)});
  facts.push_back({"x", "q", "y"});
  const auto g = make_graph(facts);
  std::vector<Triple> truths(g.facts_of(0).begin(), g.facts_of(0).end());
  // Object corruptions are impossible too: every (s, o') is a fact.
  std::size_t skipped = 0;
  const auto c = global_context(g, 0, truths, 1, &skipped);
  EXPECT_EQ(c.facts.size(), 10u);
  EXPECT_EQ(skipped, 20u);
}

TEST(GlobalContext, Deterministic) {
  ScopeFixture fx;
  const auto a = global_context(fx.g, fx.p, fx.truths, 11);
  const auto b = global_context(fx.g, fx.p, fx.truths, 11);
  ASSERT_EQ(a.facts.size(), b.facts.size());
  for (std::size_t i = 0; i < a.facts.size(); ++i) EXPECT_EQ(a.facts[i].fact, b.facts[i].fact);
}

TEST(LocalContexts, PartitionTrueFacts) {
  ScopeFixture fx(12);
  const auto model = init_model(ModelKind::kTransE, 4, fx.g.entity_count(), fx.g.predicate_count(), 3);
  const auto c = global_context(fx.g, fx.p, fx.truths, 1);
  for (std::size_t k : {2u, 5u, 12u}) {
    const auto locals = local_contexts(c, model, fx.g, k, Linkage::kWard, 9);
    ASSERT_EQ(locals.size(), k);
    std::multiset<Triple> all;
    for (const auto& l : locals) {
      EXPECT_EQ(l.scope.kind, ScopeKind::kLocal);
      EXPECT_GE(l.positives(), 1u);
      for (const auto& t : l.true_facts()) all.insert(t);
      for (const auto& f : l.facts) EXPECT_EQ(f.fact.p, fx.p);
    }
    EXPECT_EQ(all, std::multiset<Triple>(fx.truths.begin(), fx.truths.end()));
    if (k == 12)
      for (const auto& l : locals) EXPECT_EQ(l.positives(), 1u);
  }
  EXPECT_THROW(local_contexts(c, model, fx.g, 1, Linkage::kWard, 9), std::invalid_argument);
  EXPECT_THROW(local_contexts(c, model, fx.g, 13, Linkage::kWard, 9), std::invalid_argument);
}

TEST(LocalContexts, InputOrderDoesNotMatter) {
  ScopeFixture fx(12);
  const auto model = init_model(ModelKind::kHolE, 4, fx.g.entity_count(), fx.g.predicate_count(), 3);
  auto c = global_context(fx.g, fx.p, fx.truths, 1);
  const auto a = local_contexts(c, model, fx.g, 3, Linkage::kWard, 2);
  std::reverse(c.facts.begin(), c.facts.end());
  const auto b = local_contexts(c, model, fx.g, 3, Linkage::kWard, 2);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a[i].true_facts(), b[i].true_facts());
}

TEST(InstanceContext, SharedArguments) {
  const auto g = make_graph({{"a", "p", "b"}, {"a", "p", "c"}, {"d", "p", "e"}, {"d", "p", "b"}});
  auto t = [&](const char* s, const char* o) { return kgx::testing::triple(g, s, "p", o); };
  Context c;
  c.facts = {{t("a", "b"), true, 0}, {t("a", "c"), true, 1}, {t("d", "e"), true, 2}};
  const auto ic = instance_context(c, t("a", "b"));
  EXPECT_EQ(ic.facts.size(), 2u);
  EXPECT_EQ(ic.scope.kind, ScopeKind::kInstance);
  EXPECT_EQ(*ic.scope.target, t("a", "b"));
  EXPECT_EQ(instance_context(c, t("d", "e")).facts.size(), 1u);
  c.facts.push_back({t("d", "b"), true, 3});
  EXPECT_EQ(instance_context(c, t("a", "b")).facts.size(), 3u);
  EXPECT_THROW(instance_context(c, t("e", "a")), DataError);
}

TEST(SelectK, RangeTruncatedToTrueFacts) {
  ScopeFixture fx(3);
  const auto model = init_model(ModelKind::kTransE, 4, fx.g.entity_count(), fx.g.predicate_count(), 3);
  const auto c = global_context(fx.g, fx.p, fx.truths, 1);
  ScopingConfig cfg;
  // Three true facts cannot produce covered local explanations.
  EXPECT_THROW(select_k(model.scorer(), model, {fx.g, fx.g}, c, cfg, 0.0), DataError);
  ScopeFixture one(1);
  const auto c1 = global_context(one.g, one.p, one.truths, 1);
  EXPECT_THROW(select_k(model.scorer(), model, {one.g, one.g}, c1, cfg, 0.0), DataError);
}

TEST(DeriveSeed, DistinctAndStable) {
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}
