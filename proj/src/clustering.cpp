#include "kgx/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace kgx {

std::string to_string(Linkage linkage) {
  switch (linkage) {
    case Linkage::kWard: return "ward";
    case Linkage::kComplete: return "complete";
    case Linkage::kAverage: return "average";
  }
  return "ward";
}

Linkage parse_linkage(std::string_view name) {
  if (name == "ward") return Linkage::kWard;
  if (name == "complete") return Linkage::kComplete;
  if (name == "average") return Linkage::kAverage;
  throw std::invalid_argument("unknown linkage '" + std::string(name) + "'");
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void join(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

std::vector<Merge> hierarchical_linkage(const std::vector<std::vector<double>>& points, Linkage linkage) {
  const std::size_t n = points.size();
  std::vector<Merge> merges;
  if (n < 2) return merges;
  const std::size_t dim = points.front().size();
  for (const auto& p : points)
    if (p.size() != dim) throw std::invalid_argument("points differ in dimension");

  // Full dissimilarity matrix; row i is reused for the cluster that absorbs i.
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double sq = 0.0;
      for (std::size_t t = 0; t < dim; ++t) sq += (points[i][t] - points[j][t]) * (points[i][t] - points[j][t]);
      d[i * n + j] = d[j * n + i] = linkage == Linkage::kWard ? sq : std::sqrt(sq);
    }
  auto at = [&](std::size_t i, std::size_t j) -> double& { return d[i * n + j]; };

  std::vector<std::size_t> size(n, 1);
  std::vector<bool> active(n, true);
  std::vector<std::size_t> chain;
  std::vector<Merge> raw;  // point-representative ids

  for (std::size_t remaining = n; remaining > 1;) {
    if (chain.empty())
      for (std::size_t i = 0; i < n; ++i)
        if (active[i]) {
          chain.push_back(i);
          break;
        }
    while (true) {
      const std::size_t x = chain.back();
      const std::size_t prev = chain.size() > 1 ? chain[chain.size() - 2] : n;
      std::size_t best = prev;
      double best_d = prev < n ? at(x, prev) : std::numeric_limits<double>::infinity();
      for (std::size_t y = 0; y < n; ++y) {
        if (!active[y] || y == x) continue;
        if (at(x, y) < best_d) {
          best_d = at(x, y);
          best = y;
        }
      }
      if (best == prev) {
        chain.pop_back();
        chain.pop_back();
        const std::size_t a = std::min(x, prev), b = std::max(x, prev);
        raw.push_back({a, b, best_d, size[a] + size[b]});
        // Lance-Williams: cluster a absorbs b.
        for (std::size_t k = 0; k < n; ++k) {
          if (!active[k] || k == a || k == b) continue;
          const double da = at(a, k), db = at(b, k), dab = at(a, b);
          const double na = static_cast<double>(size[a]), nb = static_cast<double>(size[b]),
                       nk = static_cast<double>(size[k]);
          double v = 0.0;
          switch (linkage) {
            case Linkage::kWard: v = ((na + nk) * da + (nb + nk) * db - nk * dab) / (na + nb + nk); break;
            case Linkage::kComplete: v = std::max(da, db); break;
            case Linkage::kAverage: v = (na * da + nb * db) / (na + nb); break;
          }
          at(a, k) = at(k, a) = v;
        }
        size[a] += size[b];
        active[b] = false;
        --remaining;
        break;
      }
      chain.push_back(best);
    }
  }

  std::stable_sort(raw.begin(), raw.end(), [](const Merge& l, const Merge& r) { return l.height < r.height; });
  // Relabel representatives to dendrogram ids.
  DisjointSets sets(n);
  std::vector<std::size_t> cluster_id(n);
  std::iota(cluster_id.begin(), cluster_id.end(), 0);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const std::size_t ra = sets.find(raw[i].a), rb = sets.find(raw[i].b);
    const std::size_t ia = cluster_id[ra], ib = cluster_id[rb];
    double h = raw[i].height;
    if (linkage == Linkage::kWard) h = std::sqrt(std::max(0.0, h));
    merges.push_back({std::min(ia, ib), std::max(ia, ib), h, raw[i].size});
    sets.join(ra, rb);
    cluster_id[sets.find(ra)] = n + i;
  }
  return merges;
}

std::vector<std::size_t> cut_tree(const std::vector<Merge>& merges, std::size_t n, std::size_t k) {
  if (k < 1 || k > n) throw std::invalid_argument("cluster count out of range");
  if (merges.size() + 1 != n && n > 0) throw std::invalid_argument("merge list does not match point count");
  // members of dendrogram node id -> representative point
  std::vector<std::size_t> rep(n + merges.size());
  std::iota(rep.begin(), rep.begin() + static_cast<std::ptrdiff_t>(n), 0);
  DisjointSets sets(n);
  for (std::size_t i = 0; i + k < n; ++i) {
    sets.join(rep[merges[i].a], rep[merges[i].b]);
    rep[n + i] = sets.find(rep[merges[i].a]);
  }
  std::vector<std::size_t> labels(n), label_of_root(n, n);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto root = sets.find(i);
    if (label_of_root[root] == n) label_of_root[root] = next++;
    labels[i] = label_of_root[root];
  }
  return labels;
}

std::vector<std::size_t> agglomerative(const std::vector<std::vector<double>>& points, std::size_t k,
                                       Linkage linkage) {
  return cut_tree(hierarchical_linkage(points, linkage), points.size(), k);
}

}  // namespace kgx
