#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace kgx {

enum class Linkage { kWard, kComplete, kAverage };

std::string to_string(Linkage linkage);
Linkage parse_linkage(std::string_view name);

struct Merge {
  std::size_t a = 0, b = 0;  // cluster ids: < n are points, n + i is merge i
  double height = 0.0;
  std::size_t size = 0;
};

/// Agglomerative clustering by the nearest-neighbour chain algorithm with
/// Lance-Williams updates on Euclidean distances (squared for Ward). Merges
/// are returned in non-decreasing height order.
std::vector<Merge> hierarchical_linkage(const std::vector<std::vector<double>>& points, Linkage linkage);

/// Cluster label per point after applying the first n - k merges. Labels run
/// 0..k-1 in order of each cluster's smallest point index.
std::vector<std::size_t> cut_tree(const std::vector<Merge>& merges, std::size_t n, std::size_t k);

std::vector<std::size_t> agglomerative(const std::vector<std::vector<double>>& points, std::size_t k,
                                       Linkage linkage);

}  // namespace kgx
