#pragma once

#include <algorithm>
#include <string_view>
#include <tuple>
#include <vector>

#include "layerscope/clustering.hpp"
#include "layerscope/metrics.hpp"

namespace layerscope {

enum class Ordering { Linkage, NnHeuristic, Greedy };

inline constexpr std::array<Ordering, 3> kAllOrderings = {Ordering::Linkage, Ordering::NnHeuristic, Ordering::Greedy};

inline std::string_view to_string(Ordering o) {
  switch (o) {
    case Ordering::Linkage: return "linkage";
    case Ordering::NnHeuristic: return "nn";
    case Ordering::Greedy: return "greedy";
  }
  return "";
}

/// Left-to-right leaf order of a dendrogram. Each merge lists the subtree
/// with the smaller minimum leaf id first.
inline std::vector<std::size_t> dendrogram_leaf_order(const Dendrogram& dg) {
  const std::size_t n = dg.n_leaves;
  if (n == 0) return {};
  if (n == 1) return {0};
  std::vector<std::size_t> min_leaf(2 * n - 1);
  for (std::size_t i = 0; i < n; ++i) min_leaf[i] = i;
  for (std::size_t i = 0; i < dg.merges.size(); ++i)
    min_leaf[n + i] = std::min(min_leaf[dg.merges[i].left], min_leaf[dg.merges[i].right]);

  std::vector<std::size_t> order;
  std::vector<std::size_t> stack{2 * n - 2};
  while (!stack.empty()) {
    const std::size_t node = stack.back();
    stack.pop_back();
    if (node < n) {
      order.push_back(node);
      continue;
    }
    std::size_t first = dg.merges[node - n].left, second = dg.merges[node - n].right;
    if (min_leaf[second] < min_leaf[first]) std::swap(first, second);
    stack.push_back(second);
    stack.push_back(first);
  }
  return order;
}

inline std::vector<std::size_t> order_linkage(const DistanceMatrix& dist, Linkage linkage) {
  return dendrogram_leaf_order(build_dendrogram(dist, linkage));
}

/// Nearest-neighbor chain starting at point 0.
inline std::vector<std::size_t> order_nn_heuristic(const DistanceMatrix& dist) {
  require_distance_matrix(dist);
  const std::size_t n = dist.rows();
  if (n == 0) return {};
  std::vector<bool> used(n, false);
  std::vector<std::size_t> order{0};
  used[0] = true;
  while (order.size() < n) {
    const std::size_t last = order.back();
    std::size_t best = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (!used[j] && (best == n || dist(last, j) < dist(last, best))) best = j;
    }
    used[best] = true;
    order.push_back(best);
  }
  return order;
}

/// Greedy edge insertion: shortest pairs first, keeping degree <= 2 and no
/// cycles, until a Hamiltonian path remains. Read from the lower-id end.
inline std::vector<std::size_t> order_greedy(const DistanceMatrix& dist) {
  require_distance_matrix(dist);
  const std::size_t n = dist.rows();
  if (n <= 1) return n == 1 ? std::vector<std::size_t>{0} : std::vector<std::size_t>{};

  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(dist(i, j), i, j);
  std::sort(pairs.begin(), pairs.end());

  std::vector<std::vector<std::size_t>> adj(n);
  DisjointSets sets(n);
  std::size_t accepted = 0;
  for (const auto& [w, i, j] : pairs) {
    if (adj[i].size() >= 2 || adj[j].size() >= 2) continue;
    if (!sets.unite(i, j)) continue;
    adj[i].push_back(j);
    adj[j].push_back(i);
    if (++accepted == n - 1) break;
  }

  std::size_t start = 0;
  while (adj[start].size() != 1) ++start;
  std::vector<std::size_t> order{start};
  std::size_t prev = n, cur = start;
  while (order.size() < n) {
    const std::size_t next = adj[cur][0] != prev ? adj[cur][0] : adj[cur][1];
    prev = cur;
    cur = next;
    order.push_back(cur);
  }
  return order;
}

inline std::vector<std::size_t> order_matrix(const DistanceMatrix& dist, Ordering ordering, Linkage linkage) {
  switch (ordering) {
    case Ordering::Linkage: return order_linkage(dist, linkage);
    case Ordering::NnHeuristic: return order_nn_heuristic(dist);
    case Ordering::Greedy: return order_greedy(dist);
  }
  return {};
}

struct MatrixView {
  Space space = Space::Hd;
  std::size_t layer = 0;
  DistanceMatrix dist;
  std::vector<std::size_t> order;
  Ordering ordering_method = Ordering::Linkage;
  std::vector<int> row_cluster_colors;  // HD clusters (left bar)
  std::vector<int> col_cluster_colors;  // 2D clusters (top bar)
};

}  // namespace layerscope
