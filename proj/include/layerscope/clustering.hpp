#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string_view>
#include <vector>

#include "layerscope/error.hpp"
#include "layerscope/matrix.hpp"

namespace layerscope {

enum class DistanceMetric { Cosine, Euclidean };
enum class Linkage { Single, Complete, Average, Weighted };
enum class Space { Ld2, Hd };

inline constexpr std::array<Linkage, 4> kAllLinkages = {Linkage::Single, Linkage::Complete, Linkage::Average, Linkage::Weighted};

inline std::string_view to_string(DistanceMetric m) { return m == DistanceMetric::Cosine ? "cosine" : "euclidean"; }
inline std::string_view to_string(Space s) { return s == Space::Ld2 ? "2d" : "hd"; }
inline std::string_view to_string(Linkage l) {
  switch (l) {
    case Linkage::Single: return "single";
    case Linkage::Complete: return "complete";
    case Linkage::Average: return "average";
    case Linkage::Weighted: return "weighted";
  }
  return "";
}

template <typename T>
double euclidean_distance(std::span<const T> a, std::span<const T> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += diff * diff;
  }
  return std::sqrt(s);
}

/// 1 - cos(a, b), clamped to [0, 2]. A zero vector is at distance 1 from
/// everything.
template <typename T>
double cosine_distance(std::span<const T> a, std::span<const T> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = static_cast<double>(a[i]);
    const double y = static_cast<double>(b[i]);
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  return std::clamp(1.0 - dot / std::sqrt(na * nb), 0.0, 2.0);
}

template <typename T>
DistanceMatrix pairwise_distances(const Matrix<T>& vectors, DistanceMetric metric) {
  require_finite(vectors, "distance input");
  const std::size_t n = vectors.rows();
  DistanceMatrix d(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = metric == DistanceMetric::Cosine ? cosine_distance(vectors.row(i), vectors.row(j))
                                                        : euclidean_distance(vectors.row(i), vectors.row(j));
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

/// Agglomeration record using the usual node numbering: leaves are 0..n-1,
/// merge i creates node n + i. `left` is always the subtree holding the
/// smaller leaf id.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;

  bool operator==(const Merge&) const = default;
};

struct Dendrogram {
  std::size_t n_leaves = 0;
  std::vector<Merge> merges;
};

/// Generic agglomerative clustering with Lance-Williams updates. Each step
/// merges the active pair with the smallest (distance, min leaf id, other
/// min leaf id).
inline Dendrogram build_dendrogram(const DistanceMatrix& dist, Linkage linkage) {
  require_distance_matrix(dist);
  const std::size_t n = dist.rows();
  Dendrogram out{n, {}};
  if (n < 2) return out;
  out.merges.reserve(n - 1);

  // Each cluster lives in the slot of its smallest leaf id.
  DistanceMatrix d = dist;
  std::vector<bool> active(n, true);
  std::vector<std::size_t> node(n), size(n, 1);
  std::iota(node.begin(), node.end(), std::size_t{0});
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> nn(n, n);
  std::vector<double> nnd(n, inf);

  auto refresh = [&](std::size_t a) {
    nn[a] = n;
    nnd[a] = inf;
    for (std::size_t b = a + 1; b < n; ++b) {
      if (active[b] && d(a, b) < nnd[a]) {
        nnd[a] = d(a, b);
        nn[a] = b;
      }
    }
  };
  for (std::size_t a = 0; a < n; ++a) refresh(a);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t a = n;
    for (std::size_t c = 0; c < n; ++c) {
      if (active[c] && nn[c] < n && (a == n || nnd[c] < nnd[a])) a = c;
    }
    const std::size_t b = nn[a];
    const double height = nnd[a];
    out.merges.push_back({node[a], node[b], height, size[a] + size[b]});

    for (std::size_t c = 0; c < n; ++c) {
      if (!active[c] || c == a || c == b) continue;
      const double da = d(a, c), db = d(b, c);
      double v = 0.0;
      switch (linkage) {
        case Linkage::Single: v = std::min(da, db); break;
        case Linkage::Complete: v = std::max(da, db); break;
        case Linkage::Average:
          v = (static_cast<double>(size[a]) * da + static_cast<double>(size[b]) * db) / static_cast<double>(size[a] + size[b]);
          break;
        case Linkage::Weighted: v = 0.5 * (da + db); break;
      }
      d(a, c) = v;
      d(c, a) = v;
    }
    active[b] = false;
    size[a] += size[b];
    node[a] = n + step;

    refresh(a);
    for (std::size_t c = 0; c < a; ++c) {
      if (!active[c]) continue;
      if (nn[c] == a || nn[c] == b) {
        refresh(c);
      } else if (d(c, a) < nnd[c] || (d(c, a) == nnd[c] && a < nn[c])) {
        nnd[c] = d(c, a);
        nn[c] = a;
      }
    }
    for (std::size_t c = a + 1; c < b; ++c) {
      if (active[c] && nn[c] == b) refresh(c);
    }
  }
  return out;
}

/// Flat labels after applying the first n - k merges. Labels are dense and
/// numbered by first appearance in point order.
inline std::vector<int> cut_labels(const Dendrogram& dg, std::size_t k) {
  const std::size_t n = dg.n_leaves;
  if (k < 1 || k > n) throw Error(ErrorCode::OutOfRange, "cut must yield between 1 and n clusters");
  std::vector<std::size_t> parent(2 * n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n - k; ++i) {
    const auto& m = dg.merges[i];
    parent[find(m.left)] = n + i;
    parent[find(m.right)] = n + i;
  }
  std::vector<int> labels(n, -1);
  std::vector<int> root_label(2 * n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (root_label[r] < 0) root_label[r] = next++;
    labels[i] = root_label[r];
  }
  return labels;
}

/// Per-point silhouette under `dist`. Points in singleton clusters score 0.
inline std::vector<double> silhouette_samples(const DistanceMatrix& dist, std::span<const int> labels) {
  const std::size_t n = labels.size();
  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++count[static_cast<std::size_t>(l)];

  std::vector<double> s(n, 0.0);
  std::vector<double> sum(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = static_cast<std::size_t>(labels[i]);
    if (count[own] <= 1) continue;
    std::fill(sum.begin(), sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) sum[static_cast<std::size_t>(labels[j])] += dist(i, j);
    const double a = sum[own] / static_cast<double>(count[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sum.size(); ++c) {
      if (c != own && count[c] > 0) b = std::min(b, sum[c] / static_cast<double>(count[c]));
    }
    if (!std::isfinite(b)) continue;
    const double denom = std::max(a, b);
    s[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return s;
}

inline double silhouette_score(const DistanceMatrix& dist, std::span<const int> labels) {
  auto s = silhouette_samples(dist, labels);
  if (s.empty()) return 0.0;
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

/// Cluster counts examined by `select_cut`: the ceil(10%) of the n - 1 cuts
/// closest to the root, clamped to 2 <= k <= n - 1.
inline std::pair<std::size_t, std::size_t> candidate_cluster_counts(std::size_t n) {
  const std::size_t window = (n - 1 + 9) / 10;
  return {2, std::min(n - 1, 1 + window)};
}

struct CutSelection {
  std::vector<int> labels;
  std::size_t k_clusters = 0;
  double silhouette = 0.0;
};

inline CutSelection select_cut(const Dendrogram& dg, const DistanceMatrix& dist) {
  const std::size_t n = dg.n_leaves;
  if (n < 3) throw Error(ErrorCode::TooFewPoints, "cut selection needs at least 3 points");
  const auto [k_min, k_max] = candidate_cluster_counts(n);
  CutSelection best;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    auto labels = cut_labels(dg, k);
    const double s = silhouette_score(dist, labels);
    if (best.labels.empty() || s > best.silhouette) best = {std::move(labels), k, s};
  }
  return best;
}

struct ClusterAssignment {
  Space space = Space::Hd;
  std::size_t layer = 0;
  std::vector<int> labels;
  Linkage linkage = Linkage::Single;
  double silhouette = 0.0;
  std::size_t k_clusters = 1;
  Dendrogram dendrogram;  // of the chosen linkage

  std::vector<std::vector<std::size_t>> members() const {
    std::vector<std::vector<std::size_t>> out(k_clusters);
    for (std::size_t i = 0; i < labels.size(); ++i) out[static_cast<std::size_t>(labels[i])].push_back(i);
    return out;
  }
};

/// Runs every linkage and keeps the one whose selected cut has the highest
/// silhouette (ties go to the earlier linkage in enum order).
inline ClusterAssignment cluster_layer(const DistanceMatrix& dist) {
  if (dist.rows() < 3) throw Error(ErrorCode::TooFewPoints, "clustering needs at least 3 points");
  ClusterAssignment best;
  bool have = false;
  for (Linkage linkage : kAllLinkages) {
    auto dg = build_dendrogram(dist, linkage);
    auto cut = select_cut(dg, dist);
    if (!have || cut.silhouette > best.silhouette) {
      best.labels = std::move(cut.labels);
      best.k_clusters = cut.k_clusters;
      best.silhouette = cut.silhouette;
      best.linkage = linkage;
      best.dendrogram = std::move(dg);
      have = true;
    }
  }
  return best;
}

template <typename T>
ClusterAssignment cluster_layer(const Matrix<T>& vectors, DistanceMetric metric = DistanceMetric::Cosine) {
  return cluster_layer(pairwise_distances(vectors, metric));
}

/// Single-cluster assignment used when there are too few points to cut.
inline ClusterAssignment single_cluster(std::size_t n) {
  ClusterAssignment a;
  a.labels.assign(n, 0);
  a.k_clusters = 1;
  return a;
}

}  // namespace layerscope
