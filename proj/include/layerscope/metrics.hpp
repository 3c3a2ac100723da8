#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <string_view>
#include <tuple>
#include <vector>

#include "layerscope/clustering.hpp"
#include "layerscope/matrix.hpp"

namespace layerscope {

// ---------------------------------------------------------------------------
// Minimum spanning tree

struct MstEdge {
  std::size_t u = 0;
  std::size_t v = 0;
  double weight = 0.0;

  bool operator==(const MstEdge&) const = default;
};

struct Mst {
  std::size_t n = 0;
  std::vector<MstEdge> edges;
  std::vector<std::vector<std::pair<std::size_t, double>>> adjacency;

  double total_weight() const {
    double s = 0.0;
    for (const auto& e : edges) s += e.weight;
    return s;
  }
};

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<unsigned> rank_;
};

/// Kruskal over the complete graph of `dist`. Edges are considered in
/// ascending (weight, min id, max id) order, which makes the tree unique.
inline Mst kruskal_mst(const DistanceMatrix& dist) {
  require_distance_matrix(dist);
  const std::size_t n = dist.rows();
  if (n < 2) throw Error(ErrorCode::DegenerateInput, "MST needs at least 2 points");

  std::vector<MstEdge> all;
  all.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) all.push_back({i, j, dist(i, j)});
  std::sort(all.begin(), all.end(), [](const MstEdge& a, const MstEdge& b) {
    return std::tie(a.weight, a.u, a.v) < std::tie(b.weight, b.u, b.v);
  });

  Mst mst;
  mst.n = n;
  mst.adjacency.resize(n);
  DisjointSets sets(n);
  for (const auto& e : all) {
    if (!sets.unite(e.u, e.v)) continue;
    mst.edges.push_back(e);
    mst.adjacency[e.u].emplace_back(e.v, e.weight);
    mst.adjacency[e.v].emplace_back(e.u, e.weight);
    if (mst.edges.size() == n - 1) break;
  }
  return mst;
}

// ---------------------------------------------------------------------------
// Metric identities

enum class MetricId { Pps, Compression, Stretching, AggError, TrueNeighbors, FalseNeighbors, MissingNeighbors, Lcmc, Fpr, Fnr };

inline constexpr std::array<MetricId, 10> kAllMetrics = {MetricId::Pps,           MetricId::Compression,    MetricId::Stretching,
                                                         MetricId::AggError,      MetricId::TrueNeighbors,  MetricId::FalseNeighbors,
                                                         MetricId::MissingNeighbors, MetricId::Lcmc,       MetricId::Fpr,
                                                         MetricId::Fnr};

inline std::string_view to_string(MetricId m) {
  switch (m) {
    case MetricId::Pps: return "PPS";
    case MetricId::Compression: return "COMPRESSION";
    case MetricId::Stretching: return "STRETCHING";
    case MetricId::AggError: return "AGG_ERROR";
    case MetricId::TrueNeighbors: return "TRUE_NEIGHBORS";
    case MetricId::FalseNeighbors: return "FALSE_NEIGHBORS";
    case MetricId::MissingNeighbors: return "MISSING_NEIGHBORS";
    case MetricId::Lcmc: return "LCMC";
    case MetricId::Fpr: return "FPR";
    case MetricId::Fnr: return "FNR";
  }
  return "";
}

inline std::optional<MetricId> parse_metric(std::string_view name) {
  for (MetricId m : kAllMetrics) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

inline bool higher_is_worse(MetricId m) {
  switch (m) {
    case MetricId::Pps:
    case MetricId::TrueNeighbors:
    case MetricId::Lcmc: return false;
    default: return true;
  }
}

struct KMode {
  enum class Kind { Fixed, ClusterSize };
  Kind kind = Kind::Fixed;
  std::size_t k = 5;

  static KMode fixed(std::size_t k) { return {Kind::Fixed, k}; }
  static KMode cluster_size() { return {Kind::ClusterSize, 0}; }
};

struct QualityReport {
  std::size_t layer = 0;
  MetricId metric = MetricId::Pps;
  KMode k_mode;
  std::vector<double> values;
  double range_min = 0.0;
  double range_max = 1.0;
};

using MetricReports = std::map<MetricId, QualityReport>;

// ---------------------------------------------------------------------------
// Nearest neighbors

/// Ids of the k nearest points to `i` under row `i` of `dist`, excluding i,
/// ordered by (distance, id).
inline std::vector<std::size_t> nearest_by_distance(const DistanceMatrix& dist, std::size_t i, std::size_t k) {
  std::vector<std::size_t> ids;
  ids.reserve(dist.rows() - 1);
  for (std::size_t j = 0; j < dist.rows(); ++j)
    if (j != i) ids.push_back(j);
  auto less = [&](std::size_t a, std::size_t b) { return std::tie(dist(i, a), a) < std::tie(dist(i, b), b); };
  if (k < ids.size()) {
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(), less);
    ids.resize(k);
  } else {
    std::sort(ids.begin(), ids.end(), less);
  }
  return ids;
}

/// Per point, the k others with the largest cosine similarity (ties by id).
template <typename T>
std::vector<std::vector<std::size_t>> hd_knn(const Matrix<T>& vectors, std::size_t k) {
  const std::size_t n = vectors.rows();
  if (k < 1 || k + 1 > n) throw Error(ErrorCode::KOutOfRange, "k must lie in [1, n-1]");
  const auto dist = pairwise_distances(vectors, DistanceMetric::Cosine);
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = nearest_by_distance(dist, i, k);
  return out;
}

// ---------------------------------------------------------------------------
// FPR / FNR

/// Grows a neighborhood of `start` along MST edges, one node per step,
/// always taking the frontier edge with the smallest (weight, min id, max id).
inline std::vector<std::size_t> grow_mst_neighborhood(const Mst& mst, std::size_t start, std::size_t steps) {
  using Candidate = std::tuple<double, std::size_t, std::size_t, std::size_t>;  // weight, lo, hi, node
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> frontier;
  std::vector<bool> in_set(mst.n, false);
  in_set[start] = true;
  auto push_from = [&](std::size_t u) {
    for (const auto& [v, w] : mst.adjacency[u]) {
      if (!in_set[v]) frontier.emplace(w, std::min(u, v), std::max(u, v), v);
    }
  };
  push_from(start);
  std::vector<std::size_t> grown;
  while (grown.size() < steps && !frontier.empty()) {
    const auto [w, lo, hi, v] = frontier.top();
    frontier.pop();
    if (in_set[v]) continue;
    in_set[v] = true;
    grown.push_back(v);
    push_from(v);
  }
  return grown;
}

struct FprFnr {
  std::vector<double> fpr;
  std::vector<double> fnr;
};

/// MST-neighborhood false positive / false negative rates against HD
/// clusters. Each point's neighborhood has |C(p)| - 1 members; p itself is
/// left out of both sets. 0/0 rates are reported as 0.
inline FprFnr fpr_fnr(std::span<const int> hd_labels, const Mst& mst) {
  const std::size_t n = hd_labels.size();
  if (mst.n != n) throw Error(ErrorCode::CountMismatch, "MST size does not match cluster label count");
  std::map<int, std::size_t> cluster_size;
  for (int l : hd_labels) ++cluster_size[l];

  FprFnr out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t others = cluster_size[hd_labels[p]] - 1;
    const auto nn = grow_mst_neighborhood(mst, p, others);
    std::size_t tp = 0;
    for (std::size_t q : nn) tp += hd_labels[q] == hd_labels[p] ? 1 : 0;
    const std::size_t fp = nn.size() - tp;
    const std::size_t fn = others - tp;
    const std::size_t tn = n - 1 - tp - fp - fn;
    out.fpr[p] = fp + tn == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(fp + tn);
    out.fnr[p] = fn + tp == 0 ? 0.0 : static_cast<double>(fn) / static_cast<double>(fn + tp);
  }
  return out;
}

// ---------------------------------------------------------------------------
// k-NN based metrics

/// TRUE / FALSE / MISSING neighbors and LCMC, with euclidean neighborhoods in
/// both spaces.
template <typename T>
MetricReports neighbor_metrics(const Matrix<double>& coords2d, const Matrix<T>& vectors_hd, KMode k_mode,
                               std::span<const int> hd_labels = {}) {
  const std::size_t n = coords2d.rows();
  if (vectors_hd.rows() != n) throw Error(ErrorCode::CountMismatch, "2D and HD point counts differ");
  if (n < 2) throw Error(ErrorCode::KOutOfRange, "neighbor metrics need at least 2 points");
  std::vector<std::size_t> k_of(n);
  if (k_mode.kind == KMode::Kind::Fixed) {
    if (k_mode.k < 1 || k_mode.k > n - 1) throw Error(ErrorCode::KOutOfRange, "k must lie in [1, n-1]");
    std::fill(k_of.begin(), k_of.end(), k_mode.k);
  } else {
    if (hd_labels.size() != n) throw Error(ErrorCode::CountMismatch, "cluster-size k needs HD cluster labels");
    std::map<int, std::size_t> size;
    for (int l : hd_labels) ++size[l];
    for (std::size_t i = 0; i < n; ++i) k_of[i] = std::max<std::size_t>(1, size[hd_labels[i]] - 1);
  }

  const auto d2 = pairwise_distances(coords2d, DistanceMetric::Euclidean);
  const auto dh = pairwise_distances(vectors_hd, DistanceMetric::Euclidean);

  auto make = [&](MetricId id, double lo, double hi) {
    return QualityReport{0, id, k_mode, std::vector<double>(n, 0.0), lo, hi};
  };
  const double k_frac = k_mode.kind == KMode::Kind::Fixed ? static_cast<double>(k_mode.k) / static_cast<double>(n - 1) : 0.0;
  MetricReports out;
  out[MetricId::TrueNeighbors] = make(MetricId::TrueNeighbors, 0.0, 1.0);
  out[MetricId::FalseNeighbors] = make(MetricId::FalseNeighbors, 0.0, 1.0);
  out[MetricId::MissingNeighbors] = make(MetricId::MissingNeighbors, 0.0, 1.0);
  // In cluster-size mode k varies per point; the widest possible range is reported.
  out[MetricId::Lcmc] = k_mode.kind == KMode::Kind::Fixed ? make(MetricId::Lcmc, -k_frac, 1.0 - k_frac) : make(MetricId::Lcmc, -1.0, 1.0);

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = k_of[i];
    auto nn2 = nearest_by_distance(d2, i, k);
    auto nnh = nearest_by_distance(dh, i, k);
    std::sort(nn2.begin(), nn2.end());
    std::sort(nnh.begin(), nnh.end());
    std::vector<std::size_t> common;
    std::set_intersection(nn2.begin(), nn2.end(), nnh.begin(), nnh.end(), std::back_inserter(common));
    const double kd = static_cast<double>(k);
    const double shared = static_cast<double>(common.size());
    out[MetricId::TrueNeighbors].values[i] = shared / kd;
    out[MetricId::FalseNeighbors].values[i] = (static_cast<double>(nn2.size()) - shared) / kd;
    out[MetricId::MissingNeighbors].values[i] = (static_cast<double>(nnh.size()) - shared) / kd;
    out[MetricId::Lcmc].values[i] = shared / kd - kd / static_cast<double>(n - 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Distance-based metrics

namespace detail {

inline DistanceMatrix max_normalized(DistanceMatrix d) {
  const double m = d.empty() ? 0.0 : *std::max_element(d.data().begin(), d.data().end());
  for (double& v : d.data()) v = m > 0.0 ? v / m : 0.0;
  return d;
}

inline void normalize_unit(std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  s = std::sqrt(s);
  for (double& x : v) x = s > 0.0 ? x / s : 0.0;
}

}  // namespace detail

/// PPS, COMPRESSION, STRETCHING and AGG_ERROR from max-normalized euclidean
/// distances in both spaces. `k` is the neighborhood size used by PPS.
template <typename T>
MetricReports distance_metrics(const Matrix<double>& coords2d, const Matrix<T>& vectors_hd, std::size_t k) {
  const std::size_t n = coords2d.rows();
  if (vectors_hd.rows() != n) throw Error(ErrorCode::CountMismatch, "2D and HD point counts differ");
  if (n < 2) throw Error(ErrorCode::DegenerateInput, "distance metrics need at least 2 points");
  if (k < 1 || k > n - 1) throw Error(ErrorCode::KOutOfRange, "k must lie in [1, n-1]");

  const auto d2 = pairwise_distances(coords2d, DistanceMetric::Euclidean);
  const auto low = detail::max_normalized(d2);
  const auto high = detail::max_normalized(pairwise_distances(vectors_hd, DistanceMetric::Euclidean));

  MetricReports out;
  for (MetricId id : {MetricId::Pps, MetricId::Compression, MetricId::Stretching, MetricId::AggError})
    out[id] = QualityReport{0, id, KMode::fixed(k), std::vector<double>(n, 0.0), 0.0, 1.0};

  const double norm = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    double compression = 0.0, stretching = 0.0, aggregate = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double e = low(i, j) - high(i, j);
      compression += std::max(0.0, -e);
      stretching += std::max(0.0, e);
      aggregate += std::abs(e);
    }
    out[MetricId::Compression].values[i] = compression / norm;
    out[MetricId::Stretching].values[i] = stretching / norm;
    out[MetricId::AggError].values[i] = aggregate / norm;

    const auto nn = nearest_by_distance(d2, i, k);
    std::vector<double> hv, lv;
    for (std::size_t j : nn) {
      hv.push_back(high(i, j));
      lv.push_back(low(i, j));
    }
    detail::normalize_unit(hv);
    detail::normalize_unit(lv);
    double diff = 0.0;
    for (std::size_t t = 0; t < hv.size(); ++t) diff += (hv[t] - lv[t]) * (hv[t] - lv[t]);
    out[MetricId::Pps].values[i] = 1.0 - std::sqrt(diff) / 2.0;
  }
  return out;
}

}  // namespace layerscope
