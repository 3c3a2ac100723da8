#pragma once

// Brute-force reference implementations used only by the tests. None of
// these call into the library's algorithmic code paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "layerscope/clustering.hpp"
#include "layerscope/matrix.hpp"

namespace oracle {

using layerscope::DistanceMatrix;
using layerscope::Linkage;

inline DistanceMatrix euclidean(const std::vector<std::vector<double>>& pts) {
  const std::size_t n = pts.size();
  DistanceMatrix d(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < pts[i].size(); ++t) s += (pts[i][t] - pts[j][t]) * (pts[i][t] - pts[j][t]);
      d(i, j) = std::sqrt(s);
    }
  return d;
}

inline DistanceMatrix random_symmetric(std::size_t n, std::mt19937& rng, bool integer_weights = false) {
  std::uniform_real_distribution<double> u(0.1, 10.0);
  std::uniform_int_distribution<int> ui(1, 6);
  DistanceMatrix d(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d(i, j) = d(j, i) = integer_weights ? ui(rng) : u(rng);
  return d;
}

inline std::vector<std::vector<double>> random_points(std::size_t n, std::size_t dim, std::mt19937& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<std::vector<double>> p(n, std::vector<double>(dim));
  for (auto& v : p)
    for (auto& x : v) x = g(rng);
  return p;
}

// ---------------------------------------------------------------------------
// Spanning trees: enumerate every labeled tree through its Pruefer sequence.

inline double min_spanning_tree_weight(const DistanceMatrix& d) {
  const std::size_t n = d.rows();
  if (n == 2) return d(0, 1);
  std::vector<std::size_t> seq(n - 2, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    std::vector<std::size_t> degree(n, 1);
    for (auto s : seq) ++degree[s];
    std::vector<double> weights;
    for (auto s : seq) {
      std::size_t leaf = 0;
      while (degree[leaf] != 1) ++leaf;
      weights.push_back(d(leaf, s));
      --degree[leaf];
      --degree[s];
    }
    std::size_t u = n, v = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (degree[i] == 1) (u == n ? u : v) = i;
    }
    weights.push_back(d(u, v));
    // Ascending summation makes equal weight multisets give identical sums.
    std::sort(weights.begin(), weights.end());
    double w = 0.0;
    for (double x : weights) w += x;
    best = std::min(best, w);
    std::size_t pos = 0;
    while (pos < seq.size() && ++seq[pos] == n) seq[pos++] = 0;
    if (pos == seq.size()) break;
  }
  return best;
}

inline std::size_t spanning_tree_count(std::size_t n) {
  std::size_t c = 1;
  for (std::size_t i = 0; i + 2 < n; ++i) c *= n;
  return c;
}

// ---------------------------------------------------------------------------
// MST-neighborhood FPR/FNR by exhaustive trace: at each step every
// (member, outsider) pair is examined and the MST edge with the smallest
// (weight, min id, max id) wins.

struct Rates {
  std::vector<double> fpr, fnr;
};

inline Rates fpr_fnr(const std::vector<int>& labels, const std::vector<std::tuple<std::size_t, std::size_t, double>>& mst_edges) {
  const std::size_t n = labels.size();
  std::map<std::pair<std::size_t, std::size_t>, double> edge;
  for (const auto& [u, v, w] : mst_edges) edge[{std::min(u, v), std::max(u, v)}] = w;
  Rates r{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t p = 0; p < n; ++p) {
    std::set<std::size_t> cluster;  // C(p) without p
    for (std::size_t q = 0; q < n; ++q)
      if (q != p && labels[q] == labels[p]) cluster.insert(q);
    std::set<std::size_t> grown;
    std::set<std::size_t> reached{p};
    for (std::size_t step = 0; step < cluster.size(); ++step) {
      std::tuple<double, std::size_t, std::size_t> best{std::numeric_limits<double>::infinity(), n, n};
      std::size_t pick = n;
      for (std::size_t q = 0; q < n; ++q) {
        if (reached.count(q)) continue;
        for (std::size_t u : reached) {
          auto it = edge.find({std::min(u, q), std::max(u, q)});
          if (it == edge.end()) continue;
          std::tuple<double, std::size_t, std::size_t> cand{it->second, std::min(u, q), std::max(u, q)};
          if (cand < best) {
            best = cand;
            pick = q;
          }
        }
      }
      if (pick == n) break;
      reached.insert(pick);
      grown.insert(pick);
    }
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t q = 0; q < n; ++q) {
      if (q == p) continue;
      const bool in_c = cluster.count(q) > 0, in_nn = grown.count(q) > 0;
      if (in_c && in_nn) ++tp;
      else if (!in_c && in_nn) ++fp;
      else if (in_c && !in_nn) ++fn;
      else ++tn;
    }
    r.fpr[p] = fp + tn == 0 ? 0.0 : fp / (fp + tn);
    r.fnr[p] = fn + tp == 0 ? 0.0 : fn / (fn + tp);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Agglomerative clustering from cluster member sets (no Lance-Williams).

struct OracleMerge {
  std::set<std::size_t> a, b;
  double height;
};

inline std::vector<OracleMerge> agglomerate(const DistanceMatrix& d, Linkage linkage) {
  const std::size_t n = d.rows();
  struct Cluster {
    std::set<std::size_t> members;
    std::vector<std::size_t> children;  // indices into history for WPGMA recursion
    int left = -1, right = -1;
  };
  std::vector<Cluster> all;
  for (std::size_t i = 0; i < n; ++i) all.push_back({{i}, {}, -1, -1});
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), std::size_t{0});

  std::function<double(std::size_t, std::size_t)> dist = [&](std::size_t x, std::size_t y) -> double {
    const auto& cx = all[x];
    const auto& cy = all[y];
    switch (linkage) {
      case Linkage::Single: {
        double m = std::numeric_limits<double>::infinity();
        for (auto i : cx.members)
          for (auto j : cy.members) m = std::min(m, d(i, j));
        return m;
      }
      case Linkage::Complete: {
        double m = 0.0;
        for (auto i : cx.members)
          for (auto j : cy.members) m = std::max(m, d(i, j));
        return m;
      }
      case Linkage::Average: {
        double s = 0.0;
        for (auto i : cx.members)
          for (auto j : cy.members) s += d(i, j);
        return s / static_cast<double>(cx.members.size() * cy.members.size());
      }
      case Linkage::Weighted: {
        if (cx.left >= 0) return 0.5 * (dist(static_cast<std::size_t>(cx.left), y) + dist(static_cast<std::size_t>(cx.right), y));
        if (cy.left >= 0) return 0.5 * (dist(x, static_cast<std::size_t>(cy.left)) + dist(x, static_cast<std::size_t>(cy.right)));
        return d(*cx.members.begin(), *cy.members.begin());
      }
    }
    return 0.0;
  };

  std::vector<OracleMerge> out;
  while (active.size() > 1) {
    std::tuple<double, std::size_t, std::size_t> best{std::numeric_limits<double>::infinity(), 0, 0};
    std::size_t bi = 0, bj = 0;
    for (std::size_t x = 0; x < active.size(); ++x)
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        const auto& cx = all[active[x]];
        const auto& cy = all[active[y]];
        std::size_t mx = *cx.members.begin(), my = *cy.members.begin();
        std::tuple<double, std::size_t, std::size_t> cand{dist(active[x], active[y]), std::min(mx, my), std::max(mx, my)};
        if (cand < best) {
          best = cand;
          bi = x;
          bj = y;
        }
      }
    Cluster merged;
    const auto& a = all[active[bi]];
    const auto& b = all[active[bj]];
    merged.members = a.members;
    merged.members.insert(b.members.begin(), b.members.end());
    merged.left = static_cast<int>(active[bi]);
    merged.right = static_cast<int>(active[bj]);
    out.push_back({a.members, b.members, std::get<0>(best)});
    all.push_back(merged);
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    active[bi] = all.size() - 1;
  }
  return out;
}

/// Labels after undoing the top k-1 merges, numbered by first appearance.
inline std::vector<int> labels_after(const std::vector<OracleMerge>& merges, std::size_t n, std::size_t k) {
  std::vector<std::set<std::size_t>> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters.push_back({i});
  for (std::size_t m = 0; m < n - k; ++m) {
    std::set<std::size_t> joined;
    std::vector<std::set<std::size_t>> next;
    for (auto& c : clusters) {
      if (*c.begin() == *merges[m].a.begin() || *c.begin() == *merges[m].b.begin() ||
          c.count(*merges[m].a.begin()) || c.count(*merges[m].b.begin()))
        joined.insert(c.begin(), c.end());
      else
        next.push_back(c);
    }
    next.push_back(joined);
    clusters = next;
  }
  std::vector<int> owner(n);
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (auto i : clusters[c]) owner[i] = static_cast<int>(c);
  std::map<int, int> renumber;
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = renumber.find(owner[i]);
    if (it == renumber.end()) it = renumber.emplace(owner[i], static_cast<int>(renumber.size())).first;
    labels[i] = it->second;
  }
  return labels;
}

inline double silhouette(const DistanceMatrix& d, const std::vector<int>& labels) {
  const std::size_t n = labels.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::map<int, std::pair<double, std::size_t>> acc;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      auto& [s, c] = acc[labels[j]];
      s += d(i, j);
      ++c;
    }
    if (!acc.count(labels[i])) continue;  // singleton -> 0
    const double a = acc[labels[i]].first / static_cast<double>(acc[labels[i]].second);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [l, sc] : acc)
      if (l != labels[i]) b = std::min(b, sc.first / static_cast<double>(sc.second));
    if (!std::isfinite(b)) continue;
    const double m = std::max(a, b);
    total += m > 0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// PCA through the explicitly formed covariance matrix.

struct PcaOracle {
  Eigen::MatrixXd components;  // d x 2
  Eigen::Vector2d variance;
  Eigen::RowVectorXd mean;
};

inline PcaOracle pca(const Eigen::MatrixXd& x) {
  PcaOracle out;
  out.mean = x.colwise().mean();
  const Eigen::MatrixXd c = x.rowwise() - out.mean;
  const Eigen::MatrixXd cov = (c.transpose() * c) / static_cast<double>(x.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const auto d = x.cols();
  out.components.resize(d, 2);
  out.components.col(0) = es.eigenvectors().col(d - 1);
  out.components.col(1) = es.eigenvectors().col(d - 2);
  out.variance << es.eigenvalues()(d - 1), es.eigenvalues()(d - 2);
  return out;
}

// ---------------------------------------------------------------------------

inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1;
    ra[a[i]] += 1;
    rb[b[i]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double index = 0, sa = 0, sb = 0;
  for (const auto& [k, v] : table) index += c2(v);
  for (const auto& [k, v] : ra) sa += c2(v);
  for (const auto& [k, v] : rb) sb += c2(v);
  const double expected = sa * sb / c2(static_cast<double>(a.size()));
  const double max_index = (sa + sb) / 2;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace oracle
