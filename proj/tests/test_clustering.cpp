#include <gtest/gtest.h>

#include <random>
#include <set>

#include "layerscope/clustering.hpp"
#include "oracles.hpp"

using namespace layerscope;

namespace {

Matrix<double> points(const std::vector<std::vector<double>>& rows) {
  Matrix<double> m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

DistanceMatrix line(const std::vector<double>& xs) {
  std::vector<std::vector<double>> rows;
  for (double x : xs) rows.push_back({x});
  return oracle::euclidean(rows);
}

std::set<std::size_t> leaves_of(const Dendrogram& dg, std::size_t node) {
  if (node < dg.n_leaves) return {node};
  const auto& m = dg.merges[node - dg.n_leaves];
  auto a = leaves_of(dg, m.left);
  auto b = leaves_of(dg, m.right);
  a.insert(b.begin(), b.end());
  return a;
}

/// Same partition up to renaming.
bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (ab.emplace(a[i], b[i]).first->second != b[i]) return false;
    if (ba.emplace(b[i], a[i]).first->second != a[i]) return false;
  }
  return a.size() == b.size();
}

}  // namespace

TEST(Distances, Cosine) {
  const auto m = points({{1, 0}, {1, 0}, {0, 1}, {-1, 0}, {0, 0}, {3, 0}});
  const auto d = pairwise_distances(m, DistanceMetric::Cosine);
  EXPECT_EQ(d(0, 1), 0.0);
  EXPECT_EQ(d(0, 2), 1.0);
  EXPECT_EQ(d(0, 3), 2.0);
  EXPECT_EQ(d(0, 4), 1.0);  // zero vector
  EXPECT_EQ(d(4, 4), 0.0);
  EXPECT_NEAR(d(0, 5), 0.0, 1e-15);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      EXPECT_EQ(d(i, j), d(j, i));
      EXPECT_GE(d(i, j), 0.0);
      EXPECT_LE(d(i, j), 2.0);
    }
}

TEST(Distances, EuclideanAndNonfinite) {
  const auto d = pairwise_distances(points({{0, 0}, {3, 4}}), DistanceMetric::Euclidean);
  EXPECT_EQ(d(0, 1), 5.0);
  auto bad = points({{0, 0}, {1, 1}});
  bad(1, 0) = std::numeric_limits<double>::infinity();
  try {
    pairwise_distances(bad, DistanceMetric::Euclidean);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonfiniteValue);
  }
}

TEST(Dendrogram, FirstMergeIsNearestPair) {
  const auto d = line({0, 1, 10});
  for (Linkage l : kAllLinkages) {
    const auto dg = build_dendrogram(d, l);
    ASSERT_EQ(dg.merges.size(), 2u);
    EXPECT_EQ(dg.merges[0].left, 0u);
    EXPECT_EQ(dg.merges[0].right, 1u);
    EXPECT_EQ(dg.merges[0].height, 1.0);
    // node 3 = {0,1} holds the smaller leaf, so it is on the left
    EXPECT_EQ(dg.merges[1].left, 3u);
    EXPECT_EQ(dg.merges[1].right, 2u);
  }
}

TEST(Dendrogram, TwoPairs) {
  // pairs {0,1} and {2,3}: 0 1 ... 10 12
  const auto d = line({0, 1, 10, 12});
  const auto single = build_dendrogram(d, Linkage::Single);
  const auto complete = build_dendrogram(d, Linkage::Complete);
  EXPECT_EQ(single.merges.back().height, 9.0);
  EXPECT_EQ(complete.merges.back().height, 12.0);
  EXPECT_EQ(leaves_of(single, 6), (std::set<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(leaves_of(single, single.merges.back().left), (std::set<std::size_t>{0, 1}));
  EXPECT_EQ(leaves_of(single, single.merges.back().right), (std::set<std::size_t>{2, 3}));
  EXPECT_EQ(build_dendrogram(d, Linkage::Average).merges.back().height, (10 + 12 + 9 + 11) / 4.0);
}

TEST(Dendrogram, TwoPoints) {
  const auto d = line({2, 5});
  const auto dg = build_dendrogram(d, Linkage::Average);
  ASSERT_EQ(dg.merges.size(), 1u);
  EXPECT_EQ(dg.merges[0].height, 3.0);
  EXPECT_EQ(dg.merges[0].size, 2u);
}

// Every merge of the Lance-Williams implementation against agglomeration
// recomputed from member sets.
TEST(Property, DendrogramMatchesBruteForce) {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 14;
    const bool integer = trial % 3 == 0;
    const auto d = oracle::random_symmetric(n, rng, integer);
    for (Linkage l : kAllLinkages) {
      // Integer weights create exact ties; averaged heights are only
      // guaranteed bit-identical for the min/max rules.
      if (integer && (l == Linkage::Average || l == Linkage::Weighted)) continue;
      const auto dg = build_dendrogram(d, l);
      const auto ref = oracle::agglomerate(d, l);
      ASSERT_EQ(dg.merges.size(), ref.size());
      for (std::size_t m = 0; m < ref.size(); ++m) {
        EXPECT_NEAR(dg.merges[m].height, ref[m].height, 1e-9) << to_string(l) << " n=" << n << " merge " << m;
        const auto a = leaves_of(dg, dg.merges[m].left);
        const auto b = leaves_of(dg, dg.merges[m].right);
        EXPECT_TRUE((a == ref[m].a && b == ref[m].b) || (a == ref[m].b && b == ref[m].a)) << to_string(l) << " merge " << m;
        EXPECT_LT(*a.begin(), *b.begin());
        EXPECT_EQ(dg.merges[m].size, a.size() + b.size());
        if (l != Linkage::Single && m > 0) {
          EXPECT_GE(dg.merges[m].height, dg.merges[m - 1].height - 1e-12);
        }
      }
    }
  }
}

TEST(Dendrogram, EveryNodeMergedOnce) {
  std::mt19937 rng(2);
  const auto d = oracle::random_symmetric(20, rng);
  for (Linkage l : kAllLinkages) {
    const auto dg = build_dendrogram(d, l);
    std::vector<int> used(2 * 20 - 1, 0);
    for (std::size_t m = 0; m < dg.merges.size(); ++m) {
      EXPECT_LT(dg.merges[m].left, 20 + m);
      EXPECT_LT(dg.merges[m].right, 20 + m);
      ++used[dg.merges[m].left];
      ++used[dg.merges[m].right];
    }
    for (std::size_t i = 0; i + 1 < used.size(); ++i) EXPECT_EQ(used[i], 1);
    EXPECT_EQ(used.back(), 0);
  }
}

// ---------------------------------------------------------------------------
// Cuts

TEST(Cut, CandidateWindow) {
  EXPECT_EQ(candidate_cluster_counts(3), (std::pair<std::size_t, std::size_t>{2, 2}));
  EXPECT_EQ(candidate_cluster_counts(11), (std::pair<std::size_t, std::size_t>{2, 2}));
  EXPECT_EQ(candidate_cluster_counts(12), (std::pair<std::size_t, std::size_t>{2, 3}));
  EXPECT_EQ(candidate_cluster_counts(40), (std::pair<std::size_t, std::size_t>{2, 5}));
  EXPECT_EQ(candidate_cluster_counts(150), (std::pair<std::size_t, std::size_t>{2, 16}));
}

TEST(Cut, LabelsDenseByFirstAppearance) {
  const auto dg = build_dendrogram(line({10, 0, 1, 11, 50}), Linkage::Single);
  EXPECT_EQ(cut_labels(dg, 1), (std::vector<int>{0, 0, 0, 0, 0}));
  EXPECT_EQ(cut_labels(dg, 3), (std::vector<int>{0, 1, 1, 0, 2}));
  EXPECT_EQ(cut_labels(dg, 5), (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_THROW(cut_labels(dg, 0), Error);
  EXPECT_THROW(cut_labels(dg, 6), Error);
}

TEST(Cut, TwoBlobs) {
  std::mt19937 rng(8);
  std::normal_distribution<double> g(0, 0.05);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({(i < 5 ? 0.0 : 10.0) + g(rng), g(rng)});
  const auto d = oracle::euclidean(rows);
  for (Linkage l : kAllLinkages) {
    const auto cut = select_cut(build_dendrogram(d, l), d);
    EXPECT_EQ(cut.k_clusters, 2u);
    EXPECT_EQ(cut.labels, (std::vector<int>{0, 0, 0, 0, 0, 1, 1, 1, 1, 1}));
  }
}

TEST(Cut, ThreeCollinear) {
  const auto d = line({0, 1, 10});
  const auto cut = select_cut(build_dendrogram(d, Linkage::Single), d);
  EXPECT_EQ(cut.k_clusters, 2u);
  EXPECT_EQ(cut.labels, (std::vector<int>{0, 0, 1}));
  // by hand: s(0) = 1 - 1/10, s(1) = 1 - 1/9, s(2) = 0 (singleton)
  EXPECT_NEAR(cut.silhouette, ((1 - 0.1) + (1 - 1.0 / 9.0) + 0.0) / 3.0, 1e-15);
}

TEST(Cut, ThreeTriplets) {
  // Tight triplets at the corners of an equilateral triangle; n = 9 gives a
  // window of k in {2}, n = 12 (four triplets) reaches k = 3.
  auto triplets = [](int count) {
    std::vector<std::vector<double>> rows;
    const double r[4][2] = {{0, 0}, {10, 0}, {5, 8.660254037844386}, {5, 2.886751345948129}};
    for (int c = 0; c < count; ++c)
      for (int i = 0; i < 3; ++i) rows.push_back({r[c][0] + 0.01 * i, r[c][1] + 0.013 * (i % 2)});
    return oracle::euclidean(rows);
  };
  for (int count : {3, 4}) {
    const auto d = triplets(count);
    const std::size_t n = d.rows();
    for (Linkage l : kAllLinkages) {
      const auto dg = build_dendrogram(d, l);
      const auto cut = select_cut(dg, d);
      const auto ref = oracle::agglomerate(d, l);
      auto [lo, hi] = candidate_cluster_counts(n);
      double best = -2.0;
      std::size_t best_k = 0;
      for (std::size_t k = 1; k < n; ++k) {
        const double s = oracle::silhouette(d, oracle::labels_after(ref, n, k));
        if (k >= lo && k <= hi && s > best + 1e-12) {
          best = s;
          best_k = k;
        }
      }
      EXPECT_NEAR(cut.silhouette, best, 1e-9);
      EXPECT_EQ(cut.k_clusters, best_k);
      EXPECT_EQ(cut.k_clusters, count == 3 ? 2u : 3u);
    }
  }
}

TEST(Cut, TooFewPoints) {
  const auto d = line({0, 1});
  try {
    select_cut(build_dendrogram(d, Linkage::Single), d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewPoints);
  }
  EXPECT_THROW(cluster_layer(d), Error);
}

TEST(Silhouette, SingletonsScoreZero) {
  const auto d = line({0, 1, 5});
  const std::vector<int> labels = {0, 1, 2};
  for (double s : silhouette_samples(d, labels)) EXPECT_EQ(s, 0.0);
  const std::vector<int> one = {0, 0, 0};
  EXPECT_EQ(silhouette_score(d, one), 0.0);
}

// select_cut's silhouette equals the exhaustive maximum over its window,
// recomputed independently, and lies in [-1, 1].
TEST(Property, SelectCutIsWindowMaximum) {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t n = 3 + rng() % 38;
    const auto pts = oracle::random_points(n, 1 + rng() % 4, rng);
    const auto d = oracle::euclidean(pts);
    const Linkage l = kAllLinkages[static_cast<std::size_t>(trial) % 4];
    const auto cut = select_cut(build_dendrogram(d, l), d);
    const auto ref = oracle::agglomerate(d, l);
    const auto [lo, hi] = candidate_cluster_counts(n);
    double best = -2.0;
    for (std::size_t k = lo; k <= hi; ++k) best = std::max(best, oracle::silhouette(d, oracle::labels_after(ref, n, k)));
    EXPECT_NEAR(cut.silhouette, best, 1e-9) << "n=" << n;
    EXPECT_NEAR(silhouette_score(d, cut.labels), cut.silhouette, 1e-12);
    EXPECT_GE(cut.silhouette, -1.0);
    EXPECT_LE(cut.silhouette, 1.0);
    EXPECT_GE(cut.k_clusters, lo);
    EXPECT_LE(cut.k_clusters, hi);
    EXPECT_EQ(*std::max_element(cut.labels.begin(), cut.labels.end()) + 1, static_cast<int>(cut.k_clusters));
  }
}

TEST(Property, SilhouettePermutationInvariant) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng() % 20;
    const auto d = oracle::euclidean(oracle::random_points(n, 2, rng));
    std::vector<int> labels(n);
    const int k = 1 + static_cast<int>(rng() % 4);
    for (auto& l : labels) l = static_cast<int>(rng() % static_cast<unsigned>(k));
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> relabeled(n);
    for (std::size_t i = 0; i < n; ++i) relabeled[i] = perm[static_cast<std::size_t>(labels[i])] + 10;
    EXPECT_EQ(silhouette_score(d, labels), silhouette_score(d, relabeled));
    EXPECT_NEAR(silhouette_score(d, labels), oracle::silhouette(d, labels), 1e-12);
  }
}

TEST(Property, DuplicatesShareLabel) {
  std::mt19937 rng(6);
  for (int trial = 0; trial < 60; ++trial) {
    auto pts = oracle::random_points(3 + rng() % 15, 3, rng);
    const std::size_t src = rng() % pts.size();
    pts.push_back(pts[src]);
    const auto a = cluster_layer(oracle::euclidean(pts));
    EXPECT_EQ(a.labels[src], a.labels.back());
  }
}

// ---------------------------------------------------------------------------
// Linkage selection

TEST(ClusterLayer, BestOfFourLinkages) {
  std::mt19937 rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 3 + rng() % 25;
    const auto d = oracle::euclidean(oracle::random_points(n, 2, rng));
    const auto a = cluster_layer(d);
    double best = -2.0;
    Linkage best_l = Linkage::Single;
    for (Linkage l : kAllLinkages) {
      const double s = select_cut(build_dendrogram(d, l), d).silhouette;
      if (s > best) {
        best = s;
        best_l = l;
      }
    }
    EXPECT_EQ(a.silhouette, best);
    EXPECT_EQ(a.linkage, best_l);
    EXPECT_EQ(a.labels, select_cut(build_dendrogram(d, best_l), d).labels);
  }
}

TEST(ClusterLayer, ChainingPrefersCompactLinkage) {
  // Two blobs joined by a sparse bridge: single linkage chains through the
  // bridge, the other rules split the blobs.
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 8; ++i) rows.push_back({0.3 * (i % 3), 0.3 * (i / 3)});
  for (int i = 0; i < 8; ++i) rows.push_back({8 + 0.3 * (i % 3), 0.3 * (i / 3)});
  for (int i = 1; i <= 6; ++i) rows.push_back({0.6 + 1.0 * i, 0.0});
  const auto d = oracle::euclidean(rows);
  const auto a = cluster_layer(d);
  const double single = select_cut(build_dendrogram(d, Linkage::Single), d).silhouette;
  EXPECT_GT(a.silhouette, single);
  EXPECT_NE(a.linkage, Linkage::Single);
}

TEST(ClusterLayer, SymmetricBlobsAllAgree) {
  std::vector<std::vector<double>> rows = {{0, 0}, {0, 1}, {1, 0}, {10, 10}, {10, 11}, {11, 10}};
  const auto d = oracle::euclidean(rows);
  std::vector<int> first;
  for (Linkage l : kAllLinkages) {
    const auto cut = select_cut(build_dendrogram(d, l), d);
    if (first.empty()) first = cut.labels;
    EXPECT_EQ(cut.labels, first);
  }
  const auto a = cluster_layer(d);
  EXPECT_EQ(a.linkage, Linkage::Single);  // ties resolve to the first linkage
  EXPECT_EQ(a.labels, first);
  EXPECT_EQ(a.k_clusters, 2u);
}

TEST(ClusterLayer, ThreePointsExhaustive) {
  const auto d = line({0, 4, 5});
  const auto a = cluster_layer(d);
  EXPECT_EQ(a.k_clusters, 2u);
  EXPECT_TRUE(same_partition(a.labels, {0, 1, 1}));
  EXPECT_NEAR(a.silhouette, oracle::silhouette(d, {0, 1, 1}), 1e-15);
  const auto members = a.members();
  ASSERT_EQ(members.size(), 2u);
  EXPECT_EQ(members[0], (std::vector<std::size_t>{0}));
}

TEST(ClusterLayer, FromVectors) {
  const auto m = points({{1, 0}, {0.9, 0.1}, {0, 1}, {0.1, 0.9}});
  const auto a = cluster_layer(m, DistanceMetric::Cosine);
  EXPECT_EQ(a.labels, (std::vector<int>{0, 0, 1, 1}));
  EXPECT_EQ(single_cluster(4).labels, (std::vector<int>{0, 0, 0, 0}));
}
