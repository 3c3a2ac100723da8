#pragma once

#include <random>
#include <string>
#include <vector>

#include "layerscope/corpus.hpp"

namespace layerscope {

struct SyntheticSpec {
  std::size_t per_cluster = 50;
  std::size_t n_layers = 4;
  std::size_t merge_layer = 2;  // clusters 1 and 2 share a centroid from this layer on
  std::uint32_t dim = 16;
  double separation = 10.0;
  double noise = 0.3;
  std::uint32_t seed = 7;
  std::string name = "synthetic";
};

/// Ground truth planted into a synthetic dataset.
struct SyntheticTruth {
  std::vector<int> cluster;  // planted cluster 0..2 per point
  /// Planted cluster of each point at a layer (clusters 1 and 2 merge).
  int cluster_at(std::size_t point, std::size_t layer, const SyntheticSpec& spec) const {
    const int c = cluster[point];
    return layer >= spec.merge_layer && c == 2 ? 1 : c;
  }
};

/// Three planted clusters along orthogonal directions. Cluster 0 is NOUN,
/// clusters 1 and 2 are VERB; each cluster has its own SENSE. From
/// `merge_layer` on, clusters 1 and 2 share a centroid. An external
/// projection "aligned_umap" places each cluster's 2D centroid on a circle.
inline Dataset make_synthetic_dataset(const SyntheticSpec& spec, SyntheticTruth* truth = nullptr) {
  static const char* kPos[3] = {"NOUN", "VERB", "VERB"};
  static const char* kSense[3] = {"cell%prison", "cell%biology", "cell%phone"};
  static const std::vector<std::vector<std::string>> kBefore = {{"the", "prison"}, {"they", "will"}, {"you", "should"}};
  static const std::vector<std::vector<std::string>> kAfter = {{"block", "was"}, {"rapidly", "today"}, {"me", "later"}};

  std::mt19937 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, spec.noise);
  const std::size_t n = 3 * spec.per_cluster;

  Dataset ds;
  ds.name = spec.name;
  SyntheticTruth t;
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 3);
    t.cluster.push_back(c);
    TokenOccurrence o;
    o.id = i;
    o.token = "cell";
    o.sentence_id = static_cast<std::int64_t>(i);
    o.context_before = kBefore[static_cast<std::size_t>(c)];
    o.context_after = kAfter[static_cast<std::size_t>(c)];
    o.token_index = o.context_before.size();
    o.sentence = o.context_before[0] + " " + o.context_before[1] + " cell " + o.context_after[0] + " " + o.context_after[1];
    o.annotations[FeatureKind::Pos] = kPos[c];
    o.annotations[FeatureKind::Sense] = kSense[c];
    ds.occurrences.push_back(std::move(o));
  }

  auto& e = ds.embeddings;
  e.n_layers = static_cast<std::uint32_t>(spec.n_layers);
  e.n_points = static_cast<std::uint32_t>(n);
  e.dim = spec.dim;
  e.values.resize(spec.n_layers * n * spec.dim);
  ExternalProjection umap;
  umap.method = "aligned_umap";
  umap.params = {{"n_neighbors", 15}, {"min_dist", 0.1}};
  for (std::size_t l = 0; l < spec.n_layers; ++l) {
    Matrix<double> coords(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = t.cluster_at(i, l, spec);
      // Rotating the axes per layer keeps the layers from being identical.
      const std::size_t axis = (static_cast<std::size_t>(c) + l) % spec.dim;
      for (std::size_t d = 0; d < spec.dim; ++d) {
        const double center = d == axis ? spec.separation : 0.0;
        e.values[(l * n + i) * spec.dim + d] = static_cast<float>(center + gauss(rng));
      }
      const double angle = 2.0 * 3.14159265358979323846 * c / 3.0;
      coords(i, 0) = 5.0 * std::cos(angle) + gauss(rng);
      coords(i, 1) = 5.0 * std::sin(angle) + gauss(rng);
    }
    umap.layers.push_back(std::move(coords));
  }
  ds.external_projections.emplace(umap.method, std::move(umap));
  if (truth) *truth = std::move(t);
  return ds;
}

}  // namespace layerscope
