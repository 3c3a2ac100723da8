#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "layerscope/corpus.hpp"
#include "layerscope/matrix.hpp"

namespace layerscope {

struct ProjectionConfig {
  enum class Method { Pca, External };
  Method method = Method::Pca;
  std::string name;                                   // EXTERNAL only
  nlohmann::json params = nlohmann::json::object();   // recorded verbatim

  static ProjectionConfig pca() { return {}; }
  static ProjectionConfig external(std::string name, nlohmann::json params = nlohmann::json::object()) {
    return {Method::External, std::move(name), std::move(params)};
  }

  std::string label() const { return method == Method::Pca ? "pca" : "external:" + name; }
};

struct PcaResult {
  Matrix<double> coords;                 // n x 2
  Matrix<double> components;             // 2 x d, orthonormal rows
  std::array<double, 2> explained_variance{};
};

struct LayerProjection {
  std::size_t layer = 0;
  Matrix<double> coords;  // n x 2
  ProjectionConfig method;
  std::optional<std::array<double, 2>> explained_variance;
};

/// Two-component PCA via thin SVD of the centered data. Explained variance
/// uses the sample covariance (divisor n - 1). Each axis is signed so its
/// largest-magnitude loading is positive.
inline PcaResult pca_project(const Matrix<double>& vectors) {
  const std::size_t n = vectors.rows();
  const std::size_t d = vectors.cols();
  if (n < 2) throw Error(ErrorCode::DegenerateInput, "PCA needs at least 2 points");
  if (d < 2) throw Error(ErrorCode::DegenerateInput, "PCA needs at least 2 dimensions");
  require_finite(vectors, "PCA input");

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> x(vectors.data().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const Eigen::MatrixXd& v = svd.matrixV();

  PcaResult out{Matrix<double>(n, 2), Matrix<double>(2, d), {}};
  for (Eigen::Index axis = 0; axis < 2; ++axis) {
    Eigen::VectorXd basis = axis < v.cols() ? Eigen::VectorXd(v.col(axis)) : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < basis.size(); ++i) {
      if (std::abs(basis(i)) > std::abs(basis(arg))) arg = i;
    }
    if (basis(arg) < 0) basis = -basis;
    const double s = axis < sv.size() ? sv(axis) : 0.0;
    out.explained_variance[static_cast<std::size_t>(axis)] = s * s / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < d; ++j) out.components(static_cast<std::size_t>(axis), j) = basis(static_cast<Eigen::Index>(j));
    const Eigen::VectorXd projected = centered * basis;
    for (std::size_t i = 0; i < n; ++i) out.coords(i, static_cast<std::size_t>(axis)) = projected(static_cast<Eigen::Index>(i));
  }
  return out;
}

struct LayerRange {
  std::size_t first = 0;
  std::size_t last = 0;  // inclusive
};

/// One projection per layer (or per layer in `range`), restricted to `selection`.
/// PCA is fit independently per layer on the selected subset; external
/// coordinates are passed through unchanged.
inline std::vector<LayerProjection> project_layers(const Dataset& ds, const ProjectionConfig& config,
                                                   std::span<const PointId> selection,
                                                   std::optional<LayerRange> range = std::nullopt) {
  if (selection.empty()) throw Error(ErrorCode::EmptySelection, "projection needs a non-empty selection");
  for (PointId id : selection) {
    if (id >= ds.n_points()) throw Error(ErrorCode::OutOfRange, "selected id " + std::to_string(id) + " out of range");
  }
  const ExternalProjection* external = nullptr;
  if (config.method == ProjectionConfig::Method::External) {
    auto it = ds.external_projections.find(config.name);
    if (it == ds.external_projections.end())
      throw Error(ErrorCode::UnknownProjection, "dataset '" + ds.name + "' has no projection '" + config.name + "'");
    external = &it->second;
  }
  const LayerRange r = range.value_or(LayerRange{0, ds.n_layers() - 1});
  if (r.first > r.last || r.last >= ds.n_layers()) throw Error(ErrorCode::OutOfRange, "layer range out of bounds");

  std::vector<LayerProjection> out;
  for (std::size_t layer = r.first; layer <= r.last; ++layer) {
    LayerProjection lp;
    lp.layer = layer;
    lp.method = config;
    if (external) {
      std::vector<std::size_t> rows(selection.begin(), selection.end());
      lp.coords = external->layers[layer].select_rows(rows);
    } else {
      auto pca = pca_project(ds.embeddings.layer_matrix(layer, selection));
      lp.coords = std::move(pca.coords);
      lp.explained_variance = pca.explained_variance;
    }
    out.push_back(std::move(lp));
  }
  return out;
}

}  // namespace layerscope
