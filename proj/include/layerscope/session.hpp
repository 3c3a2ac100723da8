#pragma once

#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "layerscope/clustering.hpp"
#include "layerscope/corpus.hpp"
#include "layerscope/filter.hpp"
#include "layerscope/flow_layout.hpp"
#include "layerscope/metrics.hpp"
#include "layerscope/projection.hpp"
#include "layerscope/seriation.hpp"
#include "layerscope/summaries.hpp"

namespace layerscope {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::size_t kDefaultMaxPoints = 500;
inline constexpr std::size_t kDefaultK = 5;

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

struct LayoutConfig {
  double width = 200.0;
  double height = 200.0;
  double gap = 50.0;
  std::optional<double> padding;  // default: 2% of height

  double resolved_padding() const { return padding.value_or(0.02 * height); }
};

using ColorBy = std::variant<std::monostate, FeatureKind, MetricId>;

struct SessionConfig {
  std::string dataset;
  std::string filter;
  std::vector<ProjectionConfig> projections{ProjectionConfig::pca()};
  std::optional<LayerRange> layers;
  DistanceMetric metric_2d = DistanceMetric::Cosine;
  DistanceMetric metric_hd = DistanceMetric::Cosine;
  KMode::Kind k_mode = KMode::Kind::Fixed;
  std::optional<std::size_t> k;  // default: min(5, n - 1)
  LayoutConfig layout;
  ColorBy color_by;
  std::optional<FeatureKind> summary_feature;  // default: POS if annotated, else NGRAM
  std::optional<FeatureKind> bundle_property;  // default: POS if annotated, else none
};

namespace detail {

[[noreturn]] inline void bad_config(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

inline DistanceMetric parse_distance_metric(const std::string& s) {
  if (s == "cosine") return DistanceMetric::Cosine;
  if (s == "euclidean") return DistanceMetric::Euclidean;
  bad_config("unknown distance metric '" + s + "'");
}

inline FeatureKind parse_feature_or_throw(const std::string& s) {
  auto f = parse_feature(s);
  if (!f) bad_config("unknown feature kind '" + s + "'");
  return *f;
}

inline std::string color_by_name(const ColorBy& c) {
  if (auto f = std::get_if<FeatureKind>(&c)) return std::string(to_string(*f));
  if (auto m = std::get_if<MetricId>(&c)) return std::string(to_string(*m));
  return "none";
}

}  // namespace detail

inline ProjectionConfig parse_projection(const std::string& spec) {
  if (spec == "pca") return ProjectionConfig::pca();
  if (spec.rfind("external:", 0) == 0 && spec.size() > 9) return ProjectionConfig::external(spec.substr(9));
  detail::bad_config("projection must be 'pca' or 'external:NAME', got '" + spec + "'");
}

inline json to_json(const ProjectionConfig& p) {
  if (p.method == ProjectionConfig::Method::Pca) return {{"method", "pca"}};
  return {{"method", "external"}, {"name", p.name}, {"params", p.params}};
}

inline ProjectionConfig projection_config_from_json(const json& j) {
  if (j.is_string()) return parse_projection(j.get<std::string>());
  const auto method = j.at("method").get<std::string>();
  if (method == "pca") return ProjectionConfig::pca();
  if (method == "external") return ProjectionConfig::external(j.at("name").get<std::string>(), j.value("params", json::object()));
  detail::bad_config("unknown projection method '" + method + "'");
}

/// Canonical JSON form. Objects serialize with sorted keys, so equal configs
/// produce identical text.
inline json to_json(const SessionConfig& c) {
  json projections = json::array();
  for (const auto& p : c.projections) projections.push_back(to_json(p));
  json layout = {{"width", c.layout.width}, {"height", c.layout.height}, {"gap", c.layout.gap}, {"padding", c.layout.resolved_padding()}};
  return {{"dataset", c.dataset},
          {"filter", c.filter},
          {"projections", projections},
          {"layers", c.layers ? json::array({c.layers->first, c.layers->last}) : json(nullptr)},
          {"clustering", {{"metric_2d", to_string(c.metric_2d)}, {"metric_hd", to_string(c.metric_hd)}}},
          {"metrics", {{"k_mode", c.k_mode == KMode::Kind::Fixed ? "fixed" : "cluster"}, {"k", c.k ? json(*c.k) : json(nullptr)}}},
          {"layout", layout},
          {"color_by", detail::color_by_name(c.color_by)},
          {"summary_feature", c.summary_feature ? json(to_string(*c.summary_feature)) : json(nullptr)},
          {"bundle_property", c.bundle_property ? json(to_string(*c.bundle_property)) : json(nullptr)}};
}

inline SessionConfig session_config_from_json(const json& j) {
  if (!j.is_object()) detail::bad_config("session config must be a JSON object");
  SessionConfig c;
  try {
    c.dataset = j.at("dataset").get<std::string>();
    c.filter = j.value("filter", std::string{});
    if (j.contains("projections")) {
      c.projections.clear();
      for (const auto& p : j.at("projections")) c.projections.push_back(projection_config_from_json(p));
    }
    if (j.contains("layers") && !j.at("layers").is_null()) {
      const auto& l = j.at("layers");
      if (!l.is_array() || l.size() != 2) detail::bad_config("layers must be [first, last]");
      c.layers = LayerRange{l.at(0).get<std::size_t>(), l.at(1).get<std::size_t>()};
      if (c.layers->first > c.layers->last) detail::bad_config("layers must satisfy first <= last");
    }
    if (j.contains("clustering")) {
      const auto& cl = j.at("clustering");
      c.metric_2d = detail::parse_distance_metric(cl.value("metric_2d", std::string("cosine")));
      c.metric_hd = detail::parse_distance_metric(cl.value("metric_hd", std::string("cosine")));
    }
    if (j.contains("metrics")) {
      const auto& m = j.at("metrics");
      const auto mode = m.value("k_mode", std::string("fixed"));
      if (mode == "fixed") c.k_mode = KMode::Kind::Fixed;
      else if (mode == "cluster") c.k_mode = KMode::Kind::ClusterSize;
      else detail::bad_config("k_mode must be 'fixed' or 'cluster'");
      if (m.contains("k") && !m.at("k").is_null()) {
        const auto k = m.at("k").get<std::int64_t>();
        if (k < 1) throw Error(ErrorCode::KOutOfRange, "k must be >= 1");
        c.k = static_cast<std::size_t>(k);
      }
    }
    if (j.contains("layout")) {
      const auto& l = j.at("layout");
      c.layout.width = l.value("width", c.layout.width);
      c.layout.height = l.value("height", c.layout.height);
      c.layout.gap = l.value("gap", c.layout.gap);
      if (l.contains("padding") && !l.at("padding").is_null()) c.layout.padding = l.at("padding").get<double>();
    }
    if (j.contains("color_by") && !j.at("color_by").is_null()) {
      const auto name = j.at("color_by").get<std::string>();
      if (name == "none") c.color_by = std::monostate{};
      else if (auto m = parse_metric(name)) c.color_by = *m;
      else if (auto f = parse_feature(name)) c.color_by = *f;
      else detail::bad_config("color_by must name a feature kind or metric, got '" + name + "'");
    }
    if (j.contains("summary_feature") && !j.at("summary_feature").is_null())
      c.summary_feature = detail::parse_feature_or_throw(j.at("summary_feature").get<std::string>());
    if (j.contains("bundle_property") && !j.at("bundle_property").is_null())
      c.bundle_property = detail::parse_feature_or_throw(j.at("bundle_property").get<std::string>());
  } catch (const json::exception& e) {
    detail::bad_config(std::string("session config: ") + e.what());
  }
  if (c.projections.empty() || c.projections.size() > 2) detail::bad_config("one or two projections are required");
  if (!(c.layout.width > 0.0) || !(c.layout.height > 0.0) || c.layout.gap < 0.0 || c.layout.resolved_padding() < 0.0)
    detail::bad_config("layout dimensions must be positive and gap/padding non-negative");
  if (std::holds_alternative<FeatureKind>(c.color_by) && std::get<FeatureKind>(c.color_by) == FeatureKind::Ngram)
    detail::bad_config("NGRAM is multi-valued and cannot be used for coloring");
  if (c.bundle_property == FeatureKind::Ngram) detail::bad_config("NGRAM is multi-valued and cannot be used for bundling");
  return c;
}

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string config_hash(const SessionConfig& c) { return fnv1a_hex(to_json(c).dump()); }

// ---------------------------------------------------------------------------
// Artifacts

struct HdLayer {
  std::size_t layer = 0;
  Matrix<double> vectors;
  DistanceMatrix dist;
  ClusterAssignment clusters;
  std::vector<std::vector<ClusterSummary>> summaries;  // per cluster, one per feature
};

struct ProjectedLayer {
  LayerProjection projection;
  DistanceMatrix dist;
  ClusterAssignment clusters;
  MetricReports metrics;
  std::vector<std::vector<ClusterSummary>> summaries;
  StretchedLayout stretched;
  std::vector<Hull> hulls;  // 2D clusters, then HD clusters
};

struct ProjectionRow {
  ProjectionConfig config;
  nlohmann::json params = json::object();
  std::vector<Frame> frames;
  std::vector<ProjectedLayer> layers;
  std::vector<std::vector<FlowPath>> flows;  // per transition l -> l+1, bundled
  double height = 0.0;
};

struct Session {
  std::string id;
  SessionConfig config;
  std::shared_ptr<const Dataset> dataset;
  std::vector<PointId> ids;  // filtered universe; local index i <-> ids[i]
  std::vector<FeatureKind> features;
  FeatureKind summary_feature = FeatureKind::Ngram;
  std::optional<FeatureKind> bundle_property;
  std::size_t k = kDefaultK;
  std::vector<HdLayer> hd;
  std::vector<ProjectionRow> rows;

  std::size_t n() const { return ids.size(); }
  std::optional<std::size_t> local_index(PointId id) const {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - ids.begin());
  }
};

namespace detail {

inline std::vector<std::vector<ClusterSummary>> summarize_all(const Session& s, const ClusterAssignment& a, Space space, std::size_t layer) {
  std::vector<std::vector<ClusterSummary>> out;
  for (const auto& members : a.members()) {
    std::vector<PointId> member_ids;
    for (std::size_t i : members) member_ids.push_back(s.ids[i]);
    std::vector<ClusterSummary> per_feature;
    for (FeatureKind f : s.features) {
      auto summary = summarize_cluster(member_ids, f, *s.dataset, s.ids);
      summary.space = space;
      summary.layer = layer;
      summary.cluster_id = static_cast<int>(out.size());
      per_feature.push_back(std::move(summary));
    }
    out.push_back(std::move(per_feature));
  }
  return out;
}

inline ClusterAssignment cluster_or_single(const DistanceMatrix& d, Space space, std::size_t layer) {
  ClusterAssignment a = d.rows() >= 3 ? cluster_layer(d) : single_cluster(d.rows());
  a.space = space;
  a.layer = layer;
  return a;
}

inline std::vector<Hull> cluster_hulls(const Matrix<double>& pos, const ClusterAssignment& a, Space space) {
  std::vector<Hull> out;
  const auto members = a.members();
  for (std::size_t c = 0; c < members.size(); ++c) {
    std::vector<Point2> pts;
    for (std::size_t i : members[c]) pts.push_back({pos(i, 0), pos(i, 1)});
    out.push_back({space, static_cast<int>(c), convex_hull(std::move(pts))});
  }
  return out;
}

}  // namespace detail

/// Runs the whole pipeline for one configuration: filtering, projections,
/// clustering in both spaces, quality metrics, summaries, and layout.
inline Session compute_session(std::shared_ptr<const Dataset> dataset, const SessionConfig& config,
                               std::size_t max_points = kDefaultMaxPoints) {
  const Dataset& ds = *dataset;
  Session s;
  s.config = config;
  s.id = config_hash(config);
  s.dataset = dataset;
  s.ids = filter_occurrences(ds, config.filter);
  if (s.n() < 3) throw Error(ErrorCode::TooFewPoints, "filter selects " + std::to_string(s.n()) + " points; at least 3 are required");
  if (s.n() > max_points)
    throw Error(ErrorCode::TooManyPoints, "filter selects " + std::to_string(s.n()) + " points; the cap is " + std::to_string(max_points));
  const LayerRange range = config.layers.value_or(LayerRange{0, ds.n_layers() - 1});
  if (range.last >= ds.n_layers()) throw Error(ErrorCode::InvalidConfig, "layer range exceeds the dataset's " + std::to_string(ds.n_layers()) + " layers");
  for (const auto& p : config.projections) {
    if (p.method == ProjectionConfig::Method::External && !ds.external_projections.count(p.name))
      throw Error(ErrorCode::UnknownProjection, "dataset '" + ds.name + "' has no projection '" + p.name + "'");
  }

  for (FeatureKind f : kAllFeatures) {
    if (ds.has_feature(f)) s.features.push_back(f);
  }
  const bool has_pos = ds.has_feature(FeatureKind::Pos);
  s.summary_feature = config.summary_feature.value_or(has_pos ? FeatureKind::Pos : FeatureKind::Ngram);
  s.bundle_property = config.bundle_property ? config.bundle_property : (has_pos ? std::optional(FeatureKind::Pos) : std::nullopt);
  for (auto f : {std::optional(s.summary_feature), s.bundle_property,
                 std::holds_alternative<FeatureKind>(config.color_by) ? std::optional(std::get<FeatureKind>(config.color_by)) : std::nullopt}) {
    if (f && !ds.has_feature(*f)) throw Error(ErrorCode::UnknownFeature, "feature " + std::string(to_string(*f)) + " is not present in dataset '" + ds.name + "'");
  }
  s.k = config.k.value_or(std::min(kDefaultK, s.n() - 1));
  if (s.k > s.n() - 1) throw Error(ErrorCode::KOutOfRange, "k = " + std::to_string(s.k) + " exceeds n - 1 = " + std::to_string(s.n() - 1));
  const KMode k_mode = config.k_mode == KMode::Kind::Fixed ? KMode::fixed(s.k) : KMode::cluster_size();

  for (std::size_t layer = range.first; layer <= range.last; ++layer) {
    HdLayer h;
    h.layer = layer;
    h.vectors = ds.embeddings.layer_matrix(layer, s.ids);
    h.dist = pairwise_distances(h.vectors, config.metric_hd);
    h.clusters = detail::cluster_or_single(h.dist, Space::Hd, layer);
    h.summaries = detail::summarize_all(s, h.clusters, Space::Hd, layer);
    s.hd.push_back(std::move(h));
  }

  std::vector<std::string> property(s.n());
  if (s.bundle_property) {
    for (std::size_t i = 0; i < s.n(); ++i) {
      const auto& ann = ds.occurrences[s.ids[i]].annotations;
      if (*s.bundle_property == FeatureKind::TokenIndex) property[i] = std::to_string(ds.occurrences[s.ids[i]].token_index);
      else if (auto it = ann.find(*s.bundle_property); it != ann.end()) property[i] = it->second;
    }
  }

  for (const auto& pc : config.projections) {
    ProjectionRow row;
    row.config = pc;
    if (pc.method == ProjectionConfig::Method::External) row.params = ds.external_projections.at(pc.name).params;
    auto projections = project_layers(ds, pc, s.ids, range);

    std::vector<Matrix<double>> coords;
    for (const auto& p : projections) coords.push_back(p.coords);
    auto framed = normalize_and_frame(coords, config.layout.width, config.layout.height, config.layout.gap, range.first);
    row.frames = framed.frames;
    row.height = config.layout.height;

    for (std::size_t li = 0; li < projections.size(); ++li) {
      const HdLayer& h = s.hd[li];
      ProjectedLayer pl;
      pl.projection = std::move(projections[li]);
      pl.dist = pairwise_distances(pl.projection.coords, config.metric_2d);
      pl.clusters = detail::cluster_or_single(pl.dist, Space::Ld2, h.layer);
      pl.summaries = detail::summarize_all(s, pl.clusters, Space::Ld2, h.layer);

      pl.metrics = distance_metrics(pl.projection.coords, h.vectors, s.k);
      auto nm = neighbor_metrics(pl.projection.coords, h.vectors, k_mode, h.clusters.labels);
      pl.metrics.insert(nm.begin(), nm.end());
      const auto rates = fpr_fnr(h.clusters.labels, kruskal_mst(pairwise_distances(pl.projection.coords, DistanceMetric::Euclidean)));
      pl.metrics[MetricId::Fpr] = QualityReport{h.layer, MetricId::Fpr, k_mode, rates.fpr, 0.0, 1.0};
      pl.metrics[MetricId::Fnr] = QualityReport{h.layer, MetricId::Fnr, k_mode, rates.fnr, 0.0, 1.0};
      for (auto& [id, report] : pl.metrics) report.layer = h.layer;

      pl.stretched = stretch_clusters(framed.positions[li], pl.clusters.labels, config.layout.resolved_padding());
      row.height = std::max(row.height, pl.stretched.max_y);
      pl.hulls = detail::cluster_hulls(pl.stretched.positions, pl.clusters, Space::Ld2);
      auto hd_hulls = detail::cluster_hulls(pl.stretched.positions, h.clusters, Space::Hd);
      pl.hulls.insert(pl.hulls.end(), hd_hulls.begin(), hd_hulls.end());
      row.layers.push_back(std::move(pl));
    }

    std::vector<std::pair<std::size_t, std::size_t>> links;
    for (std::size_t i = 0; i < s.n(); ++i) links.emplace_back(i, i);
    for (std::size_t li = 0; li + 1 < row.layers.size(); ++li) {
      const auto& a = row.layers[li];
      const auto& b = row.layers[li + 1];
      auto paths = build_flow_paths(a.stretched.positions, b.stretched.positions, row.frames[li], row.frames[li + 1], links);
      row.flows.push_back(bundle_flows(paths, a.clusters.labels, b.clusters.labels, property));
    }
    s.rows.push_back(std::move(row));
  }
  return s;
}

// ---------------------------------------------------------------------------
// JSON payloads. The service and the CLI both serialize through these.

namespace detail {

inline json point_json(const Point2& p) { return json::array({p.x, p.y}); }

inline json ids_json(const Session& s, std::span<const std::size_t> local) {
  json out = json::array();
  for (std::size_t i : local) out.push_back(s.ids[i]);
  return out;
}

inline json row_header(const ProjectionRow& row) {
  json p = to_json(row.config);
  if (row.config.method == ProjectionConfig::Method::External) p["params"] = row.params;
  return p;
}

inline json clusters_json(const ClusterAssignment& a) {
  return {{"k", a.k_clusters}, {"linkage", to_string(a.linkage)}, {"silhouette", a.silhouette}, {"labels", a.labels}};
}

inline json summary_json(const ClusterSummary& s) {
  return {{"feature", to_string(s.feature)},
          {"label", s.label},
          {"certainty", s.certainty},
          {"band", to_string(certainty_band(s.certainty))},
          {"support", s.support}};
}

inline const ClusterSummary& summary_for(const std::vector<ClusterSummary>& per_feature, FeatureKind f) {
  for (const auto& s : per_feature)
    if (s.feature == f) return s;
  throw Error(ErrorCode::UnknownFeature, "no summary for feature " + std::string(to_string(f)));
}

inline std::vector<std::string> categories(const Session& s, FeatureKind f) {
  std::set<std::string> values;
  for (PointId id : s.ids) {
    const auto& o = s.dataset->occurrences[id];
    if (is_stored_annotation(f) && !o.annotations.count(f)) continue;
    values.insert(extract_feature_values(o, f).front());
  }
  return {values.begin(), values.end()};
}

inline json metric_descriptor(const QualityReport& r) {
  return {{"orientation", higher_is_worse(r.metric) ? "higher_is_worse" : "higher_is_better"}, {"range", {r.range_min, r.range_max}}};
}

}  // namespace detail

inline json layout_json(const Session& s) {
  json color;
  std::vector<std::string> cats;
  if (auto f = std::get_if<FeatureKind>(&s.config.color_by)) {
    cats = detail::categories(s, *f);
    color = {{"by", to_string(*f)}, {"kind", "categorical"}, {"categories", cats}};
  } else if (auto m = std::get_if<MetricId>(&s.config.color_by)) {
    color = {{"by", to_string(*m)},
             {"kind", "sequential"},
             {"scale", "dark-to-bright perceptually uniform (inferno-like)"},
             {"orientation", higher_is_worse(*m) ? "higher_is_worse" : "higher_is_better"}};
  } else {
    color = {{"by", "none"}, {"kind", "none"}};
  }

  json rows = json::array();
  for (const auto& row : s.rows) {
    json layers = json::array();
    for (std::size_t li = 0; li < row.layers.size(); ++li) {
      const auto& pl = row.layers[li];
      const auto& h = s.hd[li];
      const Frame& f = row.frames[li];
      const QualityReport* report = nullptr;
      if (auto m = std::get_if<MetricId>(&s.config.color_by)) report = &pl.metrics.at(*m);

      json points = json::array();
      for (std::size_t i = 0; i < s.n(); ++i) {
        json p = {{"id", s.ids[i]},
                  {"x", pl.stretched.positions(i, 0)},
                  {"y", pl.stretched.positions(i, 1)},
                  {"cluster_2d", pl.clusters.labels[i]},
                  {"cluster_hd", h.clusters.labels[i]}};
        if (report) {
          const double v = report->values[i];
          const double span = report->range_max - report->range_min;
          p["value"] = v;
          p["t"] = span > 0.0 ? std::clamp((v - report->range_min) / span, 0.0, 1.0) : 0.0;
        } else if (auto fk = std::get_if<FeatureKind>(&s.config.color_by)) {
          const auto& o = s.dataset->occurrences[s.ids[i]];
          if (!is_stored_annotation(*fk) || o.annotations.count(*fk)) {
            const auto v = extract_feature_values(o, *fk).front();
            p["category"] = v;
            p["color_index"] = std::lower_bound(cats.begin(), cats.end(), v) - cats.begin();
          }
        }
        points.push_back(std::move(p));
      }

      json hulls = json::array();
      for (const auto& hull : pl.hulls) {
        json verts = json::array();
        for (const auto& v : hull.vertices) verts.push_back(detail::point_json(v));
        hulls.push_back({{"space", to_string(hull.space)}, {"cluster", hull.cluster_id}, {"vertices", verts}});
      }

      json labels = json::array();
      const auto members = pl.clusters.members();
      for (std::size_t c = 0; c < members.size(); ++c) {
        std::vector<double> ys;
        for (std::size_t i : members[c]) ys.push_back(pl.stretched.positions(i, 1));
        json label = detail::summary_json(detail::summary_for(pl.summaries[c], s.summary_feature));
        label["space"] = "2d";
        label["cluster"] = c;
        label["size"] = members[c].size();
        label["anchor"] = {f.x_right, median_of(ys)};
        labels.push_back(std::move(label));
      }

      layers.push_back({{"layer", h.layer},
                        {"frame", {{"x_left", f.x_left}, {"x_right", f.x_right}, {"width", f.width}, {"gap", f.gap}}},
                        {"explained_variance", pl.projection.explained_variance
                                                   ? json::array({(*pl.projection.explained_variance)[0], (*pl.projection.explained_variance)[1]})
                                                   : json(nullptr)},
                        {"clusters_2d", {{"k", pl.clusters.k_clusters}, {"linkage", to_string(pl.clusters.linkage)}, {"silhouette", pl.clusters.silhouette}}},
                        {"clusters_hd", {{"k", h.clusters.k_clusters}, {"linkage", to_string(h.clusters.linkage)}, {"silhouette", h.clusters.silhouette}}},
                        {"points", points},
                        {"hulls", hulls},
                        {"labels", labels}});
    }

    json flows = json::array();
    for (const auto& transition : row.flows) {
      for (const auto& fp : transition) {
        json segs = json::array();
        for (const auto& seg : fp.segments) {
          json sj = {{"type", to_string(seg.kind)}, {"from", detail::point_json(seg.start)}, {"to", detail::point_json(seg.end)}};
          if (seg.kind == Segment::Kind::Cubic) sj["control"] = detail::point_json(seg.control);
          segs.push_back(std::move(sj));
        }
        json flow = {{"layer_from", fp.layer_from},
                     {"layer_to", fp.layer_from + 1},
                     {"cluster_from", fp.key.cluster_from},
                     {"cluster_to", fp.key.cluster_to},
                     {"property", fp.key.property},
                     {"color_key", fp.color_key},
                     {"size", fp.ids.size()},
                     {"ids", detail::ids_json(s, fp.ids)},
                     {"segments", segs}};
        if (auto m = std::get_if<MetricId>(&s.config.color_by)) {
          const auto& values = row.layers[fp.layer_from - s.hd.front().layer].metrics.at(*m).values;
          double sum = 0.0;
          for (std::size_t i : fp.ids) sum += values[i];
          flow["value"] = sum / static_cast<double>(fp.ids.size());
        }
        flows.push_back(std::move(flow));
      }
    }

    const double total_width = row.frames.empty() ? 0.0 : row.frames.back().x_right;
    rows.push_back({{"projection", detail::row_header(row)}, {"width", total_width}, {"height", row.height}, {"layers", layers}, {"flows", flows}});
  }

  return {{"v", kSchemaVersion},
          {"session", s.id},
          {"dataset", s.dataset->name},
          {"ids", s.ids},
          {"color", color},
          {"summary_feature", to_string(s.summary_feature)},
          {"bundle_property", s.bundle_property ? json(to_string(*s.bundle_property)) : json(nullptr)},
          {"rows", rows}};
}

inline json metrics_json(const Session& s) {
  json rows = json::array();
  for (const auto& row : s.rows) {
    json layers = json::array();
    for (std::size_t li = 0; li < row.layers.size(); ++li) {
      const auto& pl = row.layers[li];
      json metrics = json::object();
      for (const auto& [id, report] : pl.metrics) {
        json m = detail::metric_descriptor(report);
        m["values"] = report.values;
        metrics[std::string(to_string(id))] = std::move(m);
      }
      layers.push_back({{"layer", s.hd[li].layer},
                        {"clusters_2d", detail::clusters_json(pl.clusters)},
                        {"clusters_hd", detail::clusters_json(s.hd[li].clusters)},
                        {"metrics", metrics}});
    }
    rows.push_back({{"projection", detail::row_header(row)}, {"layers", layers}});
  }
  return {{"v", kSchemaVersion},
          {"session", s.id},
          {"ids", s.ids},
          {"k", s.k},
          {"k_mode", s.config.k_mode == KMode::Kind::Fixed ? "fixed" : "cluster"},
          {"rows", rows}};
}

inline json summaries_json(const Session& s) {
  auto clusters = [&](const ClusterAssignment& a, const std::vector<std::vector<ClusterSummary>>& sums) {
    json out = json::array();
    const auto members = a.members();
    for (std::size_t c = 0; c < members.size(); ++c) {
      json per = json::array();
      for (const auto& sm : sums[c]) per.push_back(detail::summary_json(sm));
      out.push_back({{"cluster", c}, {"size", members[c].size()}, {"ids", detail::ids_json(s, members[c])}, {"summaries", per}});
    }
    return out;
  };
  json rows = json::array();
  for (const auto& row : s.rows) {
    json layers = json::array();
    for (std::size_t li = 0; li < row.layers.size(); ++li) {
      layers.push_back({{"layer", s.hd[li].layer},
                        {"2d", clusters(row.layers[li].clusters, row.layers[li].summaries)},
                        {"hd", clusters(s.hd[li].clusters, s.hd[li].summaries)}});
    }
    rows.push_back({{"projection", detail::row_header(row)}, {"layers", layers}});
  }
  return {{"v", kSchemaVersion}, {"session", s.id}, {"rows", rows}};
}

inline MatrixView matrix_view(const Session& s, std::size_t row, std::size_t layer_index, Space space, Ordering ordering) {
  const auto& pl = s.rows.at(row).layers.at(layer_index);
  const auto& h = s.hd.at(layer_index);
  const auto& dist = space == Space::Hd ? h.dist : pl.dist;
  const auto& clusters = space == Space::Hd ? h.clusters : pl.clusters;
  MatrixView v;
  v.space = space;
  v.layer = h.layer;
  v.dist = dist;
  v.ordering_method = ordering;
  v.order = ordering == Ordering::Linkage && dist.rows() >= 3 ? dendrogram_leaf_order(clusters.dendrogram)
                                                              : order_matrix(dist, ordering, clusters.linkage);
  v.row_cluster_colors = h.clusters.labels;
  v.col_cluster_colors = pl.clusters.labels;
  return v;
}

namespace detail {

inline json dist_rows(const DistanceMatrix& d) {
  json out = json::array();
  for (std::size_t i = 0; i < d.rows(); ++i) {
    auto r = d.row(i);
    out.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return out;
}

inline json matrix_scale(const DistanceMatrix& d) {
  const double hi = d.empty() ? 0.0 : *std::max_element(d.data().begin(), d.data().end());
  return {{"name", "viridis"}, {"domain", {0.0, hi}}};
}

}  // namespace detail

inline json to_json(const Session& s, const MatrixView& v, std::size_t row) {
  return {{"v", kSchemaVersion},
          {"session", s.id},
          {"projection", detail::row_header(s.rows.at(row))},
          {"layer", v.layer},
          {"space", to_string(v.space)},
          {"ordering", to_string(v.ordering_method)},
          {"ids", s.ids},
          {"order", v.order},
          {"dist", detail::dist_rows(v.dist)},
          {"row_cluster_colors", v.row_cluster_colors},
          {"col_cluster_colors", v.col_cluster_colors},
          {"scale", detail::matrix_scale(v.dist)}};
}

inline json matrices_json(const Session& s) {
  json rows = json::array();
  for (std::size_t r = 0; r < s.rows.size(); ++r) {
    json layers = json::array();
    for (std::size_t li = 0; li < s.rows[r].layers.size(); ++li) {
      json entry = {{"layer", s.hd[li].layer}};
      for (Space space : {Space::Ld2, Space::Hd}) {
        json orders = json::object();
        MatrixView base;
        for (Ordering o : kAllOrderings) {
          base = matrix_view(s, r, li, space, o);
          orders[std::string(to_string(o))] = base.order;
        }
        entry[std::string(to_string(space))] = {{"dist", detail::dist_rows(base.dist)},
                                                {"orders", orders},
                                                {"row_cluster_colors", base.row_cluster_colors},
                                                {"col_cluster_colors", base.col_cluster_colors},
                                                {"scale", detail::matrix_scale(base.dist)}};
      }
      layers.push_back(std::move(entry));
    }
    rows.push_back({{"projection", detail::row_header(s.rows[r])}, {"layers", layers}});
  }
  return {{"v", kSchemaVersion}, {"session", s.id}, {"ids", s.ids}, {"rows", rows}};
}

inline json neighbors_json(const Session& s, std::int64_t k) {
  if (k < 1 || static_cast<std::size_t>(k) > s.n() - 1)
    throw Error(ErrorCode::KOutOfRange, "k must lie in [1, " + std::to_string(s.n() - 1) + "]");
  json layers = json::array();
  for (const auto& h : s.hd) {
    json lists = json::array();
    for (const auto& nn : hd_knn(h.vectors, static_cast<std::size_t>(k))) lists.push_back(detail::ids_json(s, nn));
    layers.push_back({{"layer", h.layer}, {"neighbors", lists}});
  }
  return {{"v", kSchemaVersion}, {"session", s.id}, {"k", k}, {"ids", s.ids}, {"layers", layers}};
}

inline json context_json(const Session& s, PointId id) {
  if (!s.local_index(id)) throw Error(ErrorCode::OutOfRange, "point " + std::to_string(id) + " is not in this session");
  json j = to_json(s.dataset->occurrences[id]);
  j["v"] = kSchemaVersion;
  return j;
}

/// Index into the session's layer list for a dataset layer number.
inline std::size_t layer_index(const Session& s, std::size_t layer) {
  if (s.hd.empty() || layer < s.hd.front().layer || layer > s.hd.back().layer)
    throw Error(ErrorCode::OutOfRange, "layer " + std::to_string(layer) + " is not part of this session");
  return layer - s.hd.front().layer;
}

inline json closereading_json(const Session& s, std::size_t layer, std::size_t row = 0) {
  const std::size_t li = layer_index(s, layer);
  if (row >= s.rows.size()) throw Error(ErrorCode::OutOfRange, "projection row " + std::to_string(row) + " does not exist");
  const auto& pl = s.rows[row].layers[li];
  json clusters = json::array();
  const auto members = pl.clusters.members();
  for (std::size_t c = 0; c < members.size(); ++c) {
    json occ = json::array();
    for (std::size_t i : members[c]) occ.push_back(to_json(s.dataset->occurrences[s.ids[i]]));
    json entry = detail::summary_json(detail::summary_for(pl.summaries[c], s.summary_feature));
    entry["cluster"] = c;
    entry["members"] = occ;
    clusters.push_back(std::move(entry));
  }
  return {{"v", kSchemaVersion}, {"session", s.id}, {"layer", layer}, {"projection", detail::row_header(s.rows[row])}, {"clusters", clusters}};
}

}  // namespace layerscope
