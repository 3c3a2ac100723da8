#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "layerscope/clustering.hpp"
#include "layerscope/matrix.hpp"

namespace layerscope {

/// Layout coordinates are kept on a grid of 2^-20 units. With every position
/// and offset on the grid, cluster translations are exact in double
/// precision, so relative positions inside a cluster never drift.
inline const double kLayoutQuantum = std::ldexp(1.0, -20);

inline double snap_to_grid(double v) { return std::round(v / kLayoutQuantum) * kLayoutQuantum; }
inline double snap_up_to_grid(double v) { return std::ceil(v / kLayoutQuantum) * kLayoutQuantum; }

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
  auto operator<=>(const Point2&) const = default;
};

struct Frame {
  std::size_t layer = 0;
  double x_left = 0.0;
  double x_right = 0.0;
  double width = 0.0;
  double gap = 50.0;
};

struct FramedLayers {
  std::vector<Frame> frames;
  std::vector<Matrix<double>> positions;  // per layer, n x 2
};

/// Scales each layer's coordinates independently on x and y to fill a
/// width x height frame; frames are tiled left to right with `gap` between
/// them. An axis with a single distinct value is centered.
inline FramedLayers normalize_and_frame(const std::vector<Matrix<double>>& coords, double width, double height, double gap = 50.0,
                                        std::size_t first_layer = 0) {
  if (!(width > 0.0) || !(height > 0.0)) throw Error(ErrorCode::InvalidConfig, "frame width and height must be positive");
  if (gap < 0.0) throw Error(ErrorCode::InvalidConfig, "frame gap must be non-negative");
  FramedLayers out;
  for (std::size_t l = 0; l < coords.size(); ++l) {
    const auto& c = coords[l];
    Frame f;
    f.layer = first_layer + l;
    f.width = width;
    f.gap = gap;
    f.x_left = static_cast<double>(l) * (width + gap);
    f.x_right = f.x_left + width;
    out.frames.push_back(f);

    Matrix<double> p(c.rows(), 2);
    for (std::size_t axis = 0; axis < 2; ++axis) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t i = 0; i < c.rows(); ++i) {
        lo = std::min(lo, c(i, axis));
        hi = std::max(hi, c(i, axis));
      }
      const double extent = axis == 0 ? width : height;
      const double origin = axis == 0 ? f.x_left : 0.0;
      for (std::size_t i = 0; i < c.rows(); ++i) {
        const double t = hi > lo ? (c(i, axis) - lo) / (hi - lo) : 0.5;
        p(i, axis) = snap_to_grid(origin + t * extent);
      }
    }
    out.positions.push_back(std::move(p));
  }
  return out;
}

struct StretchedLayout {
  Matrix<double> positions;    // n x 2
  std::vector<double> offsets;  // per 2D cluster, added to y
  double max_y = 0.0;
};

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Orders clusters by median y, then walks successive pairs and moves the
/// upper cluster up whenever its minimum y does not clear the lower
/// cluster's maximum y. The shift is max_y(c1) - min_y(c2) + padding, with
/// padding at least one grid unit so shifted clusters end strictly apart.
inline StretchedLayout stretch_clusters(const Matrix<double>& positions, std::span<const int> labels, double padding) {
  if (padding < 0.0) throw Error(ErrorCode::InvalidConfig, "padding must be non-negative");
  if (labels.size() != positions.rows()) throw Error(ErrorCode::CountMismatch, "label count does not match positions");
  const std::size_t k = labels.empty() ? 0 : static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end()) + 1);
  std::vector<std::vector<double>> ys(k);
  for (std::size_t i = 0; i < labels.size(); ++i) ys[static_cast<std::size_t>(labels[i])].push_back(positions(i, 1));

  std::vector<std::size_t> order;
  std::vector<double> median(k, 0.0), lo(k, 0.0), hi(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    if (ys[c].empty()) continue;
    order.push_back(c);
    median[c] = median_of(ys[c]);
    lo[c] = *std::min_element(ys[c].begin(), ys[c].end());
    hi[c] = *std::max_element(ys[c].begin(), ys[c].end());
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return median[a] < median[b]; });

  const double pad = snap_up_to_grid(std::max(padding, kLayoutQuantum));
  StretchedLayout out{positions, std::vector<double>(k, 0.0), 0.0};
  for (std::size_t i = 1; i < order.size(); ++i) {
    const std::size_t below = order[i - 1], above = order[i];
    const double top_of_below = hi[below] + out.offsets[below];
    if (lo[above] <= top_of_below) out.offsets[above] = snap_up_to_grid(top_of_below - lo[above] + pad);
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.positions(i, 1) = positions(i, 1) + out.offsets[static_cast<std::size_t>(labels[i])];
    out.max_y = std::max(out.max_y, out.positions(i, 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Flow paths

struct Segment {
  enum class Kind { HLine, Cubic, Move };
  Kind kind = Kind::HLine;
  Point2 start;
  Point2 control;  // Cubic only
  Point2 end;

  bool operator==(const Segment&) const = default;
};

inline std::string_view to_string(Segment::Kind k) {
  switch (k) {
    case Segment::Kind::HLine: return "H";
    case Segment::Kind::Cubic: return "C";
    case Segment::Kind::Move: return "M";
  }
  return "";
}

struct BundleKey {
  int cluster_from = 0;
  int cluster_to = 0;
  std::string property;

  auto operator<=>(const BundleKey&) const = default;
};

struct FlowPath {
  std::vector<std::size_t> ids;         // source points
  std::vector<std::size_t> target_ids;  // matching points in the next layer
  std::size_t layer_from = 0;
  std::vector<Segment> segments;
  std::string color_key;
  BundleKey key;
};

/// One unbundled path per link: a horizontal run to the frame border, two
/// mirrored cubic curves meeting halfway between the frames, and a
/// horizontal run into the target point.
inline std::vector<FlowPath> build_flow_paths(const Matrix<double>& from, const Matrix<double>& to, const Frame& frame_from,
                                              const Frame& frame_to, std::span<const std::pair<std::size_t, std::size_t>> links) {
  std::vector<FlowPath> out;
  out.reserve(links.size());
  for (const auto& [s, t] : links) {
    if (s >= from.rows() || t >= to.rows())
      throw Error(ErrorCode::MissingPosition, "link " + std::to_string(s) + " -> " + std::to_string(t) + " has no position");
    const double x1 = from(s, 0), y1 = from(s, 1);
    const double x7 = to(t, 0), y3 = to(t, 1);
    const double x2 = frame_from.x_right;
    const double x6 = frame_to.x_left;
    const double x4 = (x2 + x6) / 2.0;
    const double y2 = (y1 + y3) / 2.0;
    const double x3 = (x2 + x4) / 2.0;
    const double x5 = (x4 + x6) / 2.0;

    FlowPath p;
    p.ids = {s};
    p.target_ids = {t};
    p.layer_from = frame_from.layer;
    p.segments = {
        {Segment::Kind::HLine, {x1, y1}, {}, {x2, y1}},
        {Segment::Kind::Cubic, {x2, y1}, {x3, y1}, {x4, y2}},
        {Segment::Kind::Cubic, {x4, y2}, {x5, y3}, {x6, y3}},
        {Segment::Kind::HLine, {x6, y3}, {}, {x7, y3}},
    };
    out.push_back(std::move(p));
  }
  return out;
}

/// Merges paths sharing (cluster in this layer, cluster in the next layer,
/// property value) into one path. Member geometries are joined with pen-up
/// Move segments so the segment chain stays continuous. Bundles come out in
/// key order; members keep their input order.
inline std::vector<FlowPath> bundle_flows(const std::vector<FlowPath>& paths, std::span<const int> labels_from,
                                          std::span<const int> labels_to, std::span<const std::string> property) {
  std::map<BundleKey, FlowPath> groups;
  for (const auto& p : paths) {
    for (std::size_t m = 0; m < p.ids.size(); ++m) {
      if (p.ids[m] >= labels_from.size() || p.target_ids[m] >= labels_to.size() || p.ids[m] >= property.size())
        throw Error(ErrorCode::MissingPosition, "flow endpoint has no cluster label or property");
    }
    BundleKey key{labels_from[p.ids.front()], labels_to[p.target_ids.front()], property[p.ids.front()]};
    auto [it, fresh] = groups.try_emplace(key);
    FlowPath& g = it->second;
    if (fresh) {
      g.layer_from = p.layer_from;
      g.key = key;
      g.color_key = key.property;
    } else if (!g.segments.empty() && !p.segments.empty()) {
      g.segments.push_back({Segment::Kind::Move, g.segments.back().end, {}, p.segments.front().start});
    }
    g.ids.insert(g.ids.end(), p.ids.begin(), p.ids.end());
    g.target_ids.insert(g.target_ids.end(), p.target_ids.begin(), p.target_ids.end());
    g.segments.insert(g.segments.end(), p.segments.begin(), p.segments.end());
  }
  std::vector<FlowPath> out;
  out.reserve(groups.size());
  for (auto& [key, g] : groups) out.push_back(std::move(g));
  return out;
}

// ---------------------------------------------------------------------------
// Convex hulls

struct Hull {
  Space space = Space::Ld2;
  int cluster_id = 0;
  std::vector<Point2> vertices;  // counter-clockwise, starting at the lowest (x, y)
};

inline double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

/// Andrew's monotone chain. Collinear boundary points are dropped, so a
/// collinear input yields its two extremes and a single point yields itself.
inline std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() <= 2) return pts;
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  const std::size_t lower = k + 1;
  for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0) --k;
    hull[k++] = *it;
  }
  hull.resize(k - 1);
  return hull;
}

inline double polygon_area(std::span<const Point2> poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return std::abs(a) / 2.0;
}

}  // namespace layerscope
