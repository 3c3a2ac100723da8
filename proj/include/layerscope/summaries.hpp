#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "layerscope/clustering.hpp"
#include "layerscope/corpus.hpp"

namespace layerscope {

enum class CertaintyBand { Green, Yellow, Red };

inline std::string_view to_string(CertaintyBand b) {
  switch (b) {
    case CertaintyBand::Green: return "GREEN";
    case CertaintyBand::Yellow: return "YELLOW";
    case CertaintyBand::Red: return "RED";
  }
  return "";
}

struct CertaintyThresholds {
  double yellow = 1.0 / 3.0;
  double green = 2.0 / 3.0;
};

inline CertaintyBand certainty_band(double certainty, CertaintyThresholds t = {}) {
  if (!(certainty >= 0.0 && certainty <= 1.0)) throw Error(ErrorCode::OutOfRange, "certainty must lie in [0, 1]");
  if (certainty >= t.green) return CertaintyBand::Green;
  if (certainty >= t.yellow) return CertaintyBand::Yellow;
  return CertaintyBand::Red;
}

/// Feature values of one occurrence. NGRAM yields the lowercased bigrams then
/// trigrams of the window [context_before, token, context_after].
inline std::vector<std::string> extract_feature_values(const TokenOccurrence& o, FeatureKind feature) {
  switch (feature) {
    case FeatureKind::TokenIndex: return {std::to_string(o.token_index)};
    case FeatureKind::Ngram: {
      std::vector<std::string> window = o.context_before;
      window.push_back(o.token);
      window.insert(window.end(), o.context_after.begin(), o.context_after.end());
      for (auto& w : window) std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
      std::vector<std::string> grams;
      for (std::size_t len = 2; len <= 3; ++len) {
        for (std::size_t s = 0; s + len <= window.size(); ++s) {
          std::string g = window[s];
          for (std::size_t t = 1; t < len; ++t) g += ' ' + window[s + t];
          grams.push_back(std::move(g));
        }
      }
      return grams;
    }
    default: {
      auto it = o.annotations.find(feature);
      if (it == o.annotations.end())
        throw Error(ErrorCode::UnknownFeature, "occurrence " + std::to_string(o.id) + " has no " + std::string(to_string(feature)) + " annotation");
      return {it->second};
    }
  }
}

struct ClusterSummary {
  Space space = Space::Ld2;
  std::size_t layer = 0;
  int cluster_id = 0;
  FeatureKind feature = FeatureKind::Pos;
  std::string label;
  double certainty = 0.0;
  std::size_t support = 0;
};

/// Counts, per feature value, how many of `ids` exhibit it (each point
/// counts at most once per value). Points lacking the annotation are skipped.
inline std::map<std::string, std::size_t> count_feature_points(const Dataset& ds, std::span<const PointId> ids, FeatureKind feature) {
  std::map<std::string, std::size_t> counts;
  for (PointId id : ids) {
    const auto& o = ds.occurrences.at(id);
    if (is_stored_annotation(feature) && o.annotations.count(feature) == 0) continue;
    auto values = extract_feature_values(o, feature);
    std::set<std::string> distinct(values.begin(), values.end());
    for (const auto& v : distinct) ++counts[v];
  }
  return counts;
}

/// Modal feature value of a cluster and its certainty
/// (in / in_selection)^2 * (in / cluster_size)^2. Ties go to the
/// lexicographically smallest value.
inline ClusterSummary summarize_cluster(std::span<const PointId> members, FeatureKind feature, const Dataset& ds,
                                        std::span<const PointId> universe) {
  if (members.empty()) throw Error(ErrorCode::EmptyCluster, "cannot summarize an empty cluster");
  if (!ds.has_feature(feature))
    throw Error(ErrorCode::UnknownFeature, "feature " + std::string(to_string(feature)) + " is not present in dataset '" + ds.name + "'");

  const auto in_cluster = count_feature_points(ds, members, feature);
  ClusterSummary s;
  s.feature = feature;
  for (const auto& [value, count] : in_cluster) {
    if (count > s.support) {  // map order gives the lexicographic tie-break
      s.label = value;
      s.support = count;
    }
  }
  if (s.support == 0) return s;  // no member carries this feature

  std::size_t total = 0;
  for (PointId id : universe) {
    const auto& o = ds.occurrences.at(id);
    if (is_stored_annotation(feature) && o.annotations.count(feature) == 0) continue;
    auto values = extract_feature_values(o, feature);
    if (std::find(values.begin(), values.end(), s.label) != values.end()) ++total;
  }
  const double in = static_cast<double>(s.support);
  const double uniqueness = in / static_cast<double>(std::max(total, s.support));
  const double purity = in / static_cast<double>(members.size());
  s.certainty = uniqueness * uniqueness * purity * purity;
  return s;
}

}  // namespace layerscope
