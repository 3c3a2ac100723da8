#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "layerscope/error.hpp"
#include "layerscope/matrix.hpp"

namespace layerscope {

using PointId = std::size_t;

enum class FeatureKind { Pos, Syncat, Sense, Ner, TokenIndex, Ngram };

inline constexpr std::array<FeatureKind, 6> kAllFeatures = {FeatureKind::Pos, FeatureKind::Syncat, FeatureKind::Sense,
                                                            FeatureKind::Ner, FeatureKind::TokenIndex, FeatureKind::Ngram};

inline std::string_view to_string(FeatureKind f) {
  switch (f) {
    case FeatureKind::Pos: return "POS";
    case FeatureKind::Syncat: return "SYNCAT";
    case FeatureKind::Sense: return "SENSE";
    case FeatureKind::Ner: return "NER";
    case FeatureKind::TokenIndex: return "TOKEN_INDEX";
    case FeatureKind::Ngram: return "NGRAM";
  }
  return "";
}

inline std::optional<FeatureKind> parse_feature(std::string_view name) {
  for (FeatureKind f : kAllFeatures) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

/// Annotation kinds that are stored per record (as opposed to TOKEN_INDEX,
/// which comes from the record's position field, and NGRAM, which is derived).
inline bool is_stored_annotation(FeatureKind f) {
  return f == FeatureKind::Pos || f == FeatureKind::Syncat || f == FeatureKind::Sense || f == FeatureKind::Ner;
}

struct TokenOccurrence {
  PointId id = 0;
  std::string token;
  std::int64_t sentence_id = 0;
  std::size_t token_index = 0;
  std::vector<std::string> context_before;
  std::vector<std::string> context_after;
  std::string sentence;
  std::map<FeatureKind, std::string> annotations;

  bool operator==(const TokenOccurrence&) const = default;
};

/// Per-layer HD vectors, layer-major then point-major then component-major.
struct EmbeddingTensor {
  std::uint32_t n_layers = 0;
  std::uint32_t n_points = 0;
  std::uint32_t dim = 0;
  std::vector<float> values;

  std::span<const float> vector(std::size_t layer, std::size_t point) const {
    return {values.data() + (layer * n_points + point) * dim, dim};
  }

  /// The listed points of one layer as an n x dim matrix of doubles.
  Matrix<double> layer_matrix(std::size_t layer, std::span<const PointId> points) const {
    Matrix<double> m(points.size(), dim);
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto v = vector(layer, points[i]);
      std::copy(v.begin(), v.end(), m.row(i).begin());
    }
    return m;
  }
};

/// Externally computed 2D coordinates for every layer and point.
struct ExternalProjection {
  std::string method;
  nlohmann::json params = nlohmann::json::object();
  std::vector<Matrix<double>> layers;  // n_layers matrices of n_points x 2
};

struct Dataset {
  std::string name;
  std::vector<TokenOccurrence> occurrences;
  EmbeddingTensor embeddings;
  std::map<std::string, ExternalProjection> external_projections;

  std::size_t n_points() const { return occurrences.size(); }
  std::size_t n_layers() const { return embeddings.n_layers; }

  /// True when the feature can be evaluated on this dataset.
  bool has_feature(FeatureKind f) const {
    if (!is_stored_annotation(f)) return true;
    return std::any_of(occurrences.begin(), occurrences.end(),
                       [f](const TokenOccurrence& o) { return o.annotations.count(f) > 0; });
  }
};

// ---------------------------------------------------------------------------
// LFEB v1 embedding file: "LFEB", u32 version, u32 n_layers, u32 n_points,
// u32 dim, then n_layers*n_points*dim little-endian f32.

namespace detail {

inline std::uint32_t read_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void write_u32_le(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace detail

inline constexpr std::uint32_t kLfebVersion = 1;

inline EmbeddingTensor parse_lfeb(std::string_view bytes) {
  constexpr std::size_t header = 20;
  if (bytes.size() < header) throw Error(ErrorCode::FormatError, "embedding file shorter than its header");
  if (bytes.substr(0, 4) != "LFEB") throw Error(ErrorCode::FormatError, "bad magic, expected LFEB");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t version = detail::read_u32_le(p + 4);
  if (version != kLfebVersion) throw Error(ErrorCode::FormatError, "unsupported LFEB version " + std::to_string(version));
  EmbeddingTensor t;
  t.n_layers = detail::read_u32_le(p + 8);
  t.n_points = detail::read_u32_le(p + 12);
  t.dim = detail::read_u32_le(p + 16);
  if (t.n_layers == 0 || t.n_points == 0 || t.dim == 0) throw Error(ErrorCode::FormatError, "LFEB dimensions must be >= 1");
  const std::uint64_t count = std::uint64_t{t.n_layers} * t.n_points * t.dim;
  if (bytes.size() - header != count * 4) {
    throw Error(ErrorCode::FormatError, "LFEB payload is " + std::to_string(bytes.size() - header) + " bytes, expected " +
                                            std::to_string(count * 4) + " (truncated or oversized)");
  }
  t.values.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t bits = detail::read_u32_le(p + header + 4 * i);
    t.values[i] = std::bit_cast<float>(bits);
    if (!std::isfinite(t.values[i])) throw Error(ErrorCode::NonfiniteValue, "LFEB value " + std::to_string(i) + " is not finite");
  }
  return t;
}

inline EmbeddingTensor read_lfeb(const std::filesystem::path& path) { return parse_lfeb(detail::read_file(path)); }

inline void write_lfeb(const std::filesystem::path& path, const EmbeddingTensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write("LFEB", 4);
  detail::write_u32_le(out, kLfebVersion);
  detail::write_u32_le(out, t.n_layers);
  detail::write_u32_le(out, t.n_points);
  detail::write_u32_le(out, t.dim);
  for (float v : t.values) detail::write_u32_le(out, std::bit_cast<std::uint32_t>(v));
}

// ---------------------------------------------------------------------------
// Annotations: one JSON object per line.

inline nlohmann::json to_json(const TokenOccurrence& o) {
  nlohmann::json ann = nlohmann::json::object();
  for (const auto& [k, v] : o.annotations) ann[std::string(to_string(k))] = v;
  return {{"id", o.id},
          {"token", o.token},
          {"sentence_id", o.sentence_id},
          {"token_index", o.token_index},
          {"context_before", o.context_before},
          {"context_after", o.context_after},
          {"sentence", o.sentence},
          {"annotations", ann}};
}

inline TokenOccurrence occurrence_from_json(const nlohmann::json& j) {
  TokenOccurrence o;
  try {
    o.id = j.at("id").get<PointId>();
    o.token = j.at("token").get<std::string>();
    o.sentence_id = j.at("sentence_id").get<std::int64_t>();
    o.token_index = j.at("token_index").get<std::size_t>();
    o.context_before = j.value("context_before", std::vector<std::string>{});
    o.context_after = j.value("context_after", std::vector<std::string>{});
    o.sentence = j.at("sentence").get<std::string>();
    if (j.contains("annotations")) {
      for (const auto& [k, v] : j.at("annotations").items()) {
        auto f = parse_feature(k);
        if (!f || !is_stored_annotation(*f)) throw Error(ErrorCode::FormatError, "unsupported annotation kind '" + k + "'");
        o.annotations[*f] = v.get<std::string>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("annotation record: ") + e.what());
  }
  return o;
}

/// Checks the per-record invariants and that ids are exactly 0..n-1.
/// Returns the records sorted by id.
inline std::vector<TokenOccurrence> validate_occurrences(std::vector<TokenOccurrence> records) {
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& o = records[i];
    if (o.id != i) throw Error(ErrorCode::FormatError, "occurrence ids must be unique and contiguous from 0 (missing or repeated id near " + std::to_string(i) + ")");
    if (o.context_before.size() > 2 || o.context_after.size() > 2)
      throw Error(ErrorCode::FormatError, "occurrence " + std::to_string(i) + " has a context window longer than 2");
    auto words = detail::split_whitespace(o.sentence);
    if (o.token_index >= words.size() || words[o.token_index] != o.token)
      throw Error(ErrorCode::FormatError, "occurrence " + std::to_string(i) + ": token '" + o.token + "' not found at index " +
                                              std::to_string(o.token_index) + " of its sentence");
  }
  return records;
}

inline std::vector<TokenOccurrence> parse_annotations(std::string_view text) {
  std::vector<TokenOccurrence> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::FormatError, "annotation line " + std::to_string(line_no) + ": " + e.what());
      }
      out.push_back(occurrence_from_json(j));
    }
    pos = end + 1;
  }
  return out;
}

inline std::vector<TokenOccurrence> read_annotations(const std::filesystem::path& path) {
  return parse_annotations(detail::read_file(path));
}

inline void write_annotations(const std::filesystem::path& path, const std::vector<TokenOccurrence>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& o : records) out << to_json(o).dump() << '\n';
}

// ---------------------------------------------------------------------------
// External projections: {"method": str, "params": object, "layers": [[[x,y],...],...]}

inline ExternalProjection projection_from_json(const nlohmann::json& j) {
  ExternalProjection p;
  try {
    p.method = j.at("method").get<std::string>();
    p.params = j.value("params", nlohmann::json::object());
    for (const auto& layer : j.at("layers")) {
      Matrix<double> m(layer.size(), 2);
      for (std::size_t i = 0; i < layer.size(); ++i) {
        const auto& xy = layer.at(i);
        if (xy.size() != 2) throw Error(ErrorCode::FormatError, "projection coordinates must be [x, y] pairs");
        m(i, 0) = xy.at(0).get<double>();
        m(i, 1) = xy.at(1).get<double>();
      }
      p.layers.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("projection file: ") + e.what());
  }
  for (const auto& m : p.layers) require_finite(m, "external projection");
  return p;
}

inline nlohmann::json to_json(const ExternalProjection& p) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& m : p.layers) {
    nlohmann::json pts = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) pts.push_back({m(i, 0), m(i, 1)});
    layers.push_back(std::move(pts));
  }
  return {{"method", p.method}, {"params", p.params}, {"layers", std::move(layers)}};
}

// ---------------------------------------------------------------------------
// Manifest: {"name":…, "embeddings":…, "annotations":…, "projections":[…]}
// with paths relative to the manifest's directory.

inline Dataset assemble_dataset(std::string name, std::vector<TokenOccurrence> records, EmbeddingTensor tensor,
                                std::vector<ExternalProjection> projections = {}) {
  if (records.size() != tensor.n_points)
    throw Error(ErrorCode::CountMismatch, std::to_string(records.size()) + " annotation records but the tensor has " +
                                              std::to_string(tensor.n_points) + " points");
  Dataset ds;
  ds.name = std::move(name);
  ds.occurrences = validate_occurrences(std::move(records));
  ds.embeddings = std::move(tensor);
  for (auto& p : projections) {
    if (p.layers.size() != ds.n_layers())
      throw Error(ErrorCode::CountMismatch, "projection '" + p.method + "' has " + std::to_string(p.layers.size()) +
                                                " layers, expected " + std::to_string(ds.n_layers()));
    for (const auto& m : p.layers) {
      if (m.rows() != ds.n_points())
        throw Error(ErrorCode::CountMismatch, "projection '" + p.method + "' layer has " + std::to_string(m.rows()) +
                                                  " points, expected " + std::to_string(ds.n_points()));
    }
    std::string key = p.method;
    if (!ds.external_projections.emplace(key, std::move(p)).second)
      throw Error(ErrorCode::FormatError, "duplicate projection method '" + key + "'");
  }
  return ds;
}

inline Dataset load_dataset(const std::filesystem::path& manifest_path) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(detail::read_file(manifest_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::FormatError, "manifest: " + std::string(e.what()));
  }
  const auto dir = manifest_path.parent_path();
  std::string name, emb, ann;
  std::vector<std::string> proj_files;
  try {
    name = manifest.at("name").get<std::string>();
    emb = manifest.at("embeddings").get<std::string>();
    ann = manifest.at("annotations").get<std::string>();
    proj_files = manifest.value("projections", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, "manifest: " + std::string(e.what()));
  }
  auto tensor = read_lfeb(dir / emb);
  auto records = read_annotations(dir / ann);
  std::vector<ExternalProjection> projections;
  for (const auto& f : proj_files) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(detail::read_file(dir / f));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::FormatError, "projection file " + f + ": " + e.what());
    }
    projections.push_back(projection_from_json(j));
  }
  return assemble_dataset(std::move(name), std::move(records), std::move(tensor), std::move(projections));
}

/// Writes `<stem>.json` (manifest), `<stem>.lfeb`, `<stem>.jsonl` and one
/// `<stem>.proj.<method>.json` per external projection into `dir`.
/// Returns the manifest path.
inline std::filesystem::path save_dataset(const Dataset& ds, const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  write_lfeb(dir / (stem + ".lfeb"), ds.embeddings);
  write_annotations(dir / (stem + ".jsonl"), ds.occurrences);
  nlohmann::json proj_files = nlohmann::json::array();
  for (const auto& [method, p] : ds.external_projections) {
    const std::string file = stem + ".proj." + method + ".json";
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir / file).string());
    out << to_json(p).dump() << '\n';
    proj_files.push_back(file);
  }
  nlohmann::json manifest = {{"name", ds.name},
                             {"embeddings", stem + ".lfeb"},
                             {"annotations", stem + ".jsonl"},
                             {"projections", proj_files}};
  const auto path = dir / (stem + ".json");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << manifest.dump(2) << '\n';
  return path;
}

}  // namespace layerscope
