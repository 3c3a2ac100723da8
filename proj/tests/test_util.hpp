#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "layerscope/corpus.hpp"

namespace testutil {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("layerscope-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline layerscope::TokenOccurrence occurrence(std::size_t id, const std::string& token, const std::string& pos = "",
                                              const std::string& sense = "") {
  layerscope::TokenOccurrence o;
  o.id = id;
  o.token = token;
  o.sentence_id = static_cast<std::int64_t>(id);
  o.context_before = {"the"};
  o.context_after = {"was", "here"};
  o.token_index = 1;
  o.sentence = "the " + token + " was here";
  if (!pos.empty()) o.annotations[layerscope::FeatureKind::Pos] = pos;
  if (!sense.empty()) o.annotations[layerscope::FeatureKind::Sense] = sense;
  return o;
}

/// A dataset with the given occurrences and random embeddings.
inline layerscope::Dataset small_dataset(std::vector<layerscope::TokenOccurrence> occ, std::uint32_t n_layers = 2,
                                         std::uint32_t dim = 4, unsigned seed = 1) {
  layerscope::Dataset ds;
  ds.name = "tiny";
  ds.occurrences = std::move(occ);
  ds.embeddings.n_layers = n_layers;
  ds.embeddings.n_points = static_cast<std::uint32_t>(ds.occurrences.size());
  ds.embeddings.dim = dim;
  std::mt19937 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  ds.embeddings.values.resize(std::size_t{n_layers} * ds.occurrences.size() * dim);
  for (auto& v : ds.embeddings.values) v = g(rng);
  return ds;
}

}  // namespace testutil
