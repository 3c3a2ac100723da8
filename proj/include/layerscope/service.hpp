#pragma once

#include <filesystem>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <json.hpp>

// session.hpp pulls in Eigen, which has to be parsed before httplib: glibc's
// <resolv.h> defines a `_res` macro that collides with Eigen identifiers.
#include "layerscope/session.hpp"

#include <httplib.h>

namespace layerscope {

/// HTTP status for a library error.
inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownDataset:
    case ErrorCode::OutOfRange: return 404;
    case ErrorCode::TooFewPoints:
    case ErrorCode::TooManyPoints: return 422;
    case ErrorCode::IoError:
    case ErrorCode::FormatError:
    case ErrorCode::CountMismatch:
    case ErrorCode::NonfiniteValue: return 500;
    default: return 400;
  }
}

/// httplib's default socket options include SO_REUSEPORT, which lets a
/// second server bind a port that is already being served. Keep
/// SO_REUSEADDR only so an occupied port is reported as such.
inline void use_exclusive_port(httplib::Server& server) {
  server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
  });
}

inline std::string error_body(std::string_view code, const std::string& message) {
  return json{{"v", kSchemaVersion}, {"error", code}, {"message", message}}.dump();
}

/// Datasets discovered as manifest files (*.json with "embeddings" and
/// "annotations" keys) directly inside a directory. Loaded on first use and
/// shared immutably afterwards.
class DatasetRegistry {
 public:
  explicit DatasetRegistry(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!std::filesystem::is_directory(dir_)) throw Error(ErrorCode::IoError, "data directory " + dir_.string() + " is not readable");
  }

  /// name -> manifest path, rescanned on every call.
  std::map<std::string, std::filesystem::path> discover() const {
    std::map<std::string, std::filesystem::path> out;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir_, ec)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
      try {
        auto j = json::parse(detail::read_file(entry.path()));
        if (j.is_object() && j.contains("name") && j.contains("embeddings") && j.contains("annotations"))
          out.emplace(j.at("name").get<std::string>(), entry.path());
      } catch (const std::exception&) {
        // not a manifest
      }
    }
    return out;
  }

  std::shared_ptr<const Dataset> get(const std::string& name) {
    {
      std::lock_guard lock(mutex_);
      if (auto it = loaded_.find(name); it != loaded_.end()) return it->second;
    }
    const auto found = discover();
    auto it = found.find(name);
    if (it == found.end()) throw Error(ErrorCode::UnknownDataset, "no dataset named '" + name + "'");
    auto ds = std::make_shared<const Dataset>(load_dataset(it->second));
    std::lock_guard lock(mutex_);
    return loaded_.emplace(name, std::move(ds)).first->second;
  }

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const Dataset>> loaded_;
};

/// Immutable sessions keyed by config hash. Concurrent requests for the same
/// config share one computation.
class SessionStore {
 public:
  using SessionPtr = std::shared_ptr<const Session>;

  struct Created {
    SessionPtr session;
    bool cached = false;
  };

  template <typename Compute>
  Created get_or_compute(const std::string& key, Compute&& compute) {
    std::promise<SessionPtr> promise;
    std::shared_future<SessionPtr> future;
    bool owner = false;
    {
      std::lock_guard lock(mutex_);
      auto it = sessions_.find(key);
      if (it != sessions_.end()) {
        future = it->second;
      } else {
        future = promise.get_future().share();
        sessions_.emplace(key, future);
        owner = true;
      }
    }
    if (!owner) return {future.get(), true};
    try {
      promise.set_value(std::make_shared<const Session>(compute()));
    } catch (...) {
      promise.set_exception(std::current_exception());
      std::lock_guard lock(mutex_);
      sessions_.erase(key);
    }
    return {future.get(), false};
  }

  SessionPtr find(const std::string& id) const {
    std::shared_future<SessionPtr> future;
    {
      std::lock_guard lock(mutex_);
      auto it = sessions_.find(id);
      if (it == sessions_.end()) return nullptr;
      future = it->second;
    }
    try {
      return future.get();
    } catch (...) {
      return nullptr;
    }
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_future<SessionPtr>> sessions_;
};

struct ServiceOptions {
  std::filesystem::path data_dir;
  std::size_t max_points = kDefaultMaxPoints;
};

class Service {
 public:
  explicit Service(ServiceOptions options) : options_(std::move(options)), datasets_(options_.data_dir) {}

  /// Session creation shared with the CLI's offline path.
  SessionStore::Created create_session(const json& body) {
    const SessionConfig config = session_config_from_json(body);
    auto dataset = datasets_.get(config.dataset);
    return sessions_.get_or_compute(config_hash(config), [&] { return compute_session(dataset, config, options_.max_points); });
  }

  void register_routes(httplib::Server& server) {
    server.Get("/datasets", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        json list = json::array();
        for (const auto& [name, path] : datasets_.discover()) list.push_back({{"name", name}, {"manifest", path.filename().string()}});
        return ok(res, json{{"v", kSchemaVersion}, {"datasets", list}});
      });
    });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        json body;
        try {
          body = json::parse(req.body);
        } catch (const json::parse_error& e) {
          throw Error(ErrorCode::InvalidConfig, std::string("request body is not JSON: ") + e.what());
        }
        auto created = create_session(body);
        res.status = created.cached ? 200 : 201;
        res.set_content(json{{"v", kSchemaVersion}, {"id", created.session->id}, {"cached", created.cached}}.dump(), "application/json");
      });
    });

    get(server, R"(/sessions/([0-9a-f]+)/layout)", [](const Session& s, const httplib::Request&) { return layout_json(s); });
    get(server, R"(/sessions/([0-9a-f]+)/metrics)", [](const Session& s, const httplib::Request&) { return metrics_json(s); });
    get(server, R"(/sessions/([0-9a-f]+)/summaries)", [](const Session& s, const httplib::Request&) { return summaries_json(s); });
    get(server, R"(/sessions/([0-9a-f]+)/matrices)", [](const Session& s, const httplib::Request&) { return matrices_json(s); });

    get(server, R"(/sessions/([0-9a-f]+)/layers/([^/]+)/matrix)", [](const Session& s, const httplib::Request& req) {
      const std::size_t layer = layer_index(s, parse_index(req.matches[2], "layer", true));
      const std::string space = req.has_param("space") ? req.get_param_value("space") : "hd";
      const std::string ordering = req.has_param("ordering") ? req.get_param_value("ordering") : "linkage";
      const std::size_t row = req.has_param("row") ? parse_index(req.get_param_value("row"), "row", false) : 0;
      if (space != "hd" && space != "2d") throw Error(ErrorCode::InvalidConfig, "space must be 'hd' or '2d'");
      Ordering o{};
      if (ordering == "linkage") o = Ordering::Linkage;
      else if (ordering == "nn") o = Ordering::NnHeuristic;
      else if (ordering == "greedy") o = Ordering::Greedy;
      else throw Error(ErrorCode::InvalidConfig, "ordering must be linkage, nn or greedy");
      if (row >= s.rows.size()) throw Error(ErrorCode::OutOfRange, "projection row does not exist");
      return to_json(s, matrix_view(s, row, layer, space == "hd" ? Space::Hd : Space::Ld2, o), row);
    });

    get(server, R"(/sessions/([0-9a-f]+)/neighbors)", [](const Session& s, const httplib::Request& req) {
      if (!req.has_param("k")) throw Error(ErrorCode::KOutOfRange, "query parameter k is required");
      std::int64_t k = 0;
      try {
        std::size_t used = 0;
        k = std::stoll(req.get_param_value("k"), &used);
        if (used != req.get_param_value("k").size()) throw std::invalid_argument("k");
      } catch (const std::exception&) {
        throw Error(ErrorCode::KOutOfRange, "k must be an integer");
      }
      return neighbors_json(s, k);
    });

    get(server, R"(/sessions/([0-9a-f]+)/points/([^/]+)/context)", [](const Session& s, const httplib::Request& req) {
      return context_json(s, parse_index(req.matches[2], "point id", false));
    });

    get(server, R"(/sessions/([0-9a-f]+)/closereading)", [](const Session& s, const httplib::Request& req) {
      if (!req.has_param("layer")) throw Error(ErrorCode::InvalidConfig, "query parameter layer is required");
      const std::size_t layer = parse_index(req.get_param_value("layer"), "layer", true);
      const std::size_t row = req.has_param("row") ? parse_index(req.get_param_value("row"), "row", false) : 0;
      return closereading_json(s, layer, row);
    });
  }

 private:
  static void ok(httplib::Response& res, const json& body) {
    res.status = 200;
    res.set_content(body.dump(), "application/json");
  }

  /// Non-numeric ids are a 400; numeric but out-of-range ids surface later as 404.
  static std::size_t parse_index(const std::string& text, const char* what, bool out_of_range_is_404) {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
      throw Error(ErrorCode::InvalidConfig, std::string(what) + " must be a non-negative integer");
    try {
      return std::stoull(text);
    } catch (const std::exception&) {
      throw Error(out_of_range_is_404 ? ErrorCode::OutOfRange : ErrorCode::InvalidConfig, std::string(what) + " is out of range");
    }
  }

  template <typename Body>
  static void guarded(httplib::Response& res, Body&& body) {
    try {
      body();
    } catch (const Error& e) {
      res.status = http_status(e.code());
      res.set_content(error_body(to_string(e.code()), e.detail()), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(error_body("INTERNAL", e.what()), "application/json");
    }
  }

  template <typename Handler>
  void get(httplib::Server& server, const std::string& pattern, Handler handler) {
    server.Get(pattern, [this, handler](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto session = sessions_.find(req.matches[1]);
        if (!session) {
          res.status = 404;
          res.set_content(error_body("UNKNOWN_SESSION", "no session " + std::string(req.matches[1])), "application/json");
          return;
        }
        ok(res, handler(*session, req));
      });
    });
  }

  ServiceOptions options_;
  DatasetRegistry datasets_;
  SessionStore sessions_;
};

}  // namespace layerscope
