#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "layerscope/service.hpp"
#include "layerscope/session.hpp"
#include "layerscope/synthetic.hpp"

namespace layerscope::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kPrecondition = 2, kIo = 3 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::FormatError:
    case ErrorCode::CountMismatch:
    case ErrorCode::NonfiniteValue: return kValidation;
    case ErrorCode::IoError: return kIo;
    default: return kPrecondition;
  }
}

struct ComputeOptions {
  std::string manifest;
  std::string filter;
  std::vector<std::string> projections{"pca"};
  std::string layers;
  std::optional<std::int64_t> k;
  std::string k_mode = "fixed";
  double width = 200.0;
  double height = 200.0;
  double gap = 50.0;
  std::optional<double> padding;
  std::string metric_2d = "cosine";
  std::string metric_hd = "cosine";
  std::string color_by = "none";
  std::string summary_feature;
  std::string bundle_property;
  std::size_t max_points = kDefaultMaxPoints;
  std::string out = ".";
};

/// Session config in the same JSON form the service accepts.
inline json compute_request(const ComputeOptions& o, const std::string& dataset) {
  json projections = json::array();
  for (const auto& p : o.projections) projections.push_back(p);
  json j = {{"dataset", dataset},
            {"filter", o.filter},
            {"projections", projections},
            {"clustering", {{"metric_2d", o.metric_2d}, {"metric_hd", o.metric_hd}}},
            {"metrics", {{"k_mode", o.k_mode}}},
            {"layout", {{"width", o.width}, {"height", o.height}, {"gap", o.gap}}},
            {"color_by", o.color_by}};
  if (o.k) j["metrics"]["k"] = *o.k;
  if (o.padding) j["layout"]["padding"] = *o.padding;
  if (!o.summary_feature.empty()) j["summary_feature"] = o.summary_feature;
  if (!o.bundle_property.empty()) j["bundle_property"] = o.bundle_property;
  if (!o.layers.empty()) {
    const auto dash = o.layers.find('-');
    try {
      if (dash == std::string::npos) {
        const auto l = std::stoull(o.layers);
        j["layers"] = {l, l};
      } else {
        j["layers"] = {std::stoull(o.layers.substr(0, dash)), std::stoull(o.layers.substr(dash + 1))};
      }
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "--layers must look like A-B");
    }
  }
  return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

inline int cmd_validate(const std::string& manifest, std::ostream& out, std::ostream& err) {
  try {
    const auto ds = load_dataset(manifest);
    out << "ok: dataset '" << ds.name << "' with " << ds.n_points() << " points, " << ds.n_layers() << " layers, dim "
        << ds.embeddings.dim << ", " << ds.external_projections.size() << " external projection(s)\n";
    return kOk;
  } catch (const Error& e) {
    err << "invalid: " << e.what() << '\n';
    return kValidation;
  }
}

inline int cmd_compute(const ComputeOptions& o, std::ostream& out, std::ostream& err) {
  try {
    auto dataset = std::make_shared<const Dataset>(load_dataset(o.manifest));
    const auto config = session_config_from_json(compute_request(o, dataset->name));
    const auto session = compute_session(dataset, config, o.max_points);
    const std::filesystem::path dir(o.out);
    std::filesystem::create_directories(dir);
    write_text(dir / "layout.json", layout_json(session).dump());
    write_text(dir / "metrics.json", metrics_json(session).dump());
    write_text(dir / "matrices.json", matrices_json(session).dump());
    write_text(dir / "summaries.json", summaries_json(session).dump());
    out << "session " << session.id << ": " << session.n() << " points, " << session.hd.size() << " layers -> " << dir.string() << '\n';
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  }
}

inline int cmd_serve(const std::string& data_dir, const std::string& host, int port, std::size_t max_points, std::ostream& out,
                     std::ostream& err) {
  try {
    Service service({data_dir, max_points});
    httplib::Server server;
    use_exclusive_port(server);
    service.register_routes(server);
    if (!server.bind_to_port(host, port)) {
      err << "error: cannot listen on " << host << ":" << port << " (port in use?)\n";
      return kIo;
    }
    out << "serving " << data_dir << " on http://" << host << ":" << port << std::endl;
    server.listen_after_bind();
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  }
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Layer-wise embedding projection explorer"};
  app.require_subcommand(1);

  std::string manifest;
  auto* validate = app.add_subcommand("validate", "Check a dataset manifest and its files");
  validate->add_option("manifest,--manifest", manifest, "Manifest JSON path")->required();

  ComputeOptions co;
  auto* compute = app.add_subcommand("compute", "Compute a session offline and write its JSON payloads");
  compute->add_option("--manifest", co.manifest, "Manifest JSON path")->required();
  compute->add_option("--filter", co.filter, "Filter expression, e.g. 'token==\"cell\" AND POS==\"NOUN\"'");
  compute->add_option("--projection", co.projections, "pca or external:NAME (repeat for two rows)")->expected(1, 2);
  compute->add_option("--layers", co.layers, "Layer range A-B");
  compute->add_option("--k", co.k, "Neighborhood size for k-NN metrics");
  compute->add_option("--k-mode", co.k_mode, "fixed or cluster")->check(CLI::IsMember({"fixed", "cluster"}));
  compute->add_option("--width", co.width, "Frame width");
  compute->add_option("--height", co.height, "Frame height");
  compute->add_option("--gap", co.gap, "Gap between frames");
  compute->add_option("--padding", co.padding, "Cluster stretching padding (default 2% of height)");
  compute->add_option("--metric-2d", co.metric_2d, "Clustering metric in 2D")->check(CLI::IsMember({"cosine", "euclidean"}));
  compute->add_option("--metric-hd", co.metric_hd, "Clustering metric in HD")->check(CLI::IsMember({"cosine", "euclidean"}));
  compute->add_option("--color-by", co.color_by, "Feature kind or metric id used for coloring");
  compute->add_option("--summary-feature", co.summary_feature, "Feature kind for layout summary labels");
  compute->add_option("--bundle-property", co.bundle_property, "Feature kind used as the bundling property");
  compute->add_option("--max-points", co.max_points, "Point cap");
  compute->add_option("--out", co.out, "Output directory");

  std::string data_dir = ".";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t max_points = kDefaultMaxPoints;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--data-dir", data_dir, "Directory with dataset manifests")->envname("LAYERSCOPE_DATA_DIR");
  serve->add_option("--port", port, "TCP port")->envname("LAYERSCOPE_PORT");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--max-points", max_points, "Point cap")->envname("LAYERSCOPE_MAX_POINTS");

  SyntheticSpec synth_spec;
  std::string synth_out = ".";
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset with planted clusters");
  synth->add_option("--out", synth_out, "Output directory");
  synth->add_option("--name", synth_spec.name, "Dataset name");
  synth->add_option("--per-cluster", synth_spec.per_cluster, "Points per planted cluster");
  synth->add_option("--layers", synth_spec.n_layers, "Number of layers");
  synth->add_option("--merge-layer", synth_spec.merge_layer, "First layer where two planted clusters coincide");
  synth->add_option("--dim", synth_spec.dim, "Embedding dimension");
  synth->add_option("--seed", synth_spec.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kValidation;
  }

  if (*validate) return cmd_validate(manifest, out, err);
  if (*compute) return cmd_compute(co, out, err);
  if (*serve) return cmd_serve(data_dir, host, port, max_points, out, err);
  if (*synth) {
    try {
      const auto path = save_dataset(make_synthetic_dataset(synth_spec), synth_out, synth_spec.name);
      out << "wrote " << path.string() << '\n';
      return kOk;
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return exit_code_for(e.code());
    }
  }
  return kOk;
}

}  // namespace layerscope::cli
