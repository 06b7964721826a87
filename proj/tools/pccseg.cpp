// pccseg: batch segmentation, benchmarking and the interactive HTTP service.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "pccseg/benchmark.hpp"
#include "pccseg/image_io.hpp"
#include "pccseg/pipeline.hpp"
#include "pccseg/service.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitPipeline = 3;

struct SegmentArgs {
  std::string image;
  std::string scribbles;
  std::string polygon;
  std::string mode = "proposed";
  std::size_t max_pixels = 18'000;
  std::uint64_t seed = 0;
  double delta_v = 0.1;
  double p_grd = 0.5;
  std::uint64_t max_ite = 1'000'000;
  std::uint64_t max_stop = 15'000;
  double control_stop = 0.001;
  std::string out_mask;
  std::string out_overlay;
  std::string gt;
  std::string stats_json;
  bool check_invariants = false;
};

struct BenchmarkArgs {
  std::string manifest;
  int runs = 30;
  std::string mode = "both";
  std::string report;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::size_t max_pixels = 18'000;
  std::uint64_t max_ite = 1'000'000;
  std::uint64_t max_stop = 15'000;
  bool no_timing = false;
};

struct ServeArgs {
  std::string bind;
  long ttl = -1;
};


int run_segment(const SegmentArgs& a) {
  pcc::PipelineConfig cfg;
  cfg.mode = pcc::feature_mode_from_string(a.mode);
  cfg.max_pixels = a.max_pixels;
  cfg.engine.seed = a.seed;
  cfg.engine.delta_v = a.delta_v;
  cfg.engine.p_grd = a.p_grd;
  cfg.engine.max_ite = a.max_ite;
  cfg.engine.max_stop = a.max_stop;
  cfg.engine.control_stop = a.control_stop;
  cfg.engine.check_invariants = a.check_invariants;

  const pcc::ImageBuffer image = pcc::io::load_image(a.image);
  const pcc::LabelMap scribbles = pcc::io::load_scribbles(a.scribbles);
  if (scribbles.width != image.width || scribbles.height != image.height)
    throw pcc::InputError("scribbles and image dimensions differ");
  std::optional<pcc::CutPolygon> polygon;
  if (!a.polygon.empty()) polygon = pcc::io::load_polygon(a.polygon);
  std::optional<pcc::LabelMap> gt;
  if (!a.gt.empty()) gt = pcc::io::load_ground_truth(a.gt);

  const pcc::SegmentationResult res = pcc::segment(image, scribbles, polygon, cfg);
  pcc::io::save_mask(res.labels, a.out_mask, res.num_classes);
  if (!a.out_overlay.empty()) pcc::io::save_overlay(image, res.labels, gt, a.out_overlay);
  if (!a.stats_json.empty()) {
    const bool ref = cfg.mode == pcc::FeatureMode::Reference;
    nlohmann::json stats{{"mode", pcc::to_string(cfg.mode)},
                         {"features", ref ? pcc::kReferenceFeatureCount : pcc::kProposedFeatureCount},
                         {"feature_neighbors",
                          ref ? pcc::kReferenceFeatureNeighbors : pcc::kProposedFeatureNeighbors},
                         {"seed", cfg.engine.seed},
                         {"iterations", res.stats.iterations_executed},
                         {"stop_reason", pcc::to_string(res.stats.stop_reason)},
                         {"mean_max_domination", res.stats.mean_max_domination},
                         {"invariant_violations", res.stats.invariant_violations},
                         {"nodes", res.network_nodes},
                         {"edges", res.network_edges},
                         {"particles", res.particles}};
    std::ofstream out(a.stats_json);
    out << stats.dump(2) << '\n';
    if (!out) throw pcc::IoError("cannot write " + a.stats_json);
  }
  std::cerr << "nodes=" << res.network_nodes << " edges=" << res.network_edges
            << " iterations=" << res.stats.iterations_executed
            << " stop=" << pcc::to_string(res.stats.stop_reason)
            << " seconds=" << res.stats.wall_seconds << '\n';
  if (gt) {
    std::printf("error_rate=%.6f\n", pcc::error_rate(res.labels, *gt));
  }
  return 0;
}

int run_benchmark(const BenchmarkArgs& a) {
  pcc::BenchmarkOptions opts;
  if (a.mode == "both") {
    opts.modes = {pcc::FeatureMode::Proposed, pcc::FeatureMode::Reference};
  } else {
    opts.modes = {pcc::feature_mode_from_string(a.mode)};
  }
  opts.runs = a.runs;
  opts.base_seed = a.seed;
  opts.jobs = a.jobs;
  opts.pipeline.max_pixels = a.max_pixels;
  opts.pipeline.engine.max_ite = a.max_ite;
  opts.pipeline.engine.max_stop = a.max_stop;

  const auto manifest = pcc::load_manifest(a.manifest);
  const pcc::EvalReport report = pcc::benchmark(manifest, opts);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';

  const pcc::CsvOptions csv{!a.no_timing};
  {
    std::ofstream out(a.report);
    pcc::write_report_csv(report, out, csv);
    if (!out) throw pcc::IoError("cannot write " + a.report);
  }
  {
    std::ofstream out(pcc::summary_path_for(a.report));
    pcc::write_summary_json(report, out, csv);
  }
  {
    std::ofstream out(pcc::scatter_path_for(a.report));
    pcc::write_scatter_csv(report, out, csv);
  }
  std::printf("rows=%zu\n", report.rows.size());
  for (const auto& s : report.summaries()) {
    std::printf("%s: mean_error=%.6f mean_seconds=%.3f mean_nodes=%.1f mean_edges=%.1f\n",
                pcc::to_string(s.mode), s.mean_error, s.mean_seconds, s.mean_nodes,
                s.mean_edges);
  }
  return 0;
}

int run_serve(const ServeArgs& a) {
  pcc::service::ServiceConfig cfg = pcc::service::config_from_env();
  if (a.ttl >= 0) cfg.session_ttl = std::chrono::seconds(a.ttl);
  auto [host, port] = pcc::service::bind_address_from_env();
  if (!a.bind.empty()) {
    const auto colon = a.bind.rfind(':');
    if (colon == std::string::npos) throw pcc::InputError("--bind expects host:port");
    host = a.bind.substr(0, colon);
    port = std::stoi(a.bind.substr(colon + 1));
  }
  pcc::service::Service service(cfg);
  httplib::Server server;
  service.mount(server);
  std::cerr << "listening on " << host << ':' << port << '\n';
  if (!server.listen(host, port)) throw pcc::IoError("cannot bind " + host + ":" + std::to_string(port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive image segmentation by particle competition and cooperation"};
  app.require_subcommand(1);

  SegmentArgs seg;
  auto* segment = app.add_subcommand("segment", "Segment one image from scribbles");
  segment->add_option("--image", seg.image, "Input PNG or JPEG")->required();
  segment->add_option("--scribbles", seg.scribbles, "RGBA scribble PNG")->required();
  segment->add_option("--polygon", seg.polygon, "JSON cut polygon");
  segment->add_option("--mode", seg.mode, "proposed | reference")
      ->check(CLI::IsMember({"proposed", "reference"}))
      ->capture_default_str();
  segment->add_option("--max-pixels", seg.max_pixels, "Node budget after reduction")
      ->check(CLI::Range(std::size_t{193}, std::numeric_limits<std::size_t>::max()))
      ->capture_default_str();
  segment->add_option("--seed", seg.seed, "Random seed")->capture_default_str();
  segment->add_option("--delta-v", seg.delta_v, "Domination change per visit")->capture_default_str();
  segment->add_option("--p-grd", seg.p_grd, "Probability of a greedy move")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  segment->add_option("--max-ite", seg.max_ite, "Iteration cap")->capture_default_str();
  segment->add_option("--max-stop", seg.max_stop, "Iterations between stability checks")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  segment->add_option("--control-stop", seg.control_stop, "Stability threshold")->capture_default_str();
  segment->add_option("--out-mask", seg.out_mask, "Output mask PNG")->required();
  segment->add_option("--out-overlay", seg.out_overlay, "Output overlay PNG");
  segment->add_option("--gt", seg.gt, "Ground-truth trimap; prints error_rate");
  segment->add_option("--stats-json", seg.stats_json, "Write run statistics as JSON");
  segment->add_flag("--check-invariants", seg.check_invariants,
                    "Verify conservation after every visit");

  BenchmarkArgs bench;
  auto* benchmark = app.add_subcommand("benchmark", "Evaluate a dataset manifest");
  benchmark->add_option("--manifest", bench.manifest, "JSON manifest")->required();
  benchmark->add_option("--runs", bench.runs, "Runs per image and mode")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  benchmark->add_option("--mode", bench.mode, "proposed | reference | both")
      ->check(CLI::IsMember({"proposed", "reference", "both"}))
      ->capture_default_str();
  benchmark->add_option("--report", bench.report, "Report CSV path")->required();
  benchmark->add_option("--seed", bench.seed, "Base seed; run r uses seed + r")->capture_default_str();
  benchmark->add_option("--jobs", bench.jobs, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  benchmark->add_option("--max-pixels", bench.max_pixels, "Node budget after reduction")
      ->check(CLI::Range(std::size_t{193}, std::numeric_limits<std::size_t>::max()))
      ->capture_default_str();
  benchmark->add_option("--max-ite", bench.max_ite, "Iteration cap")->capture_default_str();
  benchmark->add_option("--max-stop", bench.max_stop, "Iterations between stability checks")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  benchmark->add_flag("--no-timing", bench.no_timing,
                      "Write 0 for timing columns so reports are byte-stable");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP session service");
  serve_cmd->add_option("--bind", serve.bind, "host:port (default $PCC_BIND or 127.0.0.1:8080)");
  serve_cmd->add_option("--ttl", serve.ttl, "Session idle timeout in seconds ($PCC_SESSION_TTL)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*segment) return run_segment(seg);
    if (*benchmark) return run_benchmark(bench);
    if (*serve_cmd) return run_serve(serve);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPipeline;
  }
  return kExitUsage;
}
