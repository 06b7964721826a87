#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pccseg/pipeline.hpp"

namespace pcc {

struct ManifestEntry {
  std::string id;
  std::filesystem::path image;
  std::filesystem::path scribbles;
  std::optional<std::filesystem::path> polygon;
  std::filesystem::path ground_truth;
};

/// JSON list of {id, image, scribbles, polygon?, ground_truth}. Relative paths
/// resolve against the manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
std::vector<ManifestEntry> parse_manifest(const std::string& json_text,
                                          const std::filesystem::path& base_dir);

struct BenchmarkOptions {
  std::vector<FeatureMode> modes{FeatureMode::Proposed};
  int runs = 1;
  std::uint64_t base_seed = 0;  // run r uses base_seed + r
  int jobs = 1;
  PipelineConfig pipeline;
};

struct ReportRow {
  std::string image;
  FeatureMode mode = FeatureMode::Proposed;
  int run = 0;
  double error = 0.0;
  double seconds = 0.0;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::uint64_t iterations = 0;
};

struct ModeSummary {
  FeatureMode mode = FeatureMode::Proposed;
  std::size_t rows = 0;
  double mean_error = 0.0;
  double mean_seconds = 0.0;
  double mean_nodes = 0.0;
  double mean_edges = 0.0;
  double mean_iterations = 0.0;
};

struct ScatterPoint {
  std::string image;
  FeatureMode mode = FeatureMode::Proposed;
  double mean_error = 0.0;
  double mean_seconds = 0.0;
};

struct EvalReport {
  std::vector<ReportRow> rows;  // sorted by (image, mode, run)
  std::vector<std::string> warnings;

  std::vector<ModeSummary> summaries() const;
  std::vector<ScatterPoint> scatter() const;
};

/// Runs every (image, mode, run) cell. Unreadable entries are skipped with a
/// warning; a failing cell is reported as a warning too.
EvalReport benchmark(const std::vector<ManifestEntry>& manifest, const BenchmarkOptions& options);

struct CsvOptions {
  bool include_timing = true;  // false writes 0 seconds, for byte-stable output
};

/// Header: image,mode,run,error,seconds,nodes,edges,iterations
void write_report_csv(const EvalReport& report, std::ostream& out, CsvOptions opts = {});
/// Header: image,mode,mean_error,mean_seconds
void write_scatter_csv(const EvalReport& report, std::ostream& out, CsvOptions opts = {});
void write_summary_json(const EvalReport& report, std::ostream& out, CsvOptions opts = {});

/// report.csv -> report.summary.json and report.scatter.csv next to it.
std::filesystem::path summary_path_for(const std::filesystem::path& report);
std::filesystem::path scatter_path_for(const std::filesystem::path& report);

}  // namespace pcc
