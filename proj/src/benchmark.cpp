#include "pccseg/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "pccseg/image_io.hpp"

namespace pcc {

namespace fs = std::filesystem;

std::vector<ManifestEntry> parse_manifest(const std::string& json_text,
                                          const fs::path& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed manifest: ") + e.what());
  }
  if (!doc.is_array()) throw InputError("malformed manifest: expected a JSON list");
  auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  std::vector<ManifestEntry> out;
  for (const auto& rec : doc) {
    if (!rec.is_object()) throw InputError("malformed manifest: records must be objects");
    for (const char* key : {"id", "image", "scribbles", "ground_truth"}) {
      if (!rec.contains(key) || !rec[key].is_string())
        throw InputError(std::string("malformed manifest: record lacks string '") + key + "'");
    }
    ManifestEntry e;
    e.id = rec["id"].get<std::string>();
    e.image = resolve(rec["image"].get<std::string>());
    e.scribbles = resolve(rec["scribbles"].get<std::string>());
    e.ground_truth = resolve(rec["ground_truth"].get<std::string>());
    if (rec.contains("polygon") && !rec["polygon"].is_null()) {
      if (!rec["polygon"].is_string())
        throw InputError("malformed manifest: polygon must be a path string");
      e.polygon = resolve(rec["polygon"].get<std::string>());
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
  const auto bytes = io::read_file(path);
  return parse_manifest(std::string(bytes.begin(), bytes.end()), path.parent_path());
}

namespace {

struct LoadedEntry {
  std::string id;
  ImageBuffer image;
  LabelMap scribbles;
  std::optional<CutPolygon> polygon;
  LabelMap ground_truth;
};

struct Cell {
  std::size_t entry = 0;
  FeatureMode mode = FeatureMode::Proposed;
  int run = 0;
};

std::string format_double(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

EvalReport benchmark(const std::vector<ManifestEntry>& manifest,
                     const BenchmarkOptions& options) {
  EvalReport report;
  if (manifest.empty()) {
    report.warnings.push_back("manifest is empty");
    return report;
  }
  if (options.runs < 0) throw InputError("runs must be >= 0");

  std::vector<LoadedEntry> entries;
  for (const ManifestEntry& m : manifest) {
    try {
      LoadedEntry e;
      e.id = m.id;
      for (const fs::path* p : {&m.image, &m.scribbles, &m.ground_truth}) {
        if (!fs::exists(*p)) throw IoError("missing file " + p->string());
      }
      if (m.polygon && !fs::exists(*m.polygon))
        throw IoError("missing file " + m.polygon->string());
      e.image = io::load_image(m.image);
      e.scribbles = io::load_scribbles(m.scribbles);
      e.ground_truth = io::load_ground_truth(m.ground_truth);
      if (m.polygon) e.polygon = io::load_polygon(*m.polygon);
      if (e.scribbles.width != e.image.width || e.scribbles.height != e.image.height ||
          e.ground_truth.width != e.image.width || e.ground_truth.height != e.image.height)
        throw InputError("image, scribbles and ground truth dimensions differ");
      entries.push_back(std::move(e));
    } catch (const Error& err) {
      report.warnings.push_back("skipping '" + m.id + "': " + err.what());
    }
  }

  const std::size_t load_warnings = report.warnings.size();
  std::vector<Cell> cells;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    for (FeatureMode mode : options.modes) {
      for (int r = 0; r < options.runs; ++r) cells.push_back({e, mode, r});
    }
  }

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& cell = cells[i];
      const LoadedEntry& e = entries[cell.entry];
      PipelineConfig cfg = options.pipeline;
      cfg.mode = cell.mode;
      cfg.engine.seed = options.base_seed + static_cast<std::uint64_t>(cell.run);
      try {
        const SegmentationResult res = segment(e.image, e.scribbles, e.polygon, cfg);
        ReportRow row{e.id,
                      cell.mode,
                      cell.run,
                      error_rate(res.labels, e.ground_truth),
                      res.stats.wall_seconds,
                      res.network_nodes,
                      res.network_edges,
                      res.stats.iterations_executed};
        std::lock_guard lock(mu);
        report.rows.push_back(std::move(row));
      } catch (const Error& err) {
        std::lock_guard lock(mu);
        report.warnings.push_back("'" + e.id + "' " + to_string(cell.mode) + " run " +
                                  std::to_string(cell.run) + " failed: " + err.what());
      }
    }
  };
  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  std::sort(report.warnings.begin() + static_cast<std::ptrdiff_t>(load_warnings),
            report.warnings.end());
  std::sort(report.rows.begin(), report.rows.end(), [](const ReportRow& a, const ReportRow& b) {
    return std::tie(a.image, a.mode, a.run) < std::tie(b.image, b.mode, b.run);
  });
  return report;
}

std::vector<ModeSummary> EvalReport::summaries() const {
  std::map<FeatureMode, ModeSummary> by_mode;
  for (const ReportRow& r : rows) {
    ModeSummary& s = by_mode[r.mode];
    s.mode = r.mode;
    ++s.rows;
    s.mean_error += r.error;
    s.mean_seconds += r.seconds;
    s.mean_nodes += static_cast<double>(r.nodes);
    s.mean_edges += static_cast<double>(r.edges);
    s.mean_iterations += static_cast<double>(r.iterations);
  }
  std::vector<ModeSummary> out;
  for (auto& [mode, s] : by_mode) {
    const double n = static_cast<double>(s.rows);
    s.mean_error /= n;
    s.mean_seconds /= n;
    s.mean_nodes /= n;
    s.mean_edges /= n;
    s.mean_iterations /= n;
    out.push_back(s);
  }
  return out;
}

std::vector<ScatterPoint> EvalReport::scatter() const {
  std::map<std::pair<std::string, FeatureMode>, std::pair<ScatterPoint, std::size_t>> acc;
  for (const ReportRow& r : rows) {
    auto& [pt, count] = acc[{r.image, r.mode}];
    pt.image = r.image;
    pt.mode = r.mode;
    pt.mean_error += r.error;
    pt.mean_seconds += r.seconds;
    ++count;
  }
  std::vector<ScatterPoint> out;
  for (auto& [key, value] : acc) {
    auto& [pt, count] = value;
    pt.mean_error /= static_cast<double>(count);
    pt.mean_seconds /= static_cast<double>(count);
    out.push_back(pt);
  }
  return out;
}

void write_report_csv(const EvalReport& report, std::ostream& out, CsvOptions opts) {
  out << "image,mode,run,error,seconds,nodes,edges,iterations\n";
  for (const ReportRow& r : report.rows) {
    out << r.image << ',' << to_string(r.mode) << ',' << r.run << ','
        << format_double("%.8f", r.error) << ','
        << format_double("%.4f", opts.include_timing ? r.seconds : 0.0) << ',' << r.nodes
        << ',' << r.edges << ',' << r.iterations << '\n';
  }
}

void write_scatter_csv(const EvalReport& report, std::ostream& out, CsvOptions opts) {
  out << "image,mode,mean_error,mean_seconds\n";
  for (const ScatterPoint& p : report.scatter()) {
    out << p.image << ',' << to_string(p.mode) << ',' << format_double("%.8f", p.mean_error)
        << ',' << format_double("%.4f", opts.include_timing ? p.mean_seconds : 0.0) << '\n';
  }
}

void write_summary_json(const EvalReport& report, std::ostream& out, CsvOptions opts) {
  nlohmann::json doc;
  doc["rows"] = report.rows.size();
  doc["modes"] = nlohmann::json::array();
  for (const ModeSummary& s : report.summaries()) {
    doc["modes"].push_back({{"mode", to_string(s.mode)},
                            {"rows", s.rows},
                            {"mean_error", s.mean_error},
                            {"mean_seconds", opts.include_timing ? s.mean_seconds : 0.0},
                            {"mean_nodes", s.mean_nodes},
                            {"mean_edges", s.mean_edges},
                            {"mean_iterations", s.mean_iterations}});
  }
  doc["warnings"] = report.warnings;
  out << doc.dump(2) << '\n';
}

fs::path summary_path_for(const fs::path& report) {
  fs::path p = report;
  p.replace_extension(".summary.json");
  return p;
}

fs::path scatter_path_for(const fs::path& report) {
  fs::path p = report;
  p.replace_extension(".scatter.csv");
  return p;
}

}  // namespace pcc
