#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pccseg/benchmark.hpp"
#include "pccseg/image_io.hpp"
#include "test_support.hpp"

using namespace pcc;
using pcc::testing::TempDir;

namespace {

void write_case(const TempDir& dir, const std::string& id, int size, int per_class) {
  const auto f = testing::two_block_fixture(size, per_class);
  io::save_png(f.image, dir / (id + ".png"));
  testing::write_scribbles_png(f.scribbles, dir / (id + ".scribbles.png"));
  testing::write_trimap_png(f.truth, dir / (id + ".gt.png"));
}

std::string manifest_entry(const std::string& id) {
  return R"({"id": ")" + id + R"(", "image": ")" + id + R"(.png", "scribbles": ")" + id +
         R"(.scribbles.png", "ground_truth": ")" + id + R"(.gt.png"})";
}

BenchmarkOptions quick_options() {
  BenchmarkOptions o;
  o.pipeline.engine.max_stop = 500;
  return o;
}

std::string csv(const EvalReport& r) {
  std::ostringstream out;
  write_report_csv(r, out, {.include_timing = false});
  return out.str();
}

}  // namespace

TEST_CASE("manifest parsing resolves relative paths") {
  const auto m = parse_manifest(
      R"([{"id": "a", "image": "img/a.png", "scribbles": "/abs/s.png",
           "polygon": "a.json", "ground_truth": "gt/a.png"}])",
      "/data/set");
  REQUIRE(m.size() == 1);
  CHECK(m[0].id == "a");
  CHECK(m[0].image == std::filesystem::path("/data/set/img/a.png"));
  CHECK(m[0].scribbles == std::filesystem::path("/abs/s.png"));
  CHECK(m[0].polygon == std::filesystem::path("/data/set/a.json"));
  CHECK_THROWS_AS(parse_manifest(R"([{"id": "a"}])", "/"), InputError);
  CHECK_THROWS_AS(parse_manifest("{", "/"), InputError);
}

TEST_CASE("two images, three runs, both modes") {
  TempDir dir;
  write_case(dir, "left", 32, 3);
  write_case(dir, "right", 24, 2);
  std::ofstream(dir / "m.json") << "[" << manifest_entry("left") << "," << manifest_entry("right")
                                << "]";
  BenchmarkOptions o = quick_options();
  o.runs = 3;
  o.modes = {FeatureMode::Proposed, FeatureMode::Reference};
  const EvalReport r = benchmark(load_manifest(dir / "m.json"), o);
  CHECK(r.warnings.empty());
  REQUIRE(r.rows.size() == 12);
  CHECK(r.rows.front().image == "left");
  CHECK(r.rows.back().image == "right");
  for (const ReportRow& row : r.rows) {
    CHECK((row.error >= 0.0 && row.error <= 1.0));
    CHECK(row.nodes > 0);
  }
  const auto s = r.summaries();
  REQUIRE(s.size() == 2);
  CHECK(s[0].rows == 6);
  double mean = 0.0;
  for (const ReportRow& row : r.rows)
    if (row.mode == s[0].mode) mean += row.error / 6.0;
  CHECK(s[0].mean_error == doctest::Approx(mean));
  CHECK(r.scatter().size() == 4);

  std::istringstream lines(csv(r));
  std::string header;
  std::getline(lines, header);
  CHECK(header == "image,mode,run,error,seconds,nodes,edges,iterations");
  int count = 0;
  for (std::string line; std::getline(lines, line);) ++count;
  CHECK(count == 12);

  std::ostringstream js;
  write_summary_json(r, js);
  const auto j = nlohmann::json::parse(js.str());
  CHECK(j.is_object());

  std::ostringstream sc;
  write_scatter_csv(r, sc);
  CHECK(sc.str().rfind("image,mode,mean_error,mean_seconds\n", 0) == 0);
}

TEST_CASE("empty manifest gives an empty report with a warning") {
  const EvalReport r = benchmark({}, quick_options());
  CHECK(r.rows.empty());
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("empty") != std::string::npos);
  CHECK(r.summaries().empty());
}

TEST_CASE("missing files are skipped with a warning") {
  TempDir dir;
  write_case(dir, "ok", 24, 2);
  write_case(dir, "broken", 24, 2);
  std::filesystem::remove(dir / "broken.gt.png");
  std::ofstream(dir / "m.json") << "[" << manifest_entry("ok") << "," << manifest_entry("broken")
                                << "]";
  BenchmarkOptions o = quick_options();
  o.runs = 2;
  const EvalReport r = benchmark(load_manifest(dir / "m.json"), o);
  CHECK(r.rows.size() == 2);
  for (const ReportRow& row : r.rows) CHECK(row.image == "ok");
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("broken") != std::string::npos);
}

TEST_CASE("benchmark CSV is reproducible for a fixed base seed") {
  TempDir dir;
  write_case(dir, "a", 32, 3);
  std::ofstream(dir / "m.json") << "[" << manifest_entry("a") << "]";
  BenchmarkOptions o = quick_options();
  o.runs = 3;
  o.base_seed = 17;
  const auto m = load_manifest(dir / "m.json");
  const std::string first = csv(benchmark(m, o));
  o.jobs = 3;
  CHECK(csv(benchmark(m, o)) == first);
  o.base_seed = 18;
  o.jobs = 1;
  const EvalReport shifted = benchmark(m, o);
  CHECK(shifted.rows.front().run == 0);
}

TEST_CASE("proposed mode is no worse than reference on the two-block fixture") {
  TempDir dir;
  write_case(dir, "blocks", 64, 5);
  std::ofstream(dir / "m.json") << "[" << manifest_entry("blocks") << "]";
  BenchmarkOptions o;
  o.runs = 3;
  o.modes = {FeatureMode::Proposed, FeatureMode::Reference};
  const EvalReport r = benchmark(load_manifest(dir / "m.json"), o);
  const auto s = r.summaries();
  REQUIRE(s.size() == 2);
  const ModeSummary& proposed = s[0].mode == FeatureMode::Proposed ? s[0] : s[1];
  const ModeSummary& reference = s[0].mode == FeatureMode::Proposed ? s[1] : s[0];
  MESSAGE("proposed " << proposed.mean_error << " reference " << reference.mean_error);
  CHECK(proposed.mean_error <= reference.mean_error);
}

TEST_CASE("side-file naming") {
  CHECK(summary_path_for("out/report.csv") == std::filesystem::path("out/report.summary.json"));
  CHECK(scatter_path_for("out/report.csv") == std::filesystem::path("out/report.scatter.csv"));
}
