#include <doctest.h>

#include <fstream>
#include <random>

#include "pccseg/image_io.hpp"
#include "test_support.hpp"

using namespace pcc;
using pcc::testing::TempDir;

namespace {

const std::filesystem::path kData = PCCSEG_TEST_DATA_DIR;

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("load_image decodes a 2x1 RGB PNG exactly") {
  TempDir dir;
  const std::vector<std::uint8_t> px = {255, 0, 0, 0, 0, 255};
  io::write_file(dir / "a.png", io::encode_png(2, 1, 3, px));
  const ImageBuffer img = io::load_image(dir / "a.png");
  CHECK(img.width == 2);
  CHECK(img.height == 1);
  CHECK(img.data == px);
}

TEST_CASE("load_image rejects empty and unknown files") {
  TempDir dir;
  write_text(dir / "empty.png", "");
  CHECK_THROWS_WITH_AS(io::load_image(dir / "empty.png"), doctest::Contains("decode failure"),
                       IoError);
  write_text(dir / "junk.png", "definitely not an image");
  CHECK_THROWS_AS(io::load_image(dir / "junk.png"), IoError);
  CHECK_THROWS_AS(io::load_image(dir / "missing.png"), IoError);
  // Valid signature, truncated body.
  const auto png = io::encode_png(4, 4, 3, std::vector<std::uint8_t>(48, 7));
  io::write_file(dir / "cut.png", std::span(png).first(png.size() / 2));
  CHECK_THROWS_AS(io::load_image(dir / "cut.png"), IoError);
}

TEST_CASE("alpha is discarded and grayscale is expanded") {
  TempDir dir;
  io::write_file(dir / "rgba.png", io::encode_png(1, 1, 4, std::vector<std::uint8_t>{1, 2, 3, 9}));
  CHECK(io::load_image(dir / "rgba.png").data == std::vector<std::uint8_t>{1, 2, 3});
  io::write_file(dir / "g.png", io::encode_png(1, 1, 1, std::vector<std::uint8_t>{77}));
  CHECK(io::load_image(dir / "g.png").data == std::vector<std::uint8_t>{77, 77, 77});
}

TEST_CASE("16-bit PNG keeps the high byte") {
  // Reference values from Pillow's decode of the same file (make_fixtures.py):
  // [4660, 43981, 255, 65280] -> high bytes [18, 171, 0, 255].
  const io::DecodedImage raw = io::decode_file(kData / "gray16.png");
  CHECK(raw.channels == 1);
  CHECK(raw.data == std::vector<std::uint8_t>{18, 171, 0, 255});
}

TEST_CASE("JPEG decodes close to a reference decoder") {
  const ImageBuffer img = io::load_image(kData / "ramp.jpg");
  REQUIRE(img.width == 8);
  REQUIRE(img.height == 8);
  // Pillow's decode of the same file; IDCT implementations may differ slightly.
  const std::pair<int, Rgb> expected[] = {
      {0, {0, 2, 121}}, {9, {15, 15, 127}}, {63, {113, 111, 135}}};
  for (const auto& [index, ref] : expected) {
    const Rgb got = img.at(index / 8, index % 8);
    CHECK(std::abs(got.r - ref.r) <= 3);
    CHECK(std::abs(got.g - ref.g) <= 3);
    CHECK(std::abs(got.b - ref.b) <= 3);
  }
}

TEST_CASE("decoding is deterministic") {
  const auto bytes = io::read_file(kData / "ramp.jpg");
  CHECK(io::image_from_bytes(bytes) == io::image_from_bytes(bytes));
}

TEST_CASE("load_scribbles maps palette colors and transparency") {
  TempDir dir;
  io::write_file(dir / "s.png",
                 io::encode_png(1, 2, 4, std::vector<std::uint8_t>{255, 0, 0, 255, 0, 0, 0, 0}));
  const LabelMap m = io::load_scribbles(dir / "s.png", 2);
  CHECK(m.labels == std::vector<Label>{0, kUnlabeled});

  io::write_file(dir / "bad.png",
                 io::encode_png(1, 1, 4, std::vector<std::uint8_t>{10, 20, 30, 255}));
  CHECK_THROWS_WITH_AS(io::load_scribbles(dir / "bad.png", 2),
                       doctest::Contains("unknown scribble color"), InputError);

  io::write_file(dir / "empty.png", io::encode_png(3, 2, 4, std::vector<std::uint8_t>(24, 0)));
  const LabelMap none = io::load_scribbles(dir / "empty.png");
  CHECK(std::all_of(none.labels.begin(), none.labels.end(),
                    [](Label l) { return l == kUnlabeled; }));

  // Palette entries past num_classes are rejected.
  io::write_file(dir / "blue.png", io::encode_png(1, 1, 4, std::vector<std::uint8_t>{0, 0, 255, 255}));
  CHECK(io::load_scribbles(dir / "blue.png", 3).labels[0] == 2);
  CHECK_THROWS_AS(io::load_scribbles(dir / "blue.png", 2), InputError);

  io::write_file(dir / "rgb.png", io::encode_png(1, 1, 3, std::vector<std::uint8_t>{255, 0, 0}));
  CHECK_THROWS_AS(io::load_scribbles(dir / "rgb.png"), InputError);
}

TEST_CASE("load_ground_truth follows the trimap convention") {
  TempDir dir;
  io::write_file(dir / "gt.png", io::encode_png(4, 1, 1, std::vector<std::uint8_t>{0, 128, 255, 1}));
  const LabelMap gt = io::load_ground_truth(dir / "gt.png");
  CHECK(gt.labels == std::vector<Label>{0, kIgnore, 1, kIgnore});
  CHECK(std::none_of(gt.labels.begin(), gt.labels.end(), [](Label l) { return l == kUnlabeled; }));

  io::write_file(dir / "rgb.png", io::encode_png(1, 1, 3, std::vector<std::uint8_t>{0, 0, 0}));
  CHECK_THROWS_AS(io::load_ground_truth(dir / "rgb.png"), InputError);
}

TEST_CASE("polygon files") {
  const CutPolygon rect = io::parse_polygon("[[0,0],[10,0],[10,10],[0,10]]");
  CHECK(rect.vertices.size() == 4);
  CHECK(rect.vertices[2] == Point{10, 10});
  CHECK_THROWS_WITH_AS(io::parse_polygon("[[0,0],[1,1]]"), doctest::Contains(">= 3 vertices"),
                       InputError);
  CHECK_THROWS_WITH_AS(io::parse_polygon("[[0,0],[10,10],[10,0],[0,10]]"),
                       doctest::Contains("self-intersecting"), InputError);
  CHECK_THROWS_AS(io::parse_polygon("[[0,0],[1,"), InputError);
  CHECK_THROWS_AS(io::parse_polygon("{\"a\": 1}"), InputError);
  CHECK_THROWS_AS(io::parse_polygon("[[0,0],[1,\"x\"],[2,2]]"), InputError);

  TempDir dir;
  write_text(dir / "p.json", "[[1.5, 2], [8, 2], [5, 9]]");
  CHECK(io::load_polygon(dir / "p.json").vertices.size() == 3);
}

TEST_CASE("polygon simplicity check") {
  // Collinear fold-back and a vertex touching a non-adjacent edge.
  CHECK_THROWS_AS(io::parse_polygon("[[0,0],[10,0],[5,0]]"), InputError);
  CHECK_THROWS_AS(io::parse_polygon("[[0,0],[10,0],[10,10],[5,0],[0,10]]"), InputError);
  CHECK_THROWS_AS(io::parse_polygon("[[0,0],[0,0],[10,10]]"), InputError);
  // Concave but simple.
  CHECK_NOTHROW(io::parse_polygon("[[0,0],[10,0],[10,10],[5,4],[0,10]]"));

  const CutPolygon tri = io::parse_polygon("[[0,0],[10,0],[0,10]]");
  CHECK(tri.contains({1, 1}));
  CHECK_FALSE(tri.contains({9, 9}));
}

TEST_CASE("save_mask") {
  TempDir dir;
  const LabelMap ones(5, 3, 1);
  io::save_mask(ones, dir / "m.png");
  const io::DecodedImage raw = io::decode_file(dir / "m.png");
  CHECK(raw.channels == 1);
  CHECK(std::all_of(raw.data.begin(), raw.data.end(), [](std::uint8_t v) { return v == 255; }));

  LabelMap holes(2, 2, 0);
  holes.labels[3] = kUnlabeled;
  CHECK_THROWS_AS(io::save_mask(holes, dir / "h.png"), InputError);

  CHECK(io::mask_level(1, 3) == 128);
  CHECK(io::mask_level(2, 3) == 255);
  CHECK(io::mask_level(0, 4) == 0);
}

TEST_CASE("save_mask then load_ground_truth round-trips binary maps") {
  TempDir dir;
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 17);
    const int h = 1 + static_cast<int>(rng() % 13);
    LabelMap m(w, h, 0);
    for (Label& l : m.labels) l = static_cast<Label>(rng() % 2);
    io::save_mask(m, dir / "rt.png", 2);
    CHECK(io::load_ground_truth(dir / "rt.png") == m);
  }
}

TEST_CASE("overlay marks only misclassified pixels red") {
  ImageBuffer img(3, 2);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<std::uint8_t>(40 * i);
  LabelMap labels(3, 2, 0);
  labels.labels[1] = 1;
  auto is_red = [](const ImageBuffer& b, std::size_t i) {
    return b.data[3 * i] == 255 && b.data[3 * i + 1] == 0 && b.data[3 * i + 2] == 0;
  };

  const ImageBuffer plain = io::render_overlay(img, labels);
  for (std::size_t i = 0; i < 6; ++i) CHECK_FALSE(is_red(plain, i));

  LabelMap gt = labels;
  const ImageBuffer same = io::render_overlay(img, labels, gt);
  for (std::size_t i = 0; i < 6; ++i) CHECK_FALSE(is_red(same, i));

  gt.labels[2] = 1;        // wrong
  gt.labels[4] = kIgnore;  // not scored
  const ImageBuffer marked = io::render_overlay(img, labels, gt);
  for (std::size_t i = 0; i < 6; ++i) CHECK(is_red(marked, i) == (i == 2));

  TempDir dir;
  io::save_overlay(img, labels, gt, dir / "o.png");
  CHECK(io::load_image(dir / "o.png") == marked);
}
