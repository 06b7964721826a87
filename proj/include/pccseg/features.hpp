#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pccseg/types.hpp"

namespace pcc {

/// Proposed: 10 features per pixel. Reference: the older 23-feature set.
enum class FeatureMode { Proposed, Reference };

const char* to_string(FeatureMode mode);
FeatureMode feature_mode_from_string(const std::string& name);

inline constexpr std::size_t kProposedFeatureCount = 10;
inline constexpr std::size_t kReferenceFeatureCount = 23;

/// Row-major n x d matrix, one row per pixel in raster order.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  bool normalized = false;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t n, std::size_t d) : rows(n), cols(d), values(n * d, 0.0) {}

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

struct Hsv {
  double h = 0.0;  // [0, 1), fraction of a turn
  double s = 0.0;
  double v = 0.0;
};

struct ExcessColors {
  double red = 0.0;
  double green = 0.0;
  double blue = 0.0;
};

/// Hexcone HSV; every component in [0, 1].
Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// max(r, g, b) / 255.
double hsv_value(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// ExR = 1.4r - g, ExG = 2g - r - b, ExB = 1.4b - g on raw channels.
ExcessColors excess_colors(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// BT.601 luma rounded to the nearest integer.
std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Otsu threshold t: pixels with gray > t are foreground. Maximizes the
/// between-class variance over thresholds that leave both classes nonempty,
/// smallest t on ties; a single-level histogram returns that level.
int otsu_threshold(std::span<const std::uint64_t, 256> histogram);

std::array<std::uint64_t, 256> luma_histogram(const ImageBuffer& image);

/// Unnormalized features in raster order.
///   Proposed:  row, col, R, G, B, V, ExR, ExG, ExB, otsu bit
///   Reference: row, col, R, G, B, H, S, V, 3x3 mean of R..V (6), 3x3 std of
///              R..V (6), ExR, ExG, ExB
FeatureMatrix extract_features(const ImageBuffer& image, FeatureMode mode);

/// Per-column z-score with the population standard deviation. Constant
/// columns become all zero.
FeatureMatrix z_normalize(FeatureMatrix m);

}  // namespace pcc
