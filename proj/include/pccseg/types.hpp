#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcc {

/// Per-pixel class annotation. Non-negative values are class indices.
using Label = std::int32_t;

inline constexpr Label kUnlabeled = -1;  // scribble maps: no annotation
inline constexpr Label kIgnore = -2;     // ground truth: excluded from scoring

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when caller-supplied data violates a precondition (bad scribbles,
/// malformed polygon, too few nodes). The HTTP layer maps this to 422.
class InputError : public Error {
 public:
  using Error::Error;
};

/// File-system or codec failure.
class IoError : public Error {
 public:
  using Error::Error;
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Row-major RGB raster, 8 bits per channel.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  ImageBuffer() = default;
  ImageBuffer(int w, int h);

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  Rgb at(int row, int col) const {
    const std::size_t i = 3 * (static_cast<std::size_t>(row) * width + col);
    return {data[i], data[i + 1], data[i + 2]};
  }
  void set(int row, int col, Rgb c) {
    const std::size_t i = 3 * (static_cast<std::size_t>(row) * width + col);
    data[i] = c.r;
    data[i + 1] = c.g;
    data[i + 2] = c.b;
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

/// Row-major per-pixel labels.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<Label> labels;

  LabelMap() = default;
  LabelMap(int w, int h, Label fill = kUnlabeled);

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  Label at(int row, int col) const {
    return labels[static_cast<std::size_t>(row) * width + col];
  }
  Label& at(int row, int col) {
    return labels[static_cast<std::size_t>(row) * width + col];
  }

  /// Number of classes implied by the largest class index present (0 if none).
  int implied_classes() const;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

/// Continuous image-plane point: x runs along columns, y along rows. The
/// center of pixel (row, col) sits at (col + 0.5, row + 0.5).
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Simple polygon delimiting the region of interest.
struct CutPolygon {
  std::vector<Point> vertices;

  /// Throws InputError unless the polygon has >= 3 vertices and is simple.
  void validate() const;

  /// Even-odd rule.
  bool contains(Point p) const;
};

}  // namespace pcc
