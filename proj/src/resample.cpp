#include "pccseg/resample.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace pcc {

double catmull_rom(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

int nearest_source_index(int dst, int src_size, int dst_size) {
  const auto i = static_cast<int>(std::floor((dst + 0.5) * src_size / dst_size));
  return std::clamp(i, 0, src_size - 1);
}

namespace {

struct Taps {
  std::array<int, 4> index{};
  std::array<double, 4> weight{};
};

std::vector<Taps> cubic_taps(int src_size, int dst_size) {
  std::vector<Taps> taps(dst_size);
  for (int d = 0; d < dst_size; ++d) {
    const double x = source_coordinate(d, src_size, dst_size);
    const int base = static_cast<int>(std::floor(x));
    double total = 0.0;
    for (int k = 0; k < 4; ++k) {
      const int s = base - 1 + k;
      taps[d].index[k] = std::clamp(s, 0, src_size - 1);
      taps[d].weight[k] = catmull_rom(x - s);
      total += taps[d].weight[k];
    }
    for (double& w : taps[d].weight) w /= total;
  }
  return taps;
}

}  // namespace

ImageBuffer resize_bicubic(const ImageBuffer& image, int width, int height) {
  if (width <= 0 || height <= 0) throw InputError("resize: target size must be positive");
  if (width == image.width && height == image.height) return image;
  const auto tx = cubic_taps(image.width, width);
  const auto ty = cubic_taps(image.height, height);

  // Horizontal pass into doubles, then vertical pass with rounding.
  std::vector<double> tmp(static_cast<std::size_t>(image.height) * width * 3);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < width; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) {
          const std::size_t src =
              3 * (static_cast<std::size_t>(r) * image.width + tx[c].index[k]) + ch;
          acc += tx[c].weight[k] * image.data[src];
        }
        tmp[3 * (static_cast<std::size_t>(r) * width + c) + ch] = acc;
      }
    }
  }
  ImageBuffer out(width, height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) {
          acc += ty[r].weight[k] * tmp[3 * (static_cast<std::size_t>(ty[r].index[k]) * width + c) + ch];
        }
        out.data[3 * (static_cast<std::size_t>(r) * width + c) + ch] =
            static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
      }
    }
  }
  return out;
}

LabelMap resize_nearest(const LabelMap& labels, int width, int height) {
  if (width <= 0 || height <= 0) throw InputError("resize: target size must be positive");
  LabelMap out(width, height);
  for (int r = 0; r < height; ++r) {
    const int sr = nearest_source_index(r, labels.height, height);
    for (int c = 0; c < width; ++c) {
      out.at(r, c) = labels.at(sr, nearest_source_index(c, labels.width, width));
    }
  }
  return out;
}

std::vector<double> resize_bilinear(std::span<const double> plane, int src_w, int src_h,
                                    int dst_w, int dst_h) {
  std::vector<double> out(static_cast<std::size_t>(dst_w) * dst_h);
  auto axis = [](int d, int src, int dst, int& i0, int& i1, double& f) {
    const double x = std::clamp(source_coordinate(d, src, dst), 0.0, double(src - 1));
    i0 = static_cast<int>(std::floor(x));
    i1 = std::min(i0 + 1, src - 1);
    f = x - i0;
  };
  for (int r = 0; r < dst_h; ++r) {
    int r0, r1;
    double fy;
    axis(r, src_h, dst_h, r0, r1, fy);
    for (int c = 0; c < dst_w; ++c) {
      int c0, c1;
      double fx;
      axis(c, src_w, dst_w, c0, c1, fx);
      const double a = plane[static_cast<std::size_t>(r0) * src_w + c0];
      const double b = plane[static_cast<std::size_t>(r0) * src_w + c1];
      const double d = plane[static_cast<std::size_t>(r1) * src_w + c0];
      const double e = plane[static_cast<std::size_t>(r1) * src_w + c1];
      out[static_cast<std::size_t>(r) * dst_w + c] =
          a * (1 - fx) * (1 - fy) + b * fx * (1 - fy) + d * (1 - fx) * fy + e * fx * fy;
    }
  }
  return out;
}

}  // namespace pcc
