#include "pccseg/features.hpp"

#include <algorithm>
#include <cmath>

namespace pcc {

const char* to_string(FeatureMode mode) {
  return mode == FeatureMode::Proposed ? "proposed" : "reference";
}

FeatureMode feature_mode_from_string(const std::string& name) {
  if (name == "proposed") return FeatureMode::Proposed;
  if (name == "reference") return FeatureMode::Reference;
  throw InputError("unknown mode '" + name + "' (expected proposed or reference)");
}

Hsv rgb_to_hsv(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double r = r8 / 255.0;
  const double g = g8 / 255.0;
  const double b = b8 / 255.0;
  const double hi = std::max({r, g, b});
  const double lo = std::min({r, g, b});
  const double span = hi - lo;
  Hsv out;
  out.v = hi;
  out.s = hi > 0.0 ? span / hi : 0.0;
  if (span > 0.0) {
    double h;
    if (hi == r) {
      h = (g - b) / span;
      if (h < 0.0) h += 6.0;
    } else if (hi == g) {
      h = 2.0 + (b - r) / span;
    } else {
      h = 4.0 + (r - g) / span;
    }
    out.h = h / 6.0;
  }
  return out;
}

double hsv_value(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return std::max({r, g, b}) / 255.0;
}

ExcessColors excess_colors(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return {1.4 * r - g, 2.0 * g - r - b, 1.4 * b - g};
}

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>(std::lround(0.299 * r + 0.587 * g + 0.114 * b));
}

int otsu_threshold(std::span<const std::uint64_t, 256> histogram) {
  std::uint64_t total = 0;
  std::uint64_t weighted_total = 0;
  int last_nonzero = -1;
  int nonzero_bins = 0;
  for (int i = 0; i < 256; ++i) {
    total += histogram[i];
    weighted_total += static_cast<std::uint64_t>(i) * histogram[i];
    if (histogram[i] != 0) {
      last_nonzero = i;
      ++nonzero_bins;
    }
  }
  if (total == 0) throw InputError("otsu: empty histogram");
  if (nonzero_bins == 1) return last_nonzero;

  std::uint64_t count_low = 0;
  std::uint64_t weighted_low = 0;
  int best = -1;
  double best_var = -1.0;
  for (int t = 0; t < 256; ++t) {
    count_low += histogram[t];
    weighted_low += static_cast<std::uint64_t>(t) * histogram[t];
    const std::uint64_t count_high = total - count_low;
    if (count_low == 0 || count_high == 0) continue;
    const double mean_low = static_cast<double>(weighted_low) / static_cast<double>(count_low);
    const double mean_high =
        static_cast<double>(weighted_total - weighted_low) / static_cast<double>(count_high);
    const double diff = mean_low - mean_high;
    const double var =
        static_cast<double>(count_low) * static_cast<double>(count_high) * diff * diff;
    if (var > best_var) {
      best_var = var;
      best = t;
    }
  }
  return best;
}

std::array<std::uint64_t, 256> luma_histogram(const ImageBuffer& image) {
  std::array<std::uint64_t, 256> hist{};
  const std::size_t n = image.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* px = image.data.data() + 3 * i;
    ++hist[luma(px[0], px[1], px[2])];
  }
  return hist;
}

namespace {

void extract_proposed(const ImageBuffer& image, FeatureMatrix& m) {
  const auto hist = luma_histogram(image);
  const int threshold = otsu_threshold(hist);
  std::size_t i = 0;
  for (int row = 0; row < image.height; ++row) {
    for (int col = 0; col < image.width; ++col, ++i) {
      const Rgb c = image.at(row, col);
      const ExcessColors ex = excess_colors(c.r, c.g, c.b);
      auto f = m.row(i);
      f[0] = row;
      f[1] = col;
      f[2] = c.r;
      f[3] = c.g;
      f[4] = c.b;
      f[5] = hsv_value(c.r, c.g, c.b);
      f[6] = ex.red;
      f[7] = ex.green;
      f[8] = ex.blue;
      f[9] = luma(c.r, c.g, c.b) > threshold ? 1.0 : 0.0;
    }
  }
}

void extract_reference(const ImageBuffer& image, FeatureMatrix& m) {
  const int w = image.width;
  const int h = image.height;
  const std::size_t n = image.pixel_count();

  // Per-pixel base channels R, G, B, H, S, V.
  std::vector<std::array<double, 6>> base(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* px = image.data.data() + 3 * i;
    const Hsv hsv = rgb_to_hsv(px[0], px[1], px[2]);
    base[i] = {double(px[0]), double(px[1]), double(px[2]), hsv.h, hsv.s, hsv.v};
  }

  std::size_t i = 0;
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col, ++i) {
      // Window: the pixel and its in-image 8-connected neighbors.
      std::array<std::size_t, 9> window{};
      int count = 0;
      for (int dr = -1; dr <= 1; ++dr) {
        const int r = row + dr;
        if (r < 0 || r >= h) continue;
        for (int dc = -1; dc <= 1; ++dc) {
          const int c = col + dc;
          if (c < 0 || c >= w) continue;
          window[count++] = static_cast<std::size_t>(r) * w + c;
        }
      }
      std::array<double, 6> mean{};
      std::array<double, 6> sd{};
      for (int k = 0; k < 6; ++k) {
        double sum = 0.0;
        bool constant = true;
        const double first = base[window[0]][k];
        for (int q = 0; q < count; ++q) {
          sum += base[window[q]][k];
          constant = constant && base[window[q]][k] == first;
        }
        if (constant) {
          mean[k] = first;
          continue;
        }
        mean[k] = sum / count;
        double ss = 0.0;
        for (int q = 0; q < count; ++q) {
          const double d = base[window[q]][k] - mean[k];
          ss += d * d;
        }
        sd[k] = std::sqrt(ss / count);
      }
      auto f = m.row(i);
      const auto& self = base[i];
      f[0] = row;
      f[1] = col;
      for (int k = 0; k < 6; ++k) f[2 + k] = self[k];
      for (int k = 0; k < 6; ++k) {
        f[8 + k] = mean[k];
        f[14 + k] = sd[k];
      }
      const std::uint8_t* px = image.data.data() + 3 * i;
      const ExcessColors ex = excess_colors(px[0], px[1], px[2]);
      f[20] = ex.red;
      f[21] = ex.green;
      f[22] = ex.blue;
    }
  }
}

}  // namespace

FeatureMatrix extract_features(const ImageBuffer& image, FeatureMode mode) {
  if (image.pixel_count() == 0) throw InputError("extract_features: empty image");
  const std::size_t d =
      mode == FeatureMode::Proposed ? kProposedFeatureCount : kReferenceFeatureCount;
  FeatureMatrix m(image.pixel_count(), d);
  if (mode == FeatureMode::Proposed) {
    extract_proposed(image, m);
  } else {
    extract_reference(image, m);
  }
  return m;
}

FeatureMatrix z_normalize(FeatureMatrix m) {
  if (m.rows == 0) throw InputError("z_normalize: matrix has no rows");
  const double n = static_cast<double>(m.rows);
  for (std::size_t j = 0; j < m.cols; ++j) {
    const double first = m(0, j);
    bool constant = true;
    double sum = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) {
      sum += m(i, j);
      constant = constant && m(i, j) == first;
    }
    if (constant) {
      for (std::size_t i = 0; i < m.rows; ++i) m(i, j) = 0.0;
      continue;
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) {
      const double d = m(i, j) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / n);
    for (std::size_t i = 0; i < m.rows; ++i) m(i, j) = (m(i, j) - mean) / sd;
  }
  m.normalized = true;
  return m;
}

}  // namespace pcc
