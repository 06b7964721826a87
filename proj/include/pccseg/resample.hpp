#pragma once

#include <span>
#include <vector>

#include "pccseg/types.hpp"

namespace pcc {

/// Catmull-Rom cubic kernel (a = -0.5).
double catmull_rom(double x);

/// Pixel-center aligned source coordinate of destination index `dst` when
/// mapping `src_size` samples onto `dst_size` samples.
inline double source_coordinate(int dst, int src_size, int dst_size) {
  return (dst + 0.5) * static_cast<double>(src_size) / dst_size - 0.5;
}

/// Nearest source index under the same pixel-center mapping.
int nearest_source_index(int dst, int src_size, int dst_size);

/// Separable bicubic resampling, edge-clamped, rounded to 8 bits.
ImageBuffer resize_bicubic(const ImageBuffer& image, int width, int height);

/// Nearest-neighbor resampling: every output label is copied from one source
/// pixel, so classes are never blended.
LabelMap resize_nearest(const LabelMap& labels, int width, int height);

/// Bilinear resampling of one real-valued plane, edge-clamped.
std::vector<double> resize_bilinear(std::span<const double> plane, int src_w, int src_h,
                                    int dst_w, int dst_h);

}  // namespace pcc
