#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pccseg/types.hpp"

namespace pcc::io {

/// Scribble colors by class index. Classes 0 and 1 are background and object.
inline constexpr std::array<Rgb, 8> kScribblePalette = {{
    {255, 0, 0},
    {0, 255, 0},
    {0, 0, 255},
    {255, 255, 0},
    {255, 0, 255},
    {0, 255, 255},
    {255, 128, 0},
    {128, 0, 255},
}};

/// Raw decoded raster: 1 (gray), 2 (gray+alpha), 3 (RGB) or 4 (RGBA)
/// interleaved channels, 8 bits each. 16-bit sources keep the high byte.
struct DecodedImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;
};

/// Decodes PNG or JPEG bytes (format sniffed from the signature).
DecodedImage decode(std::span<const std::uint8_t> bytes);
DecodedImage decode_file(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// 8-bit PNG encoding of a 1, 3 or 4 channel raster.
std::vector<std::uint8_t> encode_png(int width, int height, int channels,
                                     std::span<const std::uint8_t> data);

ImageBuffer to_rgb(const DecodedImage& img);

ImageBuffer load_image(const std::filesystem::path& path);
ImageBuffer image_from_bytes(std::span<const std::uint8_t> bytes);

/// RGBA scribbles: alpha 0 is unlabeled, opaque pixels must match
/// kScribblePalette[0, num_classes).
LabelMap load_scribbles(const std::filesystem::path& path, int num_classes = 8);
LabelMap scribbles_from_decoded(const DecodedImage& img, int num_classes = 8);

/// Grayscale trimap: 0 is background, 255 is object, anything else IGNORE.
LabelMap load_ground_truth(const std::filesystem::path& path);
LabelMap ground_truth_from_decoded(const DecodedImage& img);

/// Text file with a JSON array of [x, y] pairs. Returns a validated polygon.
CutPolygon load_polygon(const std::filesystem::path& path);
CutPolygon parse_polygon(const std::string& json_text);

/// Gray level of a class in a saved mask. Two classes map to 0 and 255;
/// more classes spread evenly over [0, 255].
std::uint8_t mask_level(Label label, int num_classes);

std::vector<std::uint8_t> encode_mask(const LabelMap& labels, int num_classes = 0);
void save_mask(const LabelMap& labels, const std::filesystem::path& path,
               int num_classes = 0);

/// Source image blended with a per-class tint; pixels whose label disagrees
/// with `reference` (where it is not IGNORE) are painted solid red.
ImageBuffer render_overlay(const ImageBuffer& image, const LabelMap& labels,
                           const std::optional<LabelMap>& reference = std::nullopt);
std::vector<std::uint8_t> encode_overlay(const ImageBuffer& image, const LabelMap& labels,
                                         const std::optional<LabelMap>& reference = std::nullopt);
void save_overlay(const ImageBuffer& image, const LabelMap& labels,
                  const std::optional<LabelMap>& reference,
                  const std::filesystem::path& path);

void save_png(const ImageBuffer& image, const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace pcc::io
