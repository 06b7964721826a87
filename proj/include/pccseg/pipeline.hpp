#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "pccseg/engine.hpp"
#include "pccseg/features.hpp"
#include "pccseg/network.hpp"
#include "pccseg/types.hpp"

namespace pcc {

struct PipelineConfig {
  FeatureMode mode = FeatureMode::Proposed;
  std::size_t max_pixels = 18'000;  // node budget for the reduced full image
  EngineConfig engine;
  Label background_class = 0;       // class given to pixels outside the polygon

  void validate() const;
};

/// Where the processed crop sits inside the full image.
struct Placement {
  int full_width = 0;
  int full_height = 0;
  int x0 = 0;  // first column of the crop
  int y0 = 0;  // first row of the crop
  int width = 0;
  int height = 0;

  bool is_identity() const {
    return x0 == 0 && y0 == 0 && width == full_width && height == full_height;
  }
};

struct CropResult {
  ImageBuffer image;
  LabelMap scribbles;
  Placement placement;
};

/// Crops to the polygon's bounding box (pixels whose centers fall inside it)
/// and labels box pixels outside the polygon as `background_class`.
CropResult crop_to_polygon(const ImageBuffer& image, const LabelMap& scribbles,
                           const CutPolygon& polygon, Label background_class);

/// Placement covering the whole image (no polygon).
Placement full_placement(int width, int height);

struct ScaleRecord {
  int src_width = 0;
  int src_height = 0;
  int dst_width = 0;
  int dst_height = 0;

  bool is_identity() const { return src_width == dst_width && src_height == dst_height; }
};

struct Downscaled {
  ImageBuffer image;
  LabelMap scribbles;
  ScaleRecord scale;
};

/// Reduced size for a uniform factor: floor(size * factor), at least 1.
int scaled_extent(int size, double factor);

/// Uniform reduction factor that brings `reference_pixels` down to at most
/// `max_pixels`; 1 when no reduction is needed.
double reduction_factor(std::size_t reference_pixels, std::size_t max_pixels);

/// Bicubic image + nearest-neighbor scribbles to w*s x h*s, with
/// s = sqrt(max_pixels / (w*h)); identity when w*h <= max_pixels.
Downscaled downscale(const ImageBuffer& image, const LabelMap& scribbles,
                     std::size_t max_pixels);

/// Same resampling with an explicit factor.
Downscaled downscale_by(const ImageBuffer& image, const LabelMap& scribbles, double factor);

struct SegmentationResult {
  LabelMap labels;                       // full resolution, no UNLABELED
  std::vector<std::vector<double>> fuzzy;  // per class, full resolution
  int num_classes = 0;
  RunStats stats;
  std::size_t network_nodes = 0;
  std::size_t network_edges = 0;
  std::size_t particles = 0;
};

/// Bilinearly upsamples each class's domination map to the crop, renormalizes
/// per pixel, takes the argmax (lowest class on ties) and places the crop in
/// the full image. Outside the crop everything is `background_class`.
SegmentationResult recompose(const NodeState& small_state, const ScaleRecord& scale,
                             const Placement& placement, Label background_class);

/// Runs the cheap precondition checks of segment() (dimensions, polygon,
/// class coverage) without building anything. Returns the class count.
int check_segment_inputs(const ImageBuffer& image, const LabelMap& scribbles,
                         const std::optional<CutPolygon>& polygon, const PipelineConfig& cfg);

/// End to end: optional polygon crop, reduction, features, network, dynamics,
/// recomposition.
SegmentationResult segment(const ImageBuffer& image, const LabelMap& scribbles,
                           const std::optional<CutPolygon>& polygon,
                           const PipelineConfig& cfg,
                           const ProgressCallback& on_checkpoint = {});

/// Misclassified fraction over pixels whose ground truth is not IGNORE.
double error_rate(const LabelMap& predicted, const LabelMap& ground_truth);

}  // namespace pcc
