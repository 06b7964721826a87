#include "pccseg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pccseg/resample.hpp"

namespace pcc {

void PipelineConfig::validate() const {
  if (max_pixels <= kProposedFeatureNeighbors)
    throw InputError("max_pixels must exceed " + std::to_string(kProposedFeatureNeighbors));
  if (background_class < 0) throw InputError("background_class must be >= 0");
  engine.validate();
}

Placement full_placement(int width, int height) {
  return {width, height, 0, 0, width, height};
}

CropResult crop_to_polygon(const ImageBuffer& image, const LabelMap& scribbles,
                           const CutPolygon& polygon, Label background_class) {
  polygon.validate();
  if (scribbles.width != image.width || scribbles.height != image.height)
    throw InputError("scribbles and image dimensions differ");
  double min_x = polygon.vertices[0].x, max_x = min_x;
  double min_y = polygon.vertices[0].y, max_y = min_y;
  for (const Point& v : polygon.vertices) {
    if (v.x < 0.0 || v.y < 0.0 || v.x > image.width || v.y > image.height)
      throw InputError("polygon vertex lies outside the image");
    min_x = std::min(min_x, v.x);
    max_x = std::max(max_x, v.x);
    min_y = std::min(min_y, v.y);
    max_y = std::max(max_y, v.y);
  }
  // Pixels whose centers (c + 0.5, r + 0.5) fall within the box.
  const int c0 = std::max(0, static_cast<int>(std::ceil(min_x - 0.5)));
  const int c1 = std::min(image.width - 1, static_cast<int>(std::floor(max_x - 0.5)));
  const int r0 = std::max(0, static_cast<int>(std::ceil(min_y - 0.5)));
  const int r1 = std::min(image.height - 1, static_cast<int>(std::floor(max_y - 0.5)));
  const int w = c1 - c0 + 1;
  const int h = r1 - r0 + 1;
  if (w < 2 || h < 2) throw InputError("polygon bounding box is degenerate");

  CropResult out;
  out.image = ImageBuffer(w, h);
  out.scribbles = LabelMap(w, h);
  out.placement = {image.width, image.height, c0, r0, w, h};
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      out.image.set(r, c, image.at(r0 + r, c0 + c));
      const bool inside = polygon.contains({c0 + c + 0.5, r0 + r + 0.5});
      out.scribbles.at(r, c) = inside ? scribbles.at(r0 + r, c0 + c) : background_class;
    }
  }
  return out;
}

int scaled_extent(int size, double factor) {
  if (factor >= 1.0) return size;
  return std::max(1, static_cast<int>(std::floor(size * factor + 1e-9)));
}

double reduction_factor(std::size_t reference_pixels, std::size_t max_pixels) {
  if (reference_pixels <= max_pixels) return 1.0;
  return std::sqrt(static_cast<double>(max_pixels) / static_cast<double>(reference_pixels));
}

Downscaled downscale_by(const ImageBuffer& image, const LabelMap& scribbles, double factor) {
  if (scribbles.width != image.width || scribbles.height != image.height)
    throw InputError("scribbles and image dimensions differ");
  const int w = scaled_extent(image.width, factor);
  const int h = scaled_extent(image.height, factor);
  Downscaled out;
  out.scale = {image.width, image.height, w, h};
  if (w == image.width && h == image.height) {
    out.image = image;
    out.scribbles = scribbles;
  } else {
    out.image = resize_bicubic(image, w, h);
    out.scribbles = resize_nearest(scribbles, w, h);
  }
  return out;
}

Downscaled downscale(const ImageBuffer& image, const LabelMap& scribbles,
                     std::size_t max_pixels) {
  return downscale_by(image, scribbles, reduction_factor(image.pixel_count(), max_pixels));
}

SegmentationResult recompose(const NodeState& small_state, const ScaleRecord& scale,
                             const Placement& placement, Label background_class) {
  const std::size_t small_n =
      static_cast<std::size_t>(scale.dst_width) * static_cast<std::size_t>(scale.dst_height);
  if (small_state.nodes != small_n) throw InputError("recompose: state does not match scale");
  if (scale.src_width != placement.width || scale.src_height != placement.height)
    throw InputError("recompose: scale does not match placement");
  const std::size_t classes = small_state.classes;

  // Crop-resolution class planes.
  std::vector<std::vector<double>> crop(classes);
  for (std::size_t k = 0; k < classes; ++k) {
    std::vector<double> plane(small_n);
    for (std::size_t i = 0; i < small_n; ++i) plane[i] = small_state(i, k);
    crop[k] = scale.is_identity()
                  ? std::move(plane)
                  : resize_bilinear(plane, scale.dst_width, scale.dst_height, scale.src_width,
                                    scale.src_height);
  }

  SegmentationResult out;
  out.num_classes = static_cast<int>(classes);
  out.labels = LabelMap(placement.full_width, placement.full_height,
                        static_cast<Label>(background_class));
  const std::size_t full_n = out.labels.pixel_count();
  out.fuzzy.assign(classes, std::vector<double>(full_n, 0.0));
  if (static_cast<std::size_t>(background_class) < classes) {
    std::fill(out.fuzzy[background_class].begin(), out.fuzzy[background_class].end(), 1.0);
  } else if (!placement.is_identity()) {
    throw InputError("background_class exceeds the number of classes");
  }

  for (int r = 0; r < placement.height; ++r) {
    for (int c = 0; c < placement.width; ++c) {
      const std::size_t ci = static_cast<std::size_t>(r) * placement.width + c;
      const std::size_t fi =
          static_cast<std::size_t>(placement.y0 + r) * placement.full_width + placement.x0 + c;
      double total = 0.0;
      for (std::size_t k = 0; k < classes; ++k) total += crop[k][ci];
      std::size_t best = 0;
      for (std::size_t k = 0; k < classes; ++k) {
        const double v = total > 0.0 ? crop[k][ci] / total : 1.0 / classes;
        out.fuzzy[k][fi] = v;
        if (v > out.fuzzy[best][fi]) best = k;
      }
      out.labels.labels[fi] = static_cast<Label>(best);
    }
  }
  return out;
}

namespace {

// Scribble classes must be exactly {0, ..., C-1} with C >= 2.
int require_classes(const LabelMap& scribbles) {
  for (Label l : scribbles.labels) {
    if (l < kUnlabeled) throw InputError("scribbles contain IGNORE entries");
  }
  const int c = scribbles.implied_classes();
  std::vector<bool> present(std::max(c, 0), false);
  for (Label l : scribbles.labels) {
    if (l >= 0) present[l] = true;
  }
  const auto distinct = std::count(present.begin(), present.end(), true);
  if (distinct < 2) throw InputError("need at least two classes");
  for (int k = 0; k < c; ++k) {
    if (!present[k]) throw InputError("class " + std::to_string(k) + " has no scribbles");
  }
  return c;
}

}  // namespace

int check_segment_inputs(const ImageBuffer& image, const LabelMap& scribbles,
                         const std::optional<CutPolygon>& polygon, const PipelineConfig& cfg) {
  cfg.validate();
  if (image.pixel_count() == 0) throw InputError("empty image");
  if (scribbles.width != image.width || scribbles.height != image.height)
    throw InputError("scribbles and image dimensions differ");
  if (!polygon) return require_classes(scribbles);
  return require_classes(crop_to_polygon(image, scribbles, *polygon, cfg.background_class).scribbles);
}

SegmentationResult segment(const ImageBuffer& image, const LabelMap& scribbles,
                           const std::optional<CutPolygon>& polygon,
                           const PipelineConfig& cfg, const ProgressCallback& on_checkpoint) {
  cfg.validate();
  if (image.pixel_count() == 0) throw InputError("empty image");
  if (scribbles.width != image.width || scribbles.height != image.height)
    throw InputError("scribbles and image dimensions differ");

  // The reduction factor always comes from the full image, so a polygon crop
  // yields proportionally fewer nodes.
  const double factor = reduction_factor(image.pixel_count(), cfg.max_pixels);

  CropResult crop;
  if (polygon) {
    crop = crop_to_polygon(image, scribbles, *polygon, cfg.background_class);
  } else {
    crop = {image, scribbles, full_placement(image.width, image.height)};
  }
  const int classes = require_classes(crop.scribbles);

  const Downscaled small = downscale_by(crop.image, crop.scribbles, factor);
  for (int k = 0; k < classes; ++k) {
    if (std::find(small.scribbles.labels.begin(), small.scribbles.labels.end(), k) ==
        small.scribbles.labels.end()) {
      throw InputError("scribbles lost in downscale: class " + std::to_string(k) +
                       " vanished; increase max_pixels or draw thicker scribbles");
    }
  }

  const FeatureMatrix features = z_normalize(extract_features(small.image, cfg.mode));
  const Network net = build_network(features, small.image.width, small.image.height,
                                    small.scribbles.labels, classes, cfg.mode);
  NodeState seeded =
      cfg.mode == FeatureMode::Proposed ? seed_influence(net) : initial_state(net);

  RunResult run_result = run(net, std::move(seeded), cfg.engine, on_checkpoint);

  SegmentationResult out =
      recompose(run_result.state, small.scale, crop.placement, cfg.background_class);
  out.stats = run_result.stats;
  out.network_nodes = net.node_count();
  out.network_edges = net.edge_count();
  out.particles = static_cast<std::size_t>(
      std::count_if(net.labels().begin(), net.labels().end(), [](Label l) { return l >= 0; }));
  return out;
}

double error_rate(const LabelMap& predicted, const LabelMap& ground_truth) {
  if (predicted.width != ground_truth.width || predicted.height != ground_truth.height)
    throw InputError("error_rate: dimension mismatch");
  std::size_t total = 0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < predicted.labels.size(); ++i) {
    const Label g = ground_truth.labels[i];
    if (g == kIgnore) continue;
    ++total;
    if (predicted.labels[i] != g) ++wrong;
  }
  if (total == 0) throw InputError("error_rate: no evaluable pixels");
  return static_cast<double>(wrong) / static_cast<double>(total);
}

}  // namespace pcc
