#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "pccseg/features.hpp"
#include "pccseg/types.hpp"

namespace pcc {

inline constexpr std::size_t kProposedFeatureNeighbors = 192;
inline constexpr std::size_t kReferenceFeatureNeighbors = 200;

/// Undirected edge with a < b.
struct Edge {
  std::uint32_t a = 0;
  std::uint32_t b = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Sorted, duplicate-free.
using EdgeSet = std::vector<Edge>;

inline Edge make_edge(std::uint32_t i, std::uint32_t j) {
  return i < j ? Edge{i, j} : Edge{j, i};
}

/// Two nodes carrying different scribble classes.
inline bool labels_conflict(Label a, Label b) { return a >= 0 && b >= 0 && a != b; }

double squared_distance(std::span<const double> a, std::span<const double> b);

/// Exact k-d tree over the rows of a feature matrix.
class KdTree {
 public:
  explicit KdTree(const FeatureMatrix& points, std::size_t leaf_size = 16);

  /// The k points closest to row `query`, the row itself excluded, ordered by
  /// (squared distance, index).
  std::vector<std::uint32_t> nearest(std::size_t query, std::size_t k) const;

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t dim = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  const FeatureMatrix& points_;
  std::size_t leaf_size_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Per-node k nearest neighbors (self excluded), ties broken by lower index.
std::vector<std::vector<std::uint32_t>> nearest_neighbor_lists(const FeatureMatrix& features,
                                                              std::size_t k);

/// Union-symmetrized kNN graph. With conflict_filter, candidate edges joining
/// two different scribble classes are dropped (not replaced).
EdgeSet knn_edges(const FeatureMatrix& features, std::size_t k,
                  std::span<const Label> node_label, bool conflict_filter);

/// Edges between all 8-adjacent pixels of a width x height raster.
EdgeSet spatial_edges(int width, int height, std::span<const Label> node_label,
                      bool conflict_filter);

struct GridCoord {
  int row = 0;
  int col = 0;
};

/// Undirected unweighted graph over the pixels of a raster, stored as
/// compressed adjacency with sorted neighbor lists. Node i is pixel
/// (i / width, i % width).
class Network {
 public:
  Network() = default;
  Network(int width, int height, std::vector<Label> node_label, int num_classes,
          const EdgeSet& edges);

  std::size_t node_count() const { return node_label_.size(); }
  std::size_t edge_count() const { return neighbors_.size() / 2; }
  int width() const { return width_; }
  int height() const { return height_; }
  int num_classes() const { return num_classes_; }

  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return {neighbors_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::size_t degree(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }
  bool has_edge(std::size_t i, std::size_t j) const;

  Label label(std::size_t i) const { return node_label_[i]; }
  bool is_labeled(std::size_t i) const { return node_label_[i] >= 0; }
  std::span<const Label> labels() const { return node_label_; }

  GridCoord coord(std::size_t i) const {
    return {static_cast<int>(i / width_), static_cast<int>(i % width_)};
  }

  /// Debug dump: one "i j" line per edge with i < j.
  void write_edge_list(std::ostream& out) const;

 private:
  int width_ = 0;
  int height_ = 0;
  int num_classes_ = 0;
  std::vector<Label> node_label_;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint32_t> neighbors_;
};

/// Proposed: 192 feature neighbors + 8 spatial neighbors, conflict filter on.
/// Reference: 200 feature neighbors, no spatial pass, no filter.
/// `features` must be normalized and in raster order over width x height.
Network build_network(const FeatureMatrix& features, int width, int height,
                      std::span<const Label> node_label, int num_classes, FeatureMode mode);

/// Per-node domination over classes, row-major n x C; rows sum to 1.
struct NodeState {
  std::size_t nodes = 0;
  std::size_t classes = 0;
  std::vector<double> values;

  NodeState() = default;
  NodeState(std::size_t n, std::size_t c) : nodes(n), classes(c), values(n * c, 0.0) {}

  std::span<double> row(std::size_t i) { return {values.data() + i * classes, classes}; }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * classes, classes};
  }
  double& operator()(std::size_t i, std::size_t c) { return values[i * classes + c]; }
  double operator()(std::size_t i, std::size_t c) const { return values[i * classes + c]; }

  friend bool operator==(const NodeState&, const NodeState&) = default;
};

/// Labeled rows one-hot, unlabeled rows uniform.
NodeState initial_state(const Network& net);

inline constexpr double kNearInfluence = 0.2;  // Chebyshev distance 1
inline constexpr double kFarInfluence = 0.1;   // Chebyshev distance 2

/// initial_state plus the scribble influence over each labeled pixel's 5x5
/// window, applied in raster order of labeled pixels.
NodeState seed_influence(const Network& net);

/// Raise class `cls` of a row by `delta` (capped at 1) and rescale the other
/// entries so the row still sums to 1.
void boost_class(std::span<double> row, std::size_t cls, double delta);

}  // namespace pcc
