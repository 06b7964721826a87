#include "pccseg/network.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <string>
#include <thread>

namespace pcc {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

// ---------------------------------------------------------------------------
// KdTree

KdTree::KdTree(const FeatureMatrix& points, std::size_t leaf_size)
    : points_(points), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  order_.resize(points.rows);
  std::iota(order_.begin(), order_.end(), 0u);
  if (points.rows > 0) {
    nodes_.reserve(2 * points.rows / leaf_size_ + 1);
    build(0, static_cast<std::uint32_t>(points.rows));
  }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, 0, 0.0});
  if (end - begin <= leaf_size_) return id;

  // Split the widest dimension at the median.
  std::size_t best_dim = 0;
  double best_spread = -1.0;
  for (std::size_t d = 0; d < points_.cols; ++d) {
    double lo = points_(order_[begin], d);
    double hi = lo;
    for (std::uint32_t i = begin + 1; i < end; ++i) {
      const double v = points_(order_[i], d);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_dim = d;
    }
  }
  if (best_spread <= 0.0) return id;  // all points identical

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points_(a, best_dim) < points_(b, best_dim);
                   });
  const double split = points_(order_[mid], best_dim);
  nodes_[id].dim = static_cast<std::uint32_t>(best_dim);
  nodes_[id].split = split;
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::vector<std::uint32_t> KdTree::nearest(std::size_t query, std::size_t k) const {
  using Candidate = std::pair<double, std::uint32_t>;
  std::vector<Candidate> heap;  // max-heap on (distance, index)
  heap.reserve(k + 1);
  if (k == 0 || nodes_.empty()) return {};

  const auto q = points_.row(query);
  std::vector<double> offsets(points_.cols, 0.0);

  // Recursion with incremental distance to the query's cell (Arya & Mount).
  auto visit = [&](auto&& self, std::int32_t id, double cell_dist) -> void {
    const Node& node = nodes_[id];
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t p = order_[i];
        if (p == query) continue;
        const Candidate c{squared_distance(q, points_.row(p)), p};
        if (heap.size() < k) {
          heap.push_back(c);
          std::push_heap(heap.begin(), heap.end());
        } else if (c < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = c;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      return;
    }
    const double diff = q[node.dim] - node.split;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    self(self, near, cell_dist);

    const double old_off = offsets[node.dim];
    const double far_dist = cell_dist - old_off * old_off + diff * diff;
    // Equal distances still need a visit: a lower index may win the tie.
    if (heap.size() < k || far_dist <= heap.front().first) {
      offsets[node.dim] = diff;
      self(self, far, far_dist);
      offsets[node.dim] = old_off;
    }
  };
  visit(visit, 0, 0.0);

  std::sort_heap(heap.begin(), heap.end());
  std::vector<std::uint32_t> out;
  out.reserve(heap.size());
  for (const auto& c : heap) out.push_back(c.second);
  return out;
}

std::vector<std::vector<std::uint32_t>> nearest_neighbor_lists(const FeatureMatrix& features,
                                                              std::size_t k) {
  const std::size_t n = features.rows;
  if (k == 0) throw InputError("knn: k must be positive");
  if (k >= n)
    throw InputError("knn: n <= k (" + std::to_string(n) + " nodes, k = " + std::to_string(k) +
                     "); increase max_pixels or use a larger image");
  const KdTree tree(features);
  std::vector<std::vector<std::uint32_t>> lists(n);

  // Results are per-query and exact, so the split across threads does not
  // affect the output.
  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, 16);
  auto work = [&](std::size_t worker) {
    for (std::size_t i = worker; i < n; i += workers) lists[i] = tree.nearest(i, k);
  };
  if (workers == 1 || n < 2048) {
    for (std::size_t i = 0; i < n; ++i) lists[i] = tree.nearest(i, k);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }
  return lists;
}

EdgeSet knn_edges(const FeatureMatrix& features, std::size_t k,
                  std::span<const Label> node_label, bool conflict_filter) {
  if (node_label.size() != features.rows)
    throw InputError("knn: label count does not match feature rows");
  const auto lists = nearest_neighbor_lists(features, k);
  EdgeSet edges;
  edges.reserve(features.rows * k);
  for (std::size_t i = 0; i < lists.size(); ++i) {
    for (std::uint32_t j : lists[i]) {
      if (conflict_filter && labels_conflict(node_label[i], node_label[j])) continue;
      edges.push_back(make_edge(static_cast<std::uint32_t>(i), j));
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

EdgeSet spatial_edges(int width, int height, std::span<const Label> node_label,
                      bool conflict_filter) {
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (node_label.size() != n) throw InputError("spatial_edges: width * height != node count");
  EdgeSet edges;
  edges.reserve(4 * n);
  // Forward half of the 8-neighborhood: each pair is emitted once.
  constexpr int kForward[4][2] = {{0, 1}, {1, -1}, {1, 0}, {1, 1}};
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const auto i = static_cast<std::uint32_t>(r * width + c);
      for (const auto& off : kForward) {
        const int rr = r + off[0];
        const int cc = c + off[1];
        if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
        const auto j = static_cast<std::uint32_t>(rr * width + cc);
        if (conflict_filter && labels_conflict(node_label[i], node_label[j])) continue;
        edges.push_back(make_edge(i, j));
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

// ---------------------------------------------------------------------------
// Network

Network::Network(int width, int height, std::vector<Label> node_label, int num_classes,
                 const EdgeSet& edges)
    : width_(width), height_(height), num_classes_(num_classes),
      node_label_(std::move(node_label)) {
  const std::size_t n = node_label_.size();
  if (static_cast<std::size_t>(width) * static_cast<std::size_t>(height) != n)
    throw InputError("network: width * height != node count");
  for (Label l : node_label_) {
    if (l >= num_classes || (l < 0 && l != kUnlabeled))
      throw InputError("network: node label out of range");
  }
  std::vector<std::size_t> degree(n, 0);
  for (const Edge& e : edges) {
    if (e.a >= n || e.b >= n || e.a == e.b) throw InputError("network: invalid edge");
    ++degree[e.a];
    ++degree[e.b];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + degree[i];
  neighbors_.resize(offsets_[n]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const Edge& e : edges) {
    neighbors_[fill[e.a]++] = e.b;
    neighbors_[fill[e.b]++] = e.a;
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto first = neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]);
    auto last = neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]);
    std::sort(first, last);
    if (std::adjacent_find(first, last) != last) throw InputError("network: duplicate edge");
  }
}

bool Network::has_edge(std::size_t i, std::size_t j) const {
  const auto nb = neighbors(i);
  return std::binary_search(nb.begin(), nb.end(), static_cast<std::uint32_t>(j));
}

void Network::write_edge_list(std::ostream& out) const {
  for (std::size_t i = 0; i < node_count(); ++i) {
    for (std::uint32_t j : neighbors(i)) {
      if (i < j) out << i << ' ' << j << '\n';
    }
  }
}

Network build_network(const FeatureMatrix& features, int width, int height,
                      std::span<const Label> node_label, int num_classes, FeatureMode mode) {
  if (features.rows != node_label.size())
    throw InputError("build_network: feature rows do not match labels");
  const bool proposed = mode == FeatureMode::Proposed;
  const std::size_t k = proposed ? kProposedFeatureNeighbors : kReferenceFeatureNeighbors;
  EdgeSet edges = knn_edges(features, k, node_label, proposed);
  if (proposed) {
    const EdgeSet spatial = spatial_edges(width, height, node_label, true);
    EdgeSet merged;
    merged.reserve(edges.size() + spatial.size());
    std::set_union(edges.begin(), edges.end(), spatial.begin(), spatial.end(),
                   std::back_inserter(merged));
    edges = std::move(merged);
  }
  return Network(width, height, std::vector<Label>(node_label.begin(), node_label.end()),
                 num_classes, edges);
}

// ---------------------------------------------------------------------------
// Initial domination

namespace {

void require_every_class_labeled(const Network& net) {
  const int c = net.num_classes();
  if (c < 2) throw InputError("need at least two classes");
  std::vector<std::size_t> count(c, 0);
  for (Label l : net.labels()) {
    if (l >= 0) ++count[l];
  }
  for (int k = 0; k < c; ++k) {
    if (count[k] == 0)
      throw InputError("class " + std::to_string(k) + " has no labeled nodes");
  }
}

}  // namespace

NodeState initial_state(const Network& net) {
  require_every_class_labeled(net);
  const std::size_t c = static_cast<std::size_t>(net.num_classes());
  NodeState state(net.node_count(), c);
  for (std::size_t i = 0; i < net.node_count(); ++i) {
    auto row = state.row(i);
    const Label l = net.label(i);
    if (l >= 0) {
      row[static_cast<std::size_t>(l)] = 1.0;
    } else {
      std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(c));
    }
  }
  return state;
}

void boost_class(std::span<double> row, std::size_t cls, double delta) {
  const double before = row[cls];
  double others = 0.0;
  for (std::size_t q = 0; q < row.size(); ++q) {
    if (q != cls) others += row[q];
  }
  if (others <= 0.0) return;  // already fully dominated by cls
  const double after = std::min(1.0, before + delta);
  const double scale = (1.0 - after) / others;
  for (std::size_t q = 0; q < row.size(); ++q) {
    if (q != cls) row[q] *= scale;
  }
  row[cls] = after;
}

NodeState seed_influence(const Network& net) {
  NodeState state = initial_state(net);
  const int w = net.width();
  const int h = net.height();
  for (std::size_t p = 0; p < net.node_count(); ++p) {
    const Label cls = net.label(p);
    if (cls < 0) continue;
    const GridCoord at = net.coord(p);
    for (int dr = -2; dr <= 2; ++dr) {
      const int r = at.row + dr;
      if (r < 0 || r >= h) continue;
      for (int dc = -2; dc <= 2; ++dc) {
        const int c = at.col + dc;
        if (c < 0 || c >= w) continue;
        const int ring = std::max(std::abs(dr), std::abs(dc));
        if (ring == 0) continue;
        const std::size_t q = static_cast<std::size_t>(r) * w + c;
        if (net.is_labeled(q)) continue;
        boost_class(state.row(q), static_cast<std::size_t>(cls),
                    ring == 1 ? kNearInfluence : kFarInfluence);
      }
    }
  }
  return state;
}

}  // namespace pcc
