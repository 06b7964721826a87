#include "pccseg/engine.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <string>

namespace pcc {

void EngineConfig::validate() const {
  if (!(delta_v > 0.0) || !std::isfinite(delta_v)) throw InputError("delta_v must be > 0");
  if (!(p_grd >= 0.0 && p_grd <= 1.0)) throw InputError("p_grd must be in [0, 1]");
  if (max_stop == 0) throw InputError("max_stop must be > 0");
  if (!(control_stop >= 0.0)) throw InputError("control_stop must be >= 0");
}

const char* to_string(StopReason reason) {
  return reason == StopReason::Stability ? "stability" : "max_iterations";
}

bool row_is_valid(std::span<const double> row, double tol) {
  double sum = 0.0;
  for (double v : row) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

EngineState init(const Network& net, NodeState seeded) {
  const std::size_t n = net.node_count();
  const std::size_t c = static_cast<std::size_t>(net.num_classes());
  if (seeded.nodes != n || seeded.classes != c)
    throw InputError("engine: seeded state does not match the network");
  if (c < 2) throw InputError("need at least two classes");

  EngineState out;
  std::vector<std::size_t> per_class(c, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!row_is_valid(seeded.row(i)))
      throw InputError("engine: seeded row " + std::to_string(i) + " does not sum to 1");
    const Label l = net.label(i);
    if (l < 0) continue;
    if (seeded(i, static_cast<std::size_t>(l)) != 1.0)
      throw InputError("engine: labeled row " + std::to_string(i) + " is not one-hot");
    ++per_class[static_cast<std::size_t>(l)];
    Particle p;
    p.home = static_cast<std::uint32_t>(i);
    p.cls = l;
    p.strength = 1.0;
    p.position = p.home;
    p.dist.assign(n, static_cast<std::uint32_t>(n - 1));
    p.dist[i] = 0;
    out.particles.push_back(std::move(p));
  }
  if (out.particles.empty()) throw InputError("engine: no labeled nodes");
  for (std::size_t k = 0; k < c; ++k) {
    if (per_class[k] == 0)
      throw InputError("class " + std::to_string(k) + " has no labeled nodes");
  }
  out.state = std::move(seeded);
  return out;
}

std::uint32_t random_target(const Particle& p, const Network& net, Rng& rng) {
  const auto nb = net.neighbors(p.position);
  assert(!nb.empty());
  return nb[rng.below(nb.size())];
}

std::uint32_t greedy_target(const Particle& p, const Network& net, const NodeState& state,
                            Rng& rng) {
  const auto nb = net.neighbors(p.position);
  assert(!nb.empty());
  const std::size_t cls = static_cast<std::size_t>(p.cls);
  auto weight = [&](std::uint32_t v) {
    const double hop = 1.0 + static_cast<double>(p.dist[v]);
    return state(v, cls) / (hop * hop);
  };
  double total = 0.0;
  for (std::uint32_t v : nb) total += weight(v);
  if (!(total > 0.0)) return nb[rng.below(nb.size())];

  const double pick = rng.uniform() * total;
  double acc = 0.0;
  for (std::uint32_t v : nb) {
    const double w = weight(v);
    acc += w;
    if (pick < acc && w > 0.0) return v;
  }
  // Rounding left pick at or past the final sum: take the last weighted one.
  for (auto it = nb.rbegin(); it != nb.rend(); ++it) {
    if (weight(*it) > 0.0) return *it;
  }
  return nb.back();
}

std::uint32_t choose_target(const Particle& p, const Network& net, const NodeState& state,
                            Rng& rng, double p_grd) {
  if (rng.uniform() < p_grd) return greedy_target(p, net, state, rng);
  return random_target(p, net, rng);
}

void visit(Particle& p, std::uint32_t target, NodeState& state, const Network& net,
           double delta_v) {
  const std::size_t cls = static_cast<std::size_t>(p.cls);
  auto row = state.row(target);
  if (!net.is_labeled(target)) {
    const std::size_t c = state.classes;
    const double step = delta_v * p.strength / static_cast<double>(c - 1);
    double removed = 0.0;
    for (std::size_t q = 0; q < c; ++q) {
      if (q == cls) continue;
      const double taken = std::min(row[q], step);
      row[q] -= taken;
      removed += taken;
    }
    row[cls] = std::min(1.0, row[cls] + removed);
  }
  p.strength = row[cls];
  const std::uint32_t via = p.dist[p.position] + 1;
  if (via < p.dist[target]) p.dist[target] = via;
  p.position = target;
}

double mean_max_domination(const Network& net, const NodeState& state) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < state.nodes; ++i) {
    if (net.is_labeled(i)) continue;
    const auto row = state.row(i);
    sum += *std::max_element(row.begin(), row.end());
    ++count;
  }
  if (count == 0) return state.nodes == 0 ? 0.0 : 1.0;
  return sum / static_cast<double>(count);
}

namespace {

// Row maxima of unlabeled nodes, in node order.
void unlabeled_maxima(const Network& net, const NodeState& state, std::vector<double>& out) {
  out.clear();
  for (std::size_t i = 0; i < state.nodes; ++i) {
    if (net.is_labeled(i)) continue;
    const auto row = state.row(i);
    out.push_back(*std::max_element(row.begin(), row.end()));
  }
}

constexpr std::uint64_t kSampledCheckInterval = 1000;

}  // namespace

RunResult run(const Network& net, NodeState seeded, const EngineConfig& cfg,
              const ProgressCallback& on_checkpoint) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  EngineState es = init(net, std::move(seeded));
  Rng rng(cfg.seed);

  RunStats stats;
  std::vector<double> previous;
  std::vector<double> current;
  unlabeled_maxima(net, es.state, previous);

  stats.stop_reason = StopReason::MaxIterations;
  for (std::uint64_t it = 1; it <= cfg.max_ite; ++it) {
    const bool check = cfg.check_invariants || it % kSampledCheckInterval == 0;
    for (Particle& p : es.particles) {
      if (net.degree(p.position) == 0) continue;  // stranded on an isolated node
      const std::uint32_t target = choose_target(p, net, es.state, rng, cfg.p_grd);
      visit(p, target, es.state, net, cfg.delta_v);
      if (check && !row_is_valid(es.state.row(target))) {
        ++stats.invariant_violations;
        assert(false && "domination row violates conservation");
      }
    }
    stats.iterations_executed = it;

    if (it % cfg.max_stop == 0) {
      unlabeled_maxima(net, es.state, current);
      double improvement = 0.0;
      for (std::size_t i = 0; i < current.size(); ++i) improvement += current[i] - previous[i];
      if (!current.empty()) improvement /= static_cast<double>(current.size());
      if (on_checkpoint) {
        on_checkpoint(Checkpoint{it, mean_max_domination(net, es.state), improvement,
                                 es.particles, es.state});
      }
      std::swap(previous, current);
      if (improvement < cfg.control_stop) {
        stats.stop_reason = StopReason::Stability;
        break;
      }
    }
  }

  stats.mean_max_domination = mean_max_domination(net, es.state);
  stats.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {std::move(es.state), stats};
}

std::vector<Label> classify(const NodeState& state) {
  std::vector<Label> out(state.nodes, 0);
  for (std::size_t i = 0; i < state.nodes; ++i) {
    const auto row = state.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] > row[best]) best = c;
    }
    out[i] = static_cast<Label>(best);
  }
  return out;
}

}  // namespace pcc
