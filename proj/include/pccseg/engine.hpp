#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "pccseg/network.hpp"

namespace pcc {

struct EngineConfig {
  double delta_v = 0.1;            // domination change per visit at full strength
  double p_grd = 0.5;              // probability of a greedy move
  std::uint64_t max_ite = 1'000'000;
  std::uint64_t max_stop = 15'000;  // iterations between stability checkpoints
  double control_stop = 0.001;
  std::uint64_t seed = 0;
  bool check_invariants = false;   // verify every visited row, not just samples

  void validate() const;
};

enum class StopReason { Stability, MaxIterations };

const char* to_string(StopReason reason);

struct RunStats {
  std::uint64_t iterations_executed = 0;
  StopReason stop_reason = StopReason::MaxIterations;
  double wall_seconds = 0.0;
  double mean_max_domination = 0.0;
  std::uint64_t invariant_violations = 0;
};

struct Particle {
  std::uint32_t home = 0;
  Label cls = 0;
  double strength = 1.0;
  std::uint32_t position = 0;
  std::vector<std::uint32_t> dist;  // hop-distance estimates from home
};

/// Random source for a run: 64-bit Mersenne Twister (std::mt19937_64, whose
/// output sequence is fixed by the C++ standard). Unit draws use the top 53
/// bits; index draws are floor(u * n).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) {
    const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

 private:
  std::mt19937_64 gen_;
};

struct EngineState {
  std::vector<Particle> particles;
  NodeState state;
};

/// One particle per labeled node, in node order, at home with strength 1.
EngineState init(const Network& net, NodeState seeded);

/// Uniform over the neighbors of the particle's position.
std::uint32_t random_target(const Particle& p, const Network& net, Rng& rng);

/// Neighbor v drawn with probability proportional to
/// domination(v, class) / (1 + dist[v])^2. Falls back to a uniform draw when
/// every weight is zero.
std::uint32_t greedy_target(const Particle& p, const Network& net, const NodeState& state,
                            Rng& rng);

/// Greedy with probability p_grd, random otherwise. Draws one unit variate to
/// pick the rule, then the rule's own draw.
std::uint32_t choose_target(const Particle& p, const Network& net, const NodeState& state,
                            Rng& rng, double p_grd);

/// Particle p moves onto `target`: domination update, strength update,
/// distance-table update, relocation.
void visit(Particle& p, std::uint32_t target, NodeState& state, const Network& net,
           double delta_v);

/// True when the row sums to 1 within `tol` and every entry is in [0, 1].
bool row_is_valid(std::span<const double> row, double tol = 1e-9);

struct Checkpoint {
  std::uint64_t iteration = 0;
  double mean_max_domination = 0.0;
  double mean_improvement = 0.0;
  const std::vector<Particle>& particles;
  const NodeState& state;
};

using ProgressCallback = std::function<void(const Checkpoint&)>;

struct RunResult {
  NodeState state;
  RunStats stats;
};

/// Iterates until the mean max-domination improvement over unlabeled nodes
/// between checkpoints drops below control_stop, or max_ite iterations.
/// One iteration moves every particle once, in index order.
RunResult run(const Network& net, NodeState seeded, const EngineConfig& cfg,
              const ProgressCallback& on_checkpoint = {});

/// Argmax per row, lowest class index on ties.
std::vector<Label> classify(const NodeState& state);

/// Mean over unlabeled nodes of the row maximum (over all nodes if none).
double mean_max_domination(const Network& net, const NodeState& state);

}  // namespace pcc
