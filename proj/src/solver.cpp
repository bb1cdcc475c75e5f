#include "abrlab/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cmath>
#include <limits>
#include <optional>

#include "abrlab/error.hpp"

namespace abrlab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::size_t effective_horizon(const PlayerSnapshot &snapshot, const VideoManifest &manifest,
                              std::size_t lookahead) {
  if (lookahead < 1) throw ConfigError("lookahead must be >= 1");
  if (snapshot.chunk >= manifest.chunks()) throw DataError("snapshot is past the end of the video");
  return std::min(lookahead, manifest.chunks() - snapshot.chunk);
}

std::optional<double> prev_quality(const PlayerSnapshot &s) {
  if (!s.last_level) return std::nullopt;
  return s.last_quality;
}

class Search {
public:
  Search(const PlayerSnapshot &root, const NetworkTrace &trace, const VideoManifest &manifest,
         std::size_t horizon, const QoeParams &params, const PlayerConfig &config, bool prune)
      : root_(root),
        trace_(trace),
        manifest_(manifest),
        horizon_(horizon),
        levels_(manifest.levels()),
        params_(params),
        config_(config),
        prune_(prune),
        plan_(horizon),
        best_plan_(horizon) {}

  void run() {
    if (prune_) {
      build_bound();
      seed_incumbent();
    }
    descend(0, root_, 0.0);
  }

  double best() const { return best_; }
  const std::vector<std::size_t> &best_plan() const { return best_plan_; }

private:
  // bound_[d * levels + l]: best stall-free QoE of chunks d..horizon-1 given
  // level l at chunk d-1. Stalls only subtract, so it never underestimates.
  void build_bound() {
    bound_.assign((horizon_ + 1) * levels_, 0.0);
    for (std::size_t d = horizon_; d-- > 1;) {
      const std::size_t k = root_.chunk + d;
      for (std::size_t prev = 0; prev < levels_; ++prev) {
        const double pq = manifest_.quality(k - 1, prev);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < levels_; ++m) {
          const double v = chunk_qoe(pq, manifest_.quality(k, m), 0.0, params_) + bound_[(d + 1) * levels_ + m];
          best = std::max(best, v);
        }
        bound_[d * levels_ + prev] = best;
      }
    }
  }

  double bound_after(std::size_t depth, std::size_t level) const { return bound_[(depth + 1) * levels_ + level]; }

  // Greedy rollout on actual value plus bound, giving an early incumbent.
  void seed_incumbent() {
    PlayerSnapshot snap = root_;
    double value = 0.0;
    for (std::size_t d = 0; d < horizon_; ++d) {
      double best_score = -std::numeric_limits<double>::infinity();
      std::size_t best_level = 0;
      StepResult best_step;
      double best_value = 0.0;
      for (std::size_t m = 0; m < levels_; ++m) {
        StepResult r = step(snap, m, trace_, manifest_, config_);
        const double v = value + chunk_qoe(prev_quality(snap), r.outcome.quality, r.outcome.rebuffer, params_);
        const double score = v + bound_after(d, m);
        if (score > best_score) {
          best_score = score;
          best_level = m;
          best_step = r;
          best_value = v;
        }
      }
      plan_[d] = best_level;
      value = best_value;
      snap = best_step.next;
    }
    best_ = value;
    best_plan_ = plan_;
  }

  void descend(std::size_t depth, const PlayerSnapshot &snap, double prefix) {
    const std::optional<double> prev = prev_quality(snap);
    const bool leaf = depth + 1 == horizon_;
    for (std::size_t m = 0; m < levels_; ++m) {
      const StepResult r = step(snap, m, trace_, manifest_, config_);
      const double v = prefix + chunk_qoe(prev, r.outcome.quality, r.outcome.rebuffer, params_);
      plan_[depth] = m;
      if (leaf) {
        if (v > best_ || (v == best_ && plan_ < best_plan_)) {
          best_ = v;
          best_plan_ = plan_;
        }
        continue;
      }
      if (prune_) {
        const double margin = 1e-9 * (1.0 + std::abs(best_));
        if (v + bound_after(depth, m) + margin < best_) continue;
      }
      descend(depth + 1, r.next, v);
    }
  }

  const PlayerSnapshot &root_;
  const NetworkTrace &trace_;
  const VideoManifest &manifest_;
  std::size_t horizon_;
  std::size_t levels_;
  const QoeParams &params_;
  const PlayerConfig &config_;
  bool prune_;
  std::vector<double> bound_;
  std::vector<std::size_t> plan_;
  std::vector<std::size_t> best_plan_;
  double best_ = -std::numeric_limits<double>::infinity();
};

}  // namespace

SolveResult instant_solve(const PlayerSnapshot &snapshot, const NetworkTrace &trace,
                          const VideoManifest &manifest, std::size_t lookahead, const QoeParams &params,
                          const PlayerConfig &config, SolverOptions options) {
  const auto start = Clock::now();
  const std::size_t horizon = effective_horizon(snapshot, manifest, lookahead);
  Search search(snapshot, trace, manifest, horizon, params, config, options.prune);
  search.run();
  SolveResult result;
  result.plan = search.best_plan();
  result.action = result.plan.front();
  result.value = search.best();
  result.elapsed = seconds_since(start);
  return result;
}

SolveResult brute_force_solve(const PlayerSnapshot &snapshot, const NetworkTrace &trace,
                              const VideoManifest &manifest, std::size_t lookahead, const QoeParams &params,
                              const PlayerConfig &config) {
  const auto start = Clock::now();
  if (lookahead < 1) throw ConfigError("lookahead must be >= 1");
  const std::size_t levels = manifest.levels();
  if (std::pow(static_cast<double>(levels), static_cast<double>(lookahead)) > kBruteForceLimit)
    throw ConfigError("brute force enumeration exceeds 2^24 plans");
  const std::size_t horizon = effective_horizon(snapshot, manifest, lookahead);

  std::vector<std::size_t> plan(horizon, 0);
  SolveResult result;
  result.value = -std::numeric_limits<double>::infinity();
  for (;;) {
    PlayerSnapshot snap = snapshot;
    double total = 0.0;
    for (std::size_t level : plan) {
      const std::optional<double> prev = prev_quality(snap);
      const StepResult r = step(snap, level, trace, manifest, config);
      total += chunk_qoe(prev, r.outcome.quality, r.outcome.rebuffer, params);
      snap = r.next;
    }
    if (total > result.value) {
      result.value = total;
      result.plan = plan;
    }
    // Odometer increment, last position fastest: lexicographic order.
    std::size_t i = horizon;
    while (i > 0) {
      --i;
      if (++plan[i] < levels) break;
      plan[i] = 0;
      if (i == 0) {
        result.action = result.plan.front();
        result.elapsed = seconds_since(start);
        return result;
      }
    }
  }
}

namespace {

struct DpNode {
  PlayerSnapshot snap;
  double value = 0.0;
  std::size_t parent = 0;
  long long time_bucket = 0;
  long long buffer_bucket = 0;
};

// Keeps the states of one (chunk, level) cell that no other state in the same
// time bucket beats on both buffer and cumulative QoE. States at different
// times are never compared: a later start can meet a faster trace segment.
std::vector<DpNode> pareto_front(std::vector<DpNode> nodes) {
  std::sort(nodes.begin(), nodes.end(), [](const DpNode &a, const DpNode &b) {
    if (a.time_bucket != b.time_bucket) return a.time_bucket < b.time_bucket;
    if (a.buffer_bucket != b.buffer_bucket) return a.buffer_bucket > b.buffer_bucket;
    return a.value > b.value;
  });
  std::vector<DpNode> kept;
  double best_value = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    // Within a bucket, buffer descends; keep a state only if it beats every
    // state with at least as much buffer.
    const bool new_bucket = i == 0 || nodes[i].time_bucket != nodes[i - 1].time_bucket;
    if (!new_bucket && nodes[i].value <= best_value) continue;
    best_value = nodes[i].value;
    kept.push_back(std::move(nodes[i]));
  }
  return kept;
}

}  // namespace

namespace {

struct BackPointer {
  std::uint32_t parent;
  std::uint32_t level;
};

// One DP pass. Returns the best plan found; `incumbent` prunes states.
std::vector<std::size_t> offline_pass(const NetworkTrace &trace, const VideoManifest &manifest,
                                      const PlayerConfig &config, const QoeParams &params, double trace_offset,
                                      double grid, const std::vector<double> &bound, double incumbent,
                                      std::size_t &states) {
  const std::size_t levels = manifest.levels();
  const std::size_t chunks = manifest.chunks();
  const double margin = 1e-9 * (1.0 + std::abs(incumbent));
  std::vector<std::vector<BackPointer>> back(chunks);
  std::vector<DpNode> layer;
  PlayerSnapshot root;
  root.trace_offset = trace_offset;
  layer.push_back({root, 0.0, 0, 0, 0});
  for (std::size_t k = 0; k < chunks; ++k) {
    std::vector<std::vector<DpNode>> by_level(levels);
    for (std::size_t i = 0; i < layer.size(); ++i) {
      const DpNode &node = layer[i];
      const std::optional<double> prev = prev_quality(node.snap);
      for (std::size_t m = 0; m < levels; ++m) {
        const StepResult r = step(node.snap, m, trace, manifest, config);
        const double v = node.value + chunk_qoe(prev, r.outcome.quality, r.outcome.rebuffer, params);
        if (v + bound[(k + 1) * levels + m] + margin < incumbent) continue;
        by_level[m].push_back(
            {r.next, v, i, std::llround(r.next.time / grid), std::llround(r.next.buffer / grid)});
      }
    }
    std::vector<DpNode> next;
    for (auto &cell : by_level) {
      std::vector<DpNode> front = pareto_front(std::move(cell));
      next.insert(next.end(), std::make_move_iterator(front.begin()), std::make_move_iterator(front.end()));
    }
    if (next.empty()) return {};  // incumbent cannot be beaten
    back[k].reserve(next.size());
    for (const DpNode &n : next)
      back[k].push_back({static_cast<std::uint32_t>(n.parent), static_cast<std::uint32_t>(*n.snap.last_level)});
    states += next.size();
    layer = std::move(next);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < layer.size(); ++i)
    if (layer[i].value > layer[best].value) best = i;
  std::vector<std::size_t> plan(chunks);
  std::size_t idx = best;
  for (std::size_t k = chunks; k > 0; --k) {
    plan[k - 1] = back[k - 1][idx].level;
    idx = back[k - 1][idx].parent;
  }
  return plan;
}

}  // namespace

OfflineResult offline_optimal(const NetworkTrace &trace, const VideoManifest &manifest,
                              const PlayerConfig &config, const QoeParams &params, double trace_offset,
                              double grid, std::size_t incumbent_lookahead) {
  if (!(grid > 0.0)) throw ConfigError("offline grid must be > 0");
  const std::size_t levels = manifest.levels();
  const std::size_t chunks = manifest.chunks();

  // bound[k * levels + l]: stall-free best QoE of chunks k.. given level l at
  // chunk k-1. Stalls only subtract, so pruning against it is exact.
  std::vector<double> bound((chunks + 1) * levels, 0.0);
  for (std::size_t k = chunks; k-- > 1;) {
    for (std::size_t prev = 0; prev < levels; ++prev) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t m = 0; m < levels; ++m)
        best = std::max(best, chunk_qoe(manifest.quality(k - 1, prev), manifest.quality(k, m), 0.0, params) +
                                  bound[(k + 1) * levels + m]);
      bound[k * levels + prev] = best;
    }
  }

  OfflineResult result;
  std::vector<std::size_t> plan;
  double incumbent = -std::numeric_limits<double>::infinity();
  auto consider = [&](const std::vector<std::size_t> &candidate) {
    if (candidate.empty()) return;
    const double v = session_qoe(replay_plan(trace, manifest, candidate, config, trace_offset), params);
    if (v > incumbent) {
      incumbent = v;
      plan = candidate;
    }
  };
  if (incumbent_lookahead > 0) {
    const SessionLog seed =
        run_session(trace, manifest, expert_decider(incumbent_lookahead, params), config, trace_offset);
    std::vector<std::size_t> seed_plan;
    for (const ChunkOutcome &o : seed.chunks) seed_plan.push_back(o.level);
    consider(seed_plan);
    // A coarse pass tightens the incumbent before the fine one.
    const double coarse = std::max(grid, 0.5);
    if (coarse > grid)
      consider(offline_pass(trace, manifest, config, params, trace_offset, coarse, bound, incumbent, result.states));
  }
  // The fine pass must be able to re-find the incumbent, so prune strictly below it.
  consider(offline_pass(trace, manifest, config, params, trace_offset, grid, bound,
                        std::nextafter(incumbent, -std::numeric_limits<double>::infinity()), result.states));
  result.plan = plan;
  result.log = replay_plan(trace, manifest, result.plan, config, trace_offset);
  result.score = session_qoe(result.log, params);
  return result;
}

Decider expert_decider(std::size_t lookahead, QoeParams params, SolverOptions options) {
  return [lookahead, params, options](const DecisionContext &ctx) {
    return instant_solve(ctx.snapshot, ctx.trace, ctx.manifest, lookahead, params, ctx.config, options).action;
  };
}

}  // namespace abrlab
