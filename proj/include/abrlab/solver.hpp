#pragma once

#include <cstddef>
#include <vector>

#include "abrlab/manifest.hpp"
#include "abrlab/player.hpp"
#include "abrlab/qoe.hpp"
#include "abrlab/trace.hpp"

namespace abrlab {

struct SolveResult {
  std::size_t action = 0;
  double value = 0.0;  // QoE of the best plan over the lookahead window
  std::vector<std::size_t> plan;
  double elapsed = 0.0;  // seconds
};

struct SolverOptions {
  /// Branch-and-bound against a stall-free relaxation. Off means plain
  /// exhaustive depth-first enumeration.
  bool prune = true;
};

/// Levels^N above which brute_force_solve refuses to enumerate.
inline constexpr double kBruteForceLimit = 16777216.0;  // 2^24

/// Exact maximizer of the summed chunk QoE over the next min(N, remaining)
/// chunks, each candidate rolled forward through the player on the true
/// trace. Ties go to the lowest first level, then the lexicographically
/// smallest plan.
SolveResult instant_solve(const PlayerSnapshot &snapshot, const NetworkTrace &trace,
                          const VideoManifest &manifest, std::size_t lookahead, const QoeParams &params,
                          const PlayerConfig &config, SolverOptions options = {});

/// Plain enumeration of every plan, each simulated from the snapshot
/// independently. Test oracle for instant_solve.
SolveResult brute_force_solve(const PlayerSnapshot &snapshot, const NetworkTrace &trace,
                              const VideoManifest &manifest, std::size_t lookahead, const QoeParams &params,
                              const PlayerConfig &config);

struct OfflineResult {
  SessionLog log;
  double score = 0.0;
  std::vector<std::size_t> plan;
  std::size_t states = 0;  // DP states kept, summed over chunks
};

/// Whole-session dynamic program over (chunk, level) cells. Within a cell a
/// state is dropped when another is no later, holds no less buffer and has no
/// lower cumulative QoE, with time and buffer compared on a `grid`-second
/// lattice. Each kept state carries its exact snapshot, so the winning plan
/// replays to exactly the reported score. States that cannot beat the session
/// of an expert with `incumbent_lookahead` (0 disables) under a stall-free
/// bound are pruned.
OfflineResult offline_optimal(const NetworkTrace &trace, const VideoManifest &manifest,
                              const PlayerConfig &config, const QoeParams &params, double trace_offset = 0.0,
                              double grid = 0.01, std::size_t incumbent_lookahead = 4);

/// Decider that runs instant_solve on the live snapshot each chunk.
Decider expert_decider(std::size_t lookahead, QoeParams params, SolverOptions options = {});

}  // namespace abrlab
