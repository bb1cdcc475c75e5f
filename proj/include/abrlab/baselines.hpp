#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "abrlab/manifest.hpp"
#include "abrlab/player.hpp"
#include "abrlab/qoe.hpp"

namespace abrlab {

/// Harmonic mean; 0 for an empty span.
double harmonic_mean(std::span<const double> values);

/// Rate-based: highest level whose chunk rate size/L fits under the harmonic
/// mean of the recent throughputs. Lowest level on an empty history.
std::size_t rb_decide(std::span<const double> throughput_history, const VideoManifest &manifest, std::size_t chunk);

enum class BolaUtility { kLogSize, kVmaf };

struct BolaParams {
  double gamma_p = 5.0;
  BolaUtility utility = BolaUtility::kLogSize;
};

/// Per-level utilities of one chunk.
std::vector<double> bola_utilities(const VideoManifest &manifest, std::size_t chunk, BolaUtility utility);

/// BOLA-BASIC: argmax_m (V (u_m + gamma_p) - Q) / size_m with Q = buffer / L
/// and V = (B_max/L - 1) / (u_max + gamma_p). Lowest level when no score is
/// positive; ties go to the lower level.
std::size_t bola_decide(double buffer, double buffer_max, const VideoManifest &manifest, std::size_t chunk,
                        const BolaParams &params);

struct MpcConfig {
  std::size_t horizon = 5;
  std::size_t window = 5;  // throughput and error history length
};

/// Throughput prediction used by RobustMPC for the next chunk: harmonic mean
/// of the last `window` measurements divided by (1 + max relative error of
/// the last `window` predictions). Returns 0 on an empty history.
struct MpcPrediction {
  double harmonic = 0.0;
  double max_error = 0.0;
  double discounted = 0.0;
};

MpcPrediction robust_mpc_predict(std::span<const ChunkOutcome> history, std::size_t window);

/// Enumerates plans over the next `horizon` chunks against a constant
/// predicted throughput, using the instant solver's machinery.
std::size_t robust_mpc_decide(const PlayerSnapshot &snapshot, double predicted_throughput,
                              const VideoManifest &manifest, const MpcConfig &mpc, const QoeParams &params,
                              const PlayerConfig &config);

Decider rb_decider(std::size_t window = 5);
Decider bola_decider(BolaParams params = {});
Decider robust_mpc_decider(MpcConfig mpc, QoeParams params);

}  // namespace abrlab
