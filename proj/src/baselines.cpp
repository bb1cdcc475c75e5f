#include "abrlab/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "abrlab/solver.hpp"
#include "abrlab/trace.hpp"

namespace abrlab {

double harmonic_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double inv = 0.0;
  for (double v : values) inv += 1.0 / v;
  return static_cast<double>(values.size()) / inv;
}

std::size_t rb_decide(std::span<const double> throughput_history, const VideoManifest &manifest,
                      std::size_t chunk) {
  if (throughput_history.empty()) return 0;
  const double prediction = harmonic_mean(throughput_history);
  const double duration = manifest.chunk_duration();
  std::size_t level = 0;
  for (std::size_t m = 0; m < manifest.levels(); ++m)
    if (manifest.size(chunk, m) / duration <= prediction) level = m;
  return level;
}

std::vector<double> bola_utilities(const VideoManifest &manifest, std::size_t chunk, BolaUtility utility) {
  std::vector<double> u(manifest.levels());
  for (std::size_t m = 0; m < u.size(); ++m) {
    u[m] = utility == BolaUtility::kLogSize ? std::log(manifest.size(chunk, m) / manifest.size(chunk, 0))
                                            : manifest.quality(chunk, m) / 100.0;
  }
  return u;
}

std::size_t bola_decide(double buffer, double buffer_max, const VideoManifest &manifest, std::size_t chunk,
                        const BolaParams &params) {
  const std::vector<double> u = bola_utilities(manifest, chunk, params.utility);
  const double duration = manifest.chunk_duration();
  const double u_max = *std::max_element(u.begin(), u.end());
  const double v = (buffer_max / duration - 1.0) / (u_max + params.gamma_p);
  const double q = buffer / duration;
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < u.size(); ++m) {
    const double score = (v * (u[m] + params.gamma_p) - q) / manifest.size(chunk, m);
    if (score > best_score) {
      best_score = score;
      best = m;
    }
  }
  return best_score > 0.0 ? best : 0;
}

MpcPrediction robust_mpc_predict(std::span<const ChunkOutcome> history, std::size_t window) {
  MpcPrediction p;
  if (history.empty()) return p;
  std::vector<double> tput;
  tput.reserve(history.size());
  for (const ChunkOutcome &o : history) tput.push_back(o.throughput);
  auto hm_before = [&](std::size_t i) {  // prediction made before chunk i
    const std::size_t lo = i > window ? i - window : 0;
    return harmonic_mean(std::span<const double>(tput).subspan(lo, i - lo));
  };
  p.harmonic = hm_before(tput.size());
  // Errors of the predictions for the most recent `window` chunks. Chunk 0
  // had no prediction.
  const std::size_t n = tput.size();
  const std::size_t first = n > window ? n - window : 0;
  for (std::size_t i = std::max<std::size_t>(first, 1); i < n; ++i) {
    const double err = std::abs(hm_before(i) - tput[i]) / tput[i];
    p.max_error = std::max(p.max_error, err);
  }
  p.discounted = p.harmonic / (1.0 + p.max_error);
  return p;
}

std::size_t robust_mpc_decide(const PlayerSnapshot &snapshot, double predicted_throughput,
                              const VideoManifest &manifest, const MpcConfig &mpc, const QoeParams &params,
                              const PlayerConfig &config) {
  if (!(predicted_throughput > 0.0)) return 0;
  const NetworkTrace future = NetworkTrace::constant(predicted_throughput, "prediction");
  PlayerConfig flat = config;
  flat.trace_loop = false;
  PlayerSnapshot local = snapshot;
  local.trace_offset = 0.0;
  local.time = 0.0;
  return instant_solve(local, future, manifest, mpc.horizon, params, flat).action;
}

Decider rb_decider(std::size_t window) {
  return [window](const DecisionContext &ctx) {
    std::vector<double> tput;
    const auto &h = ctx.history;
    const std::size_t lo = h.size() > window ? h.size() - window : 0;
    for (std::size_t i = lo; i < h.size(); ++i) tput.push_back(h[i].throughput);
    return rb_decide(tput, ctx.manifest, ctx.snapshot.chunk);
  };
}

Decider bola_decider(BolaParams params) {
  return [params](const DecisionContext &ctx) {
    return bola_decide(ctx.snapshot.buffer, ctx.config.buffer_max, ctx.manifest, ctx.snapshot.chunk, params);
  };
}

Decider robust_mpc_decider(MpcConfig mpc, QoeParams params) {
  return [mpc, params](const DecisionContext &ctx) {
    const MpcPrediction p = robust_mpc_predict(ctx.history, mpc.window);
    return robust_mpc_decide(ctx.snapshot, p.discounted, ctx.manifest, mpc, params, ctx.config);
  };
}

}  // namespace abrlab
