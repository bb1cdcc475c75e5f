#pragma once

#include <cstdint>
#include <vector>

#include "abrlab/manifest.hpp"
#include "abrlab/player.hpp"
#include "abrlab/rng.hpp"
#include "abrlab/trace.hpp"

namespace abrlab::testing {

/// Markov trace over a range that makes ladder choices non-trivial.
inline NetworkTrace random_trace(std::uint64_t seed, double duration = 200.0) {
  MarkovTraceConfig c;
  c.state_levels = {0.3 * kBytesPerMbps, 0.8 * kBytesPerMbps, 1.5 * kBytesPerMbps, 3.0 * kBytesPerMbps,
                    5.0 * kBytesPerMbps};
  c.transition_matrix = sticky_transitions(c.state_levels.size(), 0.7);
  c.noise_fraction = 0.25;
  c.duration = duration;
  c.seed = seed;
  c.name = "trace" + std::to_string(seed);
  return generate_markov_trace(c);
}

inline VideoManifest random_manifest(std::uint64_t seed, std::size_t chunks = 16, std::size_t levels = 6) {
  SyntheticVideoConfig c;
  c.chunks = chunks;
  c.seed = seed;
  c.bitrates.resize(levels);
  const std::vector<double> ladder = {300e3, 750e3, 1200e3, 1850e3, 2850e3, 4300e3};
  for (std::size_t l = 0; l < levels; ++l) c.bitrates[l] = ladder[l * ladder.size() / levels];
  c.name = "video" + std::to_string(seed);
  return generate_synthetic_manifest(c);
}

/// A reachable-looking snapshot: arbitrary time, buffer and previous level.
inline PlayerSnapshot random_snapshot(Rng &rng, const VideoManifest &m, const PlayerConfig &config) {
  PlayerSnapshot s;
  s.chunk = rng.index(m.chunks());
  s.time = rng.uniform(0.0, 100.0);
  s.buffer = s.chunk == 0 ? 0.0 : rng.uniform(0.0, config.buffer_max);
  if (s.chunk > 0) {
    s.last_level = rng.index(m.levels());
    s.last_quality = m.quality(s.chunk - 1, *s.last_level);
  }
  s.trace_offset = rng.uniform(0.0, 50.0);
  return s;
}

/// Feature vectors of the right shapes with values in the ranges the player
/// produces after normalization.
inline Observation random_observation(Rng &rng, std::size_t levels, std::size_t history_len,
                                      std::size_t future_horizon) {
  Observation o;
  auto fill = [&](std::vector<double> &v, std::size_t n, double hi) {
    v.resize(n);
    for (double &x : v) x = rng.uniform(0.0, hi);
  };
  fill(o.throughput_history, history_len, 1.0);
  fill(o.download_history, history_len, 1.0);
  fill(o.buffer_history, history_len, 1.0);
  fill(o.future_sizes, future_horizon * levels, 1.0);
  fill(o.future_qualities, future_horizon * levels, 1.0);
  o.last_quality = rng.uniform(0.0, 1.0);
  o.remain = rng.uniform(0.0, 1.0);
  return o;
}

}  // namespace abrlab::testing
