#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "abrlab/manifest.hpp"
#include "abrlab/trace.hpp"

namespace abrlab {

/// Divisors applied to raw features before they reach the policy.
struct FeatureScales {
  double throughput = 10.0 * kBytesPerMbps;  // bytes/s
  double download_time = 10.0;               // seconds
  double chunk_size = 8e6;                   // bytes
  double quality = 100.0;                    // VMAF
  // buffer is scaled by PlayerConfig::buffer_max
};

struct PlayerConfig {
  double buffer_max = 60.0;      // seconds
  double rtt = 0.08;             // seconds, elapses before bytes flow
  std::size_t history_len = 8;
  std::size_t future_horizon = 7;
  bool trace_loop = true;
  bool startup_excluded = true;  // first-chunk stall counted as startup, not T_1
  FeatureScales scales;

  void validate() const;  // throws ConfigError
};

struct PlayerSnapshot {
  double time = 0.0;    // virtual seconds since session start
  double buffer = 0.0;  // seconds of video buffered
  std::size_t chunk = 0;
  std::optional<std::size_t> last_level;
  double last_quality = 0.0;
  double trace_offset = 0.0;  // trace position at time 0

  double trace_position() const { return trace_offset + time; }
  friend bool operator==(const PlayerSnapshot &, const PlayerSnapshot &) = default;
};

struct ChunkOutcome {
  std::size_t level = 0;
  double size = 0.0;           // bytes
  double quality = 0.0;        // VMAF
  double download_time = 0.0;  // seconds, includes rtt
  double throughput = 0.0;     // bytes/s over the transfer (rtt excluded)
  double rebuffer = 0.0;       // seconds
  double idle = 0.0;           // seconds spent waiting for buffer room
  double buffer = 0.0;         // buffer after the chunk is appended

  friend bool operator==(const ChunkOutcome &, const ChunkOutcome &) = default;
};

struct StepResult {
  ChunkOutcome outcome;
  PlayerSnapshot next;
  double startup = 0.0;  // first-chunk stall when startup is excluded
};

struct SessionLog {
  std::vector<ChunkOutcome> chunks;
  double startup_time = 0.0;
  std::string trace_name;
  std::string manifest_name;

  friend bool operator==(const SessionLog &, const SessionLog &) = default;
};

struct Observation {
  std::vector<double> throughput_history;  // history_len, oldest first
  std::vector<double> download_history;    // history_len
  std::vector<double> buffer_history;      // history_len
  std::vector<double> future_sizes;        // future_horizon x levels, row-major
  std::vector<double> future_qualities;    // future_horizon x levels
  double last_quality = 0.0;
  double remain = 1.0;

  friend bool operator==(const Observation &, const Observation &) = default;
};

struct DownloadResult {
  double download_time = 0.0;
  double throughput = 0.0;
};

/// RTT first, then bytes over the trace starting at `position`.
DownloadResult download_chunk(const NetworkTrace &trace, double position, double size, double rtt,
                              bool loop);

/// One chunk of buffer dynamics. Throws DataError past the end of the video.
StepResult step(const PlayerSnapshot &snapshot, std::size_t level, const NetworkTrace &trace,
                const VideoManifest &manifest, const PlayerConfig &config);

Observation build_observation(const std::vector<ChunkOutcome> &history, const PlayerSnapshot &snapshot,
                              const VideoManifest &manifest, const PlayerConfig &config);

/// Everything a decider may look at when choosing the next level.
struct DecisionContext {
  const Observation &observation;
  const PlayerSnapshot &snapshot;
  const std::vector<ChunkOutcome> &history;
  const NetworkTrace &trace;
  const VideoManifest &manifest;
  const PlayerConfig &config;
};

using Decider = std::function<std::size_t(const DecisionContext &)>;

SessionLog run_session(const NetworkTrace &trace, const VideoManifest &manifest, const Decider &decide,
                       const PlayerConfig &config, double trace_offset = 0.0);

/// Replays a fixed level sequence.
SessionLog replay_plan(const NetworkTrace &trace, const VideoManifest &manifest,
                       const std::vector<std::size_t> &plan, const PlayerConfig &config,
                       double trace_offset = 0.0);

/// Per-chunk CSV: k,level,bitrate,size_bytes,vmaf,download_s,rebuffer_s,idle_s,buffer_s,throughput_bps
std::string session_csv(const SessionLog &log, const VideoManifest &manifest);

/// Parses session_csv output back into outcomes (bitrate column ignored).
std::vector<ChunkOutcome> parse_session_csv(const std::string &text);

}  // namespace abrlab
