#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace abrlab {

/// Bytes per second in one megabit per second.
inline constexpr double kBytesPerMbps = 125000.0;

struct TraceSample {
  double time = 0.0;        // seconds
  double throughput = 0.0;  // bytes/second

  friend bool operator==(const TraceSample &, const TraceSample &) = default;
};

/// Piecewise-constant throughput timeline. Sample i holds its rate over
/// [t_i, t_{i+1}); the last sample lasts as long as the gap before it. Time
/// before the first sample uses the first rate. Past the end the trace either
/// wraps (looping) or keeps its final rate forever.
class NetworkTrace {
public:
  NetworkTrace() = default;
  /// Validates invariants; throws DataError on violation.
  NetworkTrace(std::vector<TraceSample> samples, std::string name);

  /// A two-sample trace at a fixed rate (non-looping use extends it forever).
  static NetworkTrace constant(double throughput, std::string name = "constant");

  std::span<const TraceSample> samples() const { return samples_; }
  const std::string &name() const { return name_; }
  std::size_t size() const { return samples_.size(); }

  double start() const { return samples_.front().time; }
  /// End of the last segment.
  double end() const { return end_; }
  /// Length of one loop.
  double period() const { return end_ - samples_.front().time; }

  /// Throughput in effect at a trace position.
  double rate_at(double position, bool loop) const;

  /// Seconds needed to move `bytes` starting at `position`, walking segment
  /// boundaries exactly.
  double transfer_time(double position, double bytes, bool loop) const;

  /// Mean throughput over one period, weighted by segment duration.
  double mean_throughput() const;

  friend bool operator==(const NetworkTrace &a, const NetworkTrace &b) {
    return a.samples_ == b.samples_ && a.name_ == b.name_;
  }

private:
  std::size_t segment_index(double position) const;
  double wrap(double position) const;

  std::vector<TraceSample> samples_;
  std::string name_;
  double end_ = 0.0;
};

/// Parses "SECONDS MBPS" lines. Blank lines and '#' comments are skipped.
/// Mbps are scaled to bytes/second with a single rounding.
NetworkTrace parse_trace(std::string_view text, std::string name);

/// Writes the same two-column format; parse_trace(serialize_trace(x)) == x.
std::string serialize_trace(const NetworkTrace &trace);

NetworkTrace load_trace(const std::string &path);
void save_trace(const NetworkTrace &trace, const std::string &path);

/// Loads every regular file in a directory, sorted by file name.
std::vector<NetworkTrace> load_trace_dir(const std::string &dir);

struct MarkovTraceConfig {
  std::vector<double> state_levels;               // bytes/second
  std::vector<std::vector<double>> transition_matrix;  // row-stochastic
  double dwell = 1.0;                             // seconds per sample
  double noise_fraction = 0.0;                    // in [0, 1)
  double duration = 320.0;                        // seconds
  std::uint64_t seed = 0;
  std::string name = "markov";

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;
};

/// Transition matrix that stays with probability `stay` and otherwise moves
/// to a uniformly chosen other state.
std::vector<std::vector<double>> sticky_transitions(std::size_t states, double stay);

/// The lab's default corpus chain: seven states from 0.3 to 6 Mbps, sticky
/// transitions (stay 0.8), 1 s dwell, 20% noise, 320 s.
MarkovTraceConfig default_markov_config(std::uint64_t seed);

/// One sample per dwell period; throughput = state mean * (1 + u) with
/// u ~ U[-noise, +noise]. Deterministic for a seed.
NetworkTrace generate_markov_trace(const MarkovTraceConfig &config);

}  // namespace abrlab
