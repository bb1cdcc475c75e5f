#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "abrlab/manifest.hpp"
#include "abrlab/player.hpp"
#include "abrlab/policy_net.hpp"
#include "abrlab/qoe.hpp"
#include "abrlab/trace.hpp"

namespace abrlab {

enum class TrainMode { kImitation, kBehavioralCloning };

TrainMode parse_train_mode(const std::string &text);  // throws ConfigError
const char *train_mode_name(TrainMode mode);

struct TrainConfig {
  std::vector<NetworkTrace> traces;             // rollout corpus
  std::vector<NetworkTrace> validation_traces;  // held out, played from offset 0
  std::vector<VideoManifest> manifests;
  NetConfig net;
  PlayerConfig player;
  QoeParams qoe;
  std::size_t batch_size = 64;
  std::size_t buffer_capacity = 100000;
  double learning_rate = 1e-4;
  double entropy_coeff = 0.001;
  std::size_t lookahead = 8;
  std::size_t max_samples = 10000;
  std::size_t eval_every = 1000;
  std::size_t workers = 12;
  std::uint64_t seed = 1;
  TrainMode mode = TrainMode::kImitation;
  /// Stop once three consecutive evaluations each improve validation QoE
  /// by less than 0.5%.
  bool early_stop = false;
  /// Fraction of pushed samples whose label is recomputed and compared.
  double spot_check_fraction = 0.01;
  /// Parallel mode: learner updates between published snapshots.
  std::size_t publish_every = 16;
  /// When non-empty, a model file is written here at every evaluation.
  std::string checkpoint_dir;

  void validate() const;  // throws ConfigError
};

struct CurvePoint {
  std::size_t samples = 0;
  double wall_seconds = 0.0;
  double val_qoe = 0.0;       // mean session QoE over validation sessions
  double val_quality = 0.0;   // mean per-chunk VMAF
  double val_rebuffer = 0.0;  // mean total rebuffer seconds per session
  double entropy = 0.0;       // mean policy entropy over validation states

  friend bool operator==(const CurvePoint &, const CurvePoint &) = default;
};

struct TrainResult {
  PolicyNetwork net;
  std::vector<CurvePoint> curve;
  std::size_t samples = 0;  // expert samples pushed
  std::size_t updates = 0;
  std::vector<std::size_t> worker_samples;  // per worker, sums to samples
  std::size_t spot_checks = 0;
  bool stopped_early = false;
};

/// Imitation (or behavioral-cloning) training. workers == 1 runs the loop
/// inline and is deterministic for a seed; workers > 1 runs train_parallel.
TrainResult train(const TrainConfig &config);

/// Worker threads roll out and label; the calling thread is the learner.
TrainResult train_parallel(const TrainConfig &config);

/// Greedy (argmax) evaluation of a policy on the validation sessions.
CurvePoint validate_policy(const PolicyNetwork &net, const TrainConfig &config);

/// Decider that plays a policy greedily (argmax).
Decider policy_decider(std::shared_ptr<const PolicyNetwork> net);

std::size_t argmax(std::span<const double> values);

/// samples,wall_seconds,val_qoe,val_quality,val_rebuffer,entropy
std::string curve_csv(const std::vector<CurvePoint> &curve);

}  // namespace abrlab
