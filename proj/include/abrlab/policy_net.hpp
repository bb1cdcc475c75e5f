#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "abrlab/player.hpp"

namespace abrlab {

struct NetConfig {
  std::size_t levels = 6;
  std::size_t history_len = 8;
  std::size_t future_horizon = 7;
  std::size_t conv_channels = 128;
  std::size_t conv_kernel = 4;
  std::size_t hidden = 128;
  bool recurrent = false;  // GRU over the history axis
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError
  friend bool operator==(const NetConfig &, const NetConfig &) = default;
};

/// A state labelled with the level the expert picked there.
struct ExpertSample {
  Observation observation;
  std::size_t expert_action = 0;
  // Where the sample came from, kept for label spot checks.
  PlayerSnapshot snapshot;
  std::size_t trace_index = 0;
  std::size_t manifest_index = 0;
};

/// Named view into the network's flat parameter storage.
struct TensorInfo {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;

  friend bool operator==(const TensorInfo &, const TensorInfo &) = default;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

inline constexpr double kLogFloor = 1e-12;

/// -sum(target log p) - alpha * H(p), logs floored at kLogFloor, 0 log 0 = 0.
double policy_loss(std::span<const double> probs, std::size_t target, double entropy_coeff);
/// H(p) = -sum p log p with the same conventions.
double policy_entropy(std::span<const double> probs);

/// Convolutional policy: per-branch encoders, optional GRU, one hidden ReLU
/// layer and a softmax head. All parameters live in one contiguous buffer so
/// the optimizer runs as a single vector kernel.
class PolicyNetwork {
public:
  explicit PolicyNetwork(const NetConfig &config);

  const NetConfig &config() const { return config_; }
  const std::vector<TensorInfo> &tensors() const { return tensors_; }
  const TensorInfo &tensor(const std::string &name) const;
  std::size_t parameter_count() const { return params_.size(); }

  std::span<const double> parameters() const { return params_; }
  std::span<double> parameters() { return params_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<double> first_moment() { return m_; }
  std::span<const double> second_moment() const { return v_; }
  std::span<double> second_moment() { return v_; }
  std::uint64_t step_count() const { return steps_; }
  void set_step_count(std::uint64_t steps) { steps_ = steps; }

  /// Level probabilities for one observation. Read-only; safe to call
  /// concurrently on a shared network.
  std::vector<double> forward(const Observation &obs) const;
  /// Row-major batch x levels probabilities.
  std::vector<double> forward_batch(std::span<const Observation *const> batch) const;

  /// Mean loss over the batch; when `grad` is non-null it is resized to
  /// parameter_count() and receives the exact gradient of that mean.
  double loss_and_gradient(std::span<const ExpertSample *const> batch, double entropy_coeff,
                           std::vector<double> *grad) const;

  /// One Adam step on the mean loss; returns the pre-update loss. Throws
  /// InvariantError on a non-finite gradient.
  double update(std::span<const ExpertSample *const> batch, double learning_rate, double entropy_coeff,
                const AdamConfig &adam = {});

  friend bool operator==(const PolicyNetwork &, const PolicyNetwork &) = default;

private:
  struct Tape;
  static Tape &scratch();  // per-thread, reused across calls
  void add_tensor(const std::string &name, std::vector<std::size_t> shape);
  void forward_tape(std::span<const Observation *const> batch, Tape &tape) const;

  NetConfig config_;
  std::vector<TensorInfo> tensors_;
  std::vector<double> params_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t steps_ = 0;
};

/// Straightforward per-sample evaluation of the same network in extended
/// precision, written independently of the batched kernels. Oracle for
/// forward_batch and the numeric side of gradient_check.
std::vector<long double> reference_forward(const PolicyNetwork &net, std::span<const double> params,
                                           const Observation &obs);

/// Central differences (step 1e-5) on `count` random parameters against the
/// analytic gradient of the loss on one sample. Returns the max of
/// |g_a - g_n| / max(|g_a|, |g_n|, 1e-8).
double gradient_check(const PolicyNetwork &net, const ExpertSample &sample, double entropy_coeff,
                      std::uint64_t seed, std::size_t count = 200);

}  // namespace abrlab
