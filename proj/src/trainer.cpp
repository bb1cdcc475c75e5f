#include "abrlab/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

#include "abrlab/error.hpp"
#include "abrlab/model_io.hpp"
#include "abrlab/replay_buffer.hpp"
#include "abrlab/rng.hpp"
#include "abrlab/solver.hpp"

namespace abrlab {
namespace {

// Offset for the learner's batch-sampling stream, far from the per-worker
// seeds (base seed + worker index).
constexpr std::uint64_t kLearnerStream = 0x9e3779b97f4a7c15ULL;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::size_t sample_level(std::span<const double> probs, Rng &rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cumulative += probs[i];
    if (u < cumulative) return i;
  }
  return probs.size() - 1;
}

// One rollout stream: draws episodes, labels every visited state with the
// expert and advances the player with the acting policy.
class Rollout {
public:
  Rollout(const TrainConfig &config, std::uint64_t seed) : config_(config), rng_(seed) {}

  bool at_episode_start() const { return !active_; }

  ExpertSample next(const PolicyNetwork &actor) {
    if (!active_) begin_episode();
    const NetworkTrace &trace = config_.traces[trace_index_];
    const VideoManifest &manifest = config_.manifests[manifest_index_];

    ExpertSample sample;
    sample.observation = build_observation(history_, snapshot_, manifest, config_.player);
    sample.expert_action =
        instant_solve(snapshot_, trace, manifest, config_.lookahead, config_.qoe, config_.player).action;
    sample.snapshot = snapshot_;
    sample.trace_index = trace_index_;
    sample.manifest_index = manifest_index_;

    const std::size_t act = config_.mode == TrainMode::kImitation
                                ? sample_level(actor.forward(sample.observation), rng_)
                                : sample.expert_action;
    const StepResult r = step(snapshot_, act, trace, manifest, config_.player);
    history_.push_back(r.outcome);
    snapshot_ = r.next;
    if (snapshot_.chunk == manifest.chunks()) active_ = false;
    return sample;
  }

private:
  void begin_episode() {
    trace_index_ = rng_.index(config_.traces.size());
    manifest_index_ = rng_.index(config_.manifests.size());
    snapshot_ = PlayerSnapshot{};
    snapshot_.trace_offset = rng_.uniform(0.0, config_.traces[trace_index_].period());
    history_.clear();
    active_ = true;
  }

  const TrainConfig &config_;
  Rng rng_;
  bool active_ = false;
  std::size_t trace_index_ = 0;
  std::size_t manifest_index_ = 0;
  PlayerSnapshot snapshot_;
  std::vector<ChunkOutcome> history_;
};

std::size_t spot_check_period(const TrainConfig &config) {
  if (config.spot_check_fraction <= 0.0) return 0;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(1.0 / config.spot_check_fraction)));
}

void spot_check(const ExpertSample &sample, const TrainConfig &config) {
  const SolveResult fresh = instant_solve(sample.snapshot, config.traces[sample.trace_index],
                                          config.manifests[sample.manifest_index], config.lookahead, config.qoe,
                                          config.player);
  if (fresh.action != sample.expert_action) {
    throw InvariantError("stored expert label " + std::to_string(sample.expert_action) +
                         " differs from recomputed " + std::to_string(fresh.action));
  }
}

std::vector<const ExpertSample *> pointers(const std::vector<ExpertSample> &batch) {
  std::vector<const ExpertSample *> out;
  out.reserve(batch.size());
  for (const ExpertSample &s : batch) out.push_back(&s);
  return out;
}

// Evaluation bookkeeping shared by both training modes.
class Evaluator {
public:
  Evaluator(const TrainConfig &config, Clock::time_point start) : config_(config), start_(start) {}

  void record(std::size_t samples, const PolicyNetwork &net, std::vector<CurvePoint> &curve) {
    CurvePoint p = validate_policy(net, config_);
    p.samples = samples;
    p.wall_seconds = seconds_since(start_);
    curve.push_back(p);
    if (!config_.checkpoint_dir.empty()) {
      std::filesystem::create_directories(config_.checkpoint_dir);
      save_model(net, (std::filesystem::path(config_.checkpoint_dir) /
                       ("checkpoint_" + std::to_string(samples) + ".cmy"))
                          .string());
    }
  }

  bool should_stop(const std::vector<CurvePoint> &curve) const {
    if (!config_.early_stop || curve.size() < 4) return false;
    for (std::size_t i = curve.size() - 3; i < curve.size(); ++i) {
      const double prev = curve[i - 1].val_qoe;
      const double gain = (curve[i].val_qoe - prev) / std::max(std::fabs(prev), 1e-9);
      if (gain >= 0.005) return false;
    }
    return true;
  }

private:
  const TrainConfig &config_;
  Clock::time_point start_;
};

TrainResult train_single(const TrainConfig &config) {
  const auto start = Clock::now();
  TrainResult result{PolicyNetwork(config.net), {}, 0, 0, {0}, 0, false};
  PolicyNetwork &net = result.net;
  ReplayBuffer buffer(config.buffer_capacity);
  Rng learner_rng(config.seed + kLearnerStream);
  Rollout rollout(config, config.seed);
  Evaluator evaluator(config, start);
  const std::size_t check_every = spot_check_period(config);

  evaluator.record(0, net, result.curve);
  while (result.samples < config.max_samples) {
    ExpertSample sample = rollout.next(net);
    ++result.samples;
    if (check_every != 0 && result.samples % check_every == 0) {
      spot_check(sample, config);
      ++result.spot_checks;
    }
    buffer.push(std::move(sample));
    if (buffer.size() >= config.batch_size) {
      const auto batch = buffer.sample_batch(config.batch_size, learner_rng);
      net.update(pointers(batch), config.learning_rate, config.entropy_coeff);
      ++result.updates;
    }
    if (result.samples % config.eval_every == 0) {
      evaluator.record(result.samples, net, result.curve);
      if (evaluator.should_stop(result.curve)) {
        result.stopped_early = true;
        break;
      }
    }
  }
  if (result.curve.back().samples != result.samples) evaluator.record(result.samples, net, result.curve);
  result.worker_samples[0] = result.samples;
  return result;
}

}  // namespace

TrainMode parse_train_mode(const std::string &text) {
  if (text == "imitation") return TrainMode::kImitation;
  if (text == "behavioral_cloning" || text == "bc") return TrainMode::kBehavioralCloning;
  throw ConfigError("unknown training mode: " + text);
}

const char *train_mode_name(TrainMode mode) {
  return mode == TrainMode::kImitation ? "imitation" : "behavioral_cloning";
}

void TrainConfig::validate() const {
  if (traces.empty()) throw ConfigError("training needs at least one trace");
  if (manifests.empty()) throw ConfigError("training needs at least one manifest");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (batch_size > buffer_capacity) throw ConfigError("batch_size must not exceed buffer_capacity");
  if (workers == 0) throw ConfigError("workers must be >= 1");
  if (lookahead == 0) throw ConfigError("lookahead must be >= 1");
  if (eval_every == 0) throw ConfigError("eval_every must be >= 1");
  if (publish_every == 0) throw ConfigError("publish_every must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be >= 0");
  if (!(entropy_coeff >= 0.0) || !std::isfinite(entropy_coeff)) throw ConfigError("entropy_coeff must be >= 0");
  if (!(spot_check_fraction >= 0.0 && spot_check_fraction <= 1.0)) {
    throw ConfigError("spot_check_fraction must be in [0, 1]");
  }
  net.validate();
  player.validate();
  qoe.validate();
  for (const VideoManifest &m : manifests) {
    if (m.levels() != net.levels) {
      throw ConfigError("manifest " + m.name() + " has " + std::to_string(m.levels()) + " levels, network expects " +
                        std::to_string(net.levels));
    }
  }
  if (player.history_len != net.history_len || player.future_horizon != net.future_horizon) {
    throw ConfigError("player feature window does not match the network");
  }
}

TrainResult train(const TrainConfig &config) {
  config.validate();
  return config.workers == 1 ? train_single(config) : train_parallel(config);
}

TrainResult train_parallel(const TrainConfig &config) {
  config.validate();
  if (config.workers < 2) throw ConfigError("train_parallel needs workers >= 2");
  const auto start = Clock::now();
  TrainResult result{PolicyNetwork(config.net), {}, 0, 0, std::vector<std::size_t>(config.workers, 0), 0, false};
  PolicyNetwork &net = result.net;
  ReplayBuffer buffer(config.buffer_capacity);
  Rng learner_rng(config.seed + kLearnerStream);
  Evaluator evaluator(config, start);
  const std::size_t check_every = spot_check_period(config);

  std::mutex publish_mutex;
  auto published = std::make_shared<const PolicyNetwork>(net);
  std::atomic<std::size_t> claimed{0};
  std::atomic<std::size_t> updates_done{0};
  std::atomic<std::size_t> checks{0};
  std::atomic<std::size_t> finished{0};
  std::atomic<bool> stop{false};
  std::mutex progress_mutex;
  std::condition_variable progress_cv;
  std::vector<std::exception_ptr> failures(config.workers);
  // Workers may run at most this many samples ahead of the learner, which
  // keeps acting policies close to the learner on small machines.
  const std::size_t max_lead = config.batch_size + 4 * config.workers;

  auto worker = [&](std::size_t w) {
    try {
      Rollout rollout(config, config.seed + w);
      std::shared_ptr<const PolicyNetwork> actor;
      while (!stop.load()) {
        if (rollout.at_episode_start() || !actor) {
          std::lock_guard lock(publish_mutex);
          actor = published;
        }
        {
          // Bounded waits: progress is signalled without holding the mutex.
          std::unique_lock lock(progress_mutex);
          while (!stop.load() && buffer.total_pushed() >= updates_done.load() + max_lead) {
            progress_cv.wait_for(lock, std::chrono::milliseconds(10));
          }
        }
        if (stop.load()) break;
        const std::size_t ticket = claimed.fetch_add(1);
        if (ticket >= config.max_samples) break;
        ExpertSample sample = rollout.next(*actor);
        if (check_every != 0 && (ticket + 1) % check_every == 0) {
          spot_check(sample, config);
          checks.fetch_add(1);
        }
        buffer.push(std::move(sample));
        ++result.worker_samples[w];
      }
    } catch (...) {
      failures[w] = std::current_exception();
      stop.store(true);
    }
    finished.fetch_add(1);
    progress_cv.notify_all();
  };

  evaluator.record(0, net, result.curve);
  std::vector<std::thread> threads;
  threads.reserve(config.workers);
  for (std::size_t w = 0; w < config.workers; ++w) threads.emplace_back(worker, w);

  std::size_t next_eval = config.eval_every;
  auto learner_step = [&](std::size_t pushed) {
    const std::size_t target = pushed >= config.batch_size ? pushed - config.batch_size + 1 : 0;
    if (result.updates >= target) return false;
    const auto batch = buffer.sample_batch(config.batch_size, learner_rng);
    net.update(pointers(batch), config.learning_rate, config.entropy_coeff);
    ++result.updates;
    updates_done.store(result.updates);
    progress_cv.notify_all();
    if (result.updates % config.publish_every == 0) {
      auto snapshot = std::make_shared<const PolicyNetwork>(net);
      std::lock_guard lock(publish_mutex);
      published = std::move(snapshot);
    }
    return true;
  };

  std::exception_ptr learner_failure;
  try {
    while (true) {
      const std::size_t pushed = buffer.total_pushed();
      const bool workers_done = finished.load() == config.workers;
      const bool worked = !stop.load() && learner_step(pushed);
      while (next_eval <= std::min(pushed, config.max_samples) && !stop.load()) {
        evaluator.record(next_eval, net, result.curve);
        next_eval += config.eval_every;
        if (evaluator.should_stop(result.curve)) {
          result.stopped_early = true;
          stop.store(true);
          progress_cv.notify_all();
        }
      }
      if (!worked) {
        if (workers_done || stop.load()) break;
        buffer.wait_for_push(pushed, std::chrono::milliseconds(5));
      }
    }
  } catch (...) {
    learner_failure = std::current_exception();
    stop.store(true);
    progress_cv.notify_all();
  }
  for (auto &t : threads) t.join();
  if (learner_failure) std::rethrow_exception(learner_failure);
  for (const auto &f : failures) {
    if (f) std::rethrow_exception(f);
  }

  result.samples = buffer.total_pushed();
  result.spot_checks = checks.load();
  if (!result.stopped_early) {
    while (learner_step(result.samples)) {
    }
    while (next_eval <= result.samples) {
      evaluator.record(next_eval, net, result.curve);
      next_eval += config.eval_every;
    }
  }
  if (result.curve.back().samples != result.samples) evaluator.record(result.samples, net, result.curve);
  return result;
}

CurvePoint validate_policy(const PolicyNetwork &net, const TrainConfig &config) {
  const auto &traces = config.validation_traces.empty() ? config.traces : config.validation_traces;
  CurvePoint point;
  double entropy_sum = 0.0;
  std::size_t states = 0;
  std::size_t sessions = 0;
  const Decider greedy = [&](const DecisionContext &ctx) {
    const std::vector<double> probs = net.forward(ctx.observation);
    entropy_sum += policy_entropy(probs);
    ++states;
    return argmax(probs);
  };
  for (const NetworkTrace &trace : traces) {
    for (const VideoManifest &manifest : config.manifests) {
      const SessionMetrics m = session_metrics(run_session(trace, manifest, greedy, config.player), config.qoe);
      point.val_qoe += m.qoe;
      point.val_quality += m.mean_quality;
      point.val_rebuffer += m.rebuffer;
      ++sessions;
    }
  }
  point.val_qoe /= static_cast<double>(sessions);
  point.val_quality /= static_cast<double>(sessions);
  point.val_rebuffer /= static_cast<double>(sessions);
  point.entropy = states == 0 ? 0.0 : entropy_sum / static_cast<double>(states);
  return point;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Decider policy_decider(std::shared_ptr<const PolicyNetwork> net) {
  return [net = std::move(net)](const DecisionContext &ctx) { return argmax(net->forward(ctx.observation)); };
}

std::string curve_csv(const std::vector<CurvePoint> &curve) {
  std::ostringstream out;
  out.precision(17);
  out << "samples,wall_seconds,val_qoe,val_quality,val_rebuffer,entropy\n";
  for (const CurvePoint &p : curve) {
    out << p.samples << ',' << p.wall_seconds << ',' << p.val_qoe << ',' << p.val_quality << ',' << p.val_rebuffer
        << ',' << p.entropy << '\n';
  }
  return out.str();
}

}  // namespace abrlab
