// Acceptance suite: one [PASS]/[FAIL] line per criterion (1-10).
//
//   acceptance            run everything
//   acceptance 4 9        run a subset
//
// Training criteria use synthetic corpora generated here from fixed seeds.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "../fixtures.hpp"
#include "abrlab/baselines.hpp"
#include "abrlab/evaluate.hpp"
#include "abrlab/io.hpp"
#include "abrlab/player.hpp"
#include "abrlab/policy_net.hpp"
#include "abrlab/qoe.hpp"
#include "abrlab/solver.hpp"
#include "abrlab/trainer.hpp"

using namespace abrlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double x, int precision = 4) {
  std::ostringstream out;
  out.precision(precision);
  out << x;
  return out.str();
}

double mean(const std::vector<double> &v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

// ---- 1. solver exactness ---------------------------------------------------

Outcome solver_exactness() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(2024);
  const PlayerConfig cfg;
  const QoeParams qp;
  std::size_t mismatches = 0, total = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    for (int i = 0; i < 100; ++i) {
      const VideoManifest m = testing::random_manifest(rng.next_u64(), 16, 6);
      const NetworkTrace t = testing::random_trace(rng.next_u64());
      const PlayerSnapshot s = testing::random_snapshot(rng, m, cfg);
      const SolveResult a = instant_solve(s, t, m, n, qp, cfg);
      const SolveResult b = brute_force_solve(s, t, m, n, qp, cfg);
      ++total;
      if (a.action != b.action || a.plan != b.plan || a.value != b.value) ++mismatches;
    }
  }
  const double elapsed = seconds_since(start);
  return {mismatches == 0 && elapsed < 60.0,
          std::to_string(total - mismatches) + "/" + std::to_string(total) + " snapshots identical, " +
              fmt(elapsed, 3) + " s"};
}

// ---- 2. player fidelity ----------------------------------------------------

struct StepCase {
  const char *name;
  std::vector<std::pair<double, double>> segments;  // (time, bytes/s)
  bool loop;
  double offset, time, buffer, size, chunk_len, buffer_max, rtt;
  double download, rebuffer, idle, next_buffer, next_time;
};

// Expected values are exact hand substitutions into the buffer recursion.
const std::vector<StepCase> kStepCases = {
    {"substitution: ample buffer", {{0.0, 1000000.0}, {1.0, 1000000.0}}, false, 0.0, 0.0, 10.0, 2000000.0, 4.0, 60.0, 0.0, 2.0, 0.0, 0.0, 12.0, 2.0},
    {"substitution: stall", {{0.0, 1000000.0}, {1.0, 1000000.0}}, false, 0.0, 0.0, 1.0, 3000000.0, 4.0, 60.0, 0.0, 3.0, 2.0, 0.0, 4.0, 3.0},
    {"substitution: cap and idle", {{0.0, 1000000.0}, {1.0, 1000000.0}}, false, 0.0, 0.0, 59.0, 500000.0, 4.0, 60.0, 0.0, 0.5, 0.0, 2.5, 60.0, 3.0},
    {"rtt before bytes", {{0.0, 1000000.0}, {1.0, 1000000.0}}, false, 0.0, 0.0, 5.0, 2000000.0, 4.0, 60.0, 0.08, 2.08, 0.0, 0.0, 6.92, 2.08},
    {"two segments", {{0.0, 1000000.0}, {1.0, 3000000.0}}, false, 0.0, 0.0, 0.5, 2500000.0, 4.0, 60.0, 0.0, 1.5, 1.0, 0.0, 4.0, 1.5},
    {"rtt shifts the segment walk", {{0.0, 1000000.0}, {1.0, 3000000.0}}, false, 0.0, 0.0, 2.0, 2500000.0, 4.0, 60.0, 0.5, 1.6666666666666667, 0.0, 0.0, 4.333333333333333, 1.6666666666666667},
    {"start inside the second segment", {{0.0, 1000000.0}, {1.0, 3000000.0}}, false, 0.0, 1.0, 8.0, 3000000.0, 4.0, 60.0, 0.0, 1.0, 0.0, 0.0, 11.0, 2.0},
    {"trace offset", {{0.0, 1000000.0}, {1.0, 3000000.0}}, false, 0.5, 0.0, 3.0, 2000000.0, 4.0, 60.0, 0.0, 1.0, 0.0, 0.0, 6.0, 1.0},
    {"wrap past the end", {{0.0, 2000000.0}, {1.0, 1000000.0}}, true, 0.0, 1.5, 0.0, 2000000.0, 4.0, 60.0, 0.0, 1.25, 1.25, 0.0, 4.0, 2.75},
    {"hold the final rate", {{0.0, 2000000.0}, {1.0, 1000000.0}}, false, 0.0, 1.5, 2.0, 2000000.0, 4.0, 60.0, 0.0, 2.0, 0.0, 0.0, 4.0, 3.5},
    {"start several periods in", {{0.0, 1000000.0}, {2.0, 4000000.0}}, true, 0.0, 10.0, 20.0, 8000000.0, 4.0, 60.0, 0.0, 2.0, 0.0, 0.0, 22.0, 12.0},
    {"four-segment walk", {{0.0, 1000000.0}, {0.5, 2000000.0}, {1.0, 4000000.0}, {1.5, 8000000.0}}, false, 0.0, 0.0, 1.0, 3500000.0, 4.0, 60.0, 0.0, 1.5, 0.5, 0.0, 4.0, 1.5},
    {"four-segment walk with rtt, buffer drains exactly", {{0.0, 1000000.0}, {0.5, 2000000.0}, {1.0, 4000000.0}, {1.5, 8000000.0}}, false, 0.0, 0.0, 1.53125, 3500000.0, 4.0, 60.0, 0.25, 1.53125, 0.0, 0.0, 4.0, 1.53125},
    {"short chunks", {{0.0, 1000000.0}, {1.0, 1000000.0}}, false, 0.0, 0.0, 0.5, 1000000.0, 2.0, 60.0, 0.0, 1.0, 0.5, 0.0, 2.0, 1.0},
    {"long chunks hit the cap", {{0.0, 5000000.0}, {1.0, 5000000.0}}, false, 0.0, 0.0, 8.0, 5000000.0, 10.0, 15.0, 0.0, 1.0, 0.0, 2.0, 15.0, 3.0},
    {"refill lands exactly on the cap", {{0.0, 1000000.0}, {1.0, 1000000.0}}, false, 0.0, 0.0, 7.0, 1000000.0, 4.0, 10.0, 0.0, 1.0, 0.0, 0.0, 10.0, 1.0},
    {"stall from rtt alone", {{0.0, 1000000000000.0}, {1.0, 1000000000000.0}}, false, 0.0, 0.0, 0.05, 1000000.0, 4.0, 60.0, 0.1, 0.100001, 0.050001000000000004, 0.0, 4.0, 0.100001},
    {"slow link, deep buffer", {{0.0, 100000.0}, {1.0, 100000.0}}, false, 0.0, 0.0, 30.0, 2000000.0, 4.0, 60.0, 0.0, 20.0, 0.0, 0.0, 14.0, 20.0},
    {"cap equal to chunk length", {{0.0, 1000000.0}, {1.0, 1000000.0}}, false, 0.0, 0.0, 3.0, 1000000.0, 4.0, 4.0, 0.0, 1.0, 0.0, 2.0, 4.0, 3.0},
    {"two wraps", {{0.0, 1000000.0}, {1.0, 500000.0}}, true, 0.0, 0.0, 2.5, 3000000.0, 4.0, 60.0, 0.0, 4.0, 1.5, 0.0, 4.0, 4.0},
};

Outcome player_fidelity() {
  std::size_t bad = 0;
  std::string first_bad;
  for (const StepCase &c : kStepCases) {
    std::vector<TraceSample> samples;
    for (auto [t, r] : c.segments) samples.push_back({t, r});
    const NetworkTrace trace(samples, c.name);
    const VideoManifest m(c.chunk_len, {1e6}, {c.size, c.size, c.size}, {50.0, 50.0, 50.0}, "case");
    PlayerConfig cfg;
    cfg.rtt = c.rtt;
    cfg.buffer_max = c.buffer_max;
    cfg.trace_loop = c.loop;
    PlayerSnapshot s;
    s.chunk = 1;
    s.time = c.time;
    s.buffer = c.buffer;
    s.last_level = 0;
    s.last_quality = 50.0;
    s.trace_offset = c.offset;
    const StepResult r = step(s, 0, trace, m, cfg);
    const bool ok = std::abs(r.outcome.download_time - c.download) <= 1e-9 &&
                    std::abs(r.outcome.rebuffer - c.rebuffer) <= 1e-9 && std::abs(r.outcome.idle - c.idle) <= 1e-9 &&
                    std::abs(r.next.buffer - c.next_buffer) <= 1e-9 && std::abs(r.next.time - c.next_time) <= 1e-9 &&
                    r.next.chunk == 2;
    if (!ok && bad++ == 0) first_bad = c.name;
  }

  // Randomized sessions: bounds after every step; the clock equals the sum of
  // download and idle time (stalls happen inside downloads) and also equals
  // stalls plus content played.
  Rng rng(99);
  std::size_t steps = 0, violations = 0;
  double worst_clock = 0.0;
  while (steps < 10000) {
    const VideoManifest m = testing::random_manifest(rng.next_u64(), 40);
    const NetworkTrace t = testing::random_trace(rng.next_u64(), rng.uniform(5.0, 300.0));
    PlayerConfig cfg;
    cfg.buffer_max = rng.uniform(5.0, 60.0);
    cfg.rtt = rng.uniform(0.0, 0.3);
    cfg.trace_loop = rng.uniform() < 0.8;
    PlayerSnapshot snap;
    snap.trace_offset = rng.uniform(0.0, 100.0);
    double clock = 0.0, stall = 0.0;
    for (std::size_t k = 0; k < m.chunks(); ++k) {
      const StepResult r = step(snap, rng.index(m.levels()), t, m, cfg);
      snap = r.next;
      clock += r.outcome.download_time + r.outcome.idle;
      stall += r.startup + r.outcome.rebuffer;
      if (!(snap.buffer >= 0.0 && snap.buffer <= cfg.buffer_max)) ++violations;
      ++steps;
    }
    const double played = static_cast<double>(m.chunks()) * m.chunk_duration() - snap.buffer;
    worst_clock = std::max({worst_clock, std::abs(snap.time - clock), std::abs(snap.time - (stall + played))});
  }
  const bool pass = bad == 0 && violations == 0 && worst_clock <= 1e-9;
  return {pass, std::to_string(kStepCases.size() - bad) + "/" + std::to_string(kStepCases.size()) +
                    " substitution cases" + (bad ? " (first failure: " + first_bad + ")" : "") + ", " +
                    std::to_string(violations) + " bound violations over " + std::to_string(steps) +
                    " steps, worst clock error " + fmt(worst_clock, 3) + " s"};
}

// ---- 3. QoE ----------------------------------------------------------------

Outcome qoe_correctness() {
  const QoeParams p;
  const bool coefficients = p.w_quality == 0.8469 && p.w_rebuffer == 28.7959 && p.w_smooth_pos == 0.2979 &&
                            p.w_smooth_neg == 1.0610;
  double worst = 0.0;
  worst = std::max(worst, std::abs(chunk_qoe(80.0, 90.0, 0.0, p) - (0.8469 * 90 + 0.2979 * 10)));
  worst = std::max(worst, std::abs(chunk_qoe(90.0, 80.0, 1.0, p) - (0.8469 * 80 - 28.7959 - 1.0610 * 10)));
  worst = std::max(worst, std::abs(chunk_qoe(std::nullopt, 70.0, 0.0, p) - 59.283));
  Rng rng(5);
  double worst_sum = 0.0;
  for (int i = 0; i < 1000; ++i) {
    SessionLog log;
    log.chunks.resize(1 + rng.index(60));
    for (auto &c : log.chunks) {
      c.quality = rng.uniform(0.0, 100.0);
      c.rebuffer = rng.uniform() < 0.3 ? rng.uniform(0.0, 5.0) : 0.0;
    }
    double sum = 0.0;
    std::optional<double> prev;
    for (const auto &c : log.chunks) {
      sum += chunk_qoe(prev, c.quality, c.rebuffer, p);
      prev = c.quality;
    }
    worst_sum = std::max(worst_sum, std::abs(session_qoe(log, p) - sum));
  }
  return {coefficients && worst <= 1e-9 && worst_sum <= 1e-9,
          "closed forms within " + fmt(worst, 3) + ", session = sum of chunks within " + fmt(worst_sum, 3)};
}

// ---- 4. gradients ----------------------------------------------------------

Outcome gradient_fidelity() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string parts;
  for (bool recurrent : {false, true}) {
    NetConfig c;
    c.recurrent = recurrent;
    c.seed = 17;
    PolicyNetwork net(c);
    Rng rng(18);
    std::vector<ExpertSample> samples(64);
    for (auto &s : samples) {
      s.observation = testing::random_observation(rng, c.levels, c.history_len, c.future_horizon);
      s.expert_action = rng.index(c.levels);
    }
    std::vector<const ExpertSample *> batch;
    for (const auto &s : samples) batch.push_back(&s);
    const double at_init = gradient_check(net, samples[0], 0.001, 1);
    for (int i = 0; i < 100; ++i) net.update(batch, 1e-4, 0.001);
    const double trained = gradient_check(net, samples[1], 0.001, 2);
    worst = std::max({worst, at_init, trained});
    parts += std::string(recurrent ? "recurrent" : "feed-forward") + " " + fmt(at_init, 2) + " / " +
             fmt(trained, 2) + "; ";
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-4 && elapsed < 300.0,
          "max relative error (init / after 100 updates): " + parts + fmt(elapsed, 3) + " s"};
}

// ---- 5. offline dominance --------------------------------------------------

Outcome offline_dominance() {
  const PlayerConfig cfg;
  const QoeParams qp;
  std::size_t order_violations = 0;
  std::string worst_case;
  double worst_gap = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const NetworkTrace t = testing::random_trace(1000 + i);
    const VideoManifest m = testing::random_manifest(2000 + i, 16);
    const double offline = offline_optimal(t, m, cfg, qp).score;
    const double expert = session_qoe(run_session(t, m, expert_decider(8, qp), cfg), qp);
    double best_baseline = -1e300;
    std::string best_name;
    for (auto [name, decide] : std::vector<std::pair<std::string, Decider>>{
             {"rb", rb_decider()}, {"bola", bola_decider()}, {"robustmpc", robust_mpc_decider(MpcConfig{}, qp)}}) {
      const double q = session_qoe(run_session(t, m, decide, cfg), qp);
      if (q > best_baseline) {
        best_baseline = q;
        best_name = name;
      }
    }
    const bool ok = offline >= expert - 1e-9 && expert >= best_baseline - 1e-9;
    if (!ok) {
      ++order_violations;
      const double gap = std::max(expert - offline, best_baseline - expert);
      if (gap > worst_gap) {
        worst_gap = gap;
        worst_case = "pair " + std::to_string(i) + ": offline " + fmt(offline, 7) + ", expert " + fmt(expert, 7) +
                     ", " + best_name + " " + fmt(best_baseline, 7);
      }
    }
  }

  // Offline DP against enumeration of all 81 plans on 4-chunk, 3-level videos.
  std::size_t dp_mismatches = 0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const NetworkTrace t = testing::random_trace(3000 + i, 30.0);
    const VideoManifest m = testing::random_manifest(4000 + i, 4, 3);
    double best = -1e300;
    std::vector<std::size_t> plan(4);
    for (int code = 0; code < 81; ++code) {
      for (int c = 0, x = code; c < 4; ++c, x /= 3) plan[c] = static_cast<std::size_t>(x % 3);
      best = std::max(best, session_qoe(replay_plan(t, m, plan, cfg), qp));
    }
    if (offline_optimal(t, m, cfg, qp).score != best) ++dp_mismatches;
  }
  std::string detail = std::to_string(20 - order_violations) + "/20 pairs ordered offline >= expert >= baselines";
  if (order_violations) detail += " (largest violation " + fmt(worst_gap, 4) + " at " + worst_case + ")";
  detail += "; offline = 81-plan enumeration on " + std::to_string(50 - dp_mismatches) + "/50 instances";
  return {order_violations == 0 && dp_mismatches == 0, detail};
}

// ---- shared training corpus ------------------------------------------------

struct Corpus {
  std::vector<NetworkTrace> train, validation, perturbed;
  VideoManifest video;
};

// Distribution-shifted held-out traces: slower and burstier than training.
NetworkTrace perturbed_trace(std::uint64_t seed) {
  MarkovTraceConfig c = default_markov_config(seed);
  for (double &r : c.state_levels) r *= 0.7;
  c.transition_matrix = sticky_transitions(c.state_levels.size(), 0.6);
  c.noise_fraction = 0.35;
  c.name = "perturbed" + std::to_string(seed);
  return generate_markov_trace(c);
}

const Corpus &corpus() {
  static const Corpus c = [] {
    Corpus out;
    for (std::uint64_t s = 1; s <= 20; ++s) out.train.push_back(generate_markov_trace(default_markov_config(s)));
    for (std::uint64_t s = 101; s <= 110; ++s)
      out.validation.push_back(generate_markov_trace(default_markov_config(s)));
    for (std::uint64_t s = 201; s <= 210; ++s) out.perturbed.push_back(perturbed_trace(s));
    SyntheticVideoConfig v;
    v.seed = 7;
    v.name = "video";
    out.video = generate_synthetic_manifest(v);
    return out;
  }();
  return c;
}

double scheme_mean_qoe(const std::string &scheme, const std::vector<NetworkTrace> &traces) {
  const EvalReport r = evaluate({parse_scheme(scheme)}, traces, {corpus().video}, EvalOptions{});
  std::vector<double> q;
  for (const auto &row : r.rows) q.push_back(row.metrics.qoe);
  return mean(q);
}

TrainConfig base_config() {
  TrainConfig c;
  c.traces = corpus().train;
  c.validation_traces = corpus().validation;
  c.manifests = {corpus().video};
  c.workers = 1;
  return c;
}

// ---- 6. training efficacy --------------------------------------------------

Outcome training_efficacy() {
  const double expert = scheme_mean_qoe("expert", corpus().validation);
  const double rb = scheme_mean_qoe("rb", corpus().validation);
  TrainConfig c = base_config();
  c.max_samples = 10000;
  c.eval_every = 1000;
  const auto start = std::chrono::steady_clock::now();
  const TrainResult r = train(c);
  const double elapsed = seconds_since(start);
  const double final_qoe = r.curve.back().val_qoe;
  double best = -1e300;
  for (const auto &p : r.curve) best = std::max(best, p.val_qoe);
  const bool pass = final_qoe >= 0.85 * expert && final_qoe >= rb && r.samples <= 10000 && elapsed <= 600.0;
  return {pass, "final policy QoE " + fmt(final_qoe, 6) + " = " + fmt(100.0 * final_qoe / expert, 4) +
                    "% of expert " + fmt(expert, 6) + ", RB " + fmt(rb, 6) + " (best curve point " + fmt(best, 6) +
                    "); " + std::to_string(r.samples) + " samples in " + fmt(elapsed, 4) + " s"};
}

// ---- 7/8. training-regime comparisons at reduced scale ----------------------

// Narrower network and smaller budget so the 40 runs behind criteria 7 and 8
// fit in tens of minutes on one core.
constexpr std::size_t kAblationSamples = 4000;
constexpr std::size_t kAblationChannels = 32;
constexpr std::size_t kAblationHidden = 64;

TrainConfig ablation_config(std::uint64_t seed) {
  TrainConfig c = base_config();
  c.net.conv_channels = kAblationChannels;
  c.net.hidden = kAblationHidden;
  c.max_samples = kAblationSamples;
  c.eval_every = kAblationSamples;
  c.seed = seed;
  return c;
}

std::string series(const std::vector<double> &v) {
  std::string out;
  for (double x : v) out += (out.empty() ? "" : " ") + fmt(x, 5);
  return out;
}

Outcome imitation_vs_cloning() {
  std::vector<double> imitation, cloning;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TrainConfig c = ablation_config(seed);
    c.validation_traces = corpus().perturbed;
    imitation.push_back(train(c).curve.back().val_qoe);
    c.mode = TrainMode::kBehavioralCloning;
    cloning.push_back(train(c).curve.back().val_qoe);
  }
  const double a = mean(imitation), b = mean(cloning);
  return {a >= b, "held-out perturbed QoE over 10 seeds: imitation " + fmt(a, 6) + " vs cloning " + fmt(b, 6) +
                      " (imitation: " + series(imitation) + "; cloning: " + series(cloning) + ")"};
}

Outcome ablation_directions() {
  std::vector<double> replay_on, replay_off, entropy_on, entropy_off;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainConfig c = ablation_config(seed);
    const double on = train(c).curve.back().val_qoe;  // replay on, alpha 0.001
    replay_on.push_back(on);
    entropy_on.push_back(on);
    TrainConfig off = c;
    off.buffer_capacity = off.batch_size;
    replay_off.push_back(train(off).curve.back().val_qoe);
    TrainConfig zero = c;
    zero.entropy_coeff = 0.0;
    entropy_off.push_back(train(zero).curve.back().val_qoe);
  }
  const double ron = mean(replay_on), roff = mean(replay_off), eon = mean(entropy_on), eoff = mean(entropy_off);
  const bool replay_ok = ron >= roff - 0.02 * std::abs(roff);
  const bool entropy_ok = eon >= eoff - 0.01 * std::abs(eoff);
  return {replay_ok && entropy_ok,
          "replay on " + fmt(ron, 6) + " vs off " + fmt(roff, 6) + (replay_ok ? " ok" : " VIOLATED") +
              "; alpha 0.001 " + fmt(eon, 6) + " vs alpha 0 " + fmt(eoff, 6) + (entropy_ok ? " ok" : " VIOLATED") +
              " (5 seeds; on: " + series(replay_on) + "; off: " + series(replay_off) +
              "; alpha 0: " + series(entropy_off) + ")"};
}

// ---- 9. solver cost growth -------------------------------------------------

Outcome solver_cost_growth() {
  const NetworkTrace t = generate_markov_trace(default_markov_config(55));
  const VideoManifest &m = corpus().video;
  const PlayerConfig cfg;
  const QoeParams qp;
  // Snapshots from an expert-played session, far enough from the end that
  // every horizon up to 8 is full.
  const SessionLog log = run_session(t, m, expert_decider(4, qp), cfg);
  std::vector<PlayerSnapshot> snaps;
  PlayerSnapshot s;
  for (std::size_t k = 0; k < 36; ++k) {
    if (k == 6 || k == 18 || k == 30) snaps.push_back(s);
    s = step(s, log.chunks[k].level, t, m, cfg).next;
  }
  std::vector<double> mean_elapsed;
  for (std::size_t n = 5; n <= 8; ++n) {
    double total = 0.0;
    for (const auto &snap : snaps) {
      const auto start = std::chrono::steady_clock::now();
      instant_solve(snap, t, m, n, qp, cfg, SolverOptions{false});
      total += seconds_since(start);
    }
    mean_elapsed.push_back(total / snaps.size());
  }
  bool pass = true;
  std::string detail;
  for (std::size_t n = 6; n <= 8; ++n) {
    const double ratio = mean_elapsed[n - 5] / mean_elapsed[n - 6];
    pass = pass && ratio >= 3.0 && ratio <= 12.0;
    detail += "N=" + std::to_string(n) + ": " + fmt(ratio, 3) + "x (" + fmt(mean_elapsed[n - 5] * 1e3, 4) + " ms); ";
  }
  return {pass, detail};
}

// ---- 10. end-to-end reproducibility ------------------------------------------

int run_cli(const std::string &args) {
  const std::string cmd = std::string(ABRLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// The learning curve minus its wall-clock column, which is inherently
// run-dependent.
std::string curve_without_time(const std::string &csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    out += line.substr(0, a) + line.substr(b) + "\n";
  }
  return out;
}

Outcome reproducibility() {
  const fs::path dir = fs::temp_directory_path() / "abrlab_acceptance_repro";
  fs::remove_all(dir);
  const std::string d = dir.string();
  bool ok = run_cli("gen-trace --out-dir " + d + "/traces --count 6 --seed 40") == 0 &&
            run_cli("gen-manifest --out-dir " + d + "/manifests --count 2 --seed 3 --chunks 24") == 0;
  const std::string corpus_flags = " --traces " + d + "/traces --manifests " + d + "/manifests";
  std::vector<std::string> models, curves, reports;
  for (int run = 0; run < 2 && ok; ++run) {
    const std::string tag = std::to_string(run);
    ok = run_cli("train --workers 1 --seed 11 --max-samples 600 --eval-every 200" + corpus_flags + " --out " + d +
                 "/model" + tag + ".cmy --curve " + d + "/curve" + tag + ".csv") == 0 &&
         run_cli("eval --abr comyco,rb,bola,robustmpc,expert --model " + d + "/model" + tag + ".cmy --out " + d +
                 "/report" + tag + ".csv" + corpus_flags) == 0;
    if (!ok) break;
    models.push_back(read_file(d + "/model" + tag + ".cmy"));
    curves.push_back(curve_without_time(read_file(d + "/curve" + tag + ".csv")));
    reports.push_back(read_file(d + "/report" + tag + ".csv"));
  }
  fs::remove_all(dir);
  if (!ok) return {false, "CLI run failed"};
  const bool same_model = models[0] == models[1];
  const bool same_curve = curves[0] == curves[1];
  const bool same_report = reports[0] == reports[1];
  return {same_model && same_curve && same_report,
          std::string("model bytes ") + (same_model ? "identical" : "DIFFER") + " (" +
              std::to_string(models[0].size()) + " B), learning curve " + (same_curve ? "identical" : "DIFFERS") +
              " (wall_seconds excluded), eval CSV " + (same_report ? "identical" : "DIFFERS")};
}

struct Criterion {
  int id;
  const char *name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char **argv) {
  const std::vector<Criterion> all = {
      {1, "solver exactness", solver_exactness},
      {2, "player fidelity", player_fidelity},
      {3, "QoE correctness", qoe_correctness},
      {4, "gradient fidelity", gradient_fidelity},
      {5, "offline-optimal dominance", offline_dominance},
      {6, "desk-scale training efficacy", training_efficacy},
      {7, "imitation vs behavioral cloning", imitation_vs_cloning},
      {8, "replay and entropy ablation directions", ablation_directions},
      {9, "solver cost growth", solver_cost_growth},
      {10, "end-to-end reproducibility", reproducibility},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const Criterion &c : all) {
    if (!selected.empty() && selected.count(c.id) == 0) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const std::string line = "criterion " + std::to_string(c.id) + " (" + c.name + "): " + o.detail + " [" +
                             fmt(seconds_since(start), 4) + " s]";
    if (o.pass) {
      std::cout << "[PASS] " << line << std::endl;
    } else {
      std::cerr << "[FAIL] " << line << std::endl;
      ++failures;
    }
  }
  return failures == 0 ? 0 : 1;
}
