// abrlab: command-line front end for the streaming lab.
//
//   abrlab gen-trace    synthesize Markov throughput traces
//   abrlab gen-manifest synthesize video manifests
//   abrlab solve        expert (or offline-optimal) plan from a session state
//   abrlab train        imitation / behavioral-cloning training
//   abrlab eval         run ABR schemes over a corpus, write a report CSV
//   abrlab compare      QoE-improvement distribution of one scheme over another
//   abrlab report       CSV and SVG panels from a report
//
// Any option can also come from `--config file.json`: either a flat object of
// option names (dashes or underscores) or one section per subcommand. Command
// line flags win. Corpus directories default to $ABRLAB_CORPUS/traces and
// $ABRLAB_CORPUS/manifests.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "abrlab/error.hpp"
#include "abrlab/evaluate.hpp"
#include "abrlab/io.hpp"
#include "abrlab/kernels.hpp"
#include "abrlab/model_io.hpp"
#include "abrlab/solver.hpp"
#include "abrlab/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace abrlab;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInvariant = 4;

std::string corpus_default(const char *sub) {
  const char *root = std::getenv("ABRLAB_CORPUS");
  return root == nullptr ? std::string() : (fs::path(root) / sub).string();
}

std::string require_path(const std::string &value, const char *flag) {
  if (value.empty()) throw ConfigError(std::string(flag) + " is required");
  return value;
}

std::vector<std::string> split_list(const std::string &text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Fills options of `sub` that were not given on the command line from a JSON
// config file.
void apply_config(CLI::App &sub, const std::string &path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception &e) {
    throw ConfigError("bad config file " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
  // Top-level keys may serve several subcommands; keys in this
  // subcommand's own section must all be known.
  json merged = json::object();
  std::set<std::string> strict;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (!it.value().is_object()) merged[it.key()] = it.value();
  }
  if (doc.contains(sub.get_name()) && doc[sub.get_name()].is_object()) {
    for (auto it = doc[sub.get_name()].begin(); it != doc[sub.get_name()].end(); ++it) {
      merged[it.key()] = it.value();
      strict.insert(it.key());
    }
  }
  for (auto it = merged.begin(); it != merged.end(); ++it) {
    std::string name = it.key();
    for (char &c : name) c = c == '_' ? '-' : c;
    CLI::Option *opt = sub.get_option_no_throw("--" + name);
    if (opt == nullptr) {
      if (strict.count(it.key()) > 0) throw ConfigError("unknown config key for " + sub.get_name() + ": " + it.key());
      continue;
    }
    if (opt->count() > 0) continue;
    auto text = [](const json &v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (it.value().is_array()) {
      std::string joined;
      for (const auto &v : it.value()) joined += (joined.empty() ? "" : ",") + text(v);
      opt->add_result(joined);
    } else {
      opt->add_result(text(it.value()));
    }
    try {
      opt->run_callback();
    } catch (const CLI::Error &e) {
      throw ConfigError("config key '" + it.key() + "': " + e.what());
    }
  }
}

struct PlayerFlags {
  PlayerConfig config;
  bool no_loop = false;
  bool count_startup = false;

  void add(CLI::App *app) {
    app->add_option("--buffer-max", config.buffer_max, "Player buffer capacity, seconds")->capture_default_str();
    app->add_option("--rtt", config.rtt, "Per-request delay before bytes flow, seconds")->capture_default_str();
    app->add_option("--history-len", config.history_len, "Past chunks in policy features")->capture_default_str();
    app->add_option("--future-horizon", config.future_horizon, "Future chunks in policy features")
        ->capture_default_str();
    app->add_flag("--no-loop", no_loop, "Hold the last trace rate instead of looping the trace");
    app->add_flag("--count-startup-stall", count_startup, "Count the first chunk's stall as rebuffering");
  }
  PlayerConfig get() const {
    PlayerConfig c = config;
    c.trace_loop = !no_loop;
    c.startup_excluded = !count_startup;
    c.validate();
    return c;
  }
};

struct QoeFlags {
  QoeParams params;
  void add(CLI::App *app) {
    app->add_option("--w-quality", params.w_quality, "QoE weight on chunk VMAF")->capture_default_str();
    app->add_option("--w-rebuffer", params.w_rebuffer, "QoE penalty per rebuffer second")->capture_default_str();
    app->add_option("--w-smooth-pos", params.w_smooth_pos, "QoE penalty per VMAF point increase")
        ->capture_default_str();
    app->add_option("--w-smooth-neg", params.w_smooth_neg, "QoE penalty per VMAF point decrease")
        ->capture_default_str();
  }
  QoeParams get() const {
    params.validate();
    return params;
  }
};

// ---- gen-trace -------------------------------------------------------------

struct GenTrace {
  std::string out_dir;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  double duration = 320.0;
  double dwell = 1.0;
  double noise = 0.2;
  double stay = 0.8;
  std::string states_mbps = "0.3,0.6,1.0,1.6,2.5,4.0,6.0";
  std::string prefix = "markov";

  void add(CLI::App *app) {
    app->add_option("--out-dir", out_dir, "Directory for the trace files");
    app->add_option("--count", count, "Number of traces (seeds seed .. seed+count-1)")->capture_default_str();
    app->add_option("--seed", seed, "First seed")->capture_default_str();
    app->add_option("--duration", duration, "Seconds per trace")->capture_default_str();
    app->add_option("--dwell", dwell, "Seconds per sample")->capture_default_str();
    app->add_option("--noise", noise, "Multiplicative jitter fraction in [0, 1)")->capture_default_str();
    app->add_option("--stay", stay, "Probability of keeping the current state")->capture_default_str();
    app->add_option("--states", states_mbps, "Comma-separated state means, Mbps")->capture_default_str();
    app->add_option("--prefix", prefix, "File name prefix")->capture_default_str();
  }

  int run() const {
    require_path(out_dir, "--out-dir");
    MarkovTraceConfig c;
    for (const auto &s : split_list(states_mbps)) {
      try {
        c.state_levels.push_back(std::stod(s) * kBytesPerMbps);
      } catch (const std::exception &) {
        throw ConfigError("bad state rate: " + s);
      }
    }
    if (c.state_levels.empty()) throw ConfigError("--states is empty");
    if (!(stay >= 0.0 && stay <= 1.0)) throw ConfigError("--stay must be in [0, 1]");
    c.transition_matrix = c.state_levels.size() == 1 ? std::vector<std::vector<double>>{{1.0}}
                                                     : sticky_transitions(c.state_levels.size(), stay);
    c.dwell = dwell;
    c.noise_fraction = noise;
    c.duration = duration;
    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < count; ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%04llu", prefix.c_str(), static_cast<unsigned long long>(seed + i));
      c.seed = seed + i;
      c.name = name;
      c.validate();
      save_trace(generate_markov_trace(c), (fs::path(out_dir) / (std::string(name) + ".txt")).string());
    }
    std::cout << "wrote " << count << " traces to " << out_dir << "\n";
    return 0;
  }
};

// ---- gen-manifest ----------------------------------------------------------

struct GenManifest {
  std::string out_dir;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::size_t chunks = 48;
  double chunk_duration = 4.0;
  std::string bitrates = "300000,750000,1200000,1850000,2850000,4300000";
  double jitter = 0.1;
  std::string prefix = "video";

  void add(CLI::App *app) {
    app->add_option("--out-dir", out_dir, "Directory for the manifest files");
    app->add_option("--count", count, "Number of manifests")->capture_default_str();
    app->add_option("--seed", seed, "First seed")->capture_default_str();
    app->add_option("--chunks", chunks, "Chunks per video")->capture_default_str();
    app->add_option("--chunk-duration", chunk_duration, "Seconds per chunk")->capture_default_str();
    app->add_option("--bitrates", bitrates, "Comma-separated ladder, bits/s")->capture_default_str();
    app->add_option("--size-jitter", jitter, "Per-chunk size variation")->capture_default_str();
    app->add_option("--prefix", prefix, "File name prefix")->capture_default_str();
  }

  int run() const {
    require_path(out_dir, "--out-dir");
    SyntheticVideoConfig c;
    c.chunks = chunks;
    c.chunk_duration = chunk_duration;
    c.size_jitter = jitter;
    c.bitrates.clear();
    for (const auto &s : split_list(bitrates)) {
      try {
        c.bitrates.push_back(std::stod(s));
      } catch (const std::exception &) {
        throw ConfigError("bad bitrate: " + s);
      }
    }
    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < count; ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "%s_%04llu", prefix.c_str(), static_cast<unsigned long long>(seed + i));
      c.seed = seed + i;
      c.name = name;
      save_manifest(generate_synthetic_manifest(c), (fs::path(out_dir) / (std::string(name) + ".json")).string());
    }
    std::cout << "wrote " << count << " manifests to " << out_dir << "\n";
    return 0;
  }
};

// ---- solve -----------------------------------------------------------------

struct Solve {
  std::string trace_path, manifest_path;
  std::string prefix;  // levels already played
  double offset = 0.0;
  std::size_t lookahead = 8;
  bool exhaustive = false;
  bool offline = false;
  double offline_grid = 0.01;
  PlayerFlags player;
  QoeFlags qoe;

  void add(CLI::App *app) {
    app->add_option("--trace", trace_path, "Trace file");
    app->add_option("--manifest", manifest_path, "Manifest file");
    app->add_option("--prefix", prefix, "Comma-separated levels played before the decision");
    app->add_option("--offset", offset, "Trace position at session start, seconds")->capture_default_str();
    app->add_option("--lookahead", lookahead, "Planning horizon N")->capture_default_str();
    app->add_flag("--exhaustive", exhaustive, "Disable branch-and-bound pruning");
    app->add_flag("--offline", offline, "Whole-session offline optimum instead of an N-step plan");
    app->add_option("--offline-grid", offline_grid, "Offline DP time/buffer lattice, seconds")
        ->capture_default_str();
    player.add(app);
    qoe.add(app);
  }

  int run() const {
    const NetworkTrace trace = load_trace(require_path(trace_path, "--trace"));
    const VideoManifest manifest = load_manifest(require_path(manifest_path, "--manifest"));
    const PlayerConfig pc = player.get();
    const QoeParams qp = qoe.get();
    json out;
    if (offline) {
      const OfflineResult r = offline_optimal(trace, manifest, pc, qp, offset, offline_grid);
      out = {{"score", r.score}, {"plan", r.plan}, {"states", r.states}};
    } else {
      PlayerSnapshot snap;
      snap.trace_offset = offset;
      for (const auto &s : split_list(prefix)) {
        std::size_t level = 0;
        try {
          level = std::stoul(s);
        } catch (const std::exception &) {
          throw ConfigError("bad level in --prefix: " + s);
        }
        if (level >= manifest.levels()) throw ConfigError("level out of range in --prefix: " + s);
        snap = step(snap, level, trace, manifest, pc).next;
      }
      if (snap.chunk >= manifest.chunks()) throw ConfigError("--prefix covers the whole video");
      const SolveResult r = instant_solve(snap, trace, manifest, lookahead, qp, pc, SolverOptions{!exhaustive});
      out = {{"action", r.action},
             {"value", r.value},
             {"plan", r.plan},
             {"elapsed", r.elapsed},
             {"chunk", snap.chunk},
             {"buffer", snap.buffer},
             {"time", snap.time}};
    }
    std::cout << out.dump(2) << "\n";
    return 0;
  }
};

// ---- train -----------------------------------------------------------------

struct Train {
  std::string traces_dir = corpus_default("traces");
  std::string manifests_dir = corpus_default("manifests");
  std::string val_dir;
  double val_fraction = 0.2;
  std::string out = "model.cmy";
  std::string curve;
  std::string mode = "imitation";
  TrainConfig cfg;
  PlayerFlags player;
  QoeFlags qoe;

  void add(CLI::App *app) {
    app->add_option("--traces", traces_dir, "Training trace directory")->capture_default_str();
    app->add_option("--manifests", manifests_dir, "Manifest directory")->capture_default_str();
    app->add_option("--val-traces", val_dir, "Held-out validation traces (default: split off --val-fraction)");
    app->add_option("--val-fraction", val_fraction, "Share of traces held out when --val-traces is unset")
        ->capture_default_str();
    app->add_option("--out", out, "Model file to write (.cmy)")->capture_default_str();
    app->add_option("--curve", curve, "Learning-curve CSV to write");
    app->add_option("--checkpoint-dir", cfg.checkpoint_dir, "Write a model at every evaluation");
    app->add_option("--mode", mode, "imitation | behavioral_cloning")->capture_default_str();
    app->add_option("--batch-size", cfg.batch_size, "Samples per update")->capture_default_str();
    app->add_option("--buffer-capacity", cfg.buffer_capacity, "Replay buffer size")->capture_default_str();
    app->add_option("--lr", cfg.learning_rate, "Adam learning rate")->capture_default_str();
    app->add_option("--entropy", cfg.entropy_coeff, "Entropy bonus weight")->capture_default_str();
    app->add_option("--lookahead", cfg.lookahead, "Expert planning horizon N")->capture_default_str();
    app->add_option("--max-samples", cfg.max_samples, "Expert samples to collect")->capture_default_str();
    app->add_option("--eval-every", cfg.eval_every, "Samples between validations")->capture_default_str();
    app->add_option("--workers", cfg.workers, "Rollout workers (1 = deterministic inline loop)")
        ->capture_default_str();
    app->add_option("--seed", cfg.seed, "Seed for rollouts, batches and initialization")->capture_default_str();
    app->add_flag("--early-stop", cfg.early_stop, "Stop after three evaluations improving < 0.5%");
    app->add_option("--spot-check", cfg.spot_check_fraction, "Fraction of labels recomputed and checked")
        ->capture_default_str();
    app->add_option("--conv-channels", cfg.net.conv_channels, "Encoder channels")->capture_default_str();
    app->add_option("--conv-kernel", cfg.net.conv_kernel, "Encoder kernel width")->capture_default_str();
    app->add_option("--hidden", cfg.net.hidden, "Hidden units")->capture_default_str();
    app->add_flag("--recurrent", cfg.net.recurrent, "Add a GRU over the history axis");
    player.add(app);
    qoe.add(app);
  }

  int run() {
    cfg.player = player.get();
    cfg.qoe = qoe.get();
    cfg.mode = parse_train_mode(mode);
    auto traces = load_trace_dir(require_path(traces_dir, "--traces"));
    cfg.manifests = load_manifest_dir(require_path(manifests_dir, "--manifests"));
    if (!val_dir.empty()) {
      cfg.traces = std::move(traces);
      cfg.validation_traces = load_trace_dir(val_dir);
    } else {
      if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("--val-fraction must be in [0, 1)");
      const auto held = static_cast<std::size_t>(val_fraction * static_cast<double>(traces.size()));
      if (held > 0 && held < traces.size()) {
        cfg.validation_traces.assign(traces.end() - static_cast<std::ptrdiff_t>(held), traces.end());
        traces.resize(traces.size() - held);
      }
      cfg.traces = std::move(traces);
    }
    if (cfg.manifests.empty()) throw DataError("no manifests in " + manifests_dir);
    cfg.net.levels = cfg.manifests.front().levels();
    cfg.net.history_len = cfg.player.history_len;
    cfg.net.future_horizon = cfg.player.future_horizon;
    cfg.net.seed = cfg.seed;

    std::cerr << "training (" << train_mode_name(cfg.mode) << ") on " << cfg.traces.size() << " traces, "
              << cfg.validation_traces.size() << " validation traces, " << cfg.manifests.size()
              << " manifests; kernels: " << kernels::isa_name(kernels::active_isa()) << "\n";
    const TrainResult r = train(cfg);
    save_model(r.net, out);
    if (!curve.empty()) write_file(curve, curve_csv(r.curve));
    const CurvePoint &last = r.curve.back();
    std::cout << "samples " << r.samples << ", updates " << r.updates << ", final validation QoE " << last.val_qoe
              << (r.stopped_early ? " (early stop)" : "") << "\nmodel written to " << out << "\n";
    return 0;
  }
};

// ---- eval ------------------------------------------------------------------

struct Eval {
  std::string traces_dir = corpus_default("traces");
  std::string manifests_dir = corpus_default("manifests");
  std::string abr = "rb,bola,robustmpc,expert";
  std::string model;
  std::string out = "report.csv";
  std::string sessions_dir;
  EvalOptions options;
  PlayerFlags player;
  QoeFlags qoe;

  void add(CLI::App *app) {
    app->add_option("--traces", traces_dir, "Trace directory")->capture_default_str();
    app->add_option("--manifests", manifests_dir, "Manifest directory")->capture_default_str();
    app->add_option("--abr", abr, "Comma-separated schemes: rb, bola, robustmpc, comyco, expert, offline")
        ->capture_default_str();
    app->add_option("--model", model, "Policy model for the comyco scheme (.cmy)");
    app->add_option("--out", out, "Report CSV to write")->capture_default_str();
    app->add_option("--sessions-dir", sessions_dir, "Also write one per-chunk CSV per session here");
    app->add_option("--lookahead", options.lookahead, "Expert planning horizon N")->capture_default_str();
    app->add_option("--mpc-horizon", options.mpc.horizon, "RobustMPC horizon")->capture_default_str();
    app->add_option("--mpc-window", options.mpc.window, "RobustMPC error window")->capture_default_str();
    app->add_option("--rb-window", options.rb_window, "Rate-based harmonic-mean window")->capture_default_str();
    app->add_option("--bola-gamma", options.bola.gamma_p, "BOLA gamma_p")->capture_default_str();
    app->add_option("--offline-grid", options.offline_grid, "Offline DP lattice, seconds")->capture_default_str();
    app->add_option("--workers", options.workers, "Sessions evaluated concurrently")->capture_default_str();
    player.add(app);
    qoe.add(app);
  }

  int run() {
    options.player = player.get();
    options.qoe = qoe.get();
    options.keep_logs = !sessions_dir.empty();
    std::vector<Scheme> schemes;
    for (const auto &name : split_list(abr)) schemes.push_back(parse_scheme(name, model));
    const auto traces = load_trace_dir(require_path(traces_dir, "--traces"));
    const auto manifests = load_manifest_dir(require_path(manifests_dir, "--manifests"));
    const EvalReport report = evaluate(schemes, traces, manifests, options);
    write_file(out, report_csv(report));
    if (!sessions_dir.empty()) {
      fs::create_directories(sessions_dir);
      std::map<std::string, const VideoManifest *> by_name;
      for (const auto &m : manifests) by_name[m.name()] = &m;
      for (const EvalRow &row : report.rows) {
        const std::string file = row.scheme + "__" + row.trace + "__" + row.video + ".csv";
        write_file((fs::path(sessions_dir) / file).string(), session_csv(row.log, *by_name.at(row.video)));
      }
    }
    for (const SchemeSummary &s : summarize(report)) {
      std::cout << s.scheme << ": mean QoE " << s.qoe << ", quality " << s.quality << ", rebuffer " << s.rebuffer
                << " s over " << s.sessions << " sessions\n";
    }
    return 0;
  }
};

// ---- compare / report ------------------------------------------------------

struct Compare {
  std::string report_path;
  std::string a, b;
  std::string out;

  void add(CLI::App *app) {
    app->add_option("--report", report_path, "Report CSV from eval");
    app->add_option("--a", a, "Scheme whose improvement is measured");
    app->add_option("--b", b, "Baseline scheme");
    app->add_option("--out", out, "Per-session improvement CSV to write");
  }

  int run() const {
    require_path(a, "--a");
    require_path(b, "--b");
    const Comparison c = compare(parse_report_csv(read_file(require_path(report_path, "--report"))), a, b);
    if (!out.empty()) write_file(out, comparison_csv(c));
    std::cout << "mean QoE improvement of " << a << " over " << b << ": " << c.mean << "% across "
              << c.improvements.size() << " sessions\n";
    for (std::size_t i = 0; i < c.cdf_x.size(); ++i) std::cout << c.cdf_x[i] << "," << c.cdf_y[i] << "\n";
    return 0;
  }
};

struct Report {
  std::string report_path;
  std::string out_dir = "report";
  std::string format = "csv";
  std::string focus;

  void add(CLI::App *app) {
    app->add_option("--report", report_path, "Report CSV from eval");
    app->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
    app->add_option("--format", format, "csv | plots")->capture_default_str();
    app->add_option("--focus", focus, "Scheme whose improvement CDFs are drawn (default: comyco if present, else the first)");
  }

  int run() const {
    if (format != "csv" && format != "plots") throw ConfigError("--format must be csv or plots");
    write_report(parse_report_csv(read_file(require_path(report_path, "--report"))), out_dir, format == "plots", focus);
    std::cout << "report written to " << out_dir << "\n";
    return 0;
  }
};

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"abrlab: adaptive-bitrate streaming lab"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; command-line flags take precedence");

  GenTrace gen_trace;
  GenManifest gen_manifest;
  Solve solve;
  Train train_cmd;
  Eval eval;
  Compare compare_cmd;
  Report report;
  gen_trace.add(app.add_subcommand("gen-trace", "Synthesize Markov throughput traces"));
  gen_manifest.add(app.add_subcommand("gen-manifest", "Synthesize video manifests"));
  solve.add(app.add_subcommand("solve", "Expert plan (or offline optimum) for a session state"));
  train_cmd.add(app.add_subcommand("train", "Train a policy by imitating the expert"));
  eval.add(app.add_subcommand("eval", "Evaluate ABR schemes over a corpus"));
  compare_cmd.add(app.add_subcommand("compare", "QoE-improvement distribution of one scheme over another"));
  report.add(app.add_subcommand("report", "Write report CSV and plots"));

  try {
    app.parse(argc, argv);
    CLI::App *sub = app.get_subcommands().front();
    if (!config_path.empty()) apply_config(*sub, config_path);
    const std::string name = sub->get_name();
    if (name == "gen-trace") return gen_trace.run();
    if (name == "gen-manifest") return gen_manifest.run();
    if (name == "solve") return solve.run();
    if (name == "train") return train_cmd.run();
    if (name == "eval") return eval.run();
    if (name == "compare") return compare_cmd.run();
    if (name == "report") return report.run();
    return kExitInvariant;
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitConfig;
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError &e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const InvariantError &e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception &e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  }
}
