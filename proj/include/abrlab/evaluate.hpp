#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "abrlab/baselines.hpp"
#include "abrlab/manifest.hpp"
#include "abrlab/player.hpp"
#include "abrlab/policy_net.hpp"
#include "abrlab/qoe.hpp"
#include "abrlab/trace.hpp"

namespace abrlab {

enum class SchemeKind { kRb, kBola, kRobustMpc, kExpert, kOffline, kPolicy };

struct Scheme {
  SchemeKind kind = SchemeKind::kRb;
  std::string label;  // as written in reports
  std::shared_ptr<const PolicyNetwork> model;  // kPolicy only
};

/// Accepts rb, bola, robustmpc, expert, offline, and comyco / policy (which
/// play `model_path`). Throws ConfigError for unknown names or a missing
/// model path, DataError for an unreadable model.
Scheme parse_scheme(const std::string &name, const std::string &model_path = "");

struct EvalOptions {
  PlayerConfig player;
  QoeParams qoe;
  std::size_t lookahead = 8;  // expert
  MpcConfig mpc;
  BolaParams bola;
  std::size_t rb_window = 5;
  double offline_grid = 0.01;
  std::size_t workers = 1;  // sessions evaluated concurrently
  bool keep_logs = false;   // retain per-chunk logs in the rows
};

struct EvalRow {
  std::string scheme;
  std::string trace;
  std::string video;
  SessionMetrics metrics;
  SessionLog log;  // filled when EvalOptions::keep_logs
};

struct EvalReport {
  std::vector<EvalRow> rows;
};

/// Every scheme on every (trace, manifest) pair from trace offset 0. Rows are
/// sorted by (scheme, trace, video) whatever the worker interleaving.
EvalReport evaluate(const std::vector<Scheme> &schemes, const std::vector<NetworkTrace> &traces,
                    const std::vector<VideoManifest> &manifests, const EvalOptions &options);

/// The decider a scheme plays (offline has none; throws ConfigError).
Decider scheme_decider(const Scheme &scheme, const EvalOptions &options);

struct SchemeSummary {
  std::string scheme;
  std::size_t sessions = 0;
  double qoe = 0.0;
  double quality = 0.0;
  double rebuffer = 0.0;
  double smooth_pos = 0.0;
  double smooth_neg = 0.0;
};

/// Per-scheme means, in row order of first appearance.
std::vector<SchemeSummary> summarize(const EvalReport &report);

struct Comparison {
  std::string scheme_a;
  std::string scheme_b;
  std::vector<std::string> sessions;  // "trace/video"
  std::vector<double> improvements;   // percent, per session
  std::vector<double> cdf_x;          // sorted improvements
  std::vector<double> cdf_y;          // fraction of sessions <= x
  double mean = 0.0;
};

/// Percentage QoE improvement of scheme A over scheme B per session:
/// 100 * (a - b) / |b|. Throws DataError when either scheme is missing or the
/// two cover different sessions.
Comparison compare(const EvalReport &report, const std::string &scheme_a, const std::string &scheme_b);

/// scheme,trace,video,qoe,quality,rebuffer_s,smooth_pos,smooth_neg
std::string report_csv(const EvalReport &report);
EvalReport parse_report_csv(const std::string &text);

std::string comparison_csv(const Comparison &comparison);

/// Writes report.csv into `dir`; with `plots`, also summary.svg (bar panels
/// per metric) and cdf_<focus>_vs_<other>.svg with the QoE-improvement CDF of
/// `focus` (default: comyco if present, else the first scheme) over every other scheme. Throws
/// DataError on an empty report or I/O failure.
void write_report(const EvalReport &report, const std::string &dir, bool plots, const std::string &focus = "");

}  // namespace abrlab
