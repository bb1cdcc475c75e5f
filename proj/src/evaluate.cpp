#include "abrlab/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <filesystem>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

#include "abrlab/error.hpp"
#include "abrlab/io.hpp"
#include "abrlab/model_io.hpp"
#include "abrlab/solver.hpp"
#include "abrlab/trainer.hpp"

namespace abrlab {
namespace {

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string &text, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception &) {
    throw DataError("bad number '" + text + "' at line " + std::to_string(line));
  }
}

// ---- SVG helpers -----------------------------------------------------------

const char *const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};

std::string escape_xml(const std::string &s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string summary_svg(const std::vector<SchemeSummary> &summary) {
  struct Panel {
    const char *title;
    double SchemeSummary::*field;
  };
  const Panel panels[] = {{"QoE", &SchemeSummary::qoe},
                          {"Quality (VMAF)", &SchemeSummary::quality},
                          {"Rebuffer (s)", &SchemeSummary::rebuffer},
                          {"Smoothness +", &SchemeSummary::smooth_pos},
                          {"Smoothness -", &SchemeSummary::smooth_neg}};
  const double pw = 220, ph = 220, margin = 30;
  const double width = margin + 5 * (pw + margin);
  const double height = ph + 3 * margin + 16.0 * static_cast<double>(summary.size());
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t p = 0; p < 5; ++p) {
    const double x0 = margin + static_cast<double>(p) * (pw + margin);
    const double y0 = margin;
    double lo = 0.0, hi = 0.0;
    for (const auto &s : summary) {
      lo = std::min(lo, s.*(panels[p].field));
      hi = std::max(hi, s.*(panels[p].field));
    }
    if (hi - lo <= 0.0) hi = lo + 1.0;
    const auto y_of = [&](double v) { return y0 + ph - (v - lo) / (hi - lo) * ph; };
    svg << "<text x=\"" << x0 << "\" y=\"" << y0 - 8 << "\">" << panels[p].title << "</text>\n";
    svg << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#888\"/>\n";
    const double bw = pw / static_cast<double>(summary.size());
    for (std::size_t i = 0; i < summary.size(); ++i) {
      const double v = summary[i].*(panels[p].field);
      const double top = std::min(y_of(v), y_of(0.0));
      const double h = std::fabs(y_of(v) - y_of(0.0));
      svg << "<rect x=\"" << x0 + bw * static_cast<double>(i) + bw * 0.1 << "\" y=\"" << top << "\" width=\""
          << bw * 0.8 << "\" height=\"" << h << "\" fill=\"" << kPalette[i % 7] << "\"><title>"
          << escape_xml(summary[i].scheme) << ": " << v << "</title></rect>\n";
    }
    svg << "<text x=\"" << x0 + 2 << "\" y=\"" << y0 + 12 << "\" fill=\"#555\">" << hi << "</text>\n";
    svg << "<text x=\"" << x0 + 2 << "\" y=\"" << y0 + ph - 3 << "\" fill=\"#555\">" << lo << "</text>\n";
  }
  for (std::size_t i = 0; i < summary.size(); ++i) {
    const double y = ph + 2 * margin + 16.0 * static_cast<double>(i);
    svg << "<rect x=\"" << margin << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\""
        << kPalette[i % 7] << "\"/><text x=\"" << margin + 16 << "\" y=\"" << y << "\">"
        << escape_xml(summary[i].scheme) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string cdf_svg(const Comparison &c) {
  const double w = 480, h = 320, m = 50;
  double lo = c.cdf_x.front(), hi = c.cdf_x.back();
  if (hi - lo <= 0.0) {
    lo -= 1.0;
    hi += 1.0;
  }
  const auto x_of = [&](double v) { return m + (v - lo) / (hi - lo) * (w - 2 * m); };
  const auto y_of = [&](double f) { return h - m - f * (h - 2 * m); };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<text x=\"" << m << "\" y=\"20\">QoE improvement of " << escape_xml(c.scheme_a) << " over "
      << escape_xml(c.scheme_b) << " (%), mean " << c.mean << "</text>\n";
  svg << "<rect x=\"" << m << "\" y=\"" << m << "\" width=\"" << w - 2 * m << "\" height=\"" << h - 2 * m
      << "\" fill=\"none\" stroke=\"#888\"/>\n";
  svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  double prev_y = 0.0;
  for (std::size_t i = 0; i < c.cdf_x.size(); ++i) {
    svg << x_of(c.cdf_x[i]) << ',' << y_of(prev_y) << ' ' << x_of(c.cdf_x[i]) << ',' << y_of(c.cdf_y[i]) << ' ';
    prev_y = c.cdf_y[i];
  }
  svg << "\"/>\n";
  svg << "<text x=\"" << m << "\" y=\"" << h - m + 15 << "\">" << lo << "</text>\n";
  svg << "<text x=\"" << w - m - 30 << "\" y=\"" << h - m + 15 << "\">" << hi << "</text>\n";
  svg << "<text x=\"" << m - 25 << "\" y=\"" << m + 4 << "\">1</text>\n";
  svg << "<text x=\"" << m - 25 << "\" y=\"" << h - m << "\">0</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

std::string file_safe(const std::string &s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return out;
}

}  // namespace

Scheme parse_scheme(const std::string &name, const std::string &model_path) {
  Scheme s;
  s.label = name;
  if (name == "rb") {
    s.kind = SchemeKind::kRb;
  } else if (name == "bola") {
    s.kind = SchemeKind::kBola;
  } else if (name == "robustmpc") {
    s.kind = SchemeKind::kRobustMpc;
  } else if (name == "expert") {
    s.kind = SchemeKind::kExpert;
  } else if (name == "offline") {
    s.kind = SchemeKind::kOffline;
  } else if (name == "comyco" || name == "policy") {
    if (model_path.empty()) throw ConfigError("scheme '" + name + "' needs a model file (--model)");
    s.kind = SchemeKind::kPolicy;
    s.model = std::make_shared<const PolicyNetwork>(load_model(model_path));
  } else {
    throw ConfigError("unknown scheme: " + name);
  }
  return s;
}

Decider scheme_decider(const Scheme &scheme, const EvalOptions &options) {
  switch (scheme.kind) {
    case SchemeKind::kRb: return rb_decider(options.rb_window);
    case SchemeKind::kBola: return bola_decider(options.bola);
    case SchemeKind::kRobustMpc: return robust_mpc_decider(options.mpc, options.qoe);
    case SchemeKind::kExpert: return expert_decider(options.lookahead, options.qoe);
    case SchemeKind::kPolicy:
      if (!scheme.model) throw ConfigError("scheme '" + scheme.label + "' has no model");
      return policy_decider(scheme.model);
    case SchemeKind::kOffline: break;
  }
  throw ConfigError("scheme '" + scheme.label + "' is not a per-chunk decider");
}

EvalReport evaluate(const std::vector<Scheme> &schemes, const std::vector<NetworkTrace> &traces,
                    const std::vector<VideoManifest> &manifests, const EvalOptions &options) {
  if (schemes.empty()) throw ConfigError("no schemes to evaluate");
  if (traces.empty()) throw DataError("no traces to evaluate on");
  if (manifests.empty()) throw DataError("no manifests to evaluate on");
  options.player.validate();
  options.qoe.validate();
  for (const Scheme &s : schemes) {
    if (s.kind == SchemeKind::kPolicy && s.model) {
      for (const VideoManifest &m : manifests) {
        if (m.levels() != s.model->config().levels) {
          throw ConfigError("model for '" + s.label + "' expects " + std::to_string(s.model->config().levels) +
                            " levels, manifest " + m.name() + " has " + std::to_string(m.levels()));
        }
      }
    }
  }

  const std::size_t per_scheme = traces.size() * manifests.size();
  const std::size_t total = schemes.size() * per_scheme;
  std::vector<EvalRow> rows(total);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(std::max<std::size_t>(1, options.workers));

  auto run = [&](std::size_t worker) {
    try {
      for (std::size_t job = next.fetch_add(1); job < total; job = next.fetch_add(1)) {
        const Scheme &scheme = schemes[job / per_scheme];
        const NetworkTrace &trace = traces[(job % per_scheme) / manifests.size()];
        const VideoManifest &manifest = manifests[job % manifests.size()];
        SessionLog log;
        if (scheme.kind == SchemeKind::kOffline) {
          log = offline_optimal(trace, manifest, options.player, options.qoe, 0.0, options.offline_grid).log;
        } else {
          log = run_session(trace, manifest, scheme_decider(scheme, options), options.player);
        }
        EvalRow &row = rows[job];
        row.scheme = scheme.label;
        row.trace = trace.name();
        row.video = manifest.name();
        row.metrics = session_metrics(log, options.qoe);
        if (options.keep_logs) row.log = std::move(log);
      }
    } catch (...) {
      failures[worker] = std::current_exception();
      next.store(total);
    }
  };
  if (options.workers <= 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < options.workers; ++w) pool.emplace_back(run, w);
    for (auto &t : pool) t.join();
  }
  for (const auto &f : failures) {
    if (f) std::rethrow_exception(f);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const EvalRow &a, const EvalRow &b) {
    return std::tie(a.scheme, a.trace, a.video) < std::tie(b.scheme, b.trace, b.video);
  });
  return EvalReport{std::move(rows)};
}

std::vector<SchemeSummary> summarize(const EvalReport &report) {
  std::vector<SchemeSummary> out;
  std::map<std::string, std::size_t> index;
  for (const EvalRow &row : report.rows) {
    auto [it, inserted] = index.emplace(row.scheme, out.size());
    if (inserted) out.push_back(SchemeSummary{row.scheme});
    SchemeSummary &s = out[it->second];
    ++s.sessions;
    s.qoe += row.metrics.qoe;
    s.quality += row.metrics.mean_quality;
    s.rebuffer += row.metrics.rebuffer;
    s.smooth_pos += row.metrics.smooth_pos;
    s.smooth_neg += row.metrics.smooth_neg;
  }
  for (SchemeSummary &s : out) {
    const double n = static_cast<double>(s.sessions);
    s.qoe /= n;
    s.quality /= n;
    s.rebuffer /= n;
    s.smooth_pos /= n;
    s.smooth_neg /= n;
  }
  return out;
}

Comparison compare(const EvalReport &report, const std::string &scheme_a, const std::string &scheme_b) {
  std::map<std::pair<std::string, std::string>, double> a, b;
  for (const EvalRow &row : report.rows) {
    if (row.scheme == scheme_a) a[{row.trace, row.video}] = row.metrics.qoe;
    if (row.scheme == scheme_b) b[{row.trace, row.video}] = row.metrics.qoe;
  }
  if (a.empty()) throw DataError("scheme not in report: " + scheme_a);
  if (b.empty()) throw DataError("scheme not in report: " + scheme_b);
  if (a.size() != b.size()) throw DataError("mismatched session sets");
  Comparison c;
  c.scheme_a = scheme_a;
  c.scheme_b = scheme_b;
  for (const auto &[key, qa] : a) {
    const auto it = b.find(key);
    if (it == b.end()) throw DataError("mismatched session sets");
    const double qb = it->second;
    double pct = 0.0;
    if (qa != qb) {
      if (qb == 0.0) throw DataError("zero baseline QoE for " + key.first + "/" + key.second);
      pct = 100.0 * (qa - qb) / std::fabs(qb);
    }
    c.sessions.push_back(key.first + "/" + key.second);
    c.improvements.push_back(pct);
  }
  c.cdf_x = c.improvements;
  std::sort(c.cdf_x.begin(), c.cdf_x.end());
  const double n = static_cast<double>(c.cdf_x.size());
  for (std::size_t i = 0; i < c.cdf_x.size(); ++i) c.cdf_y.push_back(static_cast<double>(i + 1) / n);
  double sum = 0.0;
  for (double v : c.improvements) sum += v;
  c.mean = sum / n;
  return c;
}

std::string report_csv(const EvalReport &report) {
  std::ostringstream out;
  out << "scheme,trace,video,qoe,quality,rebuffer_s,smooth_pos,smooth_neg\n";
  for (const EvalRow &r : report.rows) {
    out << r.scheme << ',' << r.trace << ',' << r.video << ',' << fmt(r.metrics.qoe) << ','
        << fmt(r.metrics.mean_quality) << ',' << fmt(r.metrics.rebuffer) << ',' << fmt(r.metrics.smooth_pos) << ','
        << fmt(r.metrics.smooth_neg) << '\n';
  }
  return out.str();
}

EvalReport parse_report_csv(const std::string &text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "scheme,trace,video,qoe,quality,rebuffer_s,smooth_pos,smooth_neg") {
    throw DataError("not an evaluation report (bad header)");
  }
  EvalReport report;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 8) throw DataError("expected 8 columns at line " + std::to_string(number));
    EvalRow row;
    row.scheme = cells[0];
    row.trace = cells[1];
    row.video = cells[2];
    row.metrics.qoe = parse_number(cells[3], number);
    row.metrics.mean_quality = parse_number(cells[4], number);
    row.metrics.rebuffer = parse_number(cells[5], number);
    row.metrics.smooth_pos = parse_number(cells[6], number);
    row.metrics.smooth_neg = parse_number(cells[7], number);
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string comparison_csv(const Comparison &c) {
  std::ostringstream out;
  out << "session,improvement_pct\n";
  for (std::size_t i = 0; i < c.sessions.size(); ++i) out << c.sessions[i] << ',' << fmt(c.improvements[i]) << '\n';
  return out.str();
}

void write_report(const EvalReport &report, const std::string &dir, bool plots, const std::string &focus) {
  if (report.rows.empty()) throw DataError("empty report");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir + ": " + ec.message());
  write_file((fs::path(dir) / "report.csv").string(), report_csv(report));
  if (!plots) return;
  const auto summary = summarize(report);
  write_file((fs::path(dir) / "summary.svg").string(), summary_svg(summary));
  std::string a = focus;
  if (a.empty()) {
    const bool has_policy = std::any_of(summary.begin(), summary.end(),
                                        [](const SchemeSummary &s) { return s.scheme == "comyco"; });
    a = has_policy ? "comyco" : summary.front().scheme;
  }
  for (const SchemeSummary &s : summary) {
    if (s.scheme == a) continue;
    const Comparison c = compare(report, a, s.scheme);
    write_file((fs::path(dir) / ("cdf_" + file_safe(a) + "_vs_" + file_safe(s.scheme) + ".svg")).string(),
               cdf_svg(c));
  }
}

}  // namespace abrlab
