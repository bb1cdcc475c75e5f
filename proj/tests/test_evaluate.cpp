#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "abrlab/error.hpp"
#include "abrlab/evaluate.hpp"
#include "abrlab/io.hpp"
#include "abrlab/model_io.hpp"
#include "fixtures.hpp"

using namespace abrlab;
namespace fs = std::filesystem;

namespace {

std::vector<Scheme> schemes(std::initializer_list<const char *> names) {
  std::vector<Scheme> out;
  for (const char *n : names) out.push_back(parse_scheme(n));
  return out;
}

EvalRow row(const std::string &scheme, const std::string &trace, double qoe) {
  EvalRow r;
  r.scheme = scheme;
  r.trace = trace;
  r.video = "v";
  r.metrics.qoe = qoe;
  return r;
}

fs::path scratch_dir(const char *name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("scheme names") {
  CHECK(parse_scheme("rb").kind == SchemeKind::kRb);
  CHECK(parse_scheme("robustmpc").label == "robustmpc");
  CHECK(parse_scheme("offline").kind == SchemeKind::kOffline);
  CHECK_THROWS_AS(parse_scheme("pensieve"), ConfigError);
  CHECK_THROWS_AS(parse_scheme("comyco"), ConfigError);
  CHECK_THROWS_AS(parse_scheme("comyco", "/nonexistent/model.cmy"), DataError);
  CHECK_THROWS_AS(scheme_decider(parse_scheme("offline"), EvalOptions{}), ConfigError);

  const fs::path dir = scratch_dir("abrlab_test_scheme");
  fs::create_directories(dir);
  NetConfig c;
  c.conv_channels = 4;
  c.hidden = 8;
  save_model(PolicyNetwork(c), (dir / "m.cmy").string());
  const Scheme s = parse_scheme("comyco", (dir / "m.cmy").string());
  CHECK(s.kind == SchemeKind::kPolicy);
  CHECK(s.label == "comyco");
  REQUIRE(s.model != nullptr);
  fs::remove_all(dir);
}

TEST_CASE("rate-based never stalls on an ample constant link") {
  const std::vector<NetworkTrace> traces = {NetworkTrace::constant(20.0 * kBytesPerMbps, "ample")};
  const std::vector<VideoManifest> videos = {testing::random_manifest(1), testing::random_manifest(2),
                                             testing::random_manifest(3)};
  const EvalReport r = evaluate(schemes({"rb"}), traces, videos, EvalOptions{});
  REQUIRE(r.rows.size() == 3);
  for (const EvalRow &row : r.rows) CHECK(row.metrics.rebuffer == 0.0);
}

TEST_CASE("evaluation matrix: row accounting, offline dominance, stable order") {
  std::vector<NetworkTrace> traces;
  for (std::uint64_t s = 1; s <= 3; ++s) traces.push_back(testing::random_trace(s));
  const std::vector<VideoManifest> videos = {testing::random_manifest(4), testing::random_manifest(5)};
  EvalOptions options;
  options.keep_logs = true;
  const auto all = schemes({"rb", "bola", "robustmpc", "expert", "offline"});
  const EvalReport r = evaluate(all, traces, videos, options);
  CHECK(r.rows.size() == all.size() * traces.size() * videos.size());
  for (const SchemeSummary &s : summarize(r)) CHECK(s.sessions == traces.size() * videos.size());

  for (const EvalRow &o : r.rows) {
    if (o.scheme != "offline") continue;
    for (const EvalRow &x : r.rows) {
      if (x.trace == o.trace && x.video == o.video) CHECK(o.metrics.qoe >= x.metrics.qoe - 1e-9);
    }
  }
  for (const char *other : {"rb", "bola", "robustmpc", "expert"}) {
    const Comparison c = compare(r, "offline", other);
    for (double x : c.improvements) CHECK(x >= -1e-9);
  }

  // Worker interleaving does not change the report.
  options.workers = 4;
  CHECK(report_csv(evaluate(all, traces, videos, options)) == report_csv(r));
  CHECK(std::is_sorted(r.rows.begin(), r.rows.end(), [](const EvalRow &a, const EvalRow &b) {
    return std::tie(a.scheme, a.trace, a.video) < std::tie(b.scheme, b.trace, b.video);
  }));
}

TEST_CASE("compare: identity, arithmetic, mismatches") {
  EvalReport r;
  r.rows = {row("a", "t1", 100.0), row("a", "t2", 50.0), row("b", "t1", 80.0), row("b", "t2", 50.0)};
  const Comparison c = compare(r, "a", "b");
  REQUIRE(c.improvements.size() == 2);
  CHECK(c.improvements[0] == doctest::Approx(25.0));
  CHECK(c.improvements[1] == 0.0);
  CHECK(c.mean == doctest::Approx(12.5));
  CHECK(c.cdf_x == std::vector<double>{0.0, 25.0});
  CHECK(c.cdf_y == std::vector<double>{0.5, 1.0});

  const Comparison self = compare(r, "a", "a");
  for (double x : self.improvements) CHECK(x == 0.0);

  EvalReport partial = r;
  partial.rows.pop_back();
  CHECK_THROWS_AS(compare(partial, "a", "b"), DataError);
  CHECK_THROWS_AS(compare(r, "a", "missing"), DataError);

  // Negative baselines use |b| so a gain is still positive.
  EvalReport neg;
  neg.rows = {row("a", "t", -50.0), row("b", "t", -100.0)};
  CHECK(compare(neg, "a", "b").improvements[0] == doctest::Approx(50.0));
}

TEST_CASE("report CSV: schema, round trip, consistency with per-chunk logs") {
  const std::vector<NetworkTrace> traces = {testing::random_trace(7), testing::random_trace(8)};
  const std::vector<VideoManifest> videos = {testing::random_manifest(9)};
  EvalOptions options;
  options.keep_logs = true;
  const EvalReport r = evaluate(schemes({"rb", "bola", "expert"}), traces, videos, options);
  const std::string csv = report_csv(r);
  CHECK(csv.rfind("scheme,trace,video,qoe,quality,rebuffer_s,smooth_pos,smooth_neg\n", 0) == 0);

  const EvalReport back = parse_report_csv(csv);
  REQUIRE(back.rows.size() == r.rows.size());
  const auto s1 = summarize(r), s2 = summarize(back);
  REQUIRE(s1.size() == s2.size());
  for (std::size_t i = 0; i < s1.size(); ++i) {
    CHECK(s1[i].scheme == s2[i].scheme);
    CHECK(s1[i].qoe == doctest::Approx(s2[i].qoe).epsilon(1e-12));
    CHECK(s1[i].quality == doctest::Approx(s2[i].quality).epsilon(1e-12));
    CHECK(s1[i].rebuffer == doctest::Approx(s2[i].rebuffer).epsilon(1e-12));
    CHECK(s1[i].smooth_pos == doctest::Approx(s2[i].smooth_pos).epsilon(1e-12));
    CHECK(s1[i].smooth_neg == doctest::Approx(s2[i].smooth_neg).epsilon(1e-12));
  }
  CHECK(report_csv(back) == csv);
  CHECK_THROWS_AS(parse_report_csv("scheme,trace\nrb,t\n"), DataError);

  for (const EvalRow &row : r.rows) {
    SessionLog log;
    log.chunks = parse_session_csv(session_csv(row.log, videos[0]));
    log.startup_time = row.log.startup_time;
    CHECK(session_qoe(log, options.qoe) == doctest::Approx(row.metrics.qoe).epsilon(1e-12));
  }
}

TEST_CASE("report files") {
  CHECK_THROWS_AS(write_report(EvalReport{}, scratch_dir("abrlab_test_empty").string(), false), DataError);

  const std::vector<NetworkTrace> traces = {testing::random_trace(1)};
  const std::vector<VideoManifest> videos = {testing::random_manifest(1)};
  const EvalReport r = evaluate(schemes({"rb", "bola", "expert"}), traces, videos, EvalOptions{});
  const fs::path dir = scratch_dir("abrlab_test_report");
  write_report(r, dir.string(), false);
  CHECK(read_file((dir / "report.csv").string()) == report_csv(r));
  CHECK_FALSE(fs::exists(dir / "summary.svg"));
  write_report(r, dir.string(), true, "expert");
  CHECK(fs::exists(dir / "summary.svg"));
  CHECK(fs::exists(dir / "cdf_expert_vs_rb.svg"));
  CHECK(fs::exists(dir / "cdf_expert_vs_bola.svg"));
  CHECK(read_file((dir / "summary.svg").string()).rfind("<svg", 0) == 0);
  fs::remove_all(dir);
}
