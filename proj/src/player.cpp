#include "abrlab/player.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "abrlab/error.hpp"

namespace abrlab {

void PlayerConfig::validate() const {
  if (!(buffer_max > 0.0)) throw ConfigError("buffer_max must be > 0");
  if (!(rtt >= 0.0)) throw ConfigError("rtt must be >= 0");
  if (history_len < 1) throw ConfigError("history_len must be >= 1");
  if (future_horizon < 1) throw ConfigError("future_horizon must be >= 1");
  if (!(scales.throughput > 0.0 && scales.download_time > 0.0 && scales.chunk_size > 0.0 &&
        scales.quality > 0.0))
    throw ConfigError("feature scales must be > 0");
}

DownloadResult download_chunk(const NetworkTrace &trace, double position, double size, double rtt,
                              bool loop) {
  const double transfer = trace.transfer_time(position + rtt, size, loop);
  return {rtt + transfer, size / transfer};
}

StepResult step(const PlayerSnapshot &snapshot, std::size_t level, const NetworkTrace &trace,
                const VideoManifest &manifest, const PlayerConfig &config) {
  if (snapshot.chunk >= manifest.chunks()) throw DataError("end of video");
  if (level >= manifest.levels()) throw DataError("level out of range");
  const double size = manifest.size(snapshot.chunk, level);
  const DownloadResult dl =
      download_chunk(trace, snapshot.trace_position(), size, config.rtt, config.trace_loop);

  StepResult r;
  ChunkOutcome &o = r.outcome;
  o.level = level;
  o.size = size;
  o.quality = manifest.quality(snapshot.chunk, level);
  o.download_time = dl.download_time;
  o.throughput = dl.throughput;
  const double stall = std::max(dl.download_time - snapshot.buffer, 0.0);
  double buffer = std::max(snapshot.buffer - dl.download_time, 0.0) + manifest.chunk_duration();
  o.idle = std::max(buffer - config.buffer_max, 0.0);
  buffer = std::min(buffer, config.buffer_max);
  o.buffer = buffer;
  if (snapshot.chunk == 0 && config.startup_excluded) {
    r.startup = stall;
  } else {
    o.rebuffer = stall;
  }

  PlayerSnapshot &next = r.next;
  next.time = snapshot.time + dl.download_time + o.idle;
  next.buffer = buffer;
  next.chunk = snapshot.chunk + 1;
  next.last_level = level;
  next.last_quality = o.quality;
  next.trace_offset = snapshot.trace_offset;
  return r;
}

Observation build_observation(const std::vector<ChunkOutcome> &history, const PlayerSnapshot &snapshot,
                              const VideoManifest &manifest, const PlayerConfig &config) {
  const std::size_t h = config.history_len;
  const std::size_t f = config.future_horizon;
  const std::size_t levels = manifest.levels();
  const FeatureScales &s = config.scales;
  Observation obs;
  obs.throughput_history.assign(h, 0.0);
  obs.download_history.assign(h, 0.0);
  obs.buffer_history.assign(h, 0.0);
  const std::size_t have = std::min(h, history.size());
  for (std::size_t i = 0; i < have; ++i) {
    const ChunkOutcome &o = history[history.size() - have + i];
    const std::size_t slot = h - have + i;
    obs.throughput_history[slot] = o.throughput / s.throughput;
    obs.download_history[slot] = o.download_time / s.download_time;
    obs.buffer_history[slot] = o.buffer / config.buffer_max;
  }
  obs.future_sizes.assign(f * levels, 0.0);
  obs.future_qualities.assign(f * levels, 0.0);
  for (std::size_t j = 0; j < f; ++j) {
    const std::size_t k = snapshot.chunk + j;
    if (k >= manifest.chunks()) break;
    for (std::size_t l = 0; l < levels; ++l) {
      obs.future_sizes[j * levels + l] = manifest.size(k, l) / s.chunk_size;
      obs.future_qualities[j * levels + l] = manifest.quality(k, l) / s.quality;
    }
  }
  obs.last_quality = snapshot.last_level ? snapshot.last_quality / s.quality : 0.0;
  const double n = static_cast<double>(manifest.chunks());
  obs.remain = (n - static_cast<double>(snapshot.chunk)) / n;
  return obs;
}

SessionLog run_session(const NetworkTrace &trace, const VideoManifest &manifest, const Decider &decide,
                       const PlayerConfig &config, double trace_offset) {
  SessionLog log;
  log.trace_name = trace.name();
  log.manifest_name = manifest.name();
  log.chunks.reserve(manifest.chunks());
  PlayerSnapshot snap;
  snap.trace_offset = trace_offset;
  while (snap.chunk < manifest.chunks()) {
    const Observation obs = build_observation(log.chunks, snap, manifest, config);
    const DecisionContext ctx{obs, snap, log.chunks, trace, manifest, config};
    const std::size_t level = decide(ctx);
    if (level >= manifest.levels()) throw InvariantError("decider returned an invalid level");
    StepResult r = step(snap, level, trace, manifest, config);
    log.startup_time += r.startup;
    log.chunks.push_back(r.outcome);
    snap = r.next;
  }
  return log;
}

SessionLog replay_plan(const NetworkTrace &trace, const VideoManifest &manifest,
                       const std::vector<std::size_t> &plan, const PlayerConfig &config,
                       double trace_offset) {
  SessionLog log;
  log.trace_name = trace.name();
  log.manifest_name = manifest.name();
  PlayerSnapshot snap;
  snap.trace_offset = trace_offset;
  for (std::size_t level : plan) {
    StepResult r = step(snap, level, trace, manifest, config);
    log.startup_time += r.startup;
    log.chunks.push_back(r.outcome);
    snap = r.next;
  }
  return log;
}

namespace {

void append_number(std::string &out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

std::string session_csv(const SessionLog &log, const VideoManifest &manifest) {
  std::string out = "k,level,bitrate,size_bytes,vmaf,download_s,rebuffer_s,idle_s,buffer_s,throughput_bps\n";
  for (std::size_t k = 0; k < log.chunks.size(); ++k) {
    const ChunkOutcome &o = log.chunks[k];
    out += std::to_string(k);
    out += ',';
    out += std::to_string(o.level);
    for (double v : {manifest.bitrate(o.level), o.size, o.quality, o.download_time, o.rebuffer, o.idle,
                     o.buffer, o.throughput * 8.0}) {
      out += ',';
      append_number(out, v);
    }
    out += '\n';
  }
  return out;
}

std::vector<ChunkOutcome> parse_session_csv(const std::string &text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty session csv");
  std::vector<ChunkOutcome> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      auto comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + comma, x);
      if (ec != std::errc()) throw DataError("malformed session csv row");
      v.push_back(x);
      pos = comma + 1;
    }
    if (v.size() != 10) throw DataError("session csv row must have 10 columns");
    ChunkOutcome o;
    o.level = static_cast<std::size_t>(v[1]);
    o.size = v[3];
    o.quality = v[4];
    o.download_time = v[5];
    o.rebuffer = v[6];
    o.idle = v[7];
    o.buffer = v[8];
    o.throughput = v[9] / 8.0;
    out.push_back(o);
  }
  return out;
}

}  // namespace abrlab
