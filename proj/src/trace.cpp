#include "abrlab/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <sstream>

#include "abrlab/error.hpp"
#include "abrlab/io.hpp"
#include "abrlab/rng.hpp"

namespace abrlab {

namespace {

std::string line_error(std::size_t line, const std::string &what) {
  return what + " at line " + std::to_string(line);
}

bool parse_double(std::string_view token, double &out) {
  const char *first = token.data();
  const char *last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

// Mbps -> bytes/s as fl(value * 1e6) / 8: the decimal shift is done on the
// text so the whole conversion rounds once and is invertible.
bool parse_mbps(std::string_view token, double &bytes_per_second) {
  std::string_view mantissa = token;
  long exponent = 0;
  const auto e = token.find_first_of("eE");
  if (e != std::string_view::npos) {
    mantissa = token.substr(0, e);
    std::string_view exp_text = token.substr(e + 1);
    if (!exp_text.empty() && exp_text.front() == '+') exp_text.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(exp_text.data(), exp_text.data() + exp_text.size(), exponent);
    if (ec != std::errc() || ptr != exp_text.data() + exp_text.size()) return false;
  }
  double check = 0.0;
  if (!parse_double(mantissa, check)) return false;
  const std::string shifted = std::string(mantissa) + "e" + std::to_string(exponent + 6);
  double bits = 0.0;
  if (!parse_double(shifted, bits)) return false;
  bytes_per_second = bits / 8.0;
  return true;
}

std::string shortest(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string format_mbps(double bytes_per_second) {
  const std::string pretty = shortest(bytes_per_second / kBytesPerMbps);
  double back = 0.0;
  if (parse_mbps(pretty, back) && back == bytes_per_second) return pretty;
  // Exact fallback: bits/s in scientific form with the exponent shifted by -6.
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), bytes_per_second * 8.0,
                                 std::chars_format::scientific);
  std::string text(buf, ptr);
  const auto e = text.find('e');
  const long exponent = std::strtol(text.c_str() + e + 1, nullptr, 10) - 6;
  return text.substr(0, e) + "e" + std::to_string(exponent);
}

}  // namespace

NetworkTrace::NetworkTrace(std::vector<TraceSample> samples, std::string name)
    : samples_(std::move(samples)), name_(std::move(name)) {
  if (samples_.size() < 2) throw DataError("trace needs at least 2 samples");
  if (!(samples_.front().time >= 0.0)) throw DataError("negative first timestamp");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!(samples_[i].throughput > 0.0) || !std::isfinite(samples_[i].throughput))
      throw DataError("non-positive throughput at sample " + std::to_string(i));
    if (i > 0 && !(samples_[i].time > samples_[i - 1].time))
      throw DataError("non-increasing timestamp at sample " + std::to_string(i));
  }
  const std::size_t n = samples_.size();
  end_ = samples_[n - 1].time + (samples_[n - 1].time - samples_[n - 2].time);
}

NetworkTrace NetworkTrace::constant(double throughput, std::string name) {
  return NetworkTrace({{0.0, throughput}, {1.0, throughput}}, std::move(name));
}

double NetworkTrace::wrap(double position) const {
  const double t0 = samples_.front().time;
  if (position < end_) return position;
  const double p = period();
  double wrapped = t0 + std::fmod(position - t0, p);
  if (wrapped >= end_) wrapped = t0;
  return wrapped;
}

std::size_t NetworkTrace::segment_index(double position) const {
  auto it = std::upper_bound(samples_.begin(), samples_.end(), position,
                             [](double t, const TraceSample &s) { return t < s.time; });
  if (it == samples_.begin()) return 0;
  return static_cast<std::size_t>(it - samples_.begin()) - 1;
}

double NetworkTrace::rate_at(double position, bool loop) const {
  if (loop) position = wrap(position);
  return samples_[segment_index(position)].throughput;
}

double NetworkTrace::transfer_time(double position, double bytes, bool loop) const {
  const std::size_t n = samples_.size();
  if (loop) position = wrap(position);
  std::size_t i = segment_index(position);
  double remaining = bytes;
  double elapsed = 0.0;
  for (;;) {
    const double rate = samples_[i].throughput;
    double seg_end;
    if (position < samples_[i].time) {
      seg_end = samples_[i].time;  // before the first sample
    } else if (i + 1 < n) {
      seg_end = samples_[i + 1].time;
    } else {
      seg_end = loop ? end_ : std::numeric_limits<double>::infinity();
    }
    const double available = rate * (seg_end - position);
    if (remaining <= available) {
      elapsed += remaining / rate;
      return elapsed;
    }
    remaining -= available;
    elapsed += seg_end - position;
    if (position < samples_[i].time) {
      position = seg_end;
      continue;
    }
    ++i;
    if (i == n) {
      i = 0;
      position = samples_.front().time;
    } else {
      position = seg_end;
    }
  }
}

double NetworkTrace::mean_throughput() const {
  double bytes = 0.0;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const double next = i + 1 < samples_.size() ? samples_[i + 1].time : end_;
    bytes += samples_[i].throughput * (next - samples_[i].time);
  }
  return bytes / period();
}

NetworkTrace parse_trace(std::string_view text, std::string name) {
  std::vector<TraceSample> samples;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      if (j > i) tokens.push_back(line.substr(i, j - i));
      i = j;
    }
    if (tokens.empty()) continue;
    TraceSample s;
    if (tokens.size() != 2 || !parse_double(tokens[0], s.time) || !parse_mbps(tokens[1], s.throughput))
      throw DataError(line_error(line_no, "malformed line"));
    if (!samples.empty() && !(s.time > samples.back().time))
      throw DataError(line_error(line_no, "non-increasing timestamp"));
    if (s.time < 0.0) throw DataError(line_error(line_no, "negative timestamp"));
    if (!(s.throughput > 0.0)) throw DataError(line_error(line_no, "non-positive throughput"));
    samples.push_back(s);
  }
  if (samples.empty()) throw DataError("empty trace");
  if (samples.size() < 2) throw DataError("trace needs at least 2 samples");
  return NetworkTrace(std::move(samples), std::move(name));
}

std::string serialize_trace(const NetworkTrace &trace) {
  std::string out;
  for (const auto &s : trace.samples()) {
    out += shortest(s.time);
    out += ' ';
    out += format_mbps(s.throughput);
    out += '\n';
  }
  return out;
}

NetworkTrace load_trace(const std::string &path) {
  return parse_trace(read_file(path), std::filesystem::path(path).filename().string());
}

void save_trace(const NetworkTrace &trace, const std::string &path) {
  write_file(path, serialize_trace(trace));
}

std::vector<NetworkTrace> load_trace_dir(const std::string &dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto &entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<NetworkTrace> traces;
  traces.reserve(files.size());
  for (const auto &f : files) traces.push_back(load_trace(f.string()));
  if (traces.empty()) throw DataError("no traces in " + dir);
  return traces;
}

void MarkovTraceConfig::validate() const {
  if (state_levels.empty()) throw ConfigError("markov: empty state levels");
  for (double level : state_levels)
    if (!(level > 0.0) || !std::isfinite(level)) throw ConfigError("markov: state level must be > 0");
  if (transition_matrix.size() != state_levels.size())
    throw ConfigError("markov: transition matrix must be square over the states");
  for (const auto &row : transition_matrix) {
    if (row.size() != state_levels.size())
      throw ConfigError("markov: transition matrix must be square over the states");
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw ConfigError("markov: negative transition probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("markov: transition row does not sum to 1");
  }
  if (!(dwell > 0.0)) throw ConfigError("markov: dwell must be > 0");
  if (!(noise_fraction >= 0.0 && noise_fraction < 1.0))
    throw ConfigError("markov: noise fraction must lie in [0, 1)");
  if (!(duration >= dwell)) throw ConfigError("markov: duration must be >= dwell");
}

std::vector<std::vector<double>> sticky_transitions(std::size_t states, double stay) {
  std::vector<std::vector<double>> m(states, std::vector<double>(states, 0.0));
  for (std::size_t i = 0; i < states; ++i) {
    for (std::size_t j = 0; j < states; ++j) {
      if (states == 1)
        m[i][j] = 1.0;
      else
        m[i][j] = i == j ? stay : (1.0 - stay) / static_cast<double>(states - 1);
    }
  }
  return m;
}

MarkovTraceConfig default_markov_config(std::uint64_t seed) {
  MarkovTraceConfig c;
  for (double mbps : {0.3, 0.6, 1.0, 1.6, 2.5, 4.0, 6.0}) c.state_levels.push_back(mbps * kBytesPerMbps);
  c.transition_matrix = sticky_transitions(c.state_levels.size(), 0.8);
  c.dwell = 1.0;
  c.noise_fraction = 0.2;
  c.duration = 320.0;
  c.seed = seed;
  c.name = "markov" + std::to_string(seed);
  return c;
}

NetworkTrace generate_markov_trace(const MarkovTraceConfig &config) {
  config.validate();
  Rng rng(config.seed);
  const std::size_t count =
      std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(config.duration / config.dwell + 1e-9)));
  std::size_t state = rng.index(config.state_levels.size());
  std::vector<TraceSample> samples;
  samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = config.noise_fraction > 0.0
                         ? rng.uniform(-config.noise_fraction, config.noise_fraction)
                         : 0.0;
    samples.push_back({static_cast<double>(i) * config.dwell, config.state_levels[state] * (1.0 + u)});
    const double r = rng.uniform();
    const auto &row = config.transition_matrix[state];
    double acc = 0.0;
    std::size_t next = row.size() - 1;
    for (std::size_t j = 0; j < row.size(); ++j) {
      acc += row[j];
      if (r < acc) {
        next = j;
        break;
      }
    }
    state = next;
  }
  return NetworkTrace(std::move(samples), config.name);
}

}  // namespace abrlab
