#include "abrlab/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "abrlab/error.hpp"
#include "abrlab/io.hpp"
#include "abrlab/rng.hpp"

namespace abrlab {

using json = nlohmann::json;

VideoManifest::VideoManifest(double chunk_duration, std::vector<double> level_bitrates,
                             std::vector<double> sizes, std::vector<double> vmaf, std::string name)
    : chunk_duration_(chunk_duration),
      bitrates_(std::move(level_bitrates)),
      sizes_(std::move(sizes)),
      vmaf_(std::move(vmaf)),
      name_(std::move(name)) {
  if (!(chunk_duration_ > 0.0)) throw DataError("chunk_duration must be > 0");
  if (bitrates_.empty()) throw DataError("manifest has no levels");
  for (std::size_t l = 1; l < bitrates_.size(); ++l)
    if (!(bitrates_[l] > bitrates_[l - 1])) throw DataError("levels not ascending");
  const std::size_t n = bitrates_.size();
  if (sizes_.empty() || sizes_.size() % n != 0 || vmaf_.size() != sizes_.size())
    throw DataError("ragged chunk rows");
  for (std::size_t k = 0; k < sizes_.size() / n; ++k) {
    for (std::size_t l = 0; l < n; ++l) {
      const double s = sizes_[k * n + l];
      const double q = vmaf_[k * n + l];
      if (!(s > 0.0) || !std::isfinite(s)) throw DataError("size must be > 0 in chunk " + std::to_string(k));
      if (l > 0 && !(s > sizes_[k * n + l - 1]))
        throw DataError("sizes not increasing in chunk " + std::to_string(k));
      if (!(q >= 0.0 && q <= 100.0)) throw DataError("vmaf out of range in chunk " + std::to_string(k));
    }
  }
}

std::vector<std::size_t> VideoManifest::quality_inversions() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < chunks(); ++k) {
    const auto q = chunk_qualities(k);
    if (!std::is_sorted(q.begin(), q.end())) out.push_back(k);
  }
  return out;
}

namespace {

const json &require(const json &obj, const char *key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw DataError(std::string("missing field '") + key + "'");
  return *it;
}

double number(const json &value, const char *what) {
  if (!value.is_number()) throw DataError(std::string(what) + " must be a number");
  return value.get<double>();
}

}  // namespace

VideoManifest parse_manifest(std::string_view text, std::string name, std::vector<std::string> *warnings) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw DataError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw DataError("manifest must be a JSON object");
  const double duration = number(require(doc, "chunk_duration"), "chunk_duration");
  const json &levels = require(doc, "levels");
  const json &chunks = require(doc, "chunks");
  if (!levels.is_array() || levels.empty()) throw DataError("levels must be a non-empty array");
  if (!chunks.is_array() || chunks.empty()) throw DataError("chunks must be a non-empty array");
  std::vector<double> bitrates;
  for (const auto &l : levels) bitrates.push_back(number(l, "level bitrate"));
  std::vector<double> sizes, vmaf;
  for (std::size_t k = 0; k < chunks.size(); ++k) {
    const json &row = chunks[k];
    if (!row.is_array() || row.size() != bitrates.size())
      throw DataError("ragged chunk rows: chunk " + std::to_string(k) + " does not have " +
                      std::to_string(bitrates.size()) + " levels");
    for (const auto &cell : row) {
      if (!cell.is_object()) throw DataError("chunk entry must be an object");
      sizes.push_back(number(require(cell, "size"), "size"));
      vmaf.push_back(number(require(cell, "vmaf"), "vmaf"));
    }
  }
  VideoManifest manifest(duration, std::move(bitrates), std::move(sizes), std::move(vmaf), std::move(name));
  if (warnings) {
    for (std::size_t k : manifest.quality_inversions())
      warnings->push_back("vmaf not increasing across levels in chunk " + std::to_string(k));
  }
  return manifest;
}

std::string serialize_manifest(const VideoManifest &manifest) {
  json doc;
  doc["chunk_duration"] = manifest.chunk_duration();
  doc["levels"] = std::vector<double>(manifest.bitrates().begin(), manifest.bitrates().end());
  json chunks = json::array();
  for (std::size_t k = 0; k < manifest.chunks(); ++k) {
    json row = json::array();
    for (std::size_t l = 0; l < manifest.levels(); ++l)
      row.push_back({{"size", manifest.size(k, l)}, {"vmaf", manifest.quality(k, l)}});
    chunks.push_back(std::move(row));
  }
  doc["chunks"] = std::move(chunks);
  return doc.dump() + "\n";
}

VideoManifest load_manifest(const std::string &path, std::vector<std::string> *warnings) {
  return parse_manifest(read_file(path), std::filesystem::path(path).filename().string(), warnings);
}

void save_manifest(const VideoManifest &manifest, const std::string &path) {
  write_file(path, serialize_manifest(manifest));
}

std::vector<VideoManifest> load_manifest_dir(const std::string &dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto &entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<VideoManifest> out;
  for (const auto &f : files) out.push_back(load_manifest(f.string()));
  if (out.empty()) throw DataError("no manifests in " + dir);
  return out;
}

VideoManifest generate_synthetic_manifest(const SyntheticVideoConfig &config) {
  if (config.chunks == 0 || config.bitrates.empty()) throw ConfigError("synthetic video needs chunks and levels");
  if (!(config.size_jitter >= 0.0 && config.size_jitter < 0.3))
    throw ConfigError("size jitter must lie in [0, 0.3)");
  Rng rng(config.seed);
  const std::size_t n = config.bitrates.size();
  std::vector<double> sizes, vmaf;
  sizes.reserve(config.chunks * n);
  vmaf.reserve(config.chunks * n);
  double complexity = rng.uniform(0.7, 1.3);
  for (std::size_t k = 0; k < config.chunks; ++k) {
    // Scene complexity drifts slowly, with occasional cuts.
    if (rng.uniform() < 0.1)
      complexity = rng.uniform(0.5, 1.6);
    else
      complexity = std::clamp(complexity + rng.uniform(-0.08, 0.08), 0.5, 1.6);
    const double scene_scale = std::pow(complexity, 0.35);
    double prev_size = 0.0;
    double prev_q = -1.0;
    for (std::size_t l = 0; l < n; ++l) {
      const double nominal = config.bitrates[l] * config.chunk_duration / 8.0;
      double size = std::round(nominal * scene_scale * (1.0 + rng.uniform(-config.size_jitter, config.size_jitter)));
      size = std::max(size, prev_size + 1.0);
      prev_size = size;
      sizes.push_back(size);
      // Encoder noise perturbs the effective rate, and a higher rung of the
      // same chunk never scores lower.
      const double effective =
          (size * 8.0 / config.chunk_duration) / (1.2e6 * complexity) * (1.0 + rng.uniform(-0.05, 0.05));
      double q = std::round(100.0 * (1.0 - std::exp(-1.1 * effective)) * 1000.0) / 1000.0;
      q = std::min(std::max(q, prev_q + 0.001), 100.0);
      prev_q = q;
      vmaf.push_back(q);
    }
  }
  return VideoManifest(config.chunk_duration, config.bitrates, std::move(sizes), std::move(vmaf), config.name);
}

}  // namespace abrlab
