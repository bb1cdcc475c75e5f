#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace abrlab {

/// Per-chunk, per-level sizes (bytes) and VMAF scores of one encoded video.
/// Storage is chunk-major: index = chunk * levels + level.
class VideoManifest {
public:
  VideoManifest() = default;
  /// Validates invariants; throws DataError on violation.
  VideoManifest(double chunk_duration, std::vector<double> level_bitrates,
                std::vector<double> sizes, std::vector<double> vmaf, std::string name);

  double chunk_duration() const { return chunk_duration_; }
  std::size_t levels() const { return bitrates_.size(); }
  std::size_t chunks() const { return levels() == 0 ? 0 : sizes_.size() / levels(); }
  std::span<const double> bitrates() const { return bitrates_; }
  double bitrate(std::size_t level) const { return bitrates_[level]; }
  double size(std::size_t chunk, std::size_t level) const { return sizes_[chunk * levels() + level]; }
  double quality(std::size_t chunk, std::size_t level) const { return vmaf_[chunk * levels() + level]; }
  std::span<const double> chunk_sizes(std::size_t chunk) const {
    return std::span<const double>(sizes_).subspan(chunk * levels(), levels());
  }
  std::span<const double> chunk_qualities(std::size_t chunk) const {
    return std::span<const double>(vmaf_).subspan(chunk * levels(), levels());
  }
  const std::string &name() const { return name_; }

  /// Chunks whose VMAF is not non-decreasing across levels (allowed for VBR).
  std::vector<std::size_t> quality_inversions() const;

  friend bool operator==(const VideoManifest &, const VideoManifest &) = default;

private:
  double chunk_duration_ = 0.0;
  std::vector<double> bitrates_;
  std::vector<double> sizes_;
  std::vector<double> vmaf_;
  std::string name_;
};

/// JSON document: {"chunk_duration", "levels", "chunks": [[{"size","vmaf"},...],...]}.
/// Quality inversions are appended to `warnings` rather than rejected.
VideoManifest parse_manifest(std::string_view text, std::string name,
                             std::vector<std::string> *warnings = nullptr);
std::string serialize_manifest(const VideoManifest &manifest);

VideoManifest load_manifest(const std::string &path,
                            std::vector<std::string> *warnings = nullptr);
void save_manifest(const VideoManifest &manifest, const std::string &path);
std::vector<VideoManifest> load_manifest_dir(const std::string &dir);

/// Synthetic VBR encode: per-chunk scene complexity drives both sizes and
/// a saturating VMAF curve over the ladder.
struct SyntheticVideoConfig {
  std::size_t chunks = 48;
  double chunk_duration = 4.0;
  std::vector<double> bitrates = {300e3, 750e3, 1200e3, 1850e3, 2850e3, 4300e3};  // bits/s
  double size_jitter = 0.1;
  std::uint64_t seed = 0;
  std::string name = "synthetic";
};

VideoManifest generate_synthetic_manifest(const SyntheticVideoConfig &config);

}  // namespace abrlab
