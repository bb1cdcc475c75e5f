#include "abrlab/qoe.hpp"

#include <cmath>

#include "abrlab/error.hpp"

namespace abrlab {

void QoeParams::validate() const {
  if (!std::isfinite(w_quality) || !std::isfinite(w_rebuffer) || !std::isfinite(w_smooth_pos) ||
      !std::isfinite(w_smooth_neg))
    throw ConfigError("qoe weights must be finite");
  if (w_rebuffer < 0.0 || w_smooth_neg < 0.0) throw ConfigError("qoe penalty weights must be >= 0");
}

double session_qoe(const SessionLog &log, const QoeParams &params) {
  if (log.chunks.empty()) throw DataError("empty session log");
  double total = 0.0;
  std::optional<double> prev;
  for (const ChunkOutcome &o : log.chunks) {
    total += chunk_qoe(prev, o.quality, o.rebuffer, params);
    prev = o.quality;
  }
  return total;
}

SessionMetrics session_metrics(const SessionLog &log, const QoeParams &params) {
  SessionMetrics m;
  m.qoe = session_qoe(log, params);
  double quality = 0.0;
  for (std::size_t i = 0; i < log.chunks.size(); ++i) {
    const ChunkOutcome &o = log.chunks[i];
    quality += o.quality;
    m.rebuffer += o.rebuffer;
    if (i > 0) {
      const double diff = o.quality - log.chunks[i - 1].quality;
      if (diff > 0.0) m.smooth_pos += diff;
      if (diff < 0.0) m.smooth_neg -= diff;
    }
  }
  m.mean_quality = quality / static_cast<double>(log.chunks.size());
  return m;
}

}  // namespace abrlab
