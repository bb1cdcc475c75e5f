#pragma once

#include <optional>

#include "abrlab/player.hpp"

namespace abrlab {

/// Weights of the linear VMAF-based QoE model.
struct QoeParams {
  double w_quality = 0.8469;
  double w_rebuffer = 28.7959;     // per second
  double w_smooth_pos = 0.2979;
  double w_smooth_neg = 1.0610;

  void validate() const;  // throws ConfigError
};

/// a*q - b*T + g*(q - prev)_+ - d*(prev - q)_+; no smoothness terms without a predecessor.
inline double chunk_qoe(std::optional<double> prev_quality, double quality, double rebuffer,
                        const QoeParams &p) {
  double score = p.w_quality * quality - p.w_rebuffer * rebuffer;
  if (prev_quality) {
    const double diff = quality - *prev_quality;
    if (diff > 0.0)
      score += p.w_smooth_pos * diff;
    else if (diff < 0.0)
      score += p.w_smooth_neg * diff;
  }
  return score;
}

/// Sum of chunk_qoe with the previous quality threaded through. Startup stall
/// is already folded into the first chunk's rebuffer when it is not excluded.
/// Throws DataError on an empty log.
double session_qoe(const SessionLog &log, const QoeParams &params);

struct SessionMetrics {
  double qoe = 0.0;
  double mean_quality = 0.0;
  double rebuffer = 0.0;    // total seconds
  double smooth_pos = 0.0;  // sum of positive quality steps
  double smooth_neg = 0.0;  // sum of negative quality steps, as a magnitude
};

SessionMetrics session_metrics(const SessionLog &log, const QoeParams &params);

}  // namespace abrlab
