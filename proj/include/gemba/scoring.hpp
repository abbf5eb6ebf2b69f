#pragma once

#include <string>
#include <vector>

#include "gemba/core.hpp"

namespace gemba::scoring {

// Severity-weighted result for one (segment, system). `penalty` is the raw
// weighted error sum; `score` is -penalty clamped to -cap when a cap is
// configured (so score <= 0, higher is better).
struct SegmentScore {
  std::string segment_id;
  std::string system_id;
  double score = 0.0;
  double penalty = 0.0;
  size_t critical_count = 0;
  size_t major_count = 0;
  size_t minor_count = 0;
};

struct SystemScore {
  std::string system_id;
  double mean_score = 0.0;
  size_t segment_count = 0;
};

// Weighted error sum. kNoError entries contribute nothing.
double segment_penalty(const std::vector<MqmError>& errors,
                       const ScoringConfig& config);

SegmentScore segment_score(std::string segment_id, std::string system_id,
                           const std::vector<MqmError>& errors,
                           const ScoringConfig& config);

// Arithmetic mean over one system's segments. Throws std::invalid_argument
// on an empty list, mixed system ids, or duplicate segment ids: system means
// must cover exactly the test set, never a silently smaller subset.
SystemScore system_score(const std::vector<SegmentScore>& segment_scores);

}  // namespace gemba::scoring
