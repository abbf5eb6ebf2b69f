#include "gemba/scoring.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "gemba/numeric.hpp"

namespace gemba::scoring {

double segment_penalty(const std::vector<MqmError>& errors,
                       const ScoringConfig& config) {
  return pairwise_sum_terms(errors.size(), [&](size_t i) {
    return errors[i].error_class() == ErrorClass::kNoError
               ? 0.0
               : config.weight(errors[i].severity());
  });
}

SegmentScore segment_score(std::string segment_id, std::string system_id,
                           const std::vector<MqmError>& errors,
                           const ScoringConfig& config) {
  SegmentScore result;
  result.segment_id = std::move(segment_id);
  result.system_id = std::move(system_id);
  for (const auto& error : errors) {
    if (error.error_class() == ErrorClass::kNoError) continue;
    switch (error.severity()) {
      case ErrorSeverity::kCritical: ++result.critical_count; break;
      case ErrorSeverity::kMajor: ++result.major_count; break;
      case ErrorSeverity::kMinor: ++result.minor_count; break;
    }
  }
  result.penalty = segment_penalty(errors, config);
  double effective = result.penalty;
  if (config.penalty_cap()) {
    effective = std::min(effective, *config.penalty_cap());
  }
  result.score = effective == 0.0 ? 0.0 : -effective;  // avoid -0.0
  return result;
}

SystemScore system_score(const std::vector<SegmentScore>& segment_scores) {
  if (segment_scores.empty()) {
    throw std::invalid_argument("system_score requires at least one segment");
  }
  const std::string& system_id = segment_scores.front().system_id;
  std::unordered_set<std::string> seen;
  seen.reserve(segment_scores.size());
  for (const auto& segment : segment_scores) {
    if (segment.system_id != system_id) {
      throw std::invalid_argument("system_score got mixed system ids: " +
                                  system_id + " vs " + segment.system_id);
    }
    if (!seen.insert(segment.segment_id).second) {
      throw std::invalid_argument("system_score got duplicate segment id: " +
                                  segment.segment_id);
    }
  }
  SystemScore result;
  result.system_id = system_id;
  result.segment_count = segment_scores.size();
  result.mean_score =
      pairwise_sum_terms(segment_scores.size(),
                         [&](size_t i) { return segment_scores[i].score; }) /
      static_cast<double>(segment_scores.size());
  return result;
}

}  // namespace gemba::scoring
