#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gemba/core.hpp"

namespace gemba::eval {

// A statistic whose value does not exist for the given inputs (zero usable
// pairs, zero variance, ...). Reported, never silently zeroed.
class UndefinedStatistic : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// What to do with system pairs the humans scored as exact ties. The formula
// is silent on them; exclusion is the convention, strict demands the metric
// tie as well.
enum class TiePolicy { kExcludeHumanTies, kStrict };

TiePolicy tie_policy_from_string(std::string_view name);  // "exclude"/"strict"

struct PairCounts {
  size_t total = 0;                // all unordered system pairs
  size_t used = 0;                 // pairs in the denominator
  size_t human_ties_excluded = 0;  // pairs dropped under kExcludeHumanTies
};

// One system-pair comparison, kept for report diagnostics.
struct SystemComparison {
  std::string system_a;
  std::string system_b;
  double metric_delta = 0.0;
  double human_delta = 0.0;
  bool counted = false;
  bool correct = false;
};

struct PairwiseAccuracyResult {
  double accuracy = 0.0;
  PairCounts counts;
  std::vector<SystemComparison> comparisons;
};

// Fraction of system pairs whose metric score delta has the same sign as the
// human score delta, over all unordered pairs of systems present in both
// maps. Throws std::invalid_argument with fewer than two shared systems and
// UndefinedStatistic when no pair is usable.
PairwiseAccuracyResult pairwise_accuracy(
    const std::map<std::string, double>& metric_scores,
    const std::map<std::string, double>& human_scores,
    TiePolicy tie_policy = TiePolicy::kExcludeHumanTies);

// Product-moment correlation, pairwise-summed in double precision. Requires
// equal lengths >= 2 (std::invalid_argument) and nonzero variance on both
// sides (UndefinedStatistic).
double pearson(std::span<const double> xs, std::span<const double> ys);

using SegmentSystemKey = std::pair<std::string, std::string>;  // (segment, system)
using SegmentSystemScores = std::map<SegmentSystemKey, double>;

// Tie-aware segment-level pairwise accuracy. Within each segment, over all
// unordered pairs of systems scored by both maps: a human tie is correct
// when |metric delta| <= epsilon, a human non-tie when |metric delta| >
// epsilon with matching sign. Throws UndefinedStatistic with no usable pairs.
double accuracy_t(const SegmentSystemScores& metric_scores,
                  const SegmentSystemScores& human_scores, double epsilon);

// Equal-weight combination of the four meta-evaluation components.
double meta_score(double pairwise_accuracy, double pearson_system,
                  double pearson_segment, double accuracy_t);

// Error counts by top-level class over a set of annotations.
struct ErrorDistribution {
  std::map<ErrorClass, size_t> counts;  // every class keyed, zeros included
  size_t total = 0;

  double fraction(ErrorClass error_class) const;  // 0 when total == 0
};

ErrorDistribution error_distribution(const std::vector<Annotation>& annotations);

// Systems whose score sits more than three median-absolute-deviations from
// the median. Flagged for the report, never removed from the data.
std::vector<std::string> flag_outliers(
    const std::map<std::string, double>& system_scores);

struct EvalReport {
  double pairwise_accuracy = 0.0;
  double pearson_system = 0.0;
  double pearson_segment = 0.0;
  double accuracy_t = 0.0;
  double meta_score = 0.0;
  PairCounts pair_counts;
};

nlohmann::json to_json(const EvalReport& report);
nlohmann::json to_json(const SystemComparison& comparison);
nlohmann::json to_json(const ErrorDistribution& distribution);

// Aligned plain-text table, one metric per row.
std::string format_report_table(
    const std::vector<std::pair<std::string, EvalReport>>& rows);

std::string format_distribution_table(const ErrorDistribution& distribution);

}  // namespace gemba::eval
