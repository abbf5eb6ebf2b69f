#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gemba/core.hpp"
#include "gemba/evaluation.hpp"
#include "gemba/llm_client.hpp"
#include "gemba/prompt.hpp"
#include "gemba/scoring.hpp"

namespace gemba::harness {

// Sign convention the file's gold column uses. Penalty gold is negated at
// load time so gold_score is always higher-is-better in memory.
enum class GoldPolarity { kReward, kPenalty };

std::string_view to_string(GoldPolarity polarity);
GoldPolarity gold_polarity_from_string(std::string_view name);

// A rectangular (segment x system) matrix of records for one language pair:
// every system covers the identical segment set, every (segment, system)
// appears once.
class TestSet {
 public:
  TestSet(std::string name, LanguagePair language_pair,
          std::vector<SegmentRecord> segments, GoldPolarity gold_polarity);

  const std::string& name() const { return name_; }
  const LanguagePair& language_pair() const { return language_pair_; }
  GoldPolarity gold_polarity() const { return gold_polarity_; }

  // Sorted by (segment_id, system_id); iteration order is deterministic.
  const std::vector<SegmentRecord>& segments() const { return segments_; }
  const std::vector<std::string>& system_ids() const { return system_ids_; }
  const std::vector<std::string>& segment_ids() const { return segment_ids_; }

 private:
  std::string name_;
  LanguagePair language_pair_;
  std::vector<SegmentRecord> segments_;
  std::vector<std::string> system_ids_;
  std::vector<std::string> segment_ids_;
  GoldPolarity gold_polarity_;
};

// Loads the JSONL test-set format: one record object per line with fields
// segment_id, system_id, source, hypothesis, source_lang, target_lang, and
// optional gold / domain. An optional first-line header object (no
// segment_id key) may set "test_set" and "gold_polarity". Every diagnostic
// names the offending line.
TestSet load_test_set(const std::filesystem::path& path);

struct AnnotateOptions {
  std::string model_id = "gpt-4";
  PromptVariant variant = PromptVariant::kGembaMqm;
  int parallelism = 4;
  double temperature = 0.0;
  int max_tokens = 512;
  // Abort when more than this fraction of segments fail non-retryably.
  double max_failure_fraction = 0.05;
  std::vector<prompt::FewShotExample> examples = prompt::default_few_shot();
  // Called as segments finish: (done, total). Must be thread-safe.
  std::function<void(size_t, size_t)> progress;
};

struct AnnotateResult {
  std::vector<Annotation> annotations;  // sorted by (segment_id, system_id)
  std::vector<std::string> failures;    // "segment/system: reason"
  size_t refusal_count = 0;
  size_t warning_count = 0;
};

// Annotates every (segment, system), fanning out up to options.parallelism
// in-flight completions. Content-filter refusals become empty annotations
// tagged kLlmRefusedWarning; other failures are collected, and the run
// throws only when they exceed max_failure_fraction.
AnnotateResult annotate_test_set(const TestSet& test_set,
                                 llm::ChatClient& client,
                                 const AnnotateOptions& options);

// Scores one annotation per test-set record. Throws when coverage is not
// exact: partial means would silently bias system rankings.
std::vector<scoring::SegmentScore> score_annotations(
    const std::vector<Annotation>& annotations, const TestSet& test_set,
    const ScoringConfig& config);

void write_scores_jsonl(std::ostream& out,
                        const std::vector<scoring::SegmentScore>& scores);
eval::SegmentSystemScores read_scores_jsonl(const std::filesystem::path& path);

// Metric scores joined against the test set's gold: system means on both
// sides, the four statistics, and outlier flags. Metric scores must cover
// the test set exactly and gold must be present for every record.
struct ScoreEvaluation {
  eval::EvalReport report;
  std::vector<eval::SystemComparison> comparisons;
  std::map<std::string, double> metric_system_scores;
  std::map<std::string, double> human_system_scores;
  std::vector<std::string> outlier_systems;
};

ScoreEvaluation evaluate_scores(const eval::SegmentSystemScores& metric_scores,
                                const TestSet& test_set,
                                eval::TiePolicy tie_policy, double epsilon);

struct EvaluateOptions {
  ScoringConfig scoring;
  eval::TiePolicy tie_policy = eval::TiePolicy::kExcludeHumanTies;
  double epsilon = 0.0;
};

// Everything a finished run reports. Timestamps live only in the manifest,
// so serialized reports are byte-identical across reruns of the same inputs.
struct RunReport {
  std::string test_set_name;
  std::string model_id;
  PromptVariant variant = PromptVariant::kGembaMqm;
  std::string template_version;
  eval::EvalReport report;
  eval::ErrorDistribution distribution;
  std::vector<eval::SystemComparison> comparisons;
  std::map<std::string, double> metric_system_scores;
  std::map<std::string, double> human_system_scores;
  std::vector<std::string> outlier_systems;
  size_t refusal_count = 0;
  size_t warning_count = 0;
};

RunReport evaluate_run(const std::vector<Annotation>& annotations,
                       const TestSet& test_set, const EvaluateOptions& options);

nlohmann::json report_json(const RunReport& report);

struct RunManifest {
  std::string test_set_name;
  std::string model_id;
  PromptVariant variant = PromptVariant::kGembaMqm;
  std::string template_version;
  double temperature = 0.0;
  int max_tokens = 512;
  std::string started_at;
  std::string finished_at;
  size_t segment_count = 0;
  size_t cache_hits = 0;
  size_t cache_misses = 0;
  size_t cache_stores = 0;
  size_t warning_count = 0;
  size_t refusal_count = 0;
  std::vector<std::string> failures;
  ScoringConfig scoring;
};

nlohmann::json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& body);
void write_manifest(const std::filesystem::path& cache_dir,
                    const RunManifest& manifest);
std::optional<RunManifest> read_manifest(const std::filesystem::path& cache_dir);

std::string iso8601_utc_now();

// Advisory single-writer lock on a cache directory. The second writer fails
// fast instead of interleaving.
class CacheLock {
 public:
  explicit CacheLock(const std::filesystem::path& cache_dir);
  ~CacheLock();

  CacheLock(const CacheLock&) = delete;
  CacheLock& operator=(const CacheLock&) = delete;

 private:
  std::filesystem::path lock_path_;
  int fd_ = -1;
};

}  // namespace gemba::harness
