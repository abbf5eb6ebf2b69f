#include "gemba/harness.hpp"

#include <algorithm>
#include <atomic>
#include <ctime>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <unistd.h>

#include "gemba/mqm_parser.hpp"
#include "gemba/numeric.hpp"

namespace gemba::harness {

namespace {

[[noreturn]] void fail_line(const std::filesystem::path& path, size_t line,
                            const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " +
                           what);
}

std::string require_string(const nlohmann::json& record, const char* field,
                           const std::filesystem::path& path, size_t line) {
  if (!record.contains(field)) {
    fail_line(path, line, std::string("missing field ") + field);
  }
  if (!record[field].is_string()) {
    fail_line(path, line, std::string("field ") + field + " must be a string");
  }
  return record[field].get<std::string>();
}

bool has_refusal(const Annotation& annotation) {
  return std::find(annotation.warnings.begin(), annotation.warnings.end(),
                   kLlmRefusedWarning) != annotation.warnings.end();
}

nlohmann::json scoring_to_json(const ScoringConfig& config) {
  nlohmann::json body{{"critical_weight", config.critical_weight()},
                      {"major_weight", config.major_weight()},
                      {"minor_weight", config.minor_weight()}};
  if (config.penalty_cap()) {
    body["penalty_cap"] = *config.penalty_cap();
  } else {
    body["penalty_cap"] = nullptr;
  }
  return body;
}

ScoringConfig scoring_from_json(const nlohmann::json& body) {
  std::optional<double> cap;
  if (body.contains("penalty_cap") && !body["penalty_cap"].is_null()) {
    cap = body["penalty_cap"].get<double>();
  }
  return ScoringConfig(body.value("critical_weight", 25.0),
                       body.value("major_weight", 5.0),
                       body.value("minor_weight", 1.0), cap);
}

}  // namespace

std::string_view to_string(GoldPolarity polarity) {
  return polarity == GoldPolarity::kReward ? "reward" : "penalty";
}

GoldPolarity gold_polarity_from_string(std::string_view name) {
  if (name == "reward") return GoldPolarity::kReward;
  if (name == "penalty") return GoldPolarity::kPenalty;
  throw std::invalid_argument("unknown gold_polarity: " + std::string(name));
}

TestSet::TestSet(std::string name, LanguagePair language_pair,
                 std::vector<SegmentRecord> segments,
                 GoldPolarity gold_polarity)
    : name_(std::move(name)),
      language_pair_(std::move(language_pair)),
      segments_(std::move(segments)),
      gold_polarity_(gold_polarity) {
  if (name_.empty()) throw std::invalid_argument("test set name is empty");
  if (segments_.empty()) {
    throw std::invalid_argument("test set has no segments");
  }
  std::sort(segments_.begin(), segments_.end(),
            [](const SegmentRecord& a, const SegmentRecord& b) {
              return std::tie(a.segment_id(), a.system_id()) <
                     std::tie(b.segment_id(), b.system_id());
            });

  std::set<std::string> segment_ids;
  std::map<std::string, std::set<std::string>> by_system;
  for (size_t i = 0; i < segments_.size(); ++i) {
    const auto& record = segments_[i];
    if (!(record.language_pair() == language_pair_)) {
      throw std::invalid_argument(
          "segment " + record.segment_id() + " (system " + record.system_id() +
          ") has a different language pair than the test set");
    }
    if (i > 0 && segments_[i - 1].segment_id() == record.segment_id() &&
        segments_[i - 1].system_id() == record.system_id()) {
      throw std::invalid_argument("duplicate (segment, system): (" +
                                  record.segment_id() + ", " +
                                  record.system_id() + ")");
    }
    segment_ids.insert(record.segment_id());
    by_system[record.system_id()].insert(record.segment_id());
  }
  for (const auto& [system, covered] : by_system) {
    for (const auto& segment : segment_ids) {
      if (!covered.contains(segment)) {
        throw std::invalid_argument("ragged coverage: system " + system +
                                    " lacks segment " + segment);
      }
    }
  }
  segment_ids_.assign(segment_ids.begin(), segment_ids.end());
  for (const auto& [system, unused] : by_system) system_ids_.push_back(system);
}

TestSet load_test_set(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open test set: " + path.string());
  }

  std::string name = path.stem().string();
  GoldPolarity polarity = GoldPolarity::kReward;
  std::vector<SegmentRecord> records;
  std::optional<LanguagePair> pair;
  std::map<std::pair<std::string, std::string>, size_t> first_seen;

  std::string line;
  size_t line_number = 0;
  bool saw_record = false;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
      fail_line(path, line_number, "line is not a JSON object");
    }

    if (!record.contains("segment_id")) {
      // Header object: only legal before any record.
      if (saw_record) fail_line(path, line_number, "missing field segment_id");
      if (record.contains("test_set")) {
        name = require_string(record, "test_set", path, line_number);
      }
      if (record.contains("gold_polarity")) {
        const std::string declared =
            require_string(record, "gold_polarity", path, line_number);
        try {
          polarity = gold_polarity_from_string(declared);
        } catch (const std::invalid_argument& e) {
          fail_line(path, line_number, e.what());
        }
      }
      continue;
    }

    saw_record = true;
    const std::string segment_id =
        require_string(record, "segment_id", path, line_number);
    const std::string system_id =
        require_string(record, "system_id", path, line_number);
    const std::string source = require_string(record, "source", path, line_number);
    const std::string hypothesis =
        require_string(record, "hypothesis", path, line_number);
    const std::string source_lang =
        require_string(record, "source_lang", path, line_number);
    const std::string target_lang =
        require_string(record, "target_lang", path, line_number);

    std::optional<double> gold;
    if (record.contains("gold") && !record["gold"].is_null()) {
      if (!record["gold"].is_number()) {
        fail_line(path, line_number, "field gold must be a number");
      }
      gold = record["gold"].get<double>();
      if (polarity == GoldPolarity::kPenalty) gold = -*gold;
    }

    const auto key = std::make_pair(segment_id, system_id);
    if (const auto it = first_seen.find(key); it != first_seen.end()) {
      fail_line(path, line_number,
                "duplicate (segment, system) (" + segment_id + ", " +
                    system_id + "), first seen at line " +
                    std::to_string(it->second));
    }
    first_seen.emplace(key, line_number);

    try {
      LanguagePair record_pair(source_lang, target_lang);
      if (!pair) pair = record_pair;
      if (!(record_pair == *pair)) {
        fail_line(path, line_number,
                  "language pair differs from the rest of the file");
      }
      records.emplace_back(segment_id, system_id, source, hypothesis,
                           record_pair, gold);
    } catch (const std::invalid_argument& e) {
      fail_line(path, line_number, e.what());
    }
  }
  if (records.empty()) {
    throw std::runtime_error(path.string() + ": no records found");
  }
  return TestSet(std::move(name), *pair, std::move(records), polarity);
}

AnnotateResult annotate_test_set(const TestSet& test_set,
                                 llm::ChatClient& client,
                                 const AnnotateOptions& options) {
  const auto& records = test_set.segments();
  const size_t total = records.size();
  const size_t parallelism = static_cast<size_t>(
      std::max(1, std::min(options.parallelism, static_cast<int>(total))));
  const size_t max_failures = static_cast<size_t>(
      options.max_failure_fraction * static_cast<double>(total));

  std::vector<std::optional<Annotation>> slots(total);
  std::vector<std::optional<std::string>> failure_slots(total);
  std::atomic<size_t> next{0};
  std::atomic<size_t> done{0};
  std::atomic<size_t> failure_count{0};
  std::atomic<bool> aborted{false};

  auto worker = [&] {
    while (!aborted.load(std::memory_order_relaxed)) {
      const size_t index = next.fetch_add(1);
      if (index >= total) break;
      const SegmentRecord& record = records[index];
      try {
        auto messages =
            prompt::build_messages(record, options.variant, options.examples);
        llm::CompletionRequest request(options.model_id, std::move(messages),
                                       options.temperature,
                                       options.max_tokens);
        const llm::CompletionResult result = client.complete(request);
        auto outcome = mqm::parse_annotation(result.text, options.variant);
        Annotation annotation;
        annotation.segment_id = record.segment_id();
        annotation.system_id = record.system_id();
        annotation.errors = std::move(outcome.errors);
        annotation.raw_response = result.text;
        annotation.warnings = std::move(outcome.warnings);
        annotation.model_id = options.model_id;
        annotation.prompt_variant = options.variant;
        slots[index] = std::move(annotation);
      } catch (const llm::ClientError& e) {
        if (e.kind() == llm::ClientErrorKind::kContentFiltered) {
          Annotation annotation;
          annotation.segment_id = record.segment_id();
          annotation.system_id = record.system_id();
          annotation.raw_response = "";
          annotation.warnings = {std::string(kLlmRefusedWarning)};
          annotation.model_id = options.model_id;
          annotation.prompt_variant = options.variant;
          slots[index] = std::move(annotation);
        } else {
          failure_slots[index] = record.segment_id() + "/" +
                                 record.system_id() + ": " + e.what();
          if (failure_count.fetch_add(1) + 1 > max_failures) {
            aborted.store(true);
          }
        }
      } catch (const std::exception& e) {
        failure_slots[index] =
            record.segment_id() + "/" + record.system_id() + ": " + e.what();
        if (failure_count.fetch_add(1) + 1 > max_failures) {
          aborted.store(true);
        }
      }
      const size_t finished = done.fetch_add(1) + 1;
      if (options.progress) options.progress(finished, total);
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(parallelism);
  for (size_t i = 0; i < parallelism; ++i) threads.emplace_back(worker);
  for (auto& thread : threads) thread.join();

  AnnotateResult result;
  for (auto& failure : failure_slots) {
    if (failure) result.failures.push_back(std::move(*failure));
  }
  if (result.failures.size() > max_failures) {
    std::string message =
        "annotation aborted: " + std::to_string(result.failures.size()) +
        " of " + std::to_string(total) + " segments failed non-retryably";
    for (size_t i = 0; i < result.failures.size() && i < 3; ++i) {
      message += "\n  " + result.failures[i];
    }
    throw std::runtime_error(message);
  }
  for (auto& slot : slots) {
    if (!slot) continue;
    result.warning_count += slot->warnings.size();
    if (has_refusal(*slot)) ++result.refusal_count;
    result.annotations.push_back(std::move(*slot));
  }
  return result;
}

std::vector<scoring::SegmentScore> score_annotations(
    const std::vector<Annotation>& annotations, const TestSet& test_set,
    const ScoringConfig& config) {
  std::map<std::pair<std::string, std::string>, const Annotation*> by_key;
  for (const auto& annotation : annotations) {
    const auto key = std::make_pair(annotation.segment_id, annotation.system_id);
    if (!by_key.emplace(key, &annotation).second) {
      throw std::invalid_argument("duplicate annotation for (" + key.first +
                                  ", " + key.second + ")");
    }
  }
  std::vector<scoring::SegmentScore> scores;
  scores.reserve(test_set.segments().size());
  for (const auto& record : test_set.segments()) {
    const auto it =
        by_key.find(std::make_pair(record.segment_id(), record.system_id()));
    if (it == by_key.end()) {
      throw std::invalid_argument("missing annotation for (" +
                                  record.segment_id() + ", " +
                                  record.system_id() + ")");
    }
    scores.push_back(scoring::segment_score(record.segment_id(),
                                            record.system_id(),
                                            it->second->errors, config));
  }
  return scores;
}

void write_scores_jsonl(std::ostream& out,
                        const std::vector<scoring::SegmentScore>& scores) {
  for (const auto& score : scores) {
    out << nlohmann::json{{"segment_id", score.segment_id},
                          {"system_id", score.system_id},
                          {"score", score.score}}
               .dump()
        << '\n';
  }
}

eval::SegmentSystemScores read_scores_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open scores file: " + path.string());
  }
  eval::SegmentSystemScores scores;
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
      fail_line(path, line_number, "line is not a JSON object");
    }
    const std::string segment_id =
        require_string(record, "segment_id", path, line_number);
    const std::string system_id =
        require_string(record, "system_id", path, line_number);
    if (!record.contains("score") || !record["score"].is_number()) {
      fail_line(path, line_number, "field score must be a number");
    }
    const auto key = std::make_pair(segment_id, system_id);
    if (!scores.emplace(key, record["score"].get<double>()).second) {
      fail_line(path, line_number,
                "duplicate score for (" + segment_id + ", " + system_id + ")");
    }
  }
  if (scores.empty()) {
    throw std::runtime_error(path.string() + ": no scores found");
  }
  return scores;
}

ScoreEvaluation evaluate_scores(const eval::SegmentSystemScores& metric_scores,
                                const TestSet& test_set,
                                eval::TiePolicy tie_policy, double epsilon) {
  eval::SegmentSystemScores human_scores;
  std::map<std::string, std::vector<double>> metric_by_system;
  std::map<std::string, std::vector<double>> human_by_system;
  std::vector<double> metric_segment_vector;
  std::vector<double> human_segment_vector;

  for (const auto& record : test_set.segments()) {
    const auto key = std::make_pair(record.segment_id(), record.system_id());
    const auto it = metric_scores.find(key);
    if (it == metric_scores.end()) {
      throw std::invalid_argument("metric scores missing (" + key.first +
                                  ", " + key.second + ")");
    }
    if (!record.gold_score()) {
      throw std::invalid_argument("gold score missing for (" + key.first +
                                  ", " + key.second + ")");
    }
    human_scores.emplace(key, *record.gold_score());
    metric_by_system[record.system_id()].push_back(it->second);
    human_by_system[record.system_id()].push_back(*record.gold_score());
    metric_segment_vector.push_back(it->second);
    human_segment_vector.push_back(*record.gold_score());
  }
  if (metric_scores.size() != human_scores.size()) {
    for (const auto& [key, unused] : metric_scores) {
      if (!human_scores.contains(key)) {
        throw std::invalid_argument("metric scores contain (" + key.first +
                                    ", " + key.second +
                                    ") which is not in the test set");
      }
    }
  }

  ScoreEvaluation evaluation;
  for (const auto& [system, values] : metric_by_system) {
    evaluation.metric_system_scores[system] = mean(values);
  }
  for (const auto& [system, values] : human_by_system) {
    evaluation.human_system_scores[system] = mean(values);
  }

  auto pairwise = eval::pairwise_accuracy(evaluation.metric_system_scores,
                                          evaluation.human_system_scores,
                                          tie_policy);
  evaluation.report.pairwise_accuracy = pairwise.accuracy;
  evaluation.report.pair_counts = pairwise.counts;
  evaluation.comparisons = std::move(pairwise.comparisons);

  std::vector<double> metric_means;
  std::vector<double> human_means;
  for (const auto& [system, value] : evaluation.metric_system_scores) {
    metric_means.push_back(value);
    human_means.push_back(evaluation.human_system_scores.at(system));
  }
  evaluation.report.pearson_system = eval::pearson(metric_means, human_means);
  evaluation.report.pearson_segment =
      eval::pearson(metric_segment_vector, human_segment_vector);
  evaluation.report.accuracy_t =
      eval::accuracy_t(metric_scores, human_scores, epsilon);
  evaluation.report.meta_score = eval::meta_score(
      evaluation.report.pairwise_accuracy, evaluation.report.pearson_system,
      evaluation.report.pearson_segment, evaluation.report.accuracy_t);

  std::set<std::string> outliers;
  for (auto& system : eval::flag_outliers(evaluation.metric_system_scores)) {
    outliers.insert(std::move(system));
  }
  for (auto& system : eval::flag_outliers(evaluation.human_system_scores)) {
    outliers.insert(std::move(system));
  }
  evaluation.outlier_systems.assign(outliers.begin(), outliers.end());
  return evaluation;
}

RunReport evaluate_run(const std::vector<Annotation>& annotations,
                       const TestSet& test_set,
                       const EvaluateOptions& options) {
  const auto segment_scores =
      score_annotations(annotations, test_set, options.scoring);
  eval::SegmentSystemScores metric_scores;
  for (const auto& score : segment_scores) {
    metric_scores.emplace(std::make_pair(score.segment_id, score.system_id),
                          score.score);
  }
  ScoreEvaluation evaluation = evaluate_scores(metric_scores, test_set,
                                               options.tie_policy,
                                               options.epsilon);

  RunReport report;
  report.test_set_name = test_set.name();
  report.model_id = annotations.empty() ? "" : annotations.front().model_id;
  report.variant = annotations.empty() ? PromptVariant::kGembaMqm
                                       : annotations.front().prompt_variant;
  report.template_version = prompt::template_version();
  report.report = evaluation.report;
  report.distribution = eval::error_distribution(annotations);
  report.comparisons = std::move(evaluation.comparisons);
  report.metric_system_scores = std::move(evaluation.metric_system_scores);
  report.human_system_scores = std::move(evaluation.human_system_scores);
  report.outlier_systems = std::move(evaluation.outlier_systems);
  for (const auto& annotation : annotations) {
    report.warning_count += annotation.warnings.size();
    if (has_refusal(annotation)) ++report.refusal_count;
  }
  return report;
}

nlohmann::json report_json(const RunReport& report) {
  nlohmann::json body = eval::to_json(report.report);
  body["test_set"] = report.test_set_name;
  body["model_id"] = report.model_id;
  body["prompt_variant"] = std::string(to_string(report.variant));
  body["template_version"] = report.template_version;
  body["error_distribution"] = eval::to_json(report.distribution);
  body["system_scores"] = {{"metric", report.metric_system_scores},
                           {"human", report.human_system_scores}};
  body["outlier_systems"] = report.outlier_systems;
  body["refusals"] = report.refusal_count;
  body["parse_warnings"] = report.warning_count;
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& comparison : report.comparisons) {
    pairs.push_back(eval::to_json(comparison));
  }
  body["pairs"] = std::move(pairs);
  return body;
}

nlohmann::json to_json(const RunManifest& manifest) {
  return nlohmann::json{
      {"test_set", manifest.test_set_name},
      {"model_id", manifest.model_id},
      {"prompt_variant", std::string(to_string(manifest.variant))},
      {"template_version", manifest.template_version},
      {"temperature", manifest.temperature},
      {"max_tokens", manifest.max_tokens},
      {"started_at", manifest.started_at},
      {"finished_at", manifest.finished_at},
      {"segment_count", manifest.segment_count},
      {"cache", {{"hits", manifest.cache_hits},
                 {"misses", manifest.cache_misses},
                 {"stores", manifest.cache_stores}}},
      {"warnings", manifest.warning_count},
      {"refusals", manifest.refusal_count},
      {"failures", manifest.failures},
      {"scoring", scoring_to_json(manifest.scoring)},
  };
}

RunManifest manifest_from_json(const nlohmann::json& body) {
  RunManifest manifest;
  manifest.test_set_name = body.value("test_set", "");
  manifest.model_id = body.value("model_id", "");
  manifest.variant =
      prompt_variant_from_string(body.value("prompt_variant", "gemba-mqm"));
  manifest.template_version = body.value("template_version", "");
  manifest.temperature = body.value("temperature", 0.0);
  manifest.max_tokens = body.value("max_tokens", 512);
  manifest.started_at = body.value("started_at", "");
  manifest.finished_at = body.value("finished_at", "");
  manifest.segment_count = body.value("segment_count", size_t{0});
  if (body.contains("cache")) {
    manifest.cache_hits = body["cache"].value("hits", size_t{0});
    manifest.cache_misses = body["cache"].value("misses", size_t{0});
    manifest.cache_stores = body["cache"].value("stores", size_t{0});
  }
  manifest.warning_count = body.value("warnings", size_t{0});
  manifest.refusal_count = body.value("refusals", size_t{0});
  if (body.contains("failures")) {
    manifest.failures = body["failures"].get<std::vector<std::string>>();
  }
  if (body.contains("scoring")) {
    manifest.scoring = scoring_from_json(body["scoring"]);
  }
  return manifest;
}

void write_manifest(const std::filesystem::path& cache_dir,
                    const RunManifest& manifest) {
  std::ofstream out(cache_dir / "manifest.json",
                    std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write manifest in " + cache_dir.string());
  }
  out << to_json(manifest).dump(2) << '\n';
}

std::optional<RunManifest> read_manifest(
    const std::filesystem::path& cache_dir) {
  std::ifstream in(cache_dir / "manifest.json", std::ios::binary);
  if (!in) return std::nullopt;
  nlohmann::json body = nlohmann::json::parse(in, nullptr, false);
  if (body.is_discarded()) return std::nullopt;
  return manifest_from_json(body);
}

std::string iso8601_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

CacheLock::CacheLock(const std::filesystem::path& cache_dir) {
  std::filesystem::create_directories(cache_dir);
  lock_path_ = cache_dir / "gemba.lock";
  fd_ = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd_ < 0) {
    throw std::runtime_error(
        "cache directory is locked by another process (remove " +
        lock_path_.string() + " if that process is gone)");
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const ssize_t written = ::write(fd_, pid.data(), pid.size());
}

CacheLock::~CacheLock() {
  if (fd_ >= 0) {
    ::close(fd_);
    std::error_code ec;
    std::filesystem::remove(lock_path_, ec);
  }
}

}  // namespace gemba::harness
