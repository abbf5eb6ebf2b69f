// Command-line surface: annotate / score / evaluate / distribution.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gemba/harness.hpp"
#include "gemba/llm_client.hpp"
#include "gemba/mqm_parser.hpp"
#include "gemba/prompt.hpp"

namespace {

using namespace gemba;

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

// Rebuilds the request for one record exactly as annotate issued it, so the
// cache key matches.
llm::CompletionRequest rebuild_request(const SegmentRecord& record,
                                       const harness::RunManifest& manifest) {
  return llm::CompletionRequest(
      manifest.model_id,
      prompt::build_messages(record, manifest.variant, prompt::default_few_shot()),
      manifest.temperature, manifest.max_tokens);
}

int run_annotate(const std::string& test_set_path, const std::string& cache_dir,
                 const std::string& model, const std::string& variant_name,
                 int parallelism, bool mock, double temperature, int max_tokens,
                 double max_failure_fraction) {
  const harness::TestSet test_set = harness::load_test_set(test_set_path);
  const PromptVariant variant = prompt_variant_from_string(variant_name);

  harness::CacheLock lock(cache_dir);
  auto cache = std::make_shared<llm::ResponseCache>(cache_dir);
  std::shared_ptr<llm::ChatClient> transport;
  if (mock) {
    transport = std::make_shared<llm::MockChatClient>();
  } else {
    auto config = llm::http_config_from_env();
    if (config.api_key.empty()) {
      std::cerr << "warning: GEMBA_API_KEY is empty; sending unauthenticated "
                   "requests\n";
    }
    transport = std::make_shared<llm::HttpChatClient>(std::move(config));
  }
  llm::CachingChatClient client(transport, cache);

  harness::AnnotateOptions options;
  options.model_id = model;
  options.variant = variant;
  options.parallelism = parallelism;
  options.temperature = temperature;
  options.max_tokens = max_tokens;
  options.max_failure_fraction = max_failure_fraction;
  const size_t total = test_set.segments().size();
  const size_t step = std::max<size_t>(1, total / 10);
  options.progress = [step](size_t done, size_t all) {
    if (done % step == 0 || done == all) {
      std::fprintf(stderr, "annotated %zu/%zu\n", done, all);
    }
  };

  harness::RunManifest manifest;
  manifest.test_set_name = test_set.name();
  manifest.model_id = model;
  manifest.variant = variant;
  manifest.template_version = prompt::template_version();
  manifest.temperature = temperature;
  manifest.max_tokens = max_tokens;
  manifest.segment_count = total;
  manifest.started_at = harness::iso8601_utc_now();

  const harness::AnnotateResult result =
      harness::annotate_test_set(test_set, client, options);

  manifest.finished_at = harness::iso8601_utc_now();
  const auto stats = cache->stats();
  manifest.cache_hits = stats.hits;
  manifest.cache_misses = stats.misses;
  manifest.cache_stores = stats.stores;
  manifest.warning_count = result.warning_count;
  manifest.refusal_count = result.refusal_count;
  manifest.failures = result.failures;
  harness::write_manifest(cache_dir, manifest);

  std::fprintf(stderr,
               "done: %zu annotations, %zu cache hits, %zu fetched, %zu parse "
               "warnings, %zu refusals, %zu failures\n",
               result.annotations.size(), stats.hits, stats.stores,
               result.warning_count, result.refusal_count,
               result.failures.size());
  return 0;
}

int run_score(const std::string& test_set_path, const std::string& cache_dir,
              const std::string& model_override,
              const std::string& variant_override,
              std::optional<double> penalty_cap, const std::string& output,
              const std::string& json_out) {
  const harness::TestSet test_set = harness::load_test_set(test_set_path);
  auto manifest = harness::read_manifest(cache_dir);
  if (!manifest && (model_override.empty() || variant_override.empty())) {
    throw std::runtime_error(
        "no manifest.json in cache; pass --model and --variant explicitly");
  }
  harness::RunManifest effective = manifest.value_or(harness::RunManifest{});
  if (!model_override.empty()) effective.model_id = model_override;
  if (!variant_override.empty()) {
    effective.variant = prompt_variant_from_string(variant_override);
  }

  llm::ResponseCache cache(cache_dir);
  std::vector<Annotation> annotations;
  std::vector<std::string> missing;
  for (const auto& record : test_set.segments()) {
    const auto request = rebuild_request(record, effective);
    const auto cached = cache.lookup(llm::cache_key(request));
    if (!cached) {
      missing.push_back(record.segment_id() + "/" + record.system_id());
      continue;
    }
    auto outcome = mqm::parse_annotation(*cached, effective.variant);
    Annotation annotation;
    annotation.segment_id = record.segment_id();
    annotation.system_id = record.system_id();
    annotation.errors = std::move(outcome.errors);
    annotation.raw_response = *cached;
    annotation.warnings = std::move(outcome.warnings);
    annotation.model_id = effective.model_id;
    annotation.prompt_variant = effective.variant;
    annotations.push_back(std::move(annotation));
  }
  if (!missing.empty()) {
    std::string message = "cache lacks responses for " +
                          std::to_string(missing.size()) + " segment(s):";
    for (size_t i = 0; i < missing.size() && i < 5; ++i) {
      message += " " + missing[i];
    }
    throw std::runtime_error(message + " (run annotate first)");
  }

  ScoringConfig config;
  if (penalty_cap) config = config.with_penalty_cap(*penalty_cap);
  const auto scores =
      harness::score_annotations(annotations, test_set, config);

  if (output.empty() || output == "-") {
    harness::write_scores_jsonl(std::cout, scores);
  } else {
    std::ofstream out(output, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + output);
    harness::write_scores_jsonl(out, scores);
  }

  if (!json_out.empty()) {
    // Per-system means as a small JSON summary.
    std::map<std::string, std::vector<scoring::SegmentScore>> by_system;
    for (const auto& score : scores) by_system[score.system_id].push_back(score);
    nlohmann::json systems = nlohmann::json::object();
    for (const auto& [system, segment_scores] : by_system) {
      const auto system_mean = scoring::system_score(segment_scores);
      systems[system] = {{"mean_score", system_mean.mean_score},
                         {"segments", system_mean.segment_count}};
    }
    nlohmann::json summary{{"test_set", test_set.name()},
                           {"model_id", effective.model_id},
                           {"prompt_variant",
                            std::string(to_string(effective.variant))},
                           {"systems", std::move(systems)}};
    write_text_file(json_out, summary.dump(2) + "\n");
  }
  return 0;
}

int run_evaluate(const std::string& test_set_path,
                 const std::vector<std::string>& score_files,
                 const std::string& tie_policy_name, double epsilon,
                 const std::string& json_out) {
  const harness::TestSet test_set = harness::load_test_set(test_set_path);
  const eval::TiePolicy tie_policy =
      eval::tie_policy_from_string(tie_policy_name);

  std::vector<std::pair<std::string, eval::EvalReport>> rows;
  nlohmann::json full = nlohmann::json::object();
  for (const auto& file : score_files) {
    const auto metric_scores = harness::read_scores_jsonl(file);
    const auto evaluation =
        harness::evaluate_scores(metric_scores, test_set, tie_policy, epsilon);
    const std::string name = std::filesystem::path(file).stem().string();
    rows.emplace_back(name, evaluation.report);

    nlohmann::json entry = eval::to_json(evaluation.report);
    entry["system_scores"] = {{"metric", evaluation.metric_system_scores},
                              {"human", evaluation.human_system_scores}};
    entry["outlier_systems"] = evaluation.outlier_systems;
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& comparison : evaluation.comparisons) {
      pairs.push_back(eval::to_json(comparison));
    }
    entry["pairs"] = std::move(pairs);
    full[name] = std::move(entry);
  }

  std::cout << eval::format_report_table(rows);
  if (!json_out.empty()) write_text_file(json_out, full.dump(2) + "\n");
  return 0;
}

int run_distribution(const std::string& cache_dir,
                     const std::string& variant_override,
                     const std::string& json_out) {
  PromptVariant variant = PromptVariant::kGembaMqm;
  if (!variant_override.empty()) {
    variant = prompt_variant_from_string(variant_override);
  } else if (auto manifest = harness::read_manifest(cache_dir)) {
    variant = manifest->variant;
  } else {
    std::cerr << "warning: no manifest.json in cache; assuming gemba-mqm\n";
  }

  llm::ResponseCache cache(cache_dir);
  std::vector<Annotation> annotations;
  for (const auto& entry : cache.all_entries()) {
    auto outcome = mqm::parse_annotation(entry.response_text, variant);
    Annotation annotation;
    annotation.segment_id = entry.key;
    annotation.system_id = "";
    annotation.errors = std::move(outcome.errors);
    annotation.raw_response = entry.response_text;
    annotation.warnings = std::move(outcome.warnings);
    annotation.model_id = entry.model_id;
    annotation.prompt_variant = variant;
    annotations.push_back(std::move(annotation));
  }
  const auto distribution = eval::error_distribution(annotations);
  std::cout << eval::format_distribution_table(distribution);
  if (!json_out.empty()) {
    write_text_file(json_out, eval::to_json(distribution).dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MQM error-span translation quality metric and meta-evaluation "
               "harness"};
  app.require_subcommand(1);

  const std::vector<std::string> variant_names = {"gemba-mqm",
                                                  "gemba-locale-mqm"};

  auto* annotate = app.add_subcommand(
      "annotate", "Query the model for every (segment, system) and fill the "
                  "response cache");
  std::string annotate_test_set, annotate_cache;
  std::string annotate_model = "gpt-4";
  std::string annotate_variant = "gemba-mqm";
  int parallelism = 4;
  bool mock = false;
  double temperature = 0.0;
  int max_tokens = 512;
  double max_failure_fraction = 0.05;
  annotate->add_option("--test-set", annotate_test_set, "Test-set JSONL file")
      ->required();
  annotate->add_option("--cache", annotate_cache, "Response cache directory")
      ->required();
  annotate->add_option("--model", annotate_model, "Model id (e.g. gpt-4)");
  annotate->add_option("--variant", annotate_variant, "Prompt variant")
      ->check(CLI::IsMember(variant_names));
  annotate->add_option("--parallelism", parallelism,
                       "Max in-flight completions")
      ->check(CLI::PositiveNumber);
  annotate->add_flag("--mock", mock,
                     "Use the deterministic offline mock client");
  annotate->add_option("--temperature", temperature)
      ->check(CLI::NonNegativeNumber);
  annotate->add_option("--max-tokens", max_tokens)->check(CLI::PositiveNumber);
  annotate->add_option("--max-failure-fraction", max_failure_fraction,
                       "Abort when more than this fraction of segments fail");

  auto* score = app.add_subcommand(
      "score", "Parse cached responses and dump JSONL segment scores");
  std::string score_test_set, score_cache, score_model, score_variant;
  std::string score_output = "-";
  std::string score_json;
  double penalty_cap_value = -1.0;
  bool has_penalty_cap = false;
  score->add_option("--test-set", score_test_set, "Test-set JSONL file")
      ->required();
  score->add_option("--cache", score_cache, "Response cache directory")
      ->required();
  score
      ->add_option_function<double>(
          "--penalty-cap",
          [&](double value) {
            penalty_cap_value = value;
            has_penalty_cap = true;
          },
          "Clamp per-segment penalties to this value")
      ->check(CLI::NonNegativeNumber);
  score->add_option("--model", score_model, "Override the manifest model id");
  score->add_option("--variant", score_variant, "Override the manifest variant")
      ->check(CLI::IsMember(variant_names));
  score->add_option("--output", score_output,
                    "Scores JSONL destination ('-' = stdout)");
  score->add_option("--json", score_json, "Write a per-system JSON summary");

  auto* evaluate = app.add_subcommand(
      "evaluate", "Meta-evaluate JSONL score dumps against the test set gold");
  std::string evaluate_test_set;
  std::vector<std::string> score_files;
  std::string tie_policy = "exclude";
  double epsilon = 0.0;
  std::string evaluate_json;
  evaluate->add_option("--test-set", evaluate_test_set, "Test-set JSONL file")
      ->required();
  evaluate->add_option("--scores", score_files, "Score dump file(s)")
      ->required()
      ->expected(-1);
  evaluate->add_option("--tie-policy", tie_policy, "Human-tie handling")
      ->check(CLI::IsMember({"exclude", "strict"}));
  evaluate->add_option("--epsilon", epsilon, "Accuracy-t tie threshold")
      ->check(CLI::NonNegativeNumber);
  evaluate->add_option("--json", evaluate_json, "Write the full JSON report");

  auto* distribution = app.add_subcommand(
      "distribution", "Error-class distribution over all cached responses");
  std::string distribution_cache, distribution_variant, distribution_json;
  distribution->add_option("--cache", distribution_cache,
                           "Response cache directory")
      ->required();
  distribution
      ->add_option("--variant", distribution_variant,
                   "Parse variant (default: manifest)")
      ->check(CLI::IsMember(variant_names));
  distribution->add_option("--json", distribution_json,
                           "Write the distribution as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (annotate->parsed()) {
      return run_annotate(annotate_test_set, annotate_cache, annotate_model,
                          annotate_variant, parallelism, mock, temperature,
                          max_tokens, max_failure_fraction);
    }
    if (score->parsed()) {
      return run_score(score_test_set, score_cache, score_model, score_variant,
                       has_penalty_cap ? std::optional<double>(penalty_cap_value)
                                       : std::nullopt,
                       score_output, score_json);
    }
    if (evaluate->parsed()) {
      return run_evaluate(evaluate_test_set, score_files, tie_policy, epsilon,
                          evaluate_json);
    }
    if (distribution->parsed()) {
      return run_distribution(distribution_cache, distribution_variant,
                              distribution_json);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
