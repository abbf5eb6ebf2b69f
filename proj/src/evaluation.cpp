#include "gemba/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gemba/numeric.hpp"

namespace gemba::eval {

namespace {

int sign(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string format_double(double value, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, value);
  return buf;
}

}  // namespace

TiePolicy tie_policy_from_string(std::string_view name) {
  if (name == "exclude") return TiePolicy::kExcludeHumanTies;
  if (name == "strict") return TiePolicy::kStrict;
  throw std::invalid_argument("unknown tie policy: " + std::string(name));
}

PairwiseAccuracyResult pairwise_accuracy(
    const std::map<std::string, double>& metric_scores,
    const std::map<std::string, double>& human_scores, TiePolicy tie_policy) {
  std::vector<std::string> systems;
  for (const auto& [system, unused] : metric_scores) {
    if (human_scores.contains(system)) systems.push_back(system);
  }
  if (systems.size() < 2) {
    throw std::invalid_argument(
        "pairwise_accuracy needs at least two systems scored by both metric "
        "and human");
  }

  PairwiseAccuracyResult result;
  size_t correct = 0;
  for (size_t i = 0; i < systems.size(); ++i) {
    for (size_t j = i + 1; j < systems.size(); ++j) {
      SystemComparison cmp;
      cmp.system_a = systems[i];
      cmp.system_b = systems[j];
      cmp.metric_delta =
          metric_scores.at(systems[i]) - metric_scores.at(systems[j]);
      cmp.human_delta =
          human_scores.at(systems[i]) - human_scores.at(systems[j]);
      ++result.counts.total;
      if (cmp.human_delta == 0.0) {
        if (tie_policy == TiePolicy::kExcludeHumanTies) {
          ++result.counts.human_ties_excluded;
        } else {
          cmp.counted = true;
          cmp.correct = (cmp.metric_delta == 0.0);
        }
      } else {
        cmp.counted = true;
        cmp.correct = sign(cmp.metric_delta) == sign(cmp.human_delta);
      }
      if (cmp.counted) {
        ++result.counts.used;
        if (cmp.correct) ++correct;
      }
      result.comparisons.push_back(std::move(cmp));
    }
  }
  if (result.counts.used == 0) {
    throw UndefinedStatistic(
        "pairwise_accuracy has zero usable pairs (all human ties excluded)");
  }
  result.accuracy =
      static_cast<double>(correct) / static_cast<double>(result.counts.used);
  return result;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("pearson requires equal-length vectors");
  }
  const size_t n = xs.size();
  if (n < 2) {
    throw std::invalid_argument("pearson requires at least two points");
  }
  const double mean_x = mean(xs);
  const double mean_y = mean(ys);
  const double sxx = pairwise_sum_terms(
      n, [&](size_t i) { return (xs[i] - mean_x) * (xs[i] - mean_x); });
  const double syy = pairwise_sum_terms(
      n, [&](size_t i) { return (ys[i] - mean_y) * (ys[i] - mean_y); });
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedStatistic("pearson undefined: zero variance input");
  }
  const double sxy = pairwise_sum_terms(
      n, [&](size_t i) { return (xs[i] - mean_x) * (ys[i] - mean_y); });
  return sxy / std::sqrt(sxx * syy);
}

double accuracy_t(const SegmentSystemScores& metric_scores,
                  const SegmentSystemScores& human_scores, double epsilon) {
  if (epsilon < 0.0) {
    throw std::invalid_argument("epsilon must be nonnegative");
  }
  // Shared keys, grouped by segment. Both maps iterate sorted, so the
  // grouped layout is deterministic.
  std::map<std::string, std::vector<std::pair<double, double>>> by_segment;
  for (const auto& [key, metric_value] : metric_scores) {
    const auto human_it = human_scores.find(key);
    if (human_it == human_scores.end()) continue;
    by_segment[key.first].emplace_back(metric_value, human_it->second);
  }

  size_t total = 0;
  size_t correct = 0;
  for (const auto& [segment, pairs] : by_segment) {
    for (size_t i = 0; i < pairs.size(); ++i) {
      for (size_t j = i + 1; j < pairs.size(); ++j) {
        const double metric_delta = pairs[i].first - pairs[j].first;
        const double human_delta = pairs[i].second - pairs[j].second;
        ++total;
        const bool ok =
            human_delta == 0.0
                ? std::abs(metric_delta) <= epsilon
                : std::abs(metric_delta) > epsilon &&
                      sign(metric_delta) == sign(human_delta);
        if (ok) ++correct;
      }
    }
  }
  if (total == 0) {
    throw UndefinedStatistic(
        "accuracy_t has no within-segment system pairs shared by metric and "
        "human scores");
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

double meta_score(double pairwise_accuracy, double pearson_system,
                  double pearson_segment, double accuracy_t) {
  return 0.25 *
         (pairwise_accuracy + pearson_system + pearson_segment + accuracy_t);
}

double ErrorDistribution::fraction(ErrorClass error_class) const {
  if (total == 0) return 0.0;
  const auto it = counts.find(error_class);
  if (it == counts.end()) return 0.0;
  return static_cast<double>(it->second) / static_cast<double>(total);
}

ErrorDistribution error_distribution(
    const std::vector<Annotation>& annotations) {
  ErrorDistribution distribution;
  for (ErrorClass error_class :
       {ErrorClass::kAccuracy, ErrorClass::kFluency,
        ErrorClass::kLocaleConvention, ErrorClass::kStyle,
        ErrorClass::kTerminology, ErrorClass::kNonTranslation,
        ErrorClass::kOther, ErrorClass::kNoError}) {
    distribution.counts[error_class] = 0;
  }
  for (const auto& annotation : annotations) {
    for (const auto& error : annotation.errors) {
      ++distribution.counts[error.error_class()];
      ++distribution.total;
    }
  }
  return distribution;
}

std::vector<std::string> flag_outliers(
    const std::map<std::string, double>& system_scores) {
  if (system_scores.size() < 3) return {};
  std::vector<double> values;
  values.reserve(system_scores.size());
  for (const auto& [unused, value] : system_scores) values.push_back(value);
  const double med = median_of(values);
  std::vector<double> deviations;
  deviations.reserve(values.size());
  for (double v : values) deviations.push_back(std::abs(v - med));
  const double mad = median_of(deviations);
  if (mad == 0.0) return {};
  std::vector<std::string> flagged;
  for (const auto& [system, value] : system_scores) {
    if (std::abs(value - med) > 3.0 * mad) flagged.push_back(system);
  }
  return flagged;
}

nlohmann::json to_json(const EvalReport& report) {
  return nlohmann::json{
      {"pairwise_accuracy", report.pairwise_accuracy},
      {"pearson_system", report.pearson_system},
      {"pearson_segment", report.pearson_segment},
      {"accuracy_t", report.accuracy_t},
      {"meta_score", report.meta_score},
      {"pair_counts",
       {{"total", report.pair_counts.total},
        {"used", report.pair_counts.used},
        {"human_ties_excluded", report.pair_counts.human_ties_excluded}}},
  };
}

nlohmann::json to_json(const SystemComparison& comparison) {
  return nlohmann::json{
      {"system_a", comparison.system_a},   {"system_b", comparison.system_b},
      {"metric_delta", comparison.metric_delta},
      {"human_delta", comparison.human_delta},
      {"counted", comparison.counted},     {"correct", comparison.correct},
  };
}

nlohmann::json to_json(const ErrorDistribution& distribution) {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [error_class, count] : distribution.counts) {
    nlohmann::json entry{{"count", count}};
    if (distribution.total > 0) {
      entry["fraction"] = distribution.fraction(error_class);
    }
    classes[std::string(to_string(error_class))] = std::move(entry);
  }
  return nlohmann::json{{"total", distribution.total},
                        {"classes", std::move(classes)}};
}

std::string format_report_table(
    const std::vector<std::pair<std::string, EvalReport>>& rows) {
  size_t name_width = std::string_view("Metric").size();
  for (const auto& [name, unused] : rows) {
    name_width = std::max(name_width, name.size());
  }
  const auto pad = [](std::string text, size_t width) {
    if (text.size() < width) text.append(width - text.size(), ' ');
    return text;
  };
  std::string out = pad("Metric", name_width) +
                    "  PairAcc  Pearson-sys  Pearson-seg  Accuracy-t  Meta\n";
  for (const auto& [name, report] : rows) {
    out += pad(name, name_width);
    out += "  " + pad(format_double(report.pairwise_accuracy), 7);
    out += "  " + pad(format_double(report.pearson_system), 11);
    out += "  " + pad(format_double(report.pearson_segment), 11);
    out += "  " + pad(format_double(report.accuracy_t), 10);
    out += "  " + format_double(report.meta_score);
    out += '\n';
  }
  return out;
}

std::string format_distribution_table(const ErrorDistribution& distribution) {
  size_t name_width = std::string_view("Error class").size();
  for (const auto& [error_class, unused] : distribution.counts) {
    name_width = std::max(name_width, to_string(error_class).size());
  }
  const auto pad = [](std::string text, size_t width) {
    if (text.size() < width) text.append(width - text.size(), ' ');
    return text;
  };
  std::string out = pad("Error class", name_width) + "  Count      Share\n";
  for (const auto& [error_class, count] : distribution.counts) {
    if (error_class == ErrorClass::kNoError && count == 0) continue;
    out += pad(std::string(to_string(error_class)), name_width);
    out += "  " + pad(std::to_string(count), 9);
    out += distribution.total > 0
               ? "  " + format_double(100.0 * distribution.fraction(error_class),
                                      1) + "%"
               : "  -";
    out += '\n';
  }
  out += pad("total", name_width) + "  " + std::to_string(distribution.total) +
         '\n';
  return out;
}

}  // namespace gemba::eval
