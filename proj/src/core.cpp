#include "gemba/core.hpp"

#include <cctype>
#include <stdexcept>

namespace gemba {

std::string_view to_string(ErrorSeverity severity) {
  switch (severity) {
    case ErrorSeverity::kCritical: return "critical";
    case ErrorSeverity::kMajor: return "major";
    case ErrorSeverity::kMinor: return "minor";
  }
  return "unknown";
}

std::string_view to_string(ErrorClass error_class) {
  switch (error_class) {
    case ErrorClass::kAccuracy: return "accuracy";
    case ErrorClass::kFluency: return "fluency";
    case ErrorClass::kLocaleConvention: return "locale convention";
    case ErrorClass::kStyle: return "style";
    case ErrorClass::kTerminology: return "terminology";
    case ErrorClass::kNonTranslation: return "non-translation";
    case ErrorClass::kOther: return "other";
    case ErrorClass::kNoError: return "no-error";
  }
  return "unknown";
}

std::string_view to_string(PromptVariant variant) {
  switch (variant) {
    case PromptVariant::kGembaMqm: return "gemba-mqm";
    case PromptVariant::kGembaLocaleMqm: return "gemba-locale-mqm";
  }
  return "unknown";
}

PromptVariant prompt_variant_from_string(std::string_view name) {
  if (name == "gemba-mqm") return PromptVariant::kGembaMqm;
  if (name == "gemba-locale-mqm") return PromptVariant::kGembaLocaleMqm;
  throw std::invalid_argument("unknown prompt variant: " + std::string(name));
}

std::string normalize_subclass(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (unsigned char c : raw) {
    if (std::isspace(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

LanguagePair::LanguagePair(std::string source_language,
                           std::string target_language)
    : source_language_(std::move(source_language)),
      target_language_(std::move(target_language)) {
  if (source_language_.empty() || target_language_.empty()) {
    throw std::invalid_argument("language names must be non-empty");
  }
}

SegmentRecord::SegmentRecord(std::string segment_id, std::string system_id,
                             std::string source_text,
                             std::string hypothesis_text,
                             LanguagePair language_pair,
                             std::optional<double> gold_score)
    : segment_id_(std::move(segment_id)),
      system_id_(std::move(system_id)),
      source_text_(std::move(source_text)),
      hypothesis_text_(std::move(hypothesis_text)),
      language_pair_(std::move(language_pair)),
      gold_score_(gold_score) {
  if (source_text_.empty()) {
    throw std::invalid_argument("segment " + segment_id_ +
                                ": source_text must be non-empty");
  }
}

MqmError::MqmError(ErrorSeverity severity, ErrorClass error_class,
                   std::optional<std::string> subclass,
                   std::optional<std::string> span)
    : severity_(severity),
      error_class_(error_class),
      subclass_(std::move(subclass)),
      span_(std::move(span)) {
  if (error_class_ == ErrorClass::kNoError &&
      (subclass_.has_value() || span_.has_value())) {
    throw std::invalid_argument("no-error entries carry no subclass or span");
  }
  if (subclass_) *subclass_ = normalize_subclass(*subclass_);
}

ScoringConfig::ScoringConfig(double critical_weight, double major_weight,
                             double minor_weight,
                             std::optional<double> penalty_cap)
    : critical_weight_(critical_weight),
      major_weight_(major_weight),
      minor_weight_(minor_weight),
      penalty_cap_(penalty_cap) {
  if (!(critical_weight_ >= major_weight_ && major_weight_ >= minor_weight_ &&
        minor_weight_ >= 0.0)) {
    throw std::invalid_argument(
        "severity weights must satisfy critical >= major >= minor >= 0");
  }
  if (penalty_cap_ && !(*penalty_cap_ >= 0.0)) {
    throw std::invalid_argument("penalty_cap must be nonnegative");
  }
}

double ScoringConfig::weight(ErrorSeverity severity) const {
  switch (severity) {
    case ErrorSeverity::kCritical: return critical_weight_;
    case ErrorSeverity::kMajor: return major_weight_;
    case ErrorSeverity::kMinor: return minor_weight_;
  }
  return 0.0;
}

}  // namespace gemba
