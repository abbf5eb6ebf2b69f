#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gemba {

// Severity of one MQM error. Total order: Critical > Major > Minor.
enum class ErrorSeverity { kCritical, kMajor, kMinor };

// Top-level MQM error classes the prompt offers and the parser recognizes.
// kLocaleConvention is only legal model output under the locale prompt
// variant; the parser remaps it to kOther (with a warning) otherwise.
enum class ErrorClass {
  kAccuracy,
  kFluency,
  kLocaleConvention,
  kStyle,
  kTerminology,
  kNonTranslation,
  kOther,
  kNoError,
};

// Prompt flavor. kGembaLocaleMqm additionally lists the locale-convention
// class in the error taxonomy sentence; kGembaMqm omits it.
enum class PromptVariant { kGembaMqm, kGembaLocaleMqm };

std::string_view to_string(ErrorSeverity severity);
std::string_view to_string(ErrorClass error_class);
std::string_view to_string(PromptVariant variant);  // "gemba-mqm" / "gemba-locale-mqm"
PromptVariant prompt_variant_from_string(std::string_view name);

// Lowercases ASCII letters, trims, and collapses internal whitespace runs to
// one space. Total and idempotent; non-ASCII bytes pass through untouched.
std::string normalize_subclass(std::string_view raw);

// A translation direction as human-readable language names ("English",
// "German"). Names are interpolated into prompts as prose, so they are
// display names, never ISO codes, and never validated against a registry.
class LanguagePair {
 public:
  LanguagePair(std::string source_language, std::string target_language);

  const std::string& source_language() const { return source_language_; }
  const std::string& target_language() const { return target_language_; }

  bool operator==(const LanguagePair&) const = default;

 private:
  std::string source_language_;
  std::string target_language_;
};

// One (source, hypothesis) pair for one MT system: the unit of annotation.
// The hypothesis may be empty (systems do emit empty output and the segment
// must still be scorable); the source may not. Gold scores are stored
// higher-is-better regardless of the file's convention (ingestion negates
// penalty-polarity gold).
class SegmentRecord {
 public:
  SegmentRecord(std::string segment_id, std::string system_id,
                std::string source_text, std::string hypothesis_text,
                LanguagePair language_pair,
                std::optional<double> gold_score = std::nullopt);

  const std::string& segment_id() const { return segment_id_; }
  const std::string& system_id() const { return system_id_; }
  const std::string& source_text() const { return source_text_; }
  const std::string& hypothesis_text() const { return hypothesis_text_; }
  const LanguagePair& language_pair() const { return language_pair_; }
  const std::optional<double>& gold_score() const { return gold_score_; }

 private:
  std::string segment_id_;
  std::string system_id_;
  std::string source_text_;
  std::string hypothesis_text_;
  LanguagePair language_pair_;
  std::optional<double> gold_score_;
};

// A single parsed error. The subclass is stored in normalized form; the span
// is the model's quoted text verbatim (never matched back against the
// hypothesis). kNoError never carries a subclass or span.
class MqmError {
 public:
  MqmError(ErrorSeverity severity, ErrorClass error_class,
           std::optional<std::string> subclass = std::nullopt,
           std::optional<std::string> span = std::nullopt);

  ErrorSeverity severity() const { return severity_; }
  ErrorClass error_class() const { return error_class_; }
  const std::optional<std::string>& subclass() const { return subclass_; }
  const std::optional<std::string>& span() const { return span_; }

  bool operator==(const MqmError&) const = default;

 private:
  ErrorSeverity severity_;
  ErrorClass error_class_;
  std::optional<std::string> subclass_;
  std::optional<std::string> span_;
};

// Severity weights for the penalty sum plus an optional per-segment cap.
// Defaults are the standard coefficients 25 / 5 / 1, uncapped.
class ScoringConfig {
 public:
  ScoringConfig() : ScoringConfig(25.0, 5.0, 1.0, std::nullopt) {}
  ScoringConfig(double critical_weight, double major_weight,
                double minor_weight,
                std::optional<double> penalty_cap = std::nullopt);

  double critical_weight() const { return critical_weight_; }
  double major_weight() const { return major_weight_; }
  double minor_weight() const { return minor_weight_; }
  const std::optional<double>& penalty_cap() const { return penalty_cap_; }

  double weight(ErrorSeverity severity) const;

  ScoringConfig with_penalty_cap(double cap) const {
    return ScoringConfig(critical_weight_, major_weight_, minor_weight_, cap);
  }

 private:
  double critical_weight_;
  double major_weight_;
  double minor_weight_;
  std::optional<double> penalty_cap_;
};

// Parse result for one segment, kept alongside the raw model text so the
// response can always be re-parsed (the cache doubles as the audit log).
struct Annotation {
  std::string segment_id;
  std::string system_id;
  std::vector<MqmError> errors;
  std::string raw_response;
  std::vector<std::string> warnings;
  std::string model_id;
  PromptVariant prompt_variant = PromptVariant::kGembaMqm;
};

// Warning tag used when the model refused / was content-filtered; the
// segment scores as no-error but stays visible in reports.
inline constexpr std::string_view kLlmRefusedWarning = "llm-refused";

}  // namespace gemba
