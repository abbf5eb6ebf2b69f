#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "gemba/core.hpp"

namespace gemba::prompt {

enum class Role { kSystem, kUser, kAssistant };

std::string_view to_string(Role role);  // "system" / "user" / "assistant"

class ChatMessage {
 public:
  ChatMessage(Role role, std::string content);  // content must be non-empty

  Role role() const { return role_; }
  const std::string& content() const { return content_; }

  bool operator==(const ChatMessage&) const = default;

 private:
  Role role_;
  std::string content_;
};

// Canonical prompt text, version 1. Stored as constants so the rendered
// bytes are stable across builds; template_version() fingerprints them.
inline constexpr std::string_view kSystemPromptText =
    "You are an annotator for the quality of machine translation. Your task "
    "is to identify errors and assess the quality of the translation.";

// Class-list sentence, split around the optional locale-convention clause.
inline constexpr std::string_view kClassListLead =
    "Based on the source segment and machine translation surrounded with "
    "triple backticks, identify error types in the translation and classify "
    "them. The categories of errors are: accuracy (addition, mistranslation, "
    "omission, untranslated text), fluency (character encoding, grammar, "
    "inconsistency, punctuation, register, spelling), ";

inline constexpr std::string_view kLocaleClause =
    "locale convention (currency, date, name, telephone, or time format) ";

inline constexpr std::string_view kClassListTail =
    "style (awkward), terminology (inappropriate for context, inconsistent "
    "use), non-translation, other, or no-error.";

inline constexpr std::string_view kSeveritySentence =
    "Each error is classified as one of three categories: critical, major, "
    "and minor. Critical errors inhibit comprehension of the text. Major "
    "errors disrupt the flow, but what the text is trying to say is still "
    "understandable. Minor errors are technically errors, but do not disrupt "
    "the flow or hinder comprehension.";

// One worked example for the few-shot turns. The assistant answer must parse
// under the annotation grammar with zero warnings (checked at construction,
// against the full locale-aware grammar).
class FewShotExample {
 public:
  FewShotExample(LanguagePair language_pair, std::string source_text,
                 std::string hypothesis_text, std::string assistant_answer);

  const LanguagePair& language_pair() const { return language_pair_; }
  const std::string& source_text() const { return source_text_; }
  const std::string& hypothesis_text() const { return hypothesis_text_; }
  const std::string& assistant_answer() const { return assistant_answer_; }

 private:
  LanguagePair language_pair_;
  std::string source_text_;
  std::string hypothesis_text_;
  std::string assistant_answer_;
};

// The System-role opener. Pure; byte-identical on every call.
ChatMessage system_message();

// The User-role turn for one (source, hypothesis) pair. The locale variant
// inserts kLocaleClause into the class list; the plain variant omits it.
// Triple backticks inside segments pass through verbatim. Throws
// std::invalid_argument on an empty source.
ChatMessage user_message(const LanguagePair& language_pair,
                         std::string_view source_text,
                         std::string_view hypothesis_text,
                         PromptVariant variant);

// The fixed three-example bank used for every language pair, in order:
// English->German, English->Czech, Chinese->English.
const std::vector<FewShotExample>& default_few_shot();

// Full message list: system, then user/assistant per example (rendered with
// the same template as the final turn), then the query turn. Empty example
// list gives the zero-shot form. Length is always 2 * examples + 2.
std::vector<ChatMessage> build_messages(
    const SegmentRecord& segment, PromptVariant variant,
    const std::vector<FewShotExample>& examples);

// Digest over the template constants and the default few-shot bank; recorded
// in run manifests so template drift between runs is detectable.
const std::string& template_version();

}  // namespace gemba::prompt
