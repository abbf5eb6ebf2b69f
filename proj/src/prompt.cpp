#include "gemba/prompt.hpp"

#include <stdexcept>

#include "gemba/digest.hpp"
#include "gemba/mqm_parser.hpp"

namespace gemba::prompt {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "unknown";
}

ChatMessage::ChatMessage(Role role, std::string content)
    : role_(role), content_(std::move(content)) {
  if (content_.empty()) {
    throw std::invalid_argument("chat message content must be non-empty");
  }
}

FewShotExample::FewShotExample(LanguagePair language_pair,
                               std::string source_text,
                               std::string hypothesis_text,
                               std::string assistant_answer)
    : language_pair_(std::move(language_pair)),
      source_text_(std::move(source_text)),
      hypothesis_text_(std::move(hypothesis_text)),
      assistant_answer_(std::move(assistant_answer)) {
  if (source_text_.empty()) {
    throw std::invalid_argument("few-shot source_text must be non-empty");
  }
  const auto outcome = mqm::parse_annotation(assistant_answer_,
                                             PromptVariant::kGembaLocaleMqm);
  if (!outcome.warnings.empty()) {
    throw std::invalid_argument(
        "few-shot assistant answer must parse with zero warnings; got: " +
        outcome.warnings.front());
  }
}

ChatMessage system_message() {
  return ChatMessage(Role::kSystem, std::string(kSystemPromptText));
}

ChatMessage user_message(const LanguagePair& language_pair,
                         std::string_view source_text,
                         std::string_view hypothesis_text,
                         PromptVariant variant) {
  if (source_text.empty()) {
    throw std::invalid_argument("source segment must be non-empty");
  }
  std::string content;
  content.reserve(source_text.size() + hypothesis_text.size() + 900);
  content += language_pair.source_language();
  content += " source:\n```";
  content += source_text;
  content += "```\n";
  content += language_pair.target_language();
  content += " translation:\n```";
  content += hypothesis_text;
  content += "```\n\n";
  content += kClassListLead;
  if (variant == PromptVariant::kGembaLocaleMqm) content += kLocaleClause;
  content += kClassListTail;
  content += '\n';
  content += kSeveritySentence;
  return ChatMessage(Role::kUser, std::move(content));
}

const std::vector<FewShotExample>& default_few_shot() {
  static const std::vector<FewShotExample> examples = {
      FewShotExample(
          LanguagePair("English", "German"),
          "I do apologise about this, we must gain permission from the "
          "account holder to discuss an order with another person, I "
          "apologise if this was done previously, however, I would not be "
          "able to discuss this with yourself without the account holders "
          "permission.",
          "Ich entschuldige mich dafür, wir müssen die Erlaubnis einholen, "
          "um eine Bestellung mit einer anderen Person zu besprechen. Ich "
          "entschuldige mich, falls dies zuvor geschehen wäre, aber ohne die "
          "Erlaubnis des Kontoinhabers wäre ich nicht in der Lage, dies mit "
          "dir involvement.",
          "Critical:\n"
          "no-error\n"
          "Major:\n"
          "accuracy/mistranslation - \"involvement\"\n"
          "accuracy/omission - \"the account holder\"\n"
          "Minor:\n"
          "fluency/grammar - \"wäre\"\n"
          "fluency/register - \"dir\""),
      FewShotExample(
          LanguagePair("English", "Czech"),
          "Talks have resumed in Vienna to try to revive the nuclear pact, "
          "with both sides trying to gauge the prospects of success after "
          "the latest exchanges in the stop-start negotiations.",
          "Ve Vídni se ve Vídni obnovily rozhovory o oživení jaderného "
          "paktu, přičemže obě partaje se snaží posoudit vyhlídky na úspěch "
          "po posledních výměnách v jednáních.",
          "Critical:\n"
          "no-error\n"
          "Major:\n"
          "accuracy/addition - \"ve Vídni\"\n"
          "accuracy/omission - \"the stop-start\"\n"
          "Minor:\n"
          "terminology/inappropriate for context - \"partaje\""),
      FewShotExample(
          LanguagePair("Chinese", "English"),
          "大众点评乌鲁木齐家居商场频道为您提供高铁居然之家地址，电话，"
          "营业时间等最新商户信息，找装修公司，就上大众点评",
          "Urumqi Home Furnishing Store Channel provides you with the latest "
          "business information such as the address, telephone number, "
          "business hours, etc., of high-speed rail, and find a decoration "
          "company, and go to the reviews.",
          "Critical:\n"
          "accuracy/addition - \"of high-speed rail\"\n"
          "Major:\n"
          "accuracy/mistranslation - \"go to the reviews\"\n"
          "Minor:\n"
          "style/awkward - \"etc.,\""),
  };
  return examples;
}

std::vector<ChatMessage> build_messages(
    const SegmentRecord& segment, PromptVariant variant,
    const std::vector<FewShotExample>& examples) {
  std::vector<ChatMessage> messages;
  messages.reserve(2 * examples.size() + 2);
  messages.push_back(system_message());
  for (const auto& example : examples) {
    messages.push_back(user_message(example.language_pair(),
                                    example.source_text(),
                                    example.hypothesis_text(), variant));
    messages.emplace_back(Role::kAssistant, example.assistant_answer());
  }
  messages.push_back(user_message(segment.language_pair(),
                                  segment.source_text(),
                                  segment.hypothesis_text(), variant));
  return messages;
}

const std::string& template_version() {
  static const std::string version = [] {
    std::string material;
    material += kSystemPromptText;
    material += '\x1f';
    material += kClassListLead;
    material += '\x1f';
    material += kLocaleClause;
    material += '\x1f';
    material += kClassListTail;
    material += '\x1f';
    material += kSeveritySentence;
    for (const auto& example : default_few_shot()) {
      material += '\x1f';
      material += example.language_pair().source_language();
      material += '\x1f';
      material += example.language_pair().target_language();
      material += '\x1f';
      material += example.source_text();
      material += '\x1f';
      material += example.hypothesis_text();
      material += '\x1f';
      material += example.assistant_answer();
    }
    return sha256_hex(material);
  }();
  return version;
}

}  // namespace gemba::prompt
