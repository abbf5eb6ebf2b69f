#include <doctest.h>

#include <random>

#include "gemba/mqm_parser.hpp"

using namespace gemba;
using namespace gemba::mqm;

namespace {

// The three canonical few-shot annotation blocks.
const std::string kAnswerEnDe =
    "Critical:\n"
    "no-error\n"
    "Major:\n"
    "accuracy/mistranslation - \"involvement\"\n"
    "accuracy/omission - \"the account holder\"\n"
    "Minor:\n"
    "fluency/grammar - \"wäre\"\n"
    "fluency/register - \"dir\"";

const std::string kAnswerEnCs =
    "Critical:\n"
    "no-error\n"
    "Major:\n"
    "accuracy/addition - \"ve Vídni\"\n"
    "accuracy/omission - \"the stop-start\"\n"
    "Minor:\n"
    "terminology/inappropriate for context - \"partaje\"";

const std::string kAnswerZhEn =
    "Critical:\n"
    "accuracy/addition - \"of high-speed rail\"\n"
    "Major:\n"
    "accuracy/mistranslation - \"go to the reviews\"\n"
    "Minor:\n"
    "style/awkward - \"etc.,\"";

struct SeverityCounts {
  size_t critical = 0;
  size_t major = 0;
  size_t minor = 0;
};

SeverityCounts count_severities(const std::vector<MqmError>& errors) {
  SeverityCounts counts;
  for (const auto& error : errors) {
    switch (error.severity()) {
      case ErrorSeverity::kCritical: ++counts.critical; break;
      case ErrorSeverity::kMajor: ++counts.major; break;
      case ErrorSeverity::kMinor: ++counts.minor; break;
    }
  }
  return counts;
}

}  // namespace

TEST_CASE("golden: English-German example block") {
  const auto outcome = parse_annotation(kAnswerEnDe, PromptVariant::kGembaMqm);
  CHECK(outcome.warnings.empty());
  const std::vector<MqmError> expected = {
      {ErrorSeverity::kMajor, ErrorClass::kAccuracy, "mistranslation",
       "involvement"},
      {ErrorSeverity::kMajor, ErrorClass::kAccuracy, "omission",
       "the account holder"},
      {ErrorSeverity::kMinor, ErrorClass::kFluency, "grammar", "wäre"},
      {ErrorSeverity::kMinor, ErrorClass::kFluency, "register", "dir"},
  };
  CHECK(outcome.errors == expected);
}

TEST_CASE("golden: English-Czech example block") {
  const auto outcome = parse_annotation(kAnswerEnCs, PromptVariant::kGembaMqm);
  CHECK(outcome.warnings.empty());
  const std::vector<MqmError> expected = {
      {ErrorSeverity::kMajor, ErrorClass::kAccuracy, "addition", "ve Vídni"},
      {ErrorSeverity::kMajor, ErrorClass::kAccuracy, "omission",
       "the stop-start"},
      {ErrorSeverity::kMinor, ErrorClass::kTerminology,
       "inappropriate for context", "partaje"},
  };
  CHECK(outcome.errors == expected);
}

TEST_CASE("golden: Chinese-English example block") {
  const auto outcome = parse_annotation(kAnswerZhEn, PromptVariant::kGembaMqm);
  CHECK(outcome.warnings.empty());
  const std::vector<MqmError> expected = {
      {ErrorSeverity::kCritical, ErrorClass::kAccuracy, "addition",
       "of high-speed rail"},
      {ErrorSeverity::kMajor, ErrorClass::kAccuracy, "mistranslation",
       "go to the reviews"},
      {ErrorSeverity::kMinor, ErrorClass::kStyle, "awkward", "etc.,"},
  };
  CHECK(outcome.errors == expected);
  const auto counts = count_severities(outcome.errors);
  CHECK(counts.critical == 1);
  CHECK(counts.major == 1);
  CHECK(counts.minor == 1);
}

TEST_CASE("all-clear block parses to nothing with no warnings") {
  const auto outcome = parse_annotation(
      "Critical:\nno-error\nMajor:\nno-error\nMinor:\nno-error",
      PromptVariant::kGembaMqm);
  CHECK(outcome.errors.empty());
  CHECK(outcome.warnings.empty());
}

TEST_CASE("no-error spellings and case-insensitive headers") {
  const auto outcome = parse_annotation(
      "CRITICAL:\nno error\nmAjOr:\nNONE\n  Minor:  \nNo-Error",
      PromptVariant::kGembaMqm);
  CHECK(outcome.errors.empty());
  CHECK(outcome.warnings.empty());
}

TEST_CASE("locale-convention line maps by variant") {
  const std::string block = "Critical:\nno-error\nMajor:\nlocale "
                            "convention/currency: \"euros\"\nMinor:\nno-error";

  SUBCASE("locale variant keeps the class") {
    const auto outcome =
        parse_annotation(block, PromptVariant::kGembaLocaleMqm);
    REQUIRE(outcome.errors.size() == 1);
    CHECK(outcome.errors[0].error_class() == ErrorClass::kLocaleConvention);
    CHECK(outcome.errors[0].severity() == ErrorSeverity::kMajor);
    CHECK(*outcome.errors[0].subclass() == "currency");
    CHECK(*outcome.errors[0].span() == "euros");
    CHECK(outcome.warnings.empty());
  }
  SUBCASE("plain variant remaps to other with the tagged warning") {
    const auto outcome = parse_annotation(block, PromptVariant::kGembaMqm);
    REQUIRE(outcome.errors.size() == 1);
    CHECK(outcome.errors[0].error_class() == ErrorClass::kOther);
    CHECK(*outcome.errors[0].subclass() == "currency");
    REQUIRE(outcome.warnings.size() == 1);
    CHECK(outcome.warnings[0] == std::string(kLocaleOutsideVariantWarning));
  }
}

TEST_CASE("classify_line handles the documented shapes") {
  const auto terminology = classify_line(
      "terminology/inappropriate for context - \"partaje\"",
      ErrorSeverity::kMinor, PromptVariant::kGembaMqm);
  REQUIRE(terminology.error.has_value());
  CHECK(terminology.error->error_class() == ErrorClass::kTerminology);
  CHECK(*terminology.error->subclass() == "inappropriate for context");
  CHECK(*terminology.error->span() == "partaje");
  CHECK(terminology.warnings.empty());

  const auto bare = classify_line("non-translation", ErrorSeverity::kCritical,
                                  PromptVariant::kGembaMqm);
  REQUIRE(bare.error.has_value());
  CHECK(bare.error->error_class() == ErrorClass::kNonTranslation);
  CHECK_FALSE(bare.error->subclass().has_value());
  CHECK_FALSE(bare.error->span().has_value());

  const auto gibberish = classify_line("gibberish stuff", ErrorSeverity::kMajor,
                                       PromptVariant::kGembaMqm);
  CHECK_FALSE(gibberish.error.has_value());
  CHECK_FALSE(gibberish.no_error_marker);
  CHECK(gibberish.warnings.size() == 1);

  const auto unquoted = classify_line("accuracy/omission - final words",
                                      ErrorSeverity::kMajor,
                                      PromptVariant::kGembaMqm);
  REQUIRE(unquoted.error.has_value());
  CHECK(*unquoted.error->span() == "final words");

  const auto no_subclass = classify_line("fluency - \"x\"",
                                         ErrorSeverity::kMinor,
                                         PromptVariant::kGembaMqm);
  REQUIRE(no_subclass.error.has_value());
  CHECK(no_subclass.error->error_class() == ErrorClass::kFluency);
  CHECK_FALSE(no_subclass.error->subclass().has_value());
  CHECK(*no_subclass.error->span() == "x");

  const auto other_bare =
      classify_line("other", ErrorSeverity::kMinor, PromptVariant::kGembaMqm);
  REQUIRE(other_bare.error.has_value());
  CHECK(other_bare.error->error_class() == ErrorClass::kOther);
  const auto other_span = classify_line("other - \"span\"",
                                        ErrorSeverity::kMinor,
                                        PromptVariant::kGembaMqm);
  REQUIRE(other_span.error.has_value());
  CHECK(*other_span.error->span() == "span");
}

TEST_CASE("unknown class on a structured line maps to other with warning") {
  const auto outcome = parse_annotation(
      "Critical:\nweirdness/overreach - \"bit\"\nMajor:\nno-error",
      PromptVariant::kGembaMqm);
  REQUIRE(outcome.errors.size() == 1);
  CHECK(outcome.errors[0].error_class() == ErrorClass::kOther);
  CHECK(*outcome.errors[0].subclass() == "overreach");
  CHECK(*outcome.errors[0].span() == "bit");
  CHECK(outcome.warnings.size() == 1);
}

TEST_CASE("recovery paths") {
  SUBCASE("prose before the first header is ignored with one warning") {
    const auto outcome = parse_annotation(
        "Sure! Here is my annotation.\nAnother preface line.\n"
        "Critical:\nno-error\nMajor:\nno-error\nMinor:\nno-error",
        PromptVariant::kGembaMqm);
    CHECK(outcome.errors.empty());
    REQUIRE(outcome.warnings.size() == 1);
    CHECK(outcome.warnings[0].find("before the first severity header") !=
          std::string::npos);
  }
  SUBCASE("input without headers yields warnings, never errors") {
    const auto outcome =
        parse_annotation("I cannot help with that.", PromptVariant::kGembaMqm);
    CHECK(outcome.errors.empty());
    CHECK_FALSE(outcome.warnings.empty());
  }
  SUBCASE("empty input warns") {
    const auto outcome = parse_annotation("", PromptVariant::kGembaMqm);
    CHECK(outcome.errors.empty());
    CHECK_FALSE(outcome.warnings.empty());
  }
  SUBCASE("unrecognized lines under a header are skipped with warnings") {
    const auto outcome = parse_annotation(
        "Critical:\n???\nMajor:\naccuracy/omission - \"x\"\nMinor:\nno-error",
        PromptVariant::kGembaMqm);
    REQUIRE(outcome.errors.size() == 1);
    CHECK(outcome.errors[0].severity() == ErrorSeverity::kMajor);
    CHECK(outcome.warnings.size() == 1);
  }
}

TEST_CASE("comma-separated multi-span lines stay one error with a warning") {
  const auto outcome = parse_annotation(
      "Critical:\nno-error\nMajor:\naccuracy/omission - \"a\", \"b\"\n"
      "Minor:\nno-error",
      PromptVariant::kGembaMqm);
  REQUIRE(outcome.errors.size() == 1);
  CHECK(*outcome.errors[0].span() == "a\", \"b");
  CHECK(outcome.warnings.size() == 1);
}

TEST_CASE("extra slash segments fold into the subclass with a warning") {
  const auto outcome = parse_annotation(
      "Critical:\naccuracy/mistranslation/ambiguous - \"x\"\n"
      "Major:\nno-error\nMinor:\nno-error",
      PromptVariant::kGembaMqm);
  REQUIRE(outcome.errors.size() == 1);
  CHECK(*outcome.errors[0].subclass() == "mistranslation/ambiguous");
  CHECK(outcome.warnings.size() == 1);
}

TEST_CASE("duplicate identical lines both count") {
  const auto outcome = parse_annotation(
      "Critical:\nno-error\nMajor:\nfluency/grammar - \"x\"\n"
      "fluency/grammar - \"x\"\nMinor:\nno-error",
      PromptVariant::kGembaMqm);
  CHECK(outcome.errors.size() == 2);
  CHECK(outcome.errors[0] == outcome.errors[1]);
  CHECK(outcome.warnings.empty());
}

TEST_CASE("severity follows the most recent header, any header order") {
  const auto outcome = parse_annotation(
      "Minor:\nstyle/awkward - \"x\"\nCritical:\nnon-translation\n"
      "Major:\nfluency/grammar - \"y\"",
      PromptVariant::kGembaMqm);
  REQUIRE(outcome.errors.size() == 3);
  // Grouped critical-first regardless of input order.
  CHECK(outcome.errors[0].severity() == ErrorSeverity::kCritical);
  CHECK(outcome.errors[0].error_class() == ErrorClass::kNonTranslation);
  CHECK(outcome.errors[1].severity() == ErrorSeverity::kMajor);
  CHECK(outcome.errors[2].severity() == ErrorSeverity::kMinor);
  CHECK(outcome.warnings.empty());
}

TEST_CASE("canonical serialization") {
  CHECK(canonical_serialize({}) ==
        "Critical:\nno-error\nMajor:\nno-error\nMinor:\nno-error");

  const auto parsed = parse_annotation(kAnswerEnCs, PromptVariant::kGembaMqm);
  const std::string serialized = canonical_serialize(parsed.errors);
  CHECK(serialized.find("accuracy/addition - \"ve Vídni\"") !=
        std::string::npos);
  CHECK(serialized == kAnswerEnCs);  // the block is already canonical

  // kNoError entries contribute nothing.
  CHECK(canonical_serialize({MqmError(ErrorSeverity::kMajor,
                                      ErrorClass::kNoError)}) ==
        "Critical:\nno-error\nMajor:\nno-error\nMinor:\nno-error");
}

namespace {

std::vector<MqmError> random_error_list(std::mt19937& rng) {
  static const ErrorClass classes[] = {
      ErrorClass::kAccuracy,       ErrorClass::kFluency,
      ErrorClass::kLocaleConvention, ErrorClass::kStyle,
      ErrorClass::kTerminology,    ErrorClass::kNonTranslation,
      ErrorClass::kOther,
  };
  static const char* subclasses[] = {
      "mistranslation", "omission",  "grammar",
      "awkward",        "currency",  "inappropriate for context",
  };
  static const char* spans[] = {
      "involvement", "the account holder", "wäre", "etc.,", "x - y",
      "16,50 Eur",   "a b  c",
  };
  std::uniform_int_distribution<int> count(0, 6);
  std::uniform_int_distribution<int> pick_class(0, 6);
  std::uniform_int_distribution<int> pick_sub(0, 5);
  std::uniform_int_distribution<int> pick_span(0, 6);
  std::uniform_int_distribution<int> pick_severity(0, 2);
  std::uniform_int_distribution<int> coin(0, 1);

  std::vector<MqmError> errors;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    std::optional<std::string> subclass;
    if (coin(rng)) subclass = subclasses[pick_sub(rng)];
    std::optional<std::string> span;
    if (coin(rng)) span = spans[pick_span(rng)];
    errors.emplace_back(static_cast<ErrorSeverity>(pick_severity(rng)),
                        classes[pick_class(rng)], std::move(subclass),
                        std::move(span));
  }
  return errors;
}

std::vector<MqmError> grouped_by_severity(std::vector<MqmError> errors) {
  std::stable_sort(errors.begin(), errors.end(),
                   [](const MqmError& a, const MqmError& b) {
                     return static_cast<int>(a.severity()) <
                            static_cast<int>(b.severity());
                   });
  return errors;
}

}  // namespace

TEST_CASE("property: serialize-parse is a fixed point for generated lists") {
  std::mt19937 rng(20230914);
  for (int i = 0; i < 400; ++i) {
    const auto errors = random_error_list(rng);
    const std::string block = canonical_serialize(errors);
    const auto parsed = parse_annotation(block, PromptVariant::kGembaLocaleMqm);
    CHECK(parsed.warnings.empty());
    CHECK(parsed.errors == grouped_by_severity(errors));
    CHECK(canonical_serialize(parsed.errors) == block);
  }
}

TEST_CASE("property: severity equals the governing header") {
  std::mt19937 rng(99);
  static const char* headers[] = {"Critical:", "Major:", "Minor:"};
  static const ErrorSeverity severities[] = {
      ErrorSeverity::kCritical, ErrorSeverity::kMajor, ErrorSeverity::kMinor};
  std::uniform_int_distribution<int> pick_header(0, 2);
  std::uniform_int_distribution<int> lines_per_section(0, 3);
  for (int iter = 0; iter < 200; ++iter) {
    std::string block;
    std::vector<ErrorSeverity> expected;
    const int sections = 1 + pick_header(rng);
    for (int s = 0; s < sections; ++s) {
      const int h = pick_header(rng);
      block += headers[h];
      block += '\n';
      const int lines = lines_per_section(rng);
      for (int l = 0; l < lines; ++l) {
        block += "accuracy/omission - \"x\"\n";
        expected.push_back(severities[h]);
      }
    }
    const auto outcome = parse_annotation(block, PromptVariant::kGembaMqm);
    REQUIRE(outcome.errors.size() == expected.size());
    std::sort(expected.begin(), expected.end(),
              [](ErrorSeverity a, ErrorSeverity b) {
                return static_cast<int>(a) < static_cast<int>(b);
              });
    for (size_t i = 0; i < expected.size(); ++i) {
      CHECK(outcome.errors[i].severity() == expected[i]);
    }
  }
}

TEST_CASE("mini-fuzz: totality and one-serialize stability") {
  std::mt19937 rng(4242);
  std::uniform_int_distribution<int> length(0, 120);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<int> mode(0, 2);
  static const char* tokens[] = {
      "Critical:", "Major:",  "minor:", "accuracy", "fluency/", "locale "
      "convention", "/", " - ", ": ", "\"", "no-error", "none", "\n", " ",
      "-", "etc.,", "style", "x",
  };
  std::uniform_int_distribution<int> pick_token(0, 17);
  for (int i = 0; i < 2000; ++i) {
    std::string input;
    if (mode(rng) == 0) {
      const int n = length(rng);
      for (int j = 0; j < n; ++j) input.push_back(static_cast<char>(byte(rng)));
    } else {
      const int n = length(rng) / 6;
      for (int j = 0; j < n; ++j) input += tokens[pick_token(rng)];
    }
    const PromptVariant variant = (i % 2 == 0) ? PromptVariant::kGembaMqm
                                               : PromptVariant::kGembaLocaleMqm;
    const auto first = parse_annotation(input, variant);
    const std::string s1 = canonical_serialize(first.errors);
    const auto second = parse_annotation(s1, variant);
    const std::string s2 = canonical_serialize(second.errors);
    CHECK(s1 == s2);
  }
}
