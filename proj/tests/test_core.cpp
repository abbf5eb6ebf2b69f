#include <doctest.h>

#include <random>

#include "gemba/core.hpp"

using namespace gemba;

TEST_CASE("normalize_subclass canonicalizes case and whitespace") {
  CHECK(normalize_subclass("Mistranslation ") == "mistranslation");
  CHECK(normalize_subclass("inappropriate  for context") ==
        "inappropriate for context");
  CHECK(normalize_subclass("") == "");
  CHECK(normalize_subclass("  \t Untranslated\tTEXT \r") == "untranslated text");
}

TEST_CASE("normalize_subclass is idempotent on arbitrary strings") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> length(0, 40);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int i = 0; i < 500; ++i) {
    std::string raw;
    const int n = length(rng);
    for (int j = 0; j < n; ++j) raw.push_back(static_cast<char>(byte(rng)));
    const std::string once = normalize_subclass(raw);
    CHECK(normalize_subclass(once) == once);
  }
}

TEST_CASE("language pair rejects empty names") {
  CHECK_THROWS_AS(LanguagePair("", "German"), std::invalid_argument);
  CHECK_THROWS_AS(LanguagePair("English", ""), std::invalid_argument);
  const LanguagePair pair("English", "German");
  CHECK(pair.source_language() == "English");
  CHECK(pair.target_language() == "German");
}

TEST_CASE("segment record requires a source but tolerates empty hypothesis") {
  const LanguagePair pair("English", "German");
  CHECK_THROWS_AS(SegmentRecord("s1", "sysA", "", "Hallo", pair),
                  std::invalid_argument);
  const SegmentRecord record("s1", "sysA", "Hello", "", pair, -3.5);
  CHECK(record.hypothesis_text().empty());
  CHECK(record.gold_score() == -3.5);
}

TEST_CASE("mqm error construction") {
  SUBCASE("no-error entries carry nothing") {
    CHECK_THROWS_AS(
        MqmError(ErrorSeverity::kMinor, ErrorClass::kNoError, "subclass"),
        std::invalid_argument);
    CHECK_THROWS_AS(MqmError(ErrorSeverity::kMinor, ErrorClass::kNoError,
                             std::nullopt, "span"),
                    std::invalid_argument);
    CHECK_NOTHROW(MqmError(ErrorSeverity::kMinor, ErrorClass::kNoError));
  }
  SUBCASE("subclass is stored normalized") {
    const MqmError error(ErrorSeverity::kMajor, ErrorClass::kTerminology,
                         "Inappropriate  FOR Context", "partaje");
    CHECK(*error.subclass() == "inappropriate for context");
    CHECK(*error.span() == "partaje");
  }
}

TEST_CASE("scoring config enforces weight ordering") {
  const ScoringConfig defaults;
  CHECK(defaults.critical_weight() == 25.0);
  CHECK(defaults.major_weight() == 5.0);
  CHECK(defaults.minor_weight() == 1.0);
  CHECK_FALSE(defaults.penalty_cap().has_value());
  CHECK(defaults.weight(ErrorSeverity::kCritical) == 25.0);

  CHECK_THROWS_AS(ScoringConfig(5, 25, 1), std::invalid_argument);
  CHECK_THROWS_AS(ScoringConfig(25, 5, -1), std::invalid_argument);
  CHECK_THROWS_AS(ScoringConfig(25, 5, 1, -2.0), std::invalid_argument);
  CHECK(defaults.with_penalty_cap(25.0).penalty_cap() == 25.0);
}

TEST_CASE("enum names round-trip") {
  CHECK(to_string(ErrorClass::kLocaleConvention) == "locale convention");
  CHECK(to_string(ErrorClass::kNonTranslation) == "non-translation");
  CHECK(to_string(ErrorSeverity::kCritical) == "critical");
  CHECK(prompt_variant_from_string("gemba-mqm") == PromptVariant::kGembaMqm);
  CHECK(prompt_variant_from_string("gemba-locale-mqm") ==
        PromptVariant::kGembaLocaleMqm);
  CHECK_THROWS_AS(prompt_variant_from_string("unknown"), std::invalid_argument);
}
