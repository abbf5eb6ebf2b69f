#include "gemba/mqm_parser.hpp"

#include <array>
#include <algorithm>
#include <cstddef>

namespace gemba::mqm {

namespace {

bool is_line_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
  size_t b = 0;
  while (b < s.size() && is_line_space(s[b])) ++b;
  size_t e = s.size();
  while (e > b && is_line_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

// Truncated preview of an offending line for warning messages.
std::string preview(std::string_view line) {
  constexpr size_t kMax = 60;
  std::string p(line.substr(0, kMax));
  if (line.size() > kMax) p += "...";
  return p;
}

std::optional<ErrorSeverity> match_header(std::string_view trimmed_line) {
  const std::string key = normalize_subclass(trimmed_line);
  if (key == "critical:") return ErrorSeverity::kCritical;
  if (key == "major:") return ErrorSeverity::kMajor;
  if (key == "minor:") return ErrorSeverity::kMinor;
  return std::nullopt;
}

struct Separator {
  size_t head_end;    // end of the class/subclass region (exclusive)
  size_t tail_begin;  // start of the span region
};

// Earliest span separator: whitespace-preceded `-`, or `:` followed by
// whitespace. A dash glued to a word (as in `non-translation`) never splits.
std::optional<Separator> find_separator(std::string_view line) {
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '-' && i > 0 && is_line_space(line[i - 1])) {
      size_t head_end = i - 1;
      while (head_end > 0 && is_line_space(line[head_end - 1])) --head_end;
      size_t tail = i + 1;
      while (tail < line.size() && is_line_space(line[tail])) ++tail;
      return Separator{head_end, tail};
    }
    if (c == ':' && i + 1 < line.size() && is_line_space(line[i + 1])) {
      size_t head_end = i;
      while (head_end > 0 && is_line_space(line[head_end - 1])) --head_end;
      size_t tail = i + 1;
      while (tail < line.size() && is_line_space(line[tail])) ++tail;
      return Separator{head_end, tail};
    }
  }
  return std::nullopt;
}

struct ClassName {
  std::string_view name;
  ErrorClass error_class;
};

constexpr std::array<ClassName, 7> kClassNames = {{
    {"accuracy", ErrorClass::kAccuracy},
    {"fluency", ErrorClass::kFluency},
    {"locale convention", ErrorClass::kLocaleConvention},
    {"style", ErrorClass::kStyle},
    {"terminology", ErrorClass::kTerminology},
    {"non-translation", ErrorClass::kNonTranslation},
    {"other", ErrorClass::kOther},
}};

std::optional<ErrorClass> lookup_class(std::string_view normalized) {
  for (const auto& entry : kClassNames) {
    if (normalized == entry.name) return entry.error_class;
  }
  return std::nullopt;
}

bool is_no_error_marker(std::string_view normalized) {
  return normalized == "no-error" || normalized == "no error" ||
         normalized == "none";
}

// Span from the post-separator tail: the text between the first and the last
// double quote when a quoted region exists, else the trimmed remainder. An
// empty result means no span.
std::optional<std::string> extract_span(std::string_view tail,
                                        std::vector<std::string>& warnings) {
  tail = trim(tail);
  if (tail.empty()) return std::nullopt;
  const size_t first_quote = tail.find('"');
  const size_t last_quote = tail.rfind('"');
  if (first_quote != std::string_view::npos && last_quote > first_quote) {
    std::string_view inner =
        tail.substr(first_quote + 1, last_quote - first_quote - 1);
    if (inner.find('"') != std::string_view::npos) {
      warnings.push_back("multiple quoted spans on one line kept verbatim: \"" +
                         preview(tail) + "\"");
    }
    if (inner.empty()) return std::nullopt;
    return std::string(inner);
  }
  return std::string(tail);
}

}  // namespace

ClassifiedLine classify_line(std::string_view line, ErrorSeverity severity,
                             PromptVariant variant) {
  ClassifiedLine out;
  line = trim(line);
  if (line.empty()) return out;

  const auto sep = find_separator(line);
  const std::string_view head = sep ? trim(line.substr(0, sep->head_end)) : line;

  const size_t slash = head.find('/');
  const std::string_view class_text =
      slash == std::string_view::npos ? head : head.substr(0, slash);
  const std::string_view subclass_text =
      slash == std::string_view::npos ? std::string_view{}
                                      : head.substr(slash + 1);

  const std::string class_key = normalize_subclass(class_text);

  if (is_no_error_marker(class_key)) {
    out.no_error_marker = true;
    if (slash != std::string_view::npos || (sep && sep->tail_begin < line.size())) {
      out.warnings.push_back("decorated no-error line; extras ignored: \"" +
                             preview(line) + "\"");
    }
    return out;
  }

  auto error_class = lookup_class(class_key);
  if (!error_class) {
    const bool has_structure = sep.has_value() || slash != std::string_view::npos;
    if (!has_structure || class_key.empty()) {
      out.warnings.push_back("unrecognized line skipped: \"" + preview(line) +
                             "\"");
      return out;
    }
    out.warnings.push_back("unknown error class \"" + class_key +
                           "\" mapped to other");
    error_class = ErrorClass::kOther;
  }

  if (*error_class == ErrorClass::kLocaleConvention &&
      variant == PromptVariant::kGembaMqm) {
    out.warnings.emplace_back(kLocaleOutsideVariantWarning);
    error_class = ErrorClass::kOther;
  }

  std::optional<std::string> subclass;
  if (!subclass_text.empty()) {
    std::string normalized = normalize_subclass(subclass_text);
    // A subclass-final colon is list punctuation, never content; keeping it
    // would re-split as a separator after canonical serialization.
    while (!normalized.empty() &&
           (normalized.back() == ':' || normalized.back() == ' ')) {
      normalized.pop_back();
    }
    if (!normalized.empty()) {
      if (normalized.find('/') != std::string::npos) {
        out.warnings.push_back("extra '/' segments folded into subclass \"" +
                               normalized + "\"");
      }
      subclass = std::move(normalized);
    }
  }

  std::optional<std::string> span;
  if (sep && sep->tail_begin < line.size()) {
    span = extract_span(line.substr(sep->tail_begin), out.warnings);
  }

  out.error = MqmError(severity, *error_class, std::move(subclass),
                       std::move(span));
  return out;
}

ParseOutcome parse_annotation(std::string_view text, PromptVariant variant) {
  ParseOutcome out;
  std::vector<MqmError> by_severity[3];
  std::optional<ErrorSeverity> current;
  size_t preamble_lines = 0;
  bool any_content = false;

  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t eol = std::min(text.find('\n', pos), text.size());
    const std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) continue;
    any_content = true;

    if (auto severity = match_header(line)) {
      current = *severity;
      continue;
    }
    if (!current) {
      ++preamble_lines;
      continue;
    }
    ClassifiedLine classified = classify_line(line, *current, variant);
    for (auto& w : classified.warnings) out.warnings.push_back(std::move(w));
    if (classified.error) {
      by_severity[static_cast<size_t>(*current)].push_back(
          std::move(*classified.error));
    }
  }

  if (!current) {
    out.warnings.push_back(any_content
                               ? "no severity headers found; input ignored"
                               : "empty response");
  } else if (preamble_lines > 0) {
    out.warnings.push_back("ignored " + std::to_string(preamble_lines) +
                           " line(s) before the first severity header");
  }

  for (auto& bucket : by_severity) {
    for (auto& error : bucket) out.errors.push_back(std::move(error));
  }
  return out;
}

std::string canonical_serialize(const std::vector<MqmError>& errors) {
  const std::array<ErrorSeverity, 3> order = {
      ErrorSeverity::kCritical, ErrorSeverity::kMajor, ErrorSeverity::kMinor};
  const std::array<std::string_view, 3> headers = {"Critical:", "Major:",
                                                   "Minor:"};
  std::string out;
  for (size_t s = 0; s < order.size(); ++s) {
    if (s > 0) out += '\n';
    out += headers[s];
    bool any = false;
    for (const auto& error : errors) {
      if (error.severity() != order[s] ||
          error.error_class() == ErrorClass::kNoError) {
        continue;
      }
      any = true;
      out += '\n';
      out += to_string(error.error_class());
      if (error.subclass()) {
        out += '/';
        out += *error.subclass();
      }
      if (error.span()) {
        out += " - \"";
        out += *error.span();
        out += '"';
      }
    }
    if (!any) out += "\nno-error";
  }
  return out;
}

}  // namespace gemba::mqm
