#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gemba/core.hpp"

namespace gemba::mqm {

// Warning token emitted when a locale-convention line shows up although the
// active prompt variant never offered that class (it is remapped to Other).
inline constexpr std::string_view kLocaleOutsideVariantWarning =
    "locale-class-outside-variant";

// Parse result. When `warnings` is empty the input matched the grammar with
// no recovery, and re-parsing the canonical serialization of `errors` yields
// `errors` again. Errors are grouped Critical, Major, Minor (stable within a
// severity).
struct ParseOutcome {
  std::vector<MqmError> errors;
  std::vector<std::string> warnings;
};

// Outcome of classifying one error line (severity supplied by the caller,
// which tracks the most recent severity header).
struct ClassifiedLine {
  std::optional<MqmError> error;      // set when the line yields an error
  bool no_error_marker = false;       // line was `no-error` / `no error` / `none`
  std::vector<std::string> warnings;  // recovery notes (may accompany an error)
};

// Classifies a single line already stripped of severity context. The class
// is matched case-insensitively; the subclass (after the first `/`) is
// normalized; the span is the quoted region after the ` - ` or `: `
// separator, or the unquoted remainder. Unknown classes on structured lines
// map to Other with a warning; unstructured lines yield only a warning.
ClassifiedLine classify_line(std::string_view line, ErrorSeverity severity,
                             PromptVariant variant);

// Total over arbitrary byte strings: scans for `critical:` / `major:` /
// `minor:` headers and classifies the lines beneath them. Never throws;
// unparseable input yields empty errors plus warnings.
ParseOutcome parse_annotation(std::string_view text, PromptVariant variant);

// Canonical three-header block: Critical/Major/Minor sections, `no-error`
// for empty ones, error lines as `class/subclass - "span"` with absent parts
// omitted. kNoError entries contribute nothing. No trailing newline.
std::string canonical_serialize(const std::vector<MqmError>& errors);

}  // namespace gemba::mqm
