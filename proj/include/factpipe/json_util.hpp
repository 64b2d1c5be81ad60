#pragma once

// JSON alias and tolerant extraction of JSON payloads from LLM replies.

#include <cstddef>
#include <string>
#include <string_view>

#include <json.hpp>

#include "factpipe/errors.hpp"

namespace factpipe {

// Insertion-ordered JSON everywhere: serialized artifacts (evidence records,
// verdicts, reports, prompt cells) must have a stable field order.
using Json = nlohmann::ordered_json;

namespace detail {

// Finds the end (one past the closing brace/bracket) of a balanced JSON
// value starting at `start`, honoring string literals and escapes.
// Returns npos when the text is unbalanced.
inline std::size_t balanced_end(std::string_view text, std::size_t start) {
  char open = text[start];
  char close = open == '{' ? '}' : ']';
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == open) {
      ++depth;
    } else if (c == close) {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

}  // namespace detail

// Returns the first balanced top-level JSON object or array found in `raw`,
// skipping code fences and any surrounding prose. Throws NoJsonFound.
inline Json extract_json_object(std::string_view raw) {
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] != '{' && raw[i] != '[') continue;
    auto end = detail::balanced_end(raw, i);
    if (end == std::string_view::npos) continue;
    Json parsed = Json::parse(raw.substr(i, end - i), nullptr, false);
    if (!parsed.is_discarded()) return parsed;
  }
  throw NoJsonFound("no JSON object or array in reply");
}

}  // namespace factpipe
