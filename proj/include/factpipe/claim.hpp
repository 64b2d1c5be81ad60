#pragma once

// Domain types for claims, FOL predicates and verdicts, plus the parser for
// the decomposition output grammar. All types are immutable value objects
// once constructed; parsing is pure.

#include <cctype>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "factpipe/errors.hpp"
#include "factpipe/json_util.hpp"
#include "factpipe/util.hpp"

namespace factpipe {

enum class Dataset { HoVer, FEVEROUS, SciFactOpen, AdHoc };

// Binary label carried by subclaim verdicts and dataset gold labels.
enum class Label { Supported, NotSupported };

// Claim-level label. NoVerifiableContent is the empty-conjunction case:
// every subclaim was filtered out, so neither Supported nor NotSupported
// would be honest.
enum class ClaimLabel { Supported, NotSupported, NoVerifiableContent };

enum class Verifiability { Verifiable, NonVerifiable, Unclassified };

struct Claim {
  std::string id;
  std::string text;
  std::optional<Dataset> origin_dataset;
  std::optional<Label> gold_label;
};

// One atomic assertion P(t1, ..., tn) with its natural-language goal.
struct FolPredicate {
  std::string name;
  std::vector<std::string> args;
  std::string verification_goal;
  std::string raw_line;

  bool operator==(const FolPredicate&) const = default;
};

struct SubclaimRef {
  std::string claim_id;
  int index = 0;

  bool operator==(const SubclaimRef&) const = default;
};

struct Subclaim {
  std::string claim_id;
  int index = 0;
  FolPredicate predicate;
  Verifiability verifiability = Verifiability::Unclassified;
  std::optional<std::string> classifier_explanation;

  SubclaimRef ref() const { return SubclaimRef{claim_id, index}; }
};

struct SubclaimVerdict {
  SubclaimRef subclaim_ref;
  Label label = Label::NotSupported;
  std::string explanation;

  bool operator==(const SubclaimVerdict&) const = default;
};

struct ClaimVerdict {
  std::string claim_id;
  ClaimLabel label = ClaimLabel::NoVerifiableContent;
  std::vector<SubclaimVerdict> subclaim_verdicts;
  std::string composite_explanation;
};

// --- enum <-> string ---

inline std::string to_string(Label v) {
  return v == Label::Supported ? "supported" : "not_supported";
}

inline std::string to_string(ClaimLabel v) {
  switch (v) {
    case ClaimLabel::Supported: return "supported";
    case ClaimLabel::NotSupported: return "not_supported";
    default: return "no_verifiable_content";
  }
}

inline std::string to_string(Verifiability v) {
  switch (v) {
    case Verifiability::Verifiable: return "verifiable";
    case Verifiability::NonVerifiable: return "non_verifiable";
    default: return "unclassified";
  }
}

inline std::string to_string(Dataset d) {
  switch (d) {
    case Dataset::HoVer: return "HoVer";
    case Dataset::FEVEROUS: return "FEVEROUS";
    case Dataset::SciFactOpen: return "SciFactOpen";
    default: return "AdHoc";
  }
}

inline std::optional<Dataset> parse_dataset(std::string_view s) {
  std::string key;
  for (char c : s) {
    if (c == '-' || c == '_' || c == ' ') continue;
    key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (key == "hover") return Dataset::HoVer;
  if (key == "feverous") return Dataset::FEVEROUS;
  if (key == "scifact" || key == "scifactopen") return Dataset::SciFactOpen;
  if (key == "adhoc") return Dataset::AdHoc;
  return std::nullopt;
}

// Dataset gold-label strings accepted by the loaders. NOT_SUPPORTED covers
// the HoVer convention; SUPPORTS/REFUTES the FEVER family; CONTRADICT the
// SciFact one.
inline std::optional<Label> parse_gold_label(std::string_view s) {
  std::string key = to_lower(trim(s));
  for (char& c : key) {
    if (c == '-' || c == ' ') c = '_';
  }
  if (key == "supported" || key == "supports" || key == "support" || key == "true") {
    return Label::Supported;
  }
  if (key == "not_supported" || key == "refuted" || key == "refutes" || key == "contradict" ||
      key == "contradicts" || key == "false") {
    return Label::NotSupported;
  }
  return std::nullopt;
}

inline std::optional<ClaimLabel> parse_claim_label(std::string_view s) {
  std::string key = to_lower(trim(s));
  if (key == "supported") return ClaimLabel::Supported;
  if (key == "not_supported") return ClaimLabel::NotSupported;
  if (key == "no_verifiable_content") return ClaimLabel::NoVerifiableContent;
  return std::nullopt;
}

inline std::optional<Verifiability> parse_verifiability(std::string_view s) {
  std::string key = to_lower(trim(s));
  if (key == "verifiable") return Verifiability::Verifiable;
  if (key == "non_verifiable") return Verifiability::NonVerifiable;
  if (key == "unclassified") return Verifiability::Unclassified;
  return std::nullopt;
}

// --- parsing ---

inline bool is_valid_predicate_name(std::string_view name) {
  if (name.empty()) return false;
  auto head = static_cast<unsigned char>(name.front());
  if (!std::isalpha(head) && name.front() != '_') return false;
  for (char c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

// Parses one `Name(arg1, arg2, ...) ::: verification goal` line. Arguments
// split on commas at parenthesis depth 0 only; nested parentheses are
// rejected. All fields are trimmed, raw_line is kept verbatim.
inline FolPredicate parse_predicate_line(const std::string& line) {
  static constexpr std::string_view kDelimiter = " ::: ";
  auto delim = line.find(kDelimiter);
  if (delim == std::string::npos) {
    throw MalformedPredicate("missing ' ::: ' delimiter", line);
  }

  std::string head = trim(std::string_view(line).substr(0, delim));
  std::string goal = trim(std::string_view(line).substr(delim + kDelimiter.size()));
  if (goal.empty()) throw MalformedPredicate("empty verification goal", line);

  auto open = head.find('(');
  if (open == std::string::npos || head.empty() || head.back() != ')') {
    throw MalformedPredicate("predicate is not of the form Name(...)", line);
  }

  std::string name = trim(std::string_view(head).substr(0, open));
  if (!is_valid_predicate_name(name)) {
    throw MalformedPredicate("invalid predicate name '" + name + "'", line);
  }

  std::string_view inner = std::string_view(head).substr(open + 1, head.size() - open - 2);
  if (inner.find('(') != std::string_view::npos || inner.find(')') != std::string_view::npos) {
    throw MalformedPredicate("nested parentheses in argument list", line);
  }

  std::vector<std::string> args;
  std::size_t start = 0;
  while (true) {
    auto comma = inner.find(',', start);
    auto piece = comma == std::string_view::npos ? inner.substr(start)
                                                 : inner.substr(start, comma - start);
    std::string arg = trim(piece);
    if (arg.empty()) throw MalformedPredicate("empty argument", line);
    args.push_back(std::move(arg));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }

  return FolPredicate{std::move(name), std::move(args), std::move(goal), line};
}

struct DecompositionParse {
  std::vector<FolPredicate> predicates;
  std::vector<std::string> malformed_lines;
};

namespace detail {

inline DecompositionParse parse_predicate_lines(std::string_view body, bool lenient) {
  DecompositionParse out;
  bool first_content_line = true;
  for (auto& line : split_lines(body)) {
    std::string candidate = trim(line);
    if (candidate.empty()) continue;
    if (first_content_line) {
      first_content_line = false;
      if (auto pos = ifind(candidate, "predicates:"); pos == 0) {
        candidate = trim(std::string_view(candidate).substr(11));
        if (candidate.empty()) continue;
      }
    }
    // In lenient mode (no JSON envelope) prose lines are skipped instead of
    // being reported as malformed.
    if (lenient && candidate.find(" ::: ") == std::string::npos) continue;
    try {
      out.predicates.push_back(parse_predicate_line(candidate));
    } catch (const MalformedPredicate&) {
      out.malformed_lines.push_back(candidate);
    }
  }
  return out;
}

}  // namespace detail

// Pulls the decomposition out of a raw LLM reply: locates the JSON envelope
// (tolerating fences and prose), takes its "response" string, strips the
// "Predicates:" header and parses each non-blank line. Without a JSON
// envelope the reply itself is scanned for predicate lines; if that also
// yields nothing the reply is unusable.
inline DecompositionParse parse_decomposition_response(const std::string& response_text) {
  std::optional<std::string> body;
  try {
    Json j = extract_json_object(response_text);
    if (j.is_object() && j.contains("response") && j["response"].is_string()) {
      body = j["response"].get<std::string>();
    }
  } catch (const NoJsonFound&) {
  }

  if (body) return detail::parse_predicate_lines(*body, /*lenient=*/false);

  auto parsed = detail::parse_predicate_lines(response_text, /*lenient=*/true);
  if (parsed.predicates.empty()) {
    throw DecompositionParseError("no parseable JSON and no parseable predicate lines");
  }
  return parsed;
}

// --- aggregation ---

// Conjunction over subclaim labels; the empty conjunction is reported as
// NoVerifiableContent instead of vacuous truth.
inline ClaimLabel aggregate_labels(std::span<const Label> labels) {
  if (labels.empty()) return ClaimLabel::NoVerifiableContent;
  for (Label l : labels) {
    if (l == Label::NotSupported) return ClaimLabel::NotSupported;
  }
  return ClaimLabel::Supported;
}

inline ClaimLabel aggregate_verdicts(const std::vector<SubclaimVerdict>& verdicts) {
  std::vector<Label> labels;
  labels.reserve(verdicts.size());
  for (const auto& v : verdicts) labels.push_back(v.label);
  return aggregate_labels(labels);
}

// --- canonical JSON form (snake_case fields) ---

inline void to_json(Json& j, const FolPredicate& p) {
  j = Json{{"name", p.name},
           {"args", p.args},
           {"verification_goal", p.verification_goal},
           {"raw_line", p.raw_line}};
}

inline void from_json(const Json& j, FolPredicate& p) {
  j.at("name").get_to(p.name);
  j.at("args").get_to(p.args);
  j.at("verification_goal").get_to(p.verification_goal);
  j.at("raw_line").get_to(p.raw_line);
}

inline void to_json(Json& j, const SubclaimRef& r) {
  j = Json{{"claim_id", r.claim_id}, {"index", r.index}};
}

inline void from_json(const Json& j, SubclaimRef& r) {
  j.at("claim_id").get_to(r.claim_id);
  j.at("index").get_to(r.index);
}

inline void to_json(Json& j, const Subclaim& s) {
  j = Json{{"claim_id", s.claim_id},
           {"index", s.index},
           {"predicate", s.predicate},
           {"verifiability", to_string(s.verifiability)},
           {"classifier_explanation",
            s.classifier_explanation ? Json(*s.classifier_explanation) : Json(nullptr)}};
}

inline void from_json(const Json& j, Subclaim& s) {
  j.at("claim_id").get_to(s.claim_id);
  j.at("index").get_to(s.index);
  j.at("predicate").get_to(s.predicate);
  s.verifiability = parse_verifiability(j.at("verifiability").get<std::string>())
                        .value_or(Verifiability::Unclassified);
  if (j.contains("classifier_explanation") && !j["classifier_explanation"].is_null()) {
    s.classifier_explanation = j["classifier_explanation"].get<std::string>();
  } else {
    s.classifier_explanation.reset();
  }
}

inline void to_json(Json& j, const SubclaimVerdict& v) {
  j = Json{{"subclaim_ref", v.subclaim_ref},
           {"label", to_string(v.label)},
           {"explanation", v.explanation}};
}

inline void from_json(const Json& j, SubclaimVerdict& v) {
  j.at("subclaim_ref").get_to(v.subclaim_ref);
  auto label = parse_gold_label(j.at("label").get<std::string>());
  if (!label) throw MalformedResponse("unknown subclaim label: " + j["label"].dump());
  v.label = *label;
  j.at("explanation").get_to(v.explanation);
}

inline void to_json(Json& j, const ClaimVerdict& v) {
  j = Json{{"claim_id", v.claim_id},
           {"label", to_string(v.label)},
           {"subclaim_verdicts", v.subclaim_verdicts},
           {"composite_explanation", v.composite_explanation}};
}

inline void from_json(const Json& j, ClaimVerdict& v) {
  j.at("claim_id").get_to(v.claim_id);
  auto label = parse_claim_label(j.at("label").get<std::string>());
  if (!label) throw MalformedResponse("unknown claim label: " + j["label"].dump());
  v.label = *label;
  j.at("subclaim_verdicts").get_to(v.subclaim_verdicts);
  j.at("composite_explanation").get_to(v.composite_explanation);
}

inline void to_json(Json& j, const Claim& c) {
  j = Json{{"id", c.id},
           {"text", c.text},
           {"origin_dataset", c.origin_dataset ? Json(to_string(*c.origin_dataset)) : Json(nullptr)},
           {"gold_label", c.gold_label ? Json(to_string(*c.gold_label)) : Json(nullptr)}};
}

inline void from_json(const Json& j, Claim& c) {
  j.at("id").get_to(c.id);
  j.at("text").get_to(c.text);
  c.origin_dataset.reset();
  if (j.contains("origin_dataset") && !j["origin_dataset"].is_null()) {
    c.origin_dataset = parse_dataset(j["origin_dataset"].get<std::string>());
  }
  c.gold_label.reset();
  if (j.contains("gold_label") && !j["gold_label"].is_null()) {
    c.gold_label = parse_gold_label(j["gold_label"].get<std::string>());
  }
}

}  // namespace factpipe
