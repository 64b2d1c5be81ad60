#pragma once

// Verdict Prediction Agent: per-subclaim judgment over the gathered evidence
// cell, plus claim-level composition.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "factpipe/claim.hpp"
#include "factpipe/errors.hpp"
#include "factpipe/evidence.hpp"
#include "factpipe/json_util.hpp"
#include "factpipe/llm.hpp"

namespace factpipe {

inline constexpr std::string_view kNoEvidenceSentinel = "NO RELEVANT EVIDENCE RETRIEVED";
inline constexpr std::string_view kInsufficiencyExplanation =
    "No relevant evidence could be retrieved for this subclaim, so it cannot be "
    "verified and is treated as not supported.";

struct CellEntry {
  std::string query;
  std::string url;
  std::optional<std::string> passage;
  std::string credibility_summary;

  bool operator==(const CellEntry&) const = default;
};

struct EvidenceCell {
  SubclaimRef ref;
  std::string subclaim_line;
  std::vector<CellEntry> entries;

  bool operator==(const EvidenceCell&) const = default;
};

inline std::string summarize(const CredibilityRating& rating) {
  if (rating.source == RatingSource::MbfcListed) {
    return "listed: factuality " + to_string(rating.factuality) + ", bias " +
           to_string(rating.bias);
  }
  return "fallback-scored domain";
}

// Records keep their gathering order (one per query with the default
// configuration); foreign records are rejected rather than skipped.
inline EvidenceCell build_cell(const Subclaim& subclaim,
                               const std::vector<EvidenceRecord>& records) {
  EvidenceCell cell;
  cell.ref = subclaim.ref();
  cell.subclaim_line = subclaim.predicate.raw_line;
  for (const auto& record : records) {
    if (!(record.subclaim == subclaim.ref())) {
      throw Error("evidence record for " + record.subclaim.claim_id + "#" +
                  std::to_string(record.subclaim.index) + " passed to subclaim " +
                  subclaim.claim_id + "#" + std::to_string(subclaim.index));
    }
    cell.entries.push_back(CellEntry{record.query, record.url, record.passage,
                                     summarize(record.credibility)});
  }
  return cell;
}

// Deterministic serialization: insertion-ordered fields, indent 2. This exact
// string is the {cell} binding, so it also keys fixtures.
inline std::string render_cell(const EvidenceCell& cell) {
  Json j;
  j["subclaim"] = cell.subclaim_line;
  Json entries = Json::array();
  for (const auto& entry : cell.entries) {
    entries.push_back(Json{
        {"query", entry.query},
        {"url", entry.url},
        {"evidence", entry.passage ? Json(*entry.passage) : Json(std::string(kNoEvidenceSentinel))},
        {"source_credibility", entry.credibility_summary}});
  }
  j["evidence"] = entries;
  return j.dump(2);
}

inline SubclaimVerdict parse_verdict_reply(const SubclaimRef& ref, const std::string& reply) {
  Json j;
  try {
    j = extract_json_object(reply);
  } catch (const NoJsonFound&) {
    throw VerdictParseError("verdict reply contains no JSON object");
  }
  if (!j.is_object() || !j.contains("label") || !j["label"].is_string()) {
    throw VerdictParseError("verdict reply has no string \"label\" field");
  }
  std::string raw = to_lower(trim(j["label"].get<std::string>()));
  for (char& c : raw) {
    if (c == ' ' || c == '-') c = '_';
  }
  SubclaimVerdict verdict;
  verdict.subclaim_ref = ref;
  if (raw == "supported") verdict.label = Label::Supported;
  else if (raw == "not_supported") verdict.label = Label::NotSupported;
  else throw VerdictParseError("unrecognized verdict label \"" + raw + "\"");
  if (j.contains("explanation") && j["explanation"].is_string()) {
    verdict.explanation = j["explanation"].get<std::string>();
  }
  return verdict;
}

class VerdictAgent {
 public:
  explicit VerdictAgent(const LlmGateway& gateway) : gateway_(gateway) {}

  // Empty cells short-circuit to NotSupported without a model call: with
  // nothing retrieved there is nothing to vote on.
  SubclaimVerdict judge_subclaim(const Claim& claim, const EvidenceCell& cell) const {
    if (cell.entries.empty()) {
      return SubclaimVerdict{cell.ref, Label::NotSupported,
                             std::string(kInsufficiencyExplanation)};
    }
    std::string reply = gateway_.run(TemplateId::VerdictPrediction,
                                     {{"claim", claim.text}, {"cell", render_cell(cell)}});
    return parse_verdict_reply(cell.ref, reply);
  }

 private:
  const LlmGateway& gateway_;
};

// Conjunction over subclaim labels; the composite explanation lists each
// predicate line with its verdict in index order.
inline ClaimVerdict compose_claim_verdict(const Claim& claim,
                                          const std::vector<Subclaim>& subclaims,
                                          std::vector<SubclaimVerdict> verdicts) {
  ClaimVerdict out;
  out.claim_id = claim.id;
  out.label = aggregate_verdicts(verdicts);
  out.subclaim_verdicts = std::move(verdicts);

  if (out.subclaim_verdicts.empty()) {
    out.composite_explanation =
        "The claim contains no externally verifiable factual assertions, so no "
        "verdict can be grounded in evidence.";
    return out;
  }
  std::string text;
  for (const auto& verdict : out.subclaim_verdicts) {
    std::string line;
    for (const auto& subclaim : subclaims) {
      if (subclaim.ref() == verdict.subclaim_ref) {
        line = subclaim.predicate.raw_line;
        break;
      }
    }
    if (!text.empty()) text += "\n\n";
    text += "[" + to_string(verdict.label) + "] " + line;
    if (!verdict.explanation.empty()) text += "\n" + verdict.explanation;
  }
  out.composite_explanation = std::move(text);
  return out;
}

}  // namespace factpipe
