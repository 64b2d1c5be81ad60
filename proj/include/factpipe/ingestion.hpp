#pragma once

// Input Ingestion Agent: decompose a claim into FOL subclaims, classify each
// as verifiable or not, and keep only what can be checked against evidence.

#include <string>
#include <utility>
#include <vector>

#include "factpipe/claim.hpp"
#include "factpipe/errors.hpp"
#include "factpipe/llm.hpp"
#include "factpipe/util.hpp"

namespace factpipe {

struct IngestionResult {
  std::string claim_id;
  std::vector<Subclaim> subclaims;
  int dropped_count = 0;
  std::vector<std::string> warnings;
};

namespace detail {

// First token occurrence wins; a "non-" (or "non ") directly before the
// match flips it, since VERIFIABLE is a substring of NON-VERIFIABLE.
inline Verifiability classify_reply_token(const std::string& reply) {
  auto pos = ifind(reply, "verifiable");
  if (pos == std::string::npos) return Verifiability::Unclassified;
  if (pos >= 4) {
    std::string_view before(reply.data() + pos - 4, 4);
    if (iequals(before, "non-") || iequals(before, "non ") || iequals(before, "non_")) {
      return Verifiability::NonVerifiable;
    }
  }
  return Verifiability::Verifiable;
}

}  // namespace detail

// Stateless; safe to call concurrently for distinct subclaims.
class IngestionAgent {
 public:
  explicit IngestionAgent(const LlmGateway& gateway) : gateway_(gateway) {}

  // One decomposition call; subclaims indexed in response order, not yet
  // classified. Malformed predicate lines are reported via `warnings` when
  // the caller provides it.
  std::vector<Subclaim> decompose(const Claim& claim,
                                  std::vector<std::string>* warnings = nullptr) const {
    if (claim.text.empty()) throw Error("claim has empty text");
    std::string reply = gateway_.run(TemplateId::Decomposition, {{"claim", claim.text}});
    DecompositionParse parsed = parse_decomposition_response(reply);
    if (parsed.predicates.empty()) {
      throw EmptyDecomposition("decomposition produced no predicates for claim " + claim.id);
    }
    if (warnings) {
      for (const auto& line : parsed.malformed_lines) {
        warnings->push_back("claim " + claim.id + ": malformed predicate line dropped: " + line);
      }
    }
    std::vector<Subclaim> subclaims;
    subclaims.reserve(parsed.predicates.size());
    for (auto& predicate : parsed.predicates) {
      Subclaim s;
      s.claim_id = claim.id;
      s.index = static_cast<int>(subclaims.size());
      s.predicate = std::move(predicate);
      subclaims.push_back(std::move(s));
    }
    return subclaims;
  }

  // The classifier sees the natural-language verification goal, which is
  // what the prompt's {claim} slot expects.
  Subclaim classify_verifiability(Subclaim subclaim) const {
    std::string reply = gateway_.run(TemplateId::VerifiabilityClassification,
                                     {{"claim", subclaim.predicate.verification_goal}});
    subclaim.verifiability = detail::classify_reply_token(reply);
    subclaim.classifier_explanation = trim(reply);
    if (subclaim.verifiability == Verifiability::Unclassified) {
      throw UnparseableClassification("no VERIFIABLE/NON-VERIFIABLE token in reply for " +
                                      subclaim.claim_id + "#" + std::to_string(subclaim.index));
    }
    return subclaim;
  }

  // Decompose, classify every subclaim, drop the non-verifiable ones.
  // Retained subclaims keep their original order and indices. Classifier
  // failures retain the subclaim (dropping on a parse failure could silently
  // change verdicts) and attach a warning.
  IngestionResult ingest(const Claim& claim) const {
    IngestionResult result;
    result.claim_id = claim.id;
    std::vector<Subclaim> all = decompose(claim, &result.warnings);
    for (auto& subclaim : all) {
      Subclaim classified = std::move(subclaim);
      try {
        classified = classify_verifiability(std::move(classified));
      } catch (const UnparseableClassification& e) {
        result.warnings.push_back(std::string("verifiability unclassified, retained: ") +
                                  e.what());
      }
      if (classified.verifiability == Verifiability::NonVerifiable) {
        ++result.dropped_count;
        continue;
      }
      result.subclaims.push_back(std::move(classified));
    }
    return result;
  }

 private:
  const LlmGateway& gateway_;
};

}  // namespace factpipe
