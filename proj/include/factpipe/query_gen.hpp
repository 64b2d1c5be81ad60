#pragma once

// Query Generation Agent: k diverse search queries per verifiable subclaim.

#include <string>
#include <unordered_set>
#include <vector>

#include "factpipe/claim.hpp"
#include "factpipe/errors.hpp"
#include "factpipe/json_util.hpp"
#include "factpipe/llm.hpp"
#include "factpipe/util.hpp"

namespace factpipe {

struct QuerySet {
  SubclaimRef subclaim_ref;
  std::vector<std::string> queries;
};

// Reply shape: [{"claim": ..., "questions": [...]}, ...]. The entry whose
// claim matches the subclaim line exactly is used; models paraphrase, so a
// mismatch falls back to array position. Queries are trimmed, deduplicated
// case-insensitively (first occurrence kept) and truncated to k.
inline QuerySet parse_query_reply(const SubclaimRef& ref, const std::string& subclaim_line,
                                  const std::string& reply, int k) {
  Json j;
  try {
    j = extract_json_object(reply);
  } catch (const NoJsonFound&) {
    throw QueryParseError("query reply contains no JSON");
  }
  if (j.is_object()) j = Json::array({j});
  if (!j.is_array() || j.empty()) throw QueryParseError("query reply is not a JSON array");

  const Json* entry = &j[0];
  for (const auto& candidate : j) {
    if (candidate.is_object() && candidate.value("claim", std::string{}) == subclaim_line) {
      entry = &candidate;
      break;
    }
  }
  if (!entry->is_object() || !entry->contains("questions") || !(*entry)["questions"].is_array()) {
    throw QueryParseError("query reply entry has no questions array");
  }

  QuerySet out;
  out.subclaim_ref = ref;
  std::unordered_set<std::string> seen;
  for (const auto& q : (*entry)["questions"]) {
    if (!q.is_string()) continue;
    std::string query = trim(q.get<std::string>());
    if (query.empty()) continue;
    if (!seen.insert(to_lower(query)).second) continue;
    out.queries.push_back(std::move(query));
    if (static_cast<int>(out.queries.size()) == k) break;
  }
  if (out.queries.empty()) throw EmptyQuerySet("no usable questions in query reply");
  return out;
}

class QueryAgent {
 public:
  explicit QueryAgent(const LlmGateway& gateway) : gateway_(gateway) {}

  QuerySet generate_queries(const Subclaim& subclaim, int k) const {
    if (k < 1 || k > 5) throw ConfigError("k out of range: " + std::to_string(k));
    std::string reply = gateway_.run(TemplateId::QueryGeneration,
                                     {{"claim", subclaim.predicate.raw_line},
                                      {"k", std::to_string(k)}});
    return parse_query_reply(subclaim.ref(), subclaim.predicate.raw_line, reply, k);
  }

 private:
  const LlmGateway& gateway_;
};

}  // namespace factpipe
