#pragma once

// Evidence gathering and the append-only per-run repository. One record per
// (query, credible source); passage may be absent when the page said nothing
// relevant.

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "factpipe/claim.hpp"
#include "factpipe/credibility.hpp"
#include "factpipe/errors.hpp"
#include "factpipe/fetch.hpp"
#include "factpipe/json_util.hpp"
#include "factpipe/llm.hpp"
#include "factpipe/search.hpp"

namespace factpipe {

struct EvidenceRecord {
  SubclaimRef subclaim;
  std::string query;
  std::string url;
  std::string domain;
  CredibilityRating credibility;
  std::optional<std::string> passage;
  std::int64_t retrieved_at_ms = 0;
  std::string content_hash;

  bool operator==(const EvidenceRecord&) const = default;
};

inline void to_json(Json& j, const EvidenceRecord& r) {
  j = Json{{"claim_id", r.subclaim.claim_id},
           {"subclaim_index", r.subclaim.index},
           {"query", r.query},
           {"url", r.url},
           {"domain", r.domain},
           {"credibility", r.credibility},
           {"passage", r.passage ? Json(*r.passage) : Json(nullptr)},
           {"retrieved_at_ms", r.retrieved_at_ms},
           {"content_hash", r.content_hash}};
}

inline void from_json(const Json& j, EvidenceRecord& r) {
  r.subclaim.claim_id = j.at("claim_id").get<std::string>();
  r.subclaim.index = j.at("subclaim_index").get<int>();
  r.query = j.at("query").get<std::string>();
  r.url = j.at("url").get<std::string>();
  r.domain = j.at("domain").get<std::string>();
  r.credibility = j.at("credibility").get<CredibilityRating>();
  r.passage = j.at("passage").is_null()
                  ? std::nullopt
                  : std::optional<std::string>(j.at("passage").get<std::string>());
  r.retrieved_at_ms = j.at("retrieved_at_ms").get<std::int64_t>();
  r.content_hash = j.value("content_hash", std::string{});
}

// One JSONL file per run under data_dir/<run_id>/evidence.jsonl. Append-only;
// load returns records in append order and round-trips every field.
class EvidenceStore {
 public:
  explicit EvidenceStore(std::filesystem::path data_dir) : data_dir_(std::move(data_dir)) {}

  std::filesystem::path run_dir(const std::string& run_id) const { return data_dir_ / run_id; }
  std::filesystem::path run_file(const std::string& run_id) const {
    return run_dir(run_id) / "evidence.jsonl";
  }

  void append(const std::string& run_id, const EvidenceRecord& record) {
    std::lock_guard lock(mutex_);
    std::error_code ec;
    std::filesystem::create_directories(run_dir(run_id), ec);
    if (ec) throw StorageError("cannot create run directory: " + run_dir(run_id).string());
    std::ofstream out(run_file(run_id), std::ios::app);
    if (!out) throw StorageError("cannot open evidence file: " + run_file(run_id).string());
    out << Json(record).dump() << '\n';
    if (!out) throw StorageError("write failed: " + run_file(run_id).string());
  }

  std::vector<EvidenceRecord> load_all(const std::string& run_id) const {
    std::lock_guard lock(mutex_);
    std::vector<EvidenceRecord> records;
    std::ifstream in(run_file(run_id));
    if (!in) return records;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
      ++line_number;
      if (trim(line).empty()) continue;
      Json j = Json::parse(line, nullptr, false);
      if (j.is_discarded()) {
        throw StorageError("corrupt evidence line " + std::to_string(line_number) + " in " +
                           run_file(run_id).string());
      }
      records.push_back(j.get<EvidenceRecord>());
    }
    return records;
  }

 private:
  std::filesystem::path data_dir_;
  mutable std::mutex mutex_;
};

// Second extraction stage: ask the model for the relevant sentences of a
// fetched page. A literal "None" reply means nothing relevant.
inline std::optional<std::string> extract_relevant(const LlmGateway& gateway,
                                                   const std::string& query,
                                                   const std::string& content) {
  if (content.empty()) throw Error("extract_relevant called with empty content");
  std::string reply = trim(gateway.run(TemplateId::ContentRetrieval,
                                       {{"query", query}, {"content", content}}));
  if (iequals(reply, "none") || iequals(reply, "none.")) return std::nullopt;
  return reply;
}

struct GatherConfig {
  int num_results = 10;
  std::string region = "us";
  std::optional<Date> temporal_bound;
  // Sources taken per query, top-ranked first.
  int top_m = 1;
  FetchBudget budget;
};

struct GatherOutcome {
  std::vector<EvidenceRecord> records;
  std::vector<std::string> diagnostics;
  int hits = 0;
  int credible_hits = 0;
};

// Per query: search, keep credible hits, fetch the top-ranked one(s), extract
// the relevant passage. A bad query logs a diagnostic instead of failing the
// subclaim. Timestamps are assigned later, at persist time.
inline GatherOutcome gather_evidence(const SubclaimRef& ref,
                                     const std::vector<std::string>& queries,
                                     SearchClient& search_client, CredibilityEngine& credibility,
                                     PageFetcher& fetcher, const LlmGateway& gateway,
                                     const GatherConfig& config = {}) {
  if (queries.empty()) throw Error("gather_evidence called with no queries");
  GatherOutcome out;
  for (const auto& query : queries) {
    std::vector<SearchHit> credible;
    try {
      SearchRequest request;
      request.query = query;
      request.num_results = config.num_results;
      request.region = config.region;
      request.temporal_bound = config.temporal_bound;
      auto hits = search_client.search(request);
      out.hits += static_cast<int>(hits.size());
      credible = select_credible(hits, credibility);
      out.credible_hits += static_cast<int>(credible.size());
    } catch (const Error& e) {
      out.diagnostics.push_back("query \"" + query + "\": search failed: " + e.what());
      continue;
    }
    if (credible.empty()) {
      out.diagnostics.push_back("query \"" + query + "\": no credible sources");
      continue;
    }
    int take = std::min<int>(config.top_m, static_cast<int>(credible.size()));
    for (int i = 0; i < take; ++i) {
      const SearchHit& hit = credible[static_cast<std::size_t>(i)];
      try {
        std::string text = fetch_full_text(hit.url, fetcher, config.budget);
        EvidenceRecord record;
        record.subclaim = ref;
        record.query = query;
        record.url = hit.url;
        record.domain = hit.domain;
        record.credibility = credibility.lookup(hit.domain);
        record.content_hash = fnv1a64_hex(text);
        if (text.empty()) {
          out.diagnostics.push_back("query \"" + query + "\": page has no visible text: " +
                                    hit.url);
        } else {
          record.passage = extract_relevant(gateway, query, text);
        }
        out.records.push_back(std::move(record));
      } catch (const Error& e) {
        out.diagnostics.push_back("query \"" + query + "\": " + e.what());
      }
    }
  }
  return out;
}

}  // namespace factpipe
