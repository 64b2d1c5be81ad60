#pragma once

// Web-search client. Wire shape is the Serper-style POST body
// {"q","num","gl","tbs"}; the temporal bound keeps benchmark runs from
// seeing pages newer than each dataset's construction date.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>

#include "factpipe/claim.hpp"
#include "factpipe/credibility.hpp"
#include "factpipe/errors.hpp"
#include "factpipe/json_util.hpp"
#include "factpipe/util.hpp"

namespace factpipe {

struct Date {
  int year = 0;
  int month = 0;
  int day = 0;

  bool operator==(const Date&) const = default;
};

inline std::string to_iso(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

// Custom-date-range upper bound, e.g. cdr:1,cd_max:10/12/2021
inline std::string format_tbs(const Date& d) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "cdr:1,cd_max:%02d/%02d/%04d", d.month, d.day, d.year);
  return buf;
}

inline Date parse_tbs(const std::string& tbs) {
  int month = 0, day = 0, year = 0;
  if (std::sscanf(tbs.c_str(), "cdr:1,cd_max:%d/%d/%d", &month, &day, &year) != 3) {
    throw FormatError(0, "unrecognized temporal-bound string: " + tbs);
  }
  return Date{year, month, day};
}

// Dataset snapshot cutoffs; ad-hoc claims are unbounded.
inline std::optional<Date> dataset_cutoff(Dataset dataset) {
  switch (dataset) {
    case Dataset::FEVEROUS: return Date{2021, 10, 12};
    case Dataset::HoVer: return Date{2020, 11, 16};
    case Dataset::SciFactOpen: return Date{2020, 10, 3};
    case Dataset::AdHoc: return std::nullopt;
  }
  return std::nullopt;
}

struct SearchRequest {
  std::string query;
  int num_results = 10;
  std::string region = "us";
  std::optional<Date> temporal_bound;
};

struct SearchHit {
  std::string url;
  std::string title;
  std::string snippet;
  int rank = 0;
  std::string domain;

  bool operator==(const SearchHit&) const = default;
};

inline void validate(const SearchRequest& request) {
  if (request.query.empty()) throw Error("search request has an empty query");
  if (request.num_results < 1 || request.num_results > 100) {
    throw Error("num_results out of range: " + std::to_string(request.num_results));
  }
}

inline Json search_request_body(const SearchRequest& request) {
  Json body;
  body["q"] = request.query;
  body["num"] = request.num_results;
  body["gl"] = request.region;
  if (request.temporal_bound) body["tbs"] = format_tbs(*request.temporal_bound);
  return body;
}

// Organic results in array order become ranks 1..n; entries without a link
// are skipped.
inline std::vector<SearchHit> parse_search_response(const Json& body) {
  if (!body.is_object() || !body.contains("organic") || !body["organic"].is_array()) {
    throw MalformedResponse("search reply has no organic results array");
  }
  std::vector<SearchHit> hits;
  for (const auto& entry : body["organic"]) {
    if (!entry.is_object() || !entry.contains("link")) continue;
    SearchHit hit;
    hit.url = entry["link"].get<std::string>();
    hit.title = entry.value("title", std::string{});
    hit.snippet = entry.value("snippet", std::string{});
    hit.rank = static_cast<int>(hits.size()) + 1;
    hit.domain = normalize_domain(hit.url);
    hits.push_back(std::move(hit));
  }
  return hits;
}

inline std::vector<SearchHit> parse_search_response(const std::string& raw) {
  Json body = Json::parse(raw, nullptr, false);
  if (body.is_discarded()) throw MalformedResponse("search reply is not valid JSON");
  return parse_search_response(body);
}

// Hits serialize back to the wire shape so recordings replay through the
// same parser.
inline Json hits_to_wire(const std::vector<SearchHit>& hits) {
  Json organic = Json::array();
  for (const auto& hit : hits) {
    organic.push_back(Json{{"title", hit.title},
                           {"link", hit.url},
                           {"snippet", hit.snippet},
                           {"position", hit.rank}});
  }
  return Json{{"organic", organic}};
}

class SearchClient {
 public:
  virtual ~SearchClient() = default;
  virtual std::vector<SearchHit> search(const SearchRequest& request) = 0;
};

// POST {base_url} with the JSON body above; key read from the environment at
// call time.
class HttpSearchClient : public SearchClient {
 public:
  explicit HttpSearchClient(std::string base_url, std::string api_key_env_var = "SERPER_API_KEY")
      : base_url_(std::move(base_url)), api_key_env_var_(std::move(api_key_env_var)) {}

  std::vector<SearchHit> search(const SearchRequest& request) override {
    validate(request);
    auto scheme_end = base_url_.find("://");
    if (scheme_end == std::string::npos)
      throw ConfigError("search endpoint missing scheme: " + base_url_);
    auto path_begin = base_url_.find('/', scheme_end + 3);
    std::string origin =
        path_begin == std::string::npos ? base_url_ : base_url_.substr(0, path_begin);
    std::string path = path_begin == std::string::npos ? "/" : base_url_.substr(path_begin);

    httplib::Client client(origin);
    client.set_connection_timeout(std::chrono::seconds(15));
    client.set_read_timeout(std::chrono::seconds(15));
    httplib::Headers headers;
    if (const char* key = std::getenv(api_key_env_var_.c_str())) {
      if (*key) headers.emplace("X-API-KEY", key);
    }
    auto result = client.Post(path, headers, search_request_body(request).dump(),
                              "application/json");
    if (!result)
      throw TransportError("search endpoint unreachable: " + httplib::to_string(result.error()));
    if (result->status == 429) throw QuotaExceeded("search quota exhausted (HTTP 429)");
    if (result->status == 401 || result->status == 403)
      throw AuthFailure("search endpoint rejected credentials (HTTP " +
                        std::to_string(result->status) + ")");
    if (result->status >= 400)
      throw TransportError("search endpoint error (HTTP " + std::to_string(result->status) + ")");
    return parse_search_response(result->body);
  }

 private:
  std::string base_url_;
  std::string api_key_env_var_;
};

// Replays canned responses from <dir>/<fnv1a64(query)>.json. A missing file
// is a hard error so incomplete fixture sets surface immediately.
class FixtureSearchClient : public SearchClient {
 public:
  explicit FixtureSearchClient(std::filesystem::path dir) : dir_(std::move(dir)) {}

  static std::string fixture_name(const std::string& query) {
    return fnv1a64_hex(query) + ".json";
  }

  std::vector<SearchHit> search(const SearchRequest& request) override {
    validate(request);
    ++calls_;
    auto path = dir_ / fixture_name(request.query);
    std::ifstream in(path);
    if (!in) {
      throw MockMiss("no search fixture for query \"" + request.query + "\" (expected " +
                     path.string() + ")");
    }
    Json body = Json::parse(in, nullptr, false);
    if (body.is_discarded())
      throw MalformedResponse("search fixture is not valid JSON: " + path.string());
    return parse_search_response(body);
  }

  std::size_t call_count() const { return calls_.load(); }

 private:
  std::filesystem::path dir_;
  std::atomic<std::size_t> calls_{0};
};

class RecordingSearchClient : public SearchClient {
 public:
  RecordingSearchClient(std::shared_ptr<SearchClient> inner, std::filesystem::path dir)
      : inner_(std::move(inner)), dir_(std::move(dir)) {}

  std::vector<SearchHit> search(const SearchRequest& request) override {
    auto hits = inner_->search(request);
    std::lock_guard lock(mutex_);
    std::filesystem::create_directories(dir_);
    auto path = dir_ / FixtureSearchClient::fixture_name(request.query);
    std::ofstream out(path);
    if (!out) throw StorageError("cannot write search fixture: " + path.string());
    out << hits_to_wire(hits).dump(2) << '\n';
    return hits;
  }

 private:
  std::shared_ptr<SearchClient> inner_;
  std::filesystem::path dir_;
  std::mutex mutex_;
};

// Order-preserving credibility filter; rating lookup failures inside the
// engine already degrade to the fallback score.
inline std::vector<SearchHit> select_credible(const std::vector<SearchHit>& hits,
                                              CredibilityEngine& engine) {
  std::vector<SearchHit> kept;
  for (const auto& hit : hits) {
    if (engine.is_credible(hit.domain)) kept.push_back(hit);
  }
  return kept;
}

}  // namespace factpipe
