#pragma once

// Source credibility engine. Domains with a known publisher rating pass a
// category filter; everything else goes through a heuristic fallback score.

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <httplib.h>

#include "factpipe/errors.hpp"
#include "factpipe/json_util.hpp"
#include "factpipe/util.hpp"

namespace factpipe {

enum class Factuality { VeryHigh, High, MostlyFactual, Mixed, Low, VeryLow, Unknown };

enum class Bias {
  LeastBiased,
  LeftCenter,
  RightCenter,
  Left,
  Right,
  ExtremeLeft,
  ExtremeRight,
  ProScience,
  Questionable,
  Satire,
  ConspiracyPseudoscience,
  Unknown
};

enum class RatingSource { MbfcListed, Fallback };

inline constexpr Factuality kAllFactuality[] = {
    Factuality::VeryHigh, Factuality::High, Factuality::MostlyFactual,
    Factuality::Mixed,    Factuality::Low,  Factuality::VeryLow};

inline constexpr Bias kAllBias[] = {
    Bias::LeastBiased,  Bias::LeftCenter, Bias::RightCenter,
    Bias::Left,         Bias::Right,      Bias::ExtremeLeft,
    Bias::ExtremeRight, Bias::ProScience, Bias::Questionable,
    Bias::Satire,       Bias::ConspiracyPseudoscience};

inline std::string to_string(Factuality f) {
  switch (f) {
    case Factuality::VeryHigh: return "very high";
    case Factuality::High: return "high";
    case Factuality::MostlyFactual: return "mostly factual";
    case Factuality::Mixed: return "mixed";
    case Factuality::Low: return "low";
    case Factuality::VeryLow: return "very low";
    case Factuality::Unknown: return "unknown";
  }
  return "unknown";
}

inline std::string to_string(Bias b) {
  switch (b) {
    case Bias::LeastBiased: return "least biased";
    case Bias::LeftCenter: return "left-center";
    case Bias::RightCenter: return "right-center";
    case Bias::Left: return "left";
    case Bias::Right: return "right";
    case Bias::ExtremeLeft: return "extreme left";
    case Bias::ExtremeRight: return "extreme right";
    case Bias::ProScience: return "pro-science";
    case Bias::Questionable: return "questionable";
    case Bias::Satire: return "satire";
    case Bias::ConspiracyPseudoscience: return "conspiracy-pseudoscience";
    case Bias::Unknown: return "unknown";
  }
  return "unknown";
}

namespace detail {

// Category strings compare with '-', '_' and ' ' interchangeable.
inline std::string fold_category(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '-' || c == '_') c = ' ';
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return trim(out);
}

}  // namespace detail

inline Factuality parse_factuality(std::string_view raw) {
  std::string s = detail::fold_category(raw);
  if (s == "very high") return Factuality::VeryHigh;
  if (s == "high") return Factuality::High;
  if (s == "mostly factual") return Factuality::MostlyFactual;
  if (s == "mixed") return Factuality::Mixed;
  if (s == "low") return Factuality::Low;
  if (s == "very low") return Factuality::VeryLow;
  return Factuality::Unknown;
}

inline Bias parse_bias(std::string_view raw) {
  std::string s = detail::fold_category(raw);
  if (s == "least biased") return Bias::LeastBiased;
  if (s == "left center") return Bias::LeftCenter;
  if (s == "right center") return Bias::RightCenter;
  if (s == "left") return Bias::Left;
  if (s == "right") return Bias::Right;
  if (s == "extreme left") return Bias::ExtremeLeft;
  if (s == "extreme right") return Bias::ExtremeRight;
  if (s == "pro science") return Bias::ProScience;
  if (s == "questionable" || s == "questionable source" || s == "questionable sources")
    return Bias::Questionable;
  if (s == "satire") return Bias::Satire;
  if (s == "conspiracy pseudoscience") return Bias::ConspiracyPseudoscience;
  return Bias::Unknown;
}

struct CredibilityRating {
  std::string domain;
  Factuality factuality = Factuality::Unknown;
  Bias bias = Bias::Unknown;
  RatingSource source = RatingSource::Fallback;

  bool operator==(const CredibilityRating&) const = default;
};

inline void to_json(Json& j, const CredibilityRating& r) {
  j = Json{{"domain", r.domain},
           {"factuality", to_string(r.factuality)},
           {"bias", to_string(r.bias)},
           {"source", r.source == RatingSource::MbfcListed ? "mbfc" : "fallback"}};
}

inline void from_json(const Json& j, CredibilityRating& r) {
  r.domain = j.at("domain").get<std::string>();
  r.factuality = parse_factuality(j.at("factuality").get<std::string>());
  r.bias = parse_bias(j.at("bias").get<std::string>());
  r.source = j.value("source", std::string{"fallback"}) == "mbfc" ? RatingSource::MbfcListed
                                                                  : RatingSource::Fallback;
}

// Rating passes iff both categories survive the publisher filter.
inline bool passes_filter(const CredibilityRating& rating) {
  bool factual_ok = rating.factuality == Factuality::VeryHigh ||
                    rating.factuality == Factuality::High ||
                    rating.factuality == Factuality::MostlyFactual;
  bool bias_ok = rating.bias == Bias::LeastBiased || rating.bias == Bias::LeftCenter ||
                 rating.bias == Bias::RightCenter || rating.bias == Bias::ProScience;
  return factual_ok && bias_ok;
}

// Lowercase registrable host: scheme, path, query, fragment, port and a
// leading "www." are stripped. Idempotent.
inline std::string normalize_domain(std::string_view input) {
  std::string s = trim(input);
  auto scheme = s.find("://");
  if (scheme != std::string::npos) s = s.substr(scheme + 3);
  for (char sep : {'/', '?', '#'}) {
    auto pos = s.find(sep);
    if (pos != std::string::npos) s = s.substr(0, pos);
  }
  auto at = s.find('@');
  if (at != std::string::npos) s = s.substr(at + 1);
  auto port = s.find(':');
  if (port != std::string::npos) s = s.substr(0, port);
  s = to_lower(s);
  if (s.rfind("www.", 0) == 0) s = s.substr(4);
  return s;
}

struct FallbackSignal {
  double suffix_score = 0.0;
  std::optional<double> history_score;
  std::optional<double> citation_score;
  double total = 0.0;
};

// History/citation signals are pluggable; the default provider has none, so
// only the suffix contributes.
class DomainSignalProvider {
 public:
  virtual ~DomainSignalProvider() = default;
  virtual std::optional<double> history_score(const std::string& domain) {
    (void)domain;
    return std::nullopt;
  }
  virtual std::optional<double> citation_score(const std::string& domain) {
    (void)domain;
    return std::nullopt;
  }
};

struct FallbackPolicy {
  double threshold = 0.7;
  double gov_edu_score = 1.0;
  double org_score = 0.7;
  double default_score = 0.4;
};

inline double suffix_score(const std::string& domain, const FallbackPolicy& policy = {}) {
  auto ends_with = [&](std::string_view suffix) {
    return domain.size() >= suffix.size() &&
           domain.compare(domain.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".gov") || ends_with(".edu")) return policy.gov_edu_score;
  if (ends_with(".org")) return policy.org_score;
  return policy.default_score;
}

inline std::pair<FallbackSignal, bool> fallback_assess(const std::string& domain,
                                                       DomainSignalProvider& signals,
                                                       const FallbackPolicy& policy = {}) {
  FallbackSignal out;
  out.suffix_score = suffix_score(domain, policy);
  out.history_score = signals.history_score(domain);
  out.citation_score = signals.citation_score(domain);
  double sum = out.suffix_score;
  int n = 1;
  if (out.history_score) {
    sum += *out.history_score;
    ++n;
  }
  if (out.citation_score) {
    sum += *out.citation_score;
    ++n;
  }
  out.total = sum / n;
  return {out, out.total >= policy.threshold};
}

inline std::pair<FallbackSignal, bool> fallback_assess(const std::string& domain,
                                                       const FallbackPolicy& policy = {}) {
  DomainSignalProvider none;
  return fallback_assess(domain, none, policy);
}

struct MbfcRecord {
  std::string factuality;
  std::string bias;
};

class MbfcClient {
 public:
  virtual ~MbfcClient() = default;
  // nullopt means the domain is not listed.
  virtual std::optional<MbfcRecord> lookup(const std::string& domain) = 0;
};

// Local JSON database: {"example.com": {"factuality": "high", "bias": "left-center"}}
class FixtureMbfcClient : public MbfcClient {
 public:
  FixtureMbfcClient() = default;
  explicit FixtureMbfcClient(std::map<std::string, MbfcRecord> db) : db_(std::move(db)) {}

  static std::shared_ptr<FixtureMbfcClient> from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StorageError("cannot open rating fixture: " + path);
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw StorageError("rating fixture is not a JSON object: " + path);
    }
    std::map<std::string, MbfcRecord> db;
    for (auto& [domain, entry] : j.items()) {
      db[normalize_domain(domain)] =
          MbfcRecord{entry.value("factuality", std::string{"unknown"}),
                     entry.value("bias", std::string{"unknown"})};
    }
    return std::make_shared<FixtureMbfcClient>(std::move(db));
  }

  void add(const std::string& domain, MbfcRecord record) {
    db_[normalize_domain(domain)] = std::move(record);
  }

  std::optional<MbfcRecord> lookup(const std::string& domain) override {
    auto it = db_.find(domain);
    if (it == db_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::map<std::string, MbfcRecord> db_;
};

// GET {base_url}?domain=<domain>; 404 means unlisted; API key read from the
// environment at call time.
class HttpMbfcClient : public MbfcClient {
 public:
  explicit HttpMbfcClient(std::string base_url, std::string api_key_env_var = "MBFC_API_KEY")
      : base_url_(std::move(base_url)), api_key_env_var_(std::move(api_key_env_var)) {}

  std::optional<MbfcRecord> lookup(const std::string& domain) override {
    auto scheme_end = base_url_.find("://");
    if (scheme_end == std::string::npos)
      throw ConfigError("rating endpoint missing scheme: " + base_url_);
    auto path_begin = base_url_.find('/', scheme_end + 3);
    std::string origin =
        path_begin == std::string::npos ? base_url_ : base_url_.substr(0, path_begin);
    std::string path = path_begin == std::string::npos ? "/" : base_url_.substr(path_begin);

    httplib::Client client(origin);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(std::chrono::seconds(10));
    httplib::Headers headers;
    if (const char* key = std::getenv(api_key_env_var_.c_str())) {
      if (*key) headers.emplace("X-Api-Key", key);
    }
    std::string sep = path.find('?') == std::string::npos ? "?" : "&";
    auto result =
        client.Get(path + sep + "domain=" + httplib::detail::encode_query_param(domain), headers);
    if (!result) throw TransportError("rating endpoint unreachable: " + httplib::to_string(result.error()));
    if (result->status == 404) return std::nullopt;
    if (result->status == 401 || result->status == 403)
      throw AuthFailure("rating endpoint rejected credentials (HTTP " +
                        std::to_string(result->status) + ")");
    if (result->status >= 400)
      throw TransportError("rating endpoint error (HTTP " + std::to_string(result->status) + ")");
    Json j = Json::parse(result->body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("factuality") || !j.contains("bias")) {
      throw MalformedResponse("rating endpoint returned an unexpected body for " + domain);
    }
    return MbfcRecord{j["factuality"].get<std::string>(), j["bias"].get<std::string>()};
  }

 private:
  std::string base_url_;
  std::string api_key_env_var_;
};

// Wraps a live client and captures lookups in the fixture-file shape.
class RecordingMbfcClient : public MbfcClient {
 public:
  explicit RecordingMbfcClient(std::shared_ptr<MbfcClient> inner) : inner_(std::move(inner)) {}

  std::optional<MbfcRecord> lookup(const std::string& domain) override {
    auto record = inner_->lookup(domain);
    std::lock_guard lock(mutex_);
    if (record) listed_[domain] = *record;
    else unlisted_.push_back(domain);
    return record;
  }

  void save(const std::string& path) const {
    std::lock_guard lock(mutex_);
    Json j = Json::object();
    for (const auto& [domain, record] : listed_) {
      j[domain] = Json{{"factuality", record.factuality}, {"bias", record.bias}};
    }
    std::ofstream out(path);
    if (!out) throw StorageError("cannot write rating fixture: " + path);
    out << j.dump(2) << '\n';
  }

 private:
  std::shared_ptr<MbfcClient> inner_;
  mutable std::mutex mutex_;
  std::map<std::string, MbfcRecord> listed_;
  std::vector<std::string> unlisted_;
};

// Per-run facade: normalizes, caches lookups, applies the category filter for
// listed domains and the fallback score otherwise. Malformed replies degrade
// to the fallback path with a warning instead of failing the run.
class CredibilityEngine {
 public:
  explicit CredibilityEngine(std::shared_ptr<MbfcClient> client,
                             std::shared_ptr<DomainSignalProvider> signals = nullptr,
                             FallbackPolicy policy = {})
      : client_(std::move(client)),
        signals_(signals ? std::move(signals) : std::make_shared<DomainSignalProvider>()),
        policy_(policy) {}

  CredibilityRating lookup(const std::string& raw_domain) {
    std::string domain = normalize_domain(raw_domain);
    {
      std::lock_guard lock(mutex_);
      auto it = cache_.find(domain);
      if (it != cache_.end()) return it->second;
    }
    CredibilityRating rating;
    rating.domain = domain;
    std::optional<std::string> warning;
    try {
      if (auto record = client_->lookup(domain)) {
        rating.factuality = parse_factuality(record->factuality);
        rating.bias = parse_bias(record->bias);
        rating.source = RatingSource::MbfcListed;
        if (rating.factuality == Factuality::Unknown || rating.bias == Bias::Unknown) {
          warning = "unrecognized rating categories for " + domain + " (factuality=\"" +
                    record->factuality + "\", bias=\"" + record->bias + "\")";
        }
      }
    } catch (const MalformedResponse& e) {
      warning = std::string("rating lookup degraded to fallback: ") + e.what();
    }
    std::lock_guard lock(mutex_);
    cache_.emplace(domain, rating);
    if (warning) warnings_.push_back(*warning);
    return rating;
  }

  // Listed ratings go through the category filter; unlisted domains through
  // the fallback score.
  bool is_credible(const std::string& raw_domain) {
    CredibilityRating rating = lookup(raw_domain);
    if (rating.source == RatingSource::MbfcListed) return passes_filter(rating);
    auto [signal, pass] = fallback_assess(rating.domain, *signals_, policy_);
    (void)signal;
    return pass;
  }

  std::vector<std::string> warnings() const {
    std::lock_guard lock(mutex_);
    return warnings_;
  }

  std::size_t cache_size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
  }

 private:
  std::shared_ptr<MbfcClient> client_;
  std::shared_ptr<DomainSignalProvider> signals_;
  FallbackPolicy policy_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, CredibilityRating> cache_;
  std::vector<std::string> warnings_;
};

}  // namespace factpipe
