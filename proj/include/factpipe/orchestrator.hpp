#pragma once

// Pipeline state machine: Ingestion -> QueryGen -> Evidence -> Verdict per
// claim, with retries, budgets, bounded parallelism and run configuration.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "factpipe/claim.hpp"
#include "factpipe/credibility.hpp"
#include "factpipe/errors.hpp"
#include "factpipe/evidence.hpp"
#include "factpipe/fetch.hpp"
#include "factpipe/ingestion.hpp"
#include "factpipe/json_util.hpp"
#include "factpipe/llm.hpp"
#include "factpipe/query_gen.hpp"
#include "factpipe/search.hpp"
#include "factpipe/verdict.hpp"

namespace factpipe {

// Time source for artifact timestamps. Offline runs use the logical clock so
// artifacts are byte-identical across runs regardless of scheduling.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() = 0;
};

class SystemClock : public Clock {
 public:
  std::int64_t now_ms() override {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  }
};

class LogicalClock : public Clock {
 public:
  explicit LogicalClock(std::int64_t base) : next_(base) {}
  std::int64_t now_ms() override { return next_.fetch_add(1); }

 private:
  std::atomic<std::int64_t> next_;
};

class Semaphore {
 public:
  explicit Semaphore(int count) : count_(count < 1 ? 1 : count) {}

  void acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return count_ > 0; });
    --count_;
  }

  void release() {
    {
      std::lock_guard lock(mutex_);
      ++count_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int count_;
};

// Caps concurrent outstanding fetches across all claims; tracks the peak so
// tests can assert the cap held.
class ThrottledFetcher : public PageFetcher {
 public:
  ThrottledFetcher(std::shared_ptr<PageFetcher> inner, int max_parallel)
      : inner_(std::move(inner)), semaphore_(max_parallel) {}

  FetchedPage fetch(const std::string& url, const FetchBudget& budget) override {
    semaphore_.acquire();
    int now = 1 + in_flight_.fetch_add(1);
    int peak = peak_.load();
    while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
    }
    try {
      FetchedPage page = inner_->fetch(url, budget);
      in_flight_.fetch_sub(1);
      semaphore_.release();
      return page;
    } catch (...) {
      in_flight_.fetch_sub(1);
      semaphore_.release();
      throw;
    }
  }

  int peak_concurrency() const { return peak_.load(); }

 private:
  std::shared_ptr<PageFetcher> inner_;
  Semaphore semaphore_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
};

// Work items run on up to `max_parallel` threads; the callable owns its own
// error handling unless the caller wants the first exception rethrown.
template <typename Fn>
inline void parallel_for(int n, int max_parallel, Fn&& fn) {
  if (n <= 0) return;
  int workers = std::min(max_parallel < 1 ? 1 : max_parallel, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      while (true) {
        int i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct RetryPolicy {
  // Parse-class stage failures (decomposition, query, verdict).
  int parse_retries = 1;
  // Transport-class failures, with backoff.
  int transport_retries = 2;
  BackoffSchedule backoff;
};

struct ParallelismCaps {
  int claims = 4;
  int subclaims = 4;
  int fetches = 8;
};

struct PipelineConfig {
  int k_queries = 3;
  std::optional<Dataset> dataset;
  bool offline_mode = false;
  std::string data_dir = "runs";
  int num_results = 10;
  std::string region = "us";
  int top_m = 1;
  RetryPolicy retry;
  ParallelismCaps parallelism;
  std::chrono::milliseconds claim_timeout{600000};
  double requests_per_second = 0;  // 0 = unlimited
  FetchBudget fetch_budget;
  FallbackPolicy fallback;

  // Live endpoints. The LLM default backend serves every agent role unless
  // a role has its own entry (keys: template names).
  LlmBackendConfig llm;
  std::map<std::string, LlmBackendConfig> llm_roles;
  std::string search_endpoint = "https://google.serper.dev/search";
  std::string mbfc_endpoint;

  // Offline fixtures.
  std::string llm_script_path;
  std::string search_fixture_dir;
  std::string page_fixture_dir;
  std::string mbfc_fixture_path;
};

inline void validate(const PipelineConfig& config) {
  if (config.k_queries < 1 || config.k_queries > 5) {
    throw ConfigError("k_queries must be in [1,5], got " + std::to_string(config.k_queries));
  }
  if (config.num_results < 1 || config.num_results > 100) {
    throw ConfigError("num_results must be in [1,100]");
  }
  if (config.top_m < 1) throw ConfigError("top_m must be >= 1");
  if (config.data_dir.empty()) throw ConfigError("data_dir must be set");
  if (config.offline_mode) {
    if (config.llm_script_path.empty()) {
      throw ConfigError("offline_mode requires llm_script_path");
    }
    if (config.search_fixture_dir.empty()) {
      throw ConfigError("offline_mode requires search_fixture_dir");
    }
    if (config.page_fixture_dir.empty()) {
      throw ConfigError("offline_mode requires page_fixture_dir");
    }
  } else {
    if (config.llm.endpoint_url.empty()) {
      throw ConfigError("live mode requires llm.endpoint_url");
    }
  }
}

inline void from_json(const Json& j, PipelineConfig& c) {
  c = PipelineConfig{};
  if (j.contains("k_queries")) j["k_queries"].get_to(c.k_queries);
  if (j.contains("dataset") && !j["dataset"].is_null()) {
    auto parsed = parse_dataset(j["dataset"].get<std::string>());
    if (!parsed) throw ConfigError("unknown dataset: " + j["dataset"].dump());
    c.dataset = parsed;
  }
  if (j.contains("offline_mode")) j["offline_mode"].get_to(c.offline_mode);
  if (j.contains("data_dir")) j["data_dir"].get_to(c.data_dir);
  if (j.contains("num_results")) j["num_results"].get_to(c.num_results);
  if (j.contains("region")) j["region"].get_to(c.region);
  if (j.contains("top_m")) j["top_m"].get_to(c.top_m);
  if (j.contains("parse_retries")) j["parse_retries"].get_to(c.retry.parse_retries);
  if (j.contains("transport_retries")) j["transport_retries"].get_to(c.retry.transport_retries);
  if (j.contains("claim_timeout_ms"))
    c.claim_timeout = std::chrono::milliseconds(j["claim_timeout_ms"].get<long long>());
  if (j.contains("requests_per_second")) j["requests_per_second"].get_to(c.requests_per_second);
  if (j.contains("max_concurrent_claims")) j["max_concurrent_claims"].get_to(c.parallelism.claims);
  if (j.contains("max_concurrent_subclaims"))
    j["max_concurrent_subclaims"].get_to(c.parallelism.subclaims);
  if (j.contains("max_concurrent_fetches"))
    j["max_concurrent_fetches"].get_to(c.parallelism.fetches);
  if (j.contains("fetch_timeout_s"))
    c.fetch_budget.timeout = std::chrono::seconds(j["fetch_timeout_s"].get<long long>());
  if (j.contains("fetch_max_bytes")) j["fetch_max_bytes"].get_to(c.fetch_budget.max_bytes);
  if (j.contains("fallback_threshold")) j["fallback_threshold"].get_to(c.fallback.threshold);
  if (j.contains("llm")) j["llm"].get_to(c.llm);
  if (j.contains("llm_roles")) {
    for (auto& [role, backend] : j["llm_roles"].items()) {
      c.llm_roles[role] = backend.get<LlmBackendConfig>();
    }
  }
  if (j.contains("search_endpoint")) j["search_endpoint"].get_to(c.search_endpoint);
  if (j.contains("mbfc_endpoint")) j["mbfc_endpoint"].get_to(c.mbfc_endpoint);
  if (j.contains("llm_script_path")) j["llm_script_path"].get_to(c.llm_script_path);
  if (j.contains("search_fixture_dir")) j["search_fixture_dir"].get_to(c.search_fixture_dir);
  if (j.contains("page_fixture_dir")) j["page_fixture_dir"].get_to(c.page_fixture_dir);
  if (j.contains("mbfc_fixture_path")) j["mbfc_fixture_path"].get_to(c.mbfc_fixture_path);
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ConfigError("config file is not a JSON object: " + path);
  }
  PipelineConfig config = j.get<PipelineConfig>();
  validate(config);
  return config;
}

struct TraceCounts {
  int subclaims = 0;
  int dropped = 0;
  int queries = 0;
  int hits = 0;
  int credible_hits = 0;
  int records = 0;
};

struct RunTrace {
  std::string claim_id;
  std::vector<std::pair<std::string, std::int64_t>> stage_ms;
  std::vector<std::string> diagnostics;
  TraceCounts counts;
};

inline void to_json(Json& j, const RunTrace& t) {
  Json stages = Json::object();
  for (const auto& [stage, ms] : t.stage_ms) stages[stage] = ms;
  j = Json{{"claim_id", t.claim_id},
           {"stage_ms", stages},
           {"diagnostics", t.diagnostics},
           {"counts",
            Json{{"subclaims", t.counts.subclaims},
                 {"dropped", t.counts.dropped},
                 {"queries", t.counts.queries},
                 {"hits", t.counts.hits},
                 {"credible_hits", t.counts.credible_hits},
                 {"records", t.counts.records}}}};
}

struct ClaimOutcome {
  Claim claim;
  std::optional<ClaimVerdict> verdict;
  std::optional<std::string> error;
  RunTrace trace;
};

inline void to_json(Json& j, const ClaimOutcome& o) {
  j = Json{{"claim_id", o.claim.id},
           {"verdict", o.verdict ? Json(*o.verdict) : Json(nullptr)},
           {"error", o.error ? Json(*o.error) : Json(nullptr)},
           {"trace", o.trace}};
}

struct PipelineServices {
  std::shared_ptr<LlmGateway> gateway;
  std::shared_ptr<SearchClient> search;
  std::shared_ptr<CredibilityEngine> credibility;
  std::shared_ptr<PageFetcher> fetcher;  // already throttled
  std::shared_ptr<EvidenceStore> store;
  // One clock per claim; offline clocks are logical with disjoint bases so
  // concurrent claims cannot perturb each other's timestamps.
  std::function<std::shared_ptr<Clock>(int claim_index)> clock_for_claim;
};

inline constexpr std::int64_t kLogicalClockBase = 1'700'000'000'000;

inline PipelineServices make_services(const PipelineConfig& config) {
  validate(config);
  PipelineServices services;

  auto gateway = std::make_shared<LlmGateway>();
  if (config.offline_mode) {
    gateway->set_default_backend(MockLlmBackend::from_file(config.llm_script_path));
    services.search = std::make_shared<FixtureSearchClient>(config.search_fixture_dir);
    services.fetcher = std::make_shared<ThrottledFetcher>(
        std::make_shared<FixturePageFetcher>(config.page_fixture_dir),
        config.parallelism.fetches);
    std::shared_ptr<MbfcClient> mbfc =
        config.mbfc_fixture_path.empty()
            ? std::make_shared<FixtureMbfcClient>()
            : FixtureMbfcClient::from_file(config.mbfc_fixture_path);
    services.credibility = std::make_shared<CredibilityEngine>(
        mbfc, std::make_shared<DomainSignalProvider>(), config.fallback);
    services.clock_for_claim = [](int claim_index) {
      return std::make_shared<LogicalClock>(kLogicalClockBase +
                                            static_cast<std::int64_t>(claim_index) * 1'000'000);
    };
  } else {
    gateway->set_default_backend(std::make_shared<HttpLlmBackend>(config.llm));
    for (const auto& [role, backend_config] : config.llm_roles) {
      bool known = false;
      for (TemplateId id : kAllTemplates) {
        if (to_string(id) == role) {
          gateway->set_backend(id, std::make_shared<HttpLlmBackend>(backend_config));
          known = true;
          break;
        }
      }
      if (!known) throw ConfigError("unknown LLM role: " + role);
    }
    services.search = std::make_shared<HttpSearchClient>(config.search_endpoint);
    services.fetcher = std::make_shared<ThrottledFetcher>(std::make_shared<HttpPageFetcher>(),
                                                          config.parallelism.fetches);
    std::shared_ptr<MbfcClient> mbfc =
        config.mbfc_endpoint.empty()
            ? std::static_pointer_cast<MbfcClient>(std::make_shared<FixtureMbfcClient>())
            : std::make_shared<HttpMbfcClient>(config.mbfc_endpoint);
    services.credibility = std::make_shared<CredibilityEngine>(
        mbfc, std::make_shared<DomainSignalProvider>(), config.fallback);
    auto clock = std::make_shared<SystemClock>();
    services.clock_for_claim = [clock](int) { return clock; };
  }
  if (config.requests_per_second > 0) {
    gateway->set_rate_limiter(std::make_shared<TokenBucket>(config.requests_per_second,
                                                            config.requests_per_second));
  }
  services.gateway = gateway;
  services.store = std::make_shared<EvidenceStore>(config.data_dir);
  return services;
}

class Orchestrator {
 public:
  Orchestrator(PipelineConfig config, PipelineServices services)
      : config_(std::move(config)), services_(std::move(services)) {
    validate(config_);
    if (!services_.gateway || !services_.search || !services_.credibility ||
        !services_.fetcher || !services_.store || !services_.clock_for_claim) {
      throw ConfigError("pipeline services incomplete");
    }
  }

  ClaimOutcome run_claim(const Claim& claim, const std::string& run_id, int claim_index = 0) {
    ClaimOutcome outcome;
    outcome.claim = claim;
    outcome.trace.claim_id = claim.id;
    auto clock = services_.clock_for_claim(claim_index);
    auto deadline = std::chrono::steady_clock::now() + config_.claim_timeout;
    try {
      outcome.verdict = run_stages(claim, run_id, *clock, deadline, outcome.trace);
    } catch (const PipelineError& e) {
      outcome.error = e.what();
    } catch (const Error& e) {
      outcome.error = std::string("unclassified pipeline failure: ") + e.what();
    }
    return outcome;
  }

  // Bounded parallelism across claims; output order always matches input
  // order and one claim's failure never aborts the rest.
  std::vector<ClaimOutcome> run_batch(const std::vector<Claim>& claims,
                                      const std::string& run_id) {
    std::vector<ClaimOutcome> outcomes(claims.size());
    parallel_for(static_cast<int>(claims.size()), config_.parallelism.claims, [&](int i) {
      outcomes[static_cast<std::size_t>(i)] =
          run_claim(claims[static_cast<std::size_t>(i)], run_id, i);
    });
    return outcomes;
  }

 private:
  void check_deadline(const char* stage,
                      const std::chrono::steady_clock::time_point& deadline) const {
    if (std::chrono::steady_clock::now() > deadline) {
      throw PipelineError(stage, "claim exceeded the time budget");
    }
  }

  // Retry wrapper: parse-class errors retried parse_retries times,
  // transport-class transport_retries times with backoff; anything else
  // propagates immediately.
  template <typename Fn>
  auto with_retries(Fn&& fn) const -> decltype(fn()) {
    int parse_left = config_.retry.parse_retries;
    int transport_left = config_.retry.transport_retries;
    int transport_attempt = 0;
    while (true) {
      try {
        return fn();
      } catch (const Error& e) {
        if (is_parse_class(e) && parse_left > 0) {
          --parse_left;
          continue;
        }
        if (is_transport_class(e) && transport_left > 0) {
          --transport_left;
          std::this_thread::sleep_for(config_.retry.backoff.delay(transport_attempt++));
          continue;
        }
        throw;
      }
    }
  }

  ClaimVerdict run_stages(const Claim& claim, const std::string& run_id, Clock& clock,
                          const std::chrono::steady_clock::time_point& deadline,
                          RunTrace& trace) {
    IngestionAgent ingestion(*services_.gateway);
    QueryAgent query_agent(*services_.gateway);
    VerdictAgent verdict_agent(*services_.gateway);

    // Stage 1: ingestion.
    std::int64_t t0 = clock.now_ms();
    IngestionResult ingested;
    try {
      ingested = with_retries([&] { return ingestion.ingest(claim); });
    } catch (const Error& e) {
      throw PipelineError("ingestion", e.what());
    }
    trace.counts.subclaims = static_cast<int>(ingested.subclaims.size());
    trace.counts.dropped = ingested.dropped_count;
    for (auto& w : ingested.warnings) trace.diagnostics.push_back(std::move(w));
    trace.stage_ms.emplace_back("ingestion", clock.now_ms() - t0);
    check_deadline("ingestion", deadline);

    if (ingested.subclaims.empty()) {
      trace.stage_ms.emplace_back("query_gen", 0);
      trace.stage_ms.emplace_back("evidence", 0);
      trace.stage_ms.emplace_back("verdict", 0);
      return compose_claim_verdict(claim, {}, {});
    }

    const auto& subclaims = ingested.subclaims;
    int n = static_cast<int>(subclaims.size());

    // Stage 2+3: per-subclaim query generation and evidence gathering fan
    // out together; results land in per-subclaim slots so the merge order is
    // fixed regardless of scheduling.
    GatherConfig gather_config;
    gather_config.num_results = config_.num_results;
    gather_config.region = config_.region;
    if (config_.dataset) gather_config.temporal_bound = dataset_cutoff(*config_.dataset);
    if (claim.origin_dataset) gather_config.temporal_bound = dataset_cutoff(*claim.origin_dataset);
    gather_config.top_m = config_.top_m;
    gather_config.budget = config_.fetch_budget;

    std::vector<QuerySet> query_sets(subclaims.size());
    std::vector<GatherOutcome> gathered(subclaims.size());
    std::vector<std::vector<std::string>> stage_diags(subclaims.size());
    std::int64_t t1 = clock.now_ms();
    parallel_for(n, config_.parallelism.subclaims, [&](int i) {
      const Subclaim& subclaim = subclaims[static_cast<std::size_t>(i)];
      QuerySet& qs = query_sets[static_cast<std::size_t>(i)];
      qs.subclaim_ref = subclaim.ref();
      try {
        qs = with_retries(
            [&] { return query_agent.generate_queries(subclaim, config_.k_queries); });
      } catch (const QueryParseError& e) {
        stage_diags[static_cast<std::size_t>(i)].push_back(
            "subclaim #" + std::to_string(subclaim.index) + ": query generation failed: " +
            e.what());
        return;
      } catch (const EmptyQuerySet& e) {
        stage_diags[static_cast<std::size_t>(i)].push_back(
            "subclaim #" + std::to_string(subclaim.index) + ": query generation failed: " +
            e.what());
        return;
      } catch (const Error& e) {
        throw PipelineError("query_gen", e.what());
      }
      try {
        gathered[static_cast<std::size_t>(i)] = gather_evidence(
            subclaim.ref(), qs.queries, *services_.search, *services_.credibility,
            *services_.fetcher, *services_.gateway, gather_config);
      } catch (const Error& e) {
        throw PipelineError("evidence", e.what());
      }
    });
    std::int64_t t2 = clock.now_ms();
    trace.stage_ms.emplace_back("query_gen", t2 - t1);

    // Persist in subclaim order before any verdict call; timestamps are
    // assigned here, strictly increasing within the claim.
    std::int64_t last_ts = 0;
    for (int i = 0; i < n; ++i) {
      auto& outcome = gathered[static_cast<std::size_t>(i)];
      trace.counts.queries += static_cast<int>(query_sets[static_cast<std::size_t>(i)].queries.size());
      trace.counts.hits += outcome.hits;
      trace.counts.credible_hits += outcome.credible_hits;
      for (auto& diag : stage_diags[static_cast<std::size_t>(i)]) {
        trace.diagnostics.push_back(std::move(diag));
      }
      for (auto& diag : outcome.diagnostics) {
        trace.diagnostics.push_back("subclaim #" +
                                    std::to_string(subclaims[static_cast<std::size_t>(i)].index) +
                                    ": " + diag);
      }
      for (auto& record : outcome.records) {
        std::int64_t ts = clock.now_ms();
        if (ts <= last_ts) ts = last_ts + 1;
        last_ts = ts;
        record.retrieved_at_ms = ts;
        services_.store->append(run_id, record);
        ++trace.counts.records;
      }
    }
    trace.stage_ms.emplace_back("evidence", clock.now_ms() - t2);
    check_deadline("evidence", deadline);

    // Stage 4: verdicts, again fanned out per subclaim. A verdict parse
    // failure after its retry degrades to NotSupported with a diagnostic.
    std::vector<SubclaimVerdict> verdicts(subclaims.size());
    std::vector<std::string> verdict_diags(subclaims.size());
    std::int64_t t3 = clock.now_ms();
    parallel_for(n, config_.parallelism.subclaims, [&](int i) {
      const Subclaim& subclaim = subclaims[static_cast<std::size_t>(i)];
      EvidenceCell cell = build_cell(subclaim, gathered[static_cast<std::size_t>(i)].records);
      try {
        verdicts[static_cast<std::size_t>(i)] =
            with_retries([&] { return verdict_agent.judge_subclaim(claim, cell); });
      } catch (const VerdictParseError& e) {
        verdicts[static_cast<std::size_t>(i)] = SubclaimVerdict{
            subclaim.ref(), Label::NotSupported,
            std::string("verdict reply unparseable after retry; treated as not supported (") +
                e.what() + ")"};
        verdict_diags[static_cast<std::size_t>(i)] =
            "subclaim #" + std::to_string(subclaim.index) + ": " + e.what();
      } catch (const Error& e) {
        throw PipelineError("verdict", e.what());
      }
    });
    for (auto& diag : verdict_diags) {
      if (!diag.empty()) trace.diagnostics.push_back(std::move(diag));
    }
    trace.stage_ms.emplace_back("verdict", clock.now_ms() - t3);
    check_deadline("verdict", deadline);

    return compose_claim_verdict(claim, subclaims, std::move(verdicts));
  }

  PipelineConfig config_;
  PipelineServices services_;
};

}  // namespace factpipe
