#pragma once

// Benchmark harness: dataset loading, stratified sampling, Macro F1,
// credible-link and verifiability accounting, and the explanation-ranking
// judge.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "factpipe/claim.hpp"
#include "factpipe/errors.hpp"
#include "factpipe/json_util.hpp"
#include "factpipe/llm.hpp"
#include "factpipe/orchestrator.hpp"
#include "factpipe/util.hpp"

namespace factpipe {

struct DatasetExample {
  std::string id;
  std::string claim;
  Label gold_label = Label::Supported;
  std::string stratum;

  bool operator==(const DatasetExample&) const = default;
};

// JSONL, one example per line: {"claim": ..., "label": ..., "stratum": ...}.
// Adapters: "text" for claim, "gold_label" for label, and the HoVer-style
// integer "hops" field becomes stratum "N-hop". Missing ids are synthesized
// from the line number.
inline std::vector<DatasetExample> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(0, "cannot open dataset file: " + path);
  std::vector<DatasetExample> examples;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw FormatError(line_number, "line is not a JSON object");
    }
    DatasetExample example;
    if (j.contains("id")) {
      example.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    } else {
      example.id = "ex-" + std::to_string(line_number);
    }
    if (j.contains("claim") && j["claim"].is_string()) {
      example.claim = j["claim"].get<std::string>();
    } else if (j.contains("text") && j["text"].is_string()) {
      example.claim = j["text"].get<std::string>();
    } else {
      throw FormatError(line_number, "missing claim text");
    }
    std::string raw_label;
    if (j.contains("label") && j["label"].is_string()) raw_label = j["label"].get<std::string>();
    else if (j.contains("gold_label") && j["gold_label"].is_string())
      raw_label = j["gold_label"].get<std::string>();
    else throw FormatError(line_number, "missing label");
    auto label = parse_gold_label(raw_label);
    if (!label) throw FormatError(line_number, "unknown label string \"" + raw_label + "\"");
    example.gold_label = *label;
    if (j.contains("stratum") && j["stratum"].is_string()) {
      example.stratum = j["stratum"].get<std::string>();
    } else if (j.contains("hops") && j["hops"].is_number_integer()) {
      example.stratum = std::to_string(j["hops"].get<int>()) + "-hop";
    }
    examples.push_back(std::move(example));
  }
  return examples;
}

// Proportional allocation per (stratum, label) group with largest-remainder
// rounding; members are drawn by seeded shuffle, so a fixed seed gives an
// identical subset. Output preserves dataset order.
inline std::vector<DatasetExample> stratified_sample(const std::vector<DatasetExample>& examples,
                                                     int n, std::uint64_t seed) {
  if (n < 0 || static_cast<std::size_t>(n) > examples.size()) {
    throw Error("sample size " + std::to_string(n) + " out of range for " +
                std::to_string(examples.size()) + " examples");
  }
  if (n == 0) return {};

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    groups[examples[i].stratum + '\x1f' + to_string(examples[i].gold_label)].push_back(i);
  }

  double total = static_cast<double>(examples.size());
  std::vector<std::pair<std::string, int>> quotas;  // (key, base quota)
  std::vector<std::pair<double, std::string>> remainders;
  int assigned = 0;
  for (const auto& [key, members] : groups) {
    double exact = n * static_cast<double>(members.size()) / total;
    int base = static_cast<int>(exact);
    quotas.emplace_back(key, base);
    assigned += base;
    if (exact - base > 0) remainders.emplace_back(exact - base, key);
  }
  // Largest remainder first; ties broken by group key for determinism.
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int seat = 0; seat < n - assigned; ++seat) {
    const std::string& key = remainders[static_cast<std::size_t>(seat)].second;
    for (auto& [qkey, quota] : quotas) {
      if (qkey == key) {
        ++quota;
        break;
      }
    }
  }

  std::vector<std::size_t> chosen;
  for (const auto& [key, quota] : quotas) {
    auto members = groups[key];
    std::mt19937_64 rng(seed ^ fnv1a64(key));
    std::shuffle(members.begin(), members.end(), rng);
    for (int i = 0; i < quota; ++i) chosen.push_back(members[static_cast<std::size_t>(i)]);
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<DatasetExample> out;
  out.reserve(chosen.size());
  for (std::size_t index : chosen) out.push_back(examples[index]);
  return out;
}

// Unweighted mean of per-class F1 over the fixed binary label set; a class
// with an all-zero row contributes F1 = 0.
inline double macro_f1(const std::vector<Label>& predictions, const std::vector<Label>& golds) {
  if (predictions.size() != golds.size()) {
    throw LengthMismatch("predictions/golds length mismatch: " +
                         std::to_string(predictions.size()) + " vs " +
                         std::to_string(golds.size()));
  }
  if (predictions.empty()) throw LengthMismatch("empty prediction set");
  double sum = 0;
  for (Label cls : {Label::Supported, Label::NotSupported}) {
    long long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < golds.size(); ++i) {
      bool predicted = predictions[i] == cls;
      bool actual = golds[i] == cls;
      if (predicted && actual) ++tp;
      else if (predicted) ++fp;
      else if (actual) ++fn;
    }
    long long denom = 2 * tp + fp + fn;
    sum += denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  return sum / 2.0;
}

inline constexpr std::array<std::string_view, 3> kJudgeCriteria = {"Coverage", "Soundness",
                                                                   "Readability"};

struct JudgeRanking {
  // criterion -> method -> rank (1 best, 4 worst).
  std::map<std::string, std::map<std::string, int>> by_criterion;
};

// Pooled mean of the method's rank over every (ranking, criterion) pair.
inline double mar(const std::vector<JudgeRanking>& rankings, const std::string& method) {
  if (rankings.empty()) throw Error("mar over zero rankings");
  double sum = 0;
  int count = 0;
  for (const auto& ranking : rankings) {
    for (const auto& criterion : kJudgeCriteria) {
      auto crit = ranking.by_criterion.find(std::string(criterion));
      if (crit == ranking.by_criterion.end()) {
        throw MissingMethod("ranking lacks criterion " + std::string(criterion));
      }
      auto entry = crit->second.find(method);
      if (entry == crit->second.end()) {
        throw MissingMethod("method " + method + " absent from " + std::string(criterion));
      }
      sum += entry->second;
      ++count;
    }
  }
  return sum / count;
}

struct LabeledExplanation {
  std::string label;
  std::string explanation;
};

// Judge reply shape: {"ranking": {"Coverage": {"1": "<method>", ...}, ...}};
// each criterion must assign ranks 1..4 to exactly the candidate methods.
inline JudgeRanking parse_judge_reply(const std::string& reply,
                                      const std::vector<std::string>& methods) {
  Json j;
  try {
    j = extract_json_object(reply);
  } catch (const NoJsonFound&) {
    throw JudgeParseError("judge reply contains no JSON");
  }
  if (j.contains("ranking")) j = j["ranking"];
  if (!j.is_object()) throw JudgeParseError("judge reply has no ranking object");

  JudgeRanking out;
  for (const auto& criterion : kJudgeCriteria) {
    std::string key(criterion);
    if (!j.contains(key) || !j[key].is_object()) {
      throw JudgeParseError("judge reply lacks criterion block " + key);
    }
    std::map<std::string, int> ranks;
    for (auto& [rank_str, method_json] : j[key].items()) {
      int rank = 0;
      try {
        rank = std::stoi(rank_str);
      } catch (...) {
        throw JudgeParseError("non-numeric rank key \"" + rank_str + "\" in " + key);
      }
      if (!method_json.is_string()) throw JudgeParseError("non-string method in " + key);
      std::string method = method_json.get<std::string>();
      if (ranks.count(method)) {
        throw InvalidPermutation("method " + method + " ranked twice in " + key);
      }
      ranks[method] = rank;
    }
    if (ranks.size() != methods.size()) {
      throw InvalidPermutation("criterion " + key + " ranks " + std::to_string(ranks.size()) +
                               " methods, expected " + std::to_string(methods.size()));
    }
    std::vector<int> seen;
    for (const auto& method : methods) {
      auto it = ranks.find(method);
      if (it == ranks.end()) {
        throw InvalidPermutation("method " + method + " missing from " + key);
      }
      seen.push_back(it->second);
    }
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (seen[i] != static_cast<int>(i) + 1) {
        throw InvalidPermutation("ranks in " + key + " are not a permutation of 1.." +
                                 std::to_string(methods.size()));
      }
    }
    out.by_criterion[key] = std::move(ranks);
  }
  return out;
}

// Builds the judge input JSON (claim plus each method's label/explanation),
// runs the judge prompt, validates the per-criterion permutations.
inline JudgeRanking judge_explanations(
    const LlmGateway& gateway, const std::string& original_claim,
    const std::map<std::string, LabeledExplanation>& explanations) {
  if (explanations.size() != 4) {
    throw Error("explanation judging expects exactly 4 methods, got " +
                std::to_string(explanations.size()));
  }
  Json input;
  input["original_claim"] = original_claim;
  Json methods_json = Json::object();
  std::vector<std::string> methods;
  for (const auto& [method, labeled] : explanations) {
    methods_json[method] =
        Json{{"label", labeled.label}, {"explanation", labeled.explanation}};
    methods.push_back(method);
  }
  input["explanations"] = methods_json;
  std::string reply =
      gateway.run(TemplateId::ExplanationJudge, {{"cell", input.dump(2)}});
  return parse_judge_reply(reply, methods);
}

// --- run report ---

struct BenchResult {
  std::string claim_id;
  std::string stratum;
  Label gold = Label::Supported;
  std::optional<ClaimLabel> predicted;  // nullopt = pipeline error
};

// Scoring collapses NoVerifiableContent to NotSupported (conservative); the
// report counts those cases separately.
inline Label scoring_label(ClaimLabel label) {
  return label == ClaimLabel::Supported ? Label::Supported : Label::NotSupported;
}

struct StratumStats {
  int claims = 0;
  double f1 = 0;
  std::optional<double> baseline;
  std::optional<double> delta;
};

struct Report {
  int claims = 0;
  int errors = 0;
  int no_verifiable_content = 0;
  double overall_f1 = 0;
  std::map<std::string, StratumStats> strata;
  long long subclaims = 0;
  long long dropped = 0;
  double dropped_ratio = 0;
  long long hits = 0;
  long long credible_hits = 0;
  double credible_ratio = 0;
};

namespace detail {

inline double round4(double x) { return std::round(x * 10000.0) / 10000.0; }

}  // namespace detail

inline Report build_report(const std::vector<BenchResult>& results,
                           const std::vector<RunTrace>& traces,
                           const std::map<std::string, double>& baseline = {}) {
  Report report;
  report.claims = static_cast<int>(results.size());

  std::vector<Label> all_preds, all_golds;
  std::map<std::string, std::pair<std::vector<Label>, std::vector<Label>>> per_stratum;
  for (const auto& result : results) {
    if (!result.predicted) {
      ++report.errors;
      continue;
    }
    if (*result.predicted == ClaimLabel::NoVerifiableContent) ++report.no_verifiable_content;
    Label predicted = scoring_label(*result.predicted);
    all_preds.push_back(predicted);
    all_golds.push_back(result.gold);
    auto& [preds, golds] = per_stratum[result.stratum];
    preds.push_back(predicted);
    golds.push_back(result.gold);
  }
  report.overall_f1 = all_preds.empty() ? 0.0 : detail::round4(macro_f1(all_preds, all_golds));
  for (auto& [stratum, vectors] : per_stratum) {
    StratumStats stats;
    stats.claims = static_cast<int>(vectors.first.size());
    stats.f1 = detail::round4(macro_f1(vectors.first, vectors.second));
    auto base = baseline.find(stratum);
    if (base != baseline.end()) {
      stats.baseline = base->second;
      stats.delta = detail::round4(stats.f1 - base->second);
    }
    report.strata[stratum] = stats;
  }

  for (const auto& trace : traces) {
    report.subclaims += trace.counts.subclaims + trace.counts.dropped;
    report.dropped += trace.counts.dropped;
    report.hits += trace.counts.hits;
    report.credible_hits += trace.counts.credible_hits;
  }
  report.dropped_ratio =
      report.subclaims == 0
          ? 0.0
          : detail::round4(static_cast<double>(report.dropped) /
                           static_cast<double>(report.subclaims));
  report.credible_ratio = report.hits == 0
                              ? 0.0
                              : detail::round4(static_cast<double>(report.credible_hits) /
                                               static_cast<double>(report.hits));
  return report;
}

inline void to_json(Json& j, const Report& r) {
  Json strata = Json::object();
  for (const auto& [stratum, stats] : r.strata) {
    Json s{{"claims", stats.claims}, {"macro_f1", stats.f1}};
    if (stats.baseline) {
      s["baseline"] = *stats.baseline;
      s["delta"] = *stats.delta;
    }
    strata[stratum.empty() ? "(none)" : stratum] = s;
  }
  j = Json{{"claims", r.claims},
           {"errors", r.errors},
           {"no_verifiable_content", r.no_verifiable_content},
           {"macro_f1", r.overall_f1},
           {"strata", strata},
           {"verifiability",
            Json{{"subclaims", r.subclaims},
                 {"dropped", r.dropped},
                 {"dropped_ratio", r.dropped_ratio}}},
           {"credible_links",
            Json{{"hits", r.hits},
                 {"credible_hits", r.credible_hits},
                 {"ratio", r.credible_ratio}}}};
}

namespace detail {

inline std::string fixed3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", x);
  return buf;
}

inline std::string signed3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%+.3f", x);
  return buf;
}

}  // namespace detail

// Aligned text table; scores with a baseline render as "0.617 (+0.116)".
inline std::string format_report_text(const Report& report,
                                      const std::string& baseline_name = "baseline") {
  std::vector<std::array<std::string, 4>> rows;
  rows.push_back({"stratum", "claims", "macro_f1", baseline_name});
  for (const auto& [stratum, stats] : report.strata) {
    std::string score = detail::fixed3(stats.f1);
    if (stats.delta) score += " (" + detail::signed3(*stats.delta) + ")";
    rows.push_back({stratum.empty() ? "(none)" : stratum, std::to_string(stats.claims), score,
                    stats.baseline ? detail::fixed3(*stats.baseline) : "-"});
  }
  rows.push_back({"overall", std::to_string(report.claims - report.errors),
                  detail::fixed3(report.overall_f1), "-"});

  std::array<std::size_t, 4> widths{};
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < 4; ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < 4; ++c) {
      out += row[c];
      if (c < 3) out += std::string(widths[c] - row[c].size() + 2, ' ');
    }
    out += '\n';
  }
  out += '\n';
  out += "claims: " + std::to_string(report.claims) + "  errors: " +
         std::to_string(report.errors) + "  no_verifiable_content: " +
         std::to_string(report.no_verifiable_content) + "\n";
  out += "subclaims: " + std::to_string(report.subclaims) + "  dropped: " +
         std::to_string(report.dropped) + "  dropped_ratio: " +
         detail::fixed3(report.dropped_ratio) + "\n";
  out += "hits: " + std::to_string(report.hits) + "  credible_hits: " +
         std::to_string(report.credible_hits) + "  credible_ratio: " +
         detail::fixed3(report.credible_ratio) + "\n";
  return out;
}

}  // namespace factpipe
