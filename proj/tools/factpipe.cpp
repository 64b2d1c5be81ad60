// Command-line front end: single-claim checks, batch benchmark runs,
// evidence inspection, and live-run fixture recording.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "factpipe/factpipe.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 2;
constexpr int kConfigError = 3;

struct CommonFlags {
  std::string config_path;
  std::optional<int> k;
  std::optional<std::string> dataset;
  std::optional<std::string> data_dir;
  std::optional<bool> offline;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "pipeline config file (JSON)");
  cmd->add_option("--k", flags.k, "queries per subclaim (1-5)");
  cmd->add_option("--dataset", flags.dataset, "dataset name for the temporal bound");
  cmd->add_option("--data-dir", flags.data_dir, "evidence repository directory");
  cmd->add_flag("--offline,!--live", flags.offline, "replay recorded fixtures only");
}

// Flags beat the config file, which beats defaults.
factpipe::PipelineConfig resolve_config(const CommonFlags& flags) {
  factpipe::PipelineConfig config;
  if (!flags.config_path.empty()) config = factpipe::load_config(flags.config_path);
  if (flags.k) config.k_queries = *flags.k;
  if (flags.dataset) {
    auto parsed = factpipe::parse_dataset(*flags.dataset);
    if (!parsed) throw factpipe::ConfigError("unknown dataset: " + *flags.dataset);
    config.dataset = parsed;
  }
  if (flags.data_dir) config.data_dir = *flags.data_dir;
  if (flags.offline) config.offline_mode = *flags.offline;
  factpipe::validate(config);
  return config;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw factpipe::ConfigError("cannot open claim file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return factpipe::trim(buffer.str());
}

void print_verdict_human(const factpipe::ClaimOutcome& outcome) {
  std::cout << "claim_id: " << outcome.claim.id << '\n';
  std::cout << "claim:    " << outcome.claim.text << '\n';
  const auto& verdict = *outcome.verdict;
  std::cout << "label:    " << factpipe::to_string(verdict.label) << '\n';
  if (!verdict.subclaim_verdicts.empty()) {
    std::cout << "subclaims:\n";
  }
  std::cout << verdict.composite_explanation << '\n';
}

int cmd_check(const CommonFlags& flags, const std::string& claim_text,
              const std::string& claim_file, bool as_json, const std::string& run_id) {
  std::string text = claim_text;
  if (!claim_file.empty()) text = read_text_file(claim_file);
  if (factpipe::trim(text).empty()) {
    std::cerr << "error: claim text is empty\n";
    return kConfigError;
  }
  auto config = resolve_config(flags);
  auto services = factpipe::make_services(config);
  factpipe::Orchestrator orchestrator(config, services);

  factpipe::Claim claim;
  claim.id = "claim-" + factpipe::fnv1a64_hex(text).substr(0, 12);
  claim.text = text;
  claim.origin_dataset = config.dataset;

  auto outcome = orchestrator.run_claim(claim, run_id);
  if (outcome.error) {
    std::cerr << "pipeline error: " << *outcome.error << '\n';
    return kPartial;
  }
  if (as_json) {
    factpipe::Json j = outcome;
    std::cout << j.dump(2) << '\n';
  } else {
    print_verdict_human(outcome);
  }
  return kOk;
}

int cmd_bench(const CommonFlags& flags, const std::string& dataset_path,
              const std::string& format, int sample, std::uint64_t seed,
              const std::string& out_dir, const std::string& run_id,
              const std::string& baseline_name, const std::string& baseline_file) {
  if (format != "jsonl") {
    std::cerr << "error: unsupported dataset format \"" << format << "\"\n";
    return kConfigError;
  }
  auto config = resolve_config(flags);
  config.data_dir = (std::filesystem::path(out_dir) / "runs").string();

  auto examples = factpipe::load_dataset(dataset_path);
  if (sample > 0) {
    if (static_cast<std::size_t>(sample) > examples.size()) {
      std::cerr << "error: --sample " << sample << " exceeds dataset size " << examples.size()
                << '\n';
      return kConfigError;
    }
    examples = factpipe::stratified_sample(examples, sample, seed);
  }

  std::map<std::string, double> baseline;
  if (!baseline_file.empty()) {
    std::ifstream in(baseline_file);
    if (!in) throw factpipe::ConfigError("cannot open baseline file: " + baseline_file);
    factpipe::Json j = factpipe::Json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw factpipe::ConfigError("baseline file is not a JSON object: " + baseline_file);
    }
    for (auto& [stratum, score] : j.items()) baseline[stratum] = score.get<double>();
  }

  std::vector<factpipe::Claim> claims;
  claims.reserve(examples.size());
  for (const auto& example : examples) {
    factpipe::Claim claim;
    claim.id = example.id;
    claim.text = example.claim;
    claim.origin_dataset = config.dataset;
    claim.gold_label = example.gold_label;
    claims.push_back(std::move(claim));
  }

  auto services = factpipe::make_services(config);
  factpipe::Orchestrator orchestrator(config, services);
  auto outcomes = orchestrator.run_batch(claims, run_id);

  std::vector<factpipe::BenchResult> results;
  std::vector<factpipe::RunTrace> traces;
  int errored = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    factpipe::BenchResult result;
    result.claim_id = outcomes[i].claim.id;
    result.stratum = examples[i].stratum;
    result.gold = examples[i].gold_label;
    if (outcomes[i].verdict) result.predicted = outcomes[i].verdict->label;
    else ++errored;
    results.push_back(std::move(result));
    traces.push_back(outcomes[i].trace);
  }

  auto report = factpipe::build_report(results, traces, baseline);

  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(std::filesystem::path(out_dir) / "report.json");
    out << factpipe::Json(report).dump(2) << '\n';
  }
  {
    std::ofstream out(std::filesystem::path(out_dir) / "report.txt");
    out << factpipe::format_report_text(report, baseline_name);
  }
  {
    std::ofstream out(std::filesystem::path(out_dir) / "traces.jsonl");
    for (const auto& outcome : outcomes) out << factpipe::Json(outcome).dump() << '\n';
  }
  std::cout << factpipe::format_report_text(report, baseline_name);
  return errored > 0 ? kPartial : kOk;
}

int cmd_inspect(const std::string& run_dir, const std::string& claim_id) {
  std::filesystem::path dir(run_dir);
  if (!std::filesystem::is_directory(dir)) {
    std::cerr << "error: not a run directory: " << run_dir << '\n';
    return kConfigError;
  }
  factpipe::EvidenceStore store(dir.parent_path());
  auto records = store.load_all(dir.filename().string());
  if (records.empty()) {
    std::cout << "no records\n";
    return kOk;
  }
  bool matched = false;
  for (const auto& record : records) {
    if (!claim_id.empty() && record.subclaim.claim_id != claim_id) continue;
    matched = true;
    std::cout << record.subclaim.claim_id << "#" << record.subclaim.index << "  "
              << record.url << '\n';
    std::cout << "  query:       " << record.query << '\n';
    std::cout << "  credibility: " << factpipe::summarize(record.credibility) << '\n';
    std::cout << "  retrieved:   " << record.retrieved_at_ms << '\n';
    std::cout << "  passage:     "
              << (record.passage ? *record.passage
                                 : std::string(factpipe::kNoEvidenceSentinel))
              << '\n';
  }
  if (!matched) {
    std::cerr << "error: no records for claim id " << claim_id << '\n';
    return kPartial;
  }
  return kOk;
}

int cmd_record(const CommonFlags& flags, const std::string& claim_text,
               const std::string& out_dir) {
  auto config = resolve_config(flags);
  if (config.offline_mode) {
    std::cerr << "error: record-fixtures needs live endpoints (offline_mode set)\n";
    return kConfigError;
  }
  std::filesystem::path out(out_dir);
  std::filesystem::create_directories(out);

  auto services = factpipe::make_services(config);
  auto recording_llm = std::make_shared<factpipe::RecordingLlmBackend>(
      std::make_shared<factpipe::HttpLlmBackend>(config.llm));
  auto gateway = std::make_shared<factpipe::LlmGateway>(recording_llm);
  services.gateway = gateway;
  services.search = std::make_shared<factpipe::RecordingSearchClient>(
      std::make_shared<factpipe::HttpSearchClient>(config.search_endpoint), out / "search");
  services.fetcher = std::make_shared<factpipe::ThrottledFetcher>(
      std::make_shared<factpipe::RecordingPageFetcher>(
          std::make_shared<factpipe::HttpPageFetcher>(), out / "pages"),
      config.parallelism.fetches);
  auto mbfc_inner = config.mbfc_endpoint.empty()
                        ? std::static_pointer_cast<factpipe::MbfcClient>(
                              std::make_shared<factpipe::FixtureMbfcClient>())
                        : std::static_pointer_cast<factpipe::MbfcClient>(
                              std::make_shared<factpipe::HttpMbfcClient>(config.mbfc_endpoint));
  auto recording_mbfc = std::make_shared<factpipe::RecordingMbfcClient>(mbfc_inner);
  services.credibility = std::make_shared<factpipe::CredibilityEngine>(
      recording_mbfc, std::make_shared<factpipe::DomainSignalProvider>(), config.fallback);

  factpipe::Claim claim;
  claim.id = "claim-" + factpipe::fnv1a64_hex(claim_text).substr(0, 12);
  claim.text = claim_text;
  claim.origin_dataset = config.dataset;

  factpipe::Orchestrator orchestrator(config, services);
  auto outcome = orchestrator.run_claim(claim, "recorded");

  recording_llm->save((out / "llm_script.json").string());
  recording_mbfc->save((out / "mbfc.json").string());

  factpipe::Json offline_config{
      {"offline_mode", true},
      {"k_queries", config.k_queries},
      {"data_dir", "runs"},
      {"llm_script_path", (out / "llm_script.json").string()},
      {"search_fixture_dir", (out / "search").string()},
      {"page_fixture_dir", (out / "pages").string()},
      {"mbfc_fixture_path", (out / "mbfc.json").string()}};
  if (config.dataset) offline_config["dataset"] = factpipe::to_string(*config.dataset);
  {
    std::ofstream cfg(out / "offline_config.json");
    cfg << offline_config.dump(2) << '\n';
  }

  if (outcome.error) {
    std::cerr << "pipeline error: " << *outcome.error << '\n';
    return kPartial;
  }
  std::cout << "recorded fixtures for " << claim.id << " under " << out_dir << '\n';
  std::cout << "replay with: factpipe check --claim \"...\" --config "
            << (out / "offline_config.json").string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"four-agent fact-checking pipeline"};
  app.require_subcommand(1);

  CommonFlags check_flags;
  std::string check_claim, check_claim_file, check_run_id = "run";
  bool check_json = false;
  auto* check = app.add_subcommand("check", "verify a single claim");
  add_common(check, check_flags);
  auto* claim_opt = check->add_option("--claim", check_claim, "claim text");
  auto* claim_file_opt =
      check->add_option("--claim-file", check_claim_file, "file holding the claim text");
  claim_opt->excludes(claim_file_opt);
  check->add_flag("--json", check_json, "print the canonical JSON verdict");
  check->add_option("--run-id", check_run_id, "evidence run id");

  CommonFlags bench_flags;
  std::string bench_dataset, bench_format = "jsonl", bench_out = "bench-out";
  std::string bench_run_id = "run", bench_baseline_name = "baseline", bench_baseline_file;
  int bench_sample = 0;
  std::uint64_t bench_seed = 7;
  auto* bench = app.add_subcommand("bench", "run a benchmark dataset");
  add_common(bench, bench_flags);
  bench->add_option("--dataset-file", bench_dataset, "dataset JSONL path")->required();
  bench->add_option("--format", bench_format, "dataset format (jsonl)");
  bench->add_option("--sample", bench_sample, "stratified sample size (0 = all)");
  bench->add_option("--seed", bench_seed, "sampling seed");
  bench->add_option("--out", bench_out, "output directory for reports");
  bench->add_option("--run-id", bench_run_id, "evidence run id");
  bench->add_option("--baseline-name", bench_baseline_name, "baseline column label");
  bench->add_option("--baseline-file", bench_baseline_file,
                    "JSON map of stratum to baseline Macro F1");

  std::string inspect_run, inspect_claim_id;
  auto* inspect = app.add_subcommand("inspect", "list stored evidence for a run");
  inspect->add_option("--run", inspect_run, "run directory")->required();
  inspect->add_option("--claim-id", inspect_claim_id, "only this claim");

  CommonFlags record_flags;
  std::string record_claim, record_out = "fixtures";
  auto* record = app.add_subcommand("record-fixtures", "capture live replies as fixtures");
  add_common(record, record_flags);
  record->add_option("--claim", record_claim, "claim text")->required();
  record->add_option("--out", record_out, "fixture output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (check->parsed()) {
      if (check_claim.empty() && check_claim_file.empty()) {
        std::cerr << "error: one of --claim or --claim-file is required\n";
        return kConfigError;
      }
      return cmd_check(check_flags, check_claim, check_claim_file, check_json, check_run_id);
    }
    if (bench->parsed()) {
      return cmd_bench(bench_flags, bench_dataset, bench_format, bench_sample, bench_seed,
                       bench_out, bench_run_id, bench_baseline_name, bench_baseline_file);
    }
    if (inspect->parsed()) return cmd_inspect(inspect_run, inspect_claim_id);
    if (record->parsed()) return cmd_record(record_flags, record_claim, record_out);
  } catch (const factpipe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const factpipe::FormatError& e) {
    std::cerr << "dataset error (line " << e.line_number() << "): " << e.what() << '\n';
    return kConfigError;
  } catch (const factpipe::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPartial;
  }
  return kConfigError;
}
