// End-to-end tests that drive the installed CLI binary over offline fixtures.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "factpipe/factpipe.hpp"
#include "support/test_support.hpp"

using namespace factpipe;
using testsupport::PipelineRig;
using testsupport::run_cmd;

namespace {

std::string cli() { return FACTPIPE_CLI_PATH; }

std::string sh_quote(const std::string& s) { return "\"" + s + "\""; }

std::string derived_claim_id(const std::string& text) {
  return "claim-" + fnv1a64_hex(text).substr(0, 12);
}

// Freezes the rig's scripted LLM to disk and writes a config file the real
// binary can load.
std::string freeze_config(PipelineRig& rig, const std::filesystem::path& cfg_path,
                          const std::string& data_dir) {
  rig.llm->save(rig.config.llm_script_path);
  Json cfg{{"offline_mode", true},
           {"k_queries", rig.config.k_queries},
           {"data_dir", data_dir},
           {"llm_script_path", rig.config.llm_script_path},
           {"search_fixture_dir", rig.config.search_fixture_dir},
           {"page_fixture_dir", rig.config.page_fixture_dir}};
  testsupport::write_file(cfg_path, cfg.dump(2));
  return cfg_path.string();
}

}  // namespace

TEST_CASE("check prints a machine-readable verdict for a scripted claim") {
  PipelineRig rig;
  std::string text = "The clinic is located in Springfield.";
  std::string claim_id = derived_claim_id(text);
  std::string line = "Location(Clinic, Springfield) ::: Verify the clinic is in Springfield.";
  testsupport::script_decomposition(*rig.llm, text, Json{{"response", line}}.dump());
  auto scripted = testsupport::script_subclaim_happy_path(rig, claim_id, 0, line,
                                                          {"clinic city", "clinic location",
                                                           "clinic where"});
  testsupport::script_verdict(*rig.llm, text, render_cell(scripted.cell),
                              testsupport::verdict_reply("supported", "The sources agree."));
  std::string data_dir = (rig.dir / "cli-runs").string();
  std::string cfg = freeze_config(rig, rig.dir / "config.json", data_dir);

  auto result = run_cmd(cli() + " check --config " + sh_quote(cfg) + " --claim " + sh_quote(text) +
                        " --json --run-id cli-run");
  REQUIRE(result.status == 0);
  Json j = Json::parse(result.output);
  CHECK(j["claim_id"] == claim_id);
  CHECK(j["error"].is_null());
  CHECK(j["verdict"]["label"] == "supported");
  CHECK(j["verdict"]["subclaim_verdicts"].size() == 1);
  CHECK(j["trace"]["counts"]["records"] == 3);

  // human-readable variant
  auto human = run_cmd(cli() + " check --config " + sh_quote(cfg) + " --claim " + sh_quote(text) +
                       " --run-id cli-run2");
  REQUIRE(human.status == 0);
  CHECK(human.output.find("label:    supported") != std::string::npos);
  CHECK(human.output.find("[supported] " + line) != std::string::npos);

  // the evidence repository was populated
  CHECK(std::filesystem::exists(std::filesystem::path(data_dir) / "cli-run" /
                                "evidence.jsonl"));

  SECTION("inspect lists the stored records") {
    auto inspect = run_cmd(cli() + " inspect --run " +
                           sh_quote((std::filesystem::path(data_dir) / "cli-run").string()));
    REQUIRE(inspect.status == 0);
    CHECK(inspect.output.find(claim_id + "#0") != std::string::npos);
    CHECK(inspect.output.find("query:") != std::string::npos);
    CHECK(inspect.output.find("fallback-scored domain") != std::string::npos);
    CHECK(inspect.output.find("Passage: ") != std::string::npos);

    auto filtered = run_cmd(cli() + " inspect --run " +
                            sh_quote((std::filesystem::path(data_dir) / "cli-run").string()) +
                            " --claim-id " + sh_quote(claim_id));
    CHECK(filtered.status == 0);

    auto miss = run_cmd(cli() + " inspect --run " +
                        sh_quote((std::filesystem::path(data_dir) / "cli-run").string()) +
                        " --claim-id does-not-exist");
    CHECK(miss.status == 2);
    CHECK(miss.output.find("no records for claim id") != std::string::npos);
  }

  SECTION("a claim file is read and trimmed") {
    testsupport::write_file(rig.dir / "claim.txt", "  " + text + "\n");
    auto from_file = run_cmd(cli() + " check --config " + sh_quote(cfg) + " --claim-file " +
                             sh_quote((rig.dir / "claim.txt").string()) +
                             " --json --run-id cli-run3");
    REQUIRE(from_file.status == 0);
    CHECK(Json::parse(from_file.output)["verdict"]["label"] == "supported");
  }
}

TEST_CASE("check rejects unusable invocations with the config exit code") {
  PipelineRig rig;
  std::string cfg = freeze_config(rig, rig.dir / "config.json", (rig.dir / "runs").string());

  auto no_claim = run_cmd(cli() + " check --config " + sh_quote(cfg));
  CHECK(no_claim.status == 3);
  CHECK(no_claim.output.find("--claim") != std::string::npos);

  auto empty_claim = run_cmd(cli() + " check --config " + sh_quote(cfg) + " --claim \"   \"");
  CHECK(empty_claim.status == 3);
  CHECK(empty_claim.output.find("claim text is empty") != std::string::npos);

  auto bad_dataset = run_cmd(cli() + " check --config " + sh_quote(cfg) +
                             " --claim \"x\" --dataset wikipedia");
  CHECK(bad_dataset.status == 3);
  CHECK(bad_dataset.output.find("unknown dataset") != std::string::npos);

  auto bad_config = run_cmd(cli() + " check --config /nonexistent/cfg.json --claim \"x\"");
  CHECK(bad_config.status == 3);

  auto both = run_cmd(cli() + " check --config " + sh_quote(cfg) +
                      " --claim \"x\" --claim-file y.txt");
  CHECK(both.status == 3);

  auto missing_file = run_cmd(cli() + " check --config " + sh_quote(cfg) +
                              " --claim-file " + sh_quote((rig.dir / "nope.txt").string()));
  CHECK(missing_file.status == 3);
  CHECK(missing_file.output.find("cannot open claim file") != std::string::npos);
}

TEST_CASE("bench scores a dataset and writes deterministic artifacts") {
  PipelineRig rig;
  struct BenchClaim {
    std::string id, text, gold, verdict;
  };
  std::vector<BenchClaim> claims = {
      {"b-1", "First benchmark claim.", "supported", "supported"},
      {"b-2", "Second benchmark claim.", "not_supported", "not_supported"},
  };
  std::string dataset;
  for (const auto& c : claims) {
    std::string line = "Fact(" + c.id + ") ::: Verify " + c.id + ".";
    testsupport::script_decomposition(*rig.llm, c.text, Json{{"response", line}}.dump());
    auto scripted = testsupport::script_subclaim_happy_path(
        rig, c.id, 0, line, {"qa " + c.id, "qb " + c.id, "qc " + c.id});
    testsupport::script_verdict(*rig.llm, c.text, render_cell(scripted.cell),
                                testsupport::verdict_reply(c.verdict, "judged"));
    dataset += Json{{"id", c.id}, {"claim", c.text}, {"label", c.gold}, {"stratum", "2-hop"}}
                   .dump() + "\n";
  }
  testsupport::write_file(rig.dir / "data.jsonl", dataset);
  testsupport::write_file(rig.dir / "baseline.json", Json{{"2-hop", 0.88}}.dump());
  std::string cfg = freeze_config(rig, rig.dir / "config.json", (rig.dir / "unused").string());

  std::string out1 = (rig.dir / "out1").string();
  auto result = run_cmd(cli() + " bench --config " + sh_quote(cfg) + " --dataset-file " +
                        sh_quote((rig.dir / "data.jsonl").string()) + " --out " + sh_quote(out1) +
                        " --run-id bench-run --baseline-file " +
                        sh_quote((rig.dir / "baseline.json").string()));
  REQUIRE(result.status == 0);
  CHECK(result.output.find("overall") != std::string::npos);

  Json report = Json::parse(testsupport::read_file(std::filesystem::path(out1) / "report.json"));
  CHECK(report["claims"] == 2);
  CHECK(report["errors"] == 0);
  CHECK(report["macro_f1"] == Catch::Approx(1.0));
  CHECK(report["strata"]["2-hop"]["claims"] == 2);
  CHECK(report["strata"]["2-hop"]["baseline"] == Catch::Approx(0.88));
  CHECK(report["strata"]["2-hop"]["delta"] == Catch::Approx(0.12));
  CHECK(report["credible_links"]["hits"] == 12);
  CHECK(report["credible_links"]["credible_hits"] == 6);
  CHECK(report["credible_links"]["ratio"] == Catch::Approx(0.5));

  std::string text = testsupport::read_file(std::filesystem::path(out1) / "report.txt");
  CHECK(text.find("1.000 (+0.120)") != std::string::npos);
  CHECK(text.find("0.880") != std::string::npos);

  std::string traces = testsupport::read_file(std::filesystem::path(out1) / "traces.jsonl");
  std::vector<std::string> lines;
  for (const auto& line : split_lines(traces)) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  REQUIRE(lines.size() == 2);
  CHECK(Json::parse(lines[0])["claim_id"] == "b-1");
  CHECK(Json::parse(lines[1])["claim_id"] == "b-2");
  CHECK(std::filesystem::exists(std::filesystem::path(out1) / "runs" / "bench-run" /
                                "evidence.jsonl"));

  // a repeat run produces byte-identical artifacts
  std::string out2 = (rig.dir / "out2").string();
  auto repeat = run_cmd(cli() + " bench --config " + sh_quote(cfg) + " --dataset-file " +
                        sh_quote((rig.dir / "data.jsonl").string()) + " --out " + sh_quote(out2) +
                        " --run-id bench-run --baseline-file " +
                        sh_quote((rig.dir / "baseline.json").string()));
  REQUIRE(repeat.status == 0);
  CHECK(testsupport::read_file(std::filesystem::path(out1) / "report.json") ==
        testsupport::read_file(std::filesystem::path(out2) / "report.json"));
  CHECK(testsupport::read_file(std::filesystem::path(out1) / "traces.jsonl") ==
        testsupport::read_file(std::filesystem::path(out2) / "traces.jsonl"));
  // claims run in parallel, so only the cross-claim interleaving of the
  // evidence log may differ between runs; its lines must match exactly
  auto sorted_lines = [](const std::filesystem::path& path) {
    std::vector<std::string> out;
    for (const auto& line : split_lines(testsupport::read_file(path))) {
      if (!trim(line).empty()) out.push_back(line);
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  CHECK(sorted_lines(std::filesystem::path(out1) / "runs" / "bench-run" / "evidence.jsonl") ==
        sorted_lines(std::filesystem::path(out2) / "runs" / "bench-run" / "evidence.jsonl"));
}

TEST_CASE("bench reports partial failures and rejects bad flags") {
  PipelineRig rig;
  std::string good_text = "Scripted bench claim.";
  std::string line = "Fact(p-1) ::: Verify p-1.";
  testsupport::script_decomposition(*rig.llm, good_text, Json{{"response", line}}.dump());
  auto scripted = testsupport::script_subclaim_happy_path(rig, "p-1", 0, line,
                                                          {"q1", "q2", "q3"});
  testsupport::script_verdict(*rig.llm, good_text, render_cell(scripted.cell),
                              testsupport::verdict_reply("supported", "ok"));
  std::string dataset =
      Json{{"id", "p-1"}, {"claim", good_text}, {"label", "supported"}}.dump() + "\n" +
      Json{{"id", "p-2"}, {"claim", "Never scripted claim."}, {"label", "supported"}}.dump() +
      "\n";
  testsupport::write_file(rig.dir / "data.jsonl", dataset);
  std::string cfg = freeze_config(rig, rig.dir / "config.json", (rig.dir / "unused").string());
  std::string dataset_path = (rig.dir / "data.jsonl").string();

  std::string out = (rig.dir / "out").string();
  auto partial = run_cmd(cli() + " bench --config " + sh_quote(cfg) + " --dataset-file " +
                         sh_quote(dataset_path) + " --out " + sh_quote(out));
  CHECK(partial.status == 2);
  Json report = Json::parse(testsupport::read_file(std::filesystem::path(out) / "report.json"));
  CHECK(report["claims"] == 2);
  CHECK(report["errors"] == 1);

  auto oversample = run_cmd(cli() + " bench --config " + sh_quote(cfg) + " --dataset-file " +
                            sh_quote(dataset_path) + " --sample 9 --out " + sh_quote(out));
  CHECK(oversample.status == 3);
  CHECK(oversample.output.find("exceeds dataset size") != std::string::npos);

  auto bad_format = run_cmd(cli() + " bench --config " + sh_quote(cfg) + " --dataset-file " +
                            sh_quote(dataset_path) + " --format csv --out " + sh_quote(out));
  CHECK(bad_format.status == 3);
  CHECK(bad_format.output.find("unsupported dataset format") != std::string::npos);

  auto no_dataset = run_cmd(cli() + " bench --config " + sh_quote(cfg) + " --dataset-file " +
                            sh_quote((rig.dir / "missing.jsonl").string()) + " --out " +
                            sh_quote(out));
  CHECK(no_dataset.status == 3);
}

TEST_CASE("record-fixtures refuses to run against fixtures") {
  PipelineRig rig;
  std::string cfg = freeze_config(rig, rig.dir / "config.json", (rig.dir / "runs").string());
  auto result = run_cmd(cli() + " record-fixtures --config " + sh_quote(cfg) +
                        " --claim \"x\" --out " + sh_quote((rig.dir / "fx").string()));
  CHECK(result.status == 3);
  CHECK(result.output.find("live endpoints") != std::string::npos);
}

TEST_CASE("usage errors exit with the config code") {
  auto none = run_cmd(cli());
  CHECK(none.status == 3);
  auto unknown = run_cmd(cli() + " check --no-such-flag");
  CHECK(unknown.status == 3);
  auto help = run_cmd(cli() + " --help");
  CHECK(help.status == 0);
  CHECK(help.output.find("check") != std::string::npos);
  CHECK(help.output.find("bench") != std::string::npos);
}
