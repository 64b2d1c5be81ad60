#include <catch2/catch_amalgamated.hpp>

#include <memory>
#include <string>
#include <vector>

#include "factpipe/ingestion.hpp"
#include "factpipe/query_gen.hpp"
#include "support/test_support.hpp"

using namespace factpipe;

namespace {

struct AgentRig {
  std::shared_ptr<MockLlmBackend> mock = std::make_shared<MockLlmBackend>();
  LlmGateway gateway;
  IngestionAgent ingestion;
  QueryAgent query;

  AgentRig() : gateway(mock), ingestion(gateway), query(gateway) {}
};

const std::string kHospitalClaim =
    "Howard University Hospital and Providence Hospital are both located in Washington, D.C.";
const std::string kHospitalLine1 =
    "Location(Howard_University_Hospital, Washington_D.C.) ::: Verify Howard University "
    "Hospital is located in Washington, D.C.";
const std::string kHospitalLine2 =
    "Location(Providence_Hospital, Washington_D.C.) ::: Verify Providence Hospital is located "
    "in Washington, D.C.";

}  // namespace

TEST_CASE("classification token scan handles the substring trap") {
  using detail::classify_reply_token;
  CHECK(classify_reply_token("VERIFIABLE. This is a factual claim.") ==
        Verifiability::Verifiable);
  CHECK(classify_reply_token("Classification: NON-VERIFIABLE (opinion)") ==
        Verifiability::NonVerifiable);
  CHECK(classify_reply_token("non verifiable") == Verifiability::NonVerifiable);
  CHECK(classify_reply_token("non_verifiable") == Verifiability::NonVerifiable);
  CHECK(classify_reply_token("This claim is verifiable.") == Verifiability::Verifiable);
  CHECK(classify_reply_token("I think it is Verifiable") == Verifiability::Verifiable);
  CHECK(classify_reply_token("no decision here") == Verifiability::Unclassified);
  CHECK(classify_reply_token("") == Verifiability::Unclassified);
}

TEST_CASE("decompose turns the scripted reply into indexed subclaims") {
  AgentRig rig;
  testsupport::script_decomposition(
      *rig.mock, kHospitalClaim,
      Json{{"response", "Predicates:\n" + kHospitalLine1 + "\n" + kHospitalLine2}}.dump());

  Claim claim{"c1", kHospitalClaim, std::nullopt, std::nullopt};
  auto subclaims = rig.ingestion.decompose(claim);
  REQUIRE(subclaims.size() == 2);
  CHECK(subclaims[0].index == 0);
  CHECK(subclaims[0].claim_id == "c1");
  CHECK(subclaims[0].predicate.name == "Location");
  CHECK(subclaims[0].predicate.args[0] == "Howard_University_Hospital");
  CHECK(subclaims[1].index == 1);
  CHECK(subclaims[1].predicate.args[0] == "Providence_Hospital");
  CHECK(subclaims[1].verifiability == Verifiability::Unclassified);
}

TEST_CASE("decompose surfaces malformed lines as warnings") {
  AgentRig rig;
  testsupport::script_decomposition(
      *rig.mock, "short claim",
      Json{{"response", "A(x) ::: Verify x.\nnot a predicate at all\nB(y) ::: Verify y."}}
          .dump());
  Claim claim{"c2", "short claim", std::nullopt, std::nullopt};
  std::vector<std::string> warnings;
  auto subclaims = rig.ingestion.decompose(claim, &warnings);
  CHECK(subclaims.size() == 2);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("not a predicate at all") != std::string::npos);
}

TEST_CASE("decompose failure modes") {
  AgentRig rig;
  Claim empty{"c0", "", std::nullopt, std::nullopt};
  CHECK_THROWS_AS(rig.ingestion.decompose(empty), Error);

  testsupport::script_decomposition(*rig.mock, "all prose",
                                    Json{{"response", "I could not find any predicates."}}.dump());
  Claim prose{"c3", "all prose", std::nullopt, std::nullopt};
  CHECK_THROWS_AS(rig.ingestion.decompose(prose), EmptyDecomposition);

  // a completely unscripted claim means a stale fixture: loud failure
  Claim unscripted{"c4", "never scripted", std::nullopt, std::nullopt};
  CHECK_THROWS_AS(rig.ingestion.decompose(unscripted), MockMiss);
}

TEST_CASE("classify_verifiability fills the label and keeps the explanation") {
  AgentRig rig;
  Subclaim s;
  s.claim_id = "c1";
  s.index = 0;
  s.predicate = parse_predicate_line("A(x) ::: Verify x is real.");

  testsupport::script_verifiability(*rig.mock, "Verify x is real.",
                                    "VERIFIABLE. Checkable against records.");
  auto classified = rig.ingestion.classify_verifiability(s);
  CHECK(classified.verifiability == Verifiability::Verifiable);
  CHECK(classified.classifier_explanation == "VERIFIABLE. Checkable against records.");

  Subclaim vague = s;
  vague.predicate = parse_predicate_line("B(y) ::: Verify y is the best.");
  testsupport::script_verifiability(*rig.mock, "Verify y is the best.",
                                    "NON-VERIFIABLE: that is an opinion.");
  CHECK(rig.ingestion.classify_verifiability(vague).verifiability ==
        Verifiability::NonVerifiable);

  Subclaim odd = s;
  odd.predicate = parse_predicate_line("C(z) ::: Verify z.");
  testsupport::script_verifiability(*rig.mock, "Verify z.", "I cannot decide.");
  CHECK_THROWS_AS(rig.ingestion.classify_verifiability(odd), UnparseableClassification);
}

TEST_CASE("ingest drops non-verifiable subclaims but keeps original indices") {
  AgentRig rig;
  std::string l0 = "A(x) ::: Verify x.";
  std::string l1 = "B(y) ::: Verify y is admirable.";
  std::string l2 = "C(z) ::: Verify z.";
  testsupport::script_decomposition(*rig.mock, "mixed claim",
                                    Json{{"response", l0 + "\n" + l1 + "\n" + l2}}.dump());
  testsupport::script_verifiability(*rig.mock, "Verify x.", "VERIFIABLE");
  testsupport::script_verifiability(*rig.mock, "Verify y is admirable.", "NON-VERIFIABLE");
  testsupport::script_verifiability(*rig.mock, "Verify z.", "VERIFIABLE");

  Claim claim{"c1", "mixed claim", std::nullopt, std::nullopt};
  auto result = rig.ingestion.ingest(claim);

  CHECK(result.claim_id == "c1");
  CHECK(result.dropped_count == 1);
  REQUIRE(result.subclaims.size() == 2);
  // the middle subclaim is gone; survivors keep indices 0 and 2
  CHECK(result.subclaims[0].index == 0);
  CHECK(result.subclaims[0].predicate.raw_line == l0);
  CHECK(result.subclaims[1].index == 2);
  CHECK(result.subclaims[1].predicate.raw_line == l2);
  CHECK(result.warnings.empty());
}

TEST_CASE("ingest retains subclaims whose classification is unparseable") {
  AgentRig rig;
  testsupport::script_decomposition(*rig.mock, "claim",
                                    Json{{"response", "A(x) ::: Verify x."}}.dump());
  testsupport::script_verifiability(*rig.mock, "Verify x.", "mumble mumble");

  auto result = rig.ingestion.ingest({"c1", "claim", std::nullopt, std::nullopt});
  REQUIRE(result.subclaims.size() == 1);
  CHECK(result.dropped_count == 0);
  CHECK(result.subclaims[0].verifiability == Verifiability::Unclassified);
  REQUIRE(result.warnings.size() == 1);
  CHECK(result.warnings[0].find("retained") != std::string::npos);
}

TEST_CASE("ingest can drop everything, yielding zero subclaims") {
  AgentRig rig;
  testsupport::script_decomposition(
      *rig.mock, "pure opinion",
      Json{{"response", "Best(thing) ::: Verify thing is the best.\n"
                        "Nicest(other) ::: Verify other is the nicest."}}
          .dump());
  testsupport::script_verifiability(*rig.mock, "Verify thing is the best.", "NON-VERIFIABLE");
  testsupport::script_verifiability(*rig.mock, "Verify other is the nicest.", "NON-VERIFIABLE");

  auto result = rig.ingestion.ingest({"c1", "pure opinion", std::nullopt, std::nullopt});
  CHECK(result.subclaims.empty());
  CHECK(result.dropped_count == 2);
}

TEST_CASE("a realistic filter rate: some of many subclaims are dropped") {
  AgentRig rig;
  std::string response;
  int n = 12;
  for (int i = 0; i < n; ++i) {
    std::string goal = "Verify item " + std::to_string(i) + ".";
    response += "P" + std::to_string(i) + "(x) ::: " + goal + "\n";
    bool opinion = i % 6 == 5;  // 2 of 12, roughly the filter rate seen in practice
    testsupport::script_verifiability(*rig.mock, goal,
                                      opinion ? "NON-VERIFIABLE" : "VERIFIABLE");
  }
  testsupport::script_decomposition(*rig.mock, "long claim",
                                    Json{{"response", response}}.dump());

  auto result = rig.ingestion.ingest({"c1", "long claim", std::nullopt, std::nullopt});
  CHECK(result.dropped_count == 2);
  CHECK(result.subclaims.size() == 10);
  // indices of survivors are strictly increasing originals
  int previous = -1;
  for (const auto& s : result.subclaims) {
    CHECK(s.index > previous);
    previous = s.index;
  }
}

TEST_CASE("query reply parsing: matching entry, dedupe, trim, truncate") {
  SubclaimRef ref{"c1", 0};
  std::string line = "A(x) ::: Verify x.";

  SECTION("entry matched by exact claim text") {
    Json reply = Json::array({Json{{"claim", "B(other) ::: Verify other."},
                                   {"questions", Json::array({"wrong set"})}},
                              Json{{"claim", line},
                                   {"questions", Json::array({"right one", "right two"})}}});
    auto qs = parse_query_reply(ref, line, reply.dump(), 3);
    REQUIRE(qs.queries.size() == 2);
    CHECK(qs.queries[0] == "right one");
    CHECK(qs.subclaim_ref == ref);
  }

  SECTION("no matching claim falls back to the first entry") {
    Json reply = Json::array({Json{{"claim", "Paraphrased(x) ::: Verify."},
                                   {"questions", Json::array({"fallback q"})}}});
    auto qs = parse_query_reply(ref, line, reply.dump(), 3);
    REQUIRE(qs.queries.size() == 1);
    CHECK(qs.queries[0] == "fallback q");
  }

  SECTION("bare object is accepted as a one-entry array") {
    Json reply = Json{{"claim", line}, {"questions", Json::array({"only q"})}};
    auto qs = parse_query_reply(ref, line, reply.dump(), 3);
    CHECK(qs.queries == std::vector<std::string>{"only q"});
  }

  SECTION("queries are trimmed, case-insensitively deduped and cut to k") {
    Json reply = Json::array(
        {Json{{"claim", line},
              {"questions", Json::array({"  Where is X?  ", "where is x?", "", "second",
                                         "third", "fourth"})}}});
    auto qs = parse_query_reply(ref, line, reply.dump(), 3);
    REQUIRE(qs.queries.size() == 3);
    CHECK(qs.queries[0] == "Where is X?");
    CHECK(qs.queries[1] == "second");
    CHECK(qs.queries[2] == "third");
  }

  SECTION("non-string entries are skipped") {
    Json reply = Json::array({Json{{"claim", line},
                                   {"questions", Json::array({42, "real question", true})}}});
    auto qs = parse_query_reply(ref, line, reply.dump(), 3);
    CHECK(qs.queries == std::vector<std::string>{"real question"});
  }

  SECTION("fenced replies parse like bare ones") {
    std::string fenced = "```json\n" +
                         Json::array({Json{{"claim", line},
                                           {"questions", Json::array({"q"})}}})
                             .dump() +
                         "\n```";
    CHECK(parse_query_reply(ref, line, fenced, 3).queries.size() == 1);
  }
}

TEST_CASE("query reply failure modes") {
  SubclaimRef ref{"c1", 0};
  std::string line = "A(x) ::: Verify x.";
  CHECK_THROWS_AS(parse_query_reply(ref, line, "no json", 3), QueryParseError);
  CHECK_THROWS_AS(parse_query_reply(ref, line, "[]", 3), QueryParseError);
  CHECK_THROWS_AS(parse_query_reply(ref, line, R"([{"claim": "A(x) ::: Verify x."}])", 3),
                  QueryParseError);
  CHECK_THROWS_AS(
      parse_query_reply(ref, line, R"([{"claim": "A(x) ::: Verify x.", "questions": "q"}])", 3),
      QueryParseError);
  CHECK_THROWS_AS(
      parse_query_reply(ref, line,
                        R"([{"claim": "A(x) ::: Verify x.", "questions": ["", "   "]}])", 3),
      EmptyQuerySet);
}

TEST_CASE("query agent renders k into the prompt and validates its range") {
  AgentRig rig;
  Subclaim s;
  s.claim_id = "c1";
  s.index = 0;
  s.predicate = parse_predicate_line("A(x) ::: Verify x.");

  testsupport::script_queries(*rig.mock, s.predicate.raw_line, 2, {"first", "second"});
  auto qs = rig.query.generate_queries(s, 2);
  CHECK(qs.queries == std::vector<std::string>{"first", "second"});
  CHECK(qs.subclaim_ref == s.ref());

  CHECK_THROWS_AS(rig.query.generate_queries(s, 0), ConfigError);
  CHECK_THROWS_AS(rig.query.generate_queries(s, 6), ConfigError);
  CHECK_NOTHROW([&] {
    testsupport::script_queries(*rig.mock, s.predicate.raw_line, 1, {"only"});
    rig.query.generate_queries(s, 1);
  }());
  // different k means a different prompt, hence a different fingerprint
  testsupport::script_queries(*rig.mock, s.predicate.raw_line, 5, {"a", "b", "c", "d", "e"});
  CHECK(rig.query.generate_queries(s, 5).queries.size() == 5);
}
