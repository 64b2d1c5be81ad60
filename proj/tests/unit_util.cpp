#include <catch2/catch_amalgamated.hpp>

#include "factpipe/json_util.hpp"
#include "factpipe/util.hpp"

using namespace factpipe;

TEST_CASE("trim strips surrounding whitespace") {
  CHECK(trim("  a b \t\r\n") == "a b");
  CHECK(trim("") == "");
  CHECK(trim(" \t ") == "");
  CHECK(trim("x") == "x");
}

TEST_CASE("case-insensitive helpers") {
  CHECK(iequals("AbC", "aBc"));
  CHECK_FALSE(iequals("abc", "abd"));
  CHECK_FALSE(iequals("abc", "ab"));
  CHECK(to_lower("MiXeD") == "mixed");
  CHECK(ifind("Hello </SCRIPT> there", "</script") == 6);
  CHECK(ifind("abc", "zzz") == std::string_view::npos);
  CHECK(ifind("abcabc", "abc", 1) == 3);
}

TEST_CASE("split_lines handles CRLF and trailing newline") {
  auto lines = split_lines("a\r\nb\nc");
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "a");
  CHECK(lines[1] == "b");
  CHECK(lines[2] == "c");
  CHECK(split_lines("a\n").size() == 2);
  CHECK(split_lines("").size() == 1);
}

TEST_CASE("fnv1a64 reference values") {
  // Known FNV-1a test vectors.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64_hex("") == "cbf29ce484222325");
  CHECK(fnv1a64_hex("a").size() == 16);
}

TEST_CASE("extract_json_object finds embedded JSON") {
  Json j = extract_json_object("prose before {\"a\": 1, \"b\": {\"c\": [1,2]}} prose after");
  CHECK(j["a"] == 1);
  CHECK(j["b"]["c"][1] == 2);
}

TEST_CASE("extract_json_object tolerates code fences and braces in strings") {
  Json j = extract_json_object("```json\n{\"text\": \"a } brace { inside\"}\n```");
  CHECK(j["text"] == "a } brace { inside");
}

TEST_CASE("extract_json_object takes arrays and skips broken candidates") {
  Json j = extract_json_object("{broken {\"x\": } then [1, 2, 3]");
  REQUIRE(j.is_array());
  CHECK(j.size() == 3);
}

TEST_CASE("extract_json_object throws NoJsonFound on prose") {
  CHECK_THROWS_AS(extract_json_object("no json here"), NoJsonFound);
  CHECK_THROWS_AS(extract_json_object("unbalanced { forever"), NoJsonFound);
}

TEST_CASE("extract then serialize is idempotent on clean JSON") {
  std::string clean = Json{{"k", "v"}, {"n", 3}}.dump();
  Json once = extract_json_object(clean);
  Json twice = extract_json_object(once.dump());
  CHECK(once == twice);
  CHECK(once.dump() == twice.dump());
}
