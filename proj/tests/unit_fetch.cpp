#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "factpipe/fetch.hpp"
#include "support/test_support.hpp"

using namespace factpipe;
using testsupport::LocalServer;
using testsupport::TempDir;

TEST_CASE("html stripping keeps text, drops markup") {
  CHECK(html_to_text("<p>A</p><script>var x = '<p>no</p>';</script>") == "A");
  CHECK(html_to_text("<html><body><h1>Title</h1><p>Body text.</p></body></html>") ==
        "Title\nBody text.");
  CHECK(html_to_text("plain text, no tags") == "plain text, no tags");
  CHECK(html_to_text("before<!-- a comment <p>hidden</p> -->after") == "beforeafter");
  CHECK(html_to_text("<style>p { color: red; }</style><p>visible</p>") == "visible");
  CHECK(html_to_text("<noscript><img src=x></noscript>shown") == "shown");
}

TEST_CASE("html stripping decodes common entities") {
  CHECK(html_to_text("a &amp; b &lt;c&gt; &quot;d&quot; &#39;e&#39; f&nbsp;g") ==
        "a & b <c> \"d\" 'e' f g");
  CHECK(html_to_text("unknown &entity; left alone") == "unknown &entity; left alone");
}

TEST_CASE("block tags become line breaks, inline tags become spaces") {
  CHECK(html_to_text("<div>one</div><div>two</div>") == "one\ntwo");
  CHECK(html_to_text("line one<br>line two") == "line one\nline two");
  CHECK(html_to_text("a<span>b</span>c") == "a b c");
  CHECK(html_to_text("<ul><li>x</li><li>y</li></ul>") == "x\ny");
  CHECK(html_to_text("<em>in</em>line") == "in line");
}

TEST_CASE("whitespace collapses within lines and blank lines vanish") {
  CHECK(html_to_text("<p>  spaced    out  </p>\n\n\n<p>next</p>") == "spaced out\nnext");
  CHECK(html_to_text("   \n\t\n  ") == "");
  CHECK(html_to_text("<p></p><p></p>") == "");
  CHECK(html_to_text("SCRIPT tags in <SCRIPT>any()</SCRIPT><P>CASE</P>") ==
        "SCRIPT tags in\nCASE");
}

TEST_CASE("stripping malformed html never throws") {
  CHECK_NOTHROW(html_to_text("<p>unclosed"));
  CHECK_NOTHROW(html_to_text("<script>never closed"));
  CHECK_NOTHROW(html_to_text("<"));
  CHECK_NOTHROW(html_to_text("<<<>>>"));
  CHECK(html_to_text("text <b") == "text");
}

TEST_CASE("fixture fetcher replays saved pages and enforces the size cap") {
  TempDir dir;
  testsupport::write_page_fixture(dir.path, "https://example.gov/page",
                                  "<p>Saved content</p>");

  FixturePageFetcher fetcher(dir.path);
  FetchBudget budget;
  auto page = fetcher.fetch("https://example.gov/page", budget);
  CHECK(page.status == 200);
  CHECK(page.content_type == "text/html");
  CHECK(page.body == "<p>Saved content</p>");
  CHECK(fetcher.call_count() == 1);

  CHECK_THROWS_AS(fetcher.fetch("https://example.gov/missing", budget), FetchError);

  FetchBudget tiny;
  tiny.max_bytes = 4;
  CHECK_THROWS_AS(fetcher.fetch("https://example.gov/page", tiny), FetchError);
}

TEST_CASE("fetch_full_text combines status, content-type and stripping rules") {
  TempDir dir;
  testsupport::write_page_fixture(dir.path, "https://a.gov/html", "<p>hello</p>");
  testsupport::write_page_fixture(dir.path, "https://a.gov/plain", "raw <not html>", 200,
                                  "text/plain; charset=utf-8");
  testsupport::write_page_fixture(dir.path, "https://a.gov/pdf", "%PDF-1.4", 200,
                                  "application/pdf");
  testsupport::write_page_fixture(dir.path, "https://a.gov/gone", "<p>gone</p>", 404);

  FixturePageFetcher fetcher(dir.path);
  CHECK(fetch_full_text("https://a.gov/html", fetcher) == "hello");
  CHECK(fetch_full_text("https://a.gov/plain", fetcher) == "raw <not html>");
  CHECK_THROWS_AS(fetch_full_text("https://a.gov/pdf", fetcher), FetchError);
  CHECK_THROWS_AS(fetch_full_text("https://a.gov/gone", fetcher), FetchError);
}

TEST_CASE("http fetcher pulls live pages and follows redirects") {
  LocalServer server;
  server.server.Get("/start", [&](const httplib::Request&, httplib::Response& res) {
    res.set_redirect("/hop1");
  });
  server.server.Get("/hop1", [&](const httplib::Request&, httplib::Response& res) {
    res.set_redirect("/hop2");
  });
  server.server.Get("/hop2", [&](const httplib::Request&, httplib::Response& res) {
    res.set_redirect("/final");
  });
  server.server.Get("/final", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content("<html><p>Landed</p></html>", "text/html");
  });
  server.start();

  HttpPageFetcher fetcher;
  FetchBudget budget;
  // three hops: start -> hop1 -> hop2 -> final, exactly at the redirect cap
  auto page = fetcher.fetch(server.origin() + "/start", budget);
  CHECK(page.status == 200);
  CHECK(page.body.find("Landed") != std::string::npos);
  CHECK(fetch_full_text(server.origin() + "/start", fetcher) == "Landed");
}

TEST_CASE("http fetcher reports status and caps oversized bodies") {
  LocalServer server;
  server.server.Get("/missing", [&](const httplib::Request&, httplib::Response& res) {
    res.status = 404;
    res.set_content("<p>not here</p>", "text/html");
  });
  server.server.Get("/huge", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(std::string(64 * 1024, 'x'), "text/html");
  });
  server.start();

  HttpPageFetcher fetcher;
  FetchBudget budget;
  auto page = fetcher.fetch(server.origin() + "/missing", budget);
  CHECK(page.status == 404);
  CHECK_THROWS_AS(fetch_full_text(server.origin() + "/missing", fetcher), FetchError);

  FetchBudget small;
  small.max_bytes = 1024;
  CHECK_THROWS_AS(fetcher.fetch(server.origin() + "/huge", small), FetchError);
  CHECK_NOTHROW(fetcher.fetch(server.origin() + "/huge", budget));

  CHECK_THROWS_AS(fetcher.fetch("no-scheme.example/x", budget), FetchError);
  CHECK_THROWS_AS(fetcher.fetch("http://127.0.0.1:1/unreachable", budget), FetchError);
}

TEST_CASE("recording fetcher saves replayable page fixtures") {
  LocalServer server;
  server.server.Get("/doc", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content("<p>Recorded</p>", "text/html");
  });
  server.start();

  TempDir dir;
  RecordingPageFetcher recorder(std::make_shared<HttpPageFetcher>(), dir.path);
  FetchBudget budget;
  std::string url = server.origin() + "/doc";
  auto live = recorder.fetch(url, budget);

  FixturePageFetcher replay(dir.path);
  auto saved = replay.fetch(url, budget);
  CHECK(saved.body == live.body);
  CHECK(saved.status == live.status);
  CHECK(saved.url == url);
}
