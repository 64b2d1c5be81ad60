#pragma once

// Page fetching and markup stripping. The default fetcher is plain HTTP;
// anything fancier (headless browser rendering) plugs in behind PageFetcher.

#include <atomic>
#include <cctype>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <httplib.h>

#include "factpipe/errors.hpp"
#include "factpipe/json_util.hpp"
#include "factpipe/util.hpp"

namespace factpipe {

struct FetchBudget {
  std::chrono::seconds timeout{15};
  std::size_t max_bytes = 2 * 1024 * 1024;
  // Redirect cap is 3, enforced by the HTTP client build configuration.
  int max_redirects = 3;
};

struct FetchedPage {
  std::string url;
  int status = 0;
  std::string content_type;
  std::string body;
};

class PageFetcher {
 public:
  virtual ~PageFetcher() = default;
  virtual FetchedPage fetch(const std::string& url, const FetchBudget& budget) = 0;
};

class HttpPageFetcher : public PageFetcher {
 public:
  FetchedPage fetch(const std::string& url, const FetchBudget& budget) override {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw FetchError("url missing scheme: " + url);
    auto path_begin = url.find('/', scheme_end + 3);
    std::string origin = path_begin == std::string::npos ? url : url.substr(0, path_begin);
    std::string path = path_begin == std::string::npos ? "/" : url.substr(path_begin);

    httplib::Client client(origin);
    client.set_connection_timeout(budget.timeout);
    client.set_read_timeout(budget.timeout);
    client.set_follow_location(budget.max_redirects > 0);

    bool over_cap = false;
    std::string body;
    auto result = client.Get(path, [&](const char* data, std::size_t len) {
      if (body.size() + len > budget.max_bytes) {
        over_cap = true;
        return false;
      }
      body.append(data, len);
      return true;
    });
    if (over_cap) {
      throw FetchError("page exceeds size cap (" + std::to_string(budget.max_bytes) +
                       " bytes): " + url);
    }
    if (!result) throw FetchError("fetch failed for " + url + ": " + httplib::to_string(result.error()));

    FetchedPage page;
    page.url = url;
    page.status = result->status;
    page.content_type = result->get_header_value("Content-Type");
    page.body = std::move(body);
    return page;
  }
};

// Replays pages from <dir>/<fnv1a64(url)>.json holding
// {"url","status","content_type","body"}.
class FixturePageFetcher : public PageFetcher {
 public:
  explicit FixturePageFetcher(std::filesystem::path dir) : dir_(std::move(dir)) {}

  static std::string fixture_name(const std::string& url) { return fnv1a64_hex(url) + ".json"; }

  FetchedPage fetch(const std::string& url, const FetchBudget& budget) override {
    ++calls_;
    auto path = dir_ / fixture_name(url);
    std::ifstream in(path);
    if (!in) {
      throw FetchError("no page fixture for " + url + " (expected " + path.string() + ")");
    }
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw FetchError("page fixture is not valid JSON: " + path.string());
    FetchedPage page;
    page.url = j.value("url", url);
    page.status = j.value("status", 200);
    page.content_type = j.value("content_type", std::string{"text/html"});
    page.body = j.value("body", std::string{});
    if (page.body.size() > budget.max_bytes) {
      throw FetchError("page exceeds size cap (" + std::to_string(budget.max_bytes) +
                       " bytes): " + url);
    }
    return page;
  }

  std::size_t call_count() const { return calls_.load(); }

 private:
  std::filesystem::path dir_;
  std::atomic<std::size_t> calls_{0};
};

class RecordingPageFetcher : public PageFetcher {
 public:
  RecordingPageFetcher(std::shared_ptr<PageFetcher> inner, std::filesystem::path dir)
      : inner_(std::move(inner)), dir_(std::move(dir)) {}

  FetchedPage fetch(const std::string& url, const FetchBudget& budget) override {
    FetchedPage page = inner_->fetch(url, budget);
    std::lock_guard lock(mutex_);
    std::filesystem::create_directories(dir_);
    auto path = dir_ / FixturePageFetcher::fixture_name(url);
    std::ofstream out(path);
    if (!out) throw StorageError("cannot write page fixture: " + path.string());
    Json j{{"url", page.url},
           {"status", page.status},
           {"content_type", page.content_type},
           {"body", page.body}};
    out << j.dump(2) << '\n';
    return page;
  }

 private:
  std::shared_ptr<PageFetcher> inner_;
  std::filesystem::path dir_;
  std::mutex mutex_;
};

namespace detail {

inline std::string decode_entities(const std::string& in) {
  static const std::pair<const char*, const char*> kEntities[] = {
      {"&amp;", "&"}, {"&lt;", "<"},   {"&gt;", ">"},    {"&quot;", "\""},
      {"&#39;", "'"}, {"&apos;", "'"}, {"&nbsp;", " "},  {"&#160;", " "},
  };
  std::string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    bool matched = false;
    if (in[i] == '&') {
      for (const auto& [entity, repl] : kEntities) {
        std::size_t n = std::char_traits<char>::length(entity);
        if (in.compare(i, n, entity) == 0) {
          out += repl;
          i += n;
          matched = true;
          break;
        }
      }
    }
    if (!matched) out += in[i++];
  }
  return out;
}

inline bool is_block_tag(std::string_view name) {
  static const char* kBlocks[] = {"p",  "br", "div", "li",      "ul",      "ol",     "tr",
                                  "td", "th", "h1",  "h2",      "h3",      "h4",     "h5",
                                  "h6", "table", "section", "article", "header", "footer"};
  for (const char* b : kBlocks) {
    if (iequals(name, b)) return true;
  }
  return false;
}

}  // namespace detail

// Strips tags, comments, and script/style/noscript blocks; decodes common
// entities; block tags become line breaks and whitespace runs collapse.
inline std::string html_to_text(const std::string& html) {
  std::string raw;
  raw.reserve(html.size());
  std::size_t i = 0;
  while (i < html.size()) {
    if (html[i] != '<') {
      raw += html[i++];
      continue;
    }
    if (html.compare(i, 4, "<!--") == 0) {
      auto end = html.find("-->", i + 4);
      i = end == std::string::npos ? html.size() : end + 3;
      continue;
    }
    std::size_t name_start = i + 1;
    if (name_start < html.size() && html[name_start] == '/') ++name_start;
    std::size_t name_end = name_start;
    while (name_end < html.size() &&
           std::isalnum(static_cast<unsigned char>(html[name_end]))) {
      ++name_end;
    }
    std::string_view name(html.data() + name_start, name_end - name_start);
    auto tag_close = html.find('>', i);
    if (tag_close == std::string::npos) break;
    bool is_open = html[i + 1] != '/';
    if (is_open && (iequals(name, "script") || iequals(name, "style") ||
                    iequals(name, "noscript"))) {
      std::string closer = "</" + to_lower(name);
      auto end = ifind(html, closer, tag_close);
      if (end == std::string::npos) break;
      i = html.find('>', end);
      i = i == std::string::npos ? html.size() : i + 1;
      continue;
    }
    raw += detail::is_block_tag(name) ? '\n' : ' ';
    i = tag_close + 1;
  }

  raw = detail::decode_entities(raw);

  // Collapse: spaces within a line, blank lines entirely.
  std::string out;
  std::string line;
  auto flush_line = [&] {
    std::string t = trim(line);
    if (!t.empty()) {
      if (!out.empty()) out += '\n';
      std::string collapsed;
      bool in_space = false;
      for (char c : t) {
        if (std::isspace(static_cast<unsigned char>(c))) {
          in_space = true;
        } else {
          if (in_space && !collapsed.empty()) collapsed += ' ';
          in_space = false;
          collapsed += c;
        }
      }
      out += collapsed;
    }
    line.clear();
  };
  for (char c : raw) {
    if (c == '\n') flush_line();
    else line += c;
  }
  flush_line();
  return out;
}

// Fetch plus markup stripping; non-success statuses and non-text payloads
// are fetch failures.
inline std::string fetch_full_text(const std::string& url, PageFetcher& fetcher,
                                   const FetchBudget& budget = {}) {
  FetchedPage page = fetcher.fetch(url, budget);
  if (page.status < 200 || page.status >= 300) {
    throw FetchError("HTTP " + std::to_string(page.status) + " for " + url);
  }
  std::string type = to_lower(page.content_type);
  bool is_html = type.empty() || type.find("html") != std::string::npos ||
                 type.find("xml") != std::string::npos;
  bool is_plain = type.find("text/plain") != std::string::npos;
  if (!is_html && !is_plain) {
    throw FetchError("unsupported content type \"" + page.content_type + "\" for " + url);
  }
  return is_plain ? page.body : html_to_text(page.body);
}

}  // namespace factpipe
