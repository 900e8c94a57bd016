#include "smtl/tools.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "smtl/prompts.hpp"
#include "smtl/util.hpp"

namespace smtl {

using nlohmann::json;
namespace fs = std::filesystem;

const char* tool_error_kind_name(ToolErrorKind kind) {
    switch (kind) {
        case ToolErrorKind::Timeout: return "Timeout";
        case ToolErrorKind::ServerError: return "ServerError";
        case ToolErrorKind::NotFound: return "NotFound";
        case ToolErrorKind::DecodeError: return "DecodeError";
    }
    return "ServerError";
}

std::optional<ToolErrorKind> tool_error_kind_from_name(const std::string& name) {
    if (name == "Timeout") return ToolErrorKind::Timeout;
    if (name == "ServerError") return ToolErrorKind::ServerError;
    if (name == "NotFound") return ToolErrorKind::NotFound;
    if (name == "DecodeError") return ToolErrorKind::DecodeError;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Mock corpus
// ---------------------------------------------------------------------------

MockCorpus MockCorpus::load(const std::string& directory) {
    json manifest = json::parse(read_file((fs::path(directory) / "manifest.json").string()));
    std::vector<CorpusPage> pages;
    for (const json& entry : manifest.at("pages")) {
        CorpusPage page;
        page.url = entry.at("url").get<std::string>();
        page.title = entry.value("title", "");
        page.body = read_file((fs::path(directory) / entry.at("file").get<std::string>()).string());
        pages.push_back(std::move(page));
    }
    return from_pages(std::move(pages));
}

MockCorpus MockCorpus::from_pages(std::vector<CorpusPage> pages) {
    MockCorpus corpus;
    corpus.pages_ = std::move(pages);
    for (size_t i = 0; i < corpus.pages_.size(); ++i) {
        corpus.by_url_[corpus.pages_[i].url] = i;
    }
    return corpus;
}

const CorpusPage* MockCorpus::find(const std::string& url) const {
    auto it = by_url_.find(url);
    return it == by_url_.end() ? nullptr : &pages_[it->second];
}

namespace {

std::vector<std::string> query_terms(const std::string& query) {
    std::vector<std::string> out;
    std::string current;
    for (char c : to_lower(query)) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current += c;
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

long count_occurrences(const std::string& haystack, const std::string& needle) {
    if (needle.empty()) return 0;
    long n = 0;
    size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

std::string make_snippet(const std::string& body) {
    std::string flat;
    flat.reserve(body.size());
    for (char c : body) flat += (c == '\n' || c == '\t') ? ' ' : c;
    if (flat.size() > 200) {
        flat.resize(200);
        flat += "...";
    }
    return trim(flat);
}

}  // namespace

std::vector<SearchResult> MockCorpus::search(const std::string& query, int top_k) const {
    std::vector<std::string> terms = query_terms(query);
    struct Scored {
        long score;
        const CorpusPage* page;
    };
    std::vector<Scored> scored;
    for (const CorpusPage& page : pages_) {
        std::string text = to_lower(page.title) + "\n" + to_lower(page.body);
        long score = 0;
        for (const std::string& term : terms) score += count_occurrences(text, term);
        if (score > 0) scored.push_back({score, &page});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.page->url < b.page->url;
    });
    std::vector<SearchResult> out;
    for (const Scored& s : scored) {
        if (static_cast<int>(out.size()) >= top_k) break;
        out.push_back({s.page->title, make_snippet(s.page->body), s.page->url});
    }
    return out;
}

std::vector<SearchResult> MockSearchBackend::search(const std::string& query, int top_k) {
    return corpus_->search(query, top_k);
}

PageSource::Page MockPageSource::fetch(const std::string& url) {
    const CorpusPage* page = corpus_->find(url);
    if (!page) throw ToolFailure(ToolErrorKind::NotFound, "url not in mock corpus: " + url);
    return {page->url, page->title, page->body};
}

// ---------------------------------------------------------------------------
// Digest decoding + summarizers
// ---------------------------------------------------------------------------

namespace {

std::string strip_fences_and_extract(const std::string& raw) {
    std::string s = raw;
    size_t fence = s.find("```");
    if (fence != std::string::npos) {
        size_t body_start = s.find('\n', fence);
        if (body_start != std::string::npos) {
            size_t fence_end = s.find("```", body_start);
            if (fence_end != std::string::npos) s = s.substr(body_start + 1, fence_end - body_start - 1);
        }
    }
    size_t start = s.find('{');
    if (start == std::string::npos) return "";
    int depth = 0;
    bool in_string = false, escape = false;
    for (size_t i = start; i < s.size(); ++i) {
        char c = s[i];
        if (escape) { escape = false; continue; }
        if (c == '\\') { escape = true; continue; }
        if (c == '"') in_string = !in_string;
        if (in_string) continue;
        if (c == '{') ++depth;
        if (c == '}' && --depth == 0) return s.substr(start, i - start + 1);
    }
    return "";
}

}  // namespace

PageDigest decode_page_digest(const std::string& raw, const std::string& source_url) {
    json obj;
    bool parsed = false;
    for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
        std::string candidate = attempt == 0 ? trim(raw) : strip_fences_and_extract(raw);
        if (candidate.empty()) continue;
        try {
            obj = json::parse(candidate);
            parsed = obj.is_object();
        } catch (const json::exception&) {
        }
    }
    if (!parsed) {
        throw ToolFailure(ToolErrorKind::DecodeError,
                          "summarizer output is not a JSON object after repair");
    }
    for (const char* field : {"rationale", "evidence", "summary"}) {
        if (!obj.contains(field) || !obj[field].is_string()) {
            throw ToolFailure(ToolErrorKind::DecodeError,
                              std::string("digest missing string field \"") + field + "\"");
        }
    }
    PageDigest digest;
    digest.rationale = obj["rationale"].get<std::string>();
    digest.evidence = obj["evidence"].get<std::string>();
    digest.summary = obj["summary"].get<std::string>();
    digest.source_url = source_url;
    return digest;
}

PageDigest TemplateSummarizer::digest(const std::string& url, const std::string& title,
                                      const std::string& content, const std::string& goal) {
    // Excerpt around the first occurrence of any goal term; body prefix when
    // nothing matches.
    std::string lowered = to_lower(content);
    size_t hit = std::string::npos;
    for (const std::string& term : query_terms(goal)) {
        size_t p = lowered.find(term);
        if (p != std::string::npos && (hit == std::string::npos || p < hit)) hit = p;
    }
    size_t begin = hit == std::string::npos ? 0 : (hit < 120 ? 0 : hit - 120);
    std::string excerpt = content.substr(begin, std::min<size_t>(480, content.size() - begin));

    PageDigest digest;
    digest.rationale = hit == std::string::npos
                           ? "No direct match for the goal; returning the page opening."
                           : "Excerpt selected around the first match of the goal terms.";
    digest.evidence = trim(excerpt);
    digest.summary = trim(title.empty() ? make_snippet(content) : title + ": " + make_snippet(content));
    digest.source_url = url;
    return digest;
}

ModelSummarizer::ModelSummarizer(std::shared_ptr<ModelBackend> backend, std::string model_id)
    : backend_(std::move(backend)), model_id_(std::move(model_id)) {}

PageDigest ModelSummarizer::digest(const std::string& url, const std::string& /*title*/,
                                   const std::string& content, const std::string& goal) {
    ChatRequest req;
    req.model_id = model_id_;
    req.temperature = 0.0;
    req.messages.push_back({"user", prompts::summarize_page(url, content, goal)});
    ChatResponse resp = backend_->complete(req);
    return decode_page_digest(resp.text, url);
}

// ---------------------------------------------------------------------------
// Live HTTP backends
// ---------------------------------------------------------------------------

HttpSearchBackend::HttpSearchBackend(HttpToolConfig config) : config_(std::move(config)) {}

std::string HttpSearchBackend::last_raw_response() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return last_raw_;
}

std::vector<SearchResult> HttpSearchBackend::search(const std::string& query, int top_k) {
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("X-API-KEY", config_.api_key);

    json body;
    body["q"] = query;
    body["num"] = top_k;
    auto res = client.Post(config_.path.empty() ? "/search" : config_.path, headers, body.dump(),
                           "application/json");
    if (!res) throw ToolFailure(ToolErrorKind::Timeout, "search backend unreachable");
    if (res->status >= 500) {
        throw ToolFailure(ToolErrorKind::ServerError, "search status " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw ToolFailure(ToolErrorKind::ServerError,
                          "search status " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    {
        std::lock_guard<std::mutex> lock(mutex_);
        last_raw_ = res->body;
    }
    json parsed;
    try {
        parsed = json::parse(res->body);
    } catch (const json::exception& e) {
        throw ToolFailure(ToolErrorKind::DecodeError, std::string("search response: ") + e.what());
    }
    const json* items = nullptr;
    if (parsed.is_array()) items = &parsed;
    else if (parsed.contains("organic")) items = &parsed["organic"];
    else if (parsed.contains("results")) items = &parsed["results"];
    if (!items || !items->is_array()) {
        throw ToolFailure(ToolErrorKind::DecodeError, "search response has no result array");
    }
    std::vector<SearchResult> out;
    for (const json& item : *items) {
        if (static_cast<int>(out.size()) >= top_k) break;
        SearchResult r;
        r.title = item.value("title", "");
        r.snippet = item.value("snippet", "");
        r.url = item.contains("link") ? item.value("link", "") : item.value("url", "");
        out.push_back(std::move(r));
    }
    return out;
}

HttpReaderSource::HttpReaderSource(HttpToolConfig config) : config_(std::move(config)) {}

std::string HttpReaderSource::last_raw_response() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return last_raw_;
}

PageSource::Page HttpReaderSource::fetch(const std::string& url) {
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto res = client.Get(config_.path + url, headers);
    if (!res) throw ToolFailure(ToolErrorKind::Timeout, "reader backend unreachable");
    if (res->status == 404) throw ToolFailure(ToolErrorKind::NotFound, "page not found: " + url);
    if (res->status != 200) {
        throw ToolFailure(ToolErrorKind::ServerError, "reader status " + std::to_string(res->status));
    }
    {
        std::lock_guard<std::mutex> lock(mutex_);
        last_raw_ = res->body;
    }
    return {url, "", res->body};
}

// ---------------------------------------------------------------------------
// Router + dispatcher
// ---------------------------------------------------------------------------

ToolRouter::ToolRouter(std::shared_ptr<SearchBackend> search, std::shared_ptr<PageSource> pages,
                       std::shared_ptr<Summarizer> summarizer, int default_top_k)
    : search_(std::move(search)),
      pages_(std::move(pages)),
      summarizer_(std::move(summarizer)),
      default_top_k_(default_top_k) {}

ToolObservation ToolRouter::execute(const ToolCallRequest& req) {
    ToolObservation obs;
    obs.request_index = req.index;
    obs.tool = req.name;
    try {
        if (req.name == "web_search") {
            auto it = req.arguments.find("query");
            std::string query = it == req.arguments.end() ? "" : it->second;
            obs.outcome = search_->search(query, default_top_k_);
        } else if (req.name == "crawl_page") {
            std::string url = req.arguments.count("url") ? req.arguments.at("url") : "";
            std::string goal = req.arguments.count("query") ? req.arguments.at("query") : "";
            PageSource::Page page = pages_->fetch(url);
            obs.outcome = summarizer_->digest(page.url, page.title, page.body, goal);
        } else {
            obs.outcome = ToolError{ToolErrorKind::ServerError, "unroutable tool: " + req.name};
        }
    } catch (const ToolFailure& e) {
        obs.outcome = ToolError{e.kind(), e.what()};
    } catch (const EnvFailure& e) {
        // Summarizer-model failures are tool-level environment errors.
        ToolErrorKind kind = e.kind() == EnvFailure::Kind::Timeout ? ToolErrorKind::Timeout
                                                                   : ToolErrorKind::ServerError;
        obs.outcome = ToolError{kind, e.what()};
    } catch (const std::exception& e) {
        obs.outcome = ToolError{ToolErrorKind::ServerError, e.what()};
    }
    return obs;
}

std::string render_tool_responses(std::vector<ToolObservation> observations) {
    std::sort(observations.begin(), observations.end(),
              [](const ToolObservation& a, const ToolObservation& b) {
                  return a.request_index < b.request_index;
              });
    std::string out;
    for (const ToolObservation& obs : observations) {
        if (!out.empty()) out += "\n";
        out += "<tool_response>\n[" + std::to_string(obs.request_index) + "] " + obs.tool + "\n";
        if (const auto* results = std::get_if<std::vector<SearchResult>>(&obs.outcome)) {
            nlohmann::ordered_json arr = nlohmann::ordered_json::array();
            for (const SearchResult& r : *results) {
                arr.push_back({{"title", r.title}, {"snippet", r.snippet}, {"url", r.url}});
            }
            nlohmann::ordered_json payload;
            payload["results"] = std::move(arr);
            out += payload.dump();
        } else if (const auto* digest = std::get_if<PageDigest>(&obs.outcome)) {
            nlohmann::ordered_json payload;
            payload["rationale"] = digest->rationale;
            payload["evidence"] = digest->evidence;
            payload["summary"] = digest->summary;
            payload["source_url"] = digest->source_url;
            out += payload.dump();
        } else if (const auto* err = std::get_if<ToolError>(&obs.outcome)) {
            out += "ERROR(" + std::string(tool_error_kind_name(err->kind)) + "): " + err->detail;
        }
        out += "\n</tool_response>";
    }
    return out;
}

std::vector<ToolObservation> dispatch_parallel(const std::vector<ToolCallRequest>& calls,
                                               int width, ToolRouter& router) {
    std::vector<ToolObservation> out(calls.size());
    if (calls.empty()) return out;
    width = std::max(1, width);

    std::atomic<size_t> cursor{0};
    auto worker = [&] {
        while (true) {
            size_t i = cursor.fetch_add(1);
            if (i >= calls.size()) return;
            out[i] = router.execute(calls[i]);
        }
    };
    size_t n_threads = std::min<size_t>(static_cast<size_t>(width), calls.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_threads);
        for (size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    std::sort(out.begin(), out.end(), [](const ToolObservation& a, const ToolObservation& b) {
        return a.request_index < b.request_index;
    });
    return out;
}

}  // namespace smtl
