#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "smtl/model.hpp"
#include "smtl/protocol.hpp"

namespace smtl {

struct SearchResult {
    std::string title;
    std::string snippet;
    std::string url;

    bool operator==(const SearchResult&) const = default;
};

/// Goal-conditioned page digest: the three-field JSON contract the
/// summarizer must return.
struct PageDigest {
    std::string rationale;
    std::string evidence;
    std::string summary;
    std::string source_url;

    bool operator==(const PageDigest&) const = default;
};

enum class ToolErrorKind { Timeout, ServerError, NotFound, DecodeError };

const char* tool_error_kind_name(ToolErrorKind kind);
std::optional<ToolErrorKind> tool_error_kind_from_name(const std::string& name);

struct ToolError {
    ToolErrorKind kind = ToolErrorKind::ServerError;
    std::string detail;

    bool operator==(const ToolError&) const = default;
};

/// o_t^(k): the outcome of one tool call, carrying its originating index.
struct ToolObservation {
    int request_index = 0;
    std::string tool;
    std::variant<std::vector<SearchResult>, PageDigest, ToolError> outcome;

    bool ok() const { return !std::holds_alternative<ToolError>(outcome); }
    const ToolError* error() const { return std::get_if<ToolError>(&outcome); }

    bool operator==(const ToolObservation&) const = default;
};

class SearchBackend {
public:
    virtual ~SearchBackend() = default;
    /// Ranked results, at most top_k, backend order preserved.
    virtual std::vector<SearchResult> search(const std::string& query, int top_k) = 0;
};

class PageSource {
public:
    virtual ~PageSource() = default;
    struct Page {
        std::string url;
        std::string title;
        std::string body;
    };
    virtual Page fetch(const std::string& url) = 0;
};

class Summarizer {
public:
    virtual ~Summarizer() = default;
    virtual PageDigest digest(const std::string& url, const std::string& title,
                              const std::string& content, const std::string& goal) = 0;
};

/// Tool failures travel as values so the dispatcher can aggregate them;
/// backends throw this internally.
class ToolFailure : public std::runtime_error {
public:
    ToolFailure(ToolErrorKind kind, const std::string& detail)
        : std::runtime_error(detail), kind_(kind) {}
    ToolErrorKind kind() const { return kind_; }

private:
    ToolErrorKind kind_;
};

// ---------------------------------------------------------------------------
// Mock corpus backend: a directory of page files plus an index manifest.
// Pure function of (corpus, query/url, top_k); repeatable bit for bit.
// ---------------------------------------------------------------------------

struct CorpusPage {
    std::string url;
    std::string title;
    std::string body;
};

class MockCorpus {
public:
    /// Loads manifest.json ({"pages": [{"url", "title", "file"}]}) and the
    /// referenced page files.
    static MockCorpus load(const std::string& directory);

    /// Builds a corpus directly from pages (test convenience).
    static MockCorpus from_pages(std::vector<CorpusPage> pages);

    const CorpusPage* find(const std::string& url) const;
    const std::vector<CorpusPage>& pages() const { return pages_; }

    /// Ranking: score = term frequency of the query terms in title+body,
    /// ties broken by url lexicographic order. Zero-score pages are omitted.
    std::vector<SearchResult> search(const std::string& query, int top_k) const;

private:
    std::vector<CorpusPage> pages_;
    std::map<std::string, size_t> by_url_;
};

class MockSearchBackend : public SearchBackend {
public:
    explicit MockSearchBackend(std::shared_ptr<const MockCorpus> corpus)
        : corpus_(std::move(corpus)) {}
    std::vector<SearchResult> search(const std::string& query, int top_k) override;

private:
    std::shared_ptr<const MockCorpus> corpus_;
};

class MockPageSource : public PageSource {
public:
    explicit MockPageSource(std::shared_ptr<const MockCorpus> corpus)
        : corpus_(std::move(corpus)) {}
    Page fetch(const std::string& url) override;  // throws ToolFailure(NotFound)

private:
    std::shared_ptr<const MockCorpus> corpus_;
};

/// Offline digest builder: deterministic excerpt selection around the first
/// goal-term hit. No model involved.
class TemplateSummarizer : public Summarizer {
public:
    PageDigest digest(const std::string& url, const std::string& title,
                      const std::string& content, const std::string& goal) override;
};

/// Live digest path: one summarizer-model call with the goal-conditioned
/// summarization prompt, then JSON decoding with one repair pass.
class ModelSummarizer : public Summarizer {
public:
    ModelSummarizer(std::shared_ptr<ModelBackend> backend, std::string model_id);
    PageDigest digest(const std::string& url, const std::string& title,
                      const std::string& content, const std::string& goal) override;

private:
    std::shared_ptr<ModelBackend> backend_;
    std::string model_id_;
};

/// Decodes summarizer output into the three-field digest. Applies one repair
/// pass (strip code fences, first balanced object) before giving up.
/// Throws ToolFailure(DecodeError).
PageDigest decode_page_digest(const std::string& raw, const std::string& source_url);

// ---------------------------------------------------------------------------
// Live HTTP backends.
// ---------------------------------------------------------------------------

struct HttpToolConfig {
    std::string base_url;
    std::string path;            // search: POST path; reader: prefix for GET
    std::string api_key;
    int timeout_seconds = 30;    // per-call timeout (live default)
};

/// POST {"q": query, "num": top_k}; response {"organic": [{title, snippet,
/// link}]} or a bare array of the same objects.
class HttpSearchBackend : public SearchBackend {
public:
    explicit HttpSearchBackend(HttpToolConfig config);
    std::vector<SearchResult> search(const std::string& query, int top_k) override;
    std::string last_raw_response() const;

private:
    HttpToolConfig config_;
    mutable std::mutex mutex_;
    std::string last_raw_;
};

/// GET <path><url>; the reader endpoint returns extracted page text.
class HttpReaderSource : public PageSource {
public:
    explicit HttpReaderSource(HttpToolConfig config);
    Page fetch(const std::string& url) override;
    std::string last_raw_response() const;

private:
    HttpToolConfig config_;
    mutable std::mutex mutex_;
    std::string last_raw_;
};

// ---------------------------------------------------------------------------
// Router + dispatcher.
// ---------------------------------------------------------------------------

class ToolRouter {
public:
    ToolRouter(std::shared_ptr<SearchBackend> search, std::shared_ptr<PageSource> pages,
               std::shared_ptr<Summarizer> summarizer, int default_top_k = 5);

    /// Executes one request; failures become ToolError outcomes, never throws.
    ToolObservation execute(const ToolCallRequest& req);

    int default_top_k() const { return default_top_k_; }
    void set_default_top_k(int k) { default_top_k_ = k; }

private:
    std::shared_ptr<SearchBackend> search_;
    std::shared_ptr<PageSource> pages_;
    std::shared_ptr<Summarizer> summarizer_;
    int default_top_k_;
};

/// Runs all calls with at most `width` in flight; observations come back
/// sorted by request index regardless of completion order.
std::vector<ToolObservation> dispatch_parallel(const std::vector<ToolCallRequest>& calls,
                                               int width, ToolRouter& router);

/// One <tool_response> block per observation in request-index order, each
/// labeled "[index] tool". Failures render as an explicit ERROR line so the
/// model sees them. An empty list renders as an empty string.
std::string render_tool_responses(std::vector<ToolObservation> observations);

}  // namespace smtl
