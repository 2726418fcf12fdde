#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgval/http.hpp"
#include "kgval/retrieval.hpp"
#include "kgval/types.hpp"

namespace kgval {

enum class ProviderKind { WorldKnowledge, Corpus, Wikidata, Web, WikidataWeb, WikipediaWikidata };

std::string_view to_string(ProviderKind k) noexcept;
/// Accepts both "wikidata_web" and "wikidata-web" spellings, plus "world".
std::optional<ProviderKind> provider_kind_from_string(std::string_view s) noexcept;

struct ProviderConfig {
    ProviderKind kind = ProviderKind::WorldKnowledge;
    std::size_t k = 4;
    std::vector<std::filesystem::path> corpus_paths;
    std::size_t web_results = 5;
    std::optional<std::filesystem::path> cache_dir;

    void validate() const;
};

/// External hosts. Every one can point at a fixture server.
struct ServiceEndpoints {
    std::string wikidata_api = "https://www.wikidata.org/w/api.php";
    std::string wikipedia_api = "https://en.wikipedia.org/w/api.php";
    std::string wikipedia_page_base = "https://en.wikipedia.org/wiki/";
    // Either a JSON endpoint returning [{title, url, snippet}] (optionally wrapped in
    // {"results": [...]}) or the DuckDuckGo HTML results page.
    std::string search_endpoint = "https://html.duckduckgo.com/html/";
};

struct WikidataClaim {
    std::string property_id;
    std::string property_label;
    std::string datatype;
    std::string value_text;

    friend bool operator==(const WikidataClaim&, const WikidataClaim&) = default;
};

struct WikidataEntity {
    std::string qid;
    std::string label;
    std::string description;
    std::vector<WikidataClaim> claims;
    std::map<std::string, std::string> sitelinks;

    friend bool operator==(const WikidataEntity&, const WikidataEntity&) = default;
};

inline constexpr std::string_view kExternalIdDatatype = "external-id";

/// Drops every claim whose datatype is the external-identifier datatype.
WikidataEntity filter_trivial_properties(WikidataEntity entity);

/// The label and description joined by an em dash, then one "property_label: value"
/// line per claim.
Document entity_to_text(const WikidataEntity& entity);

/// Visible text of an HTML page: scripts and styles dropped, entities decoded,
/// whitespace collapsed, block elements on their own lines.
std::string html_to_text(std::string_view html);

bool is_qid(std::string_view s) noexcept;
bool is_pid(std::string_view s) noexcept;

/// Produces the context bundle for a triple under one validator configuration.
///
/// All network access goes through the supplied transport; with
/// `ProviderConfig::cache_dir` set it is wrapped in a disk cache. Shareable across
/// threads.
class ContextService {
public:
    ContextService(ProviderConfig cfg, std::shared_ptr<HttpTransport> transport,
                   std::shared_ptr<EmbeddingProvider> embedder, ServiceEndpoints endpoints = {},
                   ChunkingConfig chunking = {});

    const ProviderConfig& config() const noexcept { return cfg_; }

    ContextBundle gather_context(const Triple& triple);

    static ContextBundle world_knowledge(const Triple& triple);
    ContextBundle corpus_context(const Triple& triple);
    ContextBundle wikidata_context(const Triple& triple);
    ContextBundle web_context(const Triple& triple);
    ContextBundle wikipedia_context(const Triple& triple);

    std::optional<std::string> wikidata_search(std::string_view label);
    /// Entity with claim values and property names resolved to English labels.
    WikidataEntity fetch_entity(const std::string& qid);
    std::vector<Document> web_search(std::string_view query, std::size_t n);

    std::vector<Document> load_corpus() const;

private:
    nlohmann::json get_json(const std::string& url);
    WikidataEntity fetch_entity_unresolved(const std::string& qid);
    ContextBundle ranked_bundle(const std::vector<Document>& docs, const Triple& triple,
                                std::string_view provider);
    static ContextBundle fallback_bundle(std::string_view provider);
    ContextBundle merge(std::vector<ContextBundle> members, std::string_view provider) const;

    ProviderConfig cfg_;
    std::shared_ptr<HttpTransport> transport_;
    std::shared_ptr<EmbeddingProvider> embedder_;
    ServiceEndpoints endpoints_;
    ChunkingConfig chunking_;
    RetryPolicy retry_{};

    std::once_flag corpus_once_;
    std::unique_ptr<CorpusIndex> corpus_index_;
};

}  // namespace kgval
