#include <doctest.h>

#include <set>

#include "kgval/cache.hpp"
#include "kgval/error.hpp"
#include "kgval/providers.hpp"
#include "paths.hpp"

using namespace kgval;
using testing_support::fixture;
using testing_support::slurp;
using testing_support::TempDir;

namespace {

class CountingTransport final : public HttpTransport {
public:
    explicit CountingTransport(std::shared_ptr<HttpTransport> inner) : inner_(std::move(inner)) {}
    HttpResponse send(const HttpRequest& r) override {
        {
            std::lock_guard lock(mu_);
            urls.push_back(r.url);
        }
        return inner_->send(r);
    }
    std::size_t count() const {
        std::lock_guard lock(mu_);
        return urls.size();
    }
    std::vector<std::string> urls;

private:
    std::shared_ptr<HttpTransport> inner_;
    mutable std::mutex mu_;
};

std::shared_ptr<CountingTransport> recorded() {
    return std::make_shared<CountingTransport>(
        std::make_shared<FixtureTransport>(fixture("services/manifest.json")));
}

ContextService service(ProviderKind kind, std::shared_ptr<HttpTransport> t, std::size_t k = 4,
                       ChunkingConfig chunking = {}) {
    ProviderConfig cfg;
    cfg.kind = kind;
    cfg.k = k;
    return ContextService(cfg, std::move(t), std::make_shared<HashEmbeddingProvider>(), {}, chunking);
}

// Small enough that every fixture page splits into several chunks.
ChunkingConfig small_chunks() {
    ChunkingConfig c;
    c.max_chunk_chars = 160;
    c.overlap_chars = 30;
    return c;
}

const Triple kAdams("Douglas Adams", {"occupation"}, "writer");
const Triple kNowhere("zxqv-nonexistent-entity-77341", {"occupation"}, "writer");

}  // namespace

TEST_SUITE("context_providers") {

TEST_CASE("provider names") {
    CHECK(provider_kind_from_string("world") == ProviderKind::WorldKnowledge);
    CHECK(provider_kind_from_string("wikidata-web") == ProviderKind::WikidataWeb);
    CHECK(provider_kind_from_string("wikipedia_wikidata") == ProviderKind::WikipediaWikidata);
    CHECK_FALSE(provider_kind_from_string("dbpedia").has_value());
    ProviderConfig cfg;
    cfg.k = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("world knowledge yields no chunks and no fallback flag") {
    const auto b = ContextService::world_knowledge(kAdams);
    CHECK(b.chunks.empty());
    CHECK_FALSE(b.fallback_used);
    CHECK(b.provider_name == kWorldKnowledgeProvider);
    CHECK_NOTHROW(check_bundle(b));
}

TEST_CASE("wikidata search") {
    auto t = recorded();
    auto svc = service(ProviderKind::Wikidata, t);
    CHECK(svc.wikidata_search("Douglas Adams") == "Q42");
    CHECK(svc.wikidata_search("zxqv-nonexistent-entity-77341") == std::nullopt);
    const auto before = t->count();
    CHECK(svc.wikidata_search("") == std::nullopt);
    CHECK(svc.wikidata_search("   ") == std::nullopt);
    CHECK(t->count() == before);
}

TEST_CASE("fetched entity carries labels, values and sitelinks") {
    auto svc = service(ProviderKind::Wikidata, recorded());
    const auto e = svc.fetch_entity("Q42");
    CHECK(e.label == "Douglas Adams");
    CHECK(e.description == "English writer and humorist (1952–2001)");
    CHECK(e.sitelinks.at("enwiki") == "Douglas Adams");

    auto has = [&](const std::string& pid, const std::string& label, const std::string& value) {
        return std::any_of(e.claims.begin(), e.claims.end(), [&](const WikidataClaim& c) {
            return c.property_id == pid && c.property_label == label && c.value_text == value;
        });
    };
    CHECK(has("P106", "occupation", "writer"));
    CHECK(has("P106", "occupation", "novelist"));
    CHECK(has("P569", "date of birth", "1952-03-11"));
    CHECK(has("P2048", "height", "1.96 metre"));
    CHECK(has("P1559", "name in native language", "Douglas Adams"));
    CHECK(has("P1441", "present in work", "unknown value"));
    CHECK(has("P345", "IMDb ID", "nm0010930"));
    CHECK_THROWS_AS(svc.fetch_entity("not-a-qid"), InvalidArgument);
}

TEST_CASE("external identifiers are filtered, everything else kept") {
    auto svc = service(ProviderKind::Wikidata, recorded());
    const auto raw = svc.fetch_entity("Q42");
    const auto filtered = filter_trivial_properties(raw);

    // Oracle: the datatype fields of the recorded API response.
    const auto doc = nlohmann::json::parse(slurp(fixture("services/wbgetentities_Q42.json")));
    std::size_t kept = 0;
    for (const auto& [pid, statements] : doc["entities"]["Q42"]["claims"].items()) {
        for (const auto& st : statements) kept += st["mainsnak"]["datatype"] != "external-id" ? 1 : 0;
    }
    CHECK(filtered.claims.size() == kept);
    for (const auto& c : filtered.claims) CHECK(c.datatype != kExternalIdDatatype);
    CHECK(filter_trivial_properties(filtered) == filtered);

    WikidataEntity plain{"Q1", "x", "", {{"P31", "instance of", "wikibase-item", "thing"}}, {}};
    CHECK(filter_trivial_properties(plain) == plain);
}

TEST_CASE("entity text lists one claim per line") {
    WikidataEntity e{"Q42", "Douglas Adams", "English writer", {
        {"P106", "occupation", "wikibase-item", "writer"}, {"P19", "", "wikibase-item", "Cambridge"}}, {}};
    const auto d = entity_to_text(e);
    CHECK(d.id == "Q42");
    CHECK(d.origin == OriginKind::Wikidata);
    CHECK(d.body == "Douglas Adams — English writer\noccupation: writer\nP19: Cambridge");
}

TEST_CASE("wikidata context ranks the filtered entity text") {
    auto t = recorded();
    auto svc = service(ProviderKind::Wikidata, t);
    const auto b = svc.gather_context(kAdams);
    CHECK(b.provider_name == "wikidata");
    CHECK_FALSE(b.fallback_used);
    REQUIRE_FALSE(b.chunks.empty());
    CHECK_NOTHROW(check_bundle(b));
    std::string all;
    for (const auto& c : b.chunks) {
        CHECK(c.source_id == "Q42");
        CHECK(c.origin == OriginKind::Wikidata);
        all += c.text;
    }
    CHECK(all.find("occupation: writer") != std::string::npos);
    CHECK(all.find("nm0010930") == std::string::npos);
}

TEST_CASE("empty search falls back to inherent knowledge") {
    auto svc = service(ProviderKind::Wikidata, recorded());
    const auto b = svc.gather_context(kNowhere);
    CHECK(b.chunks.empty());
    CHECK(b.fallback_used);
    CHECK_NOTHROW(check_bundle(b));
}

TEST_CASE("web search follows result links and falls back to snippets") {
    auto svc = service(ProviderKind::Web, recorded());
    const auto docs = svc.web_search("Douglas Adams occupation writer", 5);
    REQUIRE(docs.size() == 3);
    CHECK(docs[0].id == "https://pages.example.org/adams-biography");
    CHECK(docs[0].origin == OriginKind::Web);
    CHECK(docs[0].body.find("English author, humourist and screenwriter") != std::string::npos);
    CHECK(docs[0].body.find("var t") == std::string::npos);
    CHECK(docs[1].body.find("comedy science fiction franchise") != std::string::npos);
    CHECK(docs[2].body == "Unreachable page\nAdams wrote radio comedy before turning to novels.");
    CHECK(svc.web_search("Douglas Adams occupation writer", 2).size() == 2);
    CHECK(svc.web_search("zxqv-nonexistent-entity-77341 occupation writer", 5).empty());
}

TEST_CASE("web context and its fallback") {
    auto svc = service(ProviderKind::Web, recorded(), 3);
    const auto b = svc.gather_context(kAdams);
    CHECK(b.chunks.size() == 3);
    CHECK_FALSE(b.fallback_used);
    const auto none = svc.gather_context(kNowhere);
    CHECK(none.fallback_used);
    CHECK(none.chunks.empty());
}

TEST_CASE("wikipedia context follows the English sitelink") {
    auto svc = service(ProviderKind::WikipediaWikidata, recorded());
    const auto b = svc.wikipedia_context(kAdams);
    REQUIRE_FALSE(b.chunks.empty());
    CHECK(b.chunks[0].source_id == "https://en.wikipedia.org/wiki/Douglas_Adams");
    CHECK(b.chunks[0].origin == OriginKind::Web);
    CHECK(svc.wikipedia_context(kNowhere).fallback_used);
}

TEST_CASE("composite providers merge by score and keep k") {
    for (auto kind : {ProviderKind::WikidataWeb, ProviderKind::WikipediaWikidata}) {
        CAPTURE(to_string(kind));
        auto svc = service(kind, recorded(), 4, small_chunks());
        const auto b = svc.gather_context(kAdams);
        CHECK(b.provider_name == to_string(kind));
        CHECK(b.chunks.size() == 4);
        CHECK_NOTHROW(check_bundle(b));
        for (std::size_t i = 1; i < b.chunks.size(); ++i) {
            CHECK(*b.chunks[i - 1].score >= *b.chunks[i].score);
        }
        const auto none = svc.gather_context(kNowhere);
        CHECK(none.fallback_used);
    }
}

TEST_CASE("composite keeps the best chunks of both members") {
    auto t = recorded();
    auto wikidata_only = service(ProviderKind::Wikidata, t, 8);
    auto web_only = service(ProviderKind::Web, t, 8);
    std::vector<double> scores;
    for (const auto& c : wikidata_only.gather_context(kAdams).chunks) scores.push_back(*c.score);
    for (const auto& c : web_only.gather_context(kAdams).chunks) scores.push_back(*c.score);
    std::sort(scores.rbegin(), scores.rend());

    auto both = service(ProviderKind::WikidataWeb, t, 3);
    const auto b = both.gather_context(kAdams);
    REQUIRE(b.chunks.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(*b.chunks[i].score == doctest::Approx(scores[i]));
}

TEST_CASE("a disk cache makes repeated context requests free") {
    TempDir dir;
    auto t = recorded();
    ProviderConfig cfg;
    cfg.kind = ProviderKind::WikidataWeb;
    cfg.cache_dir = dir.path();
    ContextService first(cfg, t, std::make_shared<HashEmbeddingProvider>());
    const auto a = first.gather_context(kAdams);
    const auto requests = t->count();
    CHECK(requests > 0);

    ContextService second(cfg, t, std::make_shared<HashEmbeddingProvider>());
    const auto b = second.gather_context(kAdams);
    CHECK(t->count() == requests);
    CHECK(a.chunks == b.chunks);
}

TEST_CASE("corpus context reads files, directories and JSONL") {
    TempDir dir;
    std::filesystem::create_directories(dir / "docs");
    std::ofstream(dir / "docs/ducks.txt") << "The Anaheim Ducks are a professional ice hockey team.";
    std::ofstream(dir / "docs/tide.txt") << "Alabama Crimson Tide football competes in the SEC.";
    std::ofstream(dir / "extra.jsonl") << R"({"id": "note-1", "text": "Hockey is played on ice."})" << '\n'
                                       << R"({"id": "note-2", "body": "Football uses an oval ball."})" << '\n';
    ProviderConfig cfg;
    cfg.kind = ProviderKind::Corpus;
    cfg.k = 2;
    cfg.corpus_paths = {dir / "docs", dir / "extra.jsonl"};
    ContextService svc(cfg, nullptr, std::make_shared<HashEmbeddingProvider>());
    CHECK(svc.load_corpus().size() == 4);
    const auto b = svc.gather_context(Triple("anaheim_ducks", {"teamplaysport"}, "ice hockey"));
    CHECK(b.provider_name == "corpus");
    CHECK(b.chunks.size() == 2);
    std::set<std::string> ids;
    for (const auto& c : b.chunks) ids.insert(c.source_id);
    CHECK(ids.size() >= 1);
    for (const auto& c : b.chunks) CHECK(c.origin == OriginKind::Corpus);

    ProviderConfig empty_cfg = cfg;
    empty_cfg.corpus_paths = {};
    CHECK_THROWS_AS(ContextService(empty_cfg, nullptr, std::make_shared<HashEmbeddingProvider>()),
                    ConfigError);
}

TEST_CASE("html to text") {
    CHECK(html_to_text("<p>a &amp; b</p><script>x()</script><p>c&#39;d</p>") == "a & b\n\nc'd");
    CHECK(html_to_text("plain") == "plain");
}

}
