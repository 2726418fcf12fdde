#include <doctest.h>

#include <random>
#include <thread>

#include "kgval/cache.hpp"
#include "kgval/error.hpp"
#include "kgval/pipeline.hpp"
#include "paths.hpp"

using namespace kgval;
using testing_support::fixture;

namespace {

std::string reply_for(const Triple& t, const std::string& verdict) {
    nlohmann::json j{{"predicted_subject_name", t.subject()},
                     {"predicted_relation", t.relations()},
                     {"predicted_object_name", t.object()},
                     {"triple_is_valid", nlohmann::json::parse(verdict)},
                     {"reason", "checked"}};
    return j.dump();
}

// Answers from the triple in the prompt after a random delay, so completions finish
// out of order.
class EchoingBackend final : public ChatBackend {
public:
    std::string chat(const std::vector<ChatMessage>& messages, const BackendConfig&) override {
        const std::string& p = messages.at(1).content;
        auto field = [&](const std::string& name) {
            const auto b = p.find(name) + name.size();
            return p.substr(b, p.find('\n', b) - b);
        };
        thread_local std::mt19937 rng(std::random_device{}());
        std::this_thread::sleep_for(std::chrono::microseconds(rng() % 3000));
        const Triple t(field("Subject Name: "), {field("Relation: ")}, p.substr(p.find("Object Name: ") + 13));
        return reply_for(t, t.subject().size() % 2 ? "true" : "false");
    }
};

std::shared_ptr<ContextService> world() {
    return std::make_shared<ContextService>(ProviderConfig{}, nullptr,
                                            std::make_shared<HashEmbeddingProvider>());
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("inherent-knowledge validation") {
    const Triple t("anaheim_ducks", {"teamplaysport"}, "football");
    auto mock = std::make_shared<MockBackend>(std::vector<std::string>{reply_for(t, "false")});
    Validator v(world(), mock, BackendConfig{});
    const auto r = v.validate(t);
    REQUIRE(r.validated.has_value());
    CHECK(r.validated->verdict == Verdict::Invalid);
    CHECK(r.validated->sources.empty());
    CHECK(r.provider == kWorldKnowledgeProvider);
    CHECK_FALSE(r.fallback_used);
    CHECK(r.attempts == 1);
    CHECK(mock->prompts().at(0) == render_prompt(t, std::nullopt));
}

TEST_CASE("retrieved chunks become the reported sources") {
    ProviderConfig cfg;
    cfg.kind = ProviderKind::Wikidata;
    cfg.k = 2;
    ChunkingConfig chunking;
    chunking.max_chunk_chars = 160;
    chunking.overlap_chars = 30;
    auto ctx = std::make_shared<ContextService>(
        cfg, std::make_shared<FixtureTransport>(fixture("services/manifest.json")),
        std::make_shared<HashEmbeddingProvider>(), ServiceEndpoints{}, chunking);
    const Triple t("Douglas Adams", {"occupation"}, "writer");
    auto mock = std::make_shared<MockBackend>(std::vector<std::string>{reply_for(t, "true")});
    const auto r = Validator(ctx, mock, BackendConfig{}).validate(t);
    REQUIRE(r.validated.has_value());
    REQUIRE(r.validated->sources.size() == 2);
    for (const auto& s : r.validated->sources) {
        CHECK(s.origin == Origin{OriginKind::Wikidata, "Q42"});
        CHECK(mock->prompts().at(0).find(s.relevant_text) != std::string::npos);
    }
    const auto j = result_json(r, "x:1");
    CHECK(j["record_id"] == "x:1");
    CHECK(j["provider"] == "wikidata");
    CHECK(j["sources"].size() == 2);
}

TEST_CASE("retry exhaustion is recorded per triple") {
    const Triple t("s", {"r"}, "o");
    auto mock = std::make_shared<MockBackend>(std::vector<std::string>{"a", "b", "c"});
    const auto r = Validator(world(), mock, BackendConfig{}).validate(t);
    CHECK_FALSE(r.validated.has_value());
    CHECK(r.attempts == 3);
    CHECK_FALSE(r.error.empty());
    const auto j = result_json(r);
    CHECK(j.contains("error"));
    CHECK_FALSE(j.contains("triple_is_valid"));
}

TEST_CASE("results keep input order under concurrency") {
    std::vector<Triple> triples;
    for (int i = 0; i < 64; ++i) triples.emplace_back(std::string(1 + i % 7, 'a' + i % 26), std::vector<std::string>{"r"}, "o" + std::to_string(i));
    Validator v(world(), std::make_shared<EchoingBackend>(), BackendConfig{});
    const auto results = v.validate_all(triples, 8);
    REQUIRE(results.size() == triples.size());
    for (std::size_t i = 0; i < triples.size(); ++i) {
        CHECK(results[i].triple == triples[i]);
        REQUIRE(results[i].validated.has_value());
        CHECK(results[i].validated->verdict ==
              (triples[i].subject().size() % 2 ? Verdict::Valid : Verdict::Invalid));
    }
}

TEST_CASE("fatal errors propagate from the worker pool") {
    std::vector<Triple> triples(5, Triple("s", {"r"}, "o"));
    auto mock = std::make_shared<MockBackend>(std::vector<std::string>{reply_for(triples[0], "true")});
    Validator v(world(), mock, BackendConfig{});
    CHECK_THROWS_AS(v.validate_all(triples, 1), ScriptExhausted);
}

TEST_CASE("triples JSONL input") {
    const auto ts = parse_triples_jsonl(
        R"({"predicted_subject_name":"a","predicted_relation":"r","predicted_object_name":"b"})"
        "\n\n"
        R"({"predicted_subject_name":"a","predicted_relation":["r","q"],"predicted_object_name":"b","label":1})");
    REQUIRE(ts.size() == 2);
    CHECK_FALSE(ts[0].gold_label().has_value());
    CHECK(ts[1].relations().size() == 2);
    CHECK(ts[1].gold_label() == true);
    CHECK_THROWS_AS(parse_triples_jsonl("{\"predicted_subject_name\":\"a\"}"), MalformedRecord);
}

}
