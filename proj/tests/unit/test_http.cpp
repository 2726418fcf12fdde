#include <doctest.h>

#include <atomic>
#include <deque>
#include <thread>

#include <httplib.h>

#include "kgval/backend.hpp"
#include "kgval/cache.hpp"
#include "kgval/error.hpp"
#include "kgval/http.hpp"
#include "paths.hpp"

using namespace kgval;
using namespace std::chrono_literals;
using testing_support::TempDir;

namespace {

// Replays canned responses (or throws when status is negative) and records requests.
class ScriptedTransport final : public HttpTransport {
public:
    explicit ScriptedTransport(std::deque<HttpResponse> script) : script_(std::move(script)) {}
    HttpResponse send(const HttpRequest& request) override {
        std::lock_guard lock(mu_);
        seen.push_back(request);
        if (script_.empty()) throw TransportError(0, "script exhausted");
        HttpResponse r = script_.front();
        script_.pop_front();
        if (r.status < 0) throw TransportError(0, "connection refused");
        return r;
    }
    std::vector<HttpRequest> seen;

private:
    std::deque<HttpResponse> script_;
    std::mutex mu_;
};

const RetryPolicy kFast{3, 1ms, 5ms};

// Local HTTP server on an ephemeral port, stopped on destruction.
class LocalServer {
public:
    LocalServer() {
        port_ = server.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~LocalServer() {
        server.stop();
        thread_.join();
    }
    std::string base() const { return "http://127.0.0.1:" + std::to_string(port_); }
    httplib::Server server;

private:
    int port_ = 0;
    std::thread thread_;
};

}  // namespace

TEST_SUITE("http") {

TEST_CASE("url helpers") {
    const auto u = parse_url("https://www.wikidata.org/w/api.php?action=x");
    CHECK(u.scheme == "https");
    CHECK(u.host == "www.wikidata.org");
    CHECK(u.path == "/w/api.php?action=x");
    CHECK(parse_url("http://127.0.0.1:8080").path == "/");
    CHECK(parse_url("http://127.0.0.1:8080").host == "127.0.0.1:8080");
    CHECK_THROWS_AS(parse_url("no-scheme"), InvalidArgument);

    CHECK(url_encode("Douglas Adams|Q42") == "Douglas%20Adams%7CQ42");
    CHECK(url_encode("a-b_c.d~") == "a-b_c.d~");
    CHECK(with_query("http://h/p", {{"q", "a b"}, {"n", "1"}}) == "http://h/p?q=a%20b&n=1");
    CHECK(with_query("http://h/p?x=1", {{"y", "2"}}) == "http://h/p?x=1&y=2");
    CHECK(normalize_url("http://h/p?b=2&a=1") == normalize_url("http://h/p?a=1&b=2"));
    CHECK(normalize_url("http://h/p") == "http://h/p");
}

TEST_CASE("send_with_retry: success passes through") {
    ScriptedTransport t({{200, "ok", {}}});
    CHECK(send_with_retry(t, {"GET", "http://h/", {}, {}}, kFast).body == "ok");
    CHECK(t.seen.size() == 1);
}

TEST_CASE("send_with_retry: 5xx and network errors are retried") {
    ScriptedTransport t({{503, "busy", {}}, {-1, "", {}}, {200, "ok", {}}});
    CHECK(send_with_retry(t, {"GET", "http://h/", {}, {}}, kFast).body == "ok");
    CHECK(t.seen.size() == 3);
}

TEST_CASE("send_with_retry: other 4xx fail at once") {
    ScriptedTransport t({{404, "missing", {}}, {200, "ok", {}}});
    try {
        send_with_retry(t, {"GET", "http://h/", {}, {}}, kFast);
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(e.status() == 404);
        CHECK(e.body() == "missing");
    }
    CHECK(t.seen.size() == 1);
}

TEST_CASE("send_with_retry: 429 honours Retry-After and gives up as RateLimited") {
    ScriptedTransport ok({{429, "", {{"Retry-After", "0.01"}}}, {200, "ok", {}}});
    CHECK(send_with_retry(ok, {"GET", "http://h/", {}, {}}, kFast).status == 200);

    ScriptedTransport throttled({{429, "", {{"retry-after", "0"}}},
                                 {429, "", {{"retry-after", "0"}}},
                                 {429, "", {{"retry-after", "0"}}},
                                 {200, "ok", {}}});
    CHECK_THROWS_AS(send_with_retry(throttled, {"GET", "http://h/", {}, {}}, kFast), RateLimited);
    CHECK(throttled.seen.size() == 3);
}

TEST_CASE("send_with_retry: persistent 5xx surfaces after the last attempt") {
    ScriptedTransport t({{500, "a", {}}, {500, "b", {}}, {500, "c", {}}, {200, "ok", {}}});
    CHECK_THROWS_AS(send_with_retry(t, {"GET", "http://h/", {}, {}}, kFast), TransportError);
    CHECK(t.seen.size() == 3);
}

TEST_CASE("caching transport: second identical request is served from disk") {
    TempDir dir;
    auto inner = std::make_shared<ScriptedTransport>(
        std::deque<HttpResponse>{{200, "first", {}}, {200, "second", {}}});
    CachingTransport cache(inner, dir.path());
    const HttpRequest req{"GET", "http://example.org/api?b=2&a=1", {}, {}};
    CHECK(cache.send(req).body == "first");
    CHECK(cache.send({"GET", "http://example.org/api?a=1&b=2", {}, {}}).body == "first");
    CHECK(inner->seen.size() == 1);
    CHECK(cache.hits() == 1);
    CHECK(cache.misses() == 1);

    // A fresh instance over the same directory needs no network at all.
    CachingTransport offline(nullptr, dir.path());
    CHECK(offline.send(req).body == "first");
    CHECK_THROWS_AS(offline.send({"GET", "http://example.org/other", {}, {}}), TransportError);
}

TEST_CASE("caching transport: bodies are part of the key; errors are not cached") {
    TempDir dir;
    auto inner = std::make_shared<ScriptedTransport>(std::deque<HttpResponse>{
        {200, "one", {}}, {200, "two", {}}, {500, "boom", {}}, {200, "three", {}}});
    CachingTransport cache(inner, dir.path());
    CHECK(cache.send({"POST", "http://h/e", {}, "x"}).body == "one");
    CHECK(cache.send({"POST", "http://h/e", {}, "y"}).body == "two");
    CHECK(cache.send({"GET", "http://h/f", {}, {}}).status == 500);
    CHECK(cache.send({"GET", "http://h/f", {}, {}}).body == "three");
    CHECK(request_key({"POST", "http://h/e", {}, "x"}) != request_key({"POST", "http://h/e", {}, "y"}));
}

TEST_CASE("caching transport is safe under concurrent identical requests") {
    TempDir dir;
    std::deque<HttpResponse> many(64, HttpResponse{200, "same", {}});
    auto inner = std::make_shared<ScriptedTransport>(many);
    CachingTransport cache(inner, dir.path());
    std::vector<std::thread> pool;
    std::atomic<int> good{0};
    for (int i = 0; i < 8; ++i) {
        pool.emplace_back([&] {
            for (int j = 0; j < 4; ++j) {
                if (cache.send({"GET", "http://h/same", {}, {}}).body == "same") ++good;
            }
        });
    }
    for (auto& t : pool) t.join();
    CHECK(good.load() == 32);
    CHECK(inner->seen.size() == 1);
}

TEST_CASE("fixture transport routes by method and normalized URL") {
    TempDir dir;
    {
        std::ofstream(dir / "page.html") << "<p>hello</p>";
        std::ofstream(dir / "manifest.json") << R"({"routes": [
            {"url": "http://h/api", "params": {"q": "a b", "n": 2}, "body": {"x": 1}},
            {"url": "http://h/page", "body_file": "page.html"},
            {"method": "POST", "url": "http://h/post", "status": 201, "body": "made"}
        ]})";
    }
    FixtureTransport t(dir / "manifest.json");
    CHECK(t.send({"GET", "http://h/api?n=2&q=a%20b", {}, {}}).body == R"({"x":1})");
    CHECK(t.send({"GET", "http://h/page", {}, {}}).body == "<p>hello</p>");
    CHECK(t.send({"POST", "http://h/post", {}, "ignored"}).status == 201);
    CHECK_THROWS_AS(t.send({"GET", "http://h/post", {}, {}}), TransportError);
    CHECK(t.requests() == 4);
    CHECK_THROWS_AS(FixtureTransport(dir / "missing.json"), Error);
}

TEST_CASE("network transport against a local server") {
    LocalServer srv;
    srv.server.Get("/hello", [](const httplib::Request& req, httplib::Response& res) {
        res.set_content("hi " + req.get_param_value("name"), "text/plain");
    });
    srv.server.Get("/moved", [](const httplib::Request&, httplib::Response& res) {
        res.set_redirect("/hello?name=redirected");
    });
    srv.server.Post("/echo", [](const httplib::Request& req, httplib::Response& res) {
        res.status = 201;
        res.set_content(req.body, "application/json");
    });
    NetworkTransport net(5s);
    CHECK(net.send({"GET", srv.base() + "/hello?name=x", {}, {}}).body == "hi x");
    CHECK(net.send({"GET", srv.base() + "/moved", {}, {}}).body == "hi redirected");
    const auto r = net.send({"POST", srv.base() + "/echo", {}, R"({"k":1})"});
    CHECK(r.status == 201);
    CHECK(r.body == R"({"k":1})");
    CHECK(net.send({"GET", srv.base() + "/nope", {}, {}}).status == 404);
    CHECK_THROWS_AS(net.send({"GET", "http://127.0.0.1:1/", {}, {}}), TransportError);
}

TEST_CASE("OpenAI-compatible chat request on the wire") {
    LocalServer srv;
    nlohmann::json seen_body;
    std::string seen_auth;
    srv.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_body = nlohmann::json::parse(req.body);
        seen_auth = req.get_header_value("Authorization");
        nlohmann::json reply{{"id", "chatcmpl-1"},
                             {"object", "chat.completion"},
                             {"choices",
                              {{{"index", 0},
                                {"message", {{"role", "assistant"}, {"content", "{\"ok\":true}"}}},
                                {"finish_reason", "stop"}}}}};
        res.set_content(reply.dump(), "application/json");
    });

    ::setenv("KGVAL_TEST_LLM_KEY", "sk-test", 1);
    BackendConfig cfg;
    cfg.endpoint_url = srv.base() + "/v1/";
    cfg.model_name = "llama-2-70b-chat";
    cfg.temperature = 0.0;
    cfg.api_key_source = "KGVAL_TEST_LLM_KEY";
    OpenAIChatBackend backend(cfg, std::make_shared<NetworkTransport>(5s));
    const std::string out = backend.chat({{"system", "s"}, {"user", "u"}}, cfg);
    CHECK(out == "{\"ok\":true}");
    CHECK(seen_body["model"] == "llama-2-70b-chat");
    CHECK(seen_body["temperature"] == 0.0);
    REQUIRE(seen_body["messages"].size() == 2);
    CHECK(seen_body["messages"][1] == nlohmann::json{{"role", "user"}, {"content", "u"}});
    CHECK(seen_auth == "Bearer sk-test");
    ::unsetenv("KGVAL_TEST_LLM_KEY");
}

TEST_CASE("unexpected completion payloads are transport errors") {
    auto t = std::make_shared<ScriptedTransport>(
        std::deque<HttpResponse>{{200, "not json", {}}, {200, R"({"choices": []})", {}}});
    BackendConfig cfg;
    OpenAIChatBackend backend(cfg, t);
    CHECK_THROWS_AS(backend.chat({{"user", "u"}}, cfg), TransportError);
    CHECK_THROWS_AS(backend.chat({{"user", "u"}}, cfg), TransportError);
}

}
