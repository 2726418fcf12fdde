#include "kgval/cache.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "kgval/error.hpp"

namespace kgval {

namespace fs = std::filesystem;

namespace {

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xF];
    }
    return out;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string route_key(std::string_view method, std::string_view url) {
    return std::string(method) + " " + normalize_url(url);
}

}  // namespace

std::string request_key(const HttpRequest& request) {
    return route_key(request.method, request.url) + "\n" + request.body;
}

CachingTransport::CachingTransport(std::shared_ptr<HttpTransport> inner, fs::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
    fs::create_directories(dir_);
}

fs::path CachingTransport::entry_path(const HttpRequest& request) const {
    std::string host = parse_url(request.url).host;
    for (char& c : host) {
        if (c == ':') c = '_';
    }
    return dir_ / host / (sha256_hex(request_key(request)) + ".json");
}

std::mutex& CachingTransport::key_mutex(const std::string& key) {
    std::lock_guard lock(mu_);
    auto& m = key_locks_[key];
    if (!m) m = std::make_unique<std::mutex>();
    return *m;
}

HttpResponse CachingTransport::send(const HttpRequest& request) {
    const std::string key = request_key(request);
    const fs::path path = entry_path(request);
    std::lock_guard key_lock(key_mutex(key));

    if (fs::exists(path)) {
        auto j = nlohmann::json::parse(read_file(path), nullptr, false);
        if (!j.is_discarded() && j.value("key", "") == key) {
            std::lock_guard lock(mu_);
            ++hits_;
            return HttpResponse{j.at("status").get<int>(), j.at("body").get<std::string>(), {}};
        }
    }
    {
        std::lock_guard lock(mu_);
        ++misses_;
    }
    if (!inner_) throw TransportError(0, "offline cache miss for " + request.url);

    HttpResponse r = inner_->send(request);
    if ((r.status >= 200 && r.status < 300) || r.status == 404) {
        fs::create_directories(path.parent_path());
        nlohmann::json j{{"key", key}, {"status", r.status}, {"body", r.body}};
        const fs::path tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << j.dump(2) << '\n';
        }
        fs::rename(tmp, path);
    }
    return r;
}

std::size_t CachingTransport::hits() const {
    std::lock_guard lock(mu_);
    return hits_;
}

std::size_t CachingTransport::misses() const {
    std::lock_guard lock(mu_);
    return misses_;
}

FixtureTransport::FixtureTransport(const fs::path& manifest) {
    auto j = nlohmann::json::parse(read_file(manifest), nullptr, false);
    if (j.is_discarded() || !j.contains("routes")) {
        throw ConfigError("fixture manifest " + manifest.string() + " is not valid");
    }
    const fs::path base = manifest.parent_path();
    for (const auto& route : j["routes"]) {
        HttpResponse r;
        r.status = route.value("status", 200);
        if (route.contains("body_file")) {
            r.body = read_file(base / route["body_file"].get<std::string>());
        } else if (route.contains("body")) {
            const auto& b = route["body"];
            r.body = b.is_string() ? b.get<std::string>() : b.dump();
        }
        std::string url = route.at("url").get<std::string>();
        if (auto params = route.find("params"); params != route.end()) {
            std::vector<std::pair<std::string, std::string>> pairs;
            for (const auto& [k, v] : params->items()) {
                pairs.emplace_back(k, v.is_string() ? v.get<std::string>() : v.dump());
            }
            url = with_query(url, pairs);
        }
        routes_[route_key(route.value("method", "GET"), url)] = std::move(r);
    }
}

HttpResponse FixtureTransport::send(const HttpRequest& request) {
    {
        std::lock_guard lock(mu_);
        ++requests_;
    }
    auto it = routes_.find(route_key(request.method, request.url));
    if (it == routes_.end()) throw TransportError(404, "no fixture for " + request.url);
    return it->second;
}

std::size_t FixtureTransport::requests() const {
    std::lock_guard lock(mu_);
    return requests_;
}

}  // namespace kgval
