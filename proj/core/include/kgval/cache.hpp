#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "kgval/http.hpp"

namespace kgval {

/// Stable key for a request: method, URL with sorted query, and body.
std::string request_key(const HttpRequest& request);

/// Disk cache in front of another transport.
///
/// Entries live at `<dir>/<host>/<sha256(key)>.json` and hold the key, status and
/// body. Only 2xx and 404 responses are stored. With `inner == nullptr` the cache is
/// read-only and a miss raises TransportError.
class CachingTransport final : public HttpTransport {
public:
    CachingTransport(std::shared_ptr<HttpTransport> inner, std::filesystem::path dir);

    HttpResponse send(const HttpRequest& request) override;

    std::size_t hits() const;
    std::size_t misses() const;

private:
    std::filesystem::path entry_path(const HttpRequest& request) const;
    std::mutex& key_mutex(const std::string& key);

    std::shared_ptr<HttpTransport> inner_;
    std::filesystem::path dir_;
    mutable std::mutex mu_;
    std::map<std::string, std::unique_ptr<std::mutex>> key_locks_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

/// Serves recorded responses from a routes manifest.
///
/// The manifest is a JSON object {"routes": [{"method", "url", "status", and either
/// "body" (string or JSON value) or "body_file" (relative to the manifest)}]}. An
/// optional "params" object is URL-encoded onto "url". Query parameter order does not
/// matter. Unknown requests raise TransportError with status 404.
class FixtureTransport final : public HttpTransport {
public:
    explicit FixtureTransport(const std::filesystem::path& manifest);

    HttpResponse send(const HttpRequest& request) override;

    std::size_t requests() const;

private:
    std::map<std::string, HttpResponse> routes_;
    mutable std::mutex mu_;
    std::size_t requests_ = 0;
};

}  // namespace kgval
