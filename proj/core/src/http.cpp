#include "kgval/http.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "kgval/error.hpp"

namespace kgval {

NetworkTransport::NetworkTransport(std::chrono::milliseconds timeout) : timeout_(timeout) {}

HttpResponse NetworkTransport::send(const HttpRequest& request) {
    const ParsedUrl u = parse_url(request.url);
    httplib::Client client(u.scheme + "://" + u.host);
    client.set_follow_location(true);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);

    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : request.headers) {
        if (k == "Content-Type") {
            content_type = v;
        } else {
            headers.emplace(k, v);
        }
    }
    headers.emplace("User-Agent", "kgval/0.1");

    httplib::Result res;
    if (request.method == "GET") {
        res = client.Get(u.path, headers);
    } else if (request.method == "POST") {
        res = client.Post(u.path, headers, request.body, content_type);
    } else {
        throw InvalidArgument("unsupported HTTP method " + request.method);
    }
    if (!res) throw TransportError(0, httplib::to_string(res.error()));

    HttpResponse out;
    out.status = res->status;
    out.body = res->body;
    for (const auto& [k, v] : res->headers) out.headers[k] = v;
    return out;
}

ParsedUrl parse_url(std::string_view url) {
    ParsedUrl out;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) throw InvalidArgument("URL without scheme: " +
                                                                    std::string(url));
    out.scheme = std::string(url.substr(0, scheme_end));
    auto rest = url.substr(scheme_end + 3);
    auto slash = rest.find_first_of("/?");
    out.host = std::string(rest.substr(0, slash));
    out.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
    if (out.path.front() == '?') out.path.insert(out.path.begin(), '/');
    if (out.host.empty()) throw InvalidArgument("URL without host: " + std::string(url));
    return out;
}

std::string url_encode(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out += static_cast<char>(c);
        } else {
            char buf[4];
            std::snprintf(buf, sizeof(buf), "%%%02X", c);
            out += buf;
        }
    }
    return out;
}

std::string with_query(std::string_view base,
                       const std::vector<std::pair<std::string, std::string>>& params) {
    std::string out(base);
    char sep = out.find('?') == std::string::npos ? '?' : '&';
    for (const auto& [k, v] : params) {
        out += sep;
        out += url_encode(k);
        out += '=';
        out += url_encode(v);
        sep = '&';
    }
    return out;
}

std::string normalize_url(std::string_view url) {
    auto q = url.find('?');
    if (q == std::string_view::npos) return std::string(url);
    std::vector<std::string> params;
    std::string_view query = url.substr(q + 1);
    while (!query.empty()) {
        auto amp = query.find('&');
        auto part = query.substr(0, amp);
        if (!part.empty()) params.emplace_back(part);
        if (amp == std::string_view::npos) break;
        query.remove_prefix(amp + 1);
    }
    std::sort(params.begin(), params.end());
    std::string out(url.substr(0, q));
    char sep = '?';
    for (const auto& p : params) {
        out += sep;
        out += p;
        sep = '&';
    }
    return out;
}

namespace {

std::chrono::milliseconds backoff(const RetryPolicy& policy, int attempt) {
    auto d = policy.base_delay * (1LL << std::min(attempt - 1, 20));
    return std::min<std::chrono::milliseconds>(d, policy.max_delay);
}

std::chrono::milliseconds retry_after(const HttpResponse& r, std::chrono::milliseconds fallback) {
    for (const auto& [k, v] : r.headers) {
        std::string key = k;
        std::transform(key.begin(), key.end(), key.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (key == "retry-after") {
            try {
                return std::chrono::milliseconds(static_cast<long long>(std::stod(v) * 1000));
            } catch (const std::exception&) {
                return fallback;
            }
        }
    }
    return fallback;
}

}  // namespace

HttpResponse send_with_retry(HttpTransport& transport, const HttpRequest& request,
                             const RetryPolicy& policy) {
    const int attempts = std::max(1, policy.max_attempts);
    for (int attempt = 1;; ++attempt) {
        const bool last = attempt == attempts;
        try {
            HttpResponse r = transport.send(request);
            if (r.status >= 200 && r.status < 300) return r;
            if (r.status == 429) {
                auto wait = std::min(retry_after(r, backoff(policy, attempt)), policy.max_delay);
                if (last) throw RateLimited(wait);
                spdlog::warn("{} throttled; retrying in {} ms", request.url, wait.count());
                std::this_thread::sleep_for(wait);
                continue;
            }
            if (r.status < 500 || last) throw TransportError(r.status, r.body);
            spdlog::warn("{} returned {}; retrying", request.url, r.status);
        } catch (const TransportError& e) {
            if (last || (e.status() >= 400 && e.status() < 500)) throw;
            spdlog::warn("{} failed ({}); retrying", request.url, e.what());
        }
        std::this_thread::sleep_for(backoff(policy, attempt));
    }
}

TokenBucket::TokenBucket(double rate_per_second, double burst)
    : rate_(rate_per_second), burst_(std::max(1.0, burst)), tokens_(burst_), last_(Clock::now()) {}

void TokenBucket::acquire() {
    if (rate_ <= 0) return;
    std::unique_lock lock(mu_);
    for (;;) {
        auto now = Clock::now();
        std::chrono::duration<double> elapsed = now - last_;
        last_ = now;
        tokens_ = std::min(burst_, tokens_ + elapsed.count() * rate_);
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
        lock.unlock();
        std::this_thread::sleep_for(wait);
        lock.lock();
    }
}

ConcurrencyLimiter::ConcurrencyLimiter(int max_in_flight)
    : sem_(std::clamp(max_in_flight, 1, 1024)) {}

}  // namespace kgval
