#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kgval {

struct HttpRequest {
    std::string method = "GET";
    std::string url;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
};

struct HttpResponse {
    int status = 0;
    std::string body;
    std::map<std::string, std::string> headers;
};

/// Sends one request. Implementations throw TransportError only when no response
/// was obtained at all; HTTP error statuses are returned to the caller.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse send(const HttpRequest& request) = 0;
};

/// Real network transport backed by cpp-httplib (http and https).
class NetworkTransport final : public HttpTransport {
public:
    explicit NetworkTransport(std::chrono::milliseconds timeout = std::chrono::seconds(30));
    HttpResponse send(const HttpRequest& request) override;

private:
    std::chrono::milliseconds timeout_;
};

struct ParsedUrl {
    std::string scheme;
    std::string host;  // includes ":port" when present
    std::string path;  // path plus "?query", at least "/"
};

ParsedUrl parse_url(std::string_view url);

std::string url_encode(std::string_view s);

/// Builds "base?k1=v1&k2=v2" with percent-encoded values.
std::string with_query(std::string_view base,
                       const std::vector<std::pair<std::string, std::string>>& params);

/// URL with its query parameters sorted, used as a stable request key.
std::string normalize_url(std::string_view url);

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{500};
    std::chrono::milliseconds max_delay{30000};
};

/// Sends with transport-level retries: network failures and 5xx/429 responses are
/// retried with exponential backoff. After the last attempt a 429 raises
/// RateLimited and any other failure raises TransportError. Non-retryable statuses
/// (4xx other than 429) raise TransportError immediately.
HttpResponse send_with_retry(HttpTransport& transport, const HttpRequest& request,
                             const RetryPolicy& policy);

/// Token bucket: `rate` tokens per second, holding at most `burst`.
class TokenBucket {
public:
    TokenBucket(double rate_per_second, double burst);

    /// Blocks until a token is available. A non-positive rate disables limiting.
    void acquire();

private:
    using Clock = std::chrono::steady_clock;
    double rate_;
    double burst_;
    double tokens_;
    Clock::time_point last_;
    std::mutex mu_;
};

/// Caps in-flight requests on a shared handle.
class ConcurrencyLimiter {
public:
    explicit ConcurrencyLimiter(int max_in_flight);

    class Permit {
    public:
        explicit Permit(ConcurrencyLimiter& l) : l_(&l) { l_->sem_.acquire(); }
        Permit(const Permit&) = delete;
        Permit& operator=(const Permit&) = delete;
        ~Permit() { l_->sem_.release(); }

    private:
        ConcurrencyLimiter* l_;
    };

    Permit acquire() { return Permit(*this); }

private:
    std::counting_semaphore<1024> sem_;
};

}  // namespace kgval
