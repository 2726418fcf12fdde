#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "kgval/http.hpp"
#include "kgval/schema.hpp"
#include "kgval/types.hpp"

namespace kgval {

struct BackendConfig {
    std::string endpoint_url = "https://api.openai.com/v1";
    std::string model_name = "gpt-3.5-turbo-0125";
    double temperature = 0.0;
    int max_retries = 3;
    std::chrono::milliseconds timeout{60000};
    std::string api_key_source = "LLM_API_KEY";
    RetryPolicy transport_retry{};
    int max_in_flight = 4;
    double requests_per_second = 0.0;  // <= 0: unlimited

    /// Throws ConfigError when max_retries < 1 or temperature < 0.
    void validate() const;
};

struct ChatMessage {
    std::string role;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct RawCompletion {
    std::string text;
    int attempt = 1;
};

/// A chat-completion endpoint. Implementations are shareable across threads.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string chat(const std::vector<ChatMessage>& messages,
                             const BackendConfig& config) = 0;
};

/// OpenAI-compatible `/chat/completions` client.
class OpenAIChatBackend final : public ChatBackend {
public:
    OpenAIChatBackend(const BackendConfig& config, std::shared_ptr<HttpTransport> transport);

    std::string chat(const std::vector<ChatMessage>& messages,
                     const BackendConfig& config) override;

private:
    std::shared_ptr<HttpTransport> transport_;
    ConcurrencyLimiter limiter_;
    TokenBucket bucket_;
};

/// Replays canned responses in order and records every conversation it receives.
class MockBackend final : public ChatBackend {
public:
    explicit MockBackend(std::vector<std::string> script);

    std::string chat(const std::vector<ChatMessage>& messages,
                     const BackendConfig& config) override;

    std::vector<std::vector<ChatMessage>> conversations() const;
    /// Content of the first user message of each request.
    std::vector<std::string> prompts() const;
    std::size_t calls() const;

private:
    std::vector<std::string> script_;
    mutable std::mutex mu_;
    std::size_t next_ = 0;
    std::vector<std::vector<ChatMessage>> conversations_;
};

/// Template pieces of the validation prompt.
struct PromptTemplate {
    std::string no_context_lead;
    std::string with_context_lead;
    std::string criteria;
    std::string context_header;

    static const PromptTemplate& standard();
};

/// Builds the user prompt for one triple. A missing or empty context bundle yields
/// the plain inherent-knowledge prompt.
std::string render_prompt(const Triple& triple, const std::optional<ContextBundle>& context,
                          const PromptTemplate& tmpl = PromptTemplate::standard());

/// System turn describing the JSON response object.
const std::string& response_format_instructions();

struct StructuredCompletion {
    ValidatedTriple value;
    RawCompletion raw;
};

/// Sends the prompt and parses the reply, re-asking with the parser's error text on
/// failure. At most `config.max_retries` requests are made; afterwards
/// RetryExhausted is thrown. Transport errors propagate unchanged.
StructuredCompletion complete_structured(const std::string& prompt, const BackendConfig& config,
                                         ChatBackend& backend, const VerdictParser& parser);

}  // namespace kgval
