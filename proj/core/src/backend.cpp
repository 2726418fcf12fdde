#include "kgval/backend.hpp"

#include <cstdlib>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "kgval/error.hpp"

namespace kgval {

void BackendConfig::validate() const {
    if (max_retries < 1) throw ConfigError("max_retries must be at least 1");
    if (temperature < 0) throw ConfigError("temperature must be non-negative");
    if (endpoint_url.empty()) throw ConfigError("endpoint URL is empty");
    if (max_in_flight < 1) throw ConfigError("max_in_flight must be at least 1");
}

OpenAIChatBackend::OpenAIChatBackend(const BackendConfig& config,
                                     std::shared_ptr<HttpTransport> transport)
    : transport_(std::move(transport)),
      limiter_(config.max_in_flight),
      bucket_(config.requests_per_second, config.max_in_flight) {
    config.validate();
}

std::string OpenAIChatBackend::chat(const std::vector<ChatMessage>& messages,
                                    const BackendConfig& config) {
    nlohmann::json body;
    body["model"] = config.model_name;
    body["temperature"] = config.temperature;
    body["messages"] = nlohmann::json::array();
    for (const auto& m : messages) {
        body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }

    HttpRequest req;
    req.method = "POST";
    std::string base = config.endpoint_url;
    while (!base.empty() && base.back() == '/') base.pop_back();
    req.url = base + "/chat/completions";
    req.body = body.dump();
    req.headers.emplace_back("Content-Type", "application/json");
    if (const char* key = std::getenv(config.api_key_source.c_str()); key && *key) {
        req.headers.emplace_back("Authorization", std::string("Bearer ") + key);
    }

    auto permit = limiter_.acquire();
    bucket_.acquire();
    const HttpResponse res = send_with_retry(*transport_, req, config.transport_retry);

    auto j = nlohmann::json::parse(res.body, nullptr, false);
    if (j.is_discarded()) throw TransportError(res.status, "response is not JSON: " + res.body);
    try {
        const auto& content = j.at("choices").at(0).at("message").at("content");
        return content.is_string() ? content.get<std::string>() : content.dump();
    } catch (const nlohmann::json::exception&) {
        throw TransportError(res.status, "unexpected completion payload: " + res.body);
    }
}

MockBackend::MockBackend(std::vector<std::string> script) : script_(std::move(script)) {
    if (script_.empty()) throw InvalidArgument("mock backend needs at least one response");
}

std::string MockBackend::chat(const std::vector<ChatMessage>& messages, const BackendConfig&) {
    std::lock_guard lock(mu_);
    conversations_.push_back(messages);
    if (next_ >= script_.size()) throw ScriptExhausted(script_.size());
    return script_[next_++];
}

std::vector<std::vector<ChatMessage>> MockBackend::conversations() const {
    std::lock_guard lock(mu_);
    return conversations_;
}

std::vector<std::string> MockBackend::prompts() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& conv : conversations_) {
        for (const auto& m : conv) {
            if (m.role == "user") {
                out.push_back(m.content);
                break;
            }
        }
    }
    return out;
}

std::size_t MockBackend::calls() const {
    std::lock_guard lock(mu_);
    return conversations_.size();
}

const PromptTemplate& PromptTemplate::standard() {
    // The no-context text is reproduced byte for byte, including the missing space
    // after "allow for it." and the trailing space before the first field line.
    static const PromptTemplate t{
        "Using your vast knowledge of the world, "
        "evaluate the predicted Knowledge Graph triple for its accuracy by considering:\n",
        "Using your vast knowledge of the world, "
        "evaluate the predicted Knowledge Graph triple against the given context and "
        "for its accuracy by considering:\n",
        "1. Definitions, relevance, and any cultural or domain-specific nuances of key terms\n"
        "2. Historical and factual validity, including any recent updates or debates around the "
        "information\n"
        "3. The validity of synonyms or related terms of the prediction\n"
        "Approach this with a mindset that allows for exploratory analysis and the recognition of "
        "uncertainty or multiple valid perspectives. "
        "Use this approach to recognize a range of correct answers when nuances and context allow "
        "for it."
        "If multiple relations are provided, the triple is valid if any of them are valid. ",
        "Context retrieved from external sources:\n",
    };
    return t;
}

std::string render_prompt(const Triple& triple, const std::optional<ContextBundle>& context,
                          const PromptTemplate& tmpl) {
    std::string out;
    const bool with_context = context && !context->chunks.empty();
    if (with_context) {
        out += tmpl.context_header;
        for (const auto& chunk : context->chunks) {
            out += '\n';
            out += chunk.text;
            out += "\n(source: " + chunk.source_id + ")\n";
        }
        out += '\n';
        out += tmpl.with_context_lead;
    } else {
        out += tmpl.no_context_lead;
    }
    out += tmpl.criteria;
    out += "\nSubject Name: " + triple.subject();
    out += "\nRelation: " + triple.relation_text();
    out += "\nObject Name: " + triple.object();
    return out;
}

const std::string& response_format_instructions() {
    static const std::string s =
        "Reply with a single JSON object and nothing else. Fields:\n"
        "- \"predicted_subject_name\": string, the subject as given\n"
        "- \"predicted_relation\": string or array of strings, the relation(s) as given\n"
        "- \"predicted_object_name\": string, the object as given\n"
        "- \"reason\": string, why the triple is or is not valid\n"
        "- \"triple_is_valid\": true, false, or the string \"Not enough information to say\"\n"
        "- \"sources\": optional array of {\"relevant_text\": string} quoting the evidence used";
    return s;
}

StructuredCompletion complete_structured(const std::string& prompt, const BackendConfig& config,
                                         ChatBackend& backend, const VerdictParser& parser) {
    config.validate();
    std::vector<ChatMessage> messages{{"system", response_format_instructions()},
                                      {"user", prompt}};
    std::string last_raw;
    std::string last_error;
    for (int attempt = 1; attempt <= config.max_retries; ++attempt) {
        last_raw = backend.chat(messages, config);
        try {
            return StructuredCompletion{parser(last_raw), RawCompletion{last_raw, attempt}};
        } catch (const SchemaError& e) {
            last_error = e.what();
            spdlog::debug("attempt {} failed validation: {}", attempt, last_error);
        }
        messages.push_back({"assistant", last_raw});
        messages.push_back({"user", "Your previous reply failed validation: " + last_error +
                                        ". Correct it and reply with the JSON object only."});
    }
    throw RetryExhausted(config.max_retries, last_raw, last_error);
}

}  // namespace kgval
