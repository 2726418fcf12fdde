#include "kgval/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "kgval/error.hpp"
#include "kgval/schema.hpp"

namespace kgval {

Validator::Validator(std::shared_ptr<ContextService> context, std::shared_ptr<ChatBackend> backend,
                     BackendConfig config)
    : context_(std::move(context)), backend_(std::move(backend)), config_(std::move(config)) {
    if (!context_ || !backend_) throw ConfigError("validator needs a context service and a backend");
    config_.validate();
}

TripleResult Validator::validate(const Triple& triple) const {
    ContextBundle bundle = context_->gather_context(triple);
    check_bundle(bundle);

    TripleResult result{triple, std::nullopt, bundle.provider_name, bundle.fallback_used, 0, {}};
    const std::string prompt = render_prompt(triple, bundle);
    try {
        auto done = complete_structured(prompt, config_, *backend_, make_verdict_parser(triple));
        result.attempts = done.raw.attempt;
        if (!bundle.chunks.empty()) {
            done.value.sources.clear();
            for (const auto& c : bundle.chunks) {
                done.value.sources.push_back(SourceAttribution{c.text, Origin{c.origin, c.source_id}});
            }
        }
        result.validated = std::move(done.value);
    } catch (const RetryExhausted& e) {
        result.attempts = e.attempts();
        result.error = e.what();
    }
    return result;
}

std::vector<TripleResult> Validator::validate_all(const std::vector<Triple>& triples,
                                                  int concurrency) const {
    std::vector<std::optional<TripleResult>> slots(triples.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr first_error;
    std::mutex error_mu;

    auto worker = [&] {
        for (;;) {
            if (stop.load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= triples.size()) return;
            try {
                slots[i] = validate(triples[i]);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!first_error) first_error = std::current_exception();
                stop = true;
                return;
            }
        }
    };

    const auto n = static_cast<std::size_t>(std::max(1, concurrency));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::min(n, triples.size()); ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);

    std::vector<TripleResult> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

nlohmann::json result_json(const TripleResult& r, std::string_view record_id) {
    nlohmann::json j = r.validated ? to_wire_json(*r.validated) : to_wire_json(r.triple);
    if (!record_id.empty()) j["record_id"] = std::string(record_id);
    j["provider"] = r.provider;
    j["fallback_used"] = r.fallback_used;
    j["attempts"] = r.attempts;
    if (!r.validated) j["error"] = r.error;
    return j;
}

std::vector<Triple> parse_triples_jsonl(std::string_view text) {
    std::vector<Triple> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        auto line = text.substr(start, nl == std::string_view::npos ? nl : nl - start);
        start = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw MalformedRecord(line_no, "not a JSON object");
        try {
            std::vector<std::string> relations;
            const auto& rel = j.at("predicted_relation");
            if (rel.is_array()) {
                relations = rel.get<std::vector<std::string>>();
            } else {
                relations.push_back(rel.get<std::string>());
            }
            std::optional<bool> label;
            if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
                label = it->is_boolean() ? it->get<bool>() : it->get<int>() != 0;
            }
            out.emplace_back(j.at("predicted_subject_name").get<std::string>(), std::move(relations),
                             j.at("predicted_object_name").get<std::string>(), label);
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecord(line_no, e.what());
        } catch (const InvalidArgument& e) {
            throw MalformedRecord(line_no, e.what());
        }
    }
    return out;
}

}  // namespace kgval
