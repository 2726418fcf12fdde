#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgval/backend.hpp"
#include "kgval/providers.hpp"
#include "kgval/types.hpp"

namespace kgval {

struct TripleResult {
    Triple triple;
    std::optional<ValidatedTriple> validated;  // empty when the model never produced a valid reply
    std::string provider;
    bool fallback_used = false;
    int attempts = 0;
    std::string error;
};

/// Unvalidated triple -> context -> prompt -> model -> ValidatedTriple.
class Validator {
public:
    Validator(std::shared_ptr<ContextService> context, std::shared_ptr<ChatBackend> backend,
              BackendConfig config);

    /// RetryExhausted is recorded in the result; transport and configuration errors
    /// propagate.
    TripleResult validate(const Triple& triple) const;

    /// Validates with up to `concurrency` workers. Results follow input order. The
    /// first propagated error stops the remaining work and is rethrown.
    std::vector<TripleResult> validate_all(const std::vector<Triple>& triples,
                                           int concurrency) const;

private:
    std::shared_ptr<ContextService> context_;
    std::shared_ptr<ChatBackend> backend_;
    BackendConfig config_;
};

/// One JSONL output line: the wire form plus record_id, provider, fallback_used and
/// attempts; failed records carry "error" instead of a verdict.
nlohmann::json result_json(const TripleResult& r, std::string_view record_id = {});

/// Triples from JSONL using the wire field names; "label" is optional.
std::vector<Triple> parse_triples_jsonl(std::string_view text);

}  // namespace kgval
