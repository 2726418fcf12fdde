#pragma once

#include <functional>
#include <string_view>

#include <nlohmann/json.hpp>

#include "kgval/types.hpp"

namespace kgval {

/// Returns the first syntactically complete JSON object embedded in `raw`.
/// Code fences and surrounding prose are ignored. Throws NoJsonFound.
nlohmann::json extract_json(std::string_view raw);

struct ParsedResponse {
    ValidatedTriple value;
    // The model echoed a triple that differs from the one it was asked about.
    bool echo_mismatch = false;
};

/// Validates a response object against the ValidatedTriple model.
///
/// The echoed subject/relation/object are compared with `expected` but the result
/// always carries `expected`. Throws MissingField, InvalidVerdictLiteral,
/// EmptyReason or SchemaError.
ParsedResponse parse_response(const nlohmann::json& doc, const Triple& expected);

ValidatedTriple parse_validated_triple(const nlohmann::json& doc, const Triple& expected);

/// Maps a raw model reply to a ValidatedTriple or throws a SchemaError.
using VerdictParser = std::function<ValidatedTriple(std::string_view raw)>;

VerdictParser make_verdict_parser(Triple expected);

}  // namespace kgval
