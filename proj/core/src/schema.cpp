#include "kgval/schema.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include <spdlog/spdlog.h>

#include "kgval/error.hpp"

namespace kgval {

namespace {

// Index one past the brace matching raw[open], or npos if the object never closes.
std::size_t matching_brace(std::string_view raw, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < raw.size(); ++i) {
        char c = raw[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string_view::npos;
}

std::string trim(std::string_view s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    auto b = std::find_if_not(s.begin(), s.end(), is_space);
    auto e = std::find_if_not(s.rbegin(), s.rend(), is_space).base();
    return b < e ? std::string(b, e) : std::string();
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

Verdict parse_verdict(const nlohmann::json& v) {
    if (v.is_boolean()) return v.get<bool>() ? Verdict::Valid : Verdict::Invalid;
    if (v.is_string()) {
        const std::string norm = lower(trim(v.get<std::string>()));
        if (norm == lower(std::string(kNotEnoughInformation))) return Verdict::NotEnoughInformation;
        if (norm == "true") return Verdict::Valid;
        if (norm == "false") return Verdict::Invalid;
        throw InvalidVerdictLiteral(v.get<std::string>());
    }
    throw InvalidVerdictLiteral(v.dump());
}

std::optional<std::vector<std::string>> echoed_relations(const nlohmann::json& v) {
    if (v.is_string()) return std::vector<std::string>{v.get<std::string>()};
    if (!v.is_array()) return std::nullopt;
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) return std::nullopt;
        out.push_back(e.get<std::string>());
    }
    return out;
}

std::vector<SourceAttribution> parse_sources(const nlohmann::json& v) {
    if (v.is_null()) return {};
    if (!v.is_array()) throw SchemaError("field 'sources' must be an array");
    std::vector<SourceAttribution> out;
    for (const auto& e : v) {
        if (!e.is_object() || !e.contains("relevant_text") || !e["relevant_text"].is_string()) {
            throw SchemaError("every entry of 'sources' needs a string 'relevant_text'");
        }
        SourceAttribution s;
        s.relevant_text = e["relevant_text"].get<std::string>();
        if (auto it = e.find("origin"); it != e.end() && it->is_string()) {
            s.origin.kind = origin_kind_from_string(it->get<std::string>()).value_or(OriginKind::None);
        }
        if (auto it = e.find("origin_id"); it != e.end() && it->is_string()) {
            s.origin.id = it->get<std::string>();
        }
        if (s.origin.kind != OriginKind::None && trim(s.relevant_text).empty()) {
            throw SchemaError("source with an origin must carry non-empty 'relevant_text'");
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

nlohmann::json extract_json(std::string_view raw) {
    for (std::size_t open = raw.find('{'); open != std::string_view::npos;
         open = raw.find('{', open + 1)) {
        const std::size_t close = matching_brace(raw, open);
        if (close == std::string_view::npos) continue;
        auto doc = nlohmann::json::parse(raw.substr(open, close - open), nullptr, false);
        if (!doc.is_discarded() && doc.is_object()) return doc;
    }
    throw NoJsonFound();
}

ParsedResponse parse_response(const nlohmann::json& doc, const Triple& expected) {
    if (!doc.is_object()) throw SchemaError("response must be a JSON object");
    for (const char* name : {"predicted_subject_name", "predicted_relation", "predicted_object_name",
                             "triple_is_valid"}) {
        if (!doc.contains(name)) throw MissingField(name);
    }

    const Verdict verdict = parse_verdict(doc["triple_is_valid"]);

    auto reason_it = doc.find("reason");
    if (reason_it == doc.end() || !reason_it->is_string() ||
        trim(reason_it->get<std::string>()).empty()) {
        throw EmptyReason();
    }

    const auto& subj = doc["predicted_subject_name"];
    const auto& obj = doc["predicted_object_name"];
    const auto rels = echoed_relations(doc["predicted_relation"]);
    const bool echo_ok = subj.is_string() && subj.get<std::string>() == expected.subject() &&
                         obj.is_string() && obj.get<std::string>() == expected.object() && rels &&
                         *rels == expected.relations();
    if (!echo_ok) {
        spdlog::warn("model echoed a different triple than '{}'; keeping the input triple",
                     triple_to_query(expected));
    }

    ParsedResponse out{
        ValidatedTriple{expected, verdict, reason_it->get<std::string>(),
                        parse_sources(doc.value("sources", nlohmann::json()))},
        !echo_ok};
    return out;
}

ValidatedTriple parse_validated_triple(const nlohmann::json& doc, const Triple& expected) {
    return parse_response(doc, expected).value;
}

VerdictParser make_verdict_parser(Triple expected) {
    return [expected = std::move(expected)](std::string_view raw) {
        return parse_validated_triple(extract_json(raw), expected);
    };
}

}  // namespace kgval
