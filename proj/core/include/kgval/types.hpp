#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace kgval {

/// A candidate (subject, relation(s), object) statement.
///
/// Constructing a Triple validates it: subject and object must be non-blank and
/// there must be at least one non-empty relation. Labels are stored verbatim.
class Triple {
public:
    Triple(std::string subject, std::vector<std::string> relations, std::string object,
           std::optional<bool> gold_label = std::nullopt);

    const std::string& subject() const noexcept { return subject_; }
    const std::vector<std::string>& relations() const noexcept { return relations_; }
    const std::string& object() const noexcept { return object_; }
    const std::optional<bool>& gold_label() const noexcept { return gold_label_; }

    /// Relations joined by "; ".
    std::string relation_text() const;

    Triple with_gold_label(std::optional<bool> label) const;

    friend bool operator==(const Triple&, const Triple&) = default;

private:
    std::string subject_;
    std::vector<std::string> relations_;
    std::string object_;
    std::optional<bool> gold_label_;
};

inline constexpr std::string_view kRelationSeparator = "; ";

/// "<subject> <rel1>[; <reli>]* <object>", used as the retrieval query.
std::string triple_to_query(const Triple& triple);

enum class Verdict { Valid, Invalid, NotEnoughInformation };

inline constexpr std::string_view kNotEnoughInformation = "Not enough information to say";

std::string_view to_string(Verdict v) noexcept;

enum class OriginKind { None, Corpus, Wikidata, Web };

std::string_view to_string(OriginKind k) noexcept;
std::optional<OriginKind> origin_kind_from_string(std::string_view s) noexcept;

struct Origin {
    OriginKind kind = OriginKind::None;
    std::string id;

    friend bool operator==(const Origin&, const Origin&) = default;
};

struct SourceAttribution {
    std::string relevant_text;
    Origin origin;

    friend bool operator==(const SourceAttribution&, const SourceAttribution&) = default;
};

struct ValidatedTriple {
    Triple triple;
    Verdict verdict;
    std::string reason;
    std::vector<SourceAttribution> sources;

    friend bool operator==(const ValidatedTriple&, const ValidatedTriple&) = default;
};

struct ContextChunk {
    std::string text;
    std::string source_id;
    std::optional<double> score;
    OriginKind origin = OriginKind::None;

    friend bool operator==(const ContextChunk&, const ContextChunk&) = default;
};

struct ContextBundle {
    std::vector<ContextChunk> chunks;
    std::string provider_name;
    bool fallback_used = false;

    bool empty() const noexcept { return chunks.empty(); }
};

inline constexpr std::string_view kWorldKnowledgeProvider = "world_knowledge";

/// Checks the bundle invariants (scores in range, empty implies fallback or inherent
/// knowledge). Throws InvalidArgument on violation.
void check_bundle(const ContextBundle& bundle);

/// JSON wire form using the response-model field names. `predicted_relation` is a
/// string for single-relation triples and an array otherwise.
nlohmann::json to_wire_json(const ValidatedTriple& v);

nlohmann::json to_wire_json(const Triple& t);

}  // namespace kgval
