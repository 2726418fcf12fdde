#include "kgval/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "kgval/error.hpp"

namespace kgval {

namespace {

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

Triple::Triple(std::string subject, std::vector<std::string> relations, std::string object,
               std::optional<bool> gold_label)
    : subject_(std::move(subject)),
      relations_(std::move(relations)),
      object_(std::move(object)),
      gold_label_(gold_label) {
    if (is_blank(subject_)) throw InvalidArgument("triple subject is empty");
    if (is_blank(object_)) throw InvalidArgument("triple object is empty");
    if (relations_.empty()) throw InvalidArgument("triple has no relation");
    for (const auto& r : relations_) {
        if (is_blank(r)) throw InvalidArgument("triple has an empty relation");
    }
}

std::string Triple::relation_text() const {
    std::string out = relations_.front();
    for (std::size_t i = 1; i < relations_.size(); ++i) {
        out += kRelationSeparator;
        out += relations_[i];
    }
    return out;
}

Triple Triple::with_gold_label(std::optional<bool> label) const {
    Triple copy = *this;
    copy.gold_label_ = label;
    return copy;
}

std::string triple_to_query(const Triple& triple) {
    std::string q = triple.subject() + " " + triple.relation_text() + " " + triple.object();
    auto first = q.find_first_not_of(" \t\r\n");
    auto last = q.find_last_not_of(" \t\r\n");
    return q.substr(first, last - first + 1);
}

std::string_view to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::Valid: return "VALID";
        case Verdict::Invalid: return "INVALID";
        case Verdict::NotEnoughInformation: return "NOT_ENOUGH_INFORMATION";
    }
    return "?";
}

std::string_view to_string(OriginKind k) noexcept {
    switch (k) {
        case OriginKind::None: return "none";
        case OriginKind::Corpus: return "corpus";
        case OriginKind::Wikidata: return "wikidata";
        case OriginKind::Web: return "web";
    }
    return "none";
}

std::optional<OriginKind> origin_kind_from_string(std::string_view s) noexcept {
    if (s == "none") return OriginKind::None;
    if (s == "corpus") return OriginKind::Corpus;
    if (s == "wikidata") return OriginKind::Wikidata;
    if (s == "web") return OriginKind::Web;
    return std::nullopt;
}

void check_bundle(const ContextBundle& bundle) {
    for (const auto& c : bundle.chunks) {
        if (c.score && (!std::isfinite(*c.score) || *c.score < -1.0 || *c.score > 1.0)) {
            throw InvalidArgument("context chunk score outside [-1, 1]");
        }
    }
    std::optional<double> prev;
    for (const auto& c : bundle.chunks) {
        if (!c.score) continue;
        if (prev && *c.score > *prev) throw InvalidArgument("context chunks are not ordered by score");
        prev = c.score;
    }
    if (bundle.chunks.empty() && !bundle.fallback_used &&
        bundle.provider_name != kWorldKnowledgeProvider) {
        throw InvalidArgument("empty context bundle from '" + bundle.provider_name +
                              "' must be marked as fallback");
    }
}

nlohmann::json to_wire_json(const Triple& t) {
    nlohmann::json j;
    j["predicted_subject_name"] = t.subject();
    if (t.relations().size() == 1) {
        j["predicted_relation"] = t.relations().front();
    } else {
        j["predicted_relation"] = t.relations();
    }
    j["predicted_object_name"] = t.object();
    return j;
}

nlohmann::json to_wire_json(const ValidatedTriple& v) {
    nlohmann::json j = to_wire_json(v.triple);
    switch (v.verdict) {
        case Verdict::Valid: j["triple_is_valid"] = true; break;
        case Verdict::Invalid: j["triple_is_valid"] = false; break;
        case Verdict::NotEnoughInformation:
            j["triple_is_valid"] = std::string(kNotEnoughInformation);
            break;
    }
    j["reason"] = v.reason;
    if (!v.sources.empty()) {
        auto sources = nlohmann::json::array();
        for (const auto& s : v.sources) {
            nlohmann::json sj;
            sj["relevant_text"] = s.relevant_text;
            if (s.origin.kind != OriginKind::None || !s.origin.id.empty()) {
                sj["origin"] = std::string(to_string(s.origin.kind));
                sj["origin_id"] = s.origin.id;
            }
            sources.push_back(std::move(sj));
        }
        j["sources"] = std::move(sources);
    }
    return j;
}

}  // namespace kgval
