#include "kgval/tables.hpp"

#include <algorithm>
#include <cmath>

#include "kgval/error.hpp"

namespace kgval {

namespace {

double harmonic(double p, double r) { return p + r == 0 ? 0.0 : 2 * p * r / (p + r); }

}  // namespace

std::vector<TableViolation> table_consistency_check(std::span<const TableRow> rows,
                                                    double tolerance) {
    std::vector<TableViolation> out;
    for (const auto& row : rows) {
        const double implied = harmonic(row.precision, row.recall);
        const double dev = std::abs(row.f1 - implied);
        if (dev > tolerance) out.push_back(TableViolation{row, implied, dev});
    }
    return out;
}

bool rounding_consistent(const TableRow& row, double half_step) {
    constexpr double kEps = 1e-12;
    auto lo_of = [&](double v) { return std::max(0.0, v - half_step); };
    auto hi_of = [&](double v) { return std::min(1.0, v + half_step); };
    // F1 is monotone in both P and R, so the extremes sit at the box corners.
    const double lo = harmonic(lo_of(row.precision), lo_of(row.recall));
    const double hi = harmonic(hi_of(row.precision), hi_of(row.recall));
    return lo <= row.f1 + half_step + kEps && hi >= row.f1 - half_step - kEps;
}

const std::vector<TableRow>& published_table_rows() {
    static const std::vector<TableRow> rows{
        {"gpt-fb15k237n-wiki27k", "GPT 3.5 WorldKnowledge", "FB15K-237N-150", 0.58, 0.97, 0.73, 0.63},
        {"gpt-fb15k237n-wiki27k", "GPT 3.5 WorldKnowledge", "Wiki27K-150", 0.63, 1.0, 0.77, 0.71},
        {"gpt-fb15k237n-wiki27k", "GPT 3.5 Wikidata", "FB15K-237N-150", 0.75, 0.77, 0.76, 0.76},
        {"gpt-fb15k237n-wiki27k", "GPT 3.5 Wikidata", "Wiki27K-150", 0.74, 0.73, 0.74, 0.74},
        {"gpt-fb15k237n-wiki27k", "GPT 3.5 WikipediaWikidata", "FB15K-237N-150", 0.85, 0.69, 0.76, 0.79},
        {"gpt-fb15k237n-wiki27k", "GPT 3.5 WikipediaWikidata", "Wiki27K-150", 0.84, 0.86, 0.85, 0.85},
        {"gpt-fb15k237n-wiki27k", "GPT 3.5 Web", "FB15K-237N-150", 0.76, 0.85, 0.81, 0.79},
        {"gpt-fb15k237n-wiki27k", "GPT 3.5 Web", "Wiki27K-150", 0.76, 0.91, 0.82, 0.81},
        {"gpt-fb15k237n-wiki27k", "GPT 3.5 WikidataWeb", "FB15K-237N-150", 0.82, 0.81, 0.82, 0.82},
        {"gpt-fb15k237n-wiki27k", "GPT 3.5 WikidataWeb", "Wiki27K-150", 0.78, 0.87, 0.82, 0.81},
        {"gpt-fb15k237n-wiki27k", "GPT 4 WorldKnowledge", "FB15K-237N-150", 0.87, 0.72, 0.79, 0.81},
        {"gpt-fb15k237n-wiki27k", "GPT 4 WorldKnowledge", "Wiki27K-150", 0.95, 0.76, 0.84, 0.86},
        {"gpt-fb15k237n-wiki27k", "GPT 4 Wikidata", "FB15K-237N-150", 0.89, 0.64, 0.74, 0.78},
        {"gpt-fb15k237n-wiki27k", "GPT 4 Wikidata", "Wiki27K-150", 0.97, 0.75, 0.84, 0.86},
        {"gpt-fb15k237n-wiki27k", "GPT 4 WikipediaWikidata", "FB15K-237N-150", 0.90, 0.59, 0.71, 0.76},
        {"gpt-fb15k237n-wiki27k", "GPT 4 WikipediaWikidata", "Wiki27K-150", 0.97, 0.77, 0.86, 0.87},
        {"gpt-fb15k237n-wiki27k", "GPT 4 Web", "FB15K-237N-150", 0.92, 0.72, 0.81, 0.83},
        {"gpt-fb15k237n-wiki27k", "GPT 4 Web", "Wiki27K-150", 0.95, 0.75, 0.84, 0.85},
        {"gpt-fb15k237n-wiki27k", "GPT 4 WikidataWeb", "FB15K-237N-150", 0.92, 0.72, 0.81, 0.83},
        {"gpt-fb15k237n-wiki27k", "GPT 4 WikidataWeb", "Wiki27K-150", 1.0, 0.77, 0.87, 0.89},
        {"gpt-wn18rr-umls", "GPT 3.5 WorldKnowledge", "WN18RR-150", 0.54, 0.97, 0.70, 0.58},
        {"gpt-wn18rr-umls", "GPT 3.5 WorldKnowledge", "UMLS-150", 0.5, 0.97, 0.66, 0.5},
        {"gpt-wn18rr-umls", "GPT 3.5 Wikidata", "WN18RR-150", 0.53, 0.99, 0.69, 0.56},
        {"gpt-wn18rr-umls", "GPT 3.5 Wikidata", "UMLS-150", 0.51, 0.87, 0.64, 0.52},
        {"gpt-wn18rr-umls", "GPT 3.5 WikipediaWikidata", "WN18RR-150", 0.54, 0.99, 0.69, 0.57},
        {"gpt-wn18rr-umls", "GPT 3.5 WikipediaWikidata", "UMLS-150", 0.53, 0.88, 0.66, 0.55},
        {"gpt-wn18rr-umls", "GPT 3.5 Web", "WN18RR-150", 0.67, 0.97, 0.79, 0.74},
        {"gpt-wn18rr-umls", "GPT 3.5 Web", "UMLS-150", 0.52, 0.93, 0.67, 0.53},
        {"gpt-wn18rr-umls", "GPT 3.5 WikidataWeb", "WN18RR-150", 0.69, 0.95, 0.80, 0.76},
        {"gpt-wn18rr-umls", "GPT 3.5 WikidataWeb", "UMLS-150", 0.5, 0.88, 0.64, 0.5},
        {"gpt-wn18rr-umls", "GPT 4 WorldKnowledge", "WN18RR-150", 0.99, 0.92, 0.95, 0.95},
        {"gpt-wn18rr-umls", "GPT 4 WorldKnowledge", "UMLS-150", 0.57, 0.77, 0.66, 0.59},
        {"gpt-wn18rr-umls", "GPT 4 Wikidata", "WN18RR-150", 0.99, 0.91, 0.94, 0.95},
        {"gpt-wn18rr-umls", "GPT 4 Wikidata", "UMLS-150", 0.63, 0.69, 0.66, 0.64},
        {"gpt-wn18rr-umls", "GPT 4 WikipediaWikidata", "WN18RR-150", 0.99, 0.91, 0.94, 0.95},
        {"gpt-wn18rr-umls", "GPT 4 WikipediaWikidata", "UMLS-150", 0.62, 0.67, 0.64, 0.63},
        {"gpt-wn18rr-umls", "GPT 4 Web", "WN18RR-150", 1.0, 0.89, 0.94, 0.95},
        {"gpt-wn18rr-umls", "GPT 4 Web", "UMLS-150", 0.61, 0.65, 0.63, 0.62},
        {"gpt-wn18rr-umls", "GPT 4 WikidataWeb", "WN18RR-150", 1.0, 0.88, 0.94, 0.94},
        {"gpt-wn18rr-umls", "GPT 4 WikidataWeb", "UMLS-150", 0.56, 0.64, 0.60, 0.57},
        {"gpt-codex-s", "GPT 3.5 WorldKnowledge", "CoDeX-S-150", 0.52, 0.97, 0.68, 0.54},
        {"gpt-codex-s", "GPT 3.5 Wikidata", "CoDeX-S-150", 0.86, 0.88, 0.87, 0.87},
        {"gpt-codex-s", "GPT 3.5 WikipediaWikidata", "CoDeX-S-150", 0.81, 0.87, 0.84, 0.83},
        {"gpt-codex-s", "GPT 3.5 Web", "CoDeX-S-150", 0.74, 0.84, 0.79, 0.77},
        {"gpt-codex-s", "GPT 3.5 WikidataWeb", "CoDeX-S-150", 0.87, 0.97, 0.92, 0.91},
        {"gpt-codex-s", "GPT 4 WorldKnowledge", "CoDeX-S-150", 0.87, 0.81, 0.84, 0.85},
        {"gpt-codex-s", "GPT 4 Wikidata", "CoDeX-S-150", 0.93, 0.87, 0.90, 0.9},
        {"gpt-codex-s", "GPT 4 WikipediaWikidata", "CoDeX-S-150", 0.94, 0.83, 0.88, 0.89},
        {"gpt-codex-s", "GPT 4 Web", "CoDeX-S-150", 0.85, 0.84, 0.85, 0.85},
        {"gpt-codex-s", "GPT 4 WikidataWeb", "CoDeX-S-150", 0.93, 0.85, 0.89, 0.89},
        {"llama2", "Llama-2 Web", "FB15K-237N-150", 0.52, 1.0, 0.68, 0.54},
        {"llama2", "Llama-2 Web", "CoDeX-S-150", 0.51, 1.0, 0.67, 0.52},
        {"llama2", "Llama-2 Web", "Wiki27K-150", 0.46, 1.0, 0.63, 0.49},
        {"llama2", "Llama-2 WorldKnowledge", "FB15K-237N-150", 0.54, 1.0, 0.70, 0.58},
        {"llama2", "Llama-2 WorldKnowledge", "CoDeX-S-150", 0.51, 1.0, 0.66, 0.50},
        {"llama2", "Llama-2 WorldKnowledge", "Wiki27K-150", 0.54, 1.0, 0.70, 0.58},
        {"llama2", "Llama-2 Wikidata", "FB15K-237N-150", 0.53, 1.0, 0.69, 0.56},
        {"llama2", "Llama-2 Wikidata", "CoDeX-S-150", 0.55, 1.0, 0.71, 0.60},
        {"llama2", "Llama-2 Wikidata", "Wiki27K-150", 0.53, 1.0, 0.69, 0.56},
        {"llama2", "Llama-2 WikidataWeb", "FB15K-237N-150", 0.50, 1.0, 0.66, 0.50},
        {"llama2", "Llama-2 WikidataWeb", "CoDeX-S-150", 0.50, 1.0, 0.66, 0.50},
        {"llama2", "Llama-2 WikidataWeb", "Wiki27K-150", 0.51, 1.0, 0.67, 0.51},
        {"llama2", "Llama-2 WikipediaWikidata", "FB15K-237N-150", 0.51, 1.0, 0.67, 0.51},
        {"llama2", "Llama-2 WikipediaWikidata", "CoDeX-S-150", 0.50, 1.0, 0.66, 0.50},
        {"llama2", "Llama-2 WikipediaWikidata", "Wiki27K-150", 0.51, 1.0, 0.67, 0.51},
    };
    return rows;
}

nlohmann::json to_json(const TableRow& row) {
    nlohmann::json j{{"table", row.table},   {"model", row.model}, {"dataset", row.dataset},
                     {"p", row.precision},   {"r", row.recall},    {"f1", row.f1}};
    if (row.accuracy) j["acc"] = *row.accuracy;
    return j;
}

TableRow table_row_from_json(const nlohmann::json& j) {
    try {
        TableRow row{j.value("table", ""), j.value("model", ""), j.value("dataset", ""),
                     j.at("p").get<double>(), j.at("r").get<double>(), j.at("f1").get<double>(),
                     std::nullopt};
        if (j.contains("acc") && !j["acc"].is_null()) row.accuracy = j["acc"].get<double>();
        return row;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad table row: ") + e.what());
    }
}

}  // namespace kgval
