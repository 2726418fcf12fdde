#include "kgval/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kgval/error.hpp"

namespace kgval {

DatasetFormat dataset_format_from_string(std::string_view s) {
    if (s == "tsv") return DatasetFormat::Tsv;
    if (s == "jsonl") return DatasetFormat::Jsonl;
    throw UnknownFormat(std::string(s));
}

namespace {

std::vector<std::string> split_tabs(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        auto tab = line.find('\t', start);
        out.emplace_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
        if (tab == std::string_view::npos) return out;
        start = tab + 1;
    }
}

bool parse_label(const nlohmann::json& v, std::size_t line_no) {
    if (v.is_boolean()) return v.get<bool>();
    if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1)) return v.get<int>() == 1;
    if (v.is_string() && (v == "0" || v == "1")) return v == "1";
    throw MalformedRecord(line_no, "label must be 0/1 or a boolean");
}

Triple record_triple(std::size_t line_no, std::string subject, std::vector<std::string> relations,
                     std::string object, bool label) {
    try {
        return Triple(std::move(subject), std::move(relations), std::move(object), label);
    } catch (const InvalidArgument& e) {
        throw MalformedRecord(line_no, e.what());
    }
}

DatasetRecord parse_tsv_line(std::string_view line, std::size_t line_no, const std::string& name) {
    auto fields = split_tabs(line);
    if (fields.size() != 4) throw MalformedRecord(line_no, "expected 4 fields");
    const std::string& label = fields[3];
    if (label != "0" && label != "1") throw MalformedRecord(line_no, "label must be 0 or 1");
    return DatasetRecord{record_triple(line_no, fields[0], {fields[1]}, fields[2], label == "1"), name,
                         name + ":" + std::to_string(line_no)};
}

DatasetRecord parse_jsonl_line(std::string_view line, std::size_t line_no, const std::string& name) {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw MalformedRecord(line_no, "not a JSON object");
    for (const char* field :
         {"predicted_subject_name", "predicted_relation", "predicted_object_name", "label"}) {
        if (!j.contains(field)) throw MalformedRecord(line_no, std::string("missing '") + field + "'");
    }
    const auto& subj = j["predicted_subject_name"];
    const auto& obj = j["predicted_object_name"];
    if (!subj.is_string() || !obj.is_string()) {
        throw MalformedRecord(line_no, "subject and object must be strings");
    }
    std::vector<std::string> relations;
    const auto& rel = j["predicted_relation"];
    if (rel.is_string()) {
        relations.push_back(rel.get<std::string>());
    } else if (rel.is_array() && std::all_of(rel.begin(), rel.end(),
                                             [](const auto& r) { return r.is_string(); })) {
        relations = rel.get<std::vector<std::string>>();
    } else {
        throw MalformedRecord(line_no, "predicted_relation must be a string or array of strings");
    }
    return DatasetRecord{record_triple(line_no, subj.get<std::string>(), std::move(relations),
                                       obj.get<std::string>(), parse_label(j["label"], line_no)),
                         name, name + ":" + std::to_string(line_no)};
}

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Knuth's selection sampling over positions; keeps positions in order.
std::vector<std::size_t> select_positions(std::size_t population, std::size_t n,
                                          std::mt19937_64& rng) {
    std::vector<std::size_t> out;
    if (n >= population) {
        out.resize(population);
        for (std::size_t i = 0; i < population; ++i) out[i] = i;
        return out;
    }
    out.reserve(n);
    for (std::size_t i = 0; i < population && out.size() < n; ++i) {
        const double remaining = static_cast<double>(population - i);
        if (remaining * unit_uniform(rng) < static_cast<double>(n - out.size())) out.push_back(i);
    }
    return out;
}

}  // namespace

std::vector<DatasetRecord> parse_dataset(std::string_view text, DatasetFormat format,
                                         const std::string& dataset_name) {
    std::vector<DatasetRecord> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        std::string_view line =
            text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") != std::string_view::npos) {
            out.push_back(format == DatasetFormat::Tsv ? parse_tsv_line(line, line_no, dataset_name)
                                                       : parse_jsonl_line(line, line_no, dataset_name));
        }
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return out;
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path, DatasetFormat format,
                                        std::string dataset_name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open dataset " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (dataset_name.empty()) dataset_name = path.stem().string();
    return parse_dataset(ss.str(), format, dataset_name);
}

std::vector<DatasetRecord> sample_subset(const std::vector<DatasetRecord>& records, std::size_t n,
                                         std::uint64_t seed) {
    if (n == 0) throw InvalidArgument("sample size must be at least 1");
    std::mt19937_64 rng(seed);
    std::vector<DatasetRecord> out;
    for (std::size_t i : select_positions(records.size(), n, rng)) out.push_back(records[i]);
    return out;
}

std::vector<DatasetRecord> sample_balanced(const std::vector<DatasetRecord>& records, std::size_t n,
                                           std::uint64_t seed) {
    if (n == 0) throw InvalidArgument("sample size must be at least 1");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < records.size(); ++i) {
        (records[i].triple.gold_label().value_or(false) ? pos : neg).push_back(i);
    }
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> chosen;
    for (std::size_t i : select_positions(pos.size(), (n + 1) / 2, rng)) chosen.push_back(pos[i]);
    for (std::size_t i : select_positions(neg.size(), n / 2, rng)) chosen.push_back(neg[i]);
    std::sort(chosen.begin(), chosen.end());
    std::vector<DatasetRecord> out;
    for (std::size_t i : chosen) out.push_back(records[i]);
    return out;
}

}  // namespace kgval
