#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kgval/types.hpp"

namespace kgval {

struct DatasetRecord {
    Triple triple;  // gold_label always set
    std::string dataset_name;
    std::string record_id;  // "<dataset>:<line>"

    friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

enum class DatasetFormat { Tsv, Jsonl };

/// "tsv" or "jsonl"; throws UnknownFormat.
DatasetFormat dataset_format_from_string(std::string_view s);

/// Loads labelled triples. TSV rows are head, relation, tail, label (0/1); JSONL
/// objects use the wire field names plus "label" (bool or 0/1). Blank lines are
/// skipped. The dataset name defaults to the file stem. Throws MalformedRecord.
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path, DatasetFormat format,
                                        std::string dataset_name = {});

std::vector<DatasetRecord> parse_dataset(std::string_view text, DatasetFormat format,
                                         const std::string& dataset_name);

inline constexpr std::uint64_t kDefaultSeed = 42;

/// Uniform sample of `n` records without replacement, returned in dataset order.
/// Selection sampling driven by a 64-bit Mersenne Twister, so the subset depends
/// only on (records, n, seed).
std::vector<DatasetRecord> sample_subset(const std::vector<DatasetRecord>& records, std::size_t n,
                                         std::uint64_t seed = kDefaultSeed);

/// As sample_subset, but draws ceil(n/2) positives and floor(n/2) negatives (or as
/// many as exist).
std::vector<DatasetRecord> sample_balanced(const std::vector<DatasetRecord>& records, std::size_t n,
                                           std::uint64_t seed = kDefaultSeed);

}  // namespace kgval
