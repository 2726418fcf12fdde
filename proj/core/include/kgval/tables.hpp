#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace kgval {

/// One published (P, R, F1[, Acc]) result, values as printed (two decimals).
struct TableRow {
    std::string table;
    std::string model;
    std::string dataset;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    std::optional<double> accuracy;

    friend bool operator==(const TableRow&, const TableRow&) = default;
};

struct TableViolation {
    TableRow row;
    double implied_f1 = 0;  // 2PR/(P+R)
    double deviation = 0;   // |F1 - implied_f1|
};

inline constexpr double kTableTolerance = 0.0051;

/// Rows whose printed F1 differs from the harmonic mean of the printed P and R by
/// more than `tolerance`.
std::vector<TableViolation> table_consistency_check(std::span<const TableRow> rows,
                                                    double tolerance = kTableTolerance);

/// True when some P' and R' that round to the printed P and R give an F1 that rounds
/// to the printed F1 (half-unit `half_step`, default two-decimal rounding).
bool rounding_consistent(const TableRow& row, double half_step = 0.005);

/// Every published result row of the GPT-3.5/GPT-4 and Llama-2 experiments (65 rows).
const std::vector<TableRow>& published_table_rows();

nlohmann::json to_json(const TableRow& row);
/// Accepts {"table","model","dataset","p","r","f1"[,"acc"]}; throws ConfigError.
TableRow table_row_from_json(const nlohmann::json& j);

}  // namespace kgval
