#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "kgval/types.hpp"

namespace kgval {

/// How "Not enough information to say" verdicts enter the confusion matrix.
enum class AbstainPolicy {
    AsInvalid,   // counted as a predicted-invalid (tn or fn), also tallied in `abstained`
    AsExcluded,  // only tallied in `abstained`
};

std::string_view to_string(AbstainPolicy p) noexcept;
std::optional<AbstainPolicy> abstain_policy_from_string(std::string_view s) noexcept;

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
    std::size_t abstained = 0;

    std::size_t scored() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(std::span<const std::pair<Verdict, bool>> results, AbstainPolicy policy);

struct Metrics {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    double accuracy = 0;

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// P = tp/(tp+fp), R = tp/(tp+fn), F1 = 2PR/(P+R), Acc = (tp+tn)/(tp+fp+tn+fn).
/// A zero denominator makes that metric 0.
Metrics metrics(const ConfusionCounts& c);

/// "P=0.75 R=0.75 F1=0.75 Acc=0.80"
std::string format_metrics(const Metrics& m);

struct RecordOutcome {
    std::string record_id;
    std::optional<Verdict> verdict;  // empty when validation failed for the record
    bool gold = false;
    bool fallback_used = false;
};

struct EvalReport {
    AbstainPolicy policy = AbstainPolicy::AsInvalid;
    ConfusionCounts counts;
    Metrics metrics;
    std::size_t failed = 0;  // records without a verdict; not part of the counts
    std::vector<RecordOutcome> per_record;
};

EvalReport evaluate(std::vector<RecordOutcome> outcomes, AbstainPolicy policy);

/// Summary object {dataset, validator, model, counts, metrics, abstained, failed,
/// fallbacks, config}. Metrics are stored unrounded.
nlohmann::json report_json(const EvalReport& report, const std::string& dataset,
                           const std::string& validator, const std::string& model,
                           const nlohmann::json& config);

}  // namespace kgval
