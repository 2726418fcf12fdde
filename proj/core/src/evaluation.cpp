#include "kgval/evaluation.hpp"

#include <cstdio>

namespace kgval {

std::string_view to_string(AbstainPolicy p) noexcept {
    return p == AbstainPolicy::AsInvalid ? "invalid" : "exclude";
}

std::optional<AbstainPolicy> abstain_policy_from_string(std::string_view s) noexcept {
    if (s == "invalid" || s == "as_invalid") return AbstainPolicy::AsInvalid;
    if (s == "exclude" || s == "excluded" || s == "as_excluded") return AbstainPolicy::AsExcluded;
    return std::nullopt;
}

ConfusionCounts confusion(std::span<const std::pair<Verdict, bool>> results, AbstainPolicy policy) {
    ConfusionCounts c;
    for (const auto& [verdict, gold] : results) {
        switch (verdict) {
            case Verdict::Valid:
                ++(gold ? c.tp : c.fp);
                break;
            case Verdict::Invalid:
                ++(gold ? c.fn : c.tn);
                break;
            case Verdict::NotEnoughInformation:
                ++c.abstained;
                if (policy == AbstainPolicy::AsInvalid) ++(gold ? c.fn : c.tn);
                break;
        }
    }
    return c;
}

Metrics metrics(const ConfusionCounts& c) {
    auto ratio = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    Metrics m;
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.recall = ratio(c.tp, c.tp + c.fn);
    m.f1 = (m.precision + m.recall) == 0 ? 0.0
                                         : 2 * m.precision * m.recall / (m.precision + m.recall);
    m.accuracy = ratio(c.tp + c.tn, c.scored());
    return m;
}

std::string format_metrics(const Metrics& m) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "P=%.2f R=%.2f F1=%.2f Acc=%.2f", m.precision, m.recall, m.f1,
                  m.accuracy);
    return buf;
}

EvalReport evaluate(std::vector<RecordOutcome> outcomes, AbstainPolicy policy) {
    std::vector<std::pair<Verdict, bool>> scored;
    EvalReport report;
    report.policy = policy;
    for (const auto& o : outcomes) {
        if (o.verdict) {
            scored.emplace_back(*o.verdict, o.gold);
        } else {
            ++report.failed;
        }
    }
    report.counts = confusion(scored, policy);
    report.metrics = metrics(report.counts);
    report.per_record = std::move(outcomes);
    return report;
}

nlohmann::json report_json(const EvalReport& report, const std::string& dataset,
                           const std::string& validator, const std::string& model,
                           const nlohmann::json& config) {
    const auto& c = report.counts;
    std::size_t fallbacks = 0;
    for (const auto& r : report.per_record) fallbacks += r.fallback_used ? 1 : 0;
    nlohmann::json j;
    j["dataset"] = dataset;
    j["validator"] = validator;
    j["model"] = model;
    j["abstain_policy"] = std::string(to_string(report.policy));
    j["counts"] = {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
    j["metrics"] = {{"precision", report.metrics.precision},
                    {"recall", report.metrics.recall},
                    {"f1", report.metrics.f1},
                    {"accuracy", report.metrics.accuracy}};
    j["abstained"] = c.abstained;
    j["failed"] = report.failed;
    j["records"] = report.per_record.size();
    j["fallbacks"] = fallbacks;
    j["config"] = config;
    return j;
}

}  // namespace kgval
