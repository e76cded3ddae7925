#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tabext {

inline constexpr std::string_view kReportSchema = "tabext.report/1";

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;

    bool operator==(const ClassMetrics&) const = default;
};

struct ConfusionCounts {
    std::size_t tp = 0; // predicted 1, actual 1
    std::size_t fp = 0; // predicted 1, actual 0
    std::size_t fn = 0; // predicted 0, actual 1
    std::size_t tn = 0; // predicted 0, actual 0

    bool operator==(const ConfusionCounts&) const = default;
};

/// Per-class scores for classes 0 and 1, accuracy, and macro / support-weighted
/// averages. Undefined ratios are reported as 0 and listed in `warnings`.
struct MetricsReport {
    std::array<ClassMetrics, 2> classes{};
    double accuracy = 0.0;
    ClassMetrics macro_avg;
    ClassMetrics weighted_avg;
    ConfusionCounts confusion;
    std::size_t total = 0;
    std::vector<std::string> warnings;

    bool operator==(const MetricsReport&) const = default;
};

MetricsReport compute_metrics(std::span<const int> predictions, std::span<const int> labels);

/// Five rows: 0, 1, accuracy, macro avg, weighted avg; two decimals.
std::string render_report(const MetricsReport& report, std::string_view title = {});

/// Row labels of the rendered table, in order.
inline constexpr std::array<std::string_view, 5> kReportRows{"0", "1", "accuracy", "macro avg", "weighted avg"};

nlohmann::json to_json(const MetricsReport& report);

} // namespace tabext
