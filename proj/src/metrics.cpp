#include "tabext/metrics.hpp"

#include <cstdio>

#include "tabext/error.hpp"

namespace tabext {

namespace {

double ratio(std::size_t num, std::size_t den, const char* what, int cls, std::vector<std::string>& warnings)
{
    if (den == 0) {
        warnings.push_back(std::string(what) + " of class " + std::to_string(cls) + " is undefined; reported as 0");
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn, int cls, std::vector<std::string>& warnings)
{
    ClassMetrics m;
    m.precision = ratio(tp, tp + fp, "precision", cls, warnings);
    m.recall = ratio(tp, tp + fn, "recall", cls, warnings);
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    m.support = tp + fn;
    return m;
}

} // namespace

MetricsReport compute_metrics(std::span<const int> predictions, std::span<const int> labels)
{
    if (predictions.size() != labels.size()) {
        throw Error(ErrorKind::LengthMismatch,
            std::to_string(predictions.size()) + " predictions for " + std::to_string(labels.size()) + " labels");
    }
    if (predictions.empty()) {
        throw Error(ErrorKind::EmptyInput, "no predictions to score");
    }
    MetricsReport r;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int p = predictions[i];
        const int y = labels[i];
        if ((p != 0 && p != 1) || (y != 0 && y != 1)) {
            throw Error(ErrorKind::InvalidLabel, "predictions and labels must be 0 or 1");
        }
        if (p == 1) {
            ++(y == 1 ? r.confusion.tp : r.confusion.fp);
        } else {
            ++(y == 1 ? r.confusion.fn : r.confusion.tn);
        }
    }
    const auto& c = r.confusion;
    r.total = predictions.size();
    r.classes[0] = class_metrics(c.tn, c.fn, c.fp, 0, r.warnings);
    r.classes[1] = class_metrics(c.tp, c.fp, c.fn, 1, r.warnings);
    r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(r.total);

    const double n = static_cast<double>(r.total);
    const auto& a = r.classes[0];
    const auto& b = r.classes[1];
    r.macro_avg = {(a.precision + b.precision) / 2.0, (a.recall + b.recall) / 2.0, (a.f1 + b.f1) / 2.0, r.total};
    const double sa = static_cast<double>(a.support);
    const double sb = static_cast<double>(b.support);
    r.weighted_avg = {(sa * a.precision + sb * b.precision) / n, (sa * a.recall + sb * b.recall) / n,
        (sa * a.f1 + sb * b.f1) / n, r.total};
    return r;
}

std::string render_report(const MetricsReport& r, std::string_view title)
{
    std::string out;
    char buf[128];
    if (!title.empty()) {
        out.append(title).append("\n");
    }
    std::snprintf(buf, sizeof(buf), "%-14s%10s%10s%10s%10s\n", "", "precision", "recall", "f1-score", "support");
    out += buf;
    out += "\n";
    auto row = [&](std::string_view label, const ClassMetrics& m) {
        std::snprintf(buf, sizeof(buf), "%-14s%10.2f%10.2f%10.2f%10zu\n", std::string(label).c_str(), m.precision,
            m.recall, m.f1, m.support);
        out += buf;
    };
    row(kReportRows[0], r.classes[0]);
    row(kReportRows[1], r.classes[1]);
    out += "\n";
    std::snprintf(buf, sizeof(buf), "%-14s%10s%10s%10.2f%10zu\n", std::string(kReportRows[2]).c_str(), "", "",
        r.accuracy, r.total);
    out += buf;
    row(kReportRows[3], r.macro_avg);
    row(kReportRows[4], r.weighted_avg);
    return out;
}

nlohmann::json to_json(const MetricsReport& r)
{
    auto cls = [](const ClassMetrics& m) {
        return nlohmann::json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
    };
    return {
        {"schema", kReportSchema},
        {"classes", {{"0", cls(r.classes[0])}, {"1", cls(r.classes[1])}}},
        {"accuracy", r.accuracy},
        {"macro_avg", cls(r.macro_avg)},
        {"weighted_avg", cls(r.weighted_avg)},
        {"confusion", {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn}, {"tn", r.confusion.tn}}},
        {"total", r.total},
        {"warnings", r.warnings},
    };
}

} // namespace tabext
