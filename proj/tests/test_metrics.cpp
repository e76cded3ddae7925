#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "support.hpp"
#include "tabext/error.hpp"
#include "tabext/metrics.hpp"
#include "tabext/random.hpp"

using namespace tabext;
using namespace tabext::testing;

namespace {

void check_against_oracle(const std::vector<int>& pred, const std::vector<int>& truth)
{
    const auto r = compute_metrics(pred, truth);
    const auto o = metrics_oracle(pred, truth);
    for (int c = 0; c < 2; ++c) {
        CHECK(r.classes[c].precision == o.cls[c].precision);
        CHECK(r.classes[c].recall == o.cls[c].recall);
        CHECK(r.classes[c].f1 == o.cls[c].f1);
        CHECK(r.classes[c].support == o.cls[c].support);
    }
    CHECK(r.accuracy == o.accuracy);
    CHECK(r.macro_avg.precision == o.macro.precision);
    CHECK(r.macro_avg.recall == o.macro.recall);
    CHECK(r.macro_avg.f1 == o.macro.f1);
    CHECK(r.weighted_avg.precision == o.weighted.precision);
    CHECK(r.weighted_avg.recall == o.weighted.recall);
    CHECK(r.weighted_avg.f1 == o.weighted.f1);
    CHECK(r.total == pred.size());
    CHECK(r.confusion.tp + r.confusion.fp + r.confusion.fn + r.confusion.tn == pred.size());
}

ErrorKind kind_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Io;
}

} // namespace

TEST_CASE("perfect predictions")
{
    const std::vector<int> y{0, 1, 1, 0, 1};
    const auto r = compute_metrics(y, y);
    CHECK(r.accuracy == 1.0);
    CHECK(r.classes[0].f1 == 1.0);
    CHECK(r.classes[1].f1 == 1.0);
    CHECK(r.classes[1].support == 3);
    CHECK(r.warnings.empty());
}

TEST_CASE("balanced half-right example")
{
    const std::vector<int> pred{1, 1, 0, 0};
    const std::vector<int> truth{1, 0, 1, 0};
    const auto r = compute_metrics(pred, truth);
    CHECK(r.confusion == ConfusionCounts{1, 1, 1, 1});
    for (const auto& m : {r.classes[0], r.classes[1], r.macro_avg, r.weighted_avg}) {
        CHECK(m.precision == 0.5);
        CHECK(m.recall == 0.5);
        CHECK(m.f1 == 0.5);
    }
    CHECK(r.accuracy == 0.5);
}

TEST_CASE("hand-computed skewed example")
{
    // tp=2 fp=1 fn=1 tn=4
    const std::vector<int> pred{1, 1, 1, 0, 0, 0, 0, 0};
    const std::vector<int> truth{1, 1, 0, 1, 0, 0, 0, 0};
    const auto r = compute_metrics(pred, truth);
    CHECK(r.classes[1].precision == doctest::Approx(2.0 / 3.0));
    CHECK(r.classes[1].recall == doctest::Approx(2.0 / 3.0));
    CHECK(r.classes[0].precision == doctest::Approx(4.0 / 5.0));
    CHECK(r.classes[0].recall == doctest::Approx(4.0 / 5.0));
    CHECK(r.accuracy == doctest::Approx(6.0 / 8.0));
    CHECK(r.weighted_avg.f1 == doctest::Approx((5 * 0.8 + 3 * (2.0 / 3.0)) / 8.0));
}

TEST_CASE("undefined ratios are 0 with a warning")
{
    const std::vector<int> pred{0, 0, 0};
    const std::vector<int> truth{0, 1, 0};
    const auto r = compute_metrics(pred, truth);
    CHECK(r.classes[1].precision == 0.0);
    CHECK(r.classes[1].f1 == 0.0);
    CHECK(r.warnings.size() == 1);

    const std::vector<int> zeros{0, 0};
    const auto z = compute_metrics(zeros, zeros);
    CHECK(z.classes[1].precision == 0.0);
    CHECK(z.classes[1].recall == 0.0);
    CHECK(z.classes[1].support == 0);
    CHECK(z.warnings.size() == 2);
}

TEST_CASE("errors")
{
    const std::vector<int> a{0, 1};
    const std::vector<int> b{0};
    const std::vector<int> bad{0, 2};
    CHECK(kind_of([&] { compute_metrics(a, b); }) == ErrorKind::LengthMismatch);
    CHECK(kind_of([&] { compute_metrics(std::vector<int>{}, std::vector<int>{}); }) == ErrorKind::EmptyInput);
    CHECK(kind_of([&] { compute_metrics(bad, a); }) == ErrorKind::InvalidLabel);
    CHECK(kind_of([&] { compute_metrics(a, bad); }) == ErrorKind::InvalidLabel);
}

TEST_CASE("property: 1000 random pairs agree with the counting oracle")
{
    Rng rng(71);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = rng.between(1, 300);
        const double p1 = rng.uniform();
        std::vector<int> pred, truth;
        for (int i = 0; i < n; ++i) {
            truth.push_back(rng.chance(p1) ? 1 : 0);
            pred.push_back(rng.chance(0.8) ? truth.back() : 1 - truth.back());
        }
        CAPTURE(trial);
        check_against_oracle(pred, truth);
    }
}

TEST_CASE("property: swapping class names swaps per-class scores")
{
    Rng rng(72);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> pred, truth, pred_s, truth_s;
        for (int i = 0, n = rng.between(1, 80); i < n; ++i) {
            pred.push_back(rng.between(0, 1));
            truth.push_back(rng.between(0, 1));
            pred_s.push_back(1 - pred.back());
            truth_s.push_back(1 - truth.back());
        }
        const auto a = compute_metrics(pred, truth);
        const auto b = compute_metrics(pred_s, truth_s);
        CHECK(a.classes[0] == b.classes[1]);
        CHECK(a.classes[1] == b.classes[0]);
        CHECK(a.accuracy == b.accuracy);
    }
}

TEST_CASE("rendered report rows and values")
{
    const std::vector<int> pred{1, 1, 1, 0, 0, 0, 0, 0};
    const std::vector<int> truth{1, 1, 0, 1, 0, 0, 0, 0};
    const auto text = render_report(compute_metrics(pred, truth), "test");
    const auto rows = rendered_row_labels(text);
    CHECK(rows == std::vector<std::string>{"0", "1", "accuracy", "macro avg", "weighted avg"});
    CHECK(std::set<std::string>(rows.begin(), rows.end())
        == std::set<std::string>(kReportRows.begin(), kReportRows.end()));
    CHECK(text.rfind("test\n", 0) == 0);
    CHECK(text.find("0.67") != std::string::npos);
    CHECK(text.find("0.80") != std::string::npos);
    CHECK(text.find("0.75") != std::string::npos);
    CHECK(text.find("f1-score") != std::string::npos);
}

TEST_CASE("report JSON")
{
    const std::vector<int> y{0, 1};
    const auto j = to_json(compute_metrics(y, y));
    CHECK(j.at("schema") == std::string(kReportSchema));
    CHECK(j.at("classes").at("1").at("f1") == 1.0);
    CHECK(j.at("confusion").at("tp") == 1);
    CHECK(j.at("total") == 2);
    CHECK(j.at("warnings").empty());
}
