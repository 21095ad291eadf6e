#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "fdcr/analytic.hpp"
#include "fdcr/metrics.hpp"
#include "test_support.hpp"

using namespace fdcr;
using namespace fdcr::metrics;
using fdcr::testing::reference_config;

TEST_CASE("binomial interval")
{
    CHECK(estimate_ci(10000, 0.5, CiKind::Binomial) == doctest::Approx(0.0098).epsilon(0.01));
    CHECK(estimate_ci(10000, 0.5, CiKind::Binomial) == doctest::Approx(1.96 * std::sqrt(0.25 / 1e4)).epsilon(1e-3));
    for (double p : {0.0, 1.0}) {
        const auto iv = estimate_interval(50, p, CiKind::Binomial);
        CHECK(iv.lower >= 0.0);
        CHECK(iv.upper <= 1.0);
        CHECK(iv.half_width > 0.0);
        CHECK(iv.upper - iv.lower < 1.0);
    }
    double prev = 1.0;
    for (std::uint64_t n = 10; n <= 10000000; n *= 10) {
        const double h = estimate_ci(n, 0.3, CiKind::Binomial);
        CHECK(h < prev);
        prev = h;
    }
    CHECK(prev < 1e-3);
    CHECK_THROWS_AS(estimate_ci(0, 0.5, CiKind::Binomial), std::invalid_argument);
    CHECK_THROWS_AS(estimate_ci(10, 1.5, CiKind::Binomial), std::invalid_argument);
}

TEST_CASE("t interval for mean durations")
{
    // t_{0.975, 9} = 2.262157...
    CHECK(estimate_ci(10, 1.0, CiKind::MeanOfDurations, 1.0) == doctest::Approx(2.2621571628 / std::sqrt(10.0)));
    CHECK(estimate_ci(1000000, 1.0, CiKind::MeanOfDurations, 1.0) ==
          doctest::Approx(1.959963985 / 1000.0).epsilon(1e-4));
    CHECK(std::isinf(estimate_ci(1, 1.0, CiKind::MeanOfDurations, 1.0)));
}

TEST_CASE("judge verdicts")
{
    auto r = judge("x", 1.0, 1.05, 0.1, 0.2);
    CHECK(r.verdict == Verdict::WithinCI);
    r = judge("x", 1.0, 1.15, 0.1, 0.2);
    CHECK(r.verdict == Verdict::WithinTolerance);
    r = judge("x", 1.0, 1.25, 0.1, 0.2);
    CHECK(r.verdict == Verdict::Discrepant);
    CHECK(r.gap == doctest::Approx(0.25));
    CHECK(r.relative_gap == doctest::Approx(0.25));
    r = judge("x", 0.0, 0.0, 0.0, 0.0, true);
    CHECK(r.verdict == Verdict::WithinTolerance);
    CHECK(r.relative_gap == 0.0);
    r = judge("x", 0.0, 1e-13, 0.0, 1.0);
    CHECK(r.relative_gap == doctest::Approx(0.1));

    // Swapping roles only flips the gap sign.
    const auto a = judge("x", 2.0, 2.3, 0.1, 0.5);
    const auto b = judge("x", 2.3, 2.0, 0.1, 0.5);
    CHECK(a.gap == doctest::Approx(-b.gap));
    CHECK(a.verdict == b.verdict);
}

TEST_CASE("never WithinCI when the gap exceeds the half-width")
{
    for (double gap = 0.0; gap < 1.0; gap += 0.013) {
        for (double ci = 0.0; ci < 1.0; ci += 0.07) {
            const auto r = judge("x", 1.0, 1.0 + gap, ci, 0.5);
            if (std::abs(r.gap) > ci) {
                CHECK(r.verdict != Verdict::WithinCI);
            }
        }
    }
}

TEST_CASE("compare rows for a degenerate run")
{
    // PU never returns and is never missed.
    sim::SimConfig c = reference_config(sim::Scheme::AsyncFD, 30.0);
    c.params.lambda_rate = 1e-7;
    c.params.mu_rate = 100.0;
    c.params.snr_pu_mean = 100.0;
    c.initial = InitialPuState::ForceOn;
    c.warmup = 0.5;
    const auto s = sim::run(c);
    const auto a = analytic::evaluate(c.params);
    const auto rows = compare(s, a);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].metric_name == "collision_prob");
    CHECK(rows[0].verdict == Verdict::WithinTolerance);
    CHECK(rows[1].metric_name == "mean_collision_duration");
    CHECK(rows[1].verdict == Verdict::WithinTolerance);
    CHECK(rows[2].metric_name == "throughput");
}

TEST_CASE("compare at the reference point")
{
    const auto c = reference_config(sim::Scheme::AsyncFD, 3000.0, 1);
    const auto s = sim::run(c);
    const auto a = analytic::evaluate(c.params);
    const auto rows = compare(s, a);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].analytic == a.pcol_async);
    CHECK(rows[1].analytic == a.tau_bar);
    CHECK(rows[2].analytic == a.r_async);
    CHECK(rows[2].verdict != Verdict::Discrepant);
    CHECK(rows[2].relative_gap < 0.05);
    CHECK(compare(s, a).size() == rows.size());

    const auto lbt = sim::run(reference_config(sim::Scheme::LBT, 300.0, 1));
    const auto lrows = compare(lbt, a);
    REQUIRE(lrows.size() == 2);
    CHECK(lrows[0].analytic == a.pcol_lbt);
    CHECK(lrows[1].analytic == doctest::Approx(2 * a.tau_bar));

    SystemParams other = c.params;
    other.sis_beta = 0.02;
    CHECK_THROWS_AS(compare(s, analytic::evaluate(other)), std::invalid_argument);

    ToleranceMap partial{{"throughput", {Tolerance::Kind::Relative, 0.05}}};
    CHECK_THROWS_AS(compare(s, a, partial), std::invalid_argument);
}

TEST_CASE("row writers")
{
    std::vector<ComparisonRow> rows{judge("throughput", 4.0, 4.1, 0.05, 0.2)};
    rows[0].note = "has \"quotes\", and commas";
    std::ostringstream csv;
    write_rows_csv(csv, rows);
    CHECK(csv.str() ==
          "metric,analytic,simulated,ci95,gap,relative_gap,tolerance,verdict,note\n"
          "throughput,4,4.1,0.05,0.1,0.025,0.2,WithinTolerance,\"has \"\"quotes\"\", and commas\"\n");
    std::ostringstream txt;
    write_rows_text(txt, rows);
    CHECK(txt.str().find("WithinTolerance") != std::string::npos);
}
