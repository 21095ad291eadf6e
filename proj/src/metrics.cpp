#include "fdcr/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace fdcr::metrics {

namespace {

constexpr double kZ95 = 1.959963984540054;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string csv_quote(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + '"';
}

}  // namespace

Interval95 estimate_interval(std::uint64_t samples, double point, CiKind kind, double sample_sd)
{
    if (samples < 1) {
        throw std::invalid_argument("estimate_interval: need at least one sample");
    }
    const double n = static_cast<double>(samples);
    if (kind == CiKind::Binomial) {
        if (!(point >= 0.0 && point <= 1.0)) {
            throw std::invalid_argument("estimate_interval: binomial point must lie in [0, 1]");
        }
        const double z2 = kZ95 * kZ95;
        const double denom = 1.0 + z2 / n;
        const double centre = (point + z2 / (2.0 * n)) / denom;
        const double half = kZ95 / denom * std::sqrt(point * (1.0 - point) / n + z2 / (4.0 * n * n));
        return {centre - half, centre + half, half};
    }
    if (samples < 2) {
        return {-kInf, kInf, kInf};
    }
    const boost::math::students_t dist(n - 1.0);
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    const double half = t * sample_sd / std::sqrt(n);
    return {point - half, point + half, half};
}

double estimate_ci(std::uint64_t samples, double point, CiKind kind, double sample_sd)
{
    return estimate_interval(samples, point, kind, sample_sd).half_width;
}

std::string to_string(Verdict v)
{
    switch (v) {
    case Verdict::WithinCI: return "WithinCI";
    case Verdict::WithinTolerance: return "WithinTolerance";
    case Verdict::Discrepant: return "Discrepant";
    }
    return "?";
}

ToleranceMap default_tolerances()
{
    return {
        {"throughput", {Tolerance::Kind::Relative, 0.05}},
        {"collision_prob", {Tolerance::Kind::Sigma, 3.0}},
        {"mean_collision_duration", {Tolerance::Kind::Relative, 0.15}},
    };
}

ComparisonRow judge(std::string name, double analytic, double simulated, double ci95, double abs_tolerance,
                    bool degenerate)
{
    ComparisonRow row;
    row.metric_name = std::move(name);
    row.analytic = analytic;
    row.simulated = simulated;
    row.ci95 = ci95;
    row.gap = simulated - analytic;
    row.relative_gap = std::abs(row.gap) / std::max(std::abs(analytic), kRelativeGapFloor);
    row.tolerance = abs_tolerance;
    const double g = std::abs(row.gap);
    if (!degenerate && g <= ci95) {
        row.verdict = Verdict::WithinCI;
    } else if (g <= abs_tolerance) {
        row.verdict = Verdict::WithinTolerance;
    } else {
        row.verdict = Verdict::Discrepant;
    }
    return row;
}

namespace {

double absolute_tolerance(const Tolerance& tol, double analytic, double n_trials)
{
    switch (tol.kind) {
    case Tolerance::Kind::Relative: return tol.value * std::abs(analytic);
    case Tolerance::Kind::Absolute: return tol.value;
    case Tolerance::Kind::Sigma: {
        const double p = std::clamp(analytic, 0.0, 1.0);
        return n_trials > 0.0 ? tol.value * std::sqrt(p * (1.0 - p) / n_trials) : kInf;
    }
    }
    return 0.0;
}

Tolerance lookup(const ToleranceMap& m, const std::string& key)
{
    auto it = m.find(key);
    if (it == m.end()) {
        throw std::invalid_argument("compare: no tolerance for metric '" + key + "'");
    }
    return it->second;
}

}  // namespace

std::vector<ComparisonRow> compare(const sim::SimReport& s, const analytic::AnalyticReport& a,
                                   const ToleranceMap& tolerances)
{
    if (!(s.config.params == a.params)) {
        throw std::invalid_argument("compare: simulation and analytic reports use different parameters");
    }
    const sim::Scheme scheme = s.config.scheme;
    std::vector<ComparisonRow> rows;

    {
        const double expected = scheme == sim::Scheme::LBT ? a.pcol_lbt : a.pcol_async;
        const Tolerance tol = lookup(tolerances, "collision_prob");
        auto row = judge("collision_prob", expected, s.collision_prob_hat, s.collision_prob_ci,
                         absolute_tolerance(tol, expected, s.frame_slots), s.collision_slots == 0);
        if (row.verdict != Verdict::WithinCI) {
            char buf[160];
            std::snprintf(buf, sizeof buf,
                          "frame-start rule; counting every period with a collision onset gives %.6g", s.collision_prob_any);
            row.note = buf;
        }
        rows.push_back(std::move(row));
    }

    {
        // Stagger halves the wait for the next NACK opportunity.
        const double expected = scheme == sim::Scheme::AsyncFD ? a.tau_bar : 2.0 * a.tau_bar;
        const Tolerance tol = lookup(tolerances, "mean_collision_duration");
        if (s.post_collisions == 0) {
            const double expected_count = a.p_h0 * a.p_tau * s.frame_slots;
            const bool unobservable = expected_count < 10.0;
            auto row = judge("mean_collision_duration", expected, 0.0, kInf, unobservable ? kInf : 0.0, true);
            row.note = "no post-collisions observed";
            rows.push_back(std::move(row));
        } else {
            auto row = judge("mean_collision_duration", expected, s.mean_collision_duration,
                             s.mean_collision_duration_ci, absolute_tolerance(tol, expected, 0.0));
            if (row.verdict != Verdict::WithinCI) {
                row.note = "closed-form mean uses different conditioning than the duration pdf";
            }
            if (scheme == sim::Scheme::LBT) {
                row.note = "reference is twice the staggered mean; LBT runs to frame end";
            }
            rows.push_back(std::move(row));
        }
    }

    if (scheme != sim::Scheme::LBT) {
        const double expected = scheme == sim::Scheme::AsyncFD ? a.r_async : a.r_sync;
        const Tolerance tol = lookup(tolerances, "throughput");
        rows.push_back(judge("throughput", expected, s.throughput_hat, s.throughput_ci,
                             absolute_tolerance(tol, expected, 0.0)));
    }
    return rows;
}

bool any_discrepant(std::span<const ComparisonRow> rows)
{
    for (const auto& r : rows) {
        if (r.verdict == Verdict::Discrepant) {
            return true;
        }
    }
    return false;
}

void write_rows_csv(std::ostream& out, std::span<const ComparisonRow> rows)
{
    out << "metric,analytic,simulated,ci95,gap,relative_gap,tolerance,verdict,note\n";
    for (const auto& r : rows) {
        out << r.metric_name << ',' << fmt(r.analytic) << ',' << fmt(r.simulated) << ',' << fmt(r.ci95) << ','
            << fmt(r.gap) << ',' << fmt(r.relative_gap) << ',' << fmt(r.tolerance) << ',' << to_string(r.verdict)
            << ',' << csv_quote(r.note) << '\n';
    }
}

void write_rows_text(std::ostream& out, std::span<const ComparisonRow> rows)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-24s %14s %14s %12s %10s %-16s %s\n", "metric", "analytic", "simulated",
                  "ci95", "rel_gap", "verdict", "note");
    out << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%-24s %14.6g %14.6g %12.4g %10.4g %-16s ", r.metric_name.c_str(), r.analytic,
                      r.simulated, r.ci95, r.relative_gap, to_string(r.verdict).c_str());
        out << buf << r.note << '\n';
    }
}

}  // namespace fdcr::metrics
