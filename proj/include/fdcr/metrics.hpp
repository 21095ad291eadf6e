#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fdcr/analytic.hpp"
#include "fdcr/simkernel.hpp"

namespace fdcr::metrics {

enum class CiKind { Binomial, MeanOfDurations };

struct Interval95 {
    double lower;
    double upper;
    double half_width;
};

/// 95% interval. Binomial: Wilson score interval around `point` with n
/// trials. MeanOfDurations: Student-t interval with n samples and sample
/// standard deviation `sample_sd`. Throws std::invalid_argument for n < 1.
Interval95 estimate_interval(std::uint64_t samples, double point, CiKind kind, double sample_sd = 0.0);

/// Half-width of estimate_interval. Infinite for a mean of fewer than two samples.
double estimate_ci(std::uint64_t samples, double point, CiKind kind, double sample_sd = 0.0);

enum class Verdict { WithinCI, WithinTolerance, Discrepant };

std::string to_string(Verdict v);

struct Tolerance {
    enum class Kind { Relative, Sigma, Absolute };
    Kind kind = Kind::Relative;
    double value = 0.0;
};

using ToleranceMap = std::map<std::string, Tolerance>;

/// throughput 5% relative, collision probability 3 sigma, mean collision duration 15% relative.
ToleranceMap default_tolerances();

struct ComparisonRow {
    std::string metric_name;
    double analytic = 0.0;
    double simulated = 0.0;
    double ci95 = 0.0;
    double gap = 0.0;  ///< simulated - analytic
    double relative_gap = 0.0;
    double tolerance = 0.0;  ///< absolute tolerance the verdict used
    Verdict verdict = Verdict::Discrepant;
    std::string note;
};

inline constexpr double kRelativeGapFloor = 1e-12;

/// Judges one metric. `degenerate` marks an estimator whose interval is not
/// informative (no events observed); such rows can only pass on tolerance.
ComparisonRow judge(std::string name, double analytic, double simulated, double ci95, double abs_tolerance,
                    bool degenerate = false);

/// One row per shared metric: collision_prob, mean_collision_duration and
/// (for the full-duplex schemes) throughput. Throws std::invalid_argument if
/// the reports were built from different parameters.
std::vector<ComparisonRow> compare(const sim::SimReport& sim, const analytic::AnalyticReport& analytic,
                                   const ToleranceMap& tolerances = default_tolerances());

bool any_discrepant(std::span<const ComparisonRow> rows);

void write_rows_csv(std::ostream& out, std::span<const ComparisonRow> rows);
void write_rows_text(std::ostream& out, std::span<const ComparisonRow> rows);

}  // namespace fdcr::metrics
