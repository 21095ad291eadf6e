#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "fdcr/analytic.hpp"
#include "fdcr/metrics.hpp"
#include "fdcr/simkernel.hpp"

/// JSON views of the reports. Report numbers are rounded to 12 significant
/// digits so that identical runs serialize to identical bytes.
namespace fdcr::io {

/// Value of `v` after a round trip through "%.12g".
double round12(double v);

/// Applies round12 to every floating-point number in `j`, in place.
void round_numbers(nlohmann::json& j);

nlohmann::json to_json(const analytic::AnalyticReport& r);
nlohmann::json to_json(const sim::SimReport& r);
nlohmann::json to_json(std::span<const metrics::ComparisonRow> rows);

/// Two-space indented dump with a trailing newline, after round_numbers.
std::string dump_rounded(nlohmann::json j);

}  // namespace fdcr::io
