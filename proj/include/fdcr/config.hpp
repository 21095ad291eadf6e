#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fdcr/simkernel.hpp"

/// JSON configuration files.
///
/// Top-level keys are SystemParams fields. SNR fields may instead be given in
/// dB with a `_db` suffix; durations accept numbers (seconds) or strings with
/// an `ms` or `s` suffix; `pu_off_mean` / `pu_on_mean` may replace
/// `lambda_rate` / `mu_rate`. Simulation settings live in an optional `sim`
/// object. Keys starting with `_` are comments. Every error is a ParamError
/// naming the field.
namespace fdcr::config {

/// Fields without a default.
const std::vector<std::string>& required_fields();

/// "20ms", "0.02s", "0.02" or a JSON number, in seconds.
double parse_duration(const nlohmann::json& value, const std::string& field);
double parse_duration(std::string_view text, const std::string& field);

/// Validated configuration. Defaults are filled in explicitly (warmup and
/// horizon included), so the record round-trips through to_json.
sim::SimConfig parse_config(const nlohmann::json& doc);
sim::SimConfig load_config(const std::string& path);

/// Effective configuration in the file format, exact (unrounded) numbers.
nlohmann::json to_json(const sim::SimConfig& cfg);

/// Sets one SystemParams or SimConfig field by name (as used in sweeps).
/// Throws ParamError for an unknown name.
void set_field(sim::SimConfig& cfg, const std::string& name, double value);

/// Whether `name` is a duration field (accepts ms/s suffixes).
bool is_duration_field(const std::string& name);

}  // namespace fdcr::config
