#include "fdcr/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace fdcr::config {

using nlohmann::json;

namespace {

enum class Kind { Plain, Snr, Duration, Integer };

struct ParamField {
    const char* name;
    double SystemParams::*member;  // null for packets_per_frame
    Kind kind;
    bool required;
};

const std::vector<ParamField>& param_fields()
{
    static const std::vector<ParamField> fields = {
        {"lambda_rate", &SystemParams::lambda_rate, Kind::Plain, true},
        {"mu_rate", &SystemParams::mu_rate, Kind::Plain, true},
        {"frame_T", &SystemParams::frame_T, Kind::Duration, true},
        {"sense_Ts", &SystemParams::sense_Ts, Kind::Duration, true},
        {"sample_fs", &SystemParams::sample_fs, Kind::Plain, true},
        {"noise_var", &SystemParams::noise_var, Kind::Plain, false},
        {"eps0", &SystemParams::eps0, Kind::Plain, true},
        {"eps1", &SystemParams::eps1, Kind::Plain, true},
        {"sis_beta", &SystemParams::sis_beta, Kind::Plain, true},
        {"snr_su_mean", &SystemParams::snr_su_mean, Kind::Snr, true},
        {"snr_pu_mean", &SystemParams::snr_pu_mean, Kind::Snr, true},
        {"per_alpha", &SystemParams::per_alpha, Kind::Plain, true},
        {"per_g", &SystemParams::per_g, Kind::Plain, true},
        {"per_gamma_t", &SystemParams::per_gamma_t, Kind::Snr, true},
        {"packets_per_frame", nullptr, Kind::Integer, false},
    };
    return fields;
}

const std::set<std::string>& sim_keys()
{
    static const std::set<std::string> keys = {"scheme",         "horizon",         "seed",
                                               "warmup",         "pu_link_fading",  "su_link_fading",
                                               "deep_fade_ratio", "initial"};
    return keys;
}

double number(const json& v, const std::string& field)
{
    if (!v.is_number()) {
        throw ParamError(field, "expected a number");
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
        throw ParamError(field, "must be finite");
    }
    return x;
}

bool boolean(const json& v, const std::string& field)
{
    if (!v.is_boolean()) {
        throw ParamError(field, "expected true or false");
    }
    return v.get<bool>();
}

double from_db(double db) { return std::pow(10.0, db / 10.0); }

std::string_view initial_name(InitialPuState s)
{
    switch (s) {
    case InitialPuState::Stationary: return "stationary";
    case InitialPuState::ForceOn: return "on";
    case InitialPuState::ForceOff: return "off";
    }
    return "?";
}

InitialPuState parse_initial(const json& v)
{
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "stationary") return InitialPuState::Stationary;
        if (s == "on") return InitialPuState::ForceOn;
        if (s == "off") return InitialPuState::ForceOff;
    }
    throw ParamError("sim.initial", "expected \"stationary\", \"on\" or \"off\"");
}

void parse_sim_block(const json& block, sim::SimConfig& cfg)
{
    if (!block.is_object()) {
        throw ParamError("sim", "expected an object");
    }
    for (const auto& [key, value] : block.items()) {
        if (!key.empty() && key.front() == '_') {
            continue;
        }
        const std::string field = "sim." + key;
        if (!sim_keys().contains(key)) {
            throw ParamError(field, "unknown field");
        }
        if (key == "scheme") {
            if (!value.is_string()) {
                throw ParamError(field, "expected a string");
            }
            try {
                cfg.scheme = sim::parse_scheme(value.get<std::string>());
            } catch (const std::invalid_argument& e) {
                throw ParamError(field, e.what());
            }
        } else if (key == "horizon") {
            cfg.horizon = parse_duration(value, field);
        } else if (key == "warmup") {
            cfg.warmup = value.is_string() && value.get<std::string>() == "auto" ? -1.0 : parse_duration(value, field);
        } else if (key == "seed") {
            if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0)) {
                throw ParamError(field, "expected a non-negative integer");
            }
            cfg.seed = value.get<std::uint64_t>();
        } else if (key == "pu_link_fading") {
            cfg.pu_link_fading = boolean(value, field);
        } else if (key == "su_link_fading") {
            cfg.su_link_fading = boolean(value, field);
        } else if (key == "deep_fade_ratio") {
            cfg.deep_fade_ratio = number(value, field);
        } else if (key == "initial") {
            cfg.initial = parse_initial(value);
        }
    }
}

}  // namespace

const std::vector<std::string>& required_fields()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& f : param_fields()) {
            if (f.required) {
                out.emplace_back(f.name);
            }
        }
        return out;
    }();
    return names;
}

double parse_duration(std::string_view text, const std::string& field)
{
    double scale = 1.0;
    if (text.size() > 2 && text.substr(text.size() - 2) == "ms") {
        scale = 1e-3;
        text.remove_suffix(2);
    } else if (text.size() > 1 && text.back() == 's') {
        text.remove_suffix(1);
    }
    std::string body(text);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(body, &used);
    } catch (const std::exception&) {
        throw ParamError(field, "cannot parse duration '" + body + "'");
    }
    if (used != body.size() || !std::isfinite(v)) {
        throw ParamError(field, "cannot parse duration '" + body + "'");
    }
    return v * scale;
}

double parse_duration(const json& value, const std::string& field)
{
    if (value.is_string()) {
        return parse_duration(std::string_view(value.get_ref<const std::string&>()), field);
    }
    return number(value, field);
}

sim::SimConfig parse_config(const json& doc)
{
    if (!doc.is_object()) {
        throw ParamError("config", "top level must be a JSON object");
    }
    std::set<std::string> known;
    for (const auto& f : param_fields()) {
        known.insert(f.name);
        if (f.kind == Kind::Snr) {
            known.insert(std::string(f.name) + "_db");
        }
    }
    known.insert({"pu_off_mean", "pu_on_mean", "prefactor_literal", "sim"});
    for (const auto& [key, value] : doc.items()) {
        if (!key.empty() && key.front() == '_') {
            continue;
        }
        if (!known.contains(key)) {
            throw ParamError(key, "unknown field");
        }
    }

    sim::SimConfig cfg;
    SystemParams& p = cfg.params;
    std::vector<std::string> missing;

    auto take = [&](const std::string& name, const std::string& alt) -> const json* {
        const bool has = doc.contains(name);
        const bool has_alt = !alt.empty() && doc.contains(alt);
        if (has && has_alt) {
            throw ParamError(name + "," + alt, "give only one of these fields");
        }
        return has ? &doc.at(name) : has_alt ? &doc.at(alt) : nullptr;
    };

    for (const auto& f : param_fields()) {
        const std::string name = f.name;
        std::string alt;
        if (f.kind == Kind::Snr) alt = name + "_db";
        if (name == "lambda_rate") alt = "pu_off_mean";
        if (name == "mu_rate") alt = "pu_on_mean";
        const json* v = take(name, alt);
        if (v == nullptr) {
            if (f.required) {
                missing.push_back(name);
            }
            continue;
        }
        const bool via_alt = !alt.empty() && !doc.contains(name);
        const std::string used = via_alt ? alt : name;
        if (f.kind == Kind::Integer) {
            if (!v->is_number_integer()) {
                throw ParamError(used, "expected an integer");
            }
            const auto n = v->get<std::int64_t>();
            if (n < 1 || n > std::numeric_limits<int>::max()) {
                throw ParamError(used, "must be >= 1");
            }
            p.packets_per_frame = static_cast<int>(n);
            continue;
        }
        double x = 0.0;
        if (f.kind == Kind::Duration || (via_alt && (name == "lambda_rate" || name == "mu_rate"))) {
            x = parse_duration(*v, used);
        } else {
            x = number(*v, used);
        }
        if (via_alt && f.kind == Kind::Snr) {
            x = from_db(x);
        } else if (via_alt) {
            if (!(x > 0.0)) {
                throw ParamError(used, "must be > 0");
            }
            x = 1.0 / x;
        }
        p.*f.member = x;
    }
    if (!missing.empty()) {
        std::string names;
        for (const auto& m : missing) {
            names += (names.empty() ? "" : ",") + m;
        }
        throw ParamError(names, "missing required field(s)");
    }
    if (doc.contains("prefactor_literal") && !boolean(doc.at("prefactor_literal"), "prefactor_literal")) {
        throw ParamError("prefactor_literal", "only the literal prefactor (true) is supported");
    }
    p.validate();

    cfg.horizon = 100.0 * std::max(1.0 / p.lambda_rate, 1.0 / p.mu_rate);
    if (doc.contains("sim")) {
        parse_sim_block(doc.at("sim"), cfg);
    }
    cfg.warmup = cfg.effective_warmup();
    cfg.validate();
    return cfg;
}

sim::SimConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ParamError("config", "cannot open '" + path + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) {
        return parse_config(json::object());
    }
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParamError("config", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(doc);
}

json to_json(const sim::SimConfig& cfg)
{
    json j;
    for (const auto& f : param_fields()) {
        if (f.member == nullptr) {
            j[f.name] = cfg.params.packets_per_frame;
        } else {
            j[f.name] = cfg.params.*f.member;
        }
    }
    j["prefactor_literal"] = true;
    j["sim"] = {{"scheme", sim::to_string(cfg.scheme)},
                {"horizon", cfg.horizon},
                {"seed", cfg.seed},
                {"warmup", cfg.warmup},
                {"pu_link_fading", cfg.pu_link_fading},
                {"su_link_fading", cfg.su_link_fading},
                {"deep_fade_ratio", cfg.deep_fade_ratio},
                {"initial", initial_name(cfg.initial)}};
    return j;
}

void set_field(sim::SimConfig& cfg, const std::string& name, double value)
{
    for (const auto& f : param_fields()) {
        if (name == f.name) {
            if (f.member == nullptr) {
                cfg.params.packets_per_frame = static_cast<int>(std::lround(value));
            } else {
                cfg.params.*f.member = value;
            }
            return;
        }
        if (f.kind == Kind::Snr && name == std::string(f.name) + "_db") {
            cfg.params.*f.member = from_db(value);
            return;
        }
    }
    if (name == "pu_off_mean") {
        cfg.params.lambda_rate = 1.0 / value;
    } else if (name == "pu_on_mean") {
        cfg.params.mu_rate = 1.0 / value;
    } else if (name == "horizon") {
        cfg.horizon = value;
    } else if (name == "warmup") {
        cfg.warmup = value;
    } else if (name == "deep_fade_ratio") {
        cfg.deep_fade_ratio = value;
    } else {
        throw ParamError(name, "unknown field");
    }
}

bool is_duration_field(const std::string& name)
{
    static const std::set<std::string> names = {"frame_T", "sense_Ts", "pu_off_mean", "pu_on_mean", "horizon",
                                                "warmup"};
    return names.contains(name);
}

}  // namespace fdcr::config
