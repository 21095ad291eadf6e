#include "fdcr/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include "fdcr/analytic.hpp"
#include "fdcr/config.hpp"
#include "fdcr/metrics.hpp"
#include "fdcr/report_io.hpp"
#include "fdcr/simkernel.hpp"
#include "fdcr/sweep.hpp"

namespace fdcr::cli {

namespace {

using nlohmann::json;

struct SimFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string horizon;
    std::string warmup;
    std::string scheme;
    std::string output;
    int replicates = 1;
};

void add_sim_flags(CLI::App* cmd, SimFlags& f, bool with_scheme = true)
{
    cmd->add_option("--config", f.config, "JSON configuration file")->required();
    cmd->add_option("--seed", f.seed, "base random seed");
    cmd->add_option("--horizon", f.horizon, "simulated time, e.g. 600s or 500ms");
    cmd->add_option("--warmup", f.warmup, "time excluded from statistics");
    if (with_scheme) {
        cmd->add_option("--scheme", f.scheme, "async, sync or lbt");
    }
    cmd->add_option("--output", f.output, "write the result here instead of stdout");
}

sim::SimConfig resolve(const SimFlags& f)
{
    sim::SimConfig cfg = config::load_config(f.config);
    if (f.seed) {
        cfg.seed = *f.seed;
    }
    if (!f.horizon.empty()) {
        cfg.horizon = config::parse_duration(std::string_view(f.horizon), "horizon");
    }
    if (!f.warmup.empty()) {
        cfg.warmup = config::parse_duration(std::string_view(f.warmup), "warmup");
    }
    if (!f.scheme.empty()) {
        try {
            cfg.scheme = sim::parse_scheme(f.scheme);
        } catch (const std::invalid_argument& e) {
            throw ParamError("scheme", e.what());
        }
    }
    cfg.validate();
    return cfg;
}

/// Output sink: the --output file when given, otherwise `fallback`.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback)
    {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) {
                throw std::runtime_error("cannot write '" + path + "'");
            }
            stream_ = file_.get();
        }
    }
    std::ostream& operator*() { return *stream_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_;
};

void write_file(const std::string& path, const std::function<void(std::ostream&)>& fn)
{
    if (path.empty()) {
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot write '" + path + "'");
    }
    fn(f);
}

sim::SimReport simulate_merged(const sim::SimConfig& cfg, int replicates, const sim::RunOptions& opts,
                               sim::SimResult* first)
{
    if (replicates < 1) {
        throw ParamError("replicates", "must be >= 1");
    }
    std::vector<sim::SimReport> reports;
    for (int r = 0; r < replicates; ++r) {
        sim::SimConfig c = cfg;
        c.seed = cfg.seed + static_cast<std::uint64_t>(r);
        sim::SimResult res = sim::run_detailed(c, r == 0 ? opts : sim::RunOptions{});
        reports.push_back(res.report);
        if (r == 0 && first != nullptr) {
            *first = std::move(res);
        }
    }
    return replicates == 1 ? reports.front() : sim::merge_reports(reports);
}

std::vector<std::string> split(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

json fsm_table(Tick stagger)
{
    using namespace protocol;
    const Exploration ex = explore_pair(Timing{stagger});
    auto actions = [](const std::vector<Action>& list) {
        json a = json::array();
        for (const Action& x : list) {
            std::string s(to_string(x.kind));
            if (x.kind == ActionKind::SendRts) {
                s += "(" + std::string(to_string(x.rts)) + ")";
            }
            a.push_back(s);
        }
        return a;
    };
    json rows = json::array();
    for (const Transition& t : ex.transitions) {
        rows.push_back({{"su1", describe(t.from.su1)},
                        {"su2", describe(t.from.su2)},
                        {"event", describe(t.event)},
                        {"next_su1", describe(t.step.state.su1)},
                        {"next_su2", describe(t.step.state.su2)},
                        {"su1_actions", actions(t.step.su1_actions)},
                        {"su2_actions", actions(t.step.su2_actions)},
                        {"handshake", t.step.handshake ? json(to_string(*t.step.handshake)) : json(nullptr)}});
    }
    return {{"states", ex.states.size()}, {"transitions", rows}, {"violations", ex.violations}};
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Full-duplex cognitive radio MAC: closed forms, simulation and comparison"};
    app.require_subcommand(1);

    SimFlags an_flags;
    auto* an = app.add_subcommand("analytic", "evaluate the closed forms");
    an->add_option("--config", an_flags.config, "JSON configuration file")->required();
    an->add_option("--output", an_flags.output, "write the result here instead of stdout");

    SimFlags sim_flags;
    std::string collisions_csv, trace_csv, event_log;
    auto* simc = app.add_subcommand("simulate", "run the simulator");
    add_sim_flags(simc, sim_flags);
    simc->add_option("--replicates", sim_flags.replicates, "seeds to pool (seed, seed+1, ...)");
    simc->add_option("--collisions-csv", collisions_csv, "dump collision records of the first replicate");
    simc->add_option("--trace-csv", trace_csv, "dump the PU ON/OFF trace of the first replicate");
    simc->add_option("--event-log", event_log, "JSON-lines event log of the first replicate");

    SimFlags cmp_flags;
    std::string format = "text";
    auto* cmp = app.add_subcommand("compare", "simulate and compare against the closed forms");
    add_sim_flags(cmp, cmp_flags);
    cmp->add_option("--replicates", cmp_flags.replicates, "seeds to pool");
    cmp->add_option("--format", format, "text, csv or json")->check(CLI::IsMember({"text", "csv", "json"}));

    SimFlags sw_flags;
    std::string sw_param, sw_values, sw_from, sw_to, sw_schemes = "async";
    int sw_count = 0;
    bool sw_log = false;
    auto* sw = app.add_subcommand("sweep", "sweep one field and write long-format CSV");
    add_sim_flags(sw, sw_flags, false);
    sw->add_option("--param", sw_param, "field to sweep")->required();
    sw->add_option("--values", sw_values, "explicit comma-separated values");
    sw->add_option("--from", sw_from, "grid start");
    sw->add_option("--to", sw_to, "grid stop");
    sw->add_option("--count", sw_count, "grid points");
    sw->add_flag("--log", sw_log, "geometric grid");
    sw->add_option("--replicates", sw_flags.replicates, "seeds per point");
    sw->add_option("--scheme", sw_schemes, "comma-separated schemes");

    std::string fsm_scheme = "async";
    std::string fsm_output;
    auto* fsm = app.add_subcommand("dump-fsm", "reachable two-node transition table as JSON");
    fsm->add_option("--scheme", fsm_scheme, "async or sync (sets the frame stagger)")
        ->check(CLI::IsMember({"async", "sync"}));
    fsm->add_option("--output", fsm_output, "write the table here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kExitConfig;
    }

    try {
        if (*an) {
            const sim::SimConfig cfg = config::load_config(an_flags.config);
            Sink sink(an_flags.output, out);
            json j = {{"config", config::to_json(cfg)}, {"analytic", io::to_json(analytic::evaluate(cfg.params))}};
            *sink << io::dump_rounded(j);
            return kExitOk;
        }
        if (*simc) {
            const sim::SimConfig cfg = resolve(sim_flags);
            std::unique_ptr<std::ofstream> log;
            sim::RunOptions opts;
            opts.keep_trace = !collisions_csv.empty() || !trace_csv.empty();
            if (!event_log.empty()) {
                log = std::make_unique<std::ofstream>(event_log, std::ios::binary);
                opts.event_log = log.get();
            }
            sim::SimResult first;
            const sim::SimReport report = simulate_merged(cfg, sim_flags.replicates, opts, &first);
            write_file(collisions_csv, [&](std::ostream& f) { sim::write_collisions_csv(f, first.collision_records); });
            write_file(trace_csv, [&](std::ostream& f) { first.pu_trace->write_csv(f); });
            Sink sink(sim_flags.output, out);
            *sink << io::dump_rounded(io::to_json(report));
            return kExitOk;
        }
        if (*cmp) {
            const sim::SimConfig cfg = resolve(cmp_flags);
            const sim::SimReport report = simulate_merged(cfg, cmp_flags.replicates, {}, nullptr);
            const auto rows = metrics::compare(report, analytic::evaluate(cfg.params));
            Sink sink(cmp_flags.output, out);
            if (format == "csv") {
                metrics::write_rows_csv(*sink, rows);
            } else if (format == "json") {
                *sink << io::dump_rounded(io::to_json(rows));
            } else {
                metrics::write_rows_text(*sink, rows);
            }
            return metrics::any_discrepant(rows) ? kExitDiscrepant : kExitOk;
        }
        if (*sw) {
            const sim::SimConfig cfg = resolve(sw_flags);
            sweep::SweepSpec spec;
            spec.parameter = sw_param;
            spec.replicates = sw_flags.replicates;
            spec.schemes.clear();
            for (const auto& s : split(sw_schemes)) {
                try {
                    spec.schemes.push_back(sim::parse_scheme(s));
                } catch (const std::invalid_argument& e) {
                    throw ParamError("scheme", e.what());
                }
            }
            auto value_of = [&](const std::string& text, const std::string& field) {
                if (config::is_duration_field(sw_param)) {
                    return config::parse_duration(std::string_view(text), field);
                }
                try {
                    std::size_t used = 0;
                    const double v = std::stod(text, &used);
                    if (used == text.size()) {
                        return v;
                    }
                } catch (const std::exception&) {
                }
                throw ParamError(field, "cannot parse '" + text + "'");
            };
            if (!sw_values.empty()) {
                for (const auto& v : split(sw_values)) {
                    spec.values.push_back(value_of(v, "values"));
                }
            } else {
                if (sw_from.empty() || sw_to.empty() || sw_count < 1) {
                    throw ParamError("values", "give --values or --from, --to and --count");
                }
                const double a = value_of(sw_from, "from");
                const double b = value_of(sw_to, "to");
                spec.values = sw_log ? sweep::log_grid(a, b, sw_count) : sweep::linear_grid(a, b, sw_count);
            }
            Sink sink(sw_flags.output, out);
            sweep::run_sweep(cfg, spec, *sink);
            return kExitOk;
        }
        if (*fsm) {
            const Tick stagger = fsm_scheme == "sync" ? 0 : 1;
            Sink sink(fsm_output, out);
            *sink << fsm_table(stagger).dump(2) << "\n";
            return kExitOk;
        }
    } catch (const ParamError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace fdcr::cli
