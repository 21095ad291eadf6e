#include "fdcr/report_io.hpp"

#include <cstdio>
#include <cstdlib>

#include "fdcr/config.hpp"

namespace fdcr::io {

using nlohmann::json;

double round12(double v)
{
    if (!std::isfinite(v)) {
        return v;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

void round_numbers(json& j)
{
    if (j.is_number_float()) {
        j = round12(j.get<double>());
    } else if (j.is_structured()) {
        for (auto& item : j) {
            round_numbers(item);
        }
    }
}

json to_json(const analytic::AnalyticReport& r)
{
    return {
        {"pf", r.pf},
        {"pd", r.pd},
        {"pf1", r.pf1},
        {"pd1", r.pd1},
        {"per_avg", r.per_avg},
        {"fer", r.fer},
        {"p_tau", r.p_tau},
        {"p_h0", r.p_h0},
        {"p_h1", r.p_h1},
        {"pcol_async", r.pcol_async},
        {"pcol_lbt", r.pcol_lbt},
        {"tau_bar", r.tau_bar},
        {"theta_bar", r.theta_bar},
        {"r0", r.r0},
        {"r1", r.r1},
        {"r_frame", r.r_frame},
        {"r_avg", r.r_avg},
        {"r_async", r.r_async},
        {"r_sync", r.r_sync},
    };
}

json to_json(const sim::SimReport& r)
{
    json j;
    j["config"] = config::to_json(r.config);
    j["seeds"] = r.seeds;
    j["observed_time"] = r.observed_time;
    j["frame_slots"] = r.frame_slots;
    j["collisions"] = r.collisions;
    j["pre_collisions"] = r.pre_collisions;
    j["post_collisions"] = r.post_collisions;
    j["collision_slots"] = r.collision_slots;
    j["collision_slots_any"] = r.collision_slots_any;
    j["collision_prob_hat"] = r.collision_prob_hat;
    j["collision_prob_any"] = r.collision_prob_any;
    j["mean_collision_duration"] = r.mean_collision_duration;
    j["max_post_collision_duration"] = r.max_post_collision_duration;
    j["collision_duration_histogram"] = {{"edges", r.post_duration_histogram.edges},
                                         {"counts", r.post_duration_histogram.counts}};
    j["cumulative_collision_time"] = r.cumulative_collision_time;
    j["throughput_hat"] = r.throughput_hat;
    j["credit_total"] = r.credit_total;
    j["ci95"] = {{"collision_prob_hat", r.collision_prob_ci},
                 {"mean_collision_duration", r.mean_collision_duration_ci},
                 {"throughput_hat", r.throughput_ci}};
    j["mode_occupancy"] = {{"CS", r.mode_occupancy.cs},
                           {"FDTS", r.mode_occupancy.fdts},
                           {"FDTR", r.mode_occupancy.fdtr},
                           {"HD", r.mode_occupancy.hd_tx}};
    j["frames_sent"] = r.frames_sent;
    j["frames_errored"] = r.frames_errored;
    j["cs_idle_slots"] = r.cs_idle_slots;
    j["false_alarms_cs"] = r.false_alarms_cs;
    j["fdtr_frames_judged"] = r.fdtr_frames_judged;
    j["false_alarms_fdtr"] = r.false_alarms_fdtr;
    return j;
}

json to_json(std::span<const metrics::ComparisonRow> rows)
{
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back({{"metric", r.metric_name},
                       {"analytic", r.analytic},
                       {"simulated", r.simulated},
                       {"ci95", r.ci95},
                       {"gap", r.gap},
                       {"relative_gap", r.relative_gap},
                       {"tolerance", r.tolerance},
                       {"verdict", metrics::to_string(r.verdict)},
                       {"note", r.note}});
    }
    return out;
}

std::string dump_rounded(json j)
{
    round_numbers(j);
    return j.dump(2) + "\n";
}

}  // namespace fdcr::io
