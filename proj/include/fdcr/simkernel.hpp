#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fdcr/params.hpp"
#include "fdcr/protocol.hpp"
#include "fdcr/stochastic.hpp"

namespace fdcr::sim {

enum class Scheme { AsyncFD, SyncFD, LBT };

std::string_view to_string(Scheme s);
/// Accepts "async", "sync", "lbt" and the enumerator names. Throws std::invalid_argument.
Scheme parse_scheme(std::string_view text);

struct SimConfig {
    SystemParams params;
    Scheme scheme = Scheme::AsyncFD;
    double horizon = 0.0;  ///< seconds
    std::uint64_t seed = 1;
    /// Seconds excluded from statistics. Negative selects 10 * max(1/lambda, 1/mu).
    double warmup = -1.0;
    /// Rayleigh block fading on PU->SU links; when false those SNRs are fixed at their mean.
    bool pu_link_fading = true;
    bool su_link_fading = true;
    /// A receiver whose PU SNR falls below this fraction of the mean is in a deep fade
    /// and cannot tell a collision from a clean frame.
    double deep_fade_ratio = 0.1;
    InitialPuState initial = InitialPuState::Stationary;

    double effective_warmup() const;
    /// Throws ParamError naming the offending field.
    void validate() const;

    bool operator==(const SimConfig&) const = default;
};

enum class CollisionKind { PreCollision, PostCollision };
enum class Termination { Nack, FrameEnd, PuDeparture, HorizonEnd };

std::string_view to_string(CollisionKind k);
std::string_view to_string(Termination t);

struct CollisionRecord {
    Tick start;
    Tick end;
    CollisionKind kind;
    Termination terminated_by;

    double duration() const { return to_seconds(end - start); }
};

struct Interval {
    Tick start;
    Tick end;
};

struct Histogram {
    std::vector<double> edges;            ///< seconds; last bin is open-ended
    std::vector<std::uint64_t> counts;    ///< edges.size() bins
};

struct ModeOccupancy {
    double cs = 0.0;
    double fdts = 0.0;
    double fdtr = 0.0;
    double hd_tx = 0.0;  ///< LBT transmission

    double total() const { return cs + fdts + fdtr + hd_tx; }
};

struct SimReport {
    SimConfig config;
    std::vector<std::uint64_t> seeds;

    double observed_time = 0.0;  ///< horizon - warmup, summed over merged runs
    /// observed_time / access period. The period is T for the full-duplex
    /// schemes and T + T_s (sense, then send) for LBT.
    double frame_slots = 0.0;

    std::uint64_t collisions = 0;
    std::uint64_t pre_collisions = 0;
    std::uint64_t post_collisions = 0;
    /// Access periods (grid anchored at the warmup end) counted as collided
    /// by the frame-start rule: a pre-collision starts inside the period, or
    /// the PU is idle at the period start and a post-collision starts inside it.
    std::uint64_t collision_slots = 0;
    /// Access periods in which any collision starts, whatever the PU state at the period start.
    std::uint64_t collision_slots_any = 0;
    /// collision_slots / frame_slots
    double collision_prob_hat = 0.0;
    /// collision_slots_any / frame_slots
    double collision_prob_any = 0.0;
    double collision_prob_ci = 0.0;

    /// Over PostCollision records.
    double mean_collision_duration = 0.0;
    double mean_collision_duration_ci = 0.0;
    double max_post_collision_duration = 0.0;
    double post_duration_sum = 0.0;
    double post_duration_sumsq = 0.0;
    Histogram post_duration_histogram;

    double cumulative_collision_time = 0.0;

    double throughput_hat = 0.0;
    double throughput_ci = 0.0;
    double credit_total = 0.0;  ///< sum over frames of R0 * clean time + R1 * collision time
    std::vector<double> batch_throughput;

    ModeOccupancy mode_occupancy;

    std::uint64_t frames_sent = 0;
    std::uint64_t frames_errored = 0;
    std::uint64_t cs_idle_slots = 0;
    std::uint64_t false_alarms_cs = 0;
    std::uint64_t fdtr_frames_judged = 0;
    std::uint64_t false_alarms_fdtr = 0;
};

/// Number of equal-time batches used for the throughput interval.
inline constexpr int kThroughputBatches = 20;
/// Histogram bins across [0, T]; one more bin collects longer collisions.
inline constexpr int kHistogramBins = 20;

struct RunOptions {
    /// JSON-lines event log (timestamp, node, event, mode) when non-null.
    std::ostream* event_log = nullptr;
    /// Keep the PU trace, every collision record and the SU transmission intervals.
    bool keep_trace = false;
};

struct SimResult {
    SimReport report;
    std::optional<OnOffTrace> pu_trace;
    std::vector<CollisionRecord> collision_records;
    /// Union of both nodes' transmission time.
    std::vector<Interval> tx_intervals;
};

/// Runs one configuration. Dispatches LBT to run_lbt_baseline.
SimReport run(const SimConfig& cfg);
SimResult run_detailed(const SimConfig& cfg, const RunOptions& options);

/// Sense-then-transmit baseline. Requires scheme == LBT.
SimReport run_lbt_baseline(const SimConfig& cfg);
SimResult run_lbt_detailed(const SimConfig& cfg, const RunOptions& options);

/// Pools runs that differ only in seed. Throws std::invalid_argument otherwise.
SimReport merge_reports(std::span<const SimReport> reports);

/// Recomputes every estimator and interval from the raw sums in `r`.
void finalize_estimators(SimReport& r);

/// Writes start,end,kind,terminated_by rows (seconds).
void write_collisions_csv(std::ostream& out, std::span<const CollisionRecord> records);

}  // namespace fdcr::sim
