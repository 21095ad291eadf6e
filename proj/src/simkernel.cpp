#include "fdcr/simkernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <queue>
#include <stdexcept>

#include "fdcr/analytic.hpp"
#include "fdcr/metrics.hpp"

namespace fdcr::sim {

using protocol::Action;
using protocol::ActionKind;
using protocol::DtdDecision;
using protocol::Mode;
using protocol::NodeId;
using protocol::PairState;

std::string_view to_string(Scheme s)
{
    switch (s) {
    case Scheme::AsyncFD: return "async";
    case Scheme::SyncFD: return "sync";
    case Scheme::LBT: return "lbt";
    }
    return "?";
}

Scheme parse_scheme(std::string_view text)
{
    if (text == "async" || text == "AsyncFD") {
        return Scheme::AsyncFD;
    }
    if (text == "sync" || text == "SyncFD") {
        return Scheme::SyncFD;
    }
    if (text == "lbt" || text == "LBT") {
        return Scheme::LBT;
    }
    throw std::invalid_argument("unknown scheme '" + std::string(text) + "' (expected async, sync or lbt)");
}

std::string_view to_string(CollisionKind k)
{
    return k == CollisionKind::PreCollision ? "PreCollision" : "PostCollision";
}

std::string_view to_string(Termination t)
{
    switch (t) {
    case Termination::Nack: return "Nack";
    case Termination::FrameEnd: return "FrameEnd";
    case Termination::PuDeparture: return "PuDeparture";
    case Termination::HorizonEnd: return "HorizonEnd";
    }
    return "?";
}

double SimConfig::effective_warmup() const
{
    if (warmup >= 0.0) {
        return warmup;
    }
    return 10.0 * std::max(1.0 / params.lambda_rate, 1.0 / params.mu_rate);
}

void SimConfig::validate() const
{
    params.validate();
    if (params.samples_per_slot() < 100.0) {
        throw ParamError("sample_fs", "f_s * T_s must be >= 100 for the detector model");
    }
    if (!std::isfinite(horizon) || horizon <= 0.0) {
        throw ParamError("horizon", "must be > 0");
    }
    if (to_ticks(horizon) <= to_ticks(params.frame_T)) {
        throw ParamError("horizon", "must exceed one frame");
    }
    const double w = effective_warmup();
    if (!std::isfinite(w) || w >= horizon) {
        throw ParamError("warmup", "must be smaller than horizon");
    }
    if (!(deep_fade_ratio >= 0.0 && deep_fade_ratio <= 1.0)) {
        throw ParamError("deep_fade_ratio", "must lie in [0, 1]");
    }
}

namespace {

/// Clips time-weighted quantities to the observation window and splits them
/// into equal-time batches.
class Ledger {
public:
    Ledger(Tick window_start, Tick window_end)
        : start_(window_start), end_(window_end),
          batch_len_(std::max<Tick>(1, (window_end - window_start) / kThroughputBatches)),
          credit_(kThroughputBatches, 0.0)
    {
    }

    void credit(Tick a, Tick b, double rate)
    {
        a = std::max(a, start_);
        b = std::min(b, end_);
        if (b <= a || rate == 0.0) {
            return;
        }
        while (a < b) {
            const auto idx = batch_of(a);
            const Tick batch_end = idx + 1 == kThroughputBatches ? end_ : start_ + (idx + 1) * batch_len_;
            const Tick piece_end = std::min(b, batch_end);
            credit_[idx] += rate * to_seconds(piece_end - a);
            a = piece_end;
        }
    }

    void occupy(Tick a, Tick b, double ModeOccupancy::*slot)
    {
        a = std::max(a, start_);
        b = std::min(b, end_);
        if (b > a) {
            occupancy_.*slot += to_seconds(b - a);
        }
    }

    bool in_window(Tick t) const { return t >= start_ && t < end_; }

    void fill(SimReport& r) const
    {
        r.observed_time = to_seconds(end_ - start_);
        r.mode_occupancy = occupancy_;
        r.credit_total = 0.0;
        r.batch_throughput.clear();
        for (int i = 0; i < kThroughputBatches; ++i) {
            const Tick b0 = start_ + i * batch_len_;
            const Tick b1 = i + 1 == kThroughputBatches ? end_ : b0 + batch_len_;
            r.credit_total += credit_[i];
            r.batch_throughput.push_back(credit_[i] / to_seconds(b1 - b0));
        }
    }

private:
    int batch_of(Tick t) const
    {
        return static_cast<int>(std::min<Tick>(kThroughputBatches - 1, (t - start_) / batch_len_));
    }

    Tick start_;
    Tick end_;
    Tick batch_len_;
    std::vector<double> credit_;
    ModeOccupancy occupancy_;
};

/// Collision statistics over the observation window.
class CollisionBook {
public:
    CollisionBook(const OnOffTrace& trace, Tick warmup, Tick frame_T, Tick period, bool keep)
        : trace_(trace), warmup_(warmup), period_(period), keep_(keep)
    {
        const double T = to_seconds(frame_T);
        for (int k = 0; k <= kHistogramBins; ++k) {
            hist_.edges.push_back(T * k / kHistogramBins);
        }
        hist_.counts.assign(hist_.edges.size(), 0);
    }

    void add(const CollisionRecord& rec)
    {
        if (keep_) {
            records_.push_back(rec);
        }
        if (rec.start < warmup_) {
            return;
        }
        ++collisions_;
        cumulative_ += rec.duration();
        const Tick first = (rec.start - warmup_) / period_;
        if (first != last_any_) {
            ++slots_any_;
            last_any_ = first;
        }
        if (rec.kind == CollisionKind::PreCollision) {
            ++pre_;
            if (first != last_cond_) {
                ++slots_cond_;
                last_cond_ = first;
            }
            return;
        }
        if (first != last_cond_ && trace_.state_at(warmup_ + first * period_) == PuState::Off) {
            ++slots_cond_;
            last_cond_ = first;
        }
        ++post_;
        const double d = rec.duration();
        sum_ += d;
        sumsq_ += d * d;
        max_ = std::max(max_, d);
        auto it = std::upper_bound(hist_.edges.begin(), hist_.edges.end(), d);
        const auto bin = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, std::distance(hist_.edges.begin(), it) - 1));
        ++hist_.counts[bin];
    }

    void fill(SimReport& r) const
    {
        r.collisions = collisions_;
        r.pre_collisions = pre_;
        r.post_collisions = post_;
        r.collision_slots = slots_cond_;
        r.collision_slots_any = slots_any_;
        r.post_duration_sum = sum_;
        r.post_duration_sumsq = sumsq_;
        r.max_post_collision_duration = max_;
        r.post_duration_histogram = hist_;
        r.cumulative_collision_time = cumulative_;
    }

    std::vector<CollisionRecord> take_records() { return std::move(records_); }

private:
    const OnOffTrace& trace_;
    Tick warmup_;
    Tick period_;
    bool keep_;
    Tick last_any_ = -1;
    Tick last_cond_ = -1;
    std::uint64_t slots_any_ = 0;
    std::uint64_t slots_cond_ = 0;
    std::vector<CollisionRecord> records_;
    std::uint64_t collisions_ = 0, pre_ = 0, post_ = 0;
    double sum_ = 0.0, sumsq_ = 0.0, max_ = 0.0, cumulative_ = 0.0;
    Histogram hist_;
};

void log_event(std::ostream* out, Tick t, std::string_view node, std::string_view event, std::string_view mode)
{
    if (out == nullptr) {
        return;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", to_seconds(t));
    *out << "{\"t\":" << buf << ",\"node\":\"" << node << "\",\"event\":\"" << event << "\",\"mode\":\"" << mode
         << "\"}\n";
}

NodeId node_of(int i) { return i == 0 ? NodeId::SU1 : NodeId::SU2; }

/// Shared setup for both kernels: random streams, the PU trace and bookkeeping.
struct Common {
    explicit Common(const SimConfig& c, const RunOptions& o)
        : cfg(c),
          p(c.params),
          opts(o),
          horizon(to_ticks(c.horizon)),
          warmup(to_ticks(c.effective_warmup())),
          T(to_ticks(c.params.frame_T)),
          Ts(to_ticks(c.params.sense_Ts)),
          rng_pu(c.seed, StreamId::PuProcess),
          rng_link{RngStream(c.seed, StreamId::FadingS1S2), RngStream(c.seed, StreamId::FadingS2S1)},
          rng_pu_link{RngStream(c.seed, StreamId::FadingPuS1), RngStream(c.seed, StreamId::FadingPuS2)},
          rng_det{RngStream(c.seed, StreamId::DetectorS1), RngStream(c.seed, StreamId::DetectorS2)},
          rng_frames(c.seed, StreamId::FrameErrors),
          trace(gen_onoff_trace(c.params, rng_pu, horizon, c.initial)),
          rates(analytic::rates(c.params)),
          ledger(warmup, horizon),
          period(c.scheme == Scheme::LBT ? T + Ts : T),
          book(trace, warmup, T, period, o.keep_trace)
    {
    }

    /// Energy detector decision for one node over the slot ending at `slot_end`.
    /// The PU counts as present if it is ON at the slot midpoint.
    DtdDecision sense(int node, Tick slot_end, double snr_scale = 1.0)
    {
        const bool on = trace.state_at(slot_end - Ts / 2) == PuState::On;
        double gamma = 0.0;
        if (on) {
            gamma = cfg.pu_link_fading ? sample_link_snr(p.snr_pu_mean, rng_pu_link[node]) : p.snr_pu_mean;
            gamma *= snr_scale;
        }
        const double energy = sample_detector_energy(p, on, gamma, rng_det[node]);
        return protocol::dtd_classify(energy, p.eps0 / p.noise_var, p.eps1 / p.noise_var);
    }

    double draw_su_snr(int sender)
    {
        return cfg.su_link_fading ? sample_link_snr(p.snr_su_mean, rng_link[sender]) : p.snr_su_mean;
    }

    double draw_pu_snr(int receiver)
    {
        return cfg.pu_link_fading ? sample_link_snr(p.snr_pu_mean, rng_pu_link[receiver]) : p.snr_pu_mean;
    }

    /// Outcome of one received frame [start, end). Returns true on error.
    /// A visible PU overlap is always an error; otherwise the frame errs
    /// according to its SINR with the PU interference weighted by overlap.
    bool frame_in_error(Tick start, Tick end, double su_snr, double pu_snr_rx, double self_interference, Tick* overlap_out)
    {
        const Tick len = end - start;
        const Tick overlap = trace.on_time_in(start, end);
        *overlap_out = overlap;
        const bool visible = pu_snr_rx > 0.0 && pu_snr_rx >= cfg.deep_fade_ratio * p.snr_pu_mean;
        if (overlap > 0 && visible) {
            return true;
        }
        const double frac = len > 0 ? static_cast<double>(overlap) / static_cast<double>(len) : 0.0;
        const double sinr = su_snr / (1.0 + self_interference + pu_snr_rx * frac);
        return draw_frame_error(p, sinr, rng_frames);
    }

    void count_cs_slot(Tick slot_end, DtdDecision d1, DtdDecision d2)
    {
        if (!ledger.in_window(slot_end)) {
            return;
        }
        if (trace.state_at(slot_end - Ts / 2) == PuState::Off) {
            ++report.cs_idle_slots;
            if (d1 != DtdDecision::Idle || d2 != DtdDecision::Idle) {
                ++report.false_alarms_cs;
            }
        }
    }

    void tx_interval(Tick a, Tick b)
    {
        if (opts.keep_trace && b > a) {
            if (!tx_intervals.empty() && tx_intervals.back().end == a) {
                tx_intervals.back().end = b;
            } else {
                tx_intervals.push_back({a, b});
            }
        }
    }

    SimResult finish()
    {
        ledger.fill(report);
        book.fill(report);
        report.config = cfg;
        report.seeds = {cfg.seed};
        report.frame_slots = report.observed_time / to_seconds(period);
        finalize_estimators(report);
        SimResult out;
        out.report = std::move(report);
        out.collision_records = book.take_records();
        out.tx_intervals = std::move(tx_intervals);
        if (opts.keep_trace) {
            out.pu_trace = std::move(trace);
        }
        return out;
    }

    const SimConfig& cfg;
    const SystemParams& p;
    RunOptions opts;
    Tick horizon;
    Tick warmup;
    Tick T;
    Tick Ts;
    RngStream rng_pu;
    std::array<RngStream, 2> rng_link;
    std::array<RngStream, 2> rng_pu_link;
    std::array<RngStream, 2> rng_det;
    RngStream rng_frames;
    OnOffTrace trace;
    analytic::Rates rates;
    Ledger ledger;
    Tick period;
    CollisionBook book;
    SimReport report;
    std::vector<Interval> tx_intervals;
};

// ---------------------------------------------------------------------------
// Full-duplex kernel (AsyncFD / SyncFD) driving the protocol state machine.

class FdKernel {
public:
    FdKernel(const SimConfig& cfg, const RunOptions& opts)
        : c_(cfg, opts)
    {
        timing_.fdtr_stagger = cfg.scheme == Scheme::AsyncFD ? c_.T / 2 : 0;
    }

    SimResult run()
    {
        pu_on_ = c_.trace.state_at(0) == PuState::On;
        schedule_slot(0);
        const auto segments = c_.trace.segments();
        std::size_t next_seg = 1;
        for (;;) {
            const Tick t_pu = next_seg < segments.size() ? segments[next_seg].start : c_.horizon;
            drop_stale();
            const Tick t_ev = queue_.empty() ? c_.horizon : queue_.top().t;
            if (std::min(t_pu, t_ev) >= c_.horizon) {
                break;
            }
            if (t_pu <= t_ev) {
                advance(t_pu);
                pu_on_ = segments[next_seg].state == PuState::On;
                ++next_seg;
                log_event(c_.opts.event_log, now_, "PU", pu_on_ ? "PuOn" : "PuOff", mode_name());
                update_collision(Termination::PuDeparture, CollisionKind::PostCollision);
                continue;
            }
            const Ev ev = queue_.top();
            queue_.pop();
            advance(ev.t);
            switch (ev.kind) {
            case EvKind::FrameEnd: on_frame_end(ev); break;
            case EvKind::SlotEnd: on_slot_end(); break;
            case EvKind::SourceSense: on_source_sense(); break;
            }
        }
        advance(c_.horizon);
        if (open_) {
            close_collision(Termination::HorizonEnd);
        }
        if (any_tx()) {
            c_.tx_interval(tx_since_, c_.horizon);
        }
        return c_.finish();
    }

private:
    enum class EvKind { FrameEnd, SlotEnd, SourceSense };

    // Tie order at equal timestamps: PU change (handled outside the queue,
    // first) < frame boundary < sensing slot end. NACKs are delivered inside
    // the frame-boundary handler, after the boundary itself.
    struct Ev {
        Tick t;
        int cls;
        std::uint64_t seq;
        EvKind kind;
        int node;
        std::uint64_t epoch;
    };
    struct Later {
        bool operator()(const Ev& a, const Ev& b) const
        {
            if (a.t != b.t) return a.t > b.t;
            if (a.cls != b.cls) return a.cls > b.cls;
            return a.seq > b.seq;
        }
    };

    struct NodeTx {
        bool active = false;
        Tick frame_start = 0;
        Tick frame_end = 0;
        double su_snr = 0.0;     ///< this node -> peer, for the current frame
        double pu_snr_rx = 0.0;  ///< PU -> peer, for the current frame
    };

    struct OpenCollision {
        Tick start;
        CollisionKind kind;
    };

    void push(Tick t, int cls, EvKind kind, int node, std::uint64_t epoch)
    {
        queue_.push({t, cls, seq_++, kind, node, epoch});
    }

    bool stale(const Ev& e) const
    {
        switch (e.kind) {
        case EvKind::FrameEnd: return e.epoch != tx_epoch_[e.node] || !tx_[e.node].active;
        case EvKind::SlotEnd: return e.epoch != sense_epoch_;
        case EvKind::SourceSense: return e.epoch != tx_epoch_[0] || !tx_[0].active;
        }
        return true;
    }

    void drop_stale()
    {
        while (!queue_.empty() && stale(queue_.top())) {
            queue_.pop();
        }
    }

    Mode mode() const { return protocol::pair_mode(pair_); }
    std::string_view mode_name() const { return protocol::to_string(mode()); }

    bool any_tx() const { return tx_[0].active || tx_[1].active; }

    void advance(Tick t)
    {
        if (t <= now_) {
            return;
        }
        double rate = 0.0;
        for (const NodeTx& x : tx_) {
            if (x.active) {
                rate += pu_on_ ? c_.rates.r1 : c_.rates.r0;
            }
        }
        c_.ledger.credit(now_, t, rate);
        switch (mode()) {
        case Mode::CS: c_.ledger.occupy(now_, t, &ModeOccupancy::cs); break;
        case Mode::FDTS: c_.ledger.occupy(now_, t, &ModeOccupancy::fdts); break;
        case Mode::FDTR: c_.ledger.occupy(now_, t, &ModeOccupancy::fdtr); break;
        }
        now_ = t;
    }

    void update_collision(Termination close_reason, CollisionKind open_kind)
    {
        const bool overlap = pu_on_ && any_tx();
        if (overlap && !open_) {
            open_ = OpenCollision{now_, open_kind};
        } else if (!overlap && open_) {
            close_collision(close_reason);
        }
    }

    void close_collision(Termination reason)
    {
        c_.book.add({open_->start, now_, open_->kind, reason});
        open_.reset();
    }

    void set_active(int node, bool active)
    {
        const bool before = any_tx();
        tx_[node].active = active;
        const bool after = any_tx();
        if (!before && after) {
            tx_since_ = now_;
        } else if (before && !after) {
            c_.tx_interval(tx_since_, now_);
        }
    }

    void schedule_slot(Tick from)
    {
        if (!slot_scheduled_) {
            push(from + c_.Ts, 3, EvKind::SlotEnd, 0, sense_epoch_);
            slot_scheduled_ = true;
        }
    }

    Tick next_boundary(int node) const
    {
        const NodeState_ref s = node == 0 ? pair_.su1 : pair_.su2;
        const Tick since = now_ - mode_entry_ - s.frame_phase;
        const Tick k = since >= 0 ? since / c_.T : -((-since + c_.T - 1) / c_.T);
        return mode_entry_ + s.frame_phase + (k + 1) * c_.T;
    }
    using NodeState_ref = const protocol::NodeState&;

    void start_frame(int node)
    {
        NodeTx& x = tx_[node];
        x.frame_start = now_;
        x.frame_end = next_boundary(node);
        x.su_snr = c_.draw_su_snr(node);
        x.pu_snr_rx = c_.draw_pu_snr(1 - node);
        if (!x.active) {
            set_active(node, true);
        }
        push(x.frame_end, 1, EvKind::FrameEnd, node, tx_epoch_[node]);
    }

    void end_frame_bookkeeping(int node)
    {
        if (now_ > tx_[node].frame_start && c_.ledger.in_window(now_)) {
            ++c_.report.frames_sent;
        }
    }

    void abort(int node)
    {
        if (!tx_[node].active) {
            return;
        }
        end_frame_bookkeeping(node);
        set_active(node, false);
        ++tx_epoch_[node];
    }

    void apply_actions(const protocol::PairStep& step)
    {
        const std::array<const std::vector<Action>*, 2> lists{&step.su1_actions, &step.su2_actions};
        const std::array<const protocol::NodeState*, 2> finals{&step.state.su1, &step.state.su2};
        const Mode before = mode();
        pair_ = step.state;
        const Mode after = mode();
        if (before != after) {
            if (after != Mode::CS) {
                mode_entry_ = now_;
                ++sense_epoch_;
                slot_scheduled_ = false;
            }
        }
        for (int n = 0; n < 2; ++n) {
            for (const Action& a : *lists[n]) {
                switch (a.kind) {
                case ActionKind::StartFrame:
                    // A frame restarted and then aborted in the same step has zero length.
                    if (finals[n]->mode != Mode::CS) {
                        start_frame(n);
                    }
                    break;
                case ActionKind::AbortTransmission: abort(n); break;
                case ActionKind::StartSensingSlot:
                    if (after == Mode::CS) {
                        schedule_slot(now_);
                    }
                    break;
                case ActionKind::SendRts:
                case ActionKind::EmitNack: break;
                }
                if (c_.opts.event_log != nullptr && a.kind != ActionKind::StartSensingSlot) {
                    std::string name(protocol::to_string(a.kind));
                    if (a.kind == ActionKind::SendRts) {
                        name += "(" + std::string(protocol::to_string(a.rts)) + ")";
                    }
                    log_event(c_.opts.event_log, now_, protocol::to_string(node_of(n)), name, mode_name());
                }
            }
        }
        if (before == Mode::FDTS && after == Mode::FDTS) {
            return;
        }
        if (after == Mode::FDTS && before != Mode::FDTS) {
            push(now_ + c_.Ts, 3, EvKind::SourceSense, 0, tx_epoch_[0]);
        }
        update_collision(Termination::Nack, CollisionKind::PreCollision);
    }

    void on_slot_end()
    {
        slot_scheduled_ = false;
        const DtdDecision d1 = c_.sense(0, now_);
        const DtdDecision d2 = c_.sense(1, now_);
        c_.count_cs_slot(now_, d1, d2);
        log_event(c_.opts.event_log, now_, "SU1", "SlotEnd", mode_name());
        const auto step = protocol::step_pair(pair_, protocol::joint::SlotEnd{d1, d2}, timing_);
        apply_actions(step);
    }

    void on_source_sense()
    {
        const double scale = 1.0 / (1.0 + c_.p.sis_beta * c_.p.snr_su_mean);
        const DtdDecision d = c_.sense(0, now_, scale);
        log_event(c_.opts.event_log, now_, "SU1", "SourceSense", mode_name());
        const auto step = protocol::step_pair(pair_, protocol::joint::SourceSense{d}, timing_);
        apply_actions(step);
        if (mode() == Mode::FDTS) {
            push(now_ + c_.Ts, 3, EvKind::SourceSense, 0, tx_epoch_[0]);
        }
    }

    void on_frame_end(const Ev& first)
    {
        std::array<bool, 2> ended{false, false};
        ended[first.node] = true;
        // Gather the peer's frame if it ends at the same instant.
        drop_stale();
        if (!queue_.empty() && queue_.top().t == now_ && queue_.top().kind == EvKind::FrameEnd) {
            ended[queue_.top().node] = true;
            queue_.pop();
        }
        const Mode m = mode();
        const double self = m == Mode::FDTR ? c_.p.sis_beta * c_.p.snr_su_mean : 0.0;
        protocol::joint::FramesEnded fe;
        fe.su1_frame = ended[0];
        fe.su2_frame = ended[1];
        for (int sender = 0; sender < 2; ++sender) {
            if (!ended[sender]) {
                continue;
            }
            const NodeTx& x = tx_[sender];
            Tick overlap = 0;
            const bool error = c_.frame_in_error(x.frame_start, now_, x.su_snr, x.pu_snr_rx, self, &overlap);
            if (c_.ledger.in_window(now_)) {
                c_.report.frames_errored += error ? 1 : 0;
                if (m == Mode::FDTR) {
                    ++c_.report.fdtr_frames_judged;
                    if (error && overlap == 0) {
                        ++c_.report.false_alarms_fdtr;
                    }
                }
            }
            (sender == 0 ? fe.decoded_at_su2 : fe.decoded_at_su1) = !error;
            end_frame_bookkeeping(sender);
            log_event(c_.opts.event_log, now_, protocol::to_string(node_of(sender)), "FrameBoundary", mode_name());
            if (error) {
                log_event(c_.opts.event_log, now_, protocol::to_string(node_of(1 - sender)), "UndecodeDetected",
                          mode_name());
            }
        }
        const auto step = protocol::step_pair(pair_, fe, timing_);
        apply_actions(step);
    }

    Common c_;
    protocol::Timing timing_;
    PairState pair_;
    std::priority_queue<Ev, std::vector<Ev>, Later> queue_;
    std::uint64_t seq_ = 0;
    Tick now_ = 0;
    bool pu_on_ = false;
    std::array<NodeTx, 2> tx_{};
    std::array<std::uint64_t, 2> tx_epoch_{0, 0};
    std::uint64_t sense_epoch_ = 0;
    bool slot_scheduled_ = false;
    Tick mode_entry_ = 0;
    Tick tx_since_ = 0;
    std::optional<OpenCollision> open_;
};

// ---------------------------------------------------------------------------
// Listen-before-talk baseline: sense one slot cooperatively, then send a
// whole half-duplex frame with no in-frame monitoring.

SimResult run_lbt(const SimConfig& cfg, const RunOptions& opts)
{
    Common c(cfg, opts);
    const auto segments = c.trace.segments();
    Tick t = 0;
    while (t + c.Ts <= c.horizon) {
        const Tick slot_end = t + c.Ts;
        const DtdDecision d1 = c.sense(0, slot_end);
        const DtdDecision d2 = c.sense(1, slot_end);
        c.count_cs_slot(slot_end, d1, d2);
        c.ledger.occupy(t, slot_end, &ModeOccupancy::cs);
        log_event(opts.event_log, slot_end, "SU1", "SlotEnd", "CS");
        t = slot_end;
        if (d1 != DtdDecision::Idle || d2 != DtdDecision::Idle || t >= c.horizon) {
            continue;
        }
        const Tick a = t;
        const Tick b = std::min(c.horizon, a + c.T);
        const double su_snr = c.draw_su_snr(0);
        const double pu_snr_rx = c.draw_pu_snr(1);
        log_event(opts.event_log, a, "SU1", "StartFrame", "LBT");
        for (std::size_t i = c.trace.segment_index(a); i < segments.size() && segments[i].start < b; ++i) {
            const Segment& s = segments[i];
            const Tick lo = std::max(a, s.start);
            const Tick hi = std::min(b, s.end);
            const bool on = s.state == PuState::On;
            c.ledger.credit(lo, hi, on ? c.rates.r1 : c.rates.r0);
            if (!on) {
                continue;
            }
            Termination why = Termination::FrameEnd;
            if (b == c.horizon && s.end >= c.horizon) {
                why = Termination::HorizonEnd;
            } else if (s.end <= b) {
                why = Termination::PuDeparture;
            }
            const auto kind = s.start <= a ? CollisionKind::PreCollision : CollisionKind::PostCollision;
            c.book.add({lo, hi, kind, why});
        }
        c.ledger.occupy(a, b, &ModeOccupancy::hd_tx);
        c.tx_interval(a, b);
        Tick overlap = 0;
        const bool error = c.frame_in_error(a, b, su_snr, pu_snr_rx, 0.0, &overlap);
        if (c.ledger.in_window(b - 1)) {
            ++c.report.frames_sent;
            c.report.frames_errored += error ? 1 : 0;
        }
        log_event(opts.event_log, b, "SU1", "FrameBoundary", "LBT");
        t = b;
    }
    c.ledger.occupy(t, c.horizon, &ModeOccupancy::cs);
    return c.finish();
}

}  // namespace

SimResult run_detailed(const SimConfig& cfg, const RunOptions& options)
{
    cfg.validate();
    if (cfg.scheme == Scheme::LBT) {
        return run_lbt(cfg, options);
    }
    return FdKernel(cfg, options).run();
}

SimReport run(const SimConfig& cfg)
{
    return run_detailed(cfg, RunOptions{}).report;
}

SimResult run_lbt_detailed(const SimConfig& cfg, const RunOptions& options)
{
    if (cfg.scheme != Scheme::LBT) {
        throw std::invalid_argument("run_lbt_baseline: scheme must be LBT");
    }
    cfg.validate();
    return run_lbt(cfg, options);
}

SimReport run_lbt_baseline(const SimConfig& cfg)
{
    return run_lbt_detailed(cfg, RunOptions{}).report;
}

void finalize_estimators(SimReport& r)
{
    using metrics::CiKind;
    const auto slots = static_cast<std::uint64_t>(std::max(1.0, std::floor(r.frame_slots)));
    r.collision_prob_hat = r.frame_slots > 0.0 ? static_cast<double>(r.collision_slots) / r.frame_slots : 0.0;
    r.collision_prob_ci = metrics::estimate_ci(slots, std::min(1.0, r.collision_prob_hat), CiKind::Binomial);
    r.collision_prob_any = r.frame_slots > 0.0 ? static_cast<double>(r.collision_slots_any) / r.frame_slots : 0.0;

    if (r.post_collisions > 0) {
        const double n = static_cast<double>(r.post_collisions);
        const double mean = r.post_duration_sum / n;
        const double var = r.post_collisions > 1 ? std::max(0.0, (r.post_duration_sumsq - n * mean * mean) / (n - 1.0)) : 0.0;
        r.mean_collision_duration = mean;
        r.mean_collision_duration_ci = metrics::estimate_ci(r.post_collisions, mean, CiKind::MeanOfDurations, std::sqrt(var));
    } else {
        r.mean_collision_duration = 0.0;
        r.mean_collision_duration_ci = std::numeric_limits<double>::infinity();
    }

    r.throughput_hat = r.observed_time > 0.0 ? r.credit_total / r.observed_time : 0.0;
    const auto b = r.batch_throughput.size();
    if (b > 1) {
        double mean = 0.0;
        for (double v : r.batch_throughput) mean += v;
        mean /= static_cast<double>(b);
        double ss = 0.0;
        for (double v : r.batch_throughput) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(b - 1));
        r.throughput_ci = metrics::estimate_ci(b, mean, CiKind::MeanOfDurations, sd);
    } else {
        r.throughput_ci = std::numeric_limits<double>::infinity();
    }
}

SimReport merge_reports(std::span<const SimReport> reports)
{
    if (reports.empty()) {
        throw std::invalid_argument("merge_reports: nothing to merge");
    }
    auto key = [](SimConfig c) {
        c.seed = 0;
        return c;
    };
    SimReport out = reports.front();
    for (std::size_t i = 1; i < reports.size(); ++i) {
        const SimReport& r = reports[i];
        if (!(key(r.config) == key(out.config))) {
            throw std::invalid_argument("merge_reports: configurations differ beyond the seed");
        }
        out.seeds.insert(out.seeds.end(), r.seeds.begin(), r.seeds.end());
        out.observed_time += r.observed_time;
        out.frame_slots += r.frame_slots;
        out.collisions += r.collisions;
        out.pre_collisions += r.pre_collisions;
        out.post_collisions += r.post_collisions;
        out.collision_slots += r.collision_slots;
        out.collision_slots_any += r.collision_slots_any;
        out.post_duration_sum += r.post_duration_sum;
        out.post_duration_sumsq += r.post_duration_sumsq;
        out.max_post_collision_duration = std::max(out.max_post_collision_duration, r.max_post_collision_duration);
        for (std::size_t k = 0; k < out.post_duration_histogram.counts.size(); ++k) {
            out.post_duration_histogram.counts[k] += r.post_duration_histogram.counts[k];
        }
        out.cumulative_collision_time += r.cumulative_collision_time;
        out.credit_total += r.credit_total;
        out.batch_throughput.insert(out.batch_throughput.end(), r.batch_throughput.begin(), r.batch_throughput.end());
        out.mode_occupancy.cs += r.mode_occupancy.cs;
        out.mode_occupancy.fdts += r.mode_occupancy.fdts;
        out.mode_occupancy.fdtr += r.mode_occupancy.fdtr;
        out.mode_occupancy.hd_tx += r.mode_occupancy.hd_tx;
        out.frames_sent += r.frames_sent;
        out.frames_errored += r.frames_errored;
        out.cs_idle_slots += r.cs_idle_slots;
        out.false_alarms_cs += r.false_alarms_cs;
        out.fdtr_frames_judged += r.fdtr_frames_judged;
        out.false_alarms_fdtr += r.false_alarms_fdtr;
    }
    // Order-independent pooled batches.
    std::sort(out.batch_throughput.begin(), out.batch_throughput.end());
    std::sort(out.seeds.begin(), out.seeds.end());
    out.config.seed = out.seeds.front();
    finalize_estimators(out);
    return out;
}

void write_collisions_csv(std::ostream& out, std::span<const CollisionRecord> records)
{
    out << "start,end,kind,terminated_by\n";
    char buf[128];
    for (const CollisionRecord& r : records) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,", to_seconds(r.start), to_seconds(r.end));
        out << buf << to_string(r.kind) << ',' << to_string(r.terminated_by) << '\n';
    }
}

}  // namespace fdcr::sim
