#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fdcr/analytic.hpp"
#include "fdcr/report_io.hpp"
#include "fdcr/simkernel.hpp"
#include "test_support.hpp"

using namespace fdcr;
using namespace fdcr::sim;
using fdcr::testing::reference_config;

namespace {

RunOptions keep_all()
{
    RunOptions o;
    o.keep_trace = true;
    return o;
}

/// Measure of {PU on} ∩ tx ∩ [lo, hi).
Tick on_overlap(const SimResult& r, Tick lo, Tick hi)
{
    Tick total = 0;
    for (const Interval& iv : r.tx_intervals) {
        const Tick a = std::max(iv.start, lo);
        const Tick b = std::min(iv.end, hi);
        if (b > a) {
            total += r.pu_trace->on_time_in(a, b);
        }
    }
    return total;
}

Tick tx_measure(const SimResult& r, Tick lo, Tick hi)
{
    Tick total = 0;
    for (const Interval& iv : r.tx_intervals) {
        total += std::max<Tick>(0, std::min(iv.end, hi) - std::max(iv.start, lo));
    }
    return total;
}

void check_records_against_trace(const SimResult& r)
{
    Tick sum = 0;
    for (const CollisionRecord& rec : r.collision_records) {
        REQUIRE(rec.end > rec.start);
        sum += rec.end - rec.start;
        // Every instant of a record is PU-on and covered by a transmission.
        CHECK(r.pu_trace->on_time_in(rec.start, rec.end) == rec.end - rec.start);
        CHECK(tx_measure(r, rec.start, rec.end) == rec.end - rec.start);
    }
    CHECK(sum == on_overlap(r, 0, r.pu_trace->horizon()));

    const Tick warm = to_ticks(r.report.config.effective_warmup());
    double counted = 0.0;
    for (const CollisionRecord& rec : r.collision_records) {
        if (rec.start >= warm) {
            counted += rec.duration();
        }
    }
    CHECK(r.report.cumulative_collision_time == doctest::Approx(counted).epsilon(1e-9));
}

void check_common_invariants(const SimReport& r)
{
    const double window = r.config.horizon - r.config.effective_warmup();
    CHECK(r.observed_time == doctest::Approx(window).epsilon(1e-12));
    CHECK(r.mode_occupancy.total() == doctest::Approx(window).epsilon(1e-9));
    CHECK(r.collisions == r.pre_collisions + r.post_collisions);
    CHECK(r.collision_slots <= r.collision_slots_any);
    CHECK(r.collision_prob_hat <= r.collision_prob_any);
    CHECK(r.throughput_hat * r.observed_time == doctest::Approx(r.credit_total).epsilon(1e-12));
    CHECK(std::isfinite(r.collision_prob_ci));
    CHECK(std::isfinite(r.throughput_ci));
    std::uint64_t hist = 0;
    for (auto c : r.post_duration_histogram.counts) {
        hist += c;
    }
    CHECK(hist == r.post_collisions);
    CHECK(r.frames_errored <= r.frames_sent);
}

}  // namespace

TEST_CASE("config validation")
{
    SimConfig c = reference_config(Scheme::AsyncFD, 60.0);
    CHECK_NOTHROW(c.validate());
    c.warmup = 60.0;
    CHECK_THROWS_AS(c.validate(), ParamError);
    c = reference_config(Scheme::AsyncFD, 0.01);
    CHECK_THROWS_AS(c.validate(), ParamError);
    c = reference_config(Scheme::AsyncFD, 60.0);
    c.params.sample_fs = 1e4;
    try {
        c.validate();
        FAIL("expected ParamError");
    } catch (const ParamError& e) {
        CHECK(e.field() == "sample_fs");
    }
    c = reference_config(Scheme::AsyncFD, 60.0);
    c.warmup = -1.0;
    CHECK(c.effective_warmup() == doctest::Approx(3.0));
    CHECK(parse_scheme("async") == Scheme::AsyncFD);
    CHECK(parse_scheme("lbt") == Scheme::LBT);
    CHECK_THROWS_AS(parse_scheme("bogus"), std::invalid_argument);
}

TEST_CASE("trace-replay oracle for every scheme")
{
    for (Scheme s : {Scheme::AsyncFD, Scheme::SyncFD, Scheme::LBT}) {
        CAPTURE(to_string(s));
        for (bool fading : {false, true}) {
            SimConfig c = reference_config(s, 120.0, 5);
            c.pu_link_fading = fading;
            const SimResult r = run_detailed(c, keep_all());
            REQUIRE(r.pu_trace.has_value());
            check_records_against_trace(r);
            check_common_invariants(r.report);
        }
    }
}

TEST_CASE("credit ledger against the trace")
{
    SimConfig c = reference_config(Scheme::LBT, 120.0, 9);
    const SimResult r = run_detailed(c, keep_all());
    const auto rt = analytic::rates(c.params);
    const Tick lo = to_ticks(c.effective_warmup());
    const Tick hi = to_ticks(c.horizon);
    const double on = to_seconds(on_overlap(r, lo, hi));
    const double tx = to_seconds(tx_measure(r, lo, hi));
    // One half-duplex link, credited at the collision-free or collided rate.
    CHECK(r.report.credit_total == doctest::Approx(rt.r0 * (tx - on) + rt.r1 * on).epsilon(1e-9));
    CHECK(r.report.mode_occupancy.hd_tx == doctest::Approx(tx).epsilon(1e-9));

    for (Scheme s : {Scheme::AsyncFD, Scheme::SyncFD}) {
        c = reference_config(s, 120.0, 9);
        const SimResult f = run_detailed(c, keep_all());
        const double fon = to_seconds(on_overlap(f, lo, hi));
        const double ftx = to_seconds(tx_measure(f, lo, hi));
        // At least one and at most two links are active whenever anyone transmits.
        CHECK(f.report.credit_total >= rt.r0 * (ftx - fon) + rt.r1 * fon - 1e-6);
        CHECK(f.report.credit_total <= 2 * (rt.r0 * (ftx - fon) + rt.r1 * fon) + 1e-6);
        CHECK(f.report.mode_occupancy.fdts + f.report.mode_occupancy.fdtr == doctest::Approx(ftx).epsilon(1e-9));
    }
}

TEST_CASE("post-collision duration bounds with fixed PU SNR")
{
    const double T = 0.020;
    for (Scheme s : {Scheme::AsyncFD, Scheme::SyncFD}) {
        const SimResult r = run_detailed(reference_config(s, 300.0, 2), keep_all());
        const double bound = s == Scheme::AsyncFD ? T / 2 : T;
        CHECK(r.report.post_collisions > 100);
        CHECK(r.report.max_post_collision_duration <= bound + 1e-9);
        for (const auto& rec : r.collision_records) {
            if (rec.kind == CollisionKind::PostCollision && rec.terminated_by == Termination::Nack) {
                CHECK(rec.duration() <= bound + 1e-9);
            }
        }
    }
}

TEST_CASE("faded PU links let collisions outlast the stagger")
{
    SimConfig c = reference_config(Scheme::AsyncFD, 300.0, 2);
    c.pu_link_fading = true;
    const SimReport r = run(c);
    CHECK(r.max_post_collision_duration > c.params.frame_T / 2);
}

TEST_CASE("async post-collision histogram follows the duration pdf")
{
    SimConfig c = reference_config(Scheme::AsyncFD, 5000.0, 3);
    const SimResult r = run_detailed(c, keep_all());
    const double half = c.params.frame_T / 2;
    const int bins = 10;
    std::vector<double> observed(bins, 0.0);
    double n = 0;
    for (const auto& rec : r.collision_records) {
        if (rec.kind != CollisionKind::PostCollision || rec.start < to_ticks(c.effective_warmup())) {
            continue;
        }
        const double d = rec.duration();
        REQUIRE(d <= half + 1e-9);
        observed[std::min(bins - 1, static_cast<int>(d / half * bins))] += 1;
        n += 1;
    }
    REQUIRE(n >= 10000);
    // Bin probabilities from the closed-form cdf of the pdf on (0, T/2].
    const double lam = c.params.lambda_rate;
    auto cdf = [&](double tau) { return (std::exp(-lam * (half - tau)) - std::exp(-lam * half)) / -std::expm1(-lam * half); };
    double chi2 = 0.0;
    for (int k = 0; k < bins; ++k) {
        const double pk = cdf(half * (k + 1) / bins) - cdf(half * k / bins);
        chi2 += std::pow(observed[k] - n * pk, 2) / (n * pk);
    }
    const boost::math::chi_squared dist(bins - 1);
    CHECK(chi2 < boost::math::quantile(dist, 0.99));
}

TEST_CASE("no PU return and certain detection: no collisions")
{
    SimConfig c = reference_config(Scheme::AsyncFD, 100.0);
    c.params.lambda_rate = 1e-6;
    c.params.mu_rate = 100.0;
    c.params.snr_pu_mean = 100.0;
    c.initial = InitialPuState::ForceOn;
    c.warmup = 0.5;
    for (Scheme s : {Scheme::AsyncFD, Scheme::SyncFD, Scheme::LBT}) {
        c.scheme = s;
        const SimReport r = run(c);
        CHECK(r.collisions == 0);
        CHECK(r.cumulative_collision_time == 0.0);
        CHECK(r.frames_sent > 0);
    }
}

TEST_CASE("LBT against async FD")
{
    // PU leaves once and stays away: FD runs FDTR with two links, LBT one link per period.
    SimConfig c = reference_config(Scheme::AsyncFD, 100.0);
    c.params.lambda_rate = 1e-4;
    c.params.mu_rate = 100.0;
    c.params.snr_pu_mean = 100.0;
    c.params.eps1 = 5.0;
    c.initial = InitialPuState::ForceOn;
    c.warmup = 1.0;
    const SimReport fd = run(c);
    c.scheme = Scheme::LBT;
    const SimReport lbt = run_lbt_baseline(c);
    const double T = c.params.frame_T;
    const double Ts = c.params.sense_Ts;
    CHECK(lbt.throughput_hat / fd.throughput_hat == doctest::Approx(0.5 * T / (T + Ts)).epsilon(0.01));

    const SimReport a = run(reference_config(Scheme::AsyncFD, 600.0, 4));
    const SimReport l = run(reference_config(Scheme::LBT, 600.0, 4));
    CHECK(l.mean_collision_duration > a.mean_collision_duration);
    CHECK_THROWS_AS(run_lbt_baseline(reference_config(Scheme::AsyncFD, 10.0)), std::invalid_argument);
}

TEST_CASE("determinism")
{
    for (Scheme s : {Scheme::AsyncFD, Scheme::SyncFD, Scheme::LBT}) {
        const SimConfig c = reference_config(s, 60.0, 77);
        std::ostringstream log_a;
        std::ostringstream log_b;
        RunOptions oa;
        oa.event_log = &log_a;
        RunOptions ob;
        ob.event_log = &log_b;
        const auto a = run_detailed(c, oa);
        const auto b = run_detailed(c, ob);
        CHECK(io::dump_rounded(io::to_json(a.report)) == io::dump_rounded(io::to_json(b.report)));
        CHECK(log_a.str() == log_b.str());
        CHECK_FALSE(log_a.str().empty());
    }
}

TEST_CASE("merge_reports")
{
    const SimReport a = run(reference_config(Scheme::AsyncFD, 60.0, 1));
    const SimReport b = run(reference_config(Scheme::AsyncFD, 60.0, 2));
    const SimReport c3 = run(reference_config(Scheme::AsyncFD, 60.0, 3));

    const SimReport single = merge_reports(std::vector<SimReport>{a});
    CHECK(io::dump_rounded(io::to_json(single)) == io::dump_rounded(io::to_json(a)));

    const SimReport ab = merge_reports(std::vector<SimReport>{a, b});
    const SimReport ba = merge_reports(std::vector<SimReport>{b, a});
    CHECK(io::dump_rounded(io::to_json(ab)) == io::dump_rounded(io::to_json(ba)));

    const SimReport left = merge_reports(std::vector<SimReport>{ab, c3});
    const SimReport flat = merge_reports(std::vector<SimReport>{a, b, c3});
    CHECK(left.collision_prob_hat == doctest::Approx(flat.collision_prob_hat).epsilon(1e-12));
    CHECK(left.throughput_hat == doctest::Approx(flat.throughput_hat).epsilon(1e-12));
    CHECK(left.mean_collision_duration == doctest::Approx(flat.mean_collision_duration).epsilon(1e-12));

    // Recomputation from raw sums.
    CHECK(ab.observed_time == doctest::Approx(a.observed_time + b.observed_time));
    CHECK(ab.throughput_hat ==
          doctest::Approx((a.throughput_hat * a.observed_time + b.throughput_hat * b.observed_time) /
                          (a.observed_time + b.observed_time)));
    CHECK(ab.mean_collision_duration ==
          doctest::Approx((a.post_duration_sum + b.post_duration_sum) / double(a.post_collisions + b.post_collisions)));
    CHECK(ab.collision_prob_hat ==
          doctest::Approx(double(a.collision_slots + b.collision_slots) / (a.frame_slots + b.frame_slots)));
    CHECK(ab.collision_prob_ci < a.collision_prob_ci);
    CHECK(ab.seeds == std::vector<std::uint64_t>{1, 2});

    const SimReport other = run(reference_config(Scheme::SyncFD, 60.0, 2));
    CHECK_THROWS_AS(merge_reports(std::vector<SimReport>{a, other}), std::invalid_argument);
    CHECK_THROWS_AS(merge_reports(std::vector<SimReport>{}), std::invalid_argument);
}

TEST_CASE("collisions csv")
{
    const SimResult r = run_detailed(reference_config(Scheme::AsyncFD, 30.0, 1), keep_all());
    std::ostringstream out;
    write_collisions_csv(out, r.collision_records);
    const std::string s = out.str();
    CHECK(s.rfind("start,end,kind,terminated_by\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')) == r.collision_records.size() + 1);
}
