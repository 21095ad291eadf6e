#include "fdcr/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "fdcr/analytic.hpp"

namespace fdcr {

std::string_view to_string(StreamId id)
{
    switch (id) {
    case StreamId::PuProcess: return "pu_process";
    case StreamId::FadingS1S2: return "fading_s1s2";
    case StreamId::FadingS2S1: return "fading_s2s1";
    case StreamId::FadingPuS1: return "fading_pu_s1";
    case StreamId::FadingPuS2: return "fading_pu_s2";
    case StreamId::DetectorS1: return "detector_s1";
    case StreamId::DetectorS2: return "detector_s2";
    case StreamId::FrameErrors: return "frame_errors";
    }
    return "unknown";
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, StreamId stream)
{
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(a ^ (0x632be59bd9b4e019ULL * (static_cast<std::uint64_t>(stream) + 1)));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, StreamId stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream))
{
}

double RngStream::uniform()
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

double RngStream::exponential(double mean)
{
    return std::exponential_distribution<double>(1.0 / mean)(engine_);
}

double RngStream::normal(double mean, double stddev)
{
    return std::normal_distribution<double>(mean, stddev)(engine_);
}

bool RngStream::bernoulli(double p)
{
    if (p <= 0.0) {
        return false;
    }
    if (p >= 1.0) {
        return true;
    }
    return uniform() < p;
}

OnOffTrace::OnOffTrace(std::vector<Segment> segments, Tick horizon)
    : segments_(std::move(segments)), horizon_(horizon)
{
    if (horizon_ <= 0 || segments_.empty()) {
        throw std::invalid_argument("OnOffTrace: empty trace");
    }
    Tick cursor = 0;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const Segment& s = segments_[i];
        if (s.start != cursor || s.end <= s.start) {
            throw std::invalid_argument("OnOffTrace: segments must tile [0, horizon) without gaps");
        }
        if (i > 0 && s.state == segments_[i - 1].state) {
            throw std::invalid_argument("OnOffTrace: states must alternate");
        }
        cursor = s.end;
    }
    if (cursor != horizon_) {
        throw std::invalid_argument("OnOffTrace: segments must end at the horizon");
    }
}

std::size_t OnOffTrace::segment_index(Tick t) const
{
    if (t < 0 || t >= horizon_) {
        throw std::out_of_range("OnOffTrace: time outside [0, horizon)");
    }
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                               [](Tick v, const Segment& s) { return v < s.start; });
    return static_cast<std::size_t>(std::distance(segments_.begin(), it)) - 1;
}

PuState OnOffTrace::state_at(Tick t) const
{
    return segments_[segment_index(t)].state;
}

Tick OnOffTrace::on_time_in(Tick a, Tick b) const
{
    a = std::max<Tick>(a, 0);
    b = std::min(b, horizon_);
    if (b <= a) {
        return 0;
    }
    Tick total = 0;
    for (std::size_t i = segment_index(a); i < segments_.size() && segments_[i].start < b; ++i) {
        const Segment& s = segments_[i];
        if (s.state == PuState::On) {
            total += std::min(b, s.end) - std::max(a, s.start);
        }
    }
    return total;
}

void OnOffTrace::write_csv(std::ostream& out) const
{
    out << "state,start,end\n";
    char buf[96];
    for (const Segment& s : segments_) {
        std::snprintf(buf, sizeof buf, "%s,%.12g,%.12g\n", s.state == PuState::On ? "ON" : "OFF",
                      to_seconds(s.start), to_seconds(s.end));
        out << buf;
    }
}

OnOffTrace gen_onoff_trace(const SystemParams& p, RngStream& rng, Tick horizon, InitialPuState initial)
{
    if (horizon <= 0) {
        throw std::invalid_argument("gen_onoff_trace: horizon must be > 0");
    }
    PuState state = PuState::Off;
    switch (initial) {
    case InitialPuState::ForceOn: state = PuState::On; break;
    case InitialPuState::ForceOff: state = PuState::Off; break;
    case InitialPuState::Stationary:
        state = rng.bernoulli(p.lambda_rate / (p.lambda_rate + p.mu_rate)) ? PuState::On : PuState::Off;
        break;
    }
    const double mean_on = 1.0 / p.mu_rate;
    const double mean_off = 1.0 / p.lambda_rate;
    std::vector<Segment> segments;
    Tick cursor = 0;
    while (cursor < horizon) {
        const double draw = rng.exponential(state == PuState::On ? mean_on : mean_off);
        // Saturate before converting so astronomically long holds cannot overflow.
        const double ticks = std::min(draw * static_cast<double>(kTicksPerSecond), static_cast<double>(horizon));
        const Tick len = std::max<Tick>(1, static_cast<Tick>(std::llround(ticks)));
        const Tick end = std::min(horizon, cursor + len);
        segments.push_back({state, cursor, end});
        cursor = end;
        state = state == PuState::On ? PuState::Off : PuState::On;
    }
    return OnOffTrace(std::move(segments), horizon);
}

double sample_detector_energy(const SystemParams& p, bool pu_on, double gamma, RngStream& rng)
{
    const double n = p.samples_per_slot();
    if (n < 100.0) {
        throw std::domain_error("sample_detector_energy: f_s * T_s must be >= 100 for the Gaussian model");
    }
    const double g = pu_on ? gamma : 0.0;
    const double draw = rng.normal(1.0 + g, std::sqrt((2.0 * g + 1.0) / n));
    return std::max(0.0, draw);
}

double sample_link_snr(double mean, RngStream& rng)
{
    if (mean < 0.0) {
        throw std::domain_error("sample_link_snr: mean must be >= 0");
    }
    return mean == 0.0 ? 0.0 : rng.exponential(mean);
}

double frame_error_prob(const SystemParams& p, double sinr)
{
    return analytic::fer(analytic::per_instantaneous(p, sinr), p.packets_per_frame);
}

bool draw_frame_error(const SystemParams& p, double sinr, RngStream& rng)
{
    return rng.bernoulli(frame_error_prob(p, sinr));
}

}  // namespace fdcr
