#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "fdcr/params.hpp"

namespace fdcr {

/// One independent random substream per noise source.
enum class StreamId : std::uint32_t {
    PuProcess,
    FadingS1S2,
    FadingS2S1,
    FadingPuS1,
    FadingPuS2,
    DetectorS1,
    DetectorS2,
    FrameErrors,
};

std::string_view to_string(StreamId id);

/// Seeded random source. Identical (seed, stream) pairs yield identical draws.
class RngStream {
public:
    RngStream(std::uint64_t seed, StreamId stream);

    std::uint64_t seed() const noexcept { return seed_; }
    StreamId stream() const noexcept { return stream_; }

    double uniform();
    double exponential(double mean);
    double normal(double mean, double stddev);
    bool bernoulli(double p);

private:
    std::uint64_t seed_;
    StreamId stream_;
    std::mt19937_64 engine_;
};

enum class PuState : std::uint8_t { Off, On };

struct Segment {
    PuState state;
    Tick start;
    Tick end;  ///< exclusive
};

/// PU activity timeline on [0, horizon) as alternating half-open segments.
class OnOffTrace {
public:
    /// Throws std::invalid_argument unless the segments tile [0, horizon)
    /// with strictly alternating states.
    OnOffTrace(std::vector<Segment> segments, Tick horizon);

    /// State of the segment containing t. Throws std::out_of_range outside [0, horizon).
    PuState state_at(Tick t) const;

    /// Index of the segment containing t.
    std::size_t segment_index(Tick t) const;

    /// Measure of ON time inside [a, b).
    Tick on_time_in(Tick a, Tick b) const;

    std::span<const Segment> segments() const noexcept { return segments_; }
    Tick horizon() const noexcept { return horizon_; }

    /// state,start,end rows in seconds.
    void write_csv(std::ostream& out) const;

private:
    std::vector<Segment> segments_;
    Tick horizon_;
};

enum class InitialPuState { Stationary, ForceOn, ForceOff };

OnOffTrace gen_onoff_trace(const SystemParams& p, RngStream& rng, Tick horizon, InitialPuState initial);

/// One draw of the normalized detector energy E_d / sigma_u^2.
/// Requires f_s * T_s >= 100; throws std::domain_error otherwise.
double sample_detector_energy(const SystemParams& p, bool pu_on, double gamma, RngStream& rng);

/// Rayleigh block-fading SNR: Exponential with the given mean (0 when mean is 0).
double sample_link_snr(double mean, RngStream& rng);

/// 1 - (1 - PER(sinr))^{N_f}.
double frame_error_prob(const SystemParams& p, double sinr);

bool draw_frame_error(const SystemParams& p, double sinr, RngStream& rng);

}  // namespace fdcr
