#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fdcr {

/// Simulation time in integer nanoseconds.
using Tick = std::int64_t;

inline constexpr Tick kTicksPerSecond = 1'000'000'000;

Tick to_ticks(double seconds);
inline double to_seconds(Tick t) { return static_cast<double>(t) / static_cast<double>(kTicksPerSecond); }

/// Raised when a parameter record violates one of its invariants. `field()`
/// names the offending field (or fields, comma separated).
class ParamError : public std::invalid_argument {
public:
    ParamError(std::string field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Every physical and protocol constant of the system in one record.
///
/// Rates are in 1/s, durations in seconds, SNRs linear. Energies and
/// thresholds share the normalization of `noise_var`.
struct SystemParams {
    double lambda_rate = 0.0;  ///< PU OFF durations ~ Exp(mean 1/lambda_rate)
    double mu_rate = 0.0;      ///< PU ON durations ~ Exp(mean 1/mu_rate)
    double frame_T = 0.0;
    double sense_Ts = 0.0;
    double sample_fs = 0.0;
    double noise_var = 1.0;
    double eps0 = 0.0;  ///< presence threshold
    double eps1 = 0.0;  ///< mode-selection threshold
    double sis_beta = 0.0;
    double snr_su_mean = 0.0;
    double snr_pu_mean = 0.0;
    double per_alpha = 0.0;
    double per_g = 0.0;
    double per_gamma_t = 0.0;
    int packets_per_frame = 1;

    /// Throws ParamError naming the first violated invariant.
    void validate() const;

    /// f_s * T_s, the detector's sample count per sensing slot.
    double samples_per_slot() const { return sample_fs * sense_Ts; }

    bool operator==(const SystemParams&) const = default;
};

}  // namespace fdcr
