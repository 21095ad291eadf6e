#include "fdcr/params.hpp"

#include <cmath>

namespace fdcr {

Tick to_ticks(double seconds)
{
    return static_cast<Tick>(std::llround(seconds * static_cast<double>(kTicksPerSecond)));
}

namespace {

void require(bool ok, const char* field, const char* message)
{
    if (!ok) {
        throw ParamError(field, message);
    }
}

bool finite_all(std::initializer_list<double> xs)
{
    for (double x : xs) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

}  // namespace

void SystemParams::validate() const
{
    require(finite_all({lambda_rate}), "lambda_rate", "must be finite");
    require(finite_all({mu_rate}), "mu_rate", "must be finite");
    require(lambda_rate > 0.0, "lambda_rate", "must be > 0");
    require(mu_rate > 0.0, "mu_rate", "must be > 0");
    require(std::isfinite(sense_Ts) && sense_Ts > 0.0, "sense_Ts", "must be > 0");
    require(std::isfinite(frame_T) && frame_T > sense_Ts, "frame_T", "must be greater than sense_Ts");
    require(std::isfinite(sample_fs) && sample_fs > 0.0, "sample_fs", "must be > 0");
    require(std::isfinite(noise_var) && noise_var > 0.0, "noise_var", "must be > 0");
    require(std::isfinite(eps0) && eps0 > 0.0, "eps0", "must be > 0");
    require(std::isfinite(eps1), "eps1", "must be finite");
    require(eps0 < eps1, "eps0,eps1", "eps0 must be strictly less than eps1");
    require(std::isfinite(sis_beta) && sis_beta >= 0.0 && sis_beta <= 1.0, "sis_beta", "must lie in [0, 1]");
    require(std::isfinite(snr_su_mean) && snr_su_mean >= 0.0, "snr_su_mean", "must be >= 0");
    require(std::isfinite(snr_pu_mean) && snr_pu_mean >= 0.0, "snr_pu_mean", "must be >= 0");
    require(std::isfinite(per_alpha) && per_alpha > 0.0, "per_alpha", "must be > 0");
    require(std::isfinite(per_g) && per_g > 0.0, "per_g", "must be > 0");
    require(std::isfinite(per_gamma_t) && per_gamma_t >= 0.0, "per_gamma_t", "must be >= 0");
    require(packets_per_frame >= 1, "packets_per_frame", "must be >= 1");
}

}  // namespace fdcr
