#pragma once

#include "fdcr/params.hpp"

/// Closed-form sensing, collision and throughput model. Every function is
/// pure; none of them keeps state.
namespace fdcr::analytic {

/// Standard Gaussian upper tail, Q(x) = erfc(x / sqrt 2) / 2.
/// Throws std::domain_error for non-finite x.
double q_tail(double x);

/// Single-node false alarm probability of the energy detector at threshold `eps`.
double prob_false_alarm(const SystemParams& p, double eps);

/// Single-node detection probability at threshold `eps` for a PU with linear SNR `gamma`.
double prob_detection(const SystemParams& p, double eps, double gamma);

/// OR-fusion of two independent detectors with equal probability `p_single`.
double fuse_or(double p_single);

/// Piecewise-exponential packet error rate fit, clamped to [0, 1].
double per_instantaneous(const SystemParams& p, double gamma);

/// Average packet error rate over a Rayleigh SU link whose SINR is degraded
/// by residual self-interference `sis_beta * snr_su_mean`.
double per_average_sis(const SystemParams& p);

/// Frame error rate for `n_f` independent packets with average error `per_avg`.
double fer(double per_avg, int n_f);

struct Priors {
    double p_h0;  ///< PU idle at frame start
    double p_h1;  ///< PU busy at frame start
};
Priors priors(const SystemParams& p);

/// Probability that the PU reappears within one SU frame.
double p_reappear(const SystemParams& p);

enum class CollisionScheme { Async, LBT };

double collision_prob(const SystemParams& p, CollisionScheme scheme);

/// Density of the collision duration under a T/2 stagger. Zero beyond T/2.
/// Throws std::domain_error for tau <= 0.
double collision_duration_pdf(const SystemParams& p, double tau);

struct MeanDurations {
    double tau_bar;    ///< mean collision duration in a colliding frame
    double theta_bar;  ///< mean collision-free duration in a colliding frame
};
MeanDurations mean_durations(const SystemParams& p);

struct Rates {
    double r0;  ///< sum spectral efficiency, collision-free
    double r1;  ///< sum spectral efficiency while the PU interferes
};
Rates rates(const SystemParams& p);

enum class ThroughputVariant { FrameEq10, AvgEq12, AsyncEq13, SyncEq14 };

/// 2 P(H0) (1 + (2 Ts / lambda)(Pf2 - Pf1) - (2 Ts / T) Pf2), taken literally.
double throughput_prefactor(const SystemParams& p);

double throughput(const SystemParams& p, ThroughputVariant variant);

/// Everything above evaluated at one parameter point.
struct AnalyticReport {
    SystemParams params;
    double pf = 0, pd = 0;
    double pf1 = 0, pd1 = 0;
    double per_avg = 0;
    double fer = 0;
    double p_tau = 0;
    double p_h0 = 0, p_h1 = 0;
    double pcol_async = 0, pcol_lbt = 0;
    double tau_bar = 0, theta_bar = 0;
    double r0 = 0, r1 = 0;
    double r_frame = 0;
    double r_avg = 0;
    double r_async = 0, r_sync = 0;
};

AnalyticReport evaluate(const SystemParams& p);

namespace detail {
/// x + e^{-x} - 1, accurate for small x.
double exp_remainder2(double x);
/// (2x + 1)(1 - e^{-x}) - x, accurate for small x.
double theta_numerator(double x);
}  // namespace detail

}  // namespace fdcr::analytic
