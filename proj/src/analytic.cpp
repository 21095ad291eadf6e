#include "fdcr/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fdcr::analytic {

namespace detail {

namespace {
// Below this, the closed forms lose digits to cancellation; the alternating
// series converges to full precision in well under 30 terms.
constexpr double kSeriesCutoff = 0.5;
constexpr int kSeriesTerms = 30;
}  // namespace

double exp_remainder2(double x)
{
    if (std::abs(x) < kSeriesCutoff) {
        double term = -x;  // (-x)^k / k!, starting at k = 1
        double sum = 0.0;
        for (int k = 2; k < kSeriesTerms; ++k) {
            term *= -x / k;
            sum += term;
        }
        return sum;
    }
    return x + std::expm1(-x);
}

double theta_numerator(double x)
{
    if (std::abs(x) < kSeriesCutoff) {
        double term = -x;
        double sum = 0.0;
        for (int k = 2; k < kSeriesTerms; ++k) {
            term *= -x / k;
            sum += (2.0 * k - 1.0) * term;
        }
        return sum;
    }
    return (2.0 * x + 1.0) * (-std::expm1(-x)) - x;
}

}  // namespace detail

double q_tail(double x)
{
    if (!std::isfinite(x)) {
        throw std::domain_error("q_tail: argument must be finite");
    }
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double prob_false_alarm(const SystemParams& p, double eps)
{
    if (!(eps > 0.0)) {
        throw std::domain_error("prob_false_alarm: eps must be > 0");
    }
    return q_tail((eps / p.noise_var - 1.0) * std::sqrt(p.samples_per_slot()));
}

double prob_detection(const SystemParams& p, double eps, double gamma)
{
    if (!(eps > 0.0) || !(gamma >= 0.0)) {
        throw std::domain_error("prob_detection: need eps > 0 and gamma >= 0");
    }
    return q_tail((eps / p.noise_var - gamma - 1.0) * std::sqrt(p.samples_per_slot() / (2.0 * gamma + 1.0)));
}

double fuse_or(double p_single)
{
    if (!(p_single >= 0.0 && p_single <= 1.0)) {
        throw std::domain_error("fuse_or: probability outside [0, 1]");
    }
    return 2.0 * p_single - p_single * p_single;
}

double per_instantaneous(const SystemParams& p, double gamma)
{
    if (gamma < p.per_gamma_t) {
        return 1.0;
    }
    return std::clamp(p.per_alpha * std::exp(-p.per_g * gamma), 0.0, 1.0);
}

double per_average_sis(const SystemParams& p)
{
    const double mean = p.snr_su_mean;
    if (mean <= 0.0) {
        return 1.0;
    }
    const double degrade = 1.0 + p.sis_beta * mean;
    const double gm = p.per_g * mean;
    const double value = 1.0 - gm / (degrade + gm) * std::exp(-degrade * p.per_gamma_t / mean);
    return std::clamp(value, 0.0, 1.0);
}

double fer(double per_avg, int n_f)
{
    if (!(per_avg >= 0.0 && per_avg <= 1.0) || n_f < 1) {
        throw std::domain_error("fer: need per_avg in [0, 1] and n_f >= 1");
    }
    // 1 - (1 - p)^n without losing small p.
    return -std::expm1(n_f * std::log1p(-per_avg));
}

Priors priors(const SystemParams& p)
{
    const double total = p.lambda_rate + p.mu_rate;
    return {p.mu_rate / total, p.lambda_rate / total};
}

double p_reappear(const SystemParams& p)
{
    return -std::expm1(-p.lambda_rate * p.frame_T);
}

double collision_prob(const SystemParams& p, CollisionScheme scheme)
{
    const auto [p_h0, p_h1] = priors(p);
    const double p_tau = p_reappear(p);
    const double pd1 = fuse_or(prob_detection(p, p.eps0, p.snr_pu_mean));
    const double miss_term = p_h1 * (1.0 - pd1);
    if (scheme == CollisionScheme::Async) {
        const double pf2 = fer(per_average_sis(p), p.packets_per_frame);
        return p_h0 * (1.0 - pf2 * p.sense_Ts / p.frame_T) * p_tau + miss_term;
    }
    const double pf1 = fuse_or(prob_false_alarm(p, p.eps0));
    return p_h0 * (1.0 - pf1) * p_tau + miss_term;
}

double collision_duration_pdf(const SystemParams& p, double tau)
{
    if (!(tau > 0.0)) {
        throw std::domain_error("collision_duration_pdf: tau must be > 0");
    }
    const double half = 0.5 * p.frame_T;
    if (tau > half) {
        return 0.0;
    }
    const double lambda = p.lambda_rate;
    return lambda * std::exp(-lambda * (half - tau)) / (-std::expm1(-lambda * half));
}

MeanDurations mean_durations(const SystemParams& p)
{
    const double lambda = p.lambda_rate;
    const double x = lambda * p.frame_T;
    const double denom = 2.0 * lambda * (-std::expm1(-x));
    return {detail::exp_remainder2(x) / denom, detail::theta_numerator(x) / denom};
}

Rates rates(const SystemParams& p)
{
    const double s = p.snr_su_mean;
    const double beta = p.sis_beta;
    return {2.0 * std::log2(1.0 + s / (1.0 + beta)), 2.0 * std::log2(1.0 + s / (1.0 + p.snr_pu_mean + beta))};
}

double throughput_prefactor(const SystemParams& p)
{
    const double pf1 = fuse_or(prob_false_alarm(p, p.eps0));
    const double pf2 = fer(per_average_sis(p), p.packets_per_frame);
    const double ts = p.sense_Ts;
    // (2 Ts / lambda) carries units of s^2; evaluated as written.
    return 2.0 * priors(p).p_h0 * (1.0 + (2.0 * ts / p.lambda_rate) * (pf2 - pf1) - (2.0 * ts / p.frame_T) * pf2);
}

double throughput(const SystemParams& p, ThroughputVariant variant)
{
    const auto [r0, r1] = rates(p);
    const double p_tau = p_reappear(p);
    const double x = p.lambda_rate * p.frame_T;
    switch (variant) {
    case ThroughputVariant::FrameEq10: {
        const auto [tau_bar, theta_bar] = mean_durations(p);
        return p_tau * (r0 * theta_bar / p.frame_T + r1 * tau_bar / p.frame_T) + r0 * (1.0 - p_tau);
    }
    case ThroughputVariant::AvgEq12: {
        const auto [tau_bar, theta_bar] = mean_durations(p);
        return throughput_prefactor(p) * (p_tau * (r0 * theta_bar + r1 * tau_bar) + r0 * (1.0 - p_tau));
    }
    case ThroughputVariant::AsyncEq13:
        return throughput_prefactor(p) * ((r0 - r1) * (-detail::exp_remainder2(x)) / (2.0 * x) + r0);
    case ThroughputVariant::SyncEq14:
        return throughput_prefactor(p) * ((r0 - r1) * (-detail::exp_remainder2(x)) / x + r0);
    }
    throw std::invalid_argument("throughput: unknown variant");
}

AnalyticReport evaluate(const SystemParams& p)
{
    AnalyticReport r;
    r.params = p;
    r.pf = prob_false_alarm(p, p.eps0);
    r.pd = prob_detection(p, p.eps0, p.snr_pu_mean);
    r.pf1 = fuse_or(r.pf);
    r.pd1 = fuse_or(r.pd);
    r.per_avg = per_average_sis(p);
    r.fer = fer(r.per_avg, p.packets_per_frame);
    r.p_tau = p_reappear(p);
    const auto pri = priors(p);
    r.p_h0 = pri.p_h0;
    r.p_h1 = pri.p_h1;
    r.pcol_async = collision_prob(p, CollisionScheme::Async);
    r.pcol_lbt = collision_prob(p, CollisionScheme::LBT);
    const auto md = mean_durations(p);
    r.tau_bar = md.tau_bar;
    r.theta_bar = md.theta_bar;
    const auto rt = rates(p);
    r.r0 = rt.r0;
    r.r1 = rt.r1;
    r.r_frame = throughput(p, ThroughputVariant::FrameEq10);
    r.r_avg = throughput(p, ThroughputVariant::AvgEq12);
    r.r_async = throughput(p, ThroughputVariant::AsyncEq13);
    r.r_sync = throughput(p, ThroughputVariant::SyncEq14);
    return r;
}

}  // namespace fdcr::analytic
