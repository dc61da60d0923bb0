#pragma once

// Closed-form quantities for drifted Brownian capital with absorption at 0,
// and the constants governing how many participants a unit-rate budget can
// save as the system grows.
//
// Conventions: capital follows X_t = z + beta*t + B_t, default is the first
// time X hits 0.  survival_prob_drifted is P(never hit) for beta > 0; psi is
// the survival function P(tau > t | X_0 = x) solving the backward equation
// d/dt psi = beta d/dx psi + (1/2) d^2/dx^2 psi with absorbing boundary.

#include <cmath>
#include <stdexcept>

#include "mfc/initial_distribution.hpp"
#include "mfc/normal.hpp"

namespace mfc {

/** Market-wide parameters: common drift and linear contagion coefficient. */
struct EconomyParams {
    double beta = 0.0;
    double alpha = 0.0;

    EconomyParams() = default;
    EconomyParams(double beta_, double alpha_) : beta(beta_), alpha(alpha_) {
        if (alpha < 0.0)
            throw std::invalid_argument("EconomyParams: alpha must be >= 0");
    }
};

/** P(drifted Brownian motion from z never hits 0) = 1 - exp(-2 beta z+),
 *  valid for beta > 0. */
inline double survival_prob_drifted(double z, double beta) {
    if (!(beta > 0.0))
        throw std::domain_error("survival_prob_drifted: requires beta > 0");
    if (z <= 0.0) return 0.0;
    return -std::expm1(-2.0 * beta * z);
}

/** Survival function Psi(t, x) = P(tau > t | X_0 = x) for X = x + beta t + B. */
inline double psi(double t, double x, double beta) {
    if (!(t > 0.0)) throw std::domain_error("psi: requires t > 0");
    if (x <= 0.0) return 0.0;
    double rt = std::sqrt(t);
    return norm_cdf((x + beta * t) / rt) -
           std::exp(-2.0 * beta * x) * norm_cdf((-x + beta * t) / rt);
}

/** First-passage CDF P(tau <= t | X_0 = x) = 1 - Psi(t, x). */
inline double first_passage_cdf(double t, double x, double beta) {
    if (x < 0.0) throw std::domain_error("first_passage_cdf: requires x >= 0");
    if (x == 0.0) return 1.0;
    if (t == 0.0) return 0.0;
    return 1.0 - psi(t, x, beta);
}

/** P(Brownian bridge over a step of length dt, from level a to level b
 *  (both above the barrier), dips to the barrier) = exp(-2 a b / dt).
 *  Exact for any constant within-step drift, since conditioning on the
 *  endpoints removes the drift. */
inline double bridge_cross_prob(double a, double b, double dt) {
    if (!(dt > 0.0)) throw std::domain_error("bridge_cross_prob: requires dt > 0");
    if (a < 0.0 || b < 0.0)
        throw std::domain_error("bridge_cross_prob: endpoint gaps must be >= 0");
    return std::exp(-2.0 * a * b / dt);
}

/** Driftless gambler's ruin: P(reach b before 0 | start delta), 0 < delta < b. */
inline double ruin_reach_prob(double delta, double b) {
    if (!(delta > 0.0 && b > delta))
        throw std::domain_error("ruin_reach_prob: requires 0 < delta < b");
    return delta / b;
}

/** Drifted gambler's ruin: P(reach b before 0 | start z, drift beta). */
inline double ruin_reach_prob_drifted(double z, double b, double beta) {
    if (!(b > 0.0) || z < 0.0 || z > b)
        throw std::domain_error("ruin_reach_prob_drifted: requires 0 <= z <= b, b > 0");
    if (z == 0.0) return 0.0;
    if (z == b) return 1.0;
    if (beta == 0.0) return z / b;
    return std::expm1(-2.0 * beta * z) / std::expm1(-2.0 * beta * b);
}

namespace detail {

inline void check_alpha_eps(double alpha, double eps) {
    if (alpha < 0.0) throw std::domain_error("scaling: requires alpha >= 0");
    if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("scaling: requires eps in (0, 1)");
    if (!(alpha * eps < 1.0)) throw std::domain_error("scaling: requires alpha * eps < 1");
}

/** (1 - eps)^((1 - eps) / eps), computed in log space. */
inline double one_minus_eps_power(double eps) {
    return std::exp(((1.0 - eps) / eps) * std::log1p(-eps));
}

/** Tail argument q with N(q) = (eps / 2) (1 - eps)^((1 - eps)/eps). */
inline double scaling_tail_quantile(double eps) {
    return norm_tail_quantile(0.5 * eps * one_minus_eps_power(eps));
}

} // namespace detail

/** Increasing-in-T function whose unique root is t_alpha_eps; clamped to
 *  -1e6 when the tail term underflows for tiny T. */
inline double h_alpha_eps(double alpha, double eps, double T) {
    detail::check_alpha_eps(alpha, eps);
    if (!(T > 0.0)) throw std::domain_error("h_alpha_eps: requires T > 0");
    double tail_log = std::log(2.0) + log_norm_tail((1.0 - alpha * eps) / std::sqrt(T));
    double v = eps * tail_log - eps * std::log(eps) - (1.0 - eps) * std::log1p(-eps);
    if (!std::isfinite(v) || v < -1e6) return -1e6;
    return v;
}

/** Time scale T_{alpha,eps} = ((1 - alpha eps) / q)^2 with
 *  N(q) = (eps/2)(1-eps)^((1-eps)/eps); the root of h_alpha_eps in T. */
inline double t_alpha_eps(double alpha, double eps) {
    detail::check_alpha_eps(alpha, eps);
    double q = detail::scaling_tail_quantile(eps);
    double r = (1.0 - alpha * eps) / q;
    return r * r;
}

/** Per-participant success probability
 *  p_{alpha,eps,delta} = N( ((alpha + delta)/(1 - alpha eps) - 1) * q ). */
inline double p_alpha_eps_delta(double alpha, double eps, double delta) {
    detail::check_alpha_eps(alpha, eps);
    if (delta < 0.0) throw std::domain_error("p_alpha_eps_delta: requires delta >= 0");
    double q = detail::scaling_tail_quantile(eps);
    return norm_tail(((alpha + delta) / (1.0 - alpha * eps) - 1.0) * q);
}

/** Constants for the sqrt(N) growth of savable participants under a
 *  unit-rate budget in the neutral regime. */
struct ScalingConstants {
    double alpha = 0.0;       ///< contagion coefficient the constants refer to
    double eps = 0.5;         ///< canonical eps = min(1/2, 1/(2 alpha))
    double delta = 0.0;       ///< canonical delta = alpha
    double t_ae = 0.0;        ///< time scale at the canonical (alpha, eps)
    double p_aed = 0.0;       ///< success probability at the canonical triple
    double rho = 0.0;         ///< growth coefficient (1 - eps) delta p
    double theta_star = 0.0;  ///< maximizer of theta (1 - exp(-2/theta^2))
    double theta_value = 0.0; ///< maximum value, multiplies min(1, rho)
    double c_alpha = 0.0;     ///< lower-bound constant theta_value * min(1, rho)
    double ur_upper = 0.0;    ///< universal upper-bound constant 4 / sqrt(pi)
};

namespace detail {

/** Maximize f on [lo, hi] by golden-section search (f unimodal). */
template <typename F>
inline std::pair<double, double> golden_max(F f, double lo, double hi) {
    const double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 200 && (b - a) > 1e-12; ++it) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    double x = 0.5 * (a + b);
    return {x, f(x)};
}

} // namespace detail

/** Scaling constants at contagion level alpha >= 0.  rho follows the
 *  two-branch closed form (alpha > 1 vs alpha <= 1); both branches equal
 *  (1 - eps) delta p_{alpha,eps,delta} at eps = min(1/2, 1/(2 alpha)),
 *  delta = alpha. */
inline ScalingConstants scaling_constants(double alpha) {
    if (alpha < 0.0) throw std::domain_error("scaling_constants: requires alpha >= 0");
    ScalingConstants sc;
    sc.alpha = alpha;
    sc.eps = (alpha > 1.0) ? 1.0 / (2.0 * alpha) : 0.5;
    sc.delta = alpha;
    sc.t_ae = t_alpha_eps(alpha, sc.eps);
    sc.p_aed = p_alpha_eps_delta(alpha, sc.eps, sc.delta);
    if (alpha > 1.0) {
        double arg = (1.0 / (4.0 * alpha)) *
                     std::exp((2.0 * alpha - 1.0) * std::log1p(-1.0 / (2.0 * alpha)));
        sc.rho = (alpha - 0.5) * norm_tail((4.0 * alpha - 1.0) * norm_tail_quantile(arg));
    } else {
        sc.rho = 0.5 * alpha *
                 norm_tail(((5.0 * alpha - 2.0) / (2.0 - alpha)) * norm_tail_quantile(0.125));
    }
    auto [ts, tv] = detail::golden_max(
        [](double th) { return th * (-std::expm1(-2.0 / (th * th))); }, 0.3, 5.0);
    sc.theta_star = ts;
    sc.theta_value = tv;
    sc.c_alpha = tv * std::min(1.0, sc.rho);
    sc.ur_upper = 4.0 / std::sqrt(3.14159265358979323846);
    return sc;
}

/** In the negative regime a unit-rate budget saves at most -2/beta
 *  participants in expectation, uniformly in N. */
inline double budget_bound_negative(double beta) {
    if (!(beta < 0.0))
        throw std::domain_error("budget_bound_negative: requires beta < 0");
    return -2.0 / beta;
}

/** Positive regime: the limiting surviving fraction 1 - E[exp(-2 beta Z)]. */
inline double limit_survival_fraction(double beta, const InitialDistribution& theta) {
    if (!(beta > 0.0))
        throw std::domain_error("limit_survival_fraction: requires beta > 0");
    return 1.0 - theta.exp_neg_moment(2.0 * beta);
}

} // namespace mfc
