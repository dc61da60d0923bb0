#pragma once

// Scaling experiments: how many participants can one unit of budget keep
// alive forever, as the system grows?  Three regimes with distinct
// answers:
//
//  * Negative drift: a constant (-2/beta) no matter the strategy or N —
//    the budget is useless at scale.
//  * Zero drift: order sqrt(N), achieved by flagging the first
//    m = round(theta * sqrt(N)) participants to reach capital N/m and
//    paying each 1/m forever; compared against the 4/sqrt(pi) * sqrt(N)
//    upper constant.
//  * Positive drift without contagion: order N survives on its own and
//    the budget moves nothing at first order.
//
// run_scaling sweeps N, runs the particle simulator per N, averages the
// survive-forever sandwich across replications, fits the log-log slope
// of the midpoints, and attaches the regime's reference line.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfc/analytics.hpp"
#include "mfc/particle.hpp"

namespace mfc {

enum class Regime { Negative, Neutral, Positive };

inline const char* regime_name(Regime r) {
    switch (r) {
    case Regime::Negative: return "negative";
    case Regime::Neutral: return "neutral";
    case Regime::Positive: return "positive";
    }
    return "?";
}

struct ScalingExperiment {
    Regime regime = Regime::Neutral;
    std::vector<int> n_grid;           ///< strictly increasing system sizes
    EconomyParams economy;
    LossFunction loss = LossFunction::linear(0.0);
    InitialDistribution initial = InitialDistribution::dirac(1.0);
    TimeGrid grid{1.0, 0.01};
    ControlStrategy strategy;          ///< Threshold kind: m is re-derived per N
    int replications = 100;            ///< per N
    double theta = 0.0;                ///< threshold coefficient; 0 means the optimizer's value
    RngConfig rng;
    int workers = 0;
    bool bridge_correction = true;
};

struct ScalingRow {
    int n_particles = 0;
    int m_used = 0;                    ///< threshold slots at this N (0 otherwise)
    double s_lower = 0.0;              ///< mean survive-forever sandwich across replications
    double s_mid = 0.0;
    double s_upper = 0.0;
    double stderr_mid = 0.0;           ///< standard error of the midpoint across replications
    double half_width = 0.0;           ///< (upper - lower)/2, folded into error bars downstream
    double reference = 0.0;            ///< regime reference at this N
    double reference_upper = 0.0;      ///< second line for the zero-drift regime; else == reference
    double mean_loss_at_horizon = 0.0;
};

struct ScalingTable {
    Regime regime = Regime::Neutral;
    std::vector<ScalingRow> rows;
    double slope_mid = 0.0;            ///< log-log least-squares slope of positive midpoints
    double slope_upper = 0.0;
    double theta_used = 0.0;           ///< 0 when the strategy has no threshold
    double c_alpha = 0.0;              ///< zero-drift construction constant (linear loss only)
    double ur_upper_coeff = 0.0;       ///< 4/sqrt(pi), the matching upper constant
};

namespace detail {

/** Least-squares slope of log y against log x over points with y > 0;
 *  zero when fewer than two points qualify. */
inline double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (ys[i] > 0.0) {
            lx.push_back(std::log(xs[i]));
            ly.push_back(std::log(ys[i]));
        }
    if (lx.size() < 2) return 0.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= lx.size();
    my /= ly.size();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    return den > 0.0 ? num / den : 0.0;
}

inline void check_regime(const ScalingExperiment& ex) {
    switch (ex.regime) {
    case Regime::Negative:
        if (!(ex.economy.beta < 0.0))
            throw std::invalid_argument("scaling: the negative regime requires beta < 0");
        break;
    case Regime::Neutral:
        if (ex.economy.beta != 0.0)
            throw std::invalid_argument("scaling: the zero-drift regime requires beta = 0");
        break;
    case Regime::Positive:
        if (!(ex.economy.beta > 0.0))
            throw std::invalid_argument("scaling: the positive regime requires beta > 0");
        if (ex.loss.cap() != 0.0)
            throw std::invalid_argument(
                "scaling: the positive regime requires no contagion (G identically 0)");
        break;
    }
}

} // namespace detail

/** Runs the particle simulator across the experiment's N grid and
 *  tabulates survive-forever estimates with the regime's reference line.
 *  For threshold strategies the slot count is re-derived per N as
 *  m = round(theta * sqrt(N)) (capped at N), with target N/m and rate
 *  1/m, matching the construction the scaling law comes from. */
inline ScalingTable run_scaling(const ScalingExperiment& ex) {
    if (ex.n_grid.empty()) throw std::invalid_argument("scaling: N grid must be nonempty");
    for (std::size_t i = 0; i < ex.n_grid.size(); ++i) {
        if (ex.n_grid[i] < 1) throw std::invalid_argument("scaling: N values must be >= 1");
        if (i > 0 && ex.n_grid[i] <= ex.n_grid[i - 1])
            throw std::invalid_argument("scaling: N grid must be strictly increasing");
    }
    if (ex.replications < 1) throw std::invalid_argument("scaling: replications must be >= 1");
    detail::check_regime(ex);

    const bool thresholded = ex.strategy.kind() == ControlStrategy::Kind::Threshold;
    ScalingTable table;
    table.regime = ex.regime;
    table.ur_upper_coeff = 4.0 / std::sqrt(std::acos(-1.0));
    if (thresholded)
        table.theta_used = ex.theta > 0.0 ? ex.theta : scaling_constants(1.0).theta_star;
    if (ex.regime == Regime::Neutral && ex.loss.kind() == LossFunction::Kind::Linear &&
        ex.loss.alpha() > 0.0)
        table.c_alpha = scaling_constants(ex.loss.alpha()).c_alpha;

    for (int n : ex.n_grid) {
        SimConfig cfg;
        cfg.n_particles = n;
        cfg.economy = ex.economy;
        cfg.loss = ex.loss;
        cfg.initial = ex.initial;
        cfg.grid = ex.grid;
        cfg.rng = ex.rng;
        cfg.replications = ex.replications;
        cfg.bridge_correction = ex.bridge_correction;
        cfg.workers = ex.workers;
        ScalingRow row;
        row.n_particles = n;
        if (thresholded) {
            int m = static_cast<int>(std::lround(table.theta_used * std::sqrt(n)));
            m = std::min(std::max(m, 1), n);
            cfg.strategy = ControlStrategy::threshold(m);
            row.m_used = m;
        } else {
            cfg.strategy = ex.strategy;
        }

        RunResult run = simulate(cfg);
        double lo = 0.0, mid = 0.0, hi = 0.0;
        for (const auto& r : run.reps) {
            lo += r.effective.lower;
            mid += r.effective.midpoint;
            hi += r.effective.upper;
        }
        const double nr = static_cast<double>(run.reps.size());
        row.s_lower = lo / nr;
        row.s_mid = mid / nr;
        row.s_upper = hi / nr;
        row.stderr_mid = run.stderr_effective_midpoint();
        row.half_width = 0.5 * (row.s_upper - row.s_lower);
        row.mean_loss_at_horizon = run.mean_loss.back();

        switch (ex.regime) {
        case Regime::Negative:
            row.reference = -2.0 / ex.economy.beta;
            row.reference_upper = row.reference;
            break;
        case Regime::Neutral:
            row.reference = table.c_alpha * std::sqrt(n);
            row.reference_upper = table.ur_upper_coeff * std::sqrt(n);
            break;
        case Regime::Positive:
            row.reference = limit_survival_fraction(ex.economy.beta, ex.initial) * n;
            row.reference_upper = row.reference;
            break;
        }
        table.rows.push_back(row);
    }

    std::vector<double> ns, mids, uppers;
    for (const auto& r : table.rows) {
        ns.push_back(static_cast<double>(r.n_particles));
        mids.push_back(r.s_mid);
        uppers.push_back(r.s_upper);
    }
    table.slope_mid = detail::loglog_slope(ns, mids);
    table.slope_upper = detail::loglog_slope(ns, uppers);
    return table;
}

} // namespace mfc
