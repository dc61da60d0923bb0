#pragma once

// N-participant simulator: Euler steps with Brownian-bridge default
// detection, instantaneous default cascades resolved to their minimal
// fixed point, horizon truncation with survival-at-infinity interval
// estimates, and the DKW empirical-process band.
//
// Stream discipline: particle i of replication r draws from substream
// (master_seed, r, i); one uniform to sample the initial level, then one
// normal plus one uniform per step while alive (the uniform is consumed
// even when the bridge check is moot so that coupled runs with different
// contagion or strategies see identical Brownian paths).  Replications are
// processed in fixed chunks and reduced in chunk order, so results are
// bitwise independent of worker count and scheduling.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mfc/analytics.hpp"
#include "mfc/initial_distribution.hpp"
#include "mfc/loss_curve.hpp"
#include "mfc/loss_function.hpp"
#include "mfc/parallel.hpp"
#include "mfc/particle_state.hpp"
#include "mfc/rng.hpp"
#include "mfc/strategy.hpp"
#include "mfc/time_grid.hpp"

namespace mfc {

/** Interval estimate of the eventual survivor count. */
struct SurvivalEstimate {
    double lower = 0.0;
    double midpoint = 0.0;
    double upper = 0.0;
    enum class Basis { Expected, Realized } count_basis = Basis::Expected;
};

struct SimConfig {
    int n_particles = 100;
    EconomyParams economy;
    LossFunction loss = LossFunction::linear(0.0);
    InitialDistribution initial = InitialDistribution::dirac(1.0);
    TimeGrid grid{1.0, 0.01};
    RngConfig rng;
    ControlStrategy strategy;
    int replications = 1;
    bool bridge_correction = true;
    int workers = 0;            // 0: MFC_WORKERS env, then hardware
    bool record_rep_curves = false;
};

struct CascadeOutcome {
    std::vector<int> newly_defaulted; ///< triggering hits plus cascade victims
    double new_loss = 0.0;            ///< defaulted fraction after the event
    double increment = 0.0;           ///< G(new_loss) - G(prior_loss)
    int rounds = 0;
};

/** Resolves one instant's default cascade to its minimal fixed point.
 *
 *  Starting from the already-dead set plus new_hits, iterates
 *  D^{k+1} = D^0  u  { i alive : levels[i] <= G(|D^k|/N) - G(prior_loss) }
 *  to the smallest fixed point (at most N rounds).  Marks victims dead,
 *  freezing each at its level minus the contagion increment of the round
 *  that killed it, and reduces surviving levels by the total increment. */
inline CascadeOutcome cascade_fixpoint(std::vector<double>& levels,
                                       std::vector<std::uint8_t>& alive,
                                       double prior_loss,
                                       const std::vector<int>& new_hits,
                                       const LossFunction& G) {
    const int n = static_cast<int>(levels.size());
    if (new_hits.empty())
        throw std::invalid_argument("cascade_fixpoint: new_hits must be nonempty");

    CascadeOutcome out;
    out.newly_defaulted = new_hits;
    for (int i : new_hits) {
        if (!alive[i])
            throw std::invalid_argument("cascade_fixpoint: hits must be alive at entry");
        alive[i] = 0;
    }
    const double g_prior = G(prior_loss);
    int dead = static_cast<int>(std::lround(prior_loss * n)) + static_cast<int>(new_hits.size());
    double increment = 0.0;
    while (dead < n) { // a total wipeout leaves nothing to test (G may blow up at 1)
        ++out.rounds;
        increment = G(static_cast<double>(dead) / n) - g_prior;
        int newly = 0;
        for (int i = 0; i < n; ++i) {
            if (alive[i] && levels[i] <= increment) {
                alive[i] = 0;
                levels[i] -= increment; // frozen at the round that killed it
                out.newly_defaulted.push_back(i);
                ++newly;
            }
        }
        if (newly == 0) break;
        dead += newly;
    }
    for (int i = 0; i < n; ++i)
        if (alive[i]) levels[i] -= increment;
    out.new_loss = static_cast<double>(dead) / n;
    out.increment = increment;
    return out;
}

namespace detail {

/** One Euler step over the compacted alive index list; alloc_of(i) is the
 *  control drift for particle i.  Appends detected hits (direct or bridge)
 *  to `hits`, leaving cascade resolution to the caller. */
template <typename AllocFn>
inline void diffuse_and_detect(ParticleSystemState& state, const std::vector<int>& active,
                               std::vector<Rng>& streams, double dt, double beta,
                               AllocFn&& alloc_of, bool bridge_correction,
                               std::vector<int>& hits, double& max_level) {
    const double sqdt = std::sqrt(dt);
    max_level = 0.0;
    for (int i : active) {
        double xi = streams[i].normal();
        double u = streams[i].uniform(); // always consumed: keeps coupling
        double x = state.levels[i];
        double xn = x + (beta + alloc_of(i)) * dt + sqdt * xi;
        if (xn <= 0.0) {
            state.levels[i] = xn; // frozen where the step landed
            hits.push_back(i);
        } else if (bridge_correction && u < std::exp(-2.0 * x * xn / dt)) {
            state.levels[i] = 0.0; // killed by the within-step bridge dip
            hits.push_back(i);
        } else {
            state.levels[i] = xn;
            if (xn > max_level) max_level = xn;
        }
    }
}

} // namespace detail

/** Advances the system by one Euler step under the given allocation:
 *  diffusion, hit detection (direct and Brownian bridge), then a single
 *  cascade fixed point merging all simultaneous hits.  The allocation must
 *  be feasible (sum <= 1, entries in [0,1], zero to the dead). */
inline void step(ParticleSystemState& state, std::vector<Rng>& streams, double dt,
                 const EconomyParams& economy, const LossFunction& G,
                 const std::vector<double>& allocation, bool bridge_correction = true) {
    const int n = state.n();
    if (static_cast<int>(allocation.size()) != n)
        throw std::invalid_argument("step: allocation size must match N");
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        if (allocation[i] != 0.0 && !state.alive[i])
            throw std::invalid_argument("step: dead participants must receive 0 allocation");
        if (!(allocation[i] >= 0.0 && allocation[i] <= 1.0))
            throw std::invalid_argument("step: allocations must lie in [0, 1]");
        total += allocation[i];
    }
    if (total > 1.0 + 1e-12)
        throw std::invalid_argument("step: allocations exceed the unit budget");

    std::vector<int> active;
    active.reserve(n);
    for (int i = 0; i < n; ++i)
        if (state.alive[i]) active.push_back(i);

    std::vector<int> hits;
    double max_level = 0.0;
    detail::diffuse_and_detect(state, active, streams, dt, economy.beta,
                               [&allocation](int i) { return allocation[i]; },
                               bridge_correction, hits, max_level);
    double t_next = state.time + dt;
    if (!hits.empty()) {
        auto outcome = cascade_fixpoint(state.levels, state.alive, state.loss_fraction(), hits, G);
        for (int i : outcome.newly_defaulted) state.default_times[i] = t_next;
        state.n_defaulted += static_cast<int>(outcome.newly_defaulted.size());
    }
    state.time = t_next;
}

/** Tail sandwich for the eventual survivor count at the horizon: each
 *  surviving participant survives forever with probability between
 *  p(level - remaining contagion) and p(level), where p is the drifted
 *  never-hit probability and the remaining contagion is G's cap minus the
 *  part already realized.  Controls are assumed off after the horizon, so
 *  for beta <= 0 the estimate is identically zero. */
inline SurvivalEstimate estimate_survivors_at_infinity(const ParticleSystemState& state,
                                                       const EconomyParams& economy,
                                                       const LossFunction& G) {
    SurvivalEstimate est;
    if (economy.beta <= 0.0 || state.n_alive() == 0) return est;
    const double remaining = G.cap() - G(state.loss_fraction());
    double lo = 0.0, hi = 0.0;
    for (int i = 0; i < state.n(); ++i) {
        if (!state.alive[i]) continue;
        hi += survival_prob_drifted(state.levels[i], economy.beta);
        lo += survival_prob_drifted(state.levels[i] - remaining, economy.beta);
    }
    est.lower = lo;
    est.upper = hi;
    est.midpoint = 0.5 * (lo + hi);
    return est;
}

/** Threshold-aware variant for controlled runs: flagged survivors keep
 *  their 1/m aid forever (drift beta + rate), and unflagged survivors are
 *  credited with the gambler's-ruin probability of reaching the flag
 *  target before default, capped by the remaining flag slots.  This is an
 *  estimator (competition for slots is ignored before capping), used for
 *  scaling fits where the plain estimate is identically zero. */
inline SurvivalEstimate estimate_survivors_threshold(const ParticleSystemState& state,
                                                     const StrategyState& memory,
                                                     const ControlStrategy& strategy,
                                                     const EconomyParams& economy,
                                                     const LossFunction& G) {
    if (strategy.kind() != ControlStrategy::Kind::Threshold)
        throw std::invalid_argument("estimate_survivors_threshold: needs a Threshold strategy");
    SurvivalEstimate est;
    const double rate = strategy.rate_or_default();
    const double drift = economy.beta + rate;
    if (drift <= 0.0 || state.n_alive() == 0) return est;

    const int n = state.n();
    const double target = strategy.target_or_default(n);
    const double remaining = G.cap() - G(state.loss_fraction());
    const int slots = strategy.m() - memory.flagged_count;

    double lo = 0.0, hi = 0.0;
    double reach_lo_sum = 0.0, reach_hi_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!state.alive[i]) continue;
        bool flagged = i < static_cast<int>(memory.flagged.size()) && memory.flagged[i];
        if (flagged) {
            hi += survival_prob_drifted(state.levels[i], drift);
            lo += survival_prob_drifted(state.levels[i] - remaining, drift);
        } else if (slots > 0) {
            double z_hi = std::clamp(state.levels[i], 0.0, target);
            double z_lo = std::clamp(state.levels[i] - remaining, 0.0, target);
            reach_hi_sum += ruin_reach_prob_drifted(z_hi, target, economy.beta);
            reach_lo_sum += ruin_reach_prob_drifted(z_lo, target, economy.beta);
        }
    }
    if (slots > 0) {
        double surv_hi = survival_prob_drifted(target, drift);
        double surv_lo = survival_prob_drifted(target - remaining, drift);
        hi += surv_hi * std::min(static_cast<double>(slots), reach_hi_sum);
        lo += surv_lo * std::min(static_cast<double>(slots), reach_lo_sum);
    }
    est.lower = lo;
    est.upper = hi;
    est.midpoint = 0.5 * (lo + hi);
    return est;
}

/** DKW band: P(sup-norm of empirical CDF error > gamma) <= min(1, 2 e^{-2 n gamma^2}). */
inline double dkw_band(std::int64_t n, double gamma) {
    if (n < 1) throw std::domain_error("dkw_band: requires n >= 1");
    if (!(gamma > 0.0)) throw std::domain_error("dkw_band: requires gamma > 0");
    return std::min(1.0, 2.0 * std::exp(-2.0 * static_cast<double>(n) * gamma * gamma));
}

struct ReplicationStats {
    int alive_at_horizon = 0;
    int flagged_count = 0;
    SurvivalEstimate generic;   ///< controls assumed off after the horizon
    SurvivalEstimate effective; ///< threshold-aware when applicable, else generic
};

struct RunResult {
    TimeGrid grid{1.0, 0.01};
    std::vector<double> mean_loss;   ///< E L^N at each grid point
    std::vector<double> loss_stderr; ///< standard error of the mean
    std::vector<ReplicationStats> reps;
    std::vector<std::vector<double>> rep_curves; ///< per-replication losses (optional)
    int n_particles = 0;
    std::uint64_t master_seed = 0;
    int workers_used = 1;
    double wall_seconds = 0.0;

    double mean_effective_midpoint() const {
        double s = 0.0;
        for (const auto& r : reps) s += r.effective.midpoint;
        return reps.empty() ? 0.0 : s / reps.size();
    }
    double stderr_effective_midpoint() const {
        if (reps.size() < 2) return 0.0;
        double m = mean_effective_midpoint(), s = 0.0;
        for (const auto& r : reps) s += (r.effective.midpoint - m) * (r.effective.midpoint - m);
        return std::sqrt(s / (reps.size() * (reps.size() - 1.0)));
    }
    /** Mean loss curve as a LossCurve (terminal = last value). */
    LossCurve mean_curve() const {
        std::vector<double> v = mean_loss;
        for (auto& x : v) x = std::clamp(x, 0.0, 1.0);
        for (std::size_t k = 1; k < v.size(); ++k) v[k] = std::max(v[k], v[k - 1]);
        double terminal = v.back();
        return LossCurve(grid, std::move(v), terminal);
    }
};

namespace detail {

struct ChunkAccum {
    std::vector<double> loss_sum;
    std::vector<double> loss_sumsq;
};

/** One full replication; returns its stats and adds its loss curve into
 *  the chunk accumulator. */
inline ReplicationStats run_replication(const SimConfig& cfg, std::uint64_t rep,
                                        ChunkAccum& acc, std::vector<double>* curve_out) {
    const int n = cfg.n_particles;
    const std::size_t steps = cfg.grid.count();
    const double dt = cfg.grid.dt;
    const double beta = cfg.economy.beta;

    ParticleSystemState state(n);
    std::vector<Rng> streams;
    streams.reserve(n);
    for (int i = 0; i < n; ++i)
        streams.emplace_back(cfg.rng.master_seed, rep, static_cast<std::uint64_t>(i));
    for (int i = 0; i < n; ++i) state.levels[i] = cfg.initial.sample_one(streams[i]);

    StrategyState memory;
    memory.reset(n);

    std::vector<int> active(n);
    for (int i = 0; i < n; ++i) active[i] = i;
    std::vector<int> hits;
    hits.reserve(16);

    const auto kind = cfg.strategy.kind();
    const double thr_rate = kind == ControlStrategy::Kind::Threshold
                                ? cfg.strategy.rate_or_default() : 0.0;
    const double thr_target = kind == ControlStrategy::Kind::Threshold
                                  ? cfg.strategy.target_or_default(n) : 0.0;
    double max_level = std::numeric_limits<double>::infinity(); // force first flag scan

    std::vector<double> losses(steps + 1, 0.0);
    std::vector<double> custom_alloc;
    for (std::size_t k = 0; k < steps; ++k) {
        hits.clear();
        double step_max = 0.0;
        switch (kind) {
        case ControlStrategy::Kind::Zero:
            diffuse_and_detect(state, active, streams, dt, beta, [](int) { return 0.0; },
                               cfg.bridge_correction, hits, step_max);
            break;
        case ControlStrategy::Kind::Uniform: {
            double each = active.empty() ? 0.0 : 1.0 / static_cast<double>(active.size());
            diffuse_and_detect(state, active, streams, dt, beta, [each](int) { return each; },
                               cfg.bridge_correction, hits, step_max);
            break;
        }
        case ControlStrategy::Kind::Threshold: {
            if (max_level >= thr_target && memory.flagged_count < cfg.strategy.m()) {
                for (int i : active) {
                    if (memory.flagged_count >= cfg.strategy.m()) break;
                    if (!memory.flagged[i] && state.levels[i] >= thr_target) {
                        memory.flagged[i] = 1;
                        ++memory.flagged_count;
                    }
                }
            }
            diffuse_and_detect(state, active, streams, dt, beta,
                               [&memory, thr_rate](int i) {
                                   return memory.flagged[i] ? thr_rate : 0.0;
                               },
                               cfg.bridge_correction, hits, step_max);
            break;
        }
        case ControlStrategy::Kind::Custom: {
            custom_alloc = evaluate_strategy(cfg.strategy, state, memory);
            diffuse_and_detect(state, active, streams, dt, beta,
                               [&custom_alloc](int i) { return custom_alloc[i]; },
                               cfg.bridge_correction, hits, step_max);
            break;
        }
        }
        max_level = step_max;
        double t_next = cfg.grid.t(k + 1);
        if (!hits.empty()) {
            auto outcome = cascade_fixpoint(state.levels, state.alive,
                                            state.loss_fraction(), hits, cfg.loss);
            for (int i : outcome.newly_defaulted) state.default_times[i] = t_next;
            state.n_defaulted += static_cast<int>(outcome.newly_defaulted.size());
            active.erase(std::remove_if(active.begin(), active.end(),
                                        [&state](int i) { return !state.alive[i]; }),
                         active.end());
        }
        state.time = t_next;
        losses[k + 1] = state.loss_fraction();
    }

    for (std::size_t k = 0; k <= steps; ++k) {
        acc.loss_sum[k] += losses[k];
        acc.loss_sumsq[k] += losses[k] * losses[k];
    }
    if (curve_out) *curve_out = losses;

    ReplicationStats stats;
    stats.alive_at_horizon = state.n_alive();
    stats.flagged_count = memory.flagged_count;
    stats.generic = estimate_survivors_at_infinity(state, cfg.economy, cfg.loss);
    if (kind == ControlStrategy::Kind::Threshold && cfg.economy.beta <= 0.0) {
        stats.effective = estimate_survivors_threshold(state, memory, cfg.strategy,
                                                       cfg.economy, cfg.loss);
    } else {
        stats.effective = stats.generic;
    }
    return stats;
}

} // namespace detail

/** Runs `replications` independent paths of the N-particle system to the
 *  horizon.  Deterministic for a fixed master seed: the replication-chunk
 *  partition depends only on the replication count, so the result is
 *  bitwise identical across worker counts and runs. */
inline RunResult simulate(const SimConfig& cfg) {
    if (cfg.n_particles < 1) throw std::invalid_argument("simulate: N must be >= 1");
    if (cfg.replications < 1) throw std::invalid_argument("simulate: replications must be >= 1");
    if (cfg.strategy.kind() == ControlStrategy::Kind::Threshold &&
        cfg.strategy.m() > cfg.n_particles)
        throw std::invalid_argument("simulate: threshold m must not exceed N");

    const std::size_t reps = static_cast<std::size_t>(cfg.replications);
    const std::size_t points = cfg.grid.size();
    const std::size_t n_chunks = std::min<std::size_t>(reps, 256);
    const int workers = resolve_workers(cfg.workers);

    RunResult result;
    result.grid = cfg.grid;
    result.n_particles = cfg.n_particles;
    result.master_seed = cfg.rng.master_seed;
    result.workers_used = workers;
    result.reps.resize(reps);
    if (cfg.record_rep_curves) result.rep_curves.resize(reps);

    std::vector<detail::ChunkAccum> chunks(n_chunks);
    auto t0 = std::chrono::steady_clock::now();
    parallel_chunks(reps, n_chunks, workers, [&](std::size_t c, std::size_t b, std::size_t e) {
        auto& acc = chunks[c];
        acc.loss_sum.assign(points, 0.0);
        acc.loss_sumsq.assign(points, 0.0);
        for (std::size_t r = b; r < e; ++r) {
            std::vector<double>* curve = cfg.record_rep_curves ? &result.rep_curves[r] : nullptr;
            result.reps[r] = detail::run_replication(cfg, r, acc, curve);
        }
    });
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    result.mean_loss.assign(points, 0.0);
    result.loss_stderr.assign(points, 0.0);
    for (const auto& acc : chunks)
        for (std::size_t k = 0; k < points; ++k) result.mean_loss[k] += acc.loss_sum[k];
    for (auto& v : result.mean_loss) v /= static_cast<double>(reps);
    if (reps > 1) {
        std::vector<double> sumsq(points, 0.0);
        for (const auto& acc : chunks)
            for (std::size_t k = 0; k < points; ++k) sumsq[k] += acc.loss_sumsq[k];
        for (std::size_t k = 0; k < points; ++k) {
            double var = (sumsq[k] - reps * result.mean_loss[k] * result.mean_loss[k]) /
                         (static_cast<double>(reps) - 1.0);
            result.loss_stderr[k] = std::sqrt(std::max(var, 0.0) / static_cast<double>(reps));
        }
    }
    return result;
}

} // namespace mfc
