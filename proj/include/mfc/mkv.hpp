#pragma once

// Solvers for the mean-field limit of the cascade system.  The loss
// curve solves ell_t = P(tau <= t) where tau is the first time the free
// path Z + beta*t + B_t falls to the moving barrier G(ell_t).  Two
// routes:
//
//  * Picard iteration of the first-passage operator Gamma from ell == 0.
//    Iterates increase toward the minimal solution; with common random
//    numbers across iterations the increase is exact sample-wise, not
//    just in expectation.
//
//  * The epsilon-regularized equation, where the hard absorption is
//    replaced by the soft default mass 1 - E exp(-(1/eps) * integral of
//    the path's shortfall below the barrier).  Solved by the same Picard
//    scheme; a descending epsilon sweep brackets the minimal solution
//    from below.
//
// Monte Carlo paths use one substream per path keyed by (seed, path),
// with the same draw protocol as the particle simulator (one uniform for
// the initial level, then one normal plus one uniform per step), so
// operator evaluations with different barriers, different epsilon, or no
// regularization at all see identical Brownian paths.  Path chunks are
// reduced in fixed order: results are bitwise independent of the worker
// count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mfc/analytics.hpp"
#include "mfc/initial_distribution.hpp"
#include "mfc/loss_curve.hpp"
#include "mfc/loss_function.hpp"
#include "mfc/parallel.hpp"
#include "mfc/rng.hpp"
#include "mfc/time_grid.hpp"

namespace mfc {

struct MkvModel {
    EconomyParams economy;
    LossFunction loss = LossFunction::linear(0.0);
    InitialDistribution initial = InitialDistribution::dirac(1.0);
    TimeGrid grid{1.0, 0.01};
};

/** Monte Carlo curve estimate with per-point standard errors and a
 *  tail sandwich for the infinite-horizon value. */
struct CurveEstimate {
    LossCurve curve;
    std::vector<double> stderrs;  ///< binomial standard error per grid point
    double stderr_max = 0.0;
    double inf_lower = 0.0;       ///< loss at infinity, barrier frozen at its horizon value
    double inf_upper = 1.0;       ///< loss at infinity, barrier raised to G's cap
    std::int64_t mc_paths = 0;
};

struct PicardReport {
    std::vector<LossCurve> iterates;  ///< ell^1, ell^2, ... (ell^0 == 0 omitted)
    std::vector<double> sup_deltas;   ///< sup_k |ell^{n+1} - ell^n| per iteration
    bool converged = false;
    std::int64_t mc_paths = 0;
    double mc_stderr_max = 0.0;       ///< from the final operator application
    std::vector<double> final_stderrs; ///< per grid point, final application
    double max_jump = 0.0;            ///< largest single-step increment of the result
    double inf_lower = 0.0;           ///< tail sandwich for the result's value at infinity
    double inf_upper = 1.0;
};

struct RegularizedConfig {
    double epsilon = 0.1;
    std::int64_t mc_paths = 100000;
    std::uint64_t master_seed = 0;
    int workers = 0;
};

namespace detail {

/** Barrier per grid interval: right-continuous value G(ell_{t_k}) held on
 *  [t_k, t_{k+1}). */
inline std::vector<double> barrier_on_grid(const LossCurve& ell, const LossFunction& G) {
    const auto& v = ell.values();
    std::vector<double> c(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) c[k] = G(v[k]);
    return c;
}

/** Exponential soft-default factors exp(-acc_j / eps) along one path,
 *  where acc_j is the trapezoid integral up to t_j of the path's
 *  shortfall (x - c)^- against the piecewise-constant barrier.  Exposed
 *  separately so the quadrature can be checked against exact integrals
 *  of deterministic paths. */
inline std::vector<double> regularized_exp_factors(const std::vector<double>& xs,
                                                   const std::vector<double>& cs, double dt,
                                                   double eps) {
    std::vector<double> out(xs.size());
    double acc = 0.0;
    out[0] = 1.0;
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
        double left = std::max(cs[k] - xs[k], 0.0);
        double right = std::max(cs[k] - xs[k + 1], 0.0);
        acc += 0.5 * dt * (left + right);
        out[k + 1] = std::exp(-acc / eps);
    }
    return out;
}

struct GammaChunk {
    std::vector<std::int64_t> first_hit; ///< count of paths first crossing at index k
    double tail_keep = 0.0;              ///< sum of never-cross odds, barrier frozen
    double tail_cap = 0.0;               ///< same with barrier raised to the cap
};

} // namespace detail

/** One application of the first-passage operator: estimates
 *  P(tau <= t_k) for the free path against the barrier G(ell), with
 *  Brownian-bridge crossing checks inside each step and a direct check
 *  whenever the barrier jumps at a grid point.  The estimate is an
 *  empirical CDF of crossing times, hence nondecreasing by construction;
 *  the running-maximum projection is a no-op kept as a guard. */
inline CurveEstimate gamma_operator(const LossCurve& ell, const MkvModel& model,
                                    std::int64_t mc_paths, const RngConfig& rng,
                                    int workers = 0) {
    if (!(ell.grid() == model.grid))
        throw std::invalid_argument("gamma_operator: curve must live on the model grid");
    if (mc_paths < 1) throw std::invalid_argument("gamma_operator: needs mc_paths >= 1");

    const std::size_t points = model.grid.size();
    const std::size_t steps = model.grid.count();
    const double dt = model.grid.dt;
    const double sqdt = std::sqrt(dt);
    const double beta = model.economy.beta;
    const std::vector<double> c = detail::barrier_on_grid(ell, model.loss);
    const double cap = model.loss.cap();

    const std::size_t n_chunks = std::min<std::size_t>(static_cast<std::size_t>(mc_paths), 256);
    std::vector<detail::GammaChunk> chunks(n_chunks);
    parallel_chunks(static_cast<std::size_t>(mc_paths), n_chunks, resolve_workers(workers),
                    [&](std::size_t ci, std::size_t b, std::size_t e) {
        auto& acc = chunks[ci];
        acc.first_hit.assign(points + 1, 0); // index `points` = never crossed
        for (std::size_t p = b; p < e; ++p) {
            Rng stream(rng.master_seed, static_cast<std::uint64_t>(p), 0);
            double x = model.initial.sample_one(stream);
            std::size_t hit = points;
            if (x <= c[0]) hit = 0;
            for (std::size_t k = 0; k < steps; ++k) {
                double xi = stream.normal();
                double u = stream.uniform(); // consumed even when moot: keeps coupling
                double xn = x + beta * dt + sqdt * xi;
                if (hit == points) {
                    double a = x - c[k];
                    double bb = xn - c[k];
                    if (bb <= 0.0 || u < std::exp(-2.0 * a * bb / dt) || xn <= c[k + 1])
                        hit = k + 1;
                }
                x = xn;
            }
            ++acc.first_hit[hit];
            if (hit == points && beta > 0.0) {
                acc.tail_keep += survival_prob_drifted(x - c[steps], beta);
                acc.tail_cap += survival_prob_drifted(x - cap, beta);
            }
        }
    });

    std::vector<std::int64_t> first_hit(points + 1, 0);
    double tail_keep = 0.0, tail_cap = 0.0;
    for (const auto& ch : chunks) {
        for (std::size_t k = 0; k <= points; ++k) first_hit[k] += ch.first_hit[k];
        tail_keep += ch.tail_keep;
        tail_cap += ch.tail_cap;
    }

    const double inv_p = 1.0 / static_cast<double>(mc_paths);
    CurveEstimate est;
    est.mc_paths = mc_paths;
    est.stderrs.resize(points);
    std::vector<double> v(points);
    std::int64_t cum = 0;
    for (std::size_t k = 0; k < points; ++k) {
        cum += first_hit[k];
        v[k] = static_cast<double>(cum) * inv_p;
        est.stderrs[k] = std::sqrt(std::max(v[k] * (1.0 - v[k]), 0.0) * inv_p);
        est.stderr_max = std::max(est.stderr_max, est.stderrs[k]);
    }
    for (std::size_t k = 0; k < points; ++k) v[k] = std::clamp(v[k], 0.0, 1.0);
    for (std::size_t k = 1; k < points; ++k) v[k] = std::max(v[k], v[k - 1]); // guard
    double at_horizon = v.back();
    if (beta > 0.0) {
        est.inf_lower = std::clamp(1.0 - tail_keep * inv_p, at_horizon, 1.0);
        est.inf_upper = std::clamp(1.0 - tail_cap * inv_p, est.inf_lower, 1.0);
    } else {
        // Without upward drift every path eventually reaches the barrier.
        est.inf_lower = 1.0;
        est.inf_upper = 1.0;
    }
    double terminal = std::clamp(0.5 * (est.inf_lower + est.inf_upper), at_horizon, 1.0);
    est.curve = LossCurve(model.grid, std::move(v), terminal);
    return est;
}

/** Picard iteration ell^{n+1} = Gamma[ell^n] from ell^0 == 0 with common
 *  random numbers across iterations; the iterates increase exactly
 *  sample-wise toward the minimal solution.  Stops when the sup-norm
 *  delta on the grid falls to tol, or after max_iters. */
inline std::pair<LossCurve, PicardReport> minimal_solution_picard(
    const MkvModel& model, int max_iters, double tol, std::int64_t mc_paths,
    const RngConfig& rng, int workers = 0) {
    if (max_iters < 1) throw std::invalid_argument("picard: needs max_iters >= 1");
    if (!(tol >= 0.0)) throw std::invalid_argument("picard: needs tol >= 0");

    PicardReport report;
    report.mc_paths = mc_paths;
    LossCurve current = LossCurve::zero(model.grid);
    for (int n = 0; n < max_iters; ++n) {
        CurveEstimate est = gamma_operator(current, model, mc_paths, rng, workers);
        double delta = 0.0;
        for (std::size_t k = 0; k < est.curve.values().size(); ++k)
            delta = std::max(delta, std::abs(est.curve.values()[k] - current.values()[k]));
        report.iterates.push_back(est.curve);
        report.sup_deltas.push_back(delta);
        report.mc_stderr_max = est.stderr_max;
        report.final_stderrs = est.stderrs;
        report.inf_lower = est.inf_lower;
        report.inf_upper = est.inf_upper;
        current = est.curve;
        if (delta <= tol) {
            report.converged = true;
            break;
        }
    }
    const auto& v = current.values();
    for (std::size_t k = 1; k < v.size(); ++k)
        report.max_jump = std::max(report.max_jump, v[k] - v[k - 1]);
    return {current, report};
}

/** One application of the regularized operator: the default mass by time
 *  t is 1 - E exp(-(1/eps) * trapezoid integral of the path's shortfall
 *  below the barrier G(ell)).  Soft counterpart of gamma_operator; with
 *  shared seeds it is dominated by it pointwise, path by path. */
inline CurveEstimate regularized_step(const LossCurve& ell, const RegularizedConfig& cfg,
                                      const MkvModel& model) {
    if (!(ell.grid() == model.grid))
        throw std::invalid_argument("regularized_step: curve must live on the model grid");
    if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("regularized_step: needs epsilon > 0");
    if (cfg.mc_paths < 1) throw std::invalid_argument("regularized_step: needs mc_paths >= 1");

    const std::size_t points = model.grid.size();
    const std::size_t steps = model.grid.count();
    const double dt = model.grid.dt;
    const double sqdt = std::sqrt(dt);
    const double beta = model.economy.beta;
    const std::vector<double> c = detail::barrier_on_grid(ell, model.loss);

    struct RegChunk {
        std::vector<double> exp_sum;
        std::vector<double> exp_sumsq;
    };
    const std::size_t n_chunks =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.mc_paths), 256);
    std::vector<RegChunk> chunks(n_chunks);
    parallel_chunks(static_cast<std::size_t>(cfg.mc_paths), n_chunks,
                    resolve_workers(cfg.workers), [&](std::size_t ci, std::size_t b, std::size_t e) {
        auto& acc = chunks[ci];
        acc.exp_sum.assign(points, 0.0);
        acc.exp_sumsq.assign(points, 0.0);
        for (std::size_t p = b; p < e; ++p) {
            Rng stream(cfg.master_seed, static_cast<std::uint64_t>(p), 0);
            double x = model.initial.sample_one(stream);
            double integral = 0.0;
            double factor = 1.0;
            acc.exp_sum[0] += 1.0;
            acc.exp_sumsq[0] += 1.0;
            for (std::size_t k = 0; k < steps; ++k) {
                double xi = stream.normal();
                stream.uniform(); // unused here; keeps coupling with gamma_operator
                double xn = x + beta * dt + sqdt * xi;
                double left = std::max(c[k] - x, 0.0);
                double right = std::max(c[k] - xn, 0.0);
                integral += 0.5 * dt * (left + right);
                factor = std::exp(-integral / cfg.epsilon);
                acc.exp_sum[k + 1] += factor;
                acc.exp_sumsq[k + 1] += factor * factor;
                x = xn;
            }
        }
    });

    std::vector<double> exp_sum(points, 0.0), exp_sumsq(points, 0.0);
    for (const auto& ch : chunks)
        for (std::size_t k = 0; k < points; ++k) {
            exp_sum[k] += ch.exp_sum[k];
            exp_sumsq[k] += ch.exp_sumsq[k];
        }

    const double np = static_cast<double>(cfg.mc_paths);
    CurveEstimate est;
    est.mc_paths = cfg.mc_paths;
    est.stderrs.resize(points);
    std::vector<double> v(points);
    for (std::size_t k = 0; k < points; ++k) {
        double mean = exp_sum[k] / np;
        v[k] = std::clamp(1.0 - mean, 0.0, 1.0);
        double var = cfg.mc_paths > 1
                         ? std::max(exp_sumsq[k] - np * mean * mean, 0.0) / (np - 1.0)
                         : 0.0;
        est.stderrs[k] = std::sqrt(var / np);
        est.stderr_max = std::max(est.stderr_max, est.stderrs[k]);
    }
    for (std::size_t k = 1; k < points; ++k) v[k] = std::max(v[k], v[k - 1]); // guard
    double terminal = v.back();
    est.inf_lower = terminal;
    est.inf_upper = 1.0;
    est.curve = LossCurve(model.grid, std::move(v), terminal);
    return est;
}

/** Picard iteration of the regularized operator from ell == 0.  Requires
 *  a Lipschitz loss function on all of [0, 1] (the logarithmic kind is
 *  rejected: its blow-up voids the contraction argument and its barrier
 *  is undefined at full default). */
inline std::pair<LossCurve, PicardReport> regularized_solve(const RegularizedConfig& cfg,
                                                            const MkvModel& model,
                                                            int max_iters, double tol) {
    if (!model.loss.lipschitz_on_unit())
        throw std::invalid_argument(
            "regularized_solve: loss function must be Lipschitz on [0, 1]");
    if (max_iters < 1) throw std::invalid_argument("regularized_solve: needs max_iters >= 1");
    if (!(tol >= 0.0)) throw std::invalid_argument("regularized_solve: needs tol >= 0");

    PicardReport report;
    report.mc_paths = cfg.mc_paths;
    LossCurve current = LossCurve::zero(model.grid);
    for (int n = 0; n < max_iters; ++n) {
        CurveEstimate est = regularized_step(current, cfg, model);
        double delta = 0.0;
        for (std::size_t k = 0; k < est.curve.values().size(); ++k)
            delta = std::max(delta, std::abs(est.curve.values()[k] - current.values()[k]));
        report.iterates.push_back(est.curve);
        report.sup_deltas.push_back(delta);
        report.mc_stderr_max = est.stderr_max;
        report.final_stderrs = est.stderrs;
        report.inf_lower = est.inf_lower;
        report.inf_upper = est.inf_upper;
        current = est.curve;
        if (delta <= tol) {
            report.converged = true;
            break;
        }
    }
    const auto& v = current.values();
    for (std::size_t k = 1; k < v.size(); ++k)
        report.max_jump = std::max(report.max_jump, v[k] - v[k - 1]);
    return {current, report};
}

struct EpsilonSweepResult {
    std::vector<double> epsilons;     ///< as given, strictly decreasing
    std::vector<LossCurve> solutions; ///< regularized solution per epsilon
    std::vector<bool> converged;
    std::vector<double> stderr_maxes; ///< final-iteration MC standard error per epsilon
    LossCurve reference;              ///< Picard minimal solution, same seeds
    double reference_stderr_max = 0.0;
    std::vector<double> gap_to_reference; ///< sup_k (reference - solution) per epsilon
    bool monotone = false;            ///< solutions nondecreasing as epsilon falls
    double max_violation = 0.0;       ///< worst pointwise decrease (0 when monotone)
    double max_reference_excess = 0.0; ///< worst pointwise (solution - reference)
};

/** Solves the regularized equation along a strictly decreasing epsilon
 *  list with shared seeds and a fixed iteration budget, so the solutions
 *  increase exactly sample-wise as epsilon falls, and compares them with
 *  the Picard minimal solution computed from the same paths. */
inline EpsilonSweepResult epsilon_sweep(const std::vector<double>& eps_list,
                                        const MkvModel& model, std::int64_t mc_paths,
                                        int iters, const RngConfig& rng, int workers = 0) {
    if (eps_list.empty()) throw std::invalid_argument("epsilon_sweep: needs epsilons");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0))
            throw std::invalid_argument("epsilon_sweep: epsilons must be positive");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
            throw std::invalid_argument("epsilon_sweep: epsilons must be strictly decreasing");
    }

    EpsilonSweepResult out;
    out.epsilons = eps_list;
    // Fixed budget, zero tolerance: every epsilon runs the same number of
    // iterations, which is what makes the cross-epsilon ordering exact.
    for (double eps : eps_list) {
        RegularizedConfig cfg;
        cfg.epsilon = eps;
        cfg.mc_paths = mc_paths;
        cfg.master_seed = rng.master_seed;
        cfg.workers = workers;
        auto [curve, report] = regularized_solve(cfg, model, iters, 0.0);
        out.solutions.push_back(curve);
        out.converged.push_back(report.sup_deltas.back() <= 5e-3);
        out.stderr_maxes.push_back(report.mc_stderr_max);
    }
    auto [ref, ref_report] = minimal_solution_picard(model, iters, 0.0, mc_paths, rng, workers);
    out.reference = ref;
    out.reference_stderr_max = ref_report.mc_stderr_max;

    out.monotone = true;
    for (std::size_t i = 0; i + 1 < out.solutions.size(); ++i) {
        const auto& lo = out.solutions[i].values();      // larger epsilon
        const auto& hi = out.solutions[i + 1].values();  // smaller epsilon
        for (std::size_t k = 0; k < lo.size(); ++k) {
            double drop = lo[k] - hi[k];
            if (drop > 0.0) {
                out.monotone = false;
                out.max_violation = std::max(out.max_violation, drop);
            }
        }
    }
    for (const auto& sol : out.solutions) {
        double gap = 0.0;
        for (std::size_t k = 0; k < sol.values().size(); ++k) {
            gap = std::max(gap, ref.values()[k] - sol.values()[k]);
            out.max_reference_excess =
                std::max(out.max_reference_excess, sol.values()[k] - ref.values()[k]);
        }
        out.gap_to_reference.push_back(gap);
    }
    return out;
}

} // namespace mfc
