// Acceptance suite: nine checks, one printed verdict line each, run at
// the scale the claims are stated at.  The process exits 0 only if all
// nine pass.  Everything is seeded, so a green run is reproducible
// bit-for-bit; expect a few minutes of wall time on one core.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "mfc/analytics.hpp"
#include "mfc/control.hpp"
#include "mfc/io.hpp"
#include "mfc/mkv.hpp"
#include "mfc/particle.hpp"

namespace {

using namespace mfc;
namespace fs = std::filesystem;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double x, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << x;
    return os.str();
}

// ---------------------------------------------------------------------------
// 1: closed-form kernel.  The survival function must solve its backward
// equation on an interior grid, vanish on the boundary, and agree at a
// long horizon with the complement of the never-hit probability.

Outcome criterion1() {
    const double h = 1e-3;
    double max_residual = 0.0;
    for (double beta : {-0.5, 0.0, 0.5, 1.0})
        for (double t : {0.2, 0.5, 1.0, 2.0})
            for (double x : {0.2, 0.5, 1.0, 2.0, 3.0}) {
                double pt = (psi(t + h, x, beta) - psi(t - h, x, beta)) / (2.0 * h);
                double px = (psi(t, x + h, beta) - psi(t, x - h, beta)) / (2.0 * h);
                double pxx =
                    (psi(t, x + h, beta) - 2.0 * psi(t, x, beta) + psi(t, x - h, beta)) /
                    (h * h);
                max_residual = std::max(max_residual, std::abs(pt - beta * px - 0.5 * pxx));
            }

    bool boundary_exact = true;
    for (double t : {0.1, 0.5, 1.0, 5.0})
        for (double beta : {-0.5, 0.0, 0.5, 1.0})
            if (psi(t, 0.0, beta) != 0.0) boundary_exact = false;

    double max_tail_gap = 0.0;
    for (double beta : {0.1, 0.5, 1.0}) {
        double never = survival_prob_drifted(1.0, beta);
        max_tail_gap = std::max(max_tail_gap,
                                std::abs(first_passage_cdf(1e6, 1.0, beta) - (1.0 - never)));
    }

    Outcome out;
    out.pass = max_residual <= 1e-4 && boundary_exact && max_tail_gap <= 1e-6;
    out.detail = "max PDE residual " + num(max_residual, 3) + " (<= 1e-4); boundary " +
                 (boundary_exact ? "exact" : "VIOLATED") + "; long-horizon CDF gap " +
                 num(max_tail_gap, 3) + " (<= 1e-6)";
    return out;
}

// ---------------------------------------------------------------------------
// 2: the cascade resolver must return the minimal fixed point, checked
// against exhaustive enumeration on a thousand random small systems.

std::vector<std::vector<int>> all_cascade_fixed_points(const std::vector<double>& levels,
                                                       const std::vector<std::uint8_t>& alive,
                                                       double prior_loss,
                                                       const std::vector<int>& hits,
                                                       const LossFunction& G) {
    const int n = static_cast<int>(levels.size());
    const int d0 = static_cast<int>(std::lround(prior_loss * n));
    const double g_prior = G(prior_loss);
    std::vector<int> others;
    for (int i = 0; i < n; ++i)
        if (alive[i] && std::find(hits.begin(), hits.end(), i) == hits.end())
            others.push_back(i);

    std::vector<std::vector<int>> fixed_points;
    const int n_others = static_cast<int>(others.size());
    for (int mask = 0; mask < (1 << n_others); ++mask) {
        int extra = 0;
        for (int j = 0; j < n_others; ++j)
            if (mask & (1 << j)) ++extra;
        int total_dead = d0 + static_cast<int>(hits.size()) + extra;
        // Log-type losses blow up at full default; a wipeout forces everyone.
        double inc = (total_dead == n && G.kind() == LossFunction::Kind::Log)
                         ? std::numeric_limits<double>::infinity()
                         : G(static_cast<double>(total_dead) / n) - g_prior;
        bool is_fixed = true;
        for (int j = 0; j < n_others && is_fixed; ++j) {
            bool in_set = (mask & (1 << j)) != 0;
            if (in_set && levels[others[j]] > inc) is_fixed = false;
            if (!in_set && levels[others[j]] <= inc) is_fixed = false;
        }
        if (!is_fixed) continue;
        std::vector<int> set = hits;
        for (int j = 0; j < n_others; ++j)
            if (mask & (1 << j)) set.push_back(others[j]);
        std::sort(set.begin(), set.end());
        fixed_points.push_back(std::move(set));
    }
    return fixed_points;
}

Outcome criterion2() {
    int mismatches = 0;
    const int trials = 1000;
    for (std::uint64_t trial = 0; trial < trials; ++trial) {
        Rng rng(88001, trial, 0);
        const int n = 2 + static_cast<int>(rng.uniform() * 7); // 2..8
        std::vector<double> levels(n);
        std::vector<std::uint8_t> alive(n, 1);
        int d0 = 0;
        for (int i = 0; i < n; ++i) {
            levels[i] = 0.05 + 1.5 * rng.uniform();
            if (rng.uniform() < 0.2 && d0 < n - 2) {
                alive[i] = 0;
                levels[i] = -1.0;
                ++d0;
            }
        }
        std::vector<int> alive_idx;
        for (int i = 0; i < n; ++i)
            if (alive[i]) alive_idx.push_back(i);
        int n_hits = 1 + static_cast<int>(rng.uniform() * alive_idx.size() * 0.49);
        std::vector<int> hits(alive_idx.begin(), alive_idx.begin() + n_hits);
        for (int i : hits) levels[i] = -0.01;

        LossFunction G = LossFunction::linear(0.0);
        switch (trial % 3) {
        case 0: G = LossFunction::linear(3.0 * rng.uniform()); break;
        case 1: G = LossFunction::log_loss(rng.uniform()); break;
        case 2: {
            double y1 = rng.uniform(), y2 = y1 + rng.uniform();
            G = LossFunction::tabulated({{0.0, 0.0}, {0.5, y1}, {1.0, y2}});
            break;
        }
        }
        double prior_loss = static_cast<double>(d0) / n;

        auto fixed_points = all_cascade_fixed_points(levels, alive, prior_loss, hits, G);
        auto minimal = *std::min_element(
            fixed_points.begin(), fixed_points.end(),
            [](const auto& a, const auto& b) { return a.size() < b.size(); });

        auto lv = levels;
        auto al = alive;
        auto res = cascade_fixpoint(lv, al, prior_loss, hits, G);
        std::vector<int> got = res.newly_defaulted;
        std::sort(got.begin(), got.end());
        if (got != minimal) ++mismatches;
    }
    Outcome out;
    out.pass = mismatches == 0;
    out.detail = std::to_string(trials) + " random systems (N <= 8), " +
                 std::to_string(mismatches) + " mismatches against exhaustive enumeration";
    return out;
}

// ---------------------------------------------------------------------------
// 3: a single driftless participant must default by t=1 with the
// textbook first-passage probability.

Outcome criterion3() {
    SimConfig cfg;
    cfg.n_particles = 1;
    cfg.economy = EconomyParams(0.0, 0.0);
    cfg.loss = LossFunction::linear(0.0);
    cfg.initial = InitialDistribution::dirac(1.0);
    cfg.grid = TimeGrid{1.0, 1e-3};
    cfg.rng.master_seed = 30001;
    cfg.strategy = ControlStrategy::zero();
    cfg.replications = 100000;
    RunResult run = simulate(cfg);

    const double target = 2.0 * (1.0 - norm_cdf(1.0)); // 0.31731...
    const double p_hat = run.mean_loss.back();
    const double se = run.loss_stderr.back();
    Outcome out;
    out.pass = std::abs(p_hat - target) <= 3.0 * se;
    out.detail = "P(default by 1) = " + num(p_hat, 5) + " vs " + num(target, 5) +
                 ", |diff| = " + num(std::abs(p_hat - target), 3) + " <= 3 SE = " +
                 num(3.0 * se, 3);
    return out;
}

// ---------------------------------------------------------------------------
// 4: negative economy.  No strategy grows the survive-forever count with
// N, and every upper estimate stays under the -2/beta budget bound.

Outcome criterion4() {
    const double beta = -0.5;
    const double bound = budget_bound_negative(beta); // 4
    Outcome out;
    out.pass = true;
    std::string parts;
    const ControlStrategy strategies[] = {ControlStrategy::zero(), ControlStrategy::uniform(),
                                          ControlStrategy::threshold(1)};
    const char* names[] = {"zero", "uniform", "threshold"};
    for (int s = 0; s < 3; ++s) {
        ScalingExperiment ex;
        ex.regime = Regime::Negative;
        ex.n_grid = {100, 1000, 10000};
        ex.economy = EconomyParams(beta, 1.0);
        ex.loss = LossFunction::linear(1.0);
        ex.initial = InitialDistribution::dirac(1.0);
        ex.grid = TimeGrid{2.0, 0.01};
        ex.strategy = strategies[s];
        ex.replications = 200;
        ex.rng.master_seed = 40001;
        ScalingTable table = run_scaling(ex);

        double worst_upper = 0.0;
        for (const auto& row : table.rows) worst_upper = std::max(worst_upper, row.s_upper);
        bool ok = worst_upper < bound && std::abs(table.slope_mid) <= 0.1;
        out.pass = out.pass && ok;
        if (s) parts += "; ";
        parts += std::string(names[s]) + ": max upper " + num(worst_upper, 3) + " < " +
                 num(bound, 3) + ", slope " + num(table.slope_mid, 2);
    }
    out.detail = parts;
    return out;
}

// ---------------------------------------------------------------------------
// 5: zero drift.  The threshold strategy with m = round(1.26 sqrt(N))
// saves on the order of sqrt(N) participants: log-log slope near 1/2 and
// midpoints under 1.2x the driftless benchmark constant 4/sqrt(pi).

Outcome criterion5() {
    ScalingExperiment ex;
    ex.regime = Regime::Neutral;
    ex.n_grid = {1000, 4000, 16000, 64000};
    ex.economy = EconomyParams(0.0, 1.0);
    ex.loss = LossFunction::linear(1.0);
    ex.initial = InitialDistribution::dirac(1.0);
    ex.grid = TimeGrid{2.0, 0.01};
    ex.strategy = ControlStrategy::threshold(1);
    ex.replications = 100;
    ex.theta = 1.26;
    ex.rng.master_seed = 50001;
    ScalingTable table = run_scaling(ex);

    const double cap = 1.2 * table.ur_upper_coeff; // 1.2 * 4/sqrt(pi)
    double worst_ratio = 0.0;
    for (const auto& row : table.rows)
        worst_ratio = std::max(worst_ratio, row.s_mid / std::sqrt(row.n_particles));

    Outcome out;
    out.pass = table.slope_mid >= 0.4 && table.slope_mid <= 0.6 && worst_ratio < cap;
    out.detail = "slope " + num(table.slope_mid, 3) + " in [0.4, 0.6]; max S_mid/sqrt(N) " +
                 num(worst_ratio, 3) + " < " + num(cap, 3) +
                 "; reported lower constant c_alpha = " + num(table.c_alpha, 3);
    return out;
}

// ---------------------------------------------------------------------------
// 6: positive economy without contagion.  The saved fraction matches the
// no-aid limit 1 - e^{-2 beta z} for both the zero and uniform
// strategies, and the budget moves the fraction by at most 2 beta T / N.

Outcome criterion6() {
    const double beta = 0.5, horizon = 5.0;
    const double fraction_limit = survival_prob_drifted(1.0, beta); // 1 - e^{-1}

    ScalingTable tables[2];
    const ControlStrategy strategies[] = {ControlStrategy::zero(), ControlStrategy::uniform()};
    for (int s = 0; s < 2; ++s) {
        ScalingExperiment ex;
        ex.regime = Regime::Positive;
        ex.n_grid = {1000, 10000};
        ex.economy = EconomyParams(beta, 0.0);
        ex.loss = LossFunction::linear(0.0);
        ex.initial = InitialDistribution::dirac(1.0);
        ex.grid = TimeGrid{horizon, 0.01};
        ex.strategy = strategies[s];
        ex.replications = 300;
        ex.rng.master_seed = 60002; // shared seed: common random numbers
        tables[s] = run_scaling(ex);
    }

    Outcome out;
    out.pass = true;
    std::string parts;
    for (std::size_t r = 0; r < tables[0].rows.size(); ++r) {
        const auto& z = tables[0].rows[r];
        const auto& u = tables[1].rows[r];
        const double n = static_cast<double>(z.n_particles);
        bool zero_ok = std::abs(z.s_mid / n - fraction_limit) <= 3.0 * z.stderr_mid / n;
        bool unif_ok = std::abs(u.s_mid / n - fraction_limit) <= 3.0 * u.stderr_mid / n;
        double diff = std::abs(u.s_mid - z.s_mid) / n;
        double sigma_diff =
            3.0 * std::sqrt(z.stderr_mid * z.stderr_mid + u.stderr_mid * u.stderr_mid) / n;
        double budget_cap = 2.0 * beta * horizon / n;
        bool diff_ok = diff <= std::max(sigma_diff, budget_cap);
        out.pass = out.pass && zero_ok && unif_ok && diff_ok;
        if (r) parts += "; ";
        parts += "N=" + std::to_string(z.n_particles) + ": fractions " + num(z.s_mid / n, 4) +
                 "/" + num(u.s_mid / n, 4) + " vs " + num(fraction_limit, 4) + ", |diff| " +
                 num(diff, 2) + " <= " + num(std::max(sigma_diff, budget_cap), 2);
    }
    out.detail = parts;
    return out;
}

// ---------------------------------------------------------------------------
// 7: the particle system approaches the minimal mean-field solution:
// the sup gap over ten checkpoints shrinks at every tenfold increase in N.

Outcome criterion7() {
    MkvModel model;
    model.economy = EconomyParams(0.5, 0.5);
    model.loss = LossFunction::linear(0.5);
    model.initial = InitialDistribution::dirac(1.0);
    model.grid = TimeGrid{2.0, 0.01};

    auto [limit, report] =
        minimal_solution_picard(model, 100, 2e-5, 1000000, RngConfig{70001}, 0);

    std::vector<std::size_t> checkpoints;
    for (int k = 1; k <= 10; ++k) checkpoints.push_back(static_cast<std::size_t>(20 * k));

    std::vector<double> gaps;
    for (int n : {100, 1000, 10000}) {
        SimConfig cfg;
        cfg.n_particles = n;
        cfg.economy = model.economy;
        cfg.loss = model.loss;
        cfg.initial = model.initial;
        cfg.grid = model.grid;
        cfg.rng.master_seed = 70002;
        cfg.strategy = ControlStrategy::zero();
        cfg.replications = 200;
        RunResult run = simulate(cfg);
        double gap = 0.0;
        for (std::size_t k : checkpoints)
            gap = std::max(gap, std::abs(run.mean_loss[k] - limit.values()[k]));
        gaps.push_back(gap);
    }

    Outcome out;
    out.pass = report.converged && gaps[0] > gaps[1] && gaps[1] > gaps[2];
    out.detail = "sup gap to the limit: N=100: " + num(gaps[0], 3) + " > N=1000: " +
                 num(gaps[1], 3) + " > N=10000: " + num(gaps[2], 3) +
                 (report.converged ? "" : "; LIMIT SOLVE DID NOT CONVERGE");
    return out;
}

// ---------------------------------------------------------------------------
// 8: the softened solver.  Hard-threshold Picard iterates grow exactly
// under shared seeds; the epsilon sweep increases monotonically toward
// the minimal solution while never crossing it; and with no contagion a
// tiny epsilon reproduces the closed-form default curve.

Outcome criterion8() {
    MkvModel model;
    model.economy = EconomyParams(0.2, 0.8);
    model.loss = LossFunction::linear(0.8);
    model.initial = InitialDistribution::dirac(1.0);
    model.grid = TimeGrid{1.0, 0.01};
    const std::int64_t paths = 20000;
    const RngConfig rng{80001};

    auto [ref, ref_report] = minimal_solution_picard(model, 8, 0.0, paths, rng, 0);
    bool iterates_monotone = true;
    for (std::size_t i = 0; i + 1 < ref_report.iterates.size(); ++i) {
        const auto& lo = ref_report.iterates[i].values();
        const auto& hi = ref_report.iterates[i + 1].values();
        for (std::size_t k = 0; k < lo.size(); ++k)
            if (hi[k] < lo[k]) iterates_monotone = false;
    }

    EpsilonSweepResult sweep =
        epsilon_sweep({0.5, 0.2, 0.1, 0.05}, model, paths, 8, rng, 0);
    bool sweep_ok = sweep.monotone && sweep.max_violation == 0.0 &&
                    sweep.max_reference_excess == 0.0 &&
                    sweep.gap_to_reference.front() >= sweep.gap_to_reference.back();

    // No contagion: the softened fixed point is one operator application.
    // Note: the soft-kill bias decays like eps^(1/3) (occupation-area small-ball),
    // so at eps=1e-3 the curve sits ~0.05 below the hard-kill closed form — far
    // outside any honest Monte Carlo error bar. A Crank-Nicolson solve of the
    // Feynman-Kac PDE reproduces this solver's curve to <1 SE, so the gap is a
    // property of the softening itself, not of the estimator.
    MkvModel flat;
    flat.economy = EconomyParams(0.0, 0.0);
    flat.loss = LossFunction::linear(0.0);
    flat.initial = InitialDistribution::dirac(1.0);
    flat.grid = TimeGrid{1.0, 5e-5};
    RegularizedConfig rc;
    rc.epsilon = 1e-3;
    rc.mc_paths = paths;
    rc.master_seed = 80002;
    auto [soft, soft_report] = regularized_solve(rc, flat, 1, 0.0);
    double worst_excess = 0.0; // how far past the 3-SE allowance the curve strays
    for (std::size_t k = 0; k < flat.grid.size(); ++k) {
        double target = first_passage_cdf(flat.grid.t(k), 1.0, 0.0);
        double allow = 3.0 * soft_report.final_stderrs[k] +
                       3.0 / static_cast<double>(paths); // zero-count resolution floor
        worst_excess =
            std::max(worst_excess, std::abs(soft.values()[k] - target) - allow);
    }
    bool closed_form_ok = worst_excess <= 0.0;

    Outcome out;
    out.pass = iterates_monotone && sweep_ok && closed_form_ok;
    out.detail = std::string("Picard iterates nondecreasing: ") +
                 (iterates_monotone ? "exact" : "VIOLATED") +
                 "; sweep monotone/below-limit: " + (sweep_ok ? "exact" : "VIOLATED") +
                 "; eps=0.001 vs closed form: worst excess over 3 SE " +
                 num(worst_excess, 3) + " <= 0";
    return out;
}

// ---------------------------------------------------------------------------
// 9: repeating any run with the same seed and worker count reproduces
// the CSV artifacts byte for byte.

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Outcome criterion9() {
    fs::path base = fs::temp_directory_path() / "mfc-acceptance-determinism";
    fs::remove_all(base);
    fs::create_directories(base / "a");
    fs::create_directories(base / "b");

    MkvModel model;
    model.economy = EconomyParams(0.5, 0.5);
    model.loss = LossFunction::linear(0.5);
    model.initial = InitialDistribution::dirac(1.0);
    model.grid = TimeGrid{2.0, 0.01};

    for (const char* leg : {"a", "b"}) {
        SimConfig cfg;
        cfg.n_particles = 500;
        cfg.economy = model.economy;
        cfg.loss = model.loss;
        cfg.initial = model.initial;
        cfg.grid = model.grid;
        cfg.rng.master_seed = 90001;
        cfg.strategy = ControlStrategy::threshold(10);
        cfg.replications = 20;
        RunResult run = simulate(cfg);
        write_curve_csv((base / leg / "curve.csv").string(), run.grid, run.mean_loss,
                        run.loss_stderr);
        write_replications_csv((base / leg / "reps.csv").string(), run);

        auto [curve, report] =
            minimal_solution_picard(model, 10, 1e-4, 20000, RngConfig{90002}, 0);
        write_curve_csv((base / leg / "solve.csv").string(), model.grid, curve.values(),
                        report.final_stderrs);
    }

    bool same = slurp(base / "a" / "curve.csv") == slurp(base / "b" / "curve.csv") &&
                slurp(base / "a" / "reps.csv") == slurp(base / "b" / "reps.csv") &&
                slurp(base / "a" / "solve.csv") == slurp(base / "b" / "solve.csv");
    fs::remove_all(base);

    Outcome out;
    out.pass = same;
    out.detail = same ? "repeated simulate and solve runs byte-identical (3 files)"
                      : "byte mismatch between repeated runs";
    return out;
}

} // namespace

int main() {
    using Clock = std::chrono::steady_clock;
    Outcome (*criteria[])() = {criterion1, criterion2, criterion3, criterion4, criterion5,
                               criterion6, criterion7, criterion8, criterion9};
    bool all = true;
    for (int i = 0; i < 9; ++i) {
        auto t0 = Clock::now();
        Outcome out = criteria[i]();
        double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        all = all && out.pass;
        std::cout << "criterion " << (i + 1) << ": " << (out.pass ? "PASS" : "FAIL") << " — "
                  << out.detail << " [" << num(secs, 3) << "s]" << std::endl;
    }
    std::cout << (all ? "acceptance: all 9 criteria passed"
                      : "acceptance: at least one criterion FAILED")
              << std::endl;
    return all ? 0 : 1;
}
