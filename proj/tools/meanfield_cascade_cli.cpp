// meanfield-cascade: experiment runner for the cascade toolkit.
//
//   meanfield-cascade <command> [--config file.json] [--set key=value]...
//                     [--seed u64] [--workers n] [--out dir]
//
// Commands: simulate, solve-mkv, solve-reg, sweep-eps, scaling, analytics.
// Configuration is a JSON tree merged from built-in defaults, the
// optional config file, convenience flags, and dotted --set overrides,
// in that order.  Unknown or ill-typed keys are rejected with the full
// dotted key name and exit code 2; runtime failures exit with 3.  Every
// run writes a manifest.json embedding the fully resolved configuration,
// seed, and worker count, alongside CSV data files.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfc/analytics.hpp"
#include "mfc/control.hpp"
#include "mfc/io.hpp"
#include "mfc/mkv.hpp"
#include "mfc/particle.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CliOptions {
    std::string config_path;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string out;
    std::string regime;                 // scaling convenience
    std::optional<double> beta;         // convenience for model.beta
    std::string n_list;                 // scaling convenience: comma-separated N grid
};

// ---------------------------------------------------------------------------
// Config assembly

json default_config() {
    json cfg;
    cfg["model"] = {
        {"loss", {{"kind", "linear"}, {"alpha", 0.0}}},
        {"initial", {{"kind", "dirac"}, {"z", 1.0}, {"shift", 0.0}}},
        {"horizon", 1.0},
        {"dt", 0.01},
    };
    cfg["simulate"] = {
        {"n_particles", 1000},
        {"replications", 100},
        {"strategy", {{"kind", "zero"}}},
        {"bridge_correction", true},
        {"record_rep_curves", false},
    };
    cfg["solver"] = {{"mc_paths", 100000}, {"max_iters", 50}, {"tol", 5e-3}};
    cfg["regularized"] = {{"epsilon", 0.1}, {"epsilons", json::array({0.5, 0.2, 0.1, 0.05})}};
    cfg["scaling"] = {
        {"regime", nullptr},
        {"n_grid", json::array()},
        {"replications", 100},
        {"strategy", {{"kind", "threshold"}}},
        {"theta", 0.0},
    };
    cfg["analytics"] = {{"alpha", 1.0}, {"z", 1.0}};
    cfg["seed"] = 1;
    cfg["workers"] = 0;
    cfg["out"] = "";
    return cfg;
}

void deep_merge(json& base, const json& overlay) {
    if (!overlay.is_object() || !base.is_object()) {
        base = overlay;
        return;
    }
    for (auto it = overlay.begin(); it != overlay.end(); ++it) {
        if (base.contains(it.key()))
            deep_merge(base[it.key()], it.value());
        else
            base[it.key()] = it.value();
    }
}

void apply_set(json& tree, const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("--set expects key=value, got: " + kv);
    std::string key = kv.substr(0, eq);
    std::string raw = kv.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw; // bare words become strings
    }
    json* node = &tree;
    std::size_t pos = 0;
    while (true) {
        auto dot = key.find('.', pos);
        std::string part = key.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (part.empty()) throw ConfigError("--set key has an empty segment: " + key);
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        if (!node->contains(part) || !(*node)[part].is_object()) (*node)[part] = json::object();
        node = &(*node)[part];
        pos = dot + 1;
    }
}

// ---------------------------------------------------------------------------
// Validation: unknown keys first (full dotted name), then presence/types.

void expect_keys(const json& obj, const std::string& prefix,
                 const std::set<std::string>& allowed) {
    if (!obj.is_object())
        throw ConfigError("config key " + prefix.substr(0, prefix.size() - 1) +
                          ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown config key: " + prefix + it.key());
}

double need_number(const json& obj, const std::string& dotted, const std::string& leaf) {
    if (!obj.contains(leaf)) throw ConfigError("missing required key: " + dotted);
    const json& v = obj.at(leaf);
    if (!v.is_number()) throw ConfigError("config key " + dotted + ": expected a number");
    return v.get<double>();
}

double number_or(const json& obj, const std::string& dotted, const std::string& leaf,
                 double fallback) {
    if (!obj.contains(leaf) || obj.at(leaf).is_null()) return fallback;
    if (!obj.at(leaf).is_number())
        throw ConfigError("config key " + dotted + ": expected a number");
    return obj.at(leaf).get<double>();
}

std::int64_t int_or(const json& obj, const std::string& dotted, const std::string& leaf,
                    std::int64_t fallback) {
    if (!obj.contains(leaf) || obj.at(leaf).is_null()) return fallback;
    if (!obj.at(leaf).is_number_integer())
        throw ConfigError("config key " + dotted + ": expected an integer");
    return obj.at(leaf).get<std::int64_t>();
}

bool bool_or(const json& obj, const std::string& dotted, const std::string& leaf,
             bool fallback) {
    if (!obj.contains(leaf) || obj.at(leaf).is_null()) return fallback;
    if (!obj.at(leaf).is_boolean())
        throw ConfigError("config key " + dotted + ": expected a boolean");
    return obj.at(leaf).get<bool>();
}

std::string string_or(const json& obj, const std::string& dotted, const std::string& leaf,
                      const std::string& fallback) {
    if (!obj.contains(leaf) || obj.at(leaf).is_null()) return fallback;
    if (!obj.at(leaf).is_string())
        throw ConfigError("config key " + dotted + ": expected a string");
    return obj.at(leaf).get<std::string>();
}

// ---------------------------------------------------------------------------
// Domain object builders

mfc::LossFunction build_loss(const json& model) {
    const json& loss = model.contains("loss") ? model.at("loss") : json::object();
    expect_keys(loss, "model.loss.", {"kind", "alpha", "margin", "knots"});
    std::string kind = string_or(loss, "model.loss.kind", "kind", "linear");
    try {
        if (kind == "linear")
            return mfc::LossFunction::linear(number_or(loss, "model.loss.alpha", "alpha", 0.0));
        if (kind == "log")
            return mfc::LossFunction::log_loss(
                number_or(loss, "model.loss.alpha", "alpha", 0.0),
                number_or(loss, "model.loss.margin", "margin", 1e-6));
        if (kind == "tabulated") {
            if (!loss.contains("knots") || !loss.at("knots").is_array())
                throw ConfigError("missing required key: model.loss.knots");
            std::vector<std::pair<double, double>> knots;
            for (const auto& k : loss.at("knots")) {
                if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number())
                    throw ConfigError(
                        "config key model.loss.knots: expected pairs [x, value]");
                knots.emplace_back(k[0].get<double>(), k[1].get<double>());
            }
            return mfc::LossFunction::tabulated(std::move(knots));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config key model.loss: " + std::string(e.what()));
    }
    throw ConfigError("config key model.loss.kind: expected linear, log, or tabulated");
}

mfc::InitialDistribution build_initial(const json& model) {
    const json& ini = model.contains("initial") ? model.at("initial") : json::object();
    expect_keys(ini, "model.initial.", {"kind", "z", "a", "b", "quantiles", "shift"});
    std::string kind = string_or(ini, "model.initial.kind", "kind", "dirac");
    double shift = number_or(ini, "model.initial.shift", "shift", 0.0);
    try {
        if (kind == "dirac")
            return mfc::InitialDistribution::dirac(number_or(ini, "model.initial.z", "z", 1.0),
                                                   shift);
        if (kind == "uniform")
            return mfc::InitialDistribution::uniform(need_number(ini, "model.initial.a", "a"),
                                                     need_number(ini, "model.initial.b", "b"),
                                                     shift);
        if (kind == "tabulated") {
            if (!ini.contains("quantiles") || !ini.at("quantiles").is_array())
                throw ConfigError("missing required key: model.initial.quantiles");
            std::vector<std::pair<double, double>> q;
            for (const auto& k : ini.at("quantiles")) {
                if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number())
                    throw ConfigError(
                        "config key model.initial.quantiles: expected pairs [u, value]");
                q.emplace_back(k[0].get<double>(), k[1].get<double>());
            }
            return mfc::InitialDistribution::tabulated(std::move(q), shift);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config key model.initial: " + std::string(e.what()));
    }
    throw ConfigError("config key model.initial.kind: expected dirac, uniform, or tabulated");
}

mfc::ControlStrategy build_strategy(const json& parent, const std::string& prefix) {
    const json& st = parent.contains("strategy") ? parent.at("strategy") : json::object();
    expect_keys(st, prefix + ".", {"kind", "m", "target_level", "rate"});
    std::string kind = string_or(st, prefix + ".kind", "kind", "zero");
    try {
        if (kind == "zero") return mfc::ControlStrategy::zero();
        if (kind == "uniform") return mfc::ControlStrategy::uniform();
        if (kind == "threshold")
            return mfc::ControlStrategy::threshold(
                static_cast<int>(int_or(st, prefix + ".m", "m", 1)),
                number_or(st, prefix + ".target_level", "target_level", 0.0),
                number_or(st, prefix + ".rate", "rate", 0.0));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config key " + prefix + ": " + std::string(e.what()));
    }
    throw ConfigError("config key " + prefix + ".kind: expected zero, uniform, or threshold");
}

struct ModelBundle {
    mfc::EconomyParams economy;
    mfc::LossFunction loss = mfc::LossFunction::linear(0.0);
    mfc::InitialDistribution initial = mfc::InitialDistribution::dirac(1.0);
    mfc::TimeGrid grid{1.0, 0.01};
};

ModelBundle build_model(const json& cfg) {
    const json& model = cfg.at("model");
    expect_keys(model, "model.", {"beta", "loss", "initial", "horizon", "dt"});
    ModelBundle out;
    double beta = need_number(model, "model.beta", "beta");
    out.loss = build_loss(model);
    out.initial = build_initial(model);
    double alpha_meta =
        out.loss.kind() == mfc::LossFunction::Kind::Linear ? out.loss.alpha() : 0.0;
    out.economy = mfc::EconomyParams(beta, alpha_meta);
    try {
        out.grid = mfc::TimeGrid{need_number(model, "model.horizon", "horizon"),
                                 need_number(model, "model.dt", "dt")};
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config key model.horizon/model.dt: " + std::string(e.what()));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Output plumbing

struct RunContext {
    std::string command;
    json cfg;
    fs::path out_dir;
    std::uint64_t seed = 1;
    int workers = 0;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    fs::path file(const std::string& name) {
        outputs.push_back(name);
        return out_dir / name;
    }

    void write_manifest(json summary) {
        json manifest;
        manifest["command"] = command;
        manifest["version"] = "1.0.0";
        manifest["config"] = cfg;
        manifest["seed"] = seed;
        manifest["workers"] = mfc::resolve_workers(workers);
        manifest["wall_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        manifest["outputs"] = outputs;
        manifest["summary"] = std::move(summary);
        std::ofstream out(out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write manifest.json");
        out << manifest.dump(2) << '\n';
    }
};

json curve_summary(const mfc::PicardReport& report) {
    json s;
    s["converged"] = report.converged;
    s["iterations"] = report.sup_deltas.size();
    s["sup_deltas"] = report.sup_deltas;
    s["mc_paths"] = report.mc_paths;
    s["mc_stderr_max"] = report.mc_stderr_max;
    s["max_jump"] = report.max_jump;
    s["value_at_infinity"] = {{"lower", report.inf_lower}, {"upper", report.inf_upper}};
    return s;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_simulate(RunContext& ctx) {
    ModelBundle model = build_model(ctx.cfg);
    const json& sim = ctx.cfg.at("simulate");
    expect_keys(sim, "simulate.",
                {"n_particles", "replications", "strategy", "bridge_correction",
                 "record_rep_curves"});
    mfc::SimConfig cfg;
    cfg.n_particles = static_cast<int>(int_or(sim, "simulate.n_particles", "n_particles", 1000));
    cfg.replications =
        static_cast<int>(int_or(sim, "simulate.replications", "replications", 100));
    cfg.economy = model.economy;
    cfg.loss = model.loss;
    cfg.initial = model.initial;
    cfg.grid = model.grid;
    cfg.rng.master_seed = ctx.seed;
    cfg.strategy = build_strategy(sim, "simulate.strategy");
    cfg.bridge_correction = bool_or(sim, "simulate.bridge_correction", "bridge_correction", true);
    cfg.record_rep_curves =
        bool_or(sim, "simulate.record_rep_curves", "record_rep_curves", false);
    cfg.workers = ctx.workers;
    if (cfg.n_particles < 1) throw ConfigError("config key simulate.n_particles: must be >= 1");
    if (cfg.replications < 1) throw ConfigError("config key simulate.replications: must be >= 1");

    mfc::RunResult run = mfc::simulate(cfg);
    mfc::write_curve_csv(ctx.file("curve.csv").string(), run.grid, run.mean_loss,
                         run.loss_stderr);
    mfc::write_replications_csv(ctx.file("reps.csv").string(), run);

    double alive = 0.0, lo = 0.0, mid = 0.0, hi = 0.0;
    for (const auto& r : run.reps) {
        alive += r.alive_at_horizon;
        lo += r.effective.lower;
        mid += r.effective.midpoint;
        hi += r.effective.upper;
    }
    double nr = static_cast<double>(run.reps.size());
    json s;
    s["n_particles"] = run.n_particles;
    s["replications"] = run.reps.size();
    s["mean_loss_at_horizon"] = run.mean_loss.back();
    s["mean_alive_at_horizon"] = alive / nr;
    s["survivors_at_infinity"] = {{"lower", lo / nr},
                                  {"mid", mid / nr},
                                  {"upper", hi / nr},
                                  {"stderr_mid", run.stderr_effective_midpoint()}};
    ctx.write_manifest(std::move(s));
    return 0;
}

int cmd_solve_mkv(RunContext& ctx) {
    ModelBundle model = build_model(ctx.cfg);
    const json& sol = ctx.cfg.at("solver");
    expect_keys(sol, "solver.", {"mc_paths", "max_iters", "tol"});
    mfc::MkvModel mkv{model.economy, model.loss, model.initial, model.grid};
    auto [curve, report] = mfc::minimal_solution_picard(
        mkv, static_cast<int>(int_or(sol, "solver.max_iters", "max_iters", 50)),
        number_or(sol, "solver.tol", "tol", 5e-3),
        int_or(sol, "solver.mc_paths", "mc_paths", 100000), mfc::RngConfig{ctx.seed},
        ctx.workers);
    mfc::write_curve_csv(ctx.file("curve.csv").string(), model.grid, curve.values(),
                         report.final_stderrs);
    ctx.write_manifest(curve_summary(report));
    return 0;
}

int cmd_solve_reg(RunContext& ctx) {
    ModelBundle model = build_model(ctx.cfg);
    const json& sol = ctx.cfg.at("solver");
    expect_keys(sol, "solver.", {"mc_paths", "max_iters", "tol"});
    const json& reg = ctx.cfg.at("regularized");
    expect_keys(reg, "regularized.", {"epsilon", "epsilons"});
    mfc::MkvModel mkv{model.economy, model.loss, model.initial, model.grid};
    mfc::RegularizedConfig rc;
    rc.epsilon = number_or(reg, "regularized.epsilon", "epsilon", 0.1);
    rc.mc_paths = int_or(sol, "solver.mc_paths", "mc_paths", 100000);
    rc.master_seed = ctx.seed;
    rc.workers = ctx.workers;
    auto [curve, report] = mfc::regularized_solve(
        rc, mkv, static_cast<int>(int_or(sol, "solver.max_iters", "max_iters", 50)),
        number_or(sol, "solver.tol", "tol", 5e-3));
    mfc::write_curve_csv(ctx.file("curve.csv").string(), model.grid, curve.values(),
                         report.final_stderrs);
    json s = curve_summary(report);
    s["epsilon"] = rc.epsilon;
    ctx.write_manifest(std::move(s));
    return 0;
}

int cmd_sweep_eps(RunContext& ctx) {
    ModelBundle model = build_model(ctx.cfg);
    const json& sol = ctx.cfg.at("solver");
    expect_keys(sol, "solver.", {"mc_paths", "max_iters", "tol"});
    const json& reg = ctx.cfg.at("regularized");
    expect_keys(reg, "regularized.", {"epsilon", "epsilons"});
    if (!reg.contains("epsilons") || !reg.at("epsilons").is_array() ||
        reg.at("epsilons").empty())
        throw ConfigError("missing required key: regularized.epsilons");
    std::vector<double> eps;
    for (const auto& e : reg.at("epsilons")) {
        if (!e.is_number())
            throw ConfigError("config key regularized.epsilons: expected numbers");
        eps.push_back(e.get<double>());
    }
    mfc::MkvModel mkv{model.economy, model.loss, model.initial, model.grid};
    mfc::EpsilonSweepResult sweep;
    try {
        sweep = mfc::epsilon_sweep(
            eps, mkv, int_or(sol, "solver.mc_paths", "mc_paths", 100000),
            static_cast<int>(int_or(sol, "solver.max_iters", "max_iters", 50)),
            mfc::RngConfig{ctx.seed}, ctx.workers);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config key regularized.epsilons: " + std::string(e.what()));
    }

    for (std::size_t i = 0; i < sweep.solutions.size(); ++i) {
        std::vector<double> se(model.grid.size(), sweep.stderr_maxes[i]);
        mfc::write_curve_csv(ctx.file("curve_eps" + std::to_string(i) + ".csv").string(),
                             model.grid, sweep.solutions[i].values(), se);
    }
    std::vector<double> ref_se(model.grid.size(), sweep.reference_stderr_max);
    mfc::write_curve_csv(ctx.file("reference.csv").string(), model.grid,
                         sweep.reference.values(), ref_se);

    json s;
    s["epsilons"] = sweep.epsilons;
    s["monotone"] = sweep.monotone;
    s["max_violation"] = sweep.max_violation;
    s["max_reference_excess"] = sweep.max_reference_excess;
    s["gap_to_reference"] = sweep.gap_to_reference;
    s["converged"] = sweep.converged;
    s["stderr_maxes"] = sweep.stderr_maxes;
    s["reference_stderr_max"] = sweep.reference_stderr_max;
    ctx.write_manifest(std::move(s));
    return 0;
}

int cmd_scaling(RunContext& ctx) {
    ModelBundle model = build_model(ctx.cfg);
    const json& sc = ctx.cfg.at("scaling");
    expect_keys(sc, "scaling.", {"regime", "n_grid", "replications", "strategy", "theta"});

    mfc::ScalingExperiment ex;
    std::string regime = string_or(sc, "scaling.regime", "regime", "");
    if (regime == "negative")
        ex.regime = mfc::Regime::Negative;
    else if (regime == "neutral")
        ex.regime = mfc::Regime::Neutral;
    else if (regime == "positive")
        ex.regime = mfc::Regime::Positive;
    else if (regime.empty())
        throw ConfigError("missing required key: scaling.regime");
    else
        throw ConfigError(
            "config key scaling.regime: expected negative, neutral, or positive");

    if (!sc.contains("n_grid") || !sc.at("n_grid").is_array() || sc.at("n_grid").empty())
        throw ConfigError("missing required key: scaling.n_grid");
    for (const auto& n : sc.at("n_grid")) {
        if (!n.is_number_integer())
            throw ConfigError("config key scaling.n_grid: expected integers");
        ex.n_grid.push_back(n.get<int>());
    }
    ex.economy = model.economy;
    ex.loss = model.loss;
    ex.initial = model.initial;
    ex.grid = model.grid;
    ex.strategy = build_strategy(sc, "scaling.strategy");
    ex.replications =
        static_cast<int>(int_or(sc, "scaling.replications", "replications", 100));
    ex.theta = number_or(sc, "scaling.theta", "theta", 0.0);
    ex.rng.master_seed = ctx.seed;
    ex.workers = ctx.workers;

    mfc::ScalingTable table;
    try {
        table = mfc::run_scaling(ex);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config key scaling: " + std::string(e.what()));
    }
    mfc::write_scaling_csv(ctx.file("scaling.csv").string(), table);
    mfc::write_scaling_reference_csv(ctx.file("scaling_references.csv").string(), table);

    json rows = json::array();
    for (const auto& r : table.rows)
        rows.push_back({{"N", r.n_particles},
                        {"m", r.m_used},
                        {"S_mid", r.s_mid},
                        {"half_width", r.half_width},
                        {"mean_loss_at_horizon", r.mean_loss_at_horizon}});
    json s;
    s["regime"] = mfc::regime_name(table.regime);
    s["slope_mid"] = table.slope_mid;
    s["slope_upper"] = table.slope_upper;
    s["theta_used"] = table.theta_used;
    s["c_alpha"] = table.c_alpha;
    s["ur_upper_coeff"] = table.ur_upper_coeff;
    s["rows"] = std::move(rows);
    ctx.write_manifest(std::move(s));
    return 0;
}

int cmd_analytics(RunContext& ctx) {
    ModelBundle model = build_model(ctx.cfg);
    const json& an = ctx.cfg.at("analytics");
    expect_keys(an, "analytics.", {"alpha", "z"});
    double alpha = number_or(an, "analytics.alpha", "alpha", 1.0);
    double z = number_or(an, "analytics.z", "z", 1.0);
    if (alpha < 0.0) throw ConfigError("config key analytics.alpha: must be >= 0");
    if (!(z > 0.0)) throw ConfigError("config key analytics.z: must be > 0");
    double beta = model.economy.beta;

    std::vector<std::pair<std::string, double>> rows;
    rows.emplace_back("beta", beta);
    rows.emplace_back("alpha", alpha);
    rows.emplace_back("z", z);
    if (beta > 0.0) {
        rows.emplace_back("survival_prob", mfc::survival_prob_drifted(z, beta));
        rows.emplace_back("limit_survival_fraction",
                          mfc::limit_survival_fraction(beta, model.initial));
    }
    if (beta < 0.0) rows.emplace_back("budget_bound", mfc::budget_bound_negative(beta));
    if (alpha > 0.0) {
        auto sc = mfc::scaling_constants(alpha);
        rows.emplace_back("eps_used", sc.eps);
        rows.emplace_back("delta_used", sc.delta);
        rows.emplace_back("t_alpha_eps", sc.t_ae);
        rows.emplace_back("p_alpha_eps_delta", sc.p_aed);
        rows.emplace_back("rho_alpha", sc.rho);
        rows.emplace_back("theta_star", sc.theta_star);
        rows.emplace_back("theta_value", sc.theta_value);
        rows.emplace_back("c_alpha", sc.c_alpha);
        rows.emplace_back("ur_upper_coeff", sc.ur_upper);
    }
    mfc::write_constants_csv(ctx.file("constants.csv").string(), rows);

    std::vector<double> curve(model.grid.size()), zeros(model.grid.size(), 0.0);
    for (std::size_t k = 0; k < curve.size(); ++k)
        curve[k] = mfc::first_passage_cdf(model.grid.t(k), z, beta);
    mfc::write_curve_csv(ctx.file("first_passage.csv").string(), model.grid, curve, zeros);

    json s;
    json consts = json::object();
    for (const auto& [name, value] : rows) consts[name] = value;
    s["constants"] = std::move(consts);
    ctx.write_manifest(std::move(s));
    return 0;
}

// ---------------------------------------------------------------------------

std::vector<int> parse_n_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            std::size_t used = 0;
            int v = std::stoi(part, &used);
            if (used != part.size()) throw std::invalid_argument(part);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ConfigError("config key scaling.n_grid: cannot parse N value '" + part +
                              "'");
        }
    }
    if (out.empty()) throw ConfigError("config key scaling.n_grid: empty N list");
    return out;
}

json assemble_config(const std::string& command, const CliOptions& opts) {
    json cfg = default_config();
    if (!opts.config_path.empty()) {
        std::ifstream in(opts.config_path);
        if (!in) throw ConfigError("cannot read config file: " + opts.config_path);
        json file_cfg;
        try {
            file_cfg = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config file " + opts.config_path + ": " + e.what());
        }
        if (!file_cfg.is_object())
            throw ConfigError("config file " + opts.config_path + ": expected a JSON object");
        deep_merge(cfg, file_cfg);
    }
    if (opts.beta) cfg["model"]["beta"] = *opts.beta;
    if (!opts.regime.empty()) cfg["scaling"]["regime"] = opts.regime;
    if (!opts.n_list.empty()) cfg["scaling"]["n_grid"] = parse_n_list(opts.n_list);
    for (const auto& kv : opts.sets) apply_set(cfg, kv);
    if (opts.seed) cfg["seed"] = *opts.seed;
    if (opts.workers) cfg["workers"] = *opts.workers;
    if (!opts.out.empty()) cfg["out"] = opts.out;

    expect_keys(cfg, "",
                {"model", "simulate", "solver", "regularized", "scaling", "analytics", "seed",
                 "workers", "out"});
    if (!cfg.at("seed").is_number_integer() || cfg.at("seed").get<std::int64_t>() < 0)
        throw ConfigError("config key seed: expected a nonnegative integer");
    if (!cfg.at("workers").is_number_integer() || cfg.at("workers").get<std::int64_t>() < 0)
        throw ConfigError("config key workers: expected a nonnegative integer");
    if (!cfg.at("out").is_string()) throw ConfigError("config key out: expected a string");
    (void)command;
    return cfg;
}

int run_command(const std::string& command, const CliOptions& opts) {
    json cfg = assemble_config(command, opts);

    RunContext ctx;
    ctx.command = command;
    ctx.cfg = cfg;
    ctx.seed = cfg.at("seed").get<std::uint64_t>();
    ctx.workers = static_cast<int>(cfg.at("workers").get<std::int64_t>());
    std::string out = cfg.at("out").get<std::string>();
    ctx.out_dir = out.empty() ? fs::path("out-" + command) : fs::path(out);
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory: " + ctx.out_dir.string());

    if (command == "simulate") return cmd_simulate(ctx);
    if (command == "solve-mkv") return cmd_solve_mkv(ctx);
    if (command == "solve-reg") return cmd_solve_reg(ctx);
    if (command == "sweep-eps") return cmd_sweep_eps(ctx);
    if (command == "scaling") return cmd_scaling(ctx);
    if (command == "analytics") return cmd_analytics(ctx);
    throw std::logic_error("unreachable command dispatch");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean-field cascade toolkit: particle simulation, limit solvers, and "
                 "scaling experiments"};
    app.require_subcommand(1);

    CliOptions opts;
    std::vector<CLI::App*> subs;
    const std::pair<const char*, const char*> commands[] = {
        {"simulate", "Run the N-participant cascade simulator"},
        {"solve-mkv", "Picard iteration toward the minimal mean-field solution"},
        {"solve-reg", "Solve the epsilon-regularized equation"},
        {"sweep-eps", "Descending-epsilon sweep against the minimal solution"},
        {"scaling", "Survivor scaling across system sizes"},
        {"analytics", "Closed-form values and scaling constants"},
    };
    for (const auto& [name, desc] : commands) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", opts.config_path, "JSON config file");
        sub->add_option("--set", opts.sets, "Override a config key: dotted.path=value");
        sub->add_option("--seed", opts.seed, "Master seed (u64)");
        sub->add_option("--workers", opts.workers,
                        "Worker threads (0: MFC_WORKERS env, then hardware)");
        sub->add_option("--out", opts.out, "Output directory");
        sub->add_option("--beta", opts.beta, "Shortcut for model.beta");
        if (std::string(name) == "scaling") {
            sub->add_option("--regime", opts.regime, "Shortcut for scaling.regime");
            sub->add_option("--N", opts.n_list,
                            "Shortcut for scaling.n_grid (comma-separated)");
        }
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2; // bad flags are configuration errors
    }

    std::string command = app.get_subcommands().front()->get_name();
    try {
        return run_command(command, opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        // library-level rejections originate from config values here
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 3;
    }
}
