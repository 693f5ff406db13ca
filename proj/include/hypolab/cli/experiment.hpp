#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypolab/cli/config.hpp"
#include "hypolab/cli/report.hpp"
#include "hypolab/corrector.hpp"
#include "hypolab/discretize.hpp"
#include "hypolab/evolve.hpp"
#include "hypolab/sampler.hpp"
#include "hypolab/tuning.hpp"

namespace hypolab::cli {

using json = nlohmann::ordered_json;

enum class Command { gap, tune, verify, evolve, sample, sweep, all };

inline Command parse_command(std::string_view s) {
    if (s == "gap") return Command::gap;
    if (s == "tune") return Command::tune;
    if (s == "verify") return Command::verify;
    if (s == "evolve") return Command::evolve;
    if (s == "sample") return Command::sample;
    if (s == "sweep") return Command::sweep;
    if (s == "all") return Command::all;
    throw ConfigError("unknown subcommand '" + std::string(s) + "'");
}

inline std::string_view to_string(Command c) {
    constexpr const char* names[] = {"gap", "tune", "verify", "evolve", "sample", "sweep", "all"};
    return names[static_cast<int>(c)];
}

/// Compact label for file names: up to six significant digits.
inline std::string gamma_label(double g) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", g);
    return buf;
}

/// Slow rate of the first-moment ODE x' = v, v' = -a x - γ v.
inline double moment_ode_rate(double a, double gamma) {
    const double disc = gamma * gamma - 4.0 * a;
    return disc >= 0.0 ? 0.5 * (gamma - std::sqrt(disc)) : 0.5 * gamma;
}

namespace detail {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Lazily built state shared by the stages of one run.
class Context {
public:
    explicit Context(const ExperimentConfig& cfg)
        : cfg_(cfg), potential_(cfg.potential()), model_(make_gibbs_model(potential_)) {}

    const ExperimentConfig& cfg() const { return cfg_; }
    const Potential& potential() const { return potential_; }
    const GibbsModel& model() const { return model_; }

    double half_width() const { return cfg_.L_dom.value_or(auto_half_width(potential_)); }

    const OperatorSet& ops() {
        if (!ops_) ops_ = build_operator_set(model_, half_width(), cfg_.N_x, cfg_.N_v);
        return *ops_;
    }
    const Corrector& corrector() {
        if (!corr_) corr_ = build_corrector(ops());
        return *corr_;
    }
    const TuningResult& tuning() {
        if (!tuning_) tuning_ = tune({ops().gap, model_.K, cfg_.gamma, cfg_.eps});
        return *tuning_;
    }
    /// Tuned at ε*; decay-theorem verdicts apply only at (γ*, ε*).
    bool theorem_regime() {
        const auto& t = tuning();
        return t.at_gamma_star && std::abs(t.eps - t.eps_star) <= 1e-12 * t.eps_star;
    }

private:
    ExperimentConfig cfg_;
    Potential potential_;
    GibbsModel model_;
    std::optional<OperatorSet> ops_;
    std::optional<Corrector> corr_;
    std::optional<TuningResult> tuning_;
};

inline json tuning_json(const TuningResult& t) {
    return {{"m", t.m},
            {"K", t.K},
            {"gamma", t.gamma},
            {"eps", t.eps},
            {"zeta", t.zeta},
            {"a", t.a},
            {"eps_star", t.eps_star},
            {"eps_max", t.eps_max},
            {"gamma_star", t.gamma_star},
            {"x_star", t.x_star},
            {"lambda_coer", t.lambda_coer},
            {"Lambda", t.Lambda},
            {"prefactor", t.prefactor},
            {"phi_x_star", phi(t.x_star, t.m, t.K)},
            {"phi_grid_ok", t.phi_grid_ok}};
}

inline void stage_gap(Context& ctx, RunReport& rep) {
    const OperatorSet& ops = ctx.ops();
    json s{{"potential", ctx.potential().name()},
           {"params", ctx.potential().params()},
           {"L_dom", ops.grid.half_width},
           {"N_x", ops.nx()},
           {"N_v", ops.nv()},
           {"h", ops.grid.spacing},
           {"m_h", ops.gap},
           {"K", ctx.model().K}};
    std::vector<double> head;
    for (int i = 0; i < std::min<int>(6, static_cast<int>(ops.overdamped_spectrum.size())); ++i)
        head.push_back(ops.overdamped_spectrum(i));
    s["spectrum_head"] = head;
    if (ctx.model().analytic_m) {
        const double a = *ctx.model().analytic_m;
        s["analytic_m"] = a;
        const double rel = std::abs(ops.gap - a) / a;
        rep.verdicts.push_back(verdict("gap.matches_analytic", rel <= 0.01, 0.01 - rel,
                                       "|m_h - m| / m = " + format_double(rel)));
    } else {
        s["analytic_m"] = nullptr;
        rep.verdicts.push_back(skipped("gap.matches_analytic", "no closed-form gap"));
    }
    rep.sections["gap"] = s;
}

inline void stage_tune(Context& ctx, RunReport& rep) {
    const auto& c = ctx.cfg();
    const TuningResult t = (c.m && c.K) ? tune({*c.m, *c.K, c.gamma, c.eps}) : ctx.tuning();
    json s = tuning_json(t);
    s["source"] = (c.m && c.K) ? "config" : "grid";
    const auto d = dissipation_matrix(t.gamma, t.eps, t.m, t.K);
    s["dissipation_matrix"] = {{"M", {{d.M(0, 0), d.M(0, 1)}, {d.M(1, 0), d.M(1, 1)}}},
                               {"det", d.det},
                               {"trace", d.trace},
                               {"admissible", d.admissible}};
    const auto rc = check_ratio_consistency(t.m, t.K);
    s["ratio_consistency"] = {{"det_over_trace", rc.det_over_trace},
                              {"lambda_min", rc.lambda_min},
                              {"lambda_coer", rc.lambda_coer}};
    rep.sections["tuning"] = s;

    const double cap = 2.0 * t.gamma / t.a;
    rep.verdicts.push_back(verdict("tune.eps_ordering", 0.0 < t.eps_star && t.eps_star < t.eps_max && t.eps_max < cap,
                                   cap - t.eps_max, "0 < eps* < eps_max < 2 gamma / a"));
    rep.verdicts.push_back(verdict("tune.eps_star_below_half_sqrt_m", t.eps_star <= std::sqrt(t.m) / 2.0,
                                   std::sqrt(t.m) / 2.0 - t.eps_star));
    rep.verdicts.push_back(verdict("tune.x_star_maximizes_phi", t.phi_grid_ok));
    rep.verdicts.push_back(verdict("tune.det_over_trace_ge_lambda_coer", rc.det_trace_dominates,
                                   rc.det_over_trace - rc.lambda_coer));
    rep.verdicts.push_back(verdict("tune.lambda_min_ge_det_over_trace", rc.min_dominates,
                                   rc.lambda_min - rc.det_over_trace));
    rep.verdicts.push_back(verdict("tune.admissible", d.admissible, d.det));
}

inline void stage_verify(Context& ctx, RunReport& rep) {
    const OperatorSet& ops = ctx.ops();
    const StructureReport st = check_structure(ops, false);
    json checks = json::array();
    for (const auto& c : st.checks)
        checks.push_back({{"name", c.name}, {"residual", c.residual}, {"exact", c.exact}, {"passed", c.passed}});
    rep.sections["structure"] = {{"checks", checks},
                                 {"lift_residual", st.lift_residual},
                                 {"lift_form_residual", st.lift_form_residual},
                                 {"fourth_moment_residual", st.fourth_moment_residual}};
    double worst = 0.0;
    for (const auto& c : st.checks)
        if (c.exact) worst = std::max(worst, c.residual);
    rep.verdicts.push_back(verdict("verify.structure_exact", st.all_exact_passed(), structure_tolerance - worst,
                                   "largest exact residual " + format_double(worst)));

    const Corrector& corr = ctx.corrector();
    const SpMat& a = corr.matrix();
    const double inv_left = max_abs(SpMat(SpMat(ops.velocity_projector * a) - a));
    const double inv_right = max_abs(SpMat(a * ops.velocity_projector));
    {
        // A L_a Π_v against (m - L_o)^{-1}(-L_o) Π_v, both on mode 0
        const SpMat prod = a * SpMat(ops.liouville * ops.velocity_projector);
        const int nx = ops.nx();
        const Eigen::MatrixXd lo = Eigen::MatrixXd(ops.overdamped);
        const Eigen::MatrixXd target =
            (ops.gap * Eigen::MatrixXd::Identity(nx, nx) - lo).llt().solve(-lo);
        Eigen::MatrixXd block = -target;
        double rest = 0.0;
        for (int k = 0; k < prod.outerSize(); ++k)
            for (SpMat::InnerIterator it(prod, k); it; ++it) {
                if (it.row() < nx && it.col() < nx) block(it.row(), it.col()) += it.value();
                else rest = std::max(rest, std::abs(it.value()));
            }
        const double r = block.cwiseAbs().maxCoeff();
        const double tol = 1e-10 * max_abs(ops.overdamped);
        rep.verdicts.push_back(verdict("verify.corrector_lift_identity", std::max(r, rest) <= tol,
                                       tol - std::max(r, rest)));
    }
    rep.verdicts.push_back(verdict("verify.corrector_range", std::max(inv_left, inv_right) <= 1e-12,
                                   1e-12 - std::max(inv_left, inv_right), "Pi_v A = A and A Pi_v = 0"));

    DissipationReport dr = verify_corrector_bounds(corr);
    const TuningResult& t = ctx.tuning();
    const MinEigResult me = dissipation_form_min_eig(corr, t.eps, t.gamma);
    attach_min_eig(dr, me);
    rep.sections["dissipation"] = {{"m_h", dr.m},
                                   {"K", dr.K},
                                   {"norm_A", dr.norm_A},
                                   {"norm_LaA", dr.norm_LaA},
                                   {"norm_AmLaF", dr.norm_AmLaF},
                                   {"bound_A", dr.bound_A},
                                   {"bound_LaA", dr.bound_LaA},
                                   {"bound_AmLaF", dr.bound_AmLaF},
                                   {"ratio_A", dr.ratio_A},
                                   {"ratio_LaA", dr.ratio_LaA},
                                   {"ratio_AmLaF", dr.ratio_AmLaF},
                                   {"gamma", t.gamma},
                                   {"eps", t.eps},
                                   {"min_eig_Q", dr.min_eig_Q},
                                   {"lambda_coer", dr.lambda_coer},
                                   {"slack", dr.slack}};
    rep.verdicts.push_back(verdict("verify.bound_A", dr.ratio_A <= 1.05, 1.05 - dr.ratio_A));
    rep.verdicts.push_back(verdict("verify.bound_LaA", dr.ratio_LaA <= 1.05, 1.05 - dr.ratio_LaA));
    rep.verdicts.push_back(verdict("verify.bound_AmLaF", dr.ratio_AmLaF <= 1.05, 1.05 - dr.ratio_AmLaF));
    if (ctx.theorem_regime())
        rep.verdicts.push_back(verdict("verify.coercivity", dr.min_eig_Q >= 0.95 * dr.lambda_coer,
                                       dr.min_eig_Q / dr.lambda_coer - 0.95));
    else
        rep.verdicts.push_back(skipped("verify.coercivity", "lambda_coer applies at (gamma*, eps*) only"));

    if (ctx.cfg().alpha) {
        const Corrector ca = build_corrector(ops, *ctx.cfg().alpha);
        rep.sections["dissipation"]["alpha"] = *ctx.cfg().alpha;
        rep.sections["dissipation"]["norm_A_alpha"] = operator_norm(ca.matrix());
    }

    json boch = json::array();
    bool all_hold = true;
    for (const auto& tf : standard_test_functions(ops.grid)) {
        const BochnerResult b = bochner_residual(ops, tf.values);
        all_hold = all_hold && b.inequality_holds;
        boch.push_back({{"function", tf.name},
                        {"residual", b.residual},
                        {"lo_sq", b.lo_sq},
                        {"hess_sq", b.hess_sq},
                        {"curvature", b.curvature},
                        {"grad_sq", b.grad_sq},
                        {"inequality_holds", b.inequality_holds},
                        {"strict_inequality_holds", b.strict_inequality_holds}});
    }
    rep.sections["bochner"] = boch;
    rep.verdicts.push_back(verdict("verify.bochner_inequality", all_hold));
}

inline std::string decay_file(const Context& ctx, double gamma, InitialKind k, bool several) {
    std::string f = "decay_" + ctx.potential().name() + "_" + gamma_label(gamma);
    if (several) f += "_" + std::string(to_string(k));
    return f + ".csv";
}

inline void stage_evolve(Context& ctx, RunReport& rep) {
    const auto& cfg = ctx.cfg();
    const OperatorSet& ops = ctx.ops();
    const Corrector& corr = ctx.corrector();
    const TuningResult& t = ctx.tuning();
    const double dt = cfg.evolve_dt.value_or(0.1 / t.gamma);
    const double t_end = cfg.t_end_factor / t.Lambda;
    const bool theorem = ctx.theorem_regime();

    const SlowestMode slow = generator_slowest_mode(ops, t.gamma);
    json runs = json::array();
    for (const InitialKind k : cfg.f0) {
        const std::string tag = std::string(to_string(k));
        const Eigen::VectorXd f0 = initial_state(ops, k, cfg.seed);
        const DecayTrace tr = integrate(ops, corr, f0, t.gamma, {t.eps, t.Lambda, t.prefactor}, t_end, dt);
        const DecayVerdict dv = verify_decay_bound(tr);
        const LyapunovCheck lc = lyapunov_derivative_check(tr);
        const TraceProperties tp = check_trace_properties(tr);
        std::optional<double> rate;
        if (k != InitialKind::zero) rate = estimate_rate(tr, cfg.rate_window);

        if (cfg.write_csv)
            rep.tables.push_back({decay_file(ctx, t.gamma, k, cfg.f0.size() > 1),
                                  {"t", "norm", "lyap", "diss", "bound", "mean"},
                                  {tr.times, tr.norm, tr.lyap, tr.diss, tr.bound, tr.mean}});
        runs.push_back({{"f0", tag},
                        {"samples", tr.size()},
                        {"dt", dt},
                        {"t_end", t_end},
                        {"fitted_rate", rate ? json(*rate) : json(nullptr)},
                        {"min_margin", dv.min_margin},
                        {"lyapunov_residual", lc.max_residual},
                        {"lyapunov_worst_increase", lc.worst_increase},
                        {"mean_drift", tp.max_mean_drift},
                        {"final_norm", tr.norm.back()}});

        const std::string p = "evolve." + tag + ".";
        rep.verdicts.push_back(verdict(p + "mean_conserved", tp.max_mean_drift <= 1e-10, 1e-10 - tp.max_mean_drift));
        rep.verdicts.push_back(verdict(p + "norm_nonincreasing", tp.norm_nonincreasing));
        if (theorem) {
            rep.verdicts.push_back(verdict(p + "decay_bound", dv.holds, dv.min_margin));
            rep.verdicts.push_back(verdict(p + "lyapunov_nonincreasing", lc.nonincreasing, -lc.worst_increase));
            rep.verdicts.push_back(verdict(p + "gronwall", tp.gronwall));
            if (rate)
                rep.verdicts.push_back(verdict(p + "rate_ge_Lambda", *rate >= t.Lambda * (1.0 - 1e-6),
                                               *rate - t.Lambda));
            else
                rep.verdicts.push_back(skipped(p + "rate_ge_Lambda", "zero state"));
        } else {
            for (const char* n : {"decay_bound", "lyapunov_nonincreasing", "gronwall", "rate_ge_Lambda"})
                rep.verdicts.push_back(skipped(p + n, "bound applies at (gamma*, eps*) only"));
        }
        if (rate && slow.converged) {
            const double rel = std::abs(*rate - slow.rate) / slow.rate;
            rep.verdicts.push_back(verdict(p + "rate_matches_generator", rel <= 0.05, 0.05 - rel));
        } else {
            rep.verdicts.push_back(skipped(p + "rate_matches_generator",
                                           rate ? "slowest mode did not converge" : "zero state"));
        }
    }
    rep.sections["evolve"] = {{"gamma", t.gamma},
                              {"eps", t.eps},
                              {"Lambda", t.Lambda},
                              {"generator_slowest_rate", slow.rate},
                              {"generator_slowest_converged", slow.converged},
                              {"runs", runs}};
}

inline SdeConfig sde_config(Context& ctx, double gamma, int steps) {
    const auto& c = ctx.cfg();
    SdeConfig s;
    s.potential = ctx.potential();
    s.d = c.sde_d;
    s.particles = c.sde_particles;
    s.dt = c.sde_dt;
    s.steps = steps;
    s.record_every = c.sde_record_every;
    s.gamma = gamma;
    s.seed = c.seed;
    s.observables = c.sde_observables;
    s.x0 = c.sde_init_shift;
    s.threads = c.sde_threads;
    return s;
}

/// γ used by the sampler: explicit sde.gamma, else tuning.gamma, else
/// γ* from the closed form at the discrete gap.
inline double sampler_gamma(Context& ctx) {
    if (ctx.cfg().sde_gamma) return *ctx.cfg().sde_gamma;
    return ctx.tuning().gamma;
}

inline void stage_sample(Context& ctx, RunReport& rep) {
    const double gamma = sampler_gamma(ctx);
    SdeConfig s = sde_config(ctx, gamma, ctx.cfg().sde_steps);
    if (std::find(s.observables.begin(), s.observables.end(), Observable::x) == s.observables.end())
        s.observables.insert(s.observables.begin(), Observable::x);
    s.validate();
    const EnsembleTrace tr = run_ensemble(s);

    if (ctx.cfg().write_csv) {
        CsvTable t{"sample_" + ctx.potential().name() + "_" + gamma_label(gamma) + ".csv", {"t"}, {tr.times}};
        for (std::size_t j = 0; j < tr.observables.size(); ++j) {
            const std::string o(to_string(tr.observables[j]));
            t.header.push_back(o + "_mean");
            t.header.push_back(o + "_stderr");
            t.columns.push_back(tr.mean[j]);
            t.columns.push_back(tr.stderr_[j]);
        }
        rep.tables.push_back(std::move(t));
    }
    json sec{{"gamma", gamma}, {"particles", s.particles}, {"dt", s.dt}, {"steps", s.steps}, {"d", s.d},
             {"seed", s.seed}, {"samples", tr.times.size()}, {"diverged", tr.diverged}};
    if (tr.diverged) {
        sec["divergence"] = {{"coordinate", tr.divergence_coordinate}, {"message", tr.divergence_message}};
        rep.sections["sample"] = sec;
        rep.verdicts.push_back(verdict("sample.no_divergence", false, {}, tr.divergence_message));
        rep.numerical_failure = "SDE divergence: " + tr.divergence_message;
        return;
    }
    rep.verdicts.push_back(verdict("sample.no_divergence", true));

    json eq = json::object();
    for (const Observable o : {Observable::v2, Observable::x2, Observable::H}) {
        if (std::find(tr.observables.begin(), tr.observables.end(), o) == tr.observables.end()) continue;
        const std::size_t j = tr.column(o);
        const double ref = equilibrium_mean(o, s.potential, s.d);
        const double mu = tr.mean[j].back(), se = tr.stderr_[j].back();
        const std::string name(to_string(o));
        eq[name] = {{"mean", mu}, {"stderr", se}, {"reference", ref}};
        if (o == Observable::H) {
            rep.verdicts.push_back(verdict("sample.energy_finite", std::isfinite(mu)));
            continue;
        }
        const double z = std::abs(mu - ref) / se;
        rep.verdicts.push_back(verdict("sample." + name + "_equilibrium", z <= 3.0, 3.0 - z,
                                       "|mean - ref| / stderr = " + format_double(z)));
    }
    sec["equilibrium"] = eq;

    try {
        const std::size_t j = tr.column(Observable::x);
        const ObservableDecay dec = fit_observable_decay(tr.times, tr.mean[j], tr.stderr_[j], 0.0);
        sec["decay"] = {{"observable", "x"}, {"rate", dec.rate}, {"oscillatory", dec.oscillatory},
                        {"points", dec.points}, {"init_shift", s.x0}};
        if (s.potential.kind() == PotentialKind::quadratic) {
            const double oracle = moment_ode_rate(s.potential.params()[0], gamma);
            const double rel = std::abs(dec.rate - oracle) / oracle;
            sec["decay"]["oracle_rate"] = oracle;
            rep.verdicts.push_back(verdict("sample.first_moment_rate", rel <= 0.15, 0.15 - rel,
                                           "oracle " + format_double(oracle)));
        } else {
            rep.verdicts.push_back(skipped("sample.first_moment_rate", "no closed-form moment oracle"));
        }
    } catch (const InsufficientSignalError& e) {
        sec["decay"] = {{"error", e.what()}};
        rep.verdicts.push_back(skipped("sample.first_moment_rate", e.what()));
    }
    sec["final_state"] = {{"x_mean", tr.x_mean}, {"x_var", tr.x_var}, {"v_mean", tr.v_mean}, {"v_var", tr.v_var}};
    rep.sections["sample"] = sec;
}

inline void stage_sweep(Context& ctx, RunReport& rep) {
    const auto& cfg = ctx.cfg();
    const bool quad = ctx.potential().kind() == PotentialKind::quadratic;
    const double curv = ctx.potential().params()[0];
    std::vector<double> gammas = cfg.sweep_gammas, rates, oracle;
    json points = json::array();
    const double lambda = ctx.tuning().Lambda;
    auto measure = [&](double g) {
        if (cfg.sweep_mode == "sample") {
            SdeConfig s = sde_config(ctx, g, cfg.sweep_steps);
            s.observables = {Observable::x};
            try {
                return estimate_observable_decay(s, cfg.sde_init_shift).rate;
            } catch (const InsufficientSignalError&) {
                return std::nan("");
            }
        }
        const OperatorSet& ops = ctx.ops();
        const Eigen::VectorXd f0 = initial_state(ops, InitialKind::random, cfg.seed);
        const auto tr = integrate(ops, f0, g, cfg.t_end_factor / lambda, 0.1 / g);
        return estimate_rate(tr, cfg.rate_window);
    };
    for (const double g : gammas) {
        const double r = measure(g);
        rates.push_back(r);
        json p{{"gamma", g}, {"rate", std::isfinite(r) ? json(r) : json(nullptr)}};
        if (quad && cfg.sweep_mode == "sample") {
            oracle.push_back(moment_ode_rate(curv, g));
            p["oracle_rate"] = oracle.back();
        }
        points.push_back(p);
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < rates.size(); ++i)
        if (std::isfinite(rates[i]) && (!std::isfinite(rates[best]) || rates[i] > rates[best])) best = i;
    const double gamma_star = ctx.tuning().gamma_star;
    rep.sections["sweep"] = {{"mode", cfg.sweep_mode}, {"points", points}, {"argmax_gamma", gammas[best]},
                             {"gamma_star", gamma_star}, {"Lambda", lambda}};
    if (cfg.write_csv) {
        CsvTable t{"sweep_" + ctx.potential().name() + ".csv", {"gamma", "rate"}, {gammas, rates}};
        if (!oracle.empty()) {
            t.header.push_back("oracle_rate");
            t.columns.push_back(oracle);
        }
        rep.tables.push_back(std::move(t));
    }
    if (quad && cfg.sweep_mode == "sample") {
        const double critical = 2.0 * std::sqrt(curv);
        bool on_grid = false;
        for (double g : gammas) on_grid = on_grid || std::abs(g - critical) < 1e-12;
        if (on_grid)
            rep.verdicts.push_back(verdict("sweep.argmax_at_critical_damping",
                                           std::abs(gammas[best] - critical) < 1e-12, {},
                                           "argmax gamma " + format_double(gammas[best])));
        else
            rep.verdicts.push_back(skipped("sweep.argmax_at_critical_damping", "critical gamma not on grid"));
    }
    double tuned = std::nan("");
    for (std::size_t i = 0; i < gammas.size(); ++i)
        if (std::abs(gammas[i] - gamma_star) <= 1e-9 * gamma_star) tuned = rates[i];
    if (!std::isfinite(tuned) && !(cfg.sweep_mode == "sample" && !(gamma_star * cfg.sde_dt < 1.0)))
        tuned = measure(gamma_star);
    rep.sections["sweep"]["tuned_rate"] = std::isfinite(tuned) ? json(tuned) : json(nullptr);
    if (std::isfinite(tuned))
        rep.verdicts.push_back(verdict("sweep.tuned_rate_ge_Lambda", tuned >= lambda, tuned - lambda));
    else
        rep.verdicts.push_back(skipped("sweep.tuned_rate_ge_Lambda", "no rate at gamma*"));
}

}  // namespace detail

/// Runs one subcommand.
inline RunReport run_experiment(Command cmd, const ExperimentConfig& cfg) {
    validate(cfg);
    RunReport rep;
    rep.command = std::string(to_string(cmd));
    rep.config = cfg;
    detail::Context ctx(cfg);
    const detail::Stopwatch total;
    auto stage = [&](const char* name, auto&& fn) {
        const detail::Stopwatch w;
        fn(ctx, rep);
        rep.timings[name] = w.seconds();
    };
    switch (cmd) {
    case Command::gap: stage("gap", detail::stage_gap); break;
    case Command::tune: stage("tune", detail::stage_tune); break;
    case Command::verify: stage("verify", detail::stage_verify); break;
    case Command::evolve: stage("evolve", detail::stage_evolve); break;
    case Command::sample: stage("sample", detail::stage_sample); break;
    case Command::sweep: stage("sweep", detail::stage_sweep); break;
    case Command::all:
        stage("gap", detail::stage_gap);
        stage("tune", detail::stage_tune);
        stage("verify", detail::stage_verify);
        stage("evolve", detail::stage_evolve);
        stage("sample", detail::stage_sample);
        if (!rep.numerical_failure) stage("sweep", detail::stage_sweep);
        break;
    }
    rep.timings["total"] = total.seconds();
    return rep;
}

/// Process exit codes.
enum ExitCode : int { exit_ok = 0, exit_verdict_failed = 1, exit_config = 2, exit_numerical = 3, exit_io = 4 };

}  // namespace hypolab::cli
