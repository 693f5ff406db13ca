#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "hypolab/corrector.hpp"
#include "hypolab/discretize.hpp"
#include "hypolab/error.hpp"
#include "hypolab/philox.hpp"
#include "hypolab/tuning.hpp"

namespace hypolab {

struct DecayTrace {
    std::vector<double> times, norm, lyap, diss, bound, mean;
    double gamma = 0.0, eps = 0.0, Lambda = 0.0, prefactor = 0.0, dt = 0.0;

    std::size_t size() const { return times.size(); }
};

/// Everything besides the generator that each sample records.
struct TraceSettings {
    double eps = 0.0;
    double Lambda = 0.0;
    double prefactor = std::sqrt(3.0);
};

/// Trapezoidal (Crank-Nicolson) evolution of ∂_t f = L f, sampled every step.
/// A zero initial state gives the single sample t = 0.
inline DecayTrace integrate(const OperatorSet& ops, const Corrector& corr, const Eigen::VectorXd& f0,
                            double gamma, const TraceSettings& set, double t_end, double dt) {
    if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("evolve.dt must be positive");
    if (dt > 0.1 / gamma * (1.0 + 1e-12)) throw ConfigError("evolve.dt must satisfy dt <= 0.1/gamma");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ConfigError("evolve.t_end must be positive");
    detail::require_mean_zero(ops, f0);

    DecayTrace tr;
    tr.gamma = gamma;
    tr.eps = set.eps;
    tr.Lambda = set.Lambda;
    tr.prefactor = set.prefactor;
    tr.dt = dt;
    const double n0 = f0.norm();
    const SpMat l = compose_generator(ops, gamma);

    auto record = [&](double t, const Eigen::VectorXd& f) {
        tr.times.push_back(t);
        tr.norm.push_back(f.norm());
        tr.lyap.push_back(0.5 * f.squaredNorm() - set.eps * f.dot(corr.apply(f)));
        tr.diss.push_back(dissipation_with(l, f, corr, set.eps));
        tr.bound.push_back(set.prefactor * std::exp(-set.Lambda * t) * n0);
        tr.mean.push_back(ops.mean(f));
    };

    Eigen::VectorXd f = f0;
    record(0.0, f);
    if (n0 == 0.0) return tr;

    const SpMat id = identity(ops.dim());
    const SpMat lhs = id - 0.5 * dt * l;
    const SpMat rhs = id + 0.5 * dt * l;
    Eigen::SparseLU<SpMat> lu;
    lu.analyzePattern(lhs);
    lu.factorize(lhs);
    if (lu.info() != Eigen::Success) throw NumericalError("integrate: factorisation failed");

    const long steps = std::lround(t_end / dt);
    for (long k = 1; k <= steps; ++k) {
        f = lu.solve(rhs * f);
        if (!f.allFinite()) throw NumericalError("integrate: non-finite state");
        record(static_cast<double>(k) * dt, f);
    }
    return tr;
}

/// Convenience overload: corrector at α = m_h, ε = ε*(γ) and Λ from the
/// closed-form pipeline at (m_h, K).
inline DecayTrace integrate(const OperatorSet& ops, const Eigen::VectorXd& f0, double gamma, double t_end,
                            double dt) {
    const Corrector corr = build_corrector(ops);
    const auto t = tune({ops.gap, ops.grid.model.K, gamma, {}});
    return integrate(ops, corr, f0, gamma, {t.eps, t.Lambda, t.prefactor}, t_end, dt);
}

/// Least-squares slope of -log‖f(t)‖ over the trailing `window` fraction.
inline double estimate_rate(const DecayTrace& tr, double window = 0.5) {
    if (!(window > 0.0 && window <= 1.0)) throw ConfigError("rate window must be in (0, 1]");
    const std::size_t n = tr.size();
    if (n < 2) throw DegenerateTraceError("trace has fewer than two samples");
    const std::size_t count = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(window * n)));
    const std::size_t start = n - std::min(count, n);
    double st = 0, sy = 0, stt = 0, sty = 0;
    const double m = static_cast<double>(n - start);
    for (std::size_t k = start; k < n; ++k) {
        if (!(tr.norm[k] > 0.0)) throw DegenerateTraceError("zero norm inside the fit window");
        const double y = -std::log(tr.norm[k]);
        st += tr.times[k];
        sy += y;
        stt += tr.times[k] * tr.times[k];
        sty += tr.times[k] * y;
    }
    const double den = m * stt - st * st;
    if (!(den > 0.0)) throw DegenerateTraceError("fit window has no time extent");
    return (m * sty - st * sy) / den;
}

struct DecayVerdict {
    bool holds;
    double min_margin;
};

/// ‖f(t_k)‖ ≤ bound_k (1 + 1e-8) at every sample; zero-bound samples count
/// as margin 1.
inline DecayVerdict verify_decay_bound(const DecayTrace& tr) {
    DecayVerdict v{true, 1.0};
    for (std::size_t k = 0; k < tr.size(); ++k) {
        if (tr.norm[k] > tr.bound[k] * (1.0 + 1e-8)) v.holds = false;
        if (tr.bound[k] > 0.0) v.min_margin = std::min(v.min_margin, (tr.bound[k] - tr.norm[k]) / tr.bound[k]);
    }
    return v;
}

struct LyapunovCheck {
    double max_residual = 0.0;
    bool nonincreasing = true;
    double worst_increase = 0.0;  ///< largest relative increase of 𝔏 between samples
};

/// Residual of d/dt 𝔏 = -D along the trace, by central differences.
inline LyapunovCheck lyapunov_derivative_check(const DecayTrace& tr) {
    LyapunovCheck c;
    for (std::size_t k = 1; k + 1 < tr.size(); ++k) {
        const double d = (tr.lyap[k + 1] - tr.lyap[k - 1]) / (2.0 * tr.dt);
        c.max_residual = std::max(c.max_residual, std::abs(d + tr.diss[k]));
    }
    const double scale = tr.size() ? std::abs(tr.lyap.front()) : 0.0;
    for (std::size_t k = 1; k < tr.size(); ++k) {
        const double inc = (tr.lyap[k] - tr.lyap[k - 1]) / std::max(scale, 1e-300);
        c.worst_increase = std::max(c.worst_increase, inc);
        if (tr.lyap[k] > tr.lyap[k - 1] + 1e-10 * scale) c.nonincreasing = false;
    }
    return c;
}

/// ‖f‖ never grows, and 𝔏(t) ≤ 𝔏(0) e^{-2Λt} (1 + 1e-6).
struct TraceProperties {
    bool norm_nonincreasing = true;
    bool gronwall = true;
    double max_mean_drift = 0.0;
};

inline TraceProperties check_trace_properties(const DecayTrace& tr) {
    TraceProperties p;
    if (tr.size() == 0) return p;
    const double n0 = tr.norm.front();
    for (std::size_t k = 0; k < tr.size(); ++k) {
        if (k > 0 && tr.norm[k] > tr.norm[k - 1] * (1.0 + 1e-12) + 1e-300) p.norm_nonincreasing = false;
        const double g = tr.lyap.front() * std::exp(-2.0 * tr.Lambda * tr.times[k]);
        if (tr.lyap[k] > g * (1.0 + 1e-6) + 1e-300) p.gronwall = false;
        p.max_mean_drift = std::max(p.max_mean_drift, std::abs(tr.mean[k] - tr.mean.front()) /
                                                          std::max(n0, 1e-300));
    }
    return p;
}

// ---------------------------------------------------------------------------
// Initial conditions
// ---------------------------------------------------------------------------

enum class InitialKind { gap, velocity, random, zero };

inline std::string_view to_string(InitialKind k) {
    switch (k) {
    case InitialKind::gap: return "gap";
    case InitialKind::velocity: return "velocity";
    case InitialKind::random: return "random";
    case InitialKind::zero: return "zero";
    }
    return "unknown";
}

inline InitialKind parse_initial_kind(std::string_view s) {
    if (s == "gap") return InitialKind::gap;
    if (s == "velocity") return InitialKind::velocity;
    if (s == "random") return InitialKind::random;
    if (s == "zero") return InitialKind::zero;
    throw ConfigError("unknown initial condition '" + std::string(s) + "'");
}

/// Unit-norm mean-zero initial state.
///   gap       lifted eigenvector of -L_o at m_h
///   velocity  f(x, v) = v
///   random    seeded Gaussian vector projected to mean zero
///   zero      the zero state
inline Eigen::VectorXd initial_state(const OperatorSet& ops, InitialKind kind, std::uint64_t seed = 0) {
    const int nx = ops.nx();
    Eigen::VectorXd f = Eigen::VectorXd::Zero(ops.dim());
    switch (kind) {
    case InitialKind::zero: return f;
    case InitialKind::gap:
        if (ops.gap_mode.size() != nx) throw PreconditionError("gap mode missing; run poincare_constant");
        f.head(nx) = ops.gap_mode;
        break;
    case InitialKind::velocity:
        f.segment(nx, nx - 1) = ops.grid.edge_sqrt_weights;
        break;
    case InitialKind::random: {
        GaussianStream g(seed, 0x1f0u);
        for (int i = 0; i < f.size(); ++i) f(i) = g.normal();
        f = ops.project_mean_zero(f);
        break;
    }
    }
    f = ops.project_mean_zero(f);
    return f / f.norm();
}

// ---------------------------------------------------------------------------
// Spectral oracle
// ---------------------------------------------------------------------------

struct SlowestMode {
    double rate;          ///< -Re μ of the eigenvalue of L nearest 0 on mean-zero states
    double residual;      ///< ‖L x - μ x‖ for the returned unit vector
    bool converged;
    Eigen::VectorXd mode; ///< unit mean-zero eigenvector
};

/// Shift-invert power iteration for the mean-zero eigenvalue of L closest to
/// the origin. Meant for generators whose slowest mode is real.
inline SlowestMode generator_slowest_mode(const OperatorSet& ops, double gamma, int max_iter = 500,
                                          double tol = 1e-12) {
    const SpMat l = compose_generator(ops, gamma);
    const double sigma = 1e-3;
    const SpMat shifted = l - sigma * identity(ops.dim());
    Eigen::SparseLU<SpMat> lu;
    lu.compute(shifted);
    if (lu.info() != Eigen::Success) throw NumericalError("slowest mode: factorisation failed");
    Eigen::VectorXd x = initial_state(ops, InitialKind::random, 12345);
    double mu = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        x = ops.project_mean_zero(lu.solve(x));
        x.normalize();
        const Eigen::VectorXd lx = l * x;
        mu = x.dot(lx);
        const double res = (lx - mu * x).norm();
        if (res <= tol * std::max(1.0, std::abs(mu)) || (it > 50 && res <= 1e-10))
            return {-mu, res, true, x};
    }
    return {-mu, (l * x - mu * x).norm(), false, x};
}

}  // namespace hypolab
