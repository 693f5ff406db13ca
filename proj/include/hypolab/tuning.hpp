#pragma once

#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "hypolab/error.hpp"

namespace hypolab {

struct TuningInputs {
    double m = 1.0;
    double K = 0.0;
    std::optional<double> gamma;
    std::optional<double> eps;
};

/// Closed-form constants of the friction/rate pipeline.
struct TuningResult {
    double m = 0.0, K = 0.0;
    double gamma = 0.0;   ///< friction the constants below are evaluated at
    double eps = 0.0;     ///< corrector weight actually used (ε* unless overridden)
    double zeta = 0.0;
    double a = 0.0;
    double eps_star = 0.0;
    double eps_max = 0.0;
    double gamma_star = 0.0;
    double x_star = 0.0;
    double lambda_coer = 0.0;
    double Lambda = 0.0;
    double prefactor = 0.0;
    bool phi_grid_ok = false;  ///< x* beats every point of the log-grid scan
    bool at_gamma_star = true;
};

struct RateConstants {
    double lambda_coer;
    double Lambda;
    double prefactor;
};

struct DissipationMatrix {
    Eigen::Matrix2d M;
    double det;
    double trace;
    bool admissible;
};

struct RatioReport {
    double det_over_trace;
    double lambda_min;
    double lambda_coer;
    bool det_trace_dominates;  ///< det/trace ≥ λ_coer
    bool min_dominates;        ///< λ_min(M) ≥ det/trace
};

namespace detail {
inline void require_mk(double m, double K) {
    if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("m must be positive");
    if (!(K >= 0.0) || !std::isfinite(K)) throw ConfigError("K must be nonnegative");
}
inline double root2(double m, double K) { return std::sqrt(2.0 + K / (2.0 * m)); }
inline double root4(double m, double K) { return std::sqrt(4.0 + K / (2.0 * m)); }
}  // namespace detail

/// ζ(γ) = γ/(2√m) + √(2 + K/(2m)).
inline double zeta(double gamma, double m, double K) {
    return gamma / (2.0 * std::sqrt(m)) + detail::root2(m, K);
}

/// Φ(x) = x / (2((x + √(2+K/2m))² + 2)), the rate bound as a function of x = γ/(2√m).
inline double phi(double x, double m, double K) {
    const double s = x + detail::root2(m, K);
    return x / (2.0 * (s * s + 2.0));
}

inline DissipationMatrix dissipation_matrix(double gamma, double eps, double m, double K) {
    if (!(gamma > 0.0) || !(eps > 0.0)) throw ConfigError("gamma and eps must be positive");
    detail::require_mk(m, K);
    const double z = zeta(gamma, m, K);
    DissipationMatrix r;
    r.M << gamma - eps, -eps * z / 2.0, -eps * z / 2.0, eps / 2.0;
    r.det = eps * (gamma - eps) / 2.0 - eps * eps * z * z / 4.0;
    r.trace = gamma - eps + eps / 2.0;
    r.admissible = eps < 2.0 * gamma / (2.0 + z * z);
    return r;
}

inline RateConstants rate(double m, double K) {
    detail::require_mk(m, K);
    const double lc = std::sqrt(m) / (4.0 * (detail::root2(m, K) + detail::root4(m, K)));
    return {lc, 2.0 * lc / 3.0, std::sqrt(3.0)};
}

/// Confirms on a log grid x ∈ [1e-3, 1e3] that x* maximises Φ.
inline bool phi_maximizer_check(double m, double K, int points = 4001) {
    const double xs = detail::root4(m, K);
    const double best = phi(xs, m, K);
    for (int i = 0; i < points; ++i) {
        const double x = std::pow(10.0, -3.0 + 6.0 * i / (points - 1));
        if (phi(x, m, K) > best * (1.0 + 1e-14)) return false;
    }
    return true;
}

/// Constants at friction γ (default γ*) with ε = ε*(γ) unless overridden.
inline TuningResult tune(const TuningInputs& in) {
    detail::require_mk(in.m, in.K);
    const double m = in.m, K = in.K;
    TuningResult r;
    r.m = m;
    r.K = K;
    r.gamma_star = std::sqrt(16.0 * m + 2.0 * K);
    r.x_star = detail::root4(m, K);
    r.gamma = in.gamma.value_or(r.gamma_star);
    if (!(r.gamma > 0.0) || !std::isfinite(r.gamma)) throw ConfigError("gamma must be positive");
    r.at_gamma_star = std::abs(r.gamma - r.gamma_star) <= 1e-12 * r.gamma_star;
    r.zeta = zeta(r.gamma, m, K);
    r.a = 2.0 + r.zeta * r.zeta;
    r.eps_star = r.gamma / r.a;
    r.eps_max = 2.0 * r.gamma / (std::sqrt(r.a) * (std::sqrt(r.a) + std::sqrt(r.a - 1.0)));
    r.eps = in.eps.value_or(r.eps_star);
    if (!(r.eps > 0.0) || !std::isfinite(r.eps)) throw ConfigError("eps must be positive");
    const auto rc = rate(m, K);
    r.lambda_coer = rc.lambda_coer;
    r.Lambda = rc.Lambda;
    r.prefactor = rc.prefactor;
    r.phi_grid_ok = phi_maximizer_check(m, K);
    return r;
}

inline TuningResult optimize_friction(double m, double K) { return tune({m, K, {}, {}}); }

inline RatioReport check_ratio_consistency(double m, double K) {
    const auto t = optimize_friction(m, K);
    const auto d = dissipation_matrix(t.gamma_star, t.eps_star, m, K);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(d.M);
    RatioReport r;
    r.det_over_trace = d.det / d.trace;
    r.lambda_min = es.eigenvalues()(0);
    r.lambda_coer = t.lambda_coer;
    r.det_trace_dominates = r.det_over_trace >= r.lambda_coer;
    r.min_dominates = r.lambda_min >= r.det_over_trace * (1.0 - 1e-14);
    return r;
}

}  // namespace hypolab
