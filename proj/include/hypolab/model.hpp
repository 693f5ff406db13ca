#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hypolab/error.hpp"

namespace hypolab {

enum class PotentialKind { quadratic, double_well, cosine_bump };

inline std::string_view to_string(PotentialKind kind) {
    switch (kind) {
    case PotentialKind::quadratic: return "quadratic";
    case PotentialKind::double_well: return "double_well";
    case PotentialKind::cosine_bump: return "cosine_bump";
    }
    return "unknown";
}

inline PotentialKind parse_potential_kind(std::string_view tag) {
    if (tag == "quadratic") return PotentialKind::quadratic;
    if (tag == "double_well") return PotentialKind::double_well;
    if (tag == "cosine_bump") return PotentialKind::cosine_bump;
    throw ConfigError("unknown potential kind '" + std::string(tag) + "'");
}

/// U(x), U'(x) and U''(x) at one point.
struct PotentialValue {
    double value;
    double first;
    double second;
};

/// One-dimensional confining potential from the built-in family
///
///   quadratic    U(x) = a x^2 / 2                 params = {a},  a > 0
///   double_well  U(x) = s (x^2 - 1)^2 / 4         params = {s},  s > 0
///   cosine_bump  U(x) = x^2 / 2 + c cos(x)        params = {c},  c >= 0
///
/// Missing parameters take the defaults a = 1, s = 1, c = 2.
class Potential {
public:
    Potential(PotentialKind kind, std::vector<double> params = {})
        : kind_(kind), params_(std::move(params)) {
        if (params_.empty())
            params_.push_back(kind_ == PotentialKind::cosine_bump ? 2.0 : 1.0);
        if (params_.size() != 1)
            throw ConfigError("potential." + std::string(to_string(kind_)) +
                              " takes exactly one parameter");
        const double p = params_[0];
        if (!std::isfinite(p))
            throw ConfigError("potential parameter must be finite");
        if (kind_ != PotentialKind::cosine_bump && !(p > 0.0))
            throw ConfigError("potential parameter must be positive");
        if (kind_ == PotentialKind::cosine_bump && !(p >= 0.0))
            throw ConfigError("cosine_bump amplitude must be nonnegative");
    }

    static Potential quadratic(double a = 1.0) { return {PotentialKind::quadratic, {a}}; }
    static Potential double_well(double s = 1.0) { return {PotentialKind::double_well, {s}}; }
    static Potential cosine_bump(double c = 2.0) { return {PotentialKind::cosine_bump, {c}}; }

    PotentialKind kind() const noexcept { return kind_; }
    const std::vector<double>& params() const noexcept { return params_; }
    std::string name() const { return std::string(to_string(kind_)); }

    PotentialValue operator()(double x) const {
        const double p = params_[0];
        switch (kind_) {
        case PotentialKind::quadratic:
            return {0.5 * p * x * x, p * x, p};
        case PotentialKind::double_well: {
            const double q = x * x - 1.0;
            return {0.25 * p * q * q, p * x * q, p * (3.0 * x * x - 1.0)};
        }
        case PotentialKind::cosine_bump:
            return {0.5 * x * x + p * std::cos(x), x - p * std::sin(x),
                    1.0 - p * std::cos(x)};
        }
        throw ConfigError("unknown potential kind");
    }

    /// Minimum of U over [lo, hi], sampled on a fine uniform grid and
    /// polished at the known closed-form critical points.
    double min_value(double lo, double hi) const {
        double best = std::min((*this)(lo).value, (*this)(hi).value);
        constexpr int samples = 20000;
        for (int i = 1; i < samples; ++i)
            best = std::min(best, (*this)(lo + (hi - lo) * i / samples).value);
        for (double c : {0.0, -1.0, 1.0})
            if (c >= lo && c <= hi) best = std::min(best, (*this)(c).value);
        return best;
    }

private:
    PotentialKind kind_;
    std::vector<double> params_;
};

inline PotentialValue eval_potential(const Potential& p, double x) {
    if (!std::isfinite(x)) throw PreconditionError("eval_potential: x must be finite");
    return p(x);
}

/// K = max(0, -inf_x U''(x)), in closed form.
inline double hessian_lower_bound(const Potential& p) {
    const double q = p.params()[0];
    switch (p.kind()) {
    case PotentialKind::quadratic: return 0.0;
    case PotentialKind::double_well: return q;             // min of s(3x^2-1) is -s
    case PotentialKind::cosine_bump: return std::max(0.0, q - 1.0);  // min of 1-c cos x
    }
    throw ConfigError("unknown potential kind");
}

/// Gibbs data mu(dx dv) ∝ exp(-|v|^2/2 - U(x)) dx dv. The normalisation is
/// never formed; grids carry normalised weight vectors instead.
struct GibbsModel {
    Potential potential;
    double K;
    std::optional<double> analytic_m;

    double hamiltonian(double x, double v) const { return 0.5 * v * v + potential(x).value; }
};

inline GibbsModel make_gibbs_model(const Potential& p) {
    std::optional<double> m;
    if (p.kind() == PotentialKind::quadratic) m = p.params()[0];
    return GibbsModel{p, hessian_lower_bound(p), m};
}

}  // namespace hypolab
