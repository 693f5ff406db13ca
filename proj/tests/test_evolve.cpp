#include <cmath>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace hypolab;
using hypolab::testing::cached_ops;

namespace {

struct Tuned {
    Corrector corr;
    TuningResult t;
};

Tuned tuned(const OperatorSet& ops) {
    return {build_corrector(ops), tune({ops.gap, ops.grid.model.K, {}, {}})};
}

DecayTrace synthetic(const std::vector<double>& t, auto norm_of) {
    DecayTrace tr;
    tr.dt = t.size() > 1 ? t[1] - t[0] : 0.0;
    for (double s : t) {
        tr.times.push_back(s);
        tr.norm.push_back(norm_of(s));
    }
    return tr;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
    return v;
}

}  // namespace

TEST(Integrate, ZeroState) {
    const auto& ops = cached_ops(Potential::quadratic(), 64, 8);
    const auto tr = integrate(ops, Eigen::VectorXd::Zero(ops.dim()), 4.0, 10.0, 0.02);
    ASSERT_EQ(tr.size(), 1u);
    EXPECT_EQ(tr.norm[0], 0.0);
    EXPECT_EQ(tr.bound[0], 0.0);
    const auto v = verify_decay_bound(tr);
    EXPECT_TRUE(v.holds);
    EXPECT_EQ(v.min_margin, 1.0);
    EXPECT_EQ(lyapunov_derivative_check(tr).max_residual, 0.0);
}

TEST(Integrate, InitialSample) {
    const auto& ops = cached_ops(Potential::double_well(), 64, 8);
    const Eigen::VectorXd f0 = 2.0 * initial_state(ops, InitialKind::random, 3);
    const auto tr = integrate(ops, f0, 3.0, 1.0, 0.01);
    EXPECT_EQ(tr.times.front(), 0.0);
    EXPECT_NEAR(tr.times.back(), 1.0, 1e-12);
    EXPECT_EQ(tr.size(), 101u);
    EXPECT_DOUBLE_EQ(tr.norm[0], f0.norm());
    EXPECT_DOUBLE_EQ(tr.bound[0], std::sqrt(3.0) * f0.norm());
}

TEST(Integrate, Guards) {
    const auto& ops = cached_ops(Potential::quadratic(), 64, 8);
    const Eigen::VectorXd f0 = initial_state(ops, InitialKind::gap);
    EXPECT_THROW(integrate(ops, f0, 4.0, 1.0, 0.03), ConfigError);
    EXPECT_THROW(integrate(ops, f0, 4.0, 1.0, 0.0), ConfigError);
    EXPECT_THROW(integrate(ops, f0, 4.0, -1.0, 0.01), ConfigError);
    EXPECT_THROW(integrate(ops, ops.constant_mode, 4.0, 1.0, 0.01), PreconditionError);
}

TEST(Integrate, MeanConserved) {
    for (const auto& p : {Potential::quadratic(), Potential::double_well(), Potential::cosine_bump()}) {
        const auto& ops = cached_ops(p, 64, 12);
        const Eigen::VectorXd f0 = initial_state(ops, InitialKind::random, 21);
        const auto tr = integrate(ops, f0, 2.0, 20.0, 0.05);
        for (double m : tr.mean) EXPECT_LE(std::abs(m), 1e-10 * f0.norm()) << p.name();
    }
}

TEST(Integrate, EigenvectorDecaysExponentially) {
    const auto& ops = cached_ops(Potential::quadratic(), 128, 20);
    const auto sm = generator_slowest_mode(ops, 4.0);
    ASSERT_TRUE(sm.converged);
    const double dt = 0.02;
    const auto tr = integrate(ops, sm.mode, 4.0, 20.0, dt);
    const double mu = sm.rate, g = (1.0 - 0.5 * mu * dt) / (1.0 + 0.5 * mu * dt);
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const double t = tr.times[k];
        EXPECT_NEAR(tr.norm[k] / std::pow(g, static_cast<double>(k)), 1.0, 1e-9) << t;
        // local error (μ dt)^3 / 12 per step accumulates to μ^3 dt^2 t / 12
        EXPECT_NEAR(tr.norm[k] / std::exp(-mu * t), 1.0, 2.0 * mu * mu * mu * dt * dt * t / 12.0 + 1e-12) << t;
    }
}

TEST(SlowestMode, QuadraticMatchesCriticalValue) {
    const auto sm = generator_slowest_mode(cached_ops(Potential::quadratic(), 128, 20), 4.0);
    EXPECT_TRUE(sm.converged);
    EXPECT_NEAR(sm.rate, 2.0 - std::sqrt(3.0), 0.05 * (2.0 - std::sqrt(3.0)));
    EXPECT_LE(sm.residual, 1e-9);
}

TEST(SlowestMode, AgreesWithDenseEigensolver) {
    const auto& ops = cached_ops(Potential::quadratic(), 8.0, 32, 10);
    const double gamma = 4.0;
    const auto sm = generator_slowest_mode(ops, gamma);
    const Eigen::MatrixXd l = Eigen::MatrixXd(compose_generator(ops, gamma));
    Eigen::EigenSolver<Eigen::MatrixXd> es(l);
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double r = -es.eigenvalues()(i).real();
        if (r > 1e-8) best = std::min(best, r);
    }
    EXPECT_NEAR(sm.rate, best, 1e-9);
}

TEST(EstimateRate, SyntheticExponential) {
    const auto tr = synthetic(linspace(0.0, 20.0, 401), [](double t) { return std::exp(-0.3 * t); });
    EXPECT_NEAR(estimate_rate(tr), 0.3, 1e-6);
    EXPECT_NEAR(estimate_rate(tr, 1.0), 0.3, 1e-6);
}

TEST(EstimateRate, ConstantTrace) {
    const auto tr = synthetic(linspace(0.0, 5.0, 51), [](double) { return 0.7; });
    EXPECT_NEAR(estimate_rate(tr), 0.0, 1e-12);
}

TEST(EstimateRate, DegenerateTraces) {
    const auto zero = synthetic(linspace(0.0, 1.0, 11), [](double) { return 0.0; });
    EXPECT_THROW(estimate_rate(zero), DegenerateTraceError);
    const auto one = synthetic({0.0}, [](double) { return 1.0; });
    EXPECT_THROW(estimate_rate(one), DegenerateTraceError);
    EXPECT_THROW(estimate_rate(zero, 0.0), ConfigError);
}

TEST(EstimateRate, QuadraticGeneric) {
    const auto& ops = cached_ops(Potential::quadratic(), 128, 20);
    const auto [corr, t] = tuned(ops);
    const auto tr = integrate(ops, corr, initial_state(ops, InitialKind::random, 8), 4.0,
                              {t.eps, t.Lambda, t.prefactor}, 5.0 / t.Lambda, 0.025);
    EXPECT_NEAR(estimate_rate(tr), 0.267949, 0.05 * 0.267949);
}

TEST(DecayBound, QuadraticThreeInitialStates) {
    const auto& ops = cached_ops(Potential::quadratic(), 128, 20);
    const auto [corr, t] = tuned(ops);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto tr = integrate(ops, corr, initial_state(ops, InitialKind::random, seed), t.gamma,
                                  {t.eps, t.Lambda, t.prefactor}, 5.0 / t.Lambda, 0.1 / t.gamma);
        const auto v = verify_decay_bound(tr);
        EXPECT_TRUE(v.holds) << seed;
        EXPECT_GT(v.min_margin, 0.0);
        EXPECT_GE(estimate_rate(tr), t.Lambda * (1.0 - 1e-6));
        const auto p = check_trace_properties(tr);
        EXPECT_TRUE(p.norm_nonincreasing);
        EXPECT_TRUE(p.gronwall);
        EXPECT_TRUE(lyapunov_derivative_check(tr).nonincreasing);
    }
}

TEST(DecayBound, DoubleWellPipeline) {
    const auto& ops = cached_ops(Potential::double_well(), 128, 20);
    const auto [corr, t] = tuned(ops);
    EXPECT_EQ(t.K, 1.0);
    for (auto kind : {InitialKind::gap, InitialKind::velocity, InitialKind::random}) {
        const auto tr = integrate(ops, corr, initial_state(ops, kind, 4), t.gamma, {t.eps, t.Lambda, t.prefactor},
                                  5.0 / t.Lambda, 0.1 / t.gamma);
        EXPECT_TRUE(verify_decay_bound(tr).holds) << to_string(kind);
        EXPECT_TRUE(lyapunov_derivative_check(tr).nonincreasing) << to_string(kind);
        EXPECT_TRUE(check_trace_properties(tr).gronwall) << to_string(kind);
    }
}

TEST(LyapunovDerivative, SecondOrderUnderRefinement) {
    for (const auto& p : {Potential::quadratic(), Potential::double_well()}) {
        const auto& ops = cached_ops(p, 128, 20);
        const auto [corr, t] = tuned(ops);
        const Eigen::VectorXd f0 = initial_state(ops, InitialKind::gap);
        std::vector<double> res;
        for (double dt : {0.02, 0.01, 0.005})
            res.push_back(lyapunov_derivative_check(
                              integrate(ops, corr, f0, t.gamma, {t.eps, t.Lambda, t.prefactor}, 10.0, dt))
                              .max_residual);
        for (int k = 0; k < 2; ++k) {
            EXPECT_NEAR(res[k] / res[k + 1], 4.0, 0.5) << p.name() << " level " << k;
        }
    }
}

TEST(InitialState, UnitNormMeanZero) {
    const auto& ops = cached_ops(Potential::cosine_bump(), 64, 8);
    for (auto kind : {InitialKind::gap, InitialKind::velocity, InitialKind::random}) {
        const Eigen::VectorXd f = initial_state(ops, kind, 2);
        EXPECT_NEAR(f.norm(), 1.0, 1e-14);
        EXPECT_TRUE(ops.is_mean_zero(f));
    }
    EXPECT_EQ(initial_state(ops, InitialKind::zero).norm(), 0.0);
}

TEST(InitialState, VelocityLivesInFirstMode) {
    const auto& ops = cached_ops(Potential::quadratic(), 64, 8);
    const Eigen::VectorXd f = initial_state(ops, InitialKind::velocity);
    EXPECT_NEAR(f.segment(ops.nx(), ops.nx()).norm(), 1.0, 1e-14);
}

TEST(InitialState, RandomIsSeeded) {
    const auto& ops = cached_ops(Potential::quadratic(), 64, 8);
    EXPECT_EQ(initial_state(ops, InitialKind::random, 5), initial_state(ops, InitialKind::random, 5));
    EXPECT_NE(initial_state(ops, InitialKind::random, 5), initial_state(ops, InitialKind::random, 6));
}

TEST(InitialState, Parse) {
    EXPECT_EQ(parse_initial_kind("velocity"), InitialKind::velocity);
    EXPECT_EQ(to_string(InitialKind::gap), "gap");
    EXPECT_THROW(parse_initial_kind("bogus"), ConfigError);
}
