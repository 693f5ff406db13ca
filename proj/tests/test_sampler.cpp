#include <cmath>

#include <gtest/gtest.h>

#include "hypolab/sampler.hpp"

using namespace hypolab;

namespace {

double slow_moment_rate(double gamma) {
    return gamma >= 2.0 ? (gamma - std::sqrt(gamma * gamma - 4.0)) / 2.0 : gamma / 2.0;
}

SdeConfig quadratic_config() {
    SdeConfig c;
    c.potential = Potential::quadratic(1.0);
    c.gamma = 4.0;
    c.dt = 0.01;
    c.seed = 2024;
    return c;
}

}  // namespace

TEST(Philox, KnownAnswers) {
    using B = Philox4x32::Block;
    EXPECT_EQ(Philox4x32(0)(B{0, 0, 0, 0}), (B{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
    EXPECT_EQ(Philox4x32(0xffffffffffffffffull)(B{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}),
              (B{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
    EXPECT_EQ(Philox4x32(0x299f31d0a4093822ull)(B{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}),
              (B{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(GaussianStream, MomentsAndDeterminism) {
    GaussianStream a(7, 3), b(7, 3), c(7, 4);
    double s = 0, q = 0;
    bool differs = false;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = a.normal();
        EXPECT_EQ(x, b.normal());
        differs |= x != c.normal();
        s += x;
        q += x * x;
    }
    EXPECT_TRUE(differs);
    EXPECT_NEAR(s / n, 0.0, 5.0 / std::sqrt(n));
    EXPECT_NEAR(q / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}

TEST(GaussianStream, UniformRange) {
    GaussianStream g(1, 0);
    for (int i = 0; i < 10000; ++i) {
        const double u = g.uniform();
        EXPECT_GT(u, 0.0);
        EXPECT_LE(u, 1.0);
    }
}

TEST(StepBaoab, VerletLimit) {
    std::vector<double> x{1.0}, v{0.0};
    const double noise = 0.0;
    step_baoab(x, v, Potential::quadratic(1.0), 0.0, 0.1, &noise);
    EXPECT_NEAR(x[0], 0.995, 1e-15);
    EXPECT_NEAR(v[0], -0.09975, 1e-15);
}

TEST(StepBaoab, FreeFlight) {
    std::vector<double> x{0.5, -1.0}, v{2.0, 0.25};
    const double noise[2] = {0.0, 0.0};
    step_baoab(x, v, [](double) { return 0.0; }, 0.0, 0.1, noise);
    EXPECT_DOUBLE_EQ(x[0], 0.7);
    EXPECT_DOUBLE_EQ(x[1], -0.975);
    EXPECT_EQ(v[0], 2.0);
    EXPECT_EQ(v[1], 0.25);
}

TEST(StepBaoab, GoldenValue) {
    // independent scalar implementation of the same splitting
    std::vector<double> x{1.0}, v{0.5};
    const double noise = 0.3;
    step_baoab(x, v, Potential::quadratic(1.0), 4.0, 0.01, &noise);
    EXPECT_NEAR(x[0], 1.005268872388335, 1e-14);
    EXPECT_NEAR(v[0], 0.5537481333050274, 1e-14);
}

TEST(StepBaoab, NonFiniteForceReportsCoordinate) {
    std::vector<double> x{0.0, 50.0, 0.0}, v{0.0, 0.0, 0.0};
    const double noise[3] = {0.0, 0.0, 0.0};
    auto force = [](double xi) { return std::abs(xi) > 10.0 ? std::numeric_limits<double>::infinity() : xi; };
    try {
        step_baoab(x, v, force, 1.0, 0.01, noise);
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_EQ(e.coordinate(), 1);
    }
}

TEST(RunEnsemble, DivergenceFlagsPartialTrace) {
    SdeConfig c;
    c.potential = Potential::double_well(1.0);
    c.particles = 128;
    c.dt = 0.9;
    c.gamma = 1.0;
    c.steps = 200;
    c.record_every = 1;
    c.x0 = 3.0;
    const auto tr = run_ensemble(c);
    EXPECT_TRUE(tr.diverged);
    EXPECT_EQ(tr.divergence_coordinate, 0);
    EXPECT_LT(tr.times.size(), 201u);
    EXPECT_FALSE(tr.divergence_message.empty());
}

TEST(RunEnsemble, ConfigValidation) {
    SdeConfig c = quadratic_config();
    c.dt = 0.5;
    EXPECT_THROW(run_ensemble(c), ConfigError);
    c = quadratic_config();
    c.particles = 0;
    EXPECT_THROW(run_ensemble(c), ConfigError);
    c = quadratic_config();
    c.observables.clear();
    EXPECT_THROW(run_ensemble(c), ConfigError);
}

TEST(RunEnsemble, DeterministicAcrossThreadCounts) {
    SdeConfig c = quadratic_config();
    c.particles = 1000;
    c.steps = 200;
    c.d = 2;
    c.x0 = 1.0;
    c.threads = 1;
    const auto a = run_ensemble(c);
    c.threads = 3;
    const auto b = run_ensemble(c);
    const auto a2 = run_ensemble(c);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.stderr_, b.stderr_);
    EXPECT_EQ(a.x_var, b.x_var);
    EXPECT_EQ(b.mean, a2.mean);
    c.seed += 1;
    EXPECT_NE(run_ensemble(c).mean, a.mean);
}

TEST(RunEnsemble, RecordingGrid) {
    SdeConfig c = quadratic_config();
    c.particles = 100;
    c.steps = 50;
    c.record_every = 10;
    const auto tr = run_ensemble(c);
    ASSERT_EQ(tr.times.size(), 6u);
    EXPECT_NEAR(tr.times.back(), 0.5, 1e-14);
    for (const auto& se : tr.stderr_)
        for (std::size_t k = 1; k < se.size(); ++k) EXPECT_GT(se[k], 0.0);
    EXPECT_EQ(tr.mean[tr.column(Observable::x)][0], 0.0);
    EXPECT_THROW(run_ensemble([&] {
                     auto d = c;
                     d.observables = {Observable::v};
                     return d;
                 }())
                     .column(Observable::x),
                 PreconditionError);
}

TEST(RunEnsemble, QuadraticEquilibriumMoments) {
    SdeConfig c = quadratic_config();
    c.steps = 3000;
    c.x0 = 2.0;
    const auto tr = run_ensemble(c);
    const auto v2 = tr.column(Observable::v2), x2 = tr.column(Observable::x2);
    EXPECT_NEAR(tr.mean[v2].back(), 1.0, 3.0 * tr.stderr_[v2].back());
    EXPECT_NEAR(tr.mean[x2].back(), 1.0, 3.0 * tr.stderr_[x2].back());
}

TEST(RunEnsemble, EnergyStableForAllPotentials) {
    for (const auto& p : {Potential::quadratic(), Potential::double_well(), Potential::cosine_bump()}) {
        SdeConfig c;
        c.potential = p;
        c.particles = 2000;
        c.steps = 2000;
        c.gamma = 4.0;
        const auto tr = run_ensemble(c);
        const auto h = tr.column(Observable::H), v2 = tr.column(Observable::v2);
        const auto& e = tr.mean[h];
        const double ref = equilibrium_mean(Observable::H, p);
        for (std::size_t k = e.size() / 2; k < e.size(); ++k) {
            EXPECT_TRUE(std::isfinite(e[k]));
            EXPECT_NEAR(e[k], ref, 6.0 * tr.stderr_[h][k]) << p.name();
        }
        EXPECT_NEAR(tr.mean[v2].back(), 1.0, 3.0 * tr.stderr_[v2].back()) << p.name();
    }
}

TEST(EquilibriumMean, Quadratic) {
    EXPECT_NEAR(equilibrium_mean(Observable::x2, Potential::quadratic(1.0)), 1.0, 1e-10);
    EXPECT_NEAR(equilibrium_mean(Observable::x2, Potential::quadratic(4.0)), 0.25, 1e-10);
    EXPECT_NEAR(equilibrium_mean(Observable::H, Potential::quadratic(1.0), 3), 3.0, 1e-10);
    EXPECT_EQ(equilibrium_mean(Observable::x, Potential::double_well()), 0.0);
    EXPECT_EQ(equilibrium_mean(Observable::v2, Potential::double_well()), 1.0);
}

TEST(FitObservableDecay, SyntheticMonotone) {
    std::vector<double> t, m, se;
    for (int k = 0; k <= 100; ++k) {
        t.push_back(0.1 * k);
        m.push_back(2.0 * std::exp(-0.5 * t.back()));
        se.push_back(1e-3);
    }
    const auto d = fit_observable_decay(t, m, se, 0.0);
    EXPECT_FALSE(d.oscillatory);
    EXPECT_NEAR(d.rate, 0.5, 1e-10);
}

TEST(FitObservableDecay, SyntheticOscillation) {
    std::vector<double> t, m, se;
    for (int k = 0; k <= 4000; ++k) {
        t.push_back(0.01 * k);
        m.push_back(std::exp(-0.2 * t.back()) * std::cos(2.0 * t.back()));
        se.push_back(1e-4);
    }
    const auto d = fit_observable_decay(t, m, se, 0.0);
    EXPECT_TRUE(d.oscillatory);
    EXPECT_NEAR(d.rate, 0.2, 1e-3);
}

TEST(FitObservableDecay, NoSignal) {
    const std::vector<double> t{0, 1, 2}, m{0, 0, 0}, se{1, 1, 1};
    EXPECT_THROW(fit_observable_decay(t, m, se, 0.0), InsufficientSignalError);
}

TEST(ObservableDecay, CriticalSideOfDamping) {
    SdeConfig c = quadratic_config();
    c.steps = 3000;
    const auto d = estimate_observable_decay(c, 2.0);
    EXPECT_NEAR(d.rate, slow_moment_rate(4.0), 0.15 * slow_moment_rate(4.0));
    EXPECT_NEAR(slow_moment_rate(4.0), 2.0 - std::sqrt(3.0), 1e-15);
}

TEST(ObservableDecay, Underdamped) {
    SdeConfig c = quadratic_config();
    c.gamma = 0.2;
    c.steps = 5000;
    const auto d = estimate_observable_decay(c, 2.0);
    EXPECT_TRUE(d.oscillatory);
    EXPECT_NEAR(d.rate, 0.1, 0.2 * 0.1);
}

TEST(ObservableDecay, ZeroShift) {
    EXPECT_THROW(estimate_observable_decay(quadratic_config(), 0.0), InsufficientSignalError);
}

TEST(Observable, ParseRoundTrip) {
    for (auto o : {Observable::x, Observable::v, Observable::x2, Observable::v2, Observable::H})
        EXPECT_EQ(parse_observable(to_string(o)), o);
    EXPECT_THROW(parse_observable("p"), ConfigError);
}
