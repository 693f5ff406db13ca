#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "hypolab/error.hpp"
#include "hypolab/model.hpp"
#include "hypolab/philox.hpp"

namespace hypolab {

enum class Observable { x, v, x2, v2, H };

inline std::string_view to_string(Observable o) {
    switch (o) {
    case Observable::x: return "x";
    case Observable::v: return "v";
    case Observable::x2: return "x2";
    case Observable::v2: return "v2";
    case Observable::H: return "H";
    }
    return "unknown";
}

inline Observable parse_observable(std::string_view s) {
    if (s == "x") return Observable::x;
    if (s == "v") return Observable::v;
    if (s == "x2") return Observable::x2;
    if (s == "v2") return Observable::v2;
    if (s == "H") return Observable::H;
    throw ConfigError("unknown observable '" + std::string(s) + "'");
}

/// Initial distribution of the ensemble: all particles at x = x0 (every
/// coordinate), velocities either zero or drawn from the Gaussian marginal.
struct SdeConfig {
    Potential potential = Potential::quadratic();
    int d = 1;
    int particles = 10000;
    double dt = 0.01;
    int steps = 2000;
    int record_every = 10;
    double gamma = 4.0;
    std::uint64_t seed = 1;
    std::vector<Observable> observables{Observable::x, Observable::v, Observable::x2, Observable::v2,
                                        Observable::H};
    double x0 = 0.0;
    bool gaussian_velocity = true;
    int threads = 0;  ///< 0 picks the hardware concurrency

    void validate() const {
        if (d < 1) throw ConfigError("sde.d must be positive");
        if (particles < 1) throw ConfigError("sde.particles must be positive");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("sde.dt must be positive");
        if (steps < 1) throw ConfigError("sde.steps must be positive");
        if (record_every < 1) throw ConfigError("sde.record_every must be positive");
        if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("sde.gamma must be positive");
        if (!(dt * gamma < 1.0)) throw ConfigError("sde.dt * sde.gamma must be below 1");
        if (!std::isfinite(x0)) throw ConfigError("sde.x0 must be finite");
        if (observables.empty()) throw ConfigError("sde.observables must not be empty");
        if (threads < 0) throw ConfigError("sde.threads must be nonnegative");
    }
};

struct EnsembleTrace {
    std::vector<Observable> observables;
    std::vector<double> times;
    std::vector<std::vector<double>> mean, stderr_;  ///< [observable][sample]
    std::vector<double> x_mean, x_var, v_mean, v_var;  ///< final state, per coordinate
    int particles = 0;
    bool diverged = false;
    int divergence_coordinate = -1;
    std::string divergence_message;

    std::size_t column(Observable o) const {
        for (std::size_t j = 0; j < observables.size(); ++j)
            if (observables[j] == o) return j;
        throw PreconditionError("observable '" + std::string(to_string(o)) + "' was not recorded");
    }
};

/// One BAOAB step, in place. `force(x)` returns U'(x) for one coordinate
/// and `noise` holds d standard normals.
template <class Force>
    requires std::is_invocable_r_v<double, Force&, double>
void step_baoab(std::vector<double>& x, std::vector<double>& v, Force&& force, double gamma, double dt,
                const double* noise) {
    const std::size_t d = x.size();
    auto kick = [&] {
        for (std::size_t j = 0; j < d; ++j) {
            const double f = force(x[j]);
            if (!std::isfinite(f))
                throw DivergenceError("non-finite force at coordinate " + std::to_string(j), static_cast<int>(j));
            v[j] -= 0.5 * dt * f;
        }
    };
    kick();
    for (std::size_t j = 0; j < d; ++j) x[j] += 0.5 * dt * v[j];
    const double c = std::exp(-gamma * dt);
    const double s = std::sqrt(-std::expm1(-2.0 * gamma * dt));
    for (std::size_t j = 0; j < d; ++j) v[j] = c * v[j] + s * noise[j];
    for (std::size_t j = 0; j < d; ++j) x[j] += 0.5 * dt * v[j];
    kick();
}

inline void step_baoab(std::vector<double>& x, std::vector<double>& v, const Potential& p, double gamma,
                       double dt, const double* noise) {
    step_baoab(x, v, [&p](double xi) { return p(xi).first; }, gamma, dt, noise);
}

inline double observe(Observable o, const Potential& p, const std::vector<double>& x,
                      const std::vector<double>& v) {
    const double d = static_cast<double>(x.size());
    switch (o) {
    case Observable::x: return x[0];
    case Observable::v: return v[0];
    case Observable::x2: {
        double s = 0;
        for (double xi : x) s += xi * xi;
        return s / d;
    }
    case Observable::v2: {
        double s = 0;
        for (double vi : v) s += vi * vi;
        return s / d;
    }
    case Observable::H: {
        double s = 0;
        for (std::size_t j = 0; j < x.size(); ++j) s += 0.5 * v[j] * v[j] + p(x[j]).value;
        return s;
    }
    }
    return 0.0;
}

namespace detail {

inline constexpr int block_size = 64;

struct BlockSums {
    std::vector<double> sum, sq;           // [sample * nobs + obs]
    std::vector<double> xs, xq, vs, vq;    // final state per coordinate
    int completed_samples = 0;             // samples with every trajectory alive
    int diverged_coordinate = -1;
    std::string message;
};

inline void run_block(const SdeConfig& cfg, int block, int nsamples, BlockSums& out) {
    const int d = cfg.d, nobs = static_cast<int>(cfg.observables.size());
    out.sum.assign(static_cast<std::size_t>(nsamples) * nobs, 0.0);
    out.sq.assign(out.sum.size(), 0.0);
    out.xs.assign(d, 0.0);
    out.xq.assign(d, 0.0);
    out.vs.assign(d, 0.0);
    out.vq.assign(d, 0.0);
    out.completed_samples = nsamples;

    const int first = block * block_size;
    const int last = std::min(cfg.particles, first + block_size);
    std::vector<double> x(d), v(d), noise(d);
    for (int traj = first; traj < last; ++traj) {
        GaussianStream rng(cfg.seed, static_cast<std::uint64_t>(traj));
        std::fill(x.begin(), x.end(), cfg.x0);
        for (int j = 0; j < d; ++j) v[j] = cfg.gaussian_velocity ? rng.normal() : 0.0;
        auto accumulate = [&](int sample) {
            for (int o = 0; o < nobs; ++o) {
                const double val = observe(cfg.observables[o], cfg.potential, x, v);
                out.sum[static_cast<std::size_t>(sample) * nobs + o] += val;
                out.sq[static_cast<std::size_t>(sample) * nobs + o] += val * val;
            }
        };
        accumulate(0);
        int sample = 1;
        try {
            for (int step = 1; step <= cfg.steps; ++step) {
                for (int j = 0; j < d; ++j) noise[j] = rng.normal();
                step_baoab(x, v, cfg.potential, cfg.gamma, cfg.dt, noise.data());
                for (int j = 0; j < d; ++j)
                    if (!std::isfinite(x[j]) || !std::isfinite(v[j]))
                        throw DivergenceError("non-finite state at coordinate " + std::to_string(j), j);
                if (step % cfg.record_every == 0) accumulate(sample++);
            }
        } catch (const DivergenceError& e) {
            if (sample < out.completed_samples) {
                out.completed_samples = sample;
                out.diverged_coordinate = e.coordinate();
                out.message = "trajectory " + std::to_string(traj) + ": " + e.what();
            }
            continue;
        }
        for (int j = 0; j < d; ++j) {
            out.xs[j] += x[j];
            out.xq[j] += x[j] * x[j];
            out.vs[j] += v[j];
            out.vq[j] += v[j] * v[j];
        }
    }
}

}  // namespace detail

/// Independent BAOAB trajectories with a Philox stream per trajectory.
///
/// Trajectories are grouped in fixed blocks of 64; blocks may run on any
/// thread but are reduced in block order, so the output does not depend on
/// the thread count.
inline EnsembleTrace run_ensemble(const SdeConfig& cfg) {
    cfg.validate();
    const int nsamples = cfg.steps / cfg.record_every + 1;
    const int nblocks = (cfg.particles + detail::block_size - 1) / detail::block_size;
    std::vector<detail::BlockSums> blocks(nblocks);

    int nthreads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
    nthreads = std::clamp(nthreads, 1, nblocks);
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        try {
            for (int b = next++; b < nblocks; b = next++) detail::run_block(cfg, b, nsamples, blocks[b]);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    {
        std::vector<std::jthread> pool;
        for (int t = 1; t < nthreads; ++t) pool.emplace_back(worker);
        worker();
    }
    if (failure) std::rethrow_exception(failure);

    EnsembleTrace tr;
    tr.observables = cfg.observables;
    tr.particles = cfg.particles;
    const int nobs = static_cast<int>(cfg.observables.size());
    int usable = nsamples;
    for (const auto& b : blocks)
        if (b.diverged_coordinate >= 0 && (!tr.diverged || b.completed_samples < usable)) {
            tr.diverged = true;
            tr.divergence_coordinate = b.diverged_coordinate;
            tr.divergence_message = b.message;
            usable = b.completed_samples;
        }

    const double n = static_cast<double>(cfg.particles);
    tr.mean.assign(nobs, std::vector<double>(usable));
    tr.stderr_.assign(nobs, std::vector<double>(usable));
    for (int s = 0; s < usable; ++s) {
        tr.times.push_back(static_cast<double>(s) * cfg.record_every * cfg.dt);
        for (int o = 0; o < nobs; ++o) {
            double sum = 0, sq = 0;
            for (int b = 0; b < nblocks; ++b) {
                sum += blocks[b].sum[static_cast<std::size_t>(s) * nobs + o];
                sq += blocks[b].sq[static_cast<std::size_t>(s) * nobs + o];
            }
            const double mu = sum / n;
            const double var = n > 1 ? std::max(0.0, (sq - n * mu * mu) / (n - 1)) : 0.0;
            tr.mean[o][s] = mu;
            tr.stderr_[o][s] = std::sqrt(var / n);
        }
    }
    if (!tr.diverged) {
        tr.x_mean.assign(cfg.d, 0.0);
        tr.x_var.assign(cfg.d, 0.0);
        tr.v_mean.assign(cfg.d, 0.0);
        tr.v_var.assign(cfg.d, 0.0);
        for (int j = 0; j < cfg.d; ++j) {
            double xs = 0, xq = 0, vs = 0, vq = 0;
            for (const auto& b : blocks) {
                xs += b.xs[j];
                xq += b.xq[j];
                vs += b.vs[j];
                vq += b.vq[j];
            }
            tr.x_mean[j] = xs / n;
            tr.v_mean[j] = vs / n;
            tr.x_var[j] = n > 1 ? (xq - n * tr.x_mean[j] * tr.x_mean[j]) / (n - 1) : 0.0;
            tr.v_var[j] = n > 1 ? (vq - n * tr.v_mean[j] * tr.v_mean[j]) / (n - 1) : 0.0;
        }
    }
    return tr;
}

/// Gibbs average of an observable, by quadrature of the one-dimensional
/// marginal (the potential acts coordinate-wise).
inline double equilibrium_mean(Observable o, const Potential& p, int d = 1) {
    if (o == Observable::x || o == Observable::v) return 0.0;  // built-ins are even
    if (o == Observable::v2) return 1.0;
    constexpr int n = 200001;
    constexpr double L = 40.0;
    const double umin = p.min_value(-L, L);
    double z = 0, ex2 = 0, eu = 0;
    for (int i = 0; i < n; ++i) {
        const double x = -L + 2.0 * L * i / (n - 1);
        const auto pv = p(x);
        const double w = std::exp(-(pv.value - umin)) * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
        z += w;
        ex2 += w * x * x;
        eu += w * pv.value;
    }
    if (o == Observable::x2) return ex2 / z;
    return d * (eu / z + 0.5);
}

struct ObservableDecay {
    double rate;
    bool oscillatory;
    int points;   ///< samples entering the fit
    double t_last;
};

/// Log-linear fit of |E f(t) - E_μ f| on the samples where it exceeds 5
/// standard errors.
///
/// The signed deviation is split into maximal same-sign lobes. With two or
/// more significant lobes the signal oscillates, and the fit uses only the
/// peak of each significant lobe that is followed by a sign change (the
/// peaks of a damped oscillation decay exactly at the envelope rate).
/// Otherwise every significant sample up to the first insignificant one
/// enters the fit.
inline ObservableDecay fit_observable_decay(const std::vector<double>& times, const std::vector<double>& mean,
                                            const std::vector<double>& se, double reference) {
    const std::size_t n = std::min({times.size(), mean.size(), se.size()});
    auto dev = [&](std::size_t k) { return mean[k] - reference; };
    auto significant = [&](std::size_t k) { return std::abs(dev(k)) > 5.0 * se[k]; };

    struct Lobe {
        std::size_t peak;
        bool closed;
    };
    std::vector<Lobe> lobes;
    for (std::size_t k = 0; k < n;) {
        const bool positive = dev(k) >= 0;
        std::size_t best = k, j = k;
        for (; j < n && (dev(j) >= 0) == positive; ++j)
            if (std::abs(dev(j)) > std::abs(dev(best))) best = j;
        if (significant(best)) lobes.push_back({best, j < n});
        k = j;
    }
    const bool osc = lobes.size() >= 2;

    std::vector<double> ft, fy;
    if (osc) {
        for (const auto& l : lobes)
            if (l.closed) {
                ft.push_back(times[l.peak]);
                fy.push_back(std::log(std::abs(dev(l.peak))));
            }
    } else {
        for (std::size_t k = 0; k < n; ++k) {
            if (!significant(k)) {
                if (!ft.empty()) break;
                continue;
            }
            ft.push_back(times[k]);
            fy.push_back(std::log(std::abs(dev(k))));
        }
    }
    const std::size_t needed = osc ? 2 : 3;
    if (ft.size() < needed) throw InsufficientSignalError("observable deviation is below 5 standard errors");
    const double m = static_cast<double>(ft.size());
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t k = 0; k < ft.size(); ++k) {
        st += ft[k];
        sy += fy[k];
        stt += ft[k] * ft[k];
        sty += ft[k] * fy[k];
    }
    const double slope = (m * sty - st * sy) / (m * stt - st * st);
    return {-slope, osc, static_cast<int>(ft.size()), ft.back()};
}

/// Ensemble started at x = init_shift; decay rate of E[x](t) towards 0.
inline ObservableDecay estimate_observable_decay(SdeConfig cfg, double init_shift,
                                                 Observable obs = Observable::x) {
    if (init_shift == 0.0) throw InsufficientSignalError("zero initial shift gives no signal");
    cfg.x0 = init_shift;
    if (std::find(cfg.observables.begin(), cfg.observables.end(), obs) == cfg.observables.end())
        cfg.observables.push_back(obs);
    const EnsembleTrace tr = run_ensemble(cfg);
    const std::size_t j = tr.column(obs);
    return fit_observable_decay(tr.times, tr.mean[j], tr.stderr_[j],
                                equilibrium_mean(obs, cfg.potential, cfg.d));
}

}  // namespace hypolab
