#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>

#include "hypolab/hypolab.hpp"

namespace hypolab::testing {

/// Operator sets are expensive at the default resolution; build each
/// (potential, L, N_x, N_v) combination once per test binary.
inline const OperatorSet& cached_ops(const Potential& p, double L, int nx, int nv) {
    using Key = std::tuple<int, double, double, int, int>;
    static std::map<Key, std::unique_ptr<OperatorSet>> cache;
    static std::mutex mu;
    std::lock_guard lock(mu);
    const Key key{static_cast<int>(p.kind()), p.params()[0], L, nx, nv};
    auto& slot = cache[key];
    if (!slot) slot = std::make_unique<OperatorSet>(build_operator_set(make_gibbs_model(p), L, nx, nv));
    return *slot;
}

inline const OperatorSet& cached_ops(const Potential& p, int nx, int nv) {
    return cached_ops(p, auto_half_width(p), nx, nv);
}

inline Eigen::VectorXd random_mean_zero(const OperatorSet& ops, std::uint64_t seed) {
    return initial_state(ops, InitialKind::random, seed);
}

}  // namespace hypolab::testing
