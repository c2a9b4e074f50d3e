#pragma once

#include <map>
#include <random>

#include "sindympc/dynamics.hpp"
#include "sindympc/features.hpp"
#include "sindympc/signals.hpp"
#include "sindympc/sysid.hpp"

namespace fixtures {

struct SeirData {
    sindympc::Trajectory      traj;
    Eigen::MatrixXd           xdot;
    sindympc::ControlledSystem sys;
};

// 100 days of PRBS-forced SEIR at dt 0.1 with exact derivatives.
inline const SeirData& seir_training(std::uint64_t seed = 0) {
    static std::map<std::uint64_t, SeirData> cache;
    auto it = cache.find(seed);
    if (it == cache.end()) {
        sindympc::signals::SignalSpec spec;
        spec.seed      = seed;
        const auto u   = sindympc::signals::generate(spec);
        const auto sys = sindympc::seir_system(sindympc::SeirParams{});
        auto traj      = sindympc::integrate_rk4(sys, sindympc::seir_default_x0(), u, spec.dt, spec.sample_count() - 1);
        auto xdot      = sindympc::exact_derivatives(sys, traj);
        it             = cache.emplace(seed, SeirData{std::move(traj), std::move(xdot), sys}).first;
    }
    return it->second;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0,
                                     double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Eigen::MatrixXd                        m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            m(i, j) = dist(rng);
        }
    }
    return m;
}

} // namespace fixtures
