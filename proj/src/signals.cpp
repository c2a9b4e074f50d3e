#include "sindympc/signals.hpp"

#include <cmath>

#include "sindympc/errors.hpp"

namespace sindympc::signals {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

bool all_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

} // namespace

std::string_view to_string(Kind kind) {
    switch (kind) {
    case Kind::prbs: return "prbs";
    case Kind::sinusoid_sum: return "sinusoid_sum";
    case Kind::step: return "step";
    case Kind::impulse: return "impulse";
    case Kind::constant: return "constant";
    }
    return "unknown";
}

Kind kind_from_string(std::string_view name) {
    for (Kind k : {Kind::prbs, Kind::sinusoid_sum, Kind::step, Kind::impulse, Kind::constant}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw InvalidSpec("unknown signal kind '" + std::string(name) + "'");
}

std::uint64_t splitmix64(std::uint64_t state) noexcept {
    std::uint64_t z = state + kGolden;
    z               = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z               = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void SignalSpec::validate() const {
    if (!(duration > 0.0) || !(dt > 0.0) || !std::isfinite(duration) || !std::isfinite(dt)) {
        throw InvalidSpec("signal duration and dt must be positive");
    }
    if (!all_finite(levels) || !all_finite(amplitudes) || !all_finite(frequencies) || !all_finite(phases) ||
        !all_finite(switch_times) || !std::isfinite(offset)) {
        throw InvalidSpec("signal parameters must be finite");
    }
    switch (kind) {
    case Kind::prbs:
        if (levels.empty()) {
            throw InvalidSpec("prbs needs at least one level");
        }
        if (!(hold >= dt)) {
            throw InvalidSpec("prbs hold must be at least one sample");
        }
        break;
    case Kind::sinusoid_sum:
        if (amplitudes.empty() || amplitudes.size() != frequencies.size() || amplitudes.size() != phases.size()) {
            throw InvalidSpec("sinusoid_sum needs equally many amplitudes, frequencies and phases");
        }
        break;
    case Kind::step:
        if (levels.size() != switch_times.size() + 1) {
            throw InvalidSpec("step needs one more level than switch times");
        }
        for (std::size_t j = 1; j < switch_times.size(); ++j) {
            if (!(switch_times[j] > switch_times[j - 1])) {
                throw InvalidSpec("step switch times must be increasing");
            }
        }
        break;
    case Kind::impulse:
        if (amplitudes.size() != switch_times.size() || switch_times.empty()) {
            throw InvalidSpec("impulse needs one amplitude per impulse time");
        }
        break;
    case Kind::constant:
        if (levels.empty()) {
            throw InvalidSpec("constant signal needs a level");
        }
        break;
    }
}

std::size_t SignalSpec::sample_count() const {
    return static_cast<std::size_t>(std::llround(duration / dt)) + 1;
}

Eigen::VectorXd generate(const SignalSpec& spec) {
    spec.validate();
    const auto      n = static_cast<Eigen::Index>(spec.sample_count());
    Eigen::VectorXd u(n);

    switch (spec.kind) {
    case Kind::prbs: {
        const auto count = static_cast<std::uint64_t>(spec.levels.size());
        for (Eigen::Index i = 0; i < n; ++i) {
            const double t      = static_cast<double>(i) * spec.dt;
            const auto   window = static_cast<std::uint64_t>(std::floor(t / spec.hold + 1e-9));
            // Counter-based: the level of a window depends only on (seed, window).
            const std::uint64_t r = splitmix64(spec.seed + window * kGolden);
            u[i]                  = spec.levels[static_cast<std::size_t>(r % count)];
        }
        break;
    }
    case Kind::sinusoid_sum:
        for (Eigen::Index i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) * spec.dt;
            double       v = spec.offset;
            for (std::size_t j = 0; j < spec.amplitudes.size(); ++j) {
                v += spec.amplitudes[j] * std::sin(spec.frequencies[j] * t + spec.phases[j]);
            }
            u[i] = v;
        }
        break;
    case Kind::step:
        for (Eigen::Index i = 0; i < n; ++i) {
            const double t     = static_cast<double>(i) * spec.dt;
            std::size_t  level = 0;
            while (level < spec.switch_times.size() && t + 1e-9 * spec.dt >= spec.switch_times[level]) {
                ++level;
            }
            u[i] = spec.levels[level];
        }
        break;
    case Kind::impulse:
        u.setConstant(spec.offset);
        for (std::size_t j = 0; j < spec.switch_times.size(); ++j) {
            const auto i = static_cast<Eigen::Index>(std::llround(spec.switch_times[j] / spec.dt));
            if (i >= 0 && i < n) {
                u[i] += spec.amplitudes[j];
            }
        }
        break;
    case Kind::constant:
        u.setConstant(spec.levels.front());
        break;
    }
    return u;
}

} // namespace sindympc::signals
