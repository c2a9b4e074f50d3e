#include <doctest.h>

#include <cmath>
#include <set>

#include "sindympc/errors.hpp"
#include "sindympc/signals.hpp"

using namespace sindympc;
using signals::Kind;
using signals::SignalSpec;

TEST_SUITE("signals") {

TEST_CASE("benchmark prbs") {
    SignalSpec spec;
    spec.seed          = 42;
    const auto u       = signals::generate(spec);
    REQUIRE(u.size() == 1001);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        CHECK((u[i] == 0.15 || u[i] == 0.5));
    }
}

TEST_CASE("prbs properties over many seeds") {
    std::set<std::vector<double>> patterns;
    for (std::uint64_t seed = 0; seed < 64; ++seed) {
        SignalSpec spec;
        spec.seed    = seed * 7919 + 3;
        spec.levels  = {0.15, 0.3, 0.5};
        spec.hold    = 3.5;
        const auto u = signals::generate(spec);
        CHECK(u.size() == 1001);
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            CHECK(std::find(spec.levels.begin(), spec.levels.end(), u[i]) != spec.levels.end());
            // Constant within each hold window.
            const auto window = static_cast<long>(std::floor(static_cast<double>(i) * spec.dt / spec.hold + 1e-9));
            if (i > 0 && static_cast<long>(std::floor(static_cast<double>(i - 1) * spec.dt / spec.hold + 1e-9)) == window) {
                CHECK(u[i] == u[i - 1]);
            }
        }
        patterns.emplace(u.data(), u.data() + u.size());
    }
    CHECK(patterns.size() == 64);
}

TEST_CASE("generation is deterministic and extends as a prefix") {
    SignalSpec spec;
    spec.seed          = 9;
    const auto a       = signals::generate(spec);
    const auto b       = signals::generate(spec);
    CHECK(a == b);
    spec.duration      = 300.0;
    const auto longer  = signals::generate(spec);
    CHECK(longer.size() == 3001);
    CHECK(longer.head(a.size()) == a);
}

TEST_CASE("constant, sinusoid, step, impulse") {
    SignalSpec c;
    c.kind   = Kind::constant;
    c.levels = {0.5};
    CHECK((signals::generate(c).array() == 0.5).all());

    SignalSpec s;
    s.kind        = Kind::sinusoid_sum;
    s.offset      = 0.3;
    s.amplitudes  = {0.1, 0.05};
    s.frequencies = {0.2, 1.0};
    s.phases      = {0.0, 0.5};
    s.duration    = 10.0;
    const auto u  = signals::generate(s);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double t = static_cast<double>(i) * 0.1;
        CHECK(u[i] == doctest::Approx(0.3 + 0.1 * std::sin(0.2 * t) + 0.05 * std::sin(t + 0.5)).epsilon(1e-14));
    }

    SignalSpec st;
    st.kind         = Kind::step;
    st.levels       = {0.5, 0.15, 0.3};
    st.switch_times = {2.0, 5.0};
    st.duration     = 8.0;
    const auto v    = signals::generate(st);
    CHECK(v[0] == 0.5);
    CHECK(v[19] == 0.5);
    CHECK(v[20] == 0.15);
    CHECK(v[49] == 0.15);
    CHECK(v[50] == 0.3);
    CHECK(v[80] == 0.3);

    SignalSpec im;
    im.kind         = Kind::impulse;
    im.offset       = 0.5;
    im.amplitudes   = {-0.3};
    im.switch_times = {1.04};
    im.duration     = 2.0;
    const auto w    = signals::generate(im);
    CHECK(w[10] == doctest::Approx(0.2));
    CHECK((w.array() != 0.5).count() == 1);
}

TEST_CASE("invalid specs") {
    SignalSpec s;
    s.levels = {};
    CHECK_THROWS_AS(s.validate(), InvalidSpec);
    s        = SignalSpec{};
    s.dt     = 0.0;
    CHECK_THROWS_AS((void)signals::generate(s), InvalidSpec);
    s          = SignalSpec{};
    s.duration = -1.0;
    CHECK_THROWS_AS(s.validate(), InvalidSpec);
    s      = SignalSpec{};
    s.hold = 0.01;
    CHECK_THROWS_AS(s.validate(), InvalidSpec);
    s              = SignalSpec{};
    s.kind         = Kind::step;
    s.switch_times = {1.0, 2.0};
    CHECK_THROWS_AS(s.validate(), InvalidSpec);
    CHECK_THROWS_AS((void)signals::kind_from_string("chirp"), InvalidSpec);
    CHECK(signals::kind_from_string("sinusoid_sum") == Kind::sinusoid_sum);
}

TEST_CASE("splitmix64 reference values") {
    // First outputs of the reference SplitMix64 generator seeded with 0.
    CHECK(signals::splitmix64(0) == 0xE220A8397B1DCDAFULL);
    CHECK(signals::splitmix64(0x9E3779B97F4A7C15ULL) == 0x6E789E6AA1B965F4ULL);
}

} // TEST_SUITE
