#include "gfm/frames.hpp"
#include "properties.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>

using namespace gfm;

namespace {

ThreePhase cos_triplet(double angle, double mag = 1.0) {
    return {mag * std::cos(angle), mag * std::cos(angle - kTwoPi / 3.0), mag * std::cos(angle + kTwoPi / 3.0)};
}

}  // namespace

TEST_SUITE("frames") {

TEST_CASE("park aligns a cosine triplet with d") {
    for (const double theta : {0.0, 0.4, -2.1, 7.0}) {
        const DqFrame x = abc_to_dq(cos_triplet(theta), theta);
        CHECK(x.d == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::abs(x.q) < 1e-14);
        const DqFrame y = abc_to_dq(cos_triplet(theta), theta - kPi / 2.0);
        CHECK(std::abs(y.d) < 1e-14);
        CHECK(y.q == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("park rejects the zero sequence") {
    const DqFrame x = abc_to_dq({0.7, 0.7, 0.7}, 1.3);
    CHECK(std::abs(x.d) < 1e-15);
    CHECK(std::abs(x.q) < 1e-15);
}

TEST_CASE("inverse park") {
    const ThreePhase x = dq_to_abc({1.0, 0.0, 0.0});
    CHECK(x.a == doctest::Approx(1.0));
    CHECK(x.b == doctest::Approx(-0.5));
    CHECK(x.c == doctest::Approx(-0.5));
    CHECK(dq_to_abc({0.0, 0.0, 0.4}) == ThreePhase{0.0, 0.0, 0.0});
}

TEST_CASE("park round trip") {
    const test::PropertyResult r = test::park_round_trip(1, 100000);
    INFO(r.detail);
    CHECK(r.value < 1e-12);
}

TEST_CASE("combined park") {
    for (const double theta : {0.0, 1.0, -2.5}) {
        const DqFrame x = combined_park({1.0, 0.0, 0.0, 0.0}, theta);
        CHECK(x.d == doctest::Approx(1.0));
        CHECK(std::abs(x.q) < 1e-15);
    }
    const DqFrame z = combined_park({0.0, 0.0, 1.0, 0.0}, 0.0);
    CHECK(z.d == doctest::Approx(1.0));
    CHECK(std::abs(z.q) < 1e-15);

    const DqFrame r = combined_park({0.0, 0.0, 1.0, 0.0}, kPi / 4.0);
    CHECK(std::abs(r.d) < 1e-15);
    CHECK(r.q == doctest::Approx(-1.0));
}

TEST_CASE("combined park matches park of the reconstructed signal") {
    const SequenceFrames i{0.6, -0.3, 0.25, 0.1};
    for (const double theta : {0.0, 0.3, kPi / 4.0, 2.0, -1.2}) {
        const DqFrame a = combined_park(i, theta);
        const DqFrame b = abc_to_dq(sequences_to_abc(i, theta), theta);
        CHECK(a.d == doctest::Approx(b.d).epsilon(1e-12));
        CHECK(a.q == doctest::Approx(b.q).epsilon(1e-12));
    }
}

TEST_CASE("ddsrf separates pure sequences") {
    const double w = kTwoPi * 50.0;
    const double dt = 20e-6;
    DdsrfState pos;
    DdsrfState neg;
    SequenceFrames sp;
    SequenceFrames sn;
    for (int k = 0; k < 10000; ++k) {
        const double theta = w * k * dt;
        sp = ddsrf_step(pos, cos_triplet(theta), theta, dt);
        sn = ddsrf_step(neg, cos_triplet(-theta + 0.4, 0.3), theta, dt);
    }
    CHECK(sp.dp == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(sp.qp) < 1e-6);
    CHECK(std::hypot(sp.dn, sp.qn) < 1e-6);
    CHECK(std::hypot(sn.dp, sn.qp) < 1e-6);
    CHECK(sn.negative_magnitude() == doctest::Approx(0.3).epsilon(1e-6));
}

TEST_CASE("ddsrf against symmetrical components") {
    const test::PropertyResult r = test::ddsrf_vs_symmetrical_components(7, 20);
    INFO(r.detail);
    CHECK(r.value < 1e-3);
}

TEST_CASE("per-unit bases") {
    const PerUnitBase b = PerUnitBase::reference();
    CHECK(b.v_base_lv == doctest::Approx(std::sqrt(2.0 / 3.0) * 400.0));
    CHECK(b.v_base_lv == doctest::Approx(326.60).epsilon(1e-4));
    CHECK(b.i_base_lv == doctest::Approx(2.0 / 3.0 * 2.0e6 / (std::sqrt(2.0 / 3.0) * 400.0)));
    CHECK(b.i_base_lv == doctest::Approx(4082.5).epsilon(1e-4));
    CHECK(b.v_base_grid == doctest::Approx(std::sqrt(2.0 / 3.0) * 20.0e3));
    CHECK(to_per_unit(0.0, b, Side::lv, Quantity::voltage) == 0.0);
    CHECK(to_per_unit(326.6, b, Side::lv, Quantity::voltage) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(from_per_unit(to_per_unit(123.0, b, Side::grid, Quantity::current), b, Side::grid, Quantity::current) ==
          doctest::Approx(123.0));
}

}
