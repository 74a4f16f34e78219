#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "catalog.hpp"
#include "freeconv/subordination.hpp"

using namespace freeconv;

namespace {

double cabs(Complex z) { return std::abs(z); }

void check_invariants(const Measure& mu, const Measure& nu, Complex z,
                      const SubordinationResult& r) {
    const double scale = 1.0 + cabs(z);
    CHECK(r.omega1.im() >= z.imag() - 1e-10);
    CHECK(r.omega2.im() >= z.imag() - 1e-10);
    CHECK(cabs(r.omega1.value() + r.omega2.value() - z - r.fValue.value()) <= 1e-10 * scale);
    const Complex fmu = detail::f_transform(mu, r.omega1.value());
    const Complex fnu = detail::f_transform(nu, r.omega2.value());
    CHECK(cabs(fmu - fnu) <= 1e-10 * (1.0 + cabs(r.fValue.value())));
}

} // namespace

TEST_CASE("fz_step: point-mass second factor collapses to a constant map") {
    const Measure sc = testcat::semicircle_std();
    const Measure d = point_mass(2.0);
    const HalfPlanePoint z(0.5, 1.5);
    for (const Complex w : {Complex(0, 1), Complex(1, 2), Complex(-3, 0.4)})
        CHECK(cabs(fz_step(sc, d, z, HalfPlanePoint(w)).value() - (z.value() - 2.0)) <= 1e-13);
}

TEST_CASE("fz_step: half-half pair worked example at z = 2i") {
    const Measure b = testcat::bernoulli_pm1();
    const Complex got = fz_step(b, b, HalfPlanePoint(0, 2), HalfPlanePoint(0, 2)).value();
    CHECK(cabs(got - Complex(0.0, 2.4)) <= 1e-14);
}

TEST_CASE("fz_step: fixed point of the half-half pair stays fixed") {
    const Measure b = testcat::bernoulli_pm1();
    const Complex w(0.0, 1.0 + std::sqrt(2.0));
    CHECK(cabs(fz_step(b, b, HalfPlanePoint(0, 2), HalfPlanePoint(w)).value() - w) <= 1e-14);
}

TEST_CASE("denjoy_wolff: half-half pair converges to (1 + sqrt 2) i") {
    const Measure b = testcat::bernoulli_pm1();
    const auto r = denjoy_wolff(b, b, HalfPlanePoint(0, 2), HalfPlanePoint(0, 2), 1e-12);
    CHECK(cabs(r.omega1.value() - Complex(0.0, 1.0 + std::sqrt(2.0))) <= 1e-11);
    CHECK(r.residual <= 1e-11);
    check_invariants(b, b, Complex(0, 2), r);
}

TEST_CASE("denjoy_wolff: point-mass factor converges immediately by translation") {
    const Measure sc = testcat::semicircle_std();
    const Measure d3 = point_mass(3.0);
    const HalfPlanePoint z(0.0, 1.0);
    const auto r = denjoy_wolff(sc, d3, z, z);
    CHECK(cabs(r.omega1.value() - Complex(-3.0, 1.0)) <= 1e-14);
    CHECK(r.iterations <= 2);
    CHECK(cabs(r.fValue.value() - detail::f_transform(sc, Complex(-3.0, 1.0))) <= 1e-13);
}

TEST_CASE("denjoy_wolff: symmetric semicircle pair matches the closed form") {
    const Measure sc = testcat::semicircle_std();
    const HalfPlanePoint z(0.0, 3.0);
    const auto r = denjoy_wolff(sc, sc, z, z, 1e-13);
    CHECK(cabs(r.omega1.value() - r.omega2.value()) <= 1e-10);
    CHECK(r.residual <= 1e-12);
    // omega = (3z + sqrt(z^2 - 8)) / 4 with the branch in C+
    const Complex expected = (3.0 * z.value() + std::sqrt(z.value() * z.value() - 8.0)) / 4.0;
    CHECK(cabs(r.omega1.value() - expected) <= 1e-12);
}

TEST_CASE("denjoy_wolff validates tolerance and iteration cap") {
    const Measure b = testcat::bernoulli_pm1();
    CHECK_THROWS_AS(denjoy_wolff(b, b, HalfPlanePoint(0, 2), HalfPlanePoint(0, 2), 0.0), Error);
    CHECK_THROWS_AS(denjoy_wolff(b, b, HalfPlanePoint(0, 2), HalfPlanePoint(0, 2), 1e-13, 0),
                    Error);
}

TEST_CASE("denjoy_wolff reports non-convergence with the residual") {
    const Measure sc = testcat::semicircle_std();
    try {
        denjoy_wolff(sc, sc, HalfPlanePoint(0.0, 0.01), HalfPlanePoint(0.0, 0.01), 1e-16, 3);
        FAIL("expected non-convergence");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonConvergence);
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("subordination identities across the catalog pairs") {
    for (const auto& [name, pair] : testcat::pairs()) {
        INFO(name);
        for (double x : {-1.5, 0.0, 0.8}) {
            for (double y : {2.0, 0.5}) {
                const HalfPlanePoint z(x, y);
                const auto r = subordinate(pair.first, pair.second, z);
                check_invariants(pair.first, pair.second, z.value(), r);
            }
        }
    }
}

TEST_CASE("residuals contract monotonically once settled (Im z >= 1)") {
    for (const auto& [name, pair] : testcat::pairs()) {
        INFO(name);
        const Complex z(0.4, 1.0);
        Complex w = z;
        std::vector<double> steps;
        for (int k = 0; k < 25; ++k) {
            const Complex wn = detail::fz_step(pair.first, pair.second, z, w);
            steps.push_back(cabs(wn - w));
            w = wn;
        }
        for (std::size_t k = 3; k + 1 < steps.size(); ++k) {
            if (steps[k] <= 1e-15) break; // at the rounding floor
            CHECK(steps[k + 1] <= steps[k] * (1.0 + 1e-9));
        }
    }
}

TEST_CASE("omega normalization at large heights: |omega(iy)/iy - 1| <= 10/y") {
    for (const auto& [name, pair] : testcat::pairs()) {
        INFO(name);
        for (double y : {100.0, 1000.0}) {
            const auto r = subordinate(pair.first, pair.second, HalfPlanePoint(0.0, y));
            const Complex ratio = r.omega1.value() / Complex(0.0, y);
            CHECK(cabs(ratio - 1.0) <= 10.0 / y);
        }
    }
}

TEST_CASE("exchanging the measures swaps the subordination pair") {
    for (const auto& [name, pair] : testcat::pairs()) {
        INFO(name);
        const HalfPlanePoint z(0.3, 0.7);
        const auto ab = subordinate(pair.first, pair.second, z);
        const auto ba = subordinate(pair.second, pair.first, z);
        CHECK(cabs(ab.omega1.value() - ba.omega2.value()) <= 1e-10);
        CHECK(cabs(ab.omega2.value() - ba.omega1.value()) <= 1e-10);
    }
}

TEST_CASE("sweep: single entry equals a direct solve") {
    const Measure b = testcat::bernoulli_pm1();
    const auto table = sweep(b, b, {0.0}, {2.0});
    REQUIRE(table.entries.size() == 1);
    REQUIRE(table.at(0, 0).result.has_value());
    CHECK(cabs(table.at(0, 0).result->omega1.value() - Complex(0.0, 1.0 + std::sqrt(2.0))) <=
          1e-11);
}

TEST_CASE("sweep: empty grid produces an empty table") {
    const Measure b = testcat::bernoulli_pm1();
    const auto table = sweep(b, b, {}, {1.0});
    CHECK(table.entries.empty());
}

TEST_CASE("sweep: even pair is mirror-symmetric in x") {
    const Measure sc = testcat::semicircle_std();
    const std::vector<double> xs = {-1.5, -0.5, 0.0, 0.5, 1.5};
    const auto table = sweep(sc, sc, xs, {1.0, 0.25});
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const std::size_t mirror = xs.size() - 1 - i;
        for (std::size_t iy = 0; iy < 2; ++iy) {
            REQUIRE(table.at(i, iy).result.has_value());
            const Complex a = table.at(i, iy).result->omega1.value();
            const Complex b = table.at(mirror, iy).result->omega1.value();
            CHECK(cabs(a - Complex(-b.real(), b.imag())) <= 1e-9);
        }
    }
}

TEST_CASE("sweep: warm starts do not bias the solutions") {
    const Measure sc = testcat::semicircle_std();
    const Measure mx = testcat::mixed_atom_ac();
    const std::vector<double> xs = {-1.0, -0.3, 0.4, 1.1};
    const std::vector<double> ys = {1.0, 0.4, 0.1};
    const auto table = sweep(sc, mx, xs, ys);
    for (std::size_t ix = 0; ix < xs.size(); ++ix)
        for (std::size_t iy = 0; iy < ys.size(); ++iy) {
            REQUIRE(table.at(ix, iy).result.has_value());
            const HalfPlanePoint z(xs[ix], ys[iy]);
            const auto direct = denjoy_wolff(sc, mx, z, z);
            CHECK(cabs(table.at(ix, iy).result->omega1.value() - direct.omega1.value()) <= 1e-10);
        }
}

TEST_CASE("sweep: per-point failures are recorded, not thrown") {
    const Measure sc = testcat::semicircle_std();
    SubordinationOptions opts;
    opts.maxIter = 2; // force failures
    const auto table = sweep(sc, sc, {0.0, 1.0}, {0.5}, opts);
    REQUIRE(table.entries.size() == 2);
    for (const auto& e : table.entries) {
        CHECK_FALSE(e.result.has_value());
        CHECK_FALSE(e.failure.empty());
    }
}

TEST_CASE("sweep validates grid ordering") {
    const Measure b = testcat::bernoulli_pm1();
    CHECK_THROWS_AS(sweep(b, b, {1.0, 0.0}, {1.0}), Error);
    CHECK_THROWS_AS(sweep(b, b, {0.0}, {0.5, 1.0}), Error);
    CHECK_THROWS_AS(sweep(b, b, {0.0}, {1.0, -0.5}), Error);
}

TEST_CASE("delegated two-atom results satisfy the same contract") {
    const Measure a = testcat::atoms_64();
    const Measure b = testcat::atoms_73();
    const HalfPlanePoint z(0.7, 0.02); // low, where plain iteration crawls
    const auto r = subordinate(a, b, z);
    CHECK(r.iterations == 0);
    check_invariants(a, b, z.value(), r);

    // forced iteration from a continued start agrees
    const auto iter = denjoy_wolff_continued(a, b, z);
    CHECK(cabs(iter.omega1.value() - r.omega1.value()) <= 1e-9);
}
