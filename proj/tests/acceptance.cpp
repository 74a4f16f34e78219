// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Every expected number is either closed form or plain arithmetic; tolerances
// are pinned inline next to the checks they gate.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "catalog.hpp"
#include "freeconv/convolution.hpp"
#include "freeconv/subordination.hpp"
#include "freeconv/transforms.hpp"
#include "freeconv/twoatom.hpp"
#include "freeconv/voiculescu.hpp"
#include "oracles.hpp"

using namespace freeconv;

namespace {

constexpr double kPi = 3.14159265358979323846;

int failures = 0;

void report(int criterion, const char* title, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, title,
                detail.c_str());
    if (!pass) ++failures;
}

std::string worstStr(double worst) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "worst %.3g", worst);
    return buf;
}

// 1. Atom criterion: exact pair arithmetic, strict inequality.
void criterion1() {
    bool pass = true;
    const auto atoms = convolve_atoms(testcat::atoms_64(), testcat::atoms_73());
    pass = pass && atoms.size() == 2;
    if (pass) {
        pass = pass && atoms[0].location == 0.0 && std::abs(atoms[0].mass - 0.3) <= 1e-15;
        pass = pass && atoms[1].location == 1.0 && std::abs(atoms[1].mass - 0.1) <= 1e-15;
    }
    const bool strict = convolve_atoms(testcat::bernoulli01(), testcat::bernoulli01()).empty();
    pass = pass && strict;
    report(1, "atom criterion, exact masses and strictness", pass,
           strict ? "exact match" : "strictness violated");
}

// 2. Subordination identities on a 21 x 5 grid over the six pairs.
void criterion2() {
    double worst = 0.0;
    int nonConverged = 0;
    std::vector<double> xs;
    for (int j = 0; j < 21; ++j) xs.push_back(-3.0 + 6.0 * j / 20.0);
    const std::vector<double> ys = {2.0, 1.0, 0.5, 0.2, 0.05};
    for (const auto& [name, pair] : testcat::pairs()) {
        const auto table = sweep(pair.first, pair.second, xs, ys);
        for (const auto& e : table.entries) {
            if (!e.result) {
                ++nonConverged;
                continue;
            }
            const auto& r = *e.result;
            const double scale = 1.0 + std::abs(e.z);
            const Complex sumGap =
                r.omega1.value() + r.omega2.value() - e.z - r.fValue.value();
            const Complex fGap = detail::f_transform(pair.first, r.omega1.value()) -
                                 detail::f_transform(pair.second, r.omega2.value());
            const double imGap =
                std::max(0.0, e.z.imag() - std::min(r.omega1.im(), r.omega2.im()));
            worst = std::max({worst, std::abs(sumGap) / scale, std::abs(fGap) / scale, imGap});
        }
    }
    report(2, "subordination identities on 21x5 grids, 6 pairs",
           worst <= 1e-10 && nonConverged == 0,
           worstStr(worst) + ", non-converged " + std::to_string(nonConverged));
}

// 3. phi additivity at 5i, 10i, 20i on every pair, plus the semicircle
//    closed form phi_mu + phi_nu = 2/z.
void criterion3() {
    double worst = 0.0;
    double worstClosed = 0.0;
    bool threw = false;
    const std::vector<HalfPlanePoint> points = {HalfPlanePoint(0, 5), HalfPlanePoint(0, 10),
                                                HalfPlanePoint(0, 20)};
    try {
        for (const auto& [name, pair] : testcat::pairs())
            for (const auto& s : check_additivity(pair.first, pair.second, points))
                worst = std::max(worst, s.residual);
        for (const auto& s :
             check_additivity(testcat::semicircle_std(), testcat::semicircle_std(), points))
            worstClosed = std::max(worstClosed, std::abs(s.phiMu + s.phiNu - 2.0 / s.z));
    } catch (const Error&) {
        threw = true;
    }
    report(3, "phi additivity <= 1e-8 at {5i,10i,20i}, all pairs",
           !threw && worst <= 1e-8 && worstClosed <= 1e-8,
           worstStr(worst) + ", semicircle 2/z gap " + worstStr(worstClosed).substr(6));
}

// 4. Bernoulli (+) Bernoulli is the arcsine law on (0, 2).
void criterion4() {
    std::vector<double> xs;
    for (int j = 0; j < 50; ++j) xs.push_back(0.1 + 1.8 * j / 49.0);
    xs.push_back(1.0);
    std::sort(xs.begin(), xs.end());
    const auto table = convolve_density(testcat::bernoulli01(), testcat::bernoulli01(), xs);
    double worst = 1.0;
    double atOne = -1.0;
    if (table.samples.size() == xs.size()) {
        worst = 0.0;
        for (const auto& s : table.samples) {
            worst = std::max(worst, std::abs(s.f - oracle::arcsine_density_cf(0.0, 2.0, s.x)));
            if (s.x == 1.0) atOne = s.f;
        }
    }
    const bool pass = worst <= 1e-3 && std::abs(atOne - 0.31831) <= 1e-3;
    report(4, "Bernoulli pair matches 1/(pi sqrt(x(2-x))) on [0.1,1.9]", pass,
           worstStr(worst) + ", f(1) = " + std::to_string(atOne));
}

// 5. Semicircle radius addition: density and support endpoints.
void criterion5() {
    const double radius = 2.0 * std::sqrt(2.0);
    std::vector<double> xs;
    for (int j = 0; j < 50; ++j) xs.push_back(-0.9 * radius + 1.8 * radius * j / 49.0);
    const auto table = convolve_density(testcat::semicircle_std(), testcat::semicircle_std(), xs);
    double worst = 1.0;
    if (table.samples.size() == xs.size()) {
        worst = 0.0;
        for (const auto& s : table.samples)
            worst = std::max(worst,
                             std::abs(s.f - oracle::semicircle_density(0.0, radius, s.x)));
    }

    const auto full = convolve(testcat::semicircle_std(), testcat::semicircle_std());
    const double step = (2.0 * (radius + 1.0)) / 2000.0;
    bool supportOk = full.supportIntervals.size() == 1;
    double edgeGap = 1.0;
    if (supportOk) {
        edgeGap = std::max(std::abs(full.supportIntervals[0].first + radius),
                           std::abs(full.supportIntervals[0].second - radius));
        supportOk = edgeGap <= step;
    }
    report(5, "semicircle pair matches semicircle(0, 2 sqrt 2)", worst <= 1e-3 && supportOk,
           worstStr(worst) + ", edge gap " + std::to_string(edgeGap) + " vs step " +
               std::to_string(step));
}

// 6. Mass conservation: atoms + ac quadrature exhaust mass 1 (sc part zero).
void criterion6() {
    double worst = 0.0;
    bool pass = true;
    for (const auto& [name, pair] : testcat::pairs()) {
        try {
            const auto r = convolve(pair.first, pair.second);
            worst = std::max(worst, std::abs(r.massReport.deficit));
        } catch (const Error&) {
            pass = false;
        }
    }
    report(6, "mass deficit <= 5e-3 on all six pairs", pass && worst <= 5e-3, worstStr(worst));
}

// 7. Two-atom oracle vs the iterative engine on 100 seeded samples.
void criterion7() {
    std::mt19937_64 rng(testcat::kSeed);
    std::uniform_real_distribution<double> loc(-2.0, 2.0), weight(0.1, 0.9);
    std::uniform_real_distribution<double> re(-2.0, 2.0), im(1.0, 3.0);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        double u = loc(rng), v = loc(rng);
        if (std::abs(u - v) < 0.1) v = u + 0.5;
        double w = loc(rng), x = loc(rng);
        if (std::abs(w - x) < 0.1) x = w + 0.5;
        const auto mu = make_two_atom(u, v, weight(rng));
        const auto nu = make_two_atom(w, x, weight(rng));
        const HalfPlanePoint z(re(rng), im(rng));
        const Complex quad = omega1_quadratic(mu, nu, z).value();
        const Complex engine =
            denjoy_wolff(to_measure(mu), to_measure(nu), z, z).omega1.value();
        worst = std::max(worst, std::abs(quad - engine));
    }
    report(7, "quadratic oracle vs engine on 100 seeded samples", worst <= 1e-10,
           worstStr(worst));
}

// 8. Stieltjes inversion self-test: shape densities and atomic masses.
void criterion8() {
    double worstDensity = 0.0;
    for (const Measure& m : {testcat::semicircle_std(), testcat::uniform01(),
                             testcat::arcsine02(), testcat::triangle_pwl()}) {
        const auto [lo, hi] = support_bounds(m);
        for (int j = 0; j < 20; ++j) {
            const double x = lo + (hi - lo) * (0.1 + 0.8 * j / 19.0);
            double expected = 0.0;
            for (const auto& c : m.acParts) expected += c.weight * shape_density(c.shape, x);
            const double got =
                density_from_g([&](Complex z) { return detail::cauchy_g(m, z); }, x);
            worstDensity = std::max(worstDensity, std::abs(got - expected));
        }
    }
    double worstMass = 0.0;
    for (const Measure& m : {testcat::bernoulli01(), testcat::atoms_64(), testcat::atoms_73(),
                             testcat::five_atoms()}) {
        for (const auto& a : m.atoms) {
            const auto est = atom_mass_estimate(
                [&](Complex z) { return detail::cauchy_g(m, z); }, a.location);
            worstMass = std::max(worstMass, std::abs(est.mass - a.mass));
        }
    }
    report(8, "density self-test 1e-6, atomic masses 1e-8",
           worstDensity <= 1e-6 && worstMass <= 1e-8,
           "density " + worstStr(worstDensity).substr(6) + ", mass " +
               worstStr(worstMass).substr(6));
}

// 9. Point-mass translation: atoms exact, density within 1e-9.
void criterion9() {
    bool atomsExact = true;
    double worst = 0.0;
    const std::vector<std::pair<Measure, double>> cases = {
        {testcat::semicircle_std(), 3.0},
        {testcat::mixed_atom_ac(), -1.25},
        {testcat::triangle_pwl(), 0.5}};
    for (const auto& [m, a] : cases) {
        const Measure shifted = shift_scale(m, a, 1.0);
        const auto atoms = convolve_atoms(m, point_mass(a));
        atomsExact = atomsExact && atoms.size() == shifted.atoms.size();
        for (std::size_t i = 0; atomsExact && i < atoms.size(); ++i)
            atomsExact = atoms[i].location == shifted.atoms[i].location &&
                         atoms[i].mass == shifted.atoms[i].mass;

        const auto [lo, hi] = support_bounds(shifted);
        std::vector<double> xs;
        for (int j = 0; j < 15; ++j) xs.push_back(lo + (hi - lo) * (0.08 + 0.84 * j / 14.0));
        const auto table = convolve_density(m, point_mass(a), xs);
        // both sides of the comparison read the ac part of G, poles removed
        auto gClean = [&shifted](Complex z) {
            Complex g = detail::cauchy_g(shifted, z);
            for (const auto& at : shifted.atoms) g -= at.mass / (z - at.location);
            return g;
        };
        for (const auto& s : table.samples) {
            const double direct = density_from_g(gClean, s.x);
            worst = std::max(worst, std::abs(s.f - direct));
        }
    }
    report(9, "convolution with delta_a is the translation by a",
           atomsExact && worst <= 1e-9, worstStr(worst));
}

// 10. Nevanlinna diagnostics across the catalog.
void criterion10() {
    double worstIm = 0.0;
    double worstTail = 0.0;
    std::vector<HalfPlanePoint> samples;
    for (double x : {-2.0, -0.5, 0.0, 1.0, 2.5})
        for (double y : {0.1, 1.0, 10.0}) samples.emplace_back(x, y);
    for (const auto& [name, m] : testcat::measures()) {
        for (const auto& z : samples) {
            const Complex f = detail::f_transform(m, z.value());
            worstIm = std::max(worstIm, z.im() - f.imag());
        }
        const auto rep = nevanlinna_diagnostics(m, samples);
        worstTail = std::max(worstTail, rep.tailError[3]);
    }
    report(10, "Im F >= Im z - 1e-12 and F(i 1e4)/(i 1e4) -> 1",
           worstIm <= 1e-12 && worstTail < 1e-3,
           "Im gap " + worstStr(worstIm).substr(6) + ", tail " + worstStr(worstTail).substr(6));
}

} // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%d/10 criteria passed in %.1f s\n", 10 - failures, seconds);
    return failures == 0 ? 0 : 1;
}
