#pragma once

// Independent oracles for the test suites. Everything here recomputes
// expected values from first principles (quadrature, brute-force scans,
// closed forms) without touching the code paths under test.

#include <cmath>
#include <functional>
#include <vector>

#include "freeconv/measure.hpp"

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

/// Composite Simpson quadrature on a fixed grid.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int n = 20000) {
    if (n % 2 != 0) ++n;
    const double h = (b - a) / n;
    double sum = f(a) + f(b);
    for (int i = 1; i < n; i += 2) sum += 4.0 * f(a + i * h);
    for (int i = 2; i < n; i += 2) sum += 2.0 * f(a + i * h);
    return sum * h / 3.0;
}

/// k-th raw moment of a density by quadrature.
inline double density_moment(const std::function<double(double)>& density, double lo,
                             double hi, int k, int n = 200000) {
    return simpson([&](double t) { return std::pow(t, k) * density(t); }, lo, hi, n);
}

inline double semicircle_density(double center, double radius, double x) {
    const double d = x - center;
    const double rad2 = radius * radius - d * d;
    return rad2 > 0.0 ? 2.0 * std::sqrt(rad2) / (kPi * radius * radius) : 0.0;
}

inline double uniform_density(double a, double b, double x) {
    return (x >= a && x <= b) ? 1.0 / (b - a) : 0.0;
}

inline double arcsine_density_cf(double a, double b, double x) {
    return (x > a && x < b) ? 1.0 / (kPi * std::sqrt((x - a) * (b - x))) : 0.0;
}

/// k-th raw moment of the arcsine law on (a, b) by quadrature after the
/// substitution t = c + r sin(theta), which removes the endpoint singularity.
inline double arcsine_moment(double a, double b, int k, int n = 20000) {
    const double c = 0.5 * (a + b);
    const double r = 0.5 * (b - a);
    return simpson([&](double theta) { return std::pow(c + r * std::sin(theta), k) / kPi; },
                   -kPi / 2.0, kPi / 2.0, n);
}

/// Literal pair scan for the atoms of a free additive convolution: every
/// (b, c) with mu({b}) + nu({c}) > 1 contributes the atom (b + c, sum - 1).
/// Deliberately re-implemented here, independent of the library's version.
inline std::vector<freeconv::Atom> brute_force_atoms(const freeconv::Measure& mu,
                                                     const freeconv::Measure& nu) {
    std::vector<freeconv::Atom> out;
    for (const auto& a : mu.atoms) {
        for (const auto& b : nu.atoms) {
            const double sum = a.mass + b.mass;
            if (sum > 1.0) out.push_back({a.location + b.location, sum - 1.0});
        }
    }
    std::sort(out.begin(), out.end(), [](const freeconv::Atom& x, const freeconv::Atom& y) {
        return x.location < y.location;
    });
    return out;
}

} // namespace oracle
