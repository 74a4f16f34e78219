#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

#include "freeconv/halfplane.hpp"
#include "freeconv/measure.hpp"

namespace freeconv {

// ---------------------------------------------------------------------------
// Cauchy transform G(z) = int dm(t) / (z - t) and F = 1/G on the upper
// half-plane, in closed form per shape. Everything here is a pure function of
// an immutable Measure, safe to evaluate concurrently.
// ---------------------------------------------------------------------------

namespace detail {

constexpr double kPi = 3.14159265358979323846;

/// sqrt((z-a)(z-b)) as sqrt(z-a)*sqrt(z-b) with principal square roots.
/// For z off [a, b] this is the branch asymptotic to z at infinity, mapping
/// C+ into C+; it is the one making 1/sqrt(...) a Cauchy transform.
inline Complex sqrt_product(Complex z, double a, double b) {
    return std::sqrt(z - a) * std::sqrt(z - b);
}

// G = 2 (zeta - sqrt(zeta^2 - r^2)) / r^2, written as 2 / (zeta + sqrt(...))
// to avoid the cancellation of the direct difference far from the support.
inline Complex semicircle_g(const Semicircle& s, Complex z) {
    const Complex zeta = z - s.center;
    const Complex root = sqrt_product(zeta, -s.radius, s.radius);
    return 2.0 / (zeta + root);
}

inline Complex semicircle_g_prime(const Semicircle& s, Complex z) {
    const Complex zeta = z - s.center;
    const Complex root = sqrt_product(zeta, -s.radius, s.radius);
    return -2.0 / ((zeta + root) * root);
}

inline Complex arcsine_g(const Arcsine& s, Complex z) {
    return 1.0 / sqrt_product(z, s.left, s.right);
}

inline Complex arcsine_g_prime(const Arcsine& s, Complex z) {
    const Complex g = arcsine_g(s, z);
    return -0.5 * (2.0 * z - s.left - s.right) * g * g * g;
}

// log((z-a)/(z-b)) as a single principal log: the ratio never touches the
// branch cut for z off [a, b], and the one-division form keeps the value
// accurate where the two separate logs would cancel.
inline Complex uniform_g(const Uniform& s, Complex z) {
    return std::log((z - s.left) / (z - s.right)) / (s.right - s.left);
}

inline Complex uniform_g_prime(const Uniform& s, Complex z) {
    return (1.0 / (z - s.left) - 1.0 / (z - s.right)) / (s.right - s.left);
}

// Exact antiderivative of (c0 + c1 t) / (z - t) over a segment [p, q]:
//   (c0 + c1 z) (log(z-p) - log(z-q)) - c1 (q - p).
// int (t - center)^k rho(t) dt, exact per linear segment.
inline double pwl_central_moment(const PiecewiseLinear& s, double center, int k) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < s.nodes.size(); ++i) {
        const double p = s.nodes[i].x, q = s.nodes[i + 1].x;
        const double fp = s.nodes[i].f, fq = s.nodes[i + 1].f;
        const double c1 = (fq - fp) / (q - p);
        const double up = p - center, uq = q - center;
        total += (fp + c1 * (center - p)) *
                     (std::pow(uq, k + 1) - std::pow(up, k + 1)) / (k + 1) +
                 c1 * (std::pow(uq, k + 2) - std::pow(up, k + 2)) / (k + 2);
    }
    return total;
}

// The linear-times-log antiderivative cancels two O(1) terms down to O(1/z)
// far from the support, so beyond four support radii G switches to the
// central-moment series sum_k M_k / (z - c)^{k+1}; with |M_k| <= R^k the
// terms decay at least 4x per order and 33 of them reach round-off.
inline constexpr int kPwlSeriesTerms = 33;

inline Complex pwl_g(const PiecewiseLinear& s, Complex z) {
    const double lo = s.nodes.front().x, hi = s.nodes.back().x;
    const double center = 0.5 * (lo + hi);
    const double radius = 0.5 * (hi - lo);
    const Complex zc = z - center;
    if (std::abs(zc) > 4.0 * radius) {
        Complex total = 0.0;
        Complex zpow = zc;
        for (int k = 0; k < kPwlSeriesTerms; ++k) {
            total += pwl_central_moment(s, center, k) / zpow;
            zpow *= zc;
        }
        return total;
    }
    Complex total = 0.0;
    for (std::size_t i = 0; i + 1 < s.nodes.size(); ++i) {
        const double p = s.nodes[i].x, q = s.nodes[i + 1].x;
        const double fp = s.nodes[i].f, fq = s.nodes[i + 1].f;
        const double c1 = (fq - fp) / (q - p);
        const double c0 = fp - c1 * p;
        total += (c0 + c1 * z) * std::log((z - p) / (z - q)) - c1 * (q - p);
    }
    return total;
}

inline Complex pwl_g_prime(const PiecewiseLinear& s, Complex z) {
    const double lo = s.nodes.front().x, hi = s.nodes.back().x;
    const double center = 0.5 * (lo + hi);
    const double radius = 0.5 * (hi - lo);
    const Complex zc = z - center;
    if (std::abs(zc) > 4.0 * radius) {
        Complex total = 0.0;
        Complex zpow = zc * zc;
        for (int k = 0; k < kPwlSeriesTerms; ++k) {
            total -= (k + 1) * pwl_central_moment(s, center, k) / zpow;
            zpow *= zc;
        }
        return total;
    }
    Complex total = 0.0;
    for (std::size_t i = 0; i + 1 < s.nodes.size(); ++i) {
        const double p = s.nodes[i].x, q = s.nodes[i + 1].x;
        const double fp = s.nodes[i].f, fq = s.nodes[i + 1].f;
        const double c1 = (fq - fp) / (q - p);
        const double c0 = fp - c1 * p;
        total += c1 * std::log((z - p) / (z - q)) +
                 (c0 + c1 * z) * (1.0 / (z - p) - 1.0 / (z - q));
    }
    return total;
}

inline Complex shape_g(const Shape& shape, Complex z) {
    return std::visit(
        [z](const auto& s) -> Complex {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Semicircle>) return semicircle_g(s, z);
            else if constexpr (std::is_same_v<T, Arcsine>) return arcsine_g(s, z);
            else if constexpr (std::is_same_v<T, Uniform>) return uniform_g(s, z);
            else return pwl_g(s, z);
        },
        shape);
}

inline Complex shape_g_prime(const Shape& shape, Complex z) {
    return std::visit(
        [z](const auto& s) -> Complex {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Semicircle>) return semicircle_g_prime(s, z);
            else if constexpr (std::is_same_v<T, Arcsine>) return arcsine_g_prime(s, z);
            else if constexpr (std::is_same_v<T, Uniform>) return uniform_g_prime(s, z);
            else return pwl_g_prime(s, z);
        },
        shape);
}

inline Complex cauchy_g(const Measure& m, Complex z) {
    Complex total = 0.0;
    for (const auto& a : m.atoms) total += a.mass / (z - a.location);
    for (const auto& c : m.acParts) total += c.weight * shape_g(c.shape, z);
    return total;
}

inline Complex cauchy_g_prime(const Measure& m, Complex z) {
    Complex total = 0.0;
    for (const auto& a : m.atoms) {
        const Complex d = z - a.location;
        total -= a.mass / (d * d);
    }
    for (const auto& c : m.acParts) total += c.weight * shape_g_prime(c.shape, z);
    return total;
}

inline Complex f_transform(const Measure& m, Complex z) { return 1.0 / cauchy_g(m, z); }

/// F' = -G'/G^2.
inline Complex f_prime(const Measure& m, Complex z) {
    const Complex g = cauchy_g(m, z);
    return -cauchy_g_prime(m, z) / (g * g);
}

} // namespace detail

inline Complex cauchy_g(const Measure& m, const HalfPlanePoint& z) {
    return detail::cauchy_g(m, z.value());
}

inline Complex cauchy_g_prime(const Measure& m, const HalfPlanePoint& z) {
    return detail::cauchy_g_prime(m, z.value());
}

/// F = 1/G; an analytic self-map of C+ with Im F(z) >= Im z for probability
/// measures, with equality only at point masses.
inline HalfPlanePoint f_transform(const Measure& m, const HalfPlanePoint& z) {
    return HalfPlanePoint(detail::f_transform(m, z.value()));
}

inline Complex f_prime(const Measure& m, const HalfPlanePoint& z) {
    return detail::f_prime(m, z.value());
}

// ---------------------------------------------------------------------------
// Vertical boundary ladders and Richardson extrapolation.
// ---------------------------------------------------------------------------

/// Geometric ladder y0 * ratio^k, k = 0..levels. Vertical approach paths are
/// inside every Stolz angle, so they realize the nontangential limits used
/// for atom masses and densities.
struct Ladder {
    double y0 = 1e-2;
    double ratio = 0.5;
    int levels = 6;

    std::vector<double> values() const {
        if (!(y0 > 0.0) || !(ratio > 0.0) || !(ratio < 1.0) || levels < 3)
            raise(ErrorKind::Domain, "ladder requires y0 > 0, ratio in (0,1), levels >= 3");
        std::vector<double> ys(static_cast<std::size_t>(levels) + 1);
        double y = y0;
        for (auto& v : ys) {
            v = y;
            y *= ratio;
        }
        return ys;
    }
};

namespace detail {

/// Quadratic Lagrange extrapolation to y = 0 through three (y, v) points.
inline double extrapolate3(const double* ys, const double* vs) {
    double p = 0.0;
    for (int i = 0; i < 3; ++i) {
        double w = 1.0;
        for (int j = 0; j < 3; ++j)
            if (j != i) w *= (0.0 - ys[j]) / (ys[i] - ys[j]);
        p += w * vs[i];
    }
    return p;
}

struct LadderFit {
    double value;  // degree-2 extrapolant through the last three levels
    double drift;  // |value - extrapolant one level earlier|, a settling gauge
};

inline LadderFit fit_ladder(const std::vector<double>& ys, const std::vector<double>& vs) {
    const std::size_t n = ys.size();
    const double last = extrapolate3(&ys[n - 3], &vs[n - 3]);
    const double prev = extrapolate3(&ys[n - 4], &vs[n - 4]);
    return {last, std::abs(last - prev)};
}

} // namespace detail

/// Boundary density -Im G(x + iy) / pi extrapolated to y = 0. The extrapolant
/// must settle between the last two ladder windows and may not be negative
/// beyond round-off; both failures mean x sits too close to an atom or a
/// support edge for the chosen ladder.
template <class GEval>
double density_from_g(GEval&& g, double x, const Ladder& ladder = {}) {
    const std::vector<double> ys = ladder.values();
    std::vector<double> vs(ys.size());
    for (std::size_t k = 0; k < ys.size(); ++k)
        vs[k] = -std::imag(g(Complex(x, ys[k]))) / detail::kPi;

    const auto fit = detail::fit_ladder(ys, vs);
    if (fit.drift > std::max(5e-5, 0.02 * std::abs(fit.value)))
        raise(ErrorKind::NonConvergence,
              "density ladder did not settle at x = " + std::to_string(x));
    if (fit.value < -1e-8)
        raise(ErrorKind::NonConvergence,
              "density extrapolant negative at x = " + std::to_string(x));
    return std::max(fit.value, 0.0);
}

struct AtomMassEstimate {
    double mass = 0.0;   // in [0, 1]; values below 1e-6 reported as 0
    bool reliable = true;
};

/// Atom mass via Re[(iy) G(x + iy)] -> m({x}); noisy ladders are flagged, not
/// rejected, so scans over candidate locations can aggregate.
template <class GEval>
AtomMassEstimate atom_mass_estimate(GEval&& g, double x, const Ladder& ladder = {}) {
    const std::vector<double> ys = ladder.values();
    std::vector<double> vs(ys.size());
    for (std::size_t k = 0; k < ys.size(); ++k) {
        const Complex z(x, ys[k]);
        vs[k] = std::real(Complex(0.0, ys[k]) * g(z));
    }

    const auto fit = detail::fit_ladder(ys, vs);
    AtomMassEstimate est;
    est.reliable = fit.drift <= std::max(1e-8, 1e-6 * std::abs(fit.value));
    est.mass = std::clamp(fit.value, 0.0, 1.0);
    if (est.mass < 1e-6) est.mass = 0.0;
    return est;
}

/// Julia-Caratheodory boundary derivative lim Im F(a + iy) / y; equals the
/// reciprocal atom mass at atoms. Returns +infinity once the ladder grows past
/// 1e12 or keeps growing geometrically (no atom); throws on an oscillating
/// ladder, which leaves the vertical limit inconclusive.
template <class FEval>
double jc_derivative(FEval&& f, double a, const Ladder& ladder = {}) {
    const std::vector<double> ys = ladder.values();
    std::vector<double> rs(ys.size());
    double maxAbs = 0.0;
    for (std::size_t k = 0; k < ys.size(); ++k) {
        rs[k] = std::imag(f(Complex(a, ys[k]))) / ys[k];
        maxAbs = std::max(maxAbs, std::abs(rs[k]));
    }

    const double tol = 1e-6 * (1.0 + maxAbs);
    bool up = false, down = false;
    for (std::size_t k = 0; k + 1 < rs.size(); ++k) {
        const double d = rs[k + 1] - rs[k];
        if (d > tol) up = true;
        if (d < -tol) down = true;
    }
    if (up && down)
        raise(ErrorKind::Inconclusive,
              "Im F / Im z ladder oscillates at a = " + std::to_string(a));

    const double lastRatio = rs[rs.size() - 1];
    const double prevRatio = rs[rs.size() - 2];
    if (lastRatio > 1e12 || (up && lastRatio > 1.4 * prevRatio))
        return std::numeric_limits<double>::infinity();

    return detail::extrapolate3(&ys[ys.size() - 3], &rs[rs.size() - 3]);
}

// ---------------------------------------------------------------------------
// Nevanlinna-type diagnostics for F = 1/G of a probability measure:
//   F(z) = a + bz + int (1 + tz)/(t - z) drho(t),
//   a = Re F(i), b = lim F(iy)/iy = 1, b + rho(R) = Im F(i).
// Failures are reported, not thrown, so harnesses can aggregate.
// ---------------------------------------------------------------------------

struct NevanlinnaReport {
    double minImRatio = 0.0;  // min over samples of Im F(z) / Im z
    std::array<double, 4> tailError{};  // |F(iy)/(iy) - 1| at y = 10^1..10^4
    double realPartAtI = 0.0;           // a = Re F(i)
    double bPlusRho = 0.0;              // b + rho(R) = Im F(i)
    bool imRatioOk = false;             // minImRatio >= 1 - 1e-10
    bool tailOk = false;                // tailError[3] < 1e-3
    bool pointMassBranch = false;       // equality case Im F = Im z
};

inline NevanlinnaReport nevanlinna_diagnostics(const Measure& m,
                                               const std::vector<HalfPlanePoint>& samples) {
    if (samples.empty())
        raise(ErrorKind::Domain, "nevanlinna diagnostics need at least one sample");

    NevanlinnaReport report;
    report.minImRatio = std::numeric_limits<double>::infinity();
    for (const auto& z : samples) {
        const Complex f = detail::f_transform(m, z.value());
        report.minImRatio = std::min(report.minImRatio, f.imag() / z.im());
    }

    for (int k = 0; k < 4; ++k) {
        const double y = std::pow(10.0, k + 1);
        const Complex f = detail::f_transform(m, Complex(0.0, y));
        report.tailError[static_cast<std::size_t>(k)] = std::abs(f / Complex(0.0, y) - 1.0);
    }

    const Complex fAtI = detail::f_transform(m, Complex(0.0, 1.0));
    report.realPartAtI = fAtI.real();
    report.bPlusRho = fAtI.imag();
    report.imRatioOk = report.minImRatio >= 1.0 - 1e-10;
    report.tailOk = report.tailError[3] < 1e-3;
    report.pointMassBranch = is_point_mass(m);
    return report;
}

} // namespace freeconv
