#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "freeconv/halfplane.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/transforms.hpp"

namespace freeconv {

// ---------------------------------------------------------------------------
// Exact engine for pairs of two-point-mass measures. For these inputs
// F(w) - w is a Mobius self-map of C+, so the subordination function solves a
// quadratic with coefficients polynomial in z; this module is the independent
// closed-form oracle for the iterative engine.
// ---------------------------------------------------------------------------

/// t delta_u + (1-t) delta_v with u != v and 0 < t < 1.
struct TwoAtomMeasure {
    double u = 0.0;
    double v = 1.0;
    double t = 0.5;
};

inline TwoAtomMeasure make_two_atom(double u, double v, double t) {
    if (!std::isfinite(u) || !std::isfinite(v) || u == v)
        raise(ErrorKind::Validation, "two-atom measure requires distinct finite locations");
    if (!(t > 0.0) || !(t < 1.0))
        raise(ErrorKind::Validation, "two-atom weight must lie strictly in (0, 1)");
    return TwoAtomMeasure{u, v, t};
}

inline Measure to_measure(const TwoAtomMeasure& m) {
    return make_measure({Atom{m.u, m.t}, Atom{m.v, 1.0 - m.t}}, {});
}

inline std::optional<TwoAtomMeasure> as_two_atom(const Measure& m) {
    if (!m.acParts.empty() || m.atoms.size() != 2) return std::nullopt;
    const double t = m.atoms[0].mass;
    if (!(t > 0.0) || !(t < 1.0)) return std::nullopt;
    return TwoAtomMeasure{m.atoms[0].location, m.atoms[1].location, t};
}

/// h(z) = (b z + c) / (z + d); positive determinant b d - c makes this a
/// conformal self-map of C+.
struct MobiusMap {
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;

    double determinant() const noexcept { return b * d - c; }
    Complex operator()(Complex z) const { return (b * z + c) / (z + d); }
};

/// General real 2x2 Mobius matrix, for composing coefficient maps.
struct Mobius2x2 {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0; // (a z + b) / (c z + d)

    double determinant() const noexcept { return a * d - b * c; }
};

inline Mobius2x2 as_matrix(const MobiusMap& h) { return Mobius2x2{h.b, h.c, 1.0, h.d}; }

inline Mobius2x2 compose(const Mobius2x2& outer, const Mobius2x2& inner) {
    return Mobius2x2{outer.a * inner.a + outer.b * inner.c,
                     outer.a * inner.b + outer.b * inner.d,
                     outer.c * inner.a + outer.d * inner.c,
                     outer.c * inner.b + outer.d * inner.d};
}

/// Mobius coefficients of h(w) = F(w) - w + a for a two-atom measure:
///   b = a - (t u + (1-t) v),  c = u v - a (t v + (1-t) u),
///   d = -(t v + (1-t) u),     det = t (1-t) (u - v)^2 > 0.
inline MobiusMap h_mobius(const TwoAtomMeasure& m, double a) {
    const double meanLoc = m.t * m.u + (1.0 - m.t) * m.v;
    const double swapped = m.t * m.v + (1.0 - m.t) * m.u;
    return MobiusMap{a - meanLoc, m.u * m.v - a * swapped, -swapped};
}

/// Closed-form density of the arcsine law on (left, right).
inline double arcsine_density(double left, double right, double x) {
    if (!(left < right))
        raise(ErrorKind::Domain, "arcsine density requires left < right");
    if (!(x > left && x < right))
        raise(ErrorKind::Domain, "arcsine density evaluated outside (left, right)");
    return 1.0 / (detail::kPi * std::sqrt((x - left) * (right - x)));
}

namespace detail {

/// Quadratic A w^2 + B w + C = 0 satisfied by the first subordination function
/// of a pair of two-atom measures, with the real anchor set to 0 (it only ever
/// enters through z minus the anchor, so nothing is lost). Expanded by hand
/// from w = h_nu(h_mu(w) + z) + z.
inline void omega1_quadratic_coefficients(const MobiusMap& hm, const MobiusMap& hn,
                                          Complex z, Complex& A, Complex& B, Complex& C) {
    A = hm.b + z + hn.d;
    B = hm.c + (z + hn.d) * hm.d - z * (hm.b + z + hn.d) - (hn.b * hm.b + hn.b * z + hn.c);
    C = -z * (hm.c + (z + hn.d) * hm.d) - (hn.b * hm.c + hn.b * z * hm.d + hn.c * hm.d);
}

/// Numerically stable complex quadratic roots.
inline std::pair<Complex, Complex> quadratic_roots(Complex A, Complex B, Complex C) {
    const Complex disc = std::sqrt(B * B - 4.0 * A * C);
    const Complex q = (std::real(std::conj(B) * disc) >= 0.0) ? -0.5 * (B + disc)
                                                              : -0.5 * (B - disc);
    if (q == Complex(0.0)) {
        const Complex r = -B / (2.0 * A);
        return {r, r};
    }
    return {q / A, C / q};
}

inline Complex omega1_root_at(const MobiusMap& hm, const MobiusMap& hn, Complex z,
                              const Complex* follow) {
    Complex A, B, C;
    omega1_quadratic_coefficients(hm, hn, z, A, B, C);
    const auto [r1, r2] = quadratic_roots(A, B, C);
    if (follow != nullptr)
        return (std::abs(r1 - *follow) <= std::abs(r2 - *follow)) ? r1 : r2;

    const bool ok1 = r1.imag() >= z.imag() - 1e-12;
    const bool ok2 = r2.imag() >= z.imag() - 1e-12;
    if (ok1 != ok2) return ok1 ? r1 : r2;
    if (!ok1 && !ok2)
        raise(ErrorKind::SelectionFailure,
              "no quadratic root dominates Im z; subordination demands one");
    return r1; // both admissible; caller disambiguates by continuity
}

} // namespace detail

/// First subordination function for two two-atom measures, solved from its
/// quadratic. Root selection: keep the root with Im w >= Im z; when both
/// qualify, track the normalized branch (w(iy)/iy -> 1) by continuity from a
/// reference point at height 10|z|.
inline HalfPlanePoint omega1_quadratic(const TwoAtomMeasure& mu, const TwoAtomMeasure& nu,
                                       const HalfPlanePoint& z) {
    const MobiusMap hm = h_mobius(mu, 0.0);
    const MobiusMap hn = h_mobius(nu, 0.0);
    const Complex zv = z.value();

    Complex A, B, C;
    detail::omega1_quadratic_coefficients(hm, hn, zv, A, B, C);
    const auto [r1, r2] = detail::quadratic_roots(A, B, C);
    const bool ok1 = r1.imag() >= z.im() - 1e-12;
    const bool ok2 = r2.imag() >= z.im() - 1e-12;
    if (!ok1 && !ok2)
        raise(ErrorKind::SelectionFailure,
              "no quadratic root dominates Im z; subordination demands one");
    if (ok1 != ok2) return HalfPlanePoint(ok1 ? r1 : r2);

    // Both roots dominate: walk down from high up, where the branch with
    // w(iy)/iy -> 1 is unambiguous, picking the nearest root at each step.
    const double topHeight = 10.0 * std::max(1.0, std::abs(zv));
    const Complex zTop(0.0, topHeight);
    Complex w = zTop; // the normalized branch is the one near z itself high up
    {
        Complex At, Bt, Ct;
        detail::omega1_quadratic_coefficients(hm, hn, zTop, At, Bt, Ct);
        const auto [t1, t2] = detail::quadratic_roots(At, Bt, Ct);
        w = (std::abs(t1 - zTop) <= std::abs(t2 - zTop)) ? t1 : t2;
    }
    constexpr int kSteps = 24;
    for (int k = 1; k <= kSteps; ++k) {
        const double s = static_cast<double>(k) / kSteps;
        const Complex zs = (1.0 - s) * zTop + s * zv;
        w = detail::omega1_root_at(hm, hn, zs, &w);
    }
    if (w.imag() < z.im() - 1e-12)
        raise(ErrorKind::SelectionFailure,
              "continuity tracking left the dominated half-plane");
    return HalfPlanePoint(w);
}

} // namespace freeconv
