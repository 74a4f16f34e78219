#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "freeconv/halfplane.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/subordination.hpp"
#include "freeconv/transforms.hpp"

namespace freeconv {

// ---------------------------------------------------------------------------
// Right inverse of F on truncated cones by Newton's method, the transform
// phi(z) = F^{-1}(z) - z, and the additivity check
//   phi_{mu (+) nu} = phi_mu + phi_nu,
// with the convolution side evaluated through the subordination engine so the
// two sides of the identity stay independent.
// ---------------------------------------------------------------------------

struct PhiSample {
    Complex z;
    Complex phiMu;
    Complex phiNu;
    Complex phiConv;
    double residual = 0.0; // |phiConv - phiMu - phiNu|
};

/// Cone high enough that |phi| stays well below alpha for anything supported
/// in the measure's hull, keeping Newton iterates inside C+.
inline ConeDomain default_cone(const Measure& m) {
    const auto [lo, hi] = support_bounds(m);
    return ConeDomain{2.0 * (1.0 + (hi - lo)), 1.0};
}

inline ConeDomain common_cone(const Measure& mu, const Measure& nu) {
    const auto [aLo, aHi] = support_bounds(mu);
    const auto [bLo, bHi] = support_bounds(nu);
    return ConeDomain{2.0 * (1.0 + (aHi - aLo) + (bHi - bLo)), 1.0};
}

namespace detail {

/// F and F' of a plain measure.
struct MeasureF {
    const Measure* m;

    Complex value(Complex w) const { return f_transform(*m, w); }
    Complex deriv(Complex w) const { return f_prime(*m, w); }
};

/// F and F' of a free additive convolution, through the subordination fixed
/// point. The derivative comes from implicit differentiation of
/// F_nu(F_mu(omega) - omega + z) = F_mu(omega):
///   omega' = F_nu'(u) / (F_mu'(omega) + F_nu'(u) - F_mu'(omega) F_nu'(u)),
///   F' = F_mu'(omega) omega',  with u = F_mu(omega) - omega + z.
struct ConvolutionF {
    ConvolutionF(const Measure* muIn, const Measure* nuIn) : mu(muIn), nu(nuIn) {
        opts.tol = 1e-14;
        opts.maxIter = 20000;
    }

    const Measure* mu;
    const Measure* nu;
    SubordinationOptions opts;
    mutable std::optional<HalfPlanePoint> lastOmega;

    Complex omega_at(Complex z) const {
        SubordinationOptions local = opts;
        local.warmStart = lastOmega;
        const auto res = subordinate(*mu, *nu, HalfPlanePoint(z), local);
        lastOmega = res.omega1;
        return res.omega1.value();
    }

    Complex value(Complex z) const { return f_transform(*mu, omega_at(z)); }

    Complex deriv(Complex z) const {
        const Complex omega = omega_at(z);
        const Complex fmu = f_transform(*mu, omega);
        const Complex dmu = f_prime(*mu, omega);
        const Complex u = fmu - omega + z;
        const Complex dnu = f_prime(*nu, u);
        const Complex omegaPrime = dnu / (dmu + dnu - dmu * dnu);
        return dmu * omegaPrime;
    }
};

/// Newton solve of F(w) = z from w0 = z. Returns the iterate once
/// |F(w) - z| <= tol, nullopt if it leaves C+ or stalls.
template <class FEval>
std::optional<Complex> newton_from(const FEval& f, Complex z, Complex w0, double tol,
                                   int maxSteps = 100) {
    Complex w = w0;
    for (int k = 0; k < maxSteps; ++k) {
        if (!(w.imag() > 0.0)) return std::nullopt;
        const Complex r = f.value(w) - z;
        if (std::abs(r) <= tol) return w;
        const Complex d = f.deriv(w);
        if (!(std::abs(d) > 0.0) || !std::isfinite(std::abs(d))) return std::nullopt;
        w -= r / d;
    }
    return std::nullopt;
}

/// Inversion with a vertical continuation fallback: solve first high on the
/// cone axis where Newton from w0 = z always lands, then track the inverse
/// down to the requested height. The acceptance threshold sits at half the
/// contract (1e-12 (1+|z|)) and above the evaluation noise of the log-form
/// transforms at large |z|.
template <class FEval>
Complex invert_f_eval(const FEval& f, Complex z, const ConeDomain& cone) {
    const double tol = 5e-13 * (1.0 + std::abs(z));
    if (auto w = newton_from(f, z, z, tol)) return *w;

    const double top = std::max({2.0 * std::abs(z), 2.0 * cone.alpha, 8.0});
    Complex seed(z.real(), top);
    std::optional<Complex> w = newton_from(f, seed, seed, 5e-13 * (1.0 + top));
    if (w.has_value()) {
        double y = top;
        Complex zPrev = seed;
        while (y > z.imag()) {
            y = std::max(0.5 * y, z.imag());
            const Complex zk(z.real(), y);
            w = newton_from(f, zk, *w + (zk - zPrev), 5e-13 * (1.0 + std::abs(zk)));
            if (!w.has_value()) break;
            zPrev = zk;
        }
    }
    if (w.has_value() && std::abs(f.value(*w) - z) <= tol) return *w;
    raise(ErrorKind::ConeTooSmall,
          "Newton inversion of F failed at z = (" + std::to_string(z.real()) + ", " +
              std::to_string(z.imag()) + "); raise the cone's alpha");
}

} // namespace detail

/// Right inverse of F_m at z: |F(w) - z| <= 1e-12 (1 + |z|), Im w <= Im z.
/// Point masses invert exactly by translation.
inline HalfPlanePoint invert_F(const Measure& m, const HalfPlanePoint& z,
                               const ConeDomain& cone) {
    if (is_point_mass(m))
        return HalfPlanePoint(z.value() + m.atoms.front().location);
    return HalfPlanePoint(detail::invert_f_eval(detail::MeasureF{&m}, z.value(), cone));
}

inline HalfPlanePoint invert_F(const Measure& m, const HalfPlanePoint& z) {
    return invert_F(m, z, default_cone(m));
}

inline Complex phi(const Measure& m, const HalfPlanePoint& z, const ConeDomain& cone) {
    return invert_F(m, z, cone).value() - z.value();
}

inline Complex phi(const Measure& m, const HalfPlanePoint& z) {
    return phi(m, z, default_cone(m));
}

/// Evaluates phi of mu, nu, and of their free additive convolution (the last
/// through the subordination engine) at each point, and checks
/// phi_conv = phi_mu + phi_nu to 1e-8 (1 + |z|). The identity is exact, so a
/// residual above tolerance is a build-breaking integration failure.
inline std::vector<PhiSample> check_additivity(const Measure& mu, const Measure& nu,
                                               const std::vector<HalfPlanePoint>& points) {
    const ConeDomain cone = common_cone(mu, nu);
    detail::ConvolutionF fConv(&mu, &nu);
    std::vector<PhiSample> samples;
    samples.reserve(points.size());
    for (const auto& zp : points) {
        const Complex z = zp.value();
        PhiSample s;
        s.z = z;
        s.phiMu = phi(mu, zp, cone);
        s.phiNu = phi(nu, zp, cone);
        if (is_point_mass(mu) && is_point_mass(nu)) {
            // delta_a (+) delta_b = delta_{a+b}; invert exactly.
            s.phiConv = mu.atoms.front().location + nu.atoms.front().location;
        } else {
            s.phiConv = detail::invert_f_eval(fConv, z, cone) - z;
        }
        s.residual = std::abs(s.phiConv - s.phiMu - s.phiNu);
        if (s.residual > 1e-8 * (1.0 + std::abs(z)))
            raise(ErrorKind::AdditivityViolation,
                  "phi additivity residual " + std::to_string(s.residual) + " at z = (" +
                      std::to_string(z.real()) + ", " + std::to_string(z.imag()) + ")");
        samples.push_back(s);
    }
    return samples;
}

} // namespace freeconv
