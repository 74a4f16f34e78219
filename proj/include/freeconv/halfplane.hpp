#pragma once

#include <cmath>
#include <complex>

#include "freeconv/error.hpp"

namespace freeconv {

using Complex = std::complex<double>;

/// A point of the open upper half-plane, the evaluation domain of every
/// transform in this library. Construction rejects Im z <= 0.
struct HalfPlanePoint {
    HalfPlanePoint(double re, double im) : re_(re), im_(im) {
        if (!std::isfinite(re) || !std::isfinite(im))
            raise(ErrorKind::Domain, "half-plane point must be finite");
        if (!(im > 0.0))
            raise(ErrorKind::Domain, "half-plane point requires Im z > 0");
    }

    explicit HalfPlanePoint(Complex z) : HalfPlanePoint(z.real(), z.imag()) {}

    double re() const noexcept { return re_; }
    double im() const noexcept { return im_; }
    Complex value() const noexcept { return {re_, im_}; }

    friend bool operator==(const HalfPlanePoint&, const HalfPlanePoint&) = default;

private:
    double re_;
    double im_;
};

/// Truncated cone {z : Im z > alpha, |Re z| < beta Im z}.
struct ConeDomain {
    double alpha = 0.0; // >= 0
    double beta = 1.0;  // > 0

    bool contains(Complex z) const noexcept {
        return z.imag() > alpha && std::abs(z.real()) < beta * z.imag();
    }
    bool contains(const HalfPlanePoint& z) const noexcept { return contains(z.value()); }
};

inline ConeDomain make_cone(double alpha, double beta) {
    if (!(alpha >= 0.0) || !(beta > 0.0))
        raise(ErrorKind::Domain, "cone requires alpha >= 0 and beta > 0");
    return ConeDomain{alpha, beta};
}

} // namespace freeconv
