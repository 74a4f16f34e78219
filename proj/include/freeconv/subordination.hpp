#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "freeconv/halfplane.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/transforms.hpp"
#include "freeconv/twoatom.hpp"

namespace freeconv {

// ---------------------------------------------------------------------------
// Subordination pair omega1, omega2 with
//   F_{mu (+) nu}(z) = F_mu(omega1(z)) = F_nu(omega2(z)),
//   omega1(z) + omega2(z) = z + F_{mu (+) nu}(z),
// computed as the Denjoy-Wolff point of
//   f_z(w) = F_nu(F_mu(w) - w + z) - F_mu(w) + w,
// an analytic self-map of C+ whose iterates converge to omega1(z).
// ---------------------------------------------------------------------------

struct SubordinationResult {
    HalfPlanePoint omega1;
    HalfPlanePoint omega2;
    HalfPlanePoint fValue; // F of the convolution at z
    int iterations = 0;
    double residual = 0.0; // |f_z(omega1) - omega1|
};

namespace detail {

/// One application of f_z. The intermediate F_mu(w) - w + z stays in C+ up to
/// round-off; dips past -1e-14 mean the evaluation height is too small to
/// resolve and the caller should retry higher up.
inline Complex fz_step(const Measure& mu, const Measure& nu, Complex z, Complex w) {
    const Complex fmu = f_transform(mu, w);
    Complex u = fmu - w + z;
    if (u.imag() <= 0.0) {
        if (u.imag() < -1e-14)
            raise(ErrorKind::Lift,
                  "intermediate left the upper half-plane; raise Im z");
        u = Complex(u.real(), 1e-18 * (1.0 + std::abs(u)));
    }
    return f_transform(nu, u) - fmu + w;
}

inline SubordinationResult package_result(const Measure& mu, const Measure& nu, Complex z,
                                          Complex omega1, int iterations) {
    const Complex fValue = f_transform(mu, omega1);
    const Complex omega2 = fValue - omega1 + z;
    const double residual = std::abs(fz_step(mu, nu, z, omega1) - omega1);
    return SubordinationResult{HalfPlanePoint(omega1), HalfPlanePoint(omega2),
                               HalfPlanePoint(fValue), iterations, residual};
}

} // namespace detail

inline HalfPlanePoint fz_step(const Measure& mu, const Measure& nu, const HalfPlanePoint& z,
                              const HalfPlanePoint& w) {
    return HalfPlanePoint(detail::fz_step(mu, nu, z.value(), w.value()));
}

/// Plain Denjoy-Wolff iteration w <- f_z(w) from w0 until the step size drops
/// below tol * (1 + |w|). No damping: the iterates theorem already guarantees
/// convergence whenever f_z is not an automorphism.
inline SubordinationResult denjoy_wolff(const Measure& mu, const Measure& nu,
                                        const HalfPlanePoint& z, const HalfPlanePoint& w0,
                                        double tol = 1e-13, int maxIter = 10000) {
    if (!(tol > 0.0) || maxIter < 1)
        raise(ErrorKind::Domain, "denjoy_wolff requires tol > 0 and maxIter >= 1");
    const Complex zv = z.value();
    Complex w = w0.value();
    double step = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= maxIter; ++k) {
        const Complex wn = detail::fz_step(mu, nu, zv, w);
        step = std::abs(wn - w);
        w = wn;
        if (step <= tol * (1.0 + std::abs(wn)))
            return detail::package_result(mu, nu, zv, w, k);
    }
    raise(ErrorKind::NonConvergence,
          "Denjoy-Wolff iteration hit maxIter with step " + std::to_string(step) +
              " at z = (" + std::to_string(zv.real()) + ", " + std::to_string(zv.imag()) + ")");
}

struct SubordinationOptions {
    double tol = 1e-13;
    int maxIter = 10000;
    /// Two-atom x two-atom pairs make f_z a composition of Mobius maps, the
    /// one case where iterate convergence degrades near R; route those to the
    /// closed-form quadratic unless a caller wants the raw iteration.
    bool useTwoAtomClosedForm = true;
    std::optional<HalfPlanePoint> warmStart;
};

/// Closed-form subordination for a two-atom pair (iterations reported as 0).
inline SubordinationResult two_atom_subordination(const TwoAtomMeasure& mu,
                                                  const TwoAtomMeasure& nu,
                                                  const HalfPlanePoint& z) {
    const HalfPlanePoint omega1 = omega1_quadratic(mu, nu, z);
    const Measure muM = to_measure(mu);
    const Measure nuM = to_measure(nu);
    return detail::package_result(muM, nuM, z.value(), omega1.value(), 0);
}

/// Subordination point with the production routing: closed form for two-atom
/// pairs, warm-started Denjoy-Wolff iteration otherwise.
inline SubordinationResult subordinate(const Measure& mu, const Measure& nu,
                                       const HalfPlanePoint& z,
                                       const SubordinationOptions& opts = {}) {
    if (opts.useTwoAtomClosedForm) {
        const auto muTwo = as_two_atom(mu);
        const auto nuTwo = as_two_atom(nu);
        if (muTwo && nuTwo) return two_atom_subordination(*muTwo, *nuTwo, z);
    }
    const HalfPlanePoint w0 = opts.warmStart.value_or(z);
    return denjoy_wolff(mu, nu, z, w0, opts.tol, opts.maxIter);
}

/// Iterative solve continued down from high Im z, for probing points near R
/// (including two-atom pairs, where plain iteration stalls close to the axis).
inline SubordinationResult denjoy_wolff_continued(const Measure& mu, const Measure& nu,
                                                  const HalfPlanePoint& z,
                                                  double tol = 1e-13, int maxIter = 10000) {
    const double top = std::max({2.0, 2.0 * std::abs(z.value()), 2.0 * z.im()});
    std::vector<double> heights;
    for (double y = top; y > z.im() * 1.0000001; y *= 0.5) heights.push_back(y);
    heights.push_back(z.im());

    std::optional<HalfPlanePoint> seed;
    SubordinationResult last = [&] {
        HalfPlanePoint zTop(z.re(), heights.front());
        return denjoy_wolff(mu, nu, zTop, zTop, tol, maxIter);
    }();
    for (std::size_t k = 1; k < heights.size(); ++k) {
        const HalfPlanePoint zk(z.re(), heights[k]);
        seed = last.omega1;
        last = denjoy_wolff(mu, nu, zk, *seed, tol, maxIter);
    }
    return last;
}

// ---------------------------------------------------------------------------
// Warm-started grid sweep: within a column the previous (larger) y seeds the
// next solve; along the top row each column is seeded by its left neighbor.
// Non-convergence is recorded per point, never fatal.
// ---------------------------------------------------------------------------

struct SweepEntry {
    Complex z;
    std::optional<SubordinationResult> result; // empty if the point failed
    std::string failure;                       // reason when empty
};

struct SweepTable {
    std::vector<double> gridX;
    std::vector<double> yLevels; // sorted descending
    std::vector<SweepEntry> entries; // column-major: [ix * yLevels.size() + iy]

    const SweepEntry& at(std::size_t ix, std::size_t iy) const {
        return entries[ix * yLevels.size() + iy];
    }
};

inline SweepTable sweep(const Measure& mu, const Measure& nu, const std::vector<double>& gridX,
                        const std::vector<double>& yLevels,
                        const SubordinationOptions& baseOpts = {}) {
    for (std::size_t i = 0; i + 1 < gridX.size(); ++i)
        if (!(gridX[i] <= gridX[i + 1]))
            raise(ErrorKind::Domain, "sweep grid must be sorted ascending");
    for (std::size_t i = 0; i < yLevels.size(); ++i) {
        if (!(yLevels[i] > 0.0))
            raise(ErrorKind::Domain, "sweep y-levels must be positive");
        if (i + 1 < yLevels.size() && !(yLevels[i] >= yLevels[i + 1]))
            raise(ErrorKind::Domain, "sweep y-levels must be sorted descending");
    }

    SweepTable table{gridX, yLevels, {}};
    table.entries.resize(gridX.size() * yLevels.size());
    std::optional<HalfPlanePoint> rowSeed; // top-level omega1 of the left neighbor

    for (std::size_t ix = 0; ix < gridX.size(); ++ix) {
        std::optional<HalfPlanePoint> columnSeed = rowSeed;
        for (std::size_t iy = 0; iy < yLevels.size(); ++iy) {
            SweepEntry& entry = table.entries[ix * yLevels.size() + iy];
            entry.z = Complex(gridX[ix], yLevels[iy]);
            SubordinationOptions opts = baseOpts;
            opts.warmStart = columnSeed;
            try {
                entry.result = subordinate(mu, nu, HalfPlanePoint(entry.z), opts);
                columnSeed = entry.result->omega1;
                if (iy == 0) rowSeed = entry.result->omega1;
            } catch (const Error& e) {
                entry.failure = e.what();
                if (iy == 0) rowSeed.reset();
            }
        }
    }
    return table;
}

} // namespace freeconv
