#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "freeconv/halfplane.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/subordination.hpp"
#include "freeconv/transforms.hpp"

namespace freeconv {

// ---------------------------------------------------------------------------
// Assembly of the free additive convolution: atoms from the pair criterion,
// absolutely-continuous density from subordination plus Stieltjes inversion,
// support detection, and the mass bookkeeping that witnesses the vanishing
// singular continuous part.
// ---------------------------------------------------------------------------

/// Atoms of the convolution: location b + c with mass mu({b}) + nu({c}) - 1
/// over all atom pairs whose masses sum strictly above 1. Distinct qualifying
/// pairs can never share an output location, so no merging is needed. A
/// mass-1 factor keeps the partner's mass bit-exact (1 + m - 1 would round).
inline std::vector<Atom> convolve_atoms(const Measure& mu, const Measure& nu) {
    std::vector<Atom> out;
    for (const auto& a : mu.atoms) {
        for (const auto& b : nu.atoms) {
            if (!(a.mass + b.mass > 1.0)) continue;
            double mass = a.mass + b.mass - 1.0;
            if (a.mass == 1.0) mass = b.mass;
            if (b.mass == 1.0) mass = a.mass;
            out.push_back(Atom{a.location + b.location, mass});
        }
    }
    std::sort(out.begin(), out.end(),
              [](const Atom& x, const Atom& y) { return x.location < y.location; });
    return out;
}

struct DensitySample {
    double x = 0.0;
    double f = 0.0; // >= 0
};

struct SkippedPoint {
    double x = 0.0;
    std::string reason;
};

struct DensityTable {
    std::vector<DensitySample> samples;
    std::vector<SkippedPoint> skipped;
};

struct MassReport {
    double atomMass = 0.0;
    double acMassQuadrature = 0.0;
    double deficit = 0.0; // 1 - atomMass - acMassQuadrature
};

struct ConvolutionResult {
    std::vector<Atom> atoms;
    std::vector<DensitySample> densitySamples;
    std::vector<std::pair<double, double>> supportIntervals;
    MassReport massReport;
    std::vector<SkippedPoint> skipped;
};

struct ConvolveConfig {
    std::optional<double> gridMin; // default: Minkowski support bound minus 1
    std::optional<double> gridMax;
    int gridPoints = 2001;
    Ladder ladder{};
    double tol = 1e-13;
    int maxIter = 10000;
    double densityMassTol = 5e-3;
    double atomExclusionRadius = 1e-3;
    double supportThreshold = 1e-6;
    bool useTwoAtomClosedForm = true;
};

namespace detail {

inline std::vector<double> uniform_grid(double lo, double hi, int n) {
    if (!(lo < hi) || n < 2)
        raise(ErrorKind::Domain, "grid requires min < max and at least 2 points");
    std::vector<double> xs(static_cast<std::size_t>(n));
    const double h = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = lo + h * i;
    xs.back() = hi;
    return xs;
}

inline std::vector<double> default_grid(const Measure& mu, const Measure& nu,
                                        const ConvolveConfig& cfg) {
    const auto [aLo, aHi] = support_bounds(mu);
    const auto [bLo, bHi] = support_bounds(nu);
    // Supports add under free convolution within the Minkowski sum for the
    // compactly supported catalog; one unit of padding absorbs edge effects.
    const double lo = cfg.gridMin.value_or(aLo + bLo - 1.0);
    const double hi = cfg.gridMax.value_or(aHi + bHi + 1.0);
    return uniform_grid(lo, hi, cfg.gridPoints);
}

/// Stieltjes extraction of density samples from a per-point G evaluator.
/// The exact pole terms of the known atoms are removed before extrapolation,
/// which keeps the ladder polynomial-like next to atom locations.
inline DensityTable density_scan(const std::function<std::optional<Complex>(Complex, std::string&)>& g,
                                 const std::vector<Atom>& atoms,
                                 const std::vector<double>& gridX, const ConvolveConfig& cfg) {
    DensityTable table;
    const std::vector<double> ys = cfg.ladder.values();

    for (double x : gridX) {
        bool excluded = false;
        for (const auto& a : atoms) {
            if (std::abs(x - a.location) <= cfg.atomExclusionRadius) {
                table.skipped.push_back({x, "within atom exclusion radius of " +
                                                std::to_string(a.location)});
                excluded = true;
                break;
            }
        }
        if (excluded) continue;

        std::vector<double> vs(ys.size());
        std::string failure;
        bool ok = true;
        for (std::size_t k = 0; k < ys.size() && ok; ++k) {
            const Complex z(x, ys[k]);
            const auto value = g(z, failure);
            if (!value.has_value()) {
                ok = false;
                break;
            }
            Complex tilde = *value;
            for (const auto& a : atoms) tilde -= a.mass / (z - a.location);
            vs[k] = -tilde.imag() / kPi;
        }
        if (!ok) {
            table.skipped.push_back({x, failure.empty() ? "transform evaluation failed" : failure});
            continue;
        }

        const auto fit = fit_ladder(ys, vs);
        if (fit.drift > std::max(5e-5, 0.02 * std::abs(fit.value))) {
            table.skipped.push_back({x, "density ladder did not settle"});
            continue;
        }
        if (fit.value < -1e-8) {
            table.skipped.push_back({x, "density extrapolant negative"});
            continue;
        }
        table.samples.push_back({x, std::max(fit.value, 0.0)});
    }
    return table;
}

} // namespace detail

/// Density samples of mu (+) nu on gridX. Each column walks the ladder top
/// down with warm-started subordination and extrapolates
/// -Im G(x + iy) / pi to y = 0, G = 1 / F_mu(omega1). Non-convergent points
/// are recorded, not fatal; points within the exclusion radius of an atom of
/// the convolution are skipped up front.
inline DensityTable convolve_density(const Measure& mu, const Measure& nu,
                                     const std::vector<double>& gridX,
                                     const ConvolveConfig& cfg = {}) {
    for (std::size_t i = 0; i + 1 < gridX.size(); ++i)
        if (!(gridX[i] <= gridX[i + 1]))
            raise(ErrorKind::Domain, "density grid must be sorted ascending");

    const std::vector<Atom> atoms = convolve_atoms(mu, nu);

    // Point-mass fast path: translation is exact, no subordination involved.
    // A purely atomic translate has identically zero ac density, so the
    // table stays empty rather than carrying a grid of zeros.
    if (is_point_mass(mu) || is_point_mass(nu)) {
        const bool muIsPoint = is_point_mass(mu);
        const Measure& other = muIsPoint ? nu : mu;
        const double a = (muIsPoint ? mu : nu).atoms.front().location;
        const Measure shifted = shift_scale(other, a, 1.0);
        if (shifted.acParts.empty()) return {};
        auto g = [&shifted](Complex z, std::string&) -> std::optional<Complex> {
            return detail::cauchy_g(shifted, z);
        };
        return detail::density_scan(g, shifted.atoms, gridX, cfg);
    }

    SubordinationOptions opts;
    opts.tol = cfg.tol;
    opts.maxIter = cfg.maxIter;
    opts.useTwoAtomClosedForm = cfg.useTwoAtomClosedForm;

    // Column-major sweep state: the previous level's omega1 seeds the next
    // solve; the top row is seeded by the left neighbor's top solve.
    std::optional<HalfPlanePoint> rowSeed;
    std::optional<HalfPlanePoint> columnSeed;
    double lastTopX = std::numeric_limits<double>::quiet_NaN();

    auto g = [&](Complex z, std::string& failure) -> std::optional<Complex> {
        SubordinationOptions local = opts;
        const bool topOfColumn = z.real() != lastTopX;
        if (topOfColumn) {
            columnSeed = rowSeed;
            lastTopX = z.real();
        }
        local.warmStart = columnSeed;
        try {
            const auto res = subordinate(mu, nu, HalfPlanePoint(z), local);
            columnSeed = res.omega1;
            if (topOfColumn) rowSeed = res.omega1;
            return 1.0 / res.fValue.value();
        } catch (const Error& e) {
            failure = e.what();
            if (topOfColumn) rowSeed.reset();
            return std::nullopt;
        }
    };
    return detail::density_scan(g, atoms, gridX, cfg);
}

/// Maximal runs of samples above the threshold, each extended half a grid
/// step on both sides: the open-set approximation of the region where the
/// density is positive. Gaps of up to three grid steps (skipped points) do
/// not split a run.
inline std::vector<std::pair<double, double>> support_detect(
    const std::vector<DensitySample>& samples, double threshold = 1e-6) {
    std::vector<std::pair<double, double>> intervals;
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        const double gap = samples[i + 1].x - samples[i].x;
        if (gap > 0.0) h = std::min(h, gap);
    }
    if (!std::isfinite(h)) h = 0.0;

    std::optional<std::pair<double, double>> run;
    double lastAbove = 0.0;
    for (const auto& s : samples) {
        if (s.f > threshold) {
            if (run && s.x - lastAbove <= 3.5 * h) {
                run->second = s.x;
            } else {
                if (run) intervals.emplace_back(run->first - 0.5 * h, run->second + 0.5 * h);
                run = {s.x, s.x};
            }
            lastAbove = s.x;
        }
    }
    if (run) intervals.emplace_back(run->first - 0.5 * h, run->second + 0.5 * h);
    return intervals;
}

namespace detail {

/// Tail of the integral between a support edge and the first valid sample.
/// When the density grows toward the edge, fit A (x - e)^{-1/2} through the
/// two nearest samples (solving for the effective edge e as well) and
/// integrate it exactly; bounded edges get a linear ramp down to the detected
/// endpoint. f1 is the sample nearest the edge, f2 its inward neighbor at
/// distance h; gapToEdge is the distance from x1 to the detected endpoint.
inline double edge_tail_mass(double f1, double f2, double h, double gapToEdge) {
    if (f2 > 0.0 && f1 > f2 * (1.0 + 1e-6)) {
        const double rho = (f1 / f2) * (f1 / f2);
        double dist = h / (rho - 1.0);           // x1 - e from the two-point fit
        dist = std::min(dist, 1.5 * h);          // the true edge is within a step
        dist = std::max(dist, 1e-12);
        return 2.0 * f1 * dist;
    }
    return 0.5 * f1 * gapToEdge;
}

inline double quadrature_mass(const std::vector<DensitySample>& samples,
                              const std::vector<std::pair<double, double>>& intervals) {
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        const double gap = samples[i + 1].x - samples[i].x;
        if (gap > 0.0) h = std::min(h, gap);
    }
    if (!std::isfinite(h)) return 0.0;

    double total = 0.0;
    for (const auto& [lo, hi] : intervals) {
        std::vector<const DensitySample*> inside;
        for (const auto& s : samples)
            if (s.x >= lo && s.x <= hi) inside.push_back(&s);
        if (inside.empty()) continue;

        for (std::size_t i = 0; i + 1 < inside.size(); ++i)
            total += 0.5 * (inside[i]->f + inside[i + 1]->f) * (inside[i + 1]->x - inside[i]->x);

        if (inside.size() >= 2) {
            total += edge_tail_mass(inside.front()->f, inside[1]->f, inside[1]->x - inside.front()->x,
                                    inside.front()->x - lo);
            total += edge_tail_mass(inside.back()->f, inside[inside.size() - 2]->f,
                                    inside.back()->x - inside[inside.size() - 2]->x,
                                    hi - inside.back()->x);
        } else {
            total += inside.front()->f * h;
        }
    }
    return total;
}

} // namespace detail

/// Full convolution: atoms, density on the grid, support intervals, and the
/// mass report. Since the singular continuous part of the convolution is zero
/// (away from point-mass inputs), atoms plus ac quadrature must exhaust mass 1
/// up to numerical error; a deficit beyond 10x the tolerance indicates the
/// grid or ladder cannot resolve the measure, not a genuine sc remainder.
inline ConvolutionResult convolve(const Measure& mu, const Measure& nu,
                                  const ConvolveConfig& cfg = {}) {
    ConvolutionResult result;
    result.atoms = convolve_atoms(mu, nu);

    const std::vector<double> gridX = detail::default_grid(mu, nu, cfg);
    DensityTable table = convolve_density(mu, nu, gridX, cfg);
    result.densitySamples = std::move(table.samples);
    result.skipped = std::move(table.skipped);
    result.supportIntervals = support_detect(result.densitySamples, cfg.supportThreshold);

    double atomMass = 0.0;
    for (const auto& a : result.atoms) atomMass += a.mass;
    const double acMass = detail::quadrature_mass(result.densitySamples, result.supportIntervals);
    result.massReport = MassReport{atomMass, acMass, 1.0 - atomMass - acMass};

    if (std::abs(result.massReport.deficit) > 10.0 * cfg.densityMassTol)
        raise(ErrorKind::DecompositionFailure,
              "mass deficit " + std::to_string(result.massReport.deficit) +
                  " exceeds 10x tolerance; grid or ladder cannot resolve this pair");
    return result;
}

} // namespace freeconv
