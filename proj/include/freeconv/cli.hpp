#pragma once

#include <charconv>
#include <cmath>
#include <complex>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "freeconv/convolution.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/subordination.hpp"
#include "freeconv/transforms.hpp"
#include "freeconv/twoatom.hpp"
#include "freeconv/voiculescu.hpp"

namespace freeconv {

// ---------------------------------------------------------------------------
// Command layer: measure files in, density CSV and JSON reports out.
// Exit codes are a stable contract: 0 success, 1 input error, 2 numerical
// failure.
// ---------------------------------------------------------------------------

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitNumericalFailure = 2;

struct RunConfig {
    std::optional<double> gridMin;
    std::optional<double> gridMax;
    int gridPoints = 2001;
    Ladder yLadder{1e-2, 0.5, 6};
    double tol = 1e-13;
    int maxIter = 10000;
    double densityMassTol = 5e-3;
    double atomExclusionRadius = 1e-3;
    std::string densityCsv = "density.csv";
    std::string reportJson = "report.json";

    void validate() const {
        if (gridMin && gridMax && !(*gridMin < *gridMax))
            raise(ErrorKind::Validation, "grid requires min < max");
        if (gridPoints < 2) raise(ErrorKind::Validation, "grid needs at least 2 points");
        if (!(tol > 0.0) || !(densityMassTol > 0.0) || !(atomExclusionRadius > 0.0))
            raise(ErrorKind::Validation, "tolerances must be positive");
        if (maxIter < 1) raise(ErrorKind::Validation, "maxIter must be >= 1");
        yLadder.values(); // throws on bad ladder parameters
    }

    ConvolveConfig convolveConfig() const {
        ConvolveConfig cfg;
        cfg.gridMin = gridMin;
        cfg.gridMax = gridMax;
        cfg.gridPoints = gridPoints;
        cfg.ladder = yLadder;
        cfg.tol = tol;
        cfg.maxIter = maxIter;
        cfg.densityMassTol = densityMassTol;
        cfg.atomExclusionRadius = atomExclusionRadius;
        return cfg;
    }
};

namespace detail {

/// Locale-independent shortest-17-significant-digit rendering; the CSV
/// round-trips to the same doubles bit-exactly.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::Io, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::Io, "cannot write '" + path + "'");
    out << content;
    if (!out) raise(ErrorKind::Io, "short write to '" + path + "'");
}

inline Measure load_measure(const std::string& path) {
    try {
        return parse_measure(read_file(path));
    } catch (const Error& e) {
        raise(e.kind(), path + ": " + e.what());
    }
}

inline int exit_code_for(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::Parse:
        case ErrorKind::Validation:
        case ErrorKind::Normalization:
        case ErrorKind::Domain:
        case ErrorKind::DegenerateMap:
        case ErrorKind::Io:
            return kExitInputError;
        default:
            return kExitNumericalFailure;
    }
}

inline nlohmann::ordered_json complex_json(Complex z) {
    return nlohmann::ordered_json::array({z.real(), z.imag()});
}

} // namespace detail

inline std::string density_csv(const std::vector<DensitySample>& samples) {
    std::string out = "x,f\n";
    for (const auto& s : samples)
        out += detail::format_double(s.x) + "," + detail::format_double(s.f) + "\n";
    return out;
}

inline std::vector<DensitySample> parse_density_csv(const std::string& text) {
    std::vector<DensitySample> samples;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "x,f")
        raise(ErrorKind::Parse, "density CSV must start with an 'x,f' header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            raise(ErrorKind::Parse, "density CSV row without comma: " + line);
        DensitySample s;
        const char* b1 = line.data();
        const char* e1 = line.data() + comma;
        const char* b2 = line.data() + comma + 1;
        const char* e2 = line.data() + line.size();
        if (std::from_chars(b1, e1, s.x).ptr != e1 || std::from_chars(b2, e2, s.f).ptr != e2)
            raise(ErrorKind::Parse, "density CSV row with malformed number: " + line);
        samples.push_back(s);
    }
    return samples;
}

// ---------------------------------------------------------------------------
// Report schemas (mirrored in docs/report-schema.json). Every report is
// validated structurally before it is written.
// ---------------------------------------------------------------------------

namespace detail {

inline void require_key(const nlohmann::ordered_json& j, const char* key, const char* type) {
    if (!j.contains(key))
        raise(ErrorKind::Validation, std::string("report missing key '") + key + "'");
    const auto& v = j.at(key);
    const std::string t = type;
    const bool ok = (t == "string" && v.is_string()) || (t == "number" && v.is_number()) ||
                    (t == "array" && v.is_array()) || (t == "object" && v.is_object()) ||
                    (t == "boolean" && v.is_boolean());
    if (!ok)
        raise(ErrorKind::Validation,
              std::string("report key '") + key + "' must be a " + type);
}

inline void validate_convolve_report(const nlohmann::ordered_json& j) {
    require_key(j, "schema", "string");
    require_key(j, "mu", "string");
    require_key(j, "nu", "string");
    require_key(j, "grid", "object");
    require_key(j.at("grid"), "min", "number");
    require_key(j.at("grid"), "max", "number");
    require_key(j.at("grid"), "points", "number");
    require_key(j, "ladder", "object");
    require_key(j.at("ladder"), "y0", "number");
    require_key(j.at("ladder"), "ratio", "number");
    require_key(j.at("ladder"), "levels", "number");
    require_key(j, "atoms", "array");
    for (const auto& a : j.at("atoms"))
        if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
            raise(ErrorKind::Validation, "report atoms must be [location, mass] pairs");
    require_key(j, "supportIntervals", "array");
    require_key(j, "massReport", "object");
    require_key(j.at("massReport"), "atomMass", "number");
    require_key(j.at("massReport"), "acMassQuadrature", "number");
    require_key(j.at("massReport"), "deficit", "number");
    require_key(j, "samples", "object");
    require_key(j.at("samples"), "emitted", "number");
    require_key(j.at("samples"), "skipped", "number");
    require_key(j, "skipped", "array");
    for (const auto& s : j.at("skipped")) {
        require_key(s, "x", "number");
        require_key(s, "reason", "string");
    }
}

inline void validate_verify_report(const nlohmann::ordered_json& j) {
    require_key(j, "schema", "string");
    require_key(j, "mu", "string");
    require_key(j, "nu", "string");
    require_key(j, "pass", "boolean");
    require_key(j, "families", "array");
    for (const auto& f : j.at("families")) {
        require_key(f, "name", "string");
        require_key(f, "pass", "boolean");
        require_key(f, "worstResidual", "number");
        require_key(f, "note", "string");
    }
}

inline void validate_oracle_report(const nlohmann::ordered_json& j) {
    require_key(j, "schema", "string");
    require_key(j, "mu", "string");
    require_key(j, "nu", "string");
    require_key(j, "points", "array");
    for (const auto& p : j.at("points")) {
        require_key(p, "z", "array");
        require_key(p, "omegaQuadratic", "array");
        require_key(p, "omegaEngine", "array");
        require_key(p, "distance", "number");
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// convolve: atoms + density + mass report to files.
// ---------------------------------------------------------------------------

inline int cmd_convolve(const std::string& muPath, const std::string& nuPath,
                        const RunConfig& config, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
    try {
        config.validate();
        const Measure mu = detail::load_measure(muPath);
        const Measure nu = detail::load_measure(nuPath);
        const ConvolveConfig cfg = config.convolveConfig();
        const ConvolutionResult result = convolve(mu, nu, cfg);

        const auto grid = detail::default_grid(mu, nu, cfg);

        nlohmann::ordered_json report;
        report["schema"] = "freeconv-convolve-report/1";
        report["mu"] = muPath;
        report["nu"] = nuPath;
        report["grid"] = {{"min", grid.front()}, {"max", grid.back()},
                          {"points", static_cast<int>(grid.size())}};
        report["ladder"] = {{"y0", cfg.ladder.y0}, {"ratio", cfg.ladder.ratio},
                            {"levels", cfg.ladder.levels}};
        auto atoms = nlohmann::ordered_json::array();
        for (const auto& a : result.atoms) atoms.push_back({a.location, a.mass});
        report["atoms"] = std::move(atoms);
        auto intervals = nlohmann::ordered_json::array();
        for (const auto& [lo, hi] : result.supportIntervals) intervals.push_back({lo, hi});
        report["supportIntervals"] = std::move(intervals);
        report["massReport"] = {{"atomMass", result.massReport.atomMass},
                                {"acMassQuadrature", result.massReport.acMassQuadrature},
                                {"deficit", result.massReport.deficit}};
        report["samples"] = {{"emitted", result.densitySamples.size()},
                             {"skipped", result.skipped.size()}};
        auto skipped = nlohmann::ordered_json::array();
        for (const auto& s : result.skipped)
            skipped.push_back({{"x", s.x}, {"reason", s.reason}});
        report["skipped"] = std::move(skipped);
        detail::validate_convolve_report(report);

        detail::write_file(config.densityCsv, density_csv(result.densitySamples));
        detail::write_file(config.reportJson, report.dump(2) + "\n");

        out << "atoms: " << result.atoms.size()
            << ", density samples: " << result.densitySamples.size()
            << ", mass deficit: " << result.massReport.deficit << "\n";
        return kExitOk;
    } catch (const Error& e) {
        err << "convolve: " << e.what() << "\n";
        return detail::exit_code_for(e);
    }
}

// ---------------------------------------------------------------------------
// verify: invariant families with pass/fail and worst residuals.
// ---------------------------------------------------------------------------

namespace detail {

struct FamilyResult {
    std::string name;
    bool pass = false;
    double worstResidual = 0.0;
    std::string note;
};

inline FamilyResult verify_subordination(const Measure& mu, const Measure& nu,
                                         const RunConfig& config) {
    FamilyResult fam{"subordination-identities", true, 0.0, ""};
    const auto [aLo, aHi] = support_bounds(mu);
    const auto [bLo, bHi] = support_bounds(nu);
    const auto xs = uniform_grid(aLo + bLo - 1.0, aHi + bHi + 1.0, 11);
    const std::vector<double> ys = {2.0, 0.5, 0.1};
    SubordinationOptions opts;
    opts.tol = config.tol;
    opts.maxIter = config.maxIter;
    int failures = 0;
    const auto table = sweep(mu, nu, xs, ys, opts);
    for (const auto& entry : table.entries) {
        if (!entry.result) {
            ++failures;
            continue;
        }
        const auto& r = *entry.result;
        const double scale = 1.0 + std::abs(entry.z);
        const Complex sumGap = r.omega1.value() + r.omega2.value() - entry.z - r.fValue.value();
        const Complex fGap =
            f_transform(mu, r.omega1.value()) - f_transform(nu, r.omega2.value());
        const double imGap = std::max(
            0.0, entry.z.imag() - std::min(r.omega1.im(), r.omega2.im()));
        const double worst =
            std::max({std::abs(sumGap) / scale, std::abs(fGap) / scale, imGap});
        fam.worstResidual = std::max(fam.worstResidual, worst);
    }
    fam.pass = fam.worstResidual <= 1e-10 && failures == 0;
    if (failures > 0) fam.note = std::to_string(failures) + " grid points did not converge";
    return fam;
}

inline FamilyResult verify_im_domination(const Measure& mu, const Measure& nu) {
    FamilyResult fam{"im-domination", true, 0.0, ""};
    std::string notes;
    for (const Measure* m : {&mu, &nu}) {
        if (is_point_mass(*m))
            notes += notes.empty() ? "point-mass branch: Im F = Im z holds with equality"
                                   : "; second measure on the point-mass branch";
        for (double x : {-2.0, -0.5, 0.0, 0.5, 2.0})
            for (double y : {0.1, 1.0, 10.0}) {
                const Complex f = f_transform(*m, Complex(x, y));
                fam.worstResidual = std::max(fam.worstResidual, y - f.imag());
            }
    }
    fam.pass = fam.worstResidual <= 1e-12;
    fam.note = notes;
    return fam;
}

inline FamilyResult verify_additivity(const Measure& mu, const Measure& nu) {
    FamilyResult fam{"phi-additivity", true, 0.0, ""};
    try {
        const std::vector<HalfPlanePoint> points = {HalfPlanePoint(0.0, 5.0),
                                                    HalfPlanePoint(0.0, 10.0),
                                                    HalfPlanePoint(0.0, 20.0)};
        for (const auto& s : check_additivity(mu, nu, points))
            fam.worstResidual = std::max(fam.worstResidual, s.residual);
        fam.pass = true;
    } catch (const Error& e) {
        fam.pass = false;
        fam.worstResidual = std::numeric_limits<double>::infinity();
        fam.note = e.what();
    }
    return fam;
}

inline FamilyResult verify_nevanlinna(const Measure& mu, const Measure& nu) {
    FamilyResult fam{"nevanlinna", true, 0.0, ""};
    std::vector<HalfPlanePoint> samples;
    for (double x : {-1.0, 0.0, 1.0})
        for (double y : {0.1, 1.0, 10.0}) samples.emplace_back(x, y);
    for (const Measure* m : {&mu, &nu}) {
        const auto report = nevanlinna_diagnostics(*m, samples);
        fam.pass = fam.pass && report.imRatioOk && report.tailOk;
        fam.worstResidual = std::max(
            {fam.worstResidual, 1.0 - report.minImRatio, report.tailError[3]});
        if (report.pointMassBranch) fam.note = "point-mass branch reported";
    }
    return fam;
}

inline FamilyResult verify_two_atom_oracle(const Measure& mu, const Measure& nu) {
    FamilyResult fam{"two-atom-oracle", true, 0.0, ""};
    const auto muTwo = as_two_atom(mu);
    const auto nuTwo = as_two_atom(nu);
    if (!muTwo || !nuTwo) {
        fam.note = "not applicable: inputs are not both two-atom";
        return fam;
    }
    for (const Complex z : {Complex(0.0, 2.0), Complex(1.0, 1.0), Complex(-0.7, 0.5)}) {
        const HalfPlanePoint zp(z);
        const Complex quad = omega1_quadratic(*muTwo, *nuTwo, zp).value();
        const Complex engine = denjoy_wolff_continued(mu, nu, zp).omega1.value();
        fam.worstResidual = std::max(fam.worstResidual, std::abs(quad - engine));
    }
    fam.pass = fam.worstResidual <= 1e-10;
    return fam;
}

} // namespace detail

inline int cmd_verify(const std::string& muPath, const std::string& nuPath,
                      const RunConfig& config, std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
    try {
        config.validate();
        const Measure mu = detail::load_measure(muPath);
        const Measure nu = detail::load_measure(nuPath);

        std::vector<detail::FamilyResult> families;
        families.push_back(detail::verify_subordination(mu, nu, config));
        families.push_back(detail::verify_im_domination(mu, nu));
        families.push_back(detail::verify_additivity(mu, nu));
        families.push_back(detail::verify_nevanlinna(mu, nu));
        families.push_back(detail::verify_two_atom_oracle(mu, nu));

        bool allPass = true;
        nlohmann::ordered_json report;
        report["schema"] = "freeconv-verify-report/1";
        report["mu"] = muPath;
        report["nu"] = nuPath;
        auto fams = nlohmann::ordered_json::array();
        for (const auto& f : families) {
            allPass = allPass && f.pass;
            fams.push_back({{"name", f.name},
                            {"pass", f.pass},
                            {"worstResidual", f.worstResidual},
                            {"note", f.note}});
            out << (f.pass ? "[PASS] " : "[FAIL] ") << f.name
                << " worst residual " << f.worstResidual
                << (f.note.empty() ? "" : " (" + f.note + ")") << "\n";
        }
        report["pass"] = allPass;
        report["families"] = std::move(fams);
        detail::validate_verify_report(report);
        detail::write_file(config.reportJson, report.dump(2) + "\n");
        return allPass ? kExitOk : kExitNumericalFailure;
    } catch (const Error& e) {
        err << "verify: " << e.what() << "\n";
        return detail::exit_code_for(e);
    }
}

// ---------------------------------------------------------------------------
// oracle: per-point comparison of the closed-form subordination value against
// the iterative engine, for two-atom inputs.
// ---------------------------------------------------------------------------

inline int cmd_oracle(const std::string& muPath, const std::string& nuPath,
                      const std::vector<Complex>& zList, std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
    try {
        const Measure mu = detail::load_measure(muPath);
        const Measure nu = detail::load_measure(nuPath);
        const auto muTwo = as_two_atom(mu);
        const auto nuTwo = as_two_atom(nu);
        if (!muTwo || !nuTwo)
            raise(ErrorKind::Validation, "oracle requires two-atom measures");
        if (zList.empty())
            raise(ErrorKind::Validation, "oracle requires at least one z point");

        nlohmann::ordered_json report;
        report["schema"] = "freeconv-oracle-report/1";
        report["mu"] = muPath;
        report["nu"] = nuPath;
        auto points = nlohmann::ordered_json::array();
        for (const Complex z : zList) {
            const HalfPlanePoint zp(z);
            const Complex quad = omega1_quadratic(*muTwo, *nuTwo, zp).value();
            const Complex engine = denjoy_wolff_continued(mu, nu, zp).omega1.value();
            points.push_back({{"z", detail::complex_json(z)},
                              {"omegaQuadratic", detail::complex_json(quad)},
                              {"omegaEngine", detail::complex_json(engine)},
                              {"distance", std::abs(quad - engine)}});
        }
        report["points"] = std::move(points);
        detail::validate_oracle_report(report);
        out << report.dump(2) << "\n";
        return kExitOk;
    } catch (const Error& e) {
        err << "oracle: " << e.what() << "\n";
        return detail::exit_code_for(e);
    }
}

} // namespace freeconv
