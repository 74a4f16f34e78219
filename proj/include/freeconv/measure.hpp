#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "freeconv/error.hpp"

namespace freeconv {

// ---------------------------------------------------------------------------
// Data model: point masses plus weighted absolutely-continuous components.
// A Measure is immutable after construction and always carries total mass 1.
// ---------------------------------------------------------------------------

struct Atom {
    double location = 0.0;
    double mass = 0.0; // in (0, 1]

    friend bool operator==(const Atom&, const Atom&) = default;
};

/// Wigner-type density 2 sqrt(r^2 - (t-c)^2) / (pi r^2) on [c-r, c+r].
struct Semicircle {
    double center = 0.0;
    double radius = 1.0;

    friend bool operator==(const Semicircle&, const Semicircle&) = default;
};

/// Density 1 / (pi sqrt((t-a)(b-t))) on (a, b).
struct Arcsine {
    double left = 0.0;
    double right = 1.0;

    friend bool operator==(const Arcsine&, const Arcsine&) = default;
};

struct Uniform {
    double left = 0.0;
    double right = 1.0;

    friend bool operator==(const Uniform&, const Uniform&) = default;
};

struct PwlNode {
    double x = 0.0;
    double f = 0.0; // density value, >= 0

    friend bool operator==(const PwlNode&, const PwlNode&) = default;
};

/// Piecewise-linear density table; nodes strictly increasing in x, density
/// zero outside [front.x, back.x]. Normalized so the trapezoid integral is 1.
struct PiecewiseLinear {
    std::vector<PwlNode> nodes;

    friend bool operator==(const PiecewiseLinear&, const PiecewiseLinear&) = default;
};

using Shape = std::variant<Semicircle, Arcsine, Uniform, PiecewiseLinear>;

struct AcComponent {
    double weight = 1.0; // in (0, 1]
    Shape shape;

    friend bool operator==(const AcComponent&, const AcComponent&) = default;
};

struct Measure {
    std::vector<Atom> atoms;          // sorted by location, pairwise distinct
    std::vector<AcComponent> acParts;

    friend bool operator==(const Measure&, const Measure&) = default;
};

// ---------------------------------------------------------------------------
// Shape helpers
// ---------------------------------------------------------------------------

namespace detail {

inline double pwl_trapezoid_integral(const std::vector<PwlNode>& nodes) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
        total += 0.5 * (nodes[i].f + nodes[i + 1].f) * (nodes[i + 1].x - nodes[i].x);
    return total;
}

} // namespace detail

inline Shape make_semicircle(double center, double radius) {
    if (!std::isfinite(center) || !std::isfinite(radius) || !(radius > 0.0))
        raise(ErrorKind::Validation, "semicircle requires finite center and radius > 0");
    return Semicircle{center, radius};
}

inline Shape make_arcsine(double left, double right) {
    if (!std::isfinite(left) || !std::isfinite(right) || !(left < right))
        raise(ErrorKind::Validation, "arcsine requires finite endpoints with a < b");
    return Arcsine{left, right};
}

inline Shape make_uniform(double left, double right) {
    if (!std::isfinite(left) || !std::isfinite(right) || !(left < right))
        raise(ErrorKind::Validation, "uniform requires finite endpoints with a < b");
    return Uniform{left, right};
}

/// Builds a piecewise-linear density. Tables whose trapezoid integral is
/// within 1e-6 of 1 are rescaled to integrate exactly; anything further off
/// is rejected as a genuinely wrong table rather than float round-off.
inline Shape make_piecewise_linear(std::vector<PwlNode> nodes) {
    if (nodes.size() < 2)
        raise(ErrorKind::Validation, "piecewise-linear table needs at least 2 nodes");
    for (const auto& n : nodes) {
        if (!std::isfinite(n.x) || !std::isfinite(n.f))
            raise(ErrorKind::Validation, "piecewise-linear node must be finite");
        if (n.f < 0.0)
            raise(ErrorKind::Validation, "piecewise-linear density must be >= 0");
    }
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
        if (!(nodes[i].x < nodes[i + 1].x))
            raise(ErrorKind::Validation, "piecewise-linear nodes must be strictly increasing in x");

    const double total = detail::pwl_trapezoid_integral(nodes);
    if (!(total > 0.0))
        raise(ErrorKind::Validation, "piecewise-linear table integrates to zero");
    if (std::abs(total - 1.0) > 1e-6)
        raise(ErrorKind::Normalization,
              "piecewise-linear table integrates to " + std::to_string(total) +
                  ", more than 1e-6 away from 1");
    // idempotent: a table already at unit integral (to rounding) is kept
    // bit-identical so render/parse round-trips exactly
    if (std::abs(total - 1.0) > 1e-14)
        for (auto& n : nodes) n.f /= total;
    return PiecewiseLinear{std::move(nodes)};
}

/// Support interval of a shape (closed hull).
inline std::pair<double, double> shape_support(const Shape& shape) {
    return std::visit(
        [](const auto& s) -> std::pair<double, double> {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Semicircle>)
                return {s.center - s.radius, s.center + s.radius};
            else if constexpr (std::is_same_v<T, PiecewiseLinear>)
                return {s.nodes.front().x, s.nodes.back().x};
            else
                return {s.left, s.right};
        },
        shape);
}

/// Pointwise density of a shape (finite everywhere except arcsine endpoints,
/// which are outside the open support anyway).
inline double shape_density(const Shape& shape, double x) {
    constexpr double pi = 3.14159265358979323846;
    return std::visit(
        [x](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Semicircle>) {
                const double d = x - s.center;
                const double rad2 = s.radius * s.radius - d * d;
                return rad2 > 0.0 ? 2.0 * std::sqrt(rad2) / (pi * s.radius * s.radius) : 0.0;
            } else if constexpr (std::is_same_v<T, Arcsine>) {
                if (!(x > s.left && x < s.right)) return 0.0;
                return 1.0 / (pi * std::sqrt((x - s.left) * (s.right - x)));
            } else if constexpr (std::is_same_v<T, Uniform>) {
                return (x >= s.left && x <= s.right) ? 1.0 / (s.right - s.left) : 0.0;
            } else {
                const auto& nodes = s.nodes;
                if (x < nodes.front().x || x > nodes.back().x) return 0.0;
                auto it = std::upper_bound(nodes.begin(), nodes.end(), x,
                                           [](double v, const PwlNode& n) { return v < n.x; });
                if (it == nodes.begin()) return nodes.front().f;
                if (it == nodes.end()) return nodes.back().f;
                const auto& q = *it;
                const auto& p = *(it - 1);
                const double t = (x - p.x) / (q.x - p.x);
                return p.f + t * (q.f - p.f);
            }
        },
        shape);
}

// ---------------------------------------------------------------------------
// Construction and validation
// ---------------------------------------------------------------------------

/// Validates and canonicalizes a measure: atoms sorted, near-coincident atoms
/// (closer than 1e-12) merged, total mass 1 within 1e-12.
inline Measure make_measure(std::vector<Atom> atoms, std::vector<AcComponent> acParts) {
    for (const auto& a : atoms) {
        if (!std::isfinite(a.location))
            raise(ErrorKind::Validation, "atom location must be finite");
        if (!(a.mass > 0.0) || a.mass > 1.0)
            raise(ErrorKind::Validation, "atom mass must lie in (0, 1]");
    }
    for (const auto& c : acParts) {
        if (!(c.weight > 0.0) || c.weight > 1.0)
            raise(ErrorKind::Validation, "ac component weight must lie in (0, 1]");
    }

    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.location < b.location; });

    // Merge atoms closer than 1e-12; duplicate poles are too ill-conditioned
    // to keep apart.
    std::vector<Atom> merged;
    merged.reserve(atoms.size());
    for (const auto& a : atoms) {
        if (!merged.empty() && std::abs(a.location - merged.back().location) < 1e-12)
            merged.back().mass += a.mass;
        else
            merged.push_back(a);
    }

    double total = 0.0;
    for (const auto& a : merged) total += a.mass;
    for (const auto& c : acParts) total += c.weight;
    if (std::abs(total - 1.0) > 1e-12)
        raise(ErrorKind::Normalization,
              "total mass is " + std::to_string(total) + ", expected 1");

    return Measure{std::move(merged), std::move(acParts)};
}

inline Measure point_mass(double location) {
    return make_measure({Atom{location, 1.0}}, {});
}

inline bool is_point_mass(const Measure& m) {
    return m.acParts.empty() && m.atoms.size() == 1 &&
           std::abs(m.atoms.front().mass - 1.0) <= 1e-12;
}

/// Closed hull of the support.
inline std::pair<double, double> support_bounds(const Measure& m) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& a : m.atoms) {
        lo = std::min(lo, a.location);
        hi = std::max(hi, a.location);
    }
    for (const auto& c : m.acParts) {
        const auto [slo, shi] = shape_support(c.shape);
        lo = std::min(lo, slo);
        hi = std::max(hi, shi);
    }
    return {lo, hi};
}

// ---------------------------------------------------------------------------
// Parsing and rendering
//
// Measure spec files are JSON documents with optional keys
//   atoms : [[location, mass], ...]
//   ac    : [{"w": weight, "<shape>": {...}}, ...]
// where <shape> is exactly one of semicircle{center,radius}, arcsine{a,b},
// uniform{a,b}, pwl{nodes:[[x,f],...]}.
// ---------------------------------------------------------------------------

namespace detail {

inline std::size_t line_of_byte(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

inline double number_field(const nlohmann::json& j, const std::string& where) {
    if (!j.is_number())
        raise(ErrorKind::Parse, where + ": expected a number");
    return j.get<double>();
}

inline Shape parse_shape(const std::string& key, const nlohmann::json& body,
                         const std::string& where) {
    if (!body.is_object())
        raise(ErrorKind::Parse, where + "." + key + ": expected an object");
    auto need = [&](const char* field) -> double {
        if (!body.contains(field))
            raise(ErrorKind::Parse, where + "." + key + ": missing field '" + field + "'");
        return number_field(body.at(field), where + "." + key + "." + field);
    };
    if (key == "semicircle") return make_semicircle(need("center"), need("radius"));
    if (key == "arcsine") return make_arcsine(need("a"), need("b"));
    if (key == "uniform") return make_uniform(need("a"), need("b"));
    if (key == "pwl") {
        if (!body.contains("nodes") || !body.at("nodes").is_array())
            raise(ErrorKind::Parse, where + ".pwl: missing 'nodes' array");
        std::vector<PwlNode> nodes;
        for (const auto& n : body.at("nodes")) {
            if (!n.is_array() || n.size() != 2)
                raise(ErrorKind::Parse, where + ".pwl.nodes: entries must be [x, f] pairs");
            nodes.push_back(PwlNode{number_field(n[0], where + ".pwl.nodes[].x"),
                                    number_field(n[1], where + ".pwl.nodes[].f")});
        }
        return make_piecewise_linear(std::move(nodes));
    }
    raise(ErrorKind::Parse, where + ": unknown shape key '" + key + "'");
}

} // namespace detail

inline Measure parse_measure(const std::string& specText) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(specText);
    } catch (const nlohmann::json::parse_error& e) {
        raise(ErrorKind::Parse, "line " + std::to_string(detail::line_of_byte(specText, e.byte)) +
                                    ": " + e.what());
    }
    if (!doc.is_object())
        raise(ErrorKind::Parse, "measure spec must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (key != "atoms" && key != "ac")
            raise(ErrorKind::Parse, "unknown top-level field '" + key + "'");
    }

    std::vector<Atom> atoms;
    if (doc.contains("atoms")) {
        const auto& arr = doc.at("atoms");
        if (!arr.is_array()) raise(ErrorKind::Parse, "atoms: expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const auto& e = arr[i];
            const std::string where = "atoms[" + std::to_string(i) + "]";
            if (!e.is_array() || e.size() != 2)
                raise(ErrorKind::Parse, where + ": expected a [location, mass] pair");
            atoms.push_back(Atom{detail::number_field(e[0], where + ".location"),
                                 detail::number_field(e[1], where + ".mass")});
        }
    }
    // Exact duplicates are a spec-file mistake, not round-off; reject before
    // the near-coincidence merge in make_measure can hide them.
    for (std::size_t i = 0; i < atoms.size(); ++i)
        for (std::size_t j = i + 1; j < atoms.size(); ++j)
            if (atoms[i].location == atoms[j].location)
                raise(ErrorKind::Validation,
                      "duplicate atom location " + std::to_string(atoms[i].location));

    std::vector<AcComponent> acParts;
    if (doc.contains("ac")) {
        const auto& arr = doc.at("ac");
        if (!arr.is_array()) raise(ErrorKind::Parse, "ac: expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const auto& e = arr[i];
            const std::string where = "ac[" + std::to_string(i) + "]";
            if (!e.is_object()) raise(ErrorKind::Parse, where + ": expected an object");
            if (!e.contains("w")) raise(ErrorKind::Parse, where + ": missing weight 'w'");
            const double w = detail::number_field(e.at("w"), where + ".w");
            std::optional<Shape> shape;
            for (const auto& [key, body] : e.items()) {
                if (key == "w") continue;
                if (shape.has_value())
                    raise(ErrorKind::Parse, where + ": exactly one shape key expected");
                shape = detail::parse_shape(key, body, where);
            }
            if (!shape.has_value())
                raise(ErrorKind::Parse, where + ": missing shape key");
            acParts.push_back(AcComponent{w, std::move(*shape)});
        }
    }

    // Tolerate float round-off in user files: rescale to exact total mass 1
    // when within 1e-9, reject anything further off. Totals already within
    // the 1e-12 invariant are kept bit-identical (round-trip stability).
    double total = 0.0;
    for (const auto& a : atoms) total += a.mass;
    for (const auto& c : acParts) total += c.weight;
    if (std::abs(total - 1.0) > 1e-9)
        raise(ErrorKind::Normalization,
              "total mass is " + std::to_string(total) + ", expected 1 within 1e-9");
    if (std::abs(total - 1.0) > 1e-12) {
        for (auto& a : atoms) a.mass /= total;
        for (auto& c : acParts) c.weight /= total;
    }

    return make_measure(std::move(atoms), std::move(acParts));
}

/// Inverse of parse_measure: parse_measure(render_measure(m)) == m.
inline std::string render_measure(const Measure& m) {
    nlohmann::ordered_json doc;
    if (!m.atoms.empty()) {
        auto& arr = doc["atoms"];
        for (const auto& a : m.atoms) arr.push_back({a.location, a.mass});
    }
    if (!m.acParts.empty()) {
        auto& arr = doc["ac"];
        for (const auto& c : m.acParts) {
            nlohmann::ordered_json e;
            e["w"] = c.weight;
            std::visit(
                [&e](const auto& s) {
                    using T = std::decay_t<decltype(s)>;
                    if constexpr (std::is_same_v<T, Semicircle>)
                        e["semicircle"] = {{"center", s.center}, {"radius", s.radius}};
                    else if constexpr (std::is_same_v<T, Arcsine>)
                        e["arcsine"] = {{"a", s.left}, {"b", s.right}};
                    else if constexpr (std::is_same_v<T, Uniform>)
                        e["uniform"] = {{"a", s.left}, {"b", s.right}};
                    else {
                        nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
                        for (const auto& n : s.nodes) nodes.push_back({n.x, n.f});
                        e["pwl"] = {{"nodes", nodes}};
                    }
                },
                c.shape);
            arr.push_back(std::move(e));
        }
    }
    if (doc.is_null()) doc = nlohmann::ordered_json::object();
    return doc.dump();
}

// ---------------------------------------------------------------------------
// Elementary manipulations
// ---------------------------------------------------------------------------

/// Pushforward under t -> scale*t + shift.
inline Measure shift_scale(const Measure& m, double shift, double scale) {
    if (!std::isfinite(shift) || !std::isfinite(scale))
        raise(ErrorKind::Domain, "shift and scale must be finite");
    if (scale == 0.0)
        raise(ErrorKind::DegenerateMap, "scale = 0 collapses the measure");

    std::vector<Atom> atoms;
    atoms.reserve(m.atoms.size());
    for (const auto& a : m.atoms) atoms.push_back(Atom{scale * a.location + shift, a.mass});

    std::vector<AcComponent> acParts;
    acParts.reserve(m.acParts.size());
    for (const auto& c : m.acParts) {
        Shape shape = std::visit(
            [&](const auto& s) -> Shape {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Semicircle>) {
                    return Semicircle{scale * s.center + shift, std::abs(scale) * s.radius};
                } else if constexpr (std::is_same_v<T, PiecewiseLinear>) {
                    std::vector<PwlNode> nodes;
                    nodes.reserve(s.nodes.size());
                    for (const auto& n : s.nodes)
                        nodes.push_back(PwlNode{scale * n.x + shift, n.f / std::abs(scale)});
                    if (scale < 0.0) std::reverse(nodes.begin(), nodes.end());
                    return PiecewiseLinear{std::move(nodes)};
                } else {
                    double lo = scale * s.left + shift;
                    double hi = scale * s.right + shift;
                    if (lo > hi) std::swap(lo, hi);
                    if constexpr (std::is_same_v<T, Arcsine>)
                        return Arcsine{lo, hi};
                    else
                        return Uniform{lo, hi};
                }
            },
            c.shape);
        acParts.push_back(AcComponent{c.weight, std::move(shape)});
    }
    return make_measure(std::move(atoms), std::move(acParts));
}

namespace detail {

// Central moments of the normalized families; odd ones vanish by symmetry.
inline double semicircle_central_moment(double radius, int k) {
    if (k % 2 != 0) return 0.0;
    static constexpr std::array<double, 5> catalan = {1.0, 1.0, 2.0, 5.0, 14.0};
    const int n = k / 2;
    return catalan[static_cast<std::size_t>(n)] * std::pow(radius / 2.0, k);
}

inline double arcsine_central_moment(double halfWidth, int k) {
    if (k % 2 != 0) return 0.0;
    static constexpr std::array<double, 5> centralBinomial = {1.0, 2.0, 6.0, 20.0, 70.0};
    const int n = k / 2;
    return centralBinomial[static_cast<std::size_t>(n)] * std::pow(halfWidth / 2.0, k);
}

inline double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

inline double shifted_even_moment(double center, int k,
                                  double (*central)(double, int), double scaleParam) {
    double total = 0.0;
    for (int j = 0; j <= k; j += 2)
        total += binomial(k, j) * std::pow(center, k - j) * central(scaleParam, j);
    return total;
}

inline double shape_moment(const Shape& shape, int k) {
    return std::visit(
        [k](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Semicircle>) {
                return shifted_even_moment(s.center, k, &semicircle_central_moment, s.radius);
            } else if constexpr (std::is_same_v<T, Arcsine>) {
                const double center = 0.5 * (s.left + s.right);
                const double halfWidth = 0.5 * (s.right - s.left);
                return shifted_even_moment(center, k, &arcsine_central_moment, halfWidth);
            } else if constexpr (std::is_same_v<T, Uniform>) {
                // (b^{k+1} - a^{k+1}) / ((k+1)(b-a))
                double num = std::pow(s.right, k + 1) - std::pow(s.left, k + 1);
                return num / ((k + 1) * (s.right - s.left));
            } else {
                // Exact polynomial integral per linear segment.
                double total = 0.0;
                for (std::size_t i = 0; i + 1 < s.nodes.size(); ++i) {
                    const double p = s.nodes[i].x, q = s.nodes[i + 1].x;
                    const double fp = s.nodes[i].f, fq = s.nodes[i + 1].f;
                    const double c1 = (fq - fp) / (q - p);
                    const double c0 = fp - c1 * p;
                    total += c0 * (std::pow(q, k + 1) - std::pow(p, k + 1)) / (k + 1) +
                             c1 * (std::pow(q, k + 2) - std::pow(p, k + 2)) / (k + 2);
                }
                return total;
            }
        },
        shape);
}

} // namespace detail

/// k-th raw moment, k <= 8. Atoms are summed exactly; ac parts use per-shape
/// closed forms (exact segment integrals for tables).
inline double moment(const Measure& m, int k) {
    if (k < 0 || k > 8)
        raise(ErrorKind::Domain, "moment order must lie in [0, 8]");
    double total = 0.0;
    for (const auto& a : m.atoms) total += a.mass * std::pow(a.location, k);
    for (const auto& c : m.acParts) total += c.weight * detail::shape_moment(c.shape, k);
    return total;
}

} // namespace freeconv
