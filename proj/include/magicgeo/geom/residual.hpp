#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "magicgeo/geom/kernel.hpp"
#include "magicgeo/geom/vec2.hpp"
#include "magicgeo/lang/types.hpp"

namespace magicgeo::geom {

/// Concrete coordinates for points and values for scalars. Pinned points and
/// fixed scalars may be present; free scalars must be.
struct Assignment {
    std::map<std::string, Vec2> points;
    std::map<std::string, double> scalars;

    friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// One residual row after sugar expansion.
struct Row {
    lang::Constraint constraint;  // always a primitive kind
    int part = 0;
    std::size_t constraint_index = 0;  // index into GeoSpec::constraints
};

/// Residual values in expansion order, with the originating source line of
/// each row.
struct ResidualVector {
    std::vector<double> values;
    std::vector<int> lines;

    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
    std::size_t size() const { return values.size(); }
};

/// Expands sugar into primitive rows. Order: constraints in source order; an
/// inscribed constraint becomes one on_circle row per vertex (vertex order);
/// between and midpoint contribute parts 0 and 1 in that order.
inline std::vector<Row> expand(const lang::GeoSpec& spec) {
    std::vector<Row> rows;
    for (std::size_t i = 0; i < spec.constraints.size(); ++i) {
        const auto& c = spec.constraints[i];
        if (c.kind == ConstraintKind::Inscribed) {
            const std::string& center = c.point_args[3];
            for (int v = 0; v < 3; ++v) {
                lang::Constraint on;
                on.kind = ConstraintKind::OnCircle;
                on.point_args = {c.point_args[static_cast<std::size_t>(v)], center};
                on.scalar_args = c.scalar_args;
                on.source_line = c.source_line;
                rows.push_back({std::move(on), 0, i});
            }
            continue;
        }
        for (int part = 0; part < row_count(c.kind); ++part) rows.push_back({c, part, i});
    }
    return rows;
}

struct Gradient {
    std::map<std::string, Vec2> points;
    std::map<std::string, double> scalars;
};

namespace detail {

struct ResolvedRow {
    std::array<Vec2, kMaxPointArgs> points{};
    std::array<double, 1> scalars{};
    std::size_t n_points = 0;
    std::size_t n_scalars = 0;
};

inline double resolve_scalar(const lang::GeoSpec& spec, const lang::ScalarArg& arg, const Assignment& a) {
    if (const auto* lit = std::get_if<double>(&arg)) return *lit;
    const auto& name = std::get<std::string>(arg);
    const lang::ScalarDecl* decl = spec.find_scalar(name);
    if (decl == nullptr) throw std::invalid_argument(fmt::format("unknown scalar '{}'", name));
    auto it = a.scalars.find(name);
    if (const auto* fixed = std::get_if<double>(&decl->binding)) return it == a.scalars.end() ? *fixed : it->second;
    if (it == a.scalars.end()) throw std::invalid_argument(fmt::format("free scalar '{}' is not assigned", name));
    const auto& b = std::get<lang::FreeBounds>(decl->binding);
    if (!std::isfinite(it->second) || it->second < b.lo || it->second > b.hi)
        throw std::invalid_argument(
            fmt::format("scalar '{}' = {} lies outside its bounds [{}, {}]", name, it->second, b.lo, b.hi));
    return it->second;
}

inline ResolvedRow resolve(const lang::GeoSpec& spec, const lang::Constraint& c, const Assignment& a) {
    ResolvedRow r;
    for (const auto& name : c.point_args) {
        auto it = a.points.find(name);
        if (it == a.points.end()) throw std::invalid_argument(fmt::format("point '{}' is not assigned", name));
        if (!std::isfinite(it->second.x) || !std::isfinite(it->second.y))
            throw std::invalid_argument(fmt::format("point '{}' has non-finite coordinates", name));
        r.points[r.n_points++] = it->second;
    }
    for (const auto& s : c.scalar_args) r.scalars[r.n_scalars++] = resolve_scalar(spec, s, a);
    return r;
}

inline RowEval evaluate_named(const lang::GeoSpec& spec, const Row& row, const Assignment& a) {
    const auto rr = resolve(spec, row.constraint, a);
    try {
        return evaluate_row(row.constraint.kind, row.part, std::span<const Vec2>(rr.points.data(), rr.n_points),
                            std::span<const double>(rr.scalars.data(), rr.n_scalars));
    } catch (const DegenerateSlots& d) {
        std::vector<std::string> names;
        for (int slot : d.slots) names.push_back(row.constraint.point_args[static_cast<std::size_t>(slot)]);
        throw DegenerateEvaluation(std::string(lang::kind_name(row.constraint.kind)), std::move(names),
                                   row.constraint.source_line, d.why);
    }
}

}  // namespace detail

/// Signed residual of one expanded row; zero exactly when the relation holds.
inline double residual(const lang::GeoSpec& spec, const Row& row, const Assignment& a) {
    return detail::evaluate_named(spec, row, a).value;
}

/// Residual of a primitive constraint (part selects the row of two-row kinds).
inline double residual(const lang::GeoSpec& spec, const lang::Constraint& c, const Assignment& a, int part = 0) {
    return residual(spec, Row{c, part, 0}, a);
}

/// Partials with respect to free coordinates and free scalars only. Pinned
/// points, fixed scalars and literals contribute no entries; a point used in
/// several argument slots gets the sum of its slot partials.
inline Gradient residual_gradient(const lang::GeoSpec& spec, const Row& row, const Assignment& a) {
    const RowEval e = detail::evaluate_named(spec, row, a);
    Gradient g;
    const auto& c = row.constraint;
    for (std::size_t i = 0; i < c.point_args.size(); ++i) {
        const lang::PointDecl* decl = spec.find_point(c.point_args[i]);
        if (decl != nullptr && decl->pin) continue;
        g.points[c.point_args[i]] += e.d_point[i];
    }
    for (const auto& s : c.scalar_args) {
        const auto* name = std::get_if<std::string>(&s);
        if (name == nullptr) continue;
        const lang::ScalarDecl* decl = spec.find_scalar(*name);
        if (decl == nullptr || !decl->is_free()) continue;
        g.scalars[*name] += e.d_scalar;
    }
    return g;
}

inline Gradient residual_gradient(const lang::GeoSpec& spec, const lang::Constraint& c, const Assignment& a,
                                  int part = 0) {
    return residual_gradient(spec, Row{c, part, 0}, a);
}

/// Every expanded residual, recomputed from scratch.
inline ResidualVector residuals(const lang::GeoSpec& spec, const Assignment& a) {
    ResidualVector out;
    for (const auto& row : expand(spec)) {
        out.values.push_back(residual(spec, row, a));
        out.lines.push_back(row.constraint.source_line);
    }
    return out;
}

/// Sum over unordered point pairs of max(0, d_min - |P - Q|)^2.
inline double degeneracy_penalty(const lang::GeoSpec& spec, const Assignment& a, double d_min) {
    if (!(d_min > 0.0)) throw std::invalid_argument("d_min must be positive");
    double total = 0.0;
    for (std::size_t i = 0; i < spec.points.size(); ++i) {
        const Vec2 p = a.points.at(spec.points[i].name);
        for (std::size_t j = i + 1; j < spec.points.size(); ++j) {
            const double gap = d_min - distance(p, a.points.at(spec.points[j].name));
            if (gap > 0.0) total += gap * gap;
        }
    }
    return total;
}

}  // namespace magicgeo::geom
