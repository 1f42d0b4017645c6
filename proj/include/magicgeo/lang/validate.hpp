#pragma once

#include <cmath>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "magicgeo/lang/types.hpp"

namespace magicgeo::lang {

namespace detail {

enum class NameKind { Point, Scalar };

inline bool all_distinct(const std::vector<std::string>& names) {
    std::set<std::string> seen(names.begin(), names.end());
    return seen.size() == names.size();
}

// Groups of argument slots that must name pairwise distinct points.
inline std::vector<std::vector<int>> distinct_groups(ConstraintKind kind) {
    switch (kind) {
        case ConstraintKind::OnCircle:
        case ConstraintKind::Length:
        case ConstraintKind::Horizontal:
        case ConstraintKind::Vertical: return {{0, 1}};
        case ConstraintKind::EqualLength:
        case ConstraintKind::RatioLength:
        case ConstraintKind::Parallel:
        case ConstraintKind::Perpendicular: return {{0, 1}, {2, 3}};
        case ConstraintKind::AngleDeg:
        case ConstraintKind::Collinear:
        case ConstraintKind::Between:
        case ConstraintKind::Midpoint:
        case ConstraintKind::OnLine:
        case ConstraintKind::Tangent: return {{0, 1, 2}};
        case ConstraintKind::AngleEq: return {{0, 1, 2}, {3, 4, 5}};
        case ConstraintKind::Concyclic:
        case ConstraintKind::Inscribed: return {{0, 1, 2, 3}};
    }
    return {};
}

}  // namespace detail

/// Semantic checks that the grammar cannot express. An empty result means the
/// spec satisfies every GeoSpec invariant.
inline std::vector<SpecError> validate(const GeoSpec& spec) {
    std::vector<SpecError> errors;
    auto report = [&](ErrorClass cls, int line, std::string msg) { errors.push_back({cls, line, std::move(msg)}); };

    std::unordered_map<std::string, detail::NameKind> names;
    for (const auto& p : spec.points) {
        auto [it, inserted] = names.emplace(p.name, detail::NameKind::Point);
        if (!inserted) report(ErrorClass::DuplicateDecl, p.source_line, fmt::format("'{}' is already declared", p.name));
        if (p.pin && (!std::isfinite(p.pin->x) || !std::isfinite(p.pin->y)))
            report(ErrorClass::RangeError, p.source_line, fmt::format("pin of point '{}' is not finite", p.name));
    }
    for (const auto& s : spec.scalars) {
        auto [it, inserted] = names.emplace(s.name, detail::NameKind::Scalar);
        if (!inserted) report(ErrorClass::DuplicateDecl, s.source_line, fmt::format("'{}' is already declared", s.name));
        if (const auto* value = std::get_if<double>(&s.binding)) {
            if (!std::isfinite(*value))
                report(ErrorClass::RangeError, s.source_line, fmt::format("scalar '{}' is not finite", s.name));
        } else {
            const auto& b = std::get<FreeBounds>(s.binding);
            if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.lo < b.hi))
                report(ErrorClass::RangeError, s.source_line,
                       fmt::format("bounds of scalar '{}' must be finite with lo < hi", s.name));
        }
    }

    auto is_point = [&](const std::string& n) {
        auto it = names.find(n);
        return it != names.end() && it->second == detail::NameKind::Point;
    };
    auto check_point = [&](const std::string& n, int line) {
        if (is_point(n)) return true;
        if (names.count(n))
            report(ErrorClass::UnknownIdentifier, line, fmt::format("'{}' is a scalar, expected a point", n));
        else
            report(ErrorClass::UnknownIdentifier, line, fmt::format("unknown point '{}'", n));
        return false;
    };

    // Free scalars are checked over their whole interval.
    auto check_scalar_arg = [&](const ScalarArg& arg, ScalarRole role, int line, std::string_view what) {
        double lo = 0, hi = 0;
        if (const auto* lit = std::get_if<double>(&arg)) {
            lo = hi = *lit;
            if (!std::isfinite(*lit)) {
                report(ErrorClass::RangeError, line, fmt::format("{} is not finite", what));
                return;
            }
        } else {
            const auto& name = std::get<std::string>(arg);
            const ScalarDecl* decl = spec.find_scalar(name);
            if (decl == nullptr) {
                if (is_point(name))
                    report(ErrorClass::UnknownIdentifier, line, fmt::format("'{}' is a point, expected a scalar", name));
                else
                    report(ErrorClass::UnknownIdentifier, line, fmt::format("unknown scalar '{}'", name));
                return;
            }
            if (const auto* v = std::get_if<double>(&decl->binding)) {
                lo = hi = *v;
            } else {
                lo = std::get<FreeBounds>(decl->binding).lo;
                hi = std::get<FreeBounds>(decl->binding).hi;
            }
        }
        switch (role) {
            case ScalarRole::AngleDegrees:
                if (!(lo > 0.0 && hi < 180.0))
                    report(ErrorClass::RangeError, line,
                           fmt::format("{} must lie strictly between 0 and 180 degrees, got {}", what,
                                       lo == hi ? fmt::format("{}", lo) : fmt::format("[{}, {}]", lo, hi)));
                break;
            case ScalarRole::Distance:
            case ScalarRole::Ratio:
                if (!(lo > 0.0))
                    report(ErrorClass::RangeError, line,
                           fmt::format("{} must be strictly positive, got {}", what, lo));
                break;
            case ScalarRole::None: break;
        }
    };

    for (const auto& c : spec.constraints) {
        const KindInfo& info = kind_info(c.kind);
        if (static_cast<int>(c.point_args.size()) != info.point_arity ||
            static_cast<int>(c.scalar_args.size()) != info.scalar_arity) {
            report(ErrorClass::ArityMismatch, c.source_line,
                   fmt::format("{} expects {} point and {} scalar arguments, got {} and {}", info.name,
                               info.point_arity, info.scalar_arity, c.point_args.size(), c.scalar_args.size()));
            continue;
        }
        bool points_ok = true;
        for (const auto& p : c.point_args) points_ok = check_point(p, c.source_line) && points_ok;
        for (const auto& s : c.scalar_args)
            check_scalar_arg(s, info.scalar_role, c.source_line, fmt::format("{} value", info.name));
        if (!points_ok) continue;
        for (const auto& group : detail::distinct_groups(c.kind)) {
            std::vector<std::string> picked;
            for (int slot : group) picked.push_back(c.point_args[static_cast<std::size_t>(slot)]);
            if (!detail::all_distinct(picked)) {
                report(ErrorClass::RangeError, c.source_line,
                       fmt::format("degenerate arguments to {}: points {} must be distinct", info.name,
                                   fmt::join(picked, ", ")));
                break;
            }
        }
    }

    for (const auto& d : spec.draws) {
        std::size_t expected = 0;
        switch (d.kind) {
            case DrawKind::Segment: expected = 2; break;
            case DrawKind::Circle: expected = 1; break;
            case DrawKind::Circle3:
            case DrawKind::Arc: expected = 3; break;
            case DrawKind::Polygon: expected = 0; break;
        }
        if (d.kind == DrawKind::Polygon ? d.points.size() < 3 : d.points.size() != expected) {
            report(ErrorClass::ArityMismatch, d.source_line,
                   d.kind == DrawKind::Polygon
                       ? fmt::format("polygon needs at least 3 points, got {}", d.points.size())
                       : fmt::format("{} expects {} points, got {}", draw_kind_name(d.kind), expected, d.points.size()));
            continue;
        }
        bool ok = true;
        for (const auto& p : d.points) ok = check_point(p, d.source_line) && ok;
        if (d.kind == DrawKind::Circle) {
            if (!d.radius)
                report(ErrorClass::ArityMismatch, d.source_line, "circle expects a center point and a radius");
            else
                check_scalar_arg(*d.radius, ScalarRole::Distance, d.source_line, "circle radius");
        }
        if (ok && !detail::all_distinct(d.points))
            report(ErrorClass::RangeError, d.source_line,
                   fmt::format("{} points must be distinct", draw_kind_name(d.kind)));
    }

    std::set<std::string> labelled;
    for (const auto& l : spec.labels) {
        if (!check_point(l.point, l.source_line)) continue;
        if (!labelled.insert(l.point).second)
            report(ErrorClass::DuplicateDecl, l.source_line, fmt::format("point '{}' already has a label", l.point));
    }
    return errors;
}

}  // namespace magicgeo::lang
