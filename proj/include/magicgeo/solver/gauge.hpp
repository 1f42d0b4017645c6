#pragma once

#include <algorithm>

#include "magicgeo/lang/types.hpp"

namespace magicgeo::solver {

inline constexpr lang::Pin kGaugeAnchor{3.0, 3.0};

/// Removes the rigid-motion null space. When no point is pinned, the first
/// point is pinned at (3, 3); when additionally no horizontal or vertical
/// constraint fixes the orientation, horizontal(first, second) is appended
/// with source line 0. A user-pinned spec is returned unchanged.
inline lang::GeoSpec gauge_fix(const lang::GeoSpec& spec) {
    lang::GeoSpec out = spec;
    if (out.points.empty()) return out;
    const bool any_pinned = std::any_of(out.points.begin(), out.points.end(), [](const auto& p) { return p.pin.has_value(); });
    if (any_pinned) return out;
    out.points.front().pin = kGaugeAnchor;
    const bool orientation_fixed = std::any_of(out.constraints.begin(), out.constraints.end(), [](const auto& c) {
        return c.kind == lang::ConstraintKind::Horizontal || c.kind == lang::ConstraintKind::Vertical;
    });
    if (!orientation_fixed && out.points.size() >= 2) {
        lang::Constraint h;
        h.kind = lang::ConstraintKind::Horizontal;
        h.point_args = {out.points[0].name, out.points[1].name};
        h.source_line = 0;
        out.constraints.push_back(std::move(h));
    }
    return out;
}

}  // namespace magicgeo::solver
