#pragma once

// Second opinion on solver output. Every relation is re-derived here from
// elementary geometry (acos angles, shoelace areas, Cramer circumcenters) and
// shares no code with the kernel's residual functions.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <variant>

#include "magicgeo/geom/residual.hpp"
#include "magicgeo/lang/types.hpp"

namespace magicgeo::testkit {

struct P2 {
    double x, y;
};

inline double len(P2 a, P2 b) { return std::hypot(b.x - a.x, b.y - a.y); }

// Twice the signed area of triangle abc.
inline double area2(P2 a, P2 b, P2 c) { return (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y); }

inline double dist_to_line(P2 p, P2 a, P2 b) { return std::abs(area2(a, b, p)) / len(a, b); }

// Interior angle at b, radians, via acos of the normalized dot product.
inline double angle(P2 a, P2 b, P2 c) {
    const double ux = a.x - b.x, uy = a.y - b.y, vx = c.x - b.x, vy = c.y - b.y;
    const double cosv = (ux * vx + uy * vy) / (std::hypot(ux, uy) * std::hypot(vx, vy));
    return std::acos(std::clamp(cosv, -1.0, 1.0));
}

// Angle p-v-q of an assignment in degrees.
inline double angle_deg(const geom::Assignment& a, const std::string& p, const std::string& v, const std::string& q) {
    const auto P = [&](const std::string& n) { return P2{a.points.at(n).x, a.points.at(n).y}; };
    return angle(P(p), P(v), P(q)) * 180.0 / std::numbers::pi;
}

// Angle between the lines ab and cd, radians in [0, pi/2].
inline double line_angle(P2 a, P2 b, P2 c, P2 d) {
    const double t = std::atan2(b.y - a.y, b.x - a.x) - std::atan2(d.y - c.y, d.x - c.x);
    double m = std::fmod(std::abs(t), std::numbers::pi);
    return std::min(m, std::numbers::pi - m);
}

// Circumcenter by solving the two perpendicular-bisector equations.
inline P2 circumcenter(P2 a, P2 b, P2 c) {
    const double a1 = 2 * (b.x - a.x), b1 = 2 * (b.y - a.y);
    const double c1 = b.x * b.x - a.x * a.x + b.y * b.y - a.y * a.y;
    const double a2 = 2 * (c.x - a.x), b2 = 2 * (c.y - a.y);
    const double c2 = c.x * c.x - a.x * a.x + c.y * c.y - a.y * a.y;
    const double det = a1 * b2 - a2 * b1;
    return {(c1 * b2 - c2 * b1) / det, (a1 * c2 - a2 * c1) / det};
}

/// How far `c` is from holding under `a`: a length for metric relations, an
/// angle in radians for angular ones. Zero means the relation holds exactly.
inline double violation(const lang::GeoSpec& spec, const lang::Constraint& c, const geom::Assignment& a) {
    using K = lang::ConstraintKind;
    const auto P = [&](std::size_t i) {
        const auto v = a.points.at(c.point_args.at(i));
        return P2{v.x, v.y};
    };
    const auto S = [&](std::size_t i) {
        const auto& arg = c.scalar_args.at(i);
        if (const auto* lit = std::get_if<double>(&arg)) return *lit;
        const auto& name = std::get<std::string>(arg);
        if (auto it = a.scalars.find(name); it != a.scalars.end()) return it->second;
        return std::get<double>(spec.find_scalar(name)->binding);
    };
    switch (c.kind) {
        case K::OnCircle: return std::abs(len(P(0), P(1)) - S(0));
        case K::Length: return std::abs(len(P(0), P(1)) - S(0));
        case K::EqualLength: return std::abs(len(P(0), P(1)) - len(P(2), P(3)));
        case K::RatioLength: return std::abs(len(P(0), P(1)) - S(0) * len(P(2), P(3)));
        case K::Parallel: return line_angle(P(0), P(1), P(2), P(3));
        case K::Perpendicular: return std::abs(std::numbers::pi / 2 - line_angle(P(0), P(1), P(2), P(3)));
        case K::AngleDeg: return std::abs(angle(P(0), P(1), P(2)) - S(0) * std::numbers::pi / 180.0);
        case K::AngleEq: return std::abs(angle(P(0), P(1), P(2)) - angle(P(3), P(4), P(5)));
        case K::Collinear: return dist_to_line(P(2), P(0), P(1));
        case K::OnLine: return dist_to_line(P(0), P(1), P(2));
        case K::Between: {
            const P2 a0 = P(0), b = P(1), c0 = P(2);
            const double l2 = (c0.x - a0.x) * (c0.x - a0.x) + (c0.y - a0.y) * (c0.y - a0.y);
            const double t = ((b.x - a0.x) * (c0.x - a0.x) + (b.y - a0.y) * (c0.y - a0.y)) / l2;
            const double outside = std::max({0.0, -t, t - 1.0}) * std::sqrt(l2);
            return std::max(dist_to_line(b, a0, c0), outside);
        }
        case K::Midpoint: {
            const P2 m = P(0), p = P(1), q = P(2);
            return std::max(std::abs(m.x - 0.5 * (p.x + q.x)), std::abs(m.y - 0.5 * (p.y + q.y)));
        }
        case K::Concyclic: {
            const P2 o = circumcenter(P(0), P(1), P(2));
            return std::abs(len(o, P(3)) - len(o, P(0)));
        }
        case K::Tangent: return std::abs(dist_to_line(P(2), P(0), P(1)) - S(0));
        case K::Horizontal: return std::abs(P(1).y - P(0).y);
        case K::Vertical: return std::abs(P(1).x - P(0).x);
        case K::Inscribed: {
            double worst = 0.0;
            for (std::size_t i = 0; i < 3; ++i) worst = std::max(worst, std::abs(len(P(i), P(3)) - S(0)));
            return worst;
        }
    }
    return INFINITY;
}

inline double max_violation(const lang::GeoSpec& spec, const geom::Assignment& a) {
    double worst = 0.0;
    for (const auto& c : spec.constraints) worst = std::max(worst, violation(spec, c, a));
    return worst;
}

inline double min_separation(const lang::GeoSpec& spec, const geom::Assignment& a) {
    double best = INFINITY;
    for (std::size_t i = 0; i < spec.points.size(); ++i)
        for (std::size_t j = i + 1; j < spec.points.size(); ++j) {
            const auto p = a.points.at(spec.points[i].name), q = a.points.at(spec.points[j].name);
            best = std::min(best, std::hypot(p.x - q.x, p.y - q.y));
        }
    return best;
}

}  // namespace magicgeo::testkit
