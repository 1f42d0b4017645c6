#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "magicgeo/geom/kernel.hpp"
#include "magicgeo/geom/residual.hpp"
#include "magicgeo/geom/vec2.hpp"
#include "magicgeo/lang/types.hpp"

namespace magicgeo::tikz {

using geom::Vec2;

enum class Anchor { N, NE, E, SE, S, SW, W, NW };

inline constexpr std::array<Anchor, 8> kCompassOrder = {Anchor::N, Anchor::NE, Anchor::E, Anchor::SE,
                                                        Anchor::S, Anchor::SW, Anchor::W, Anchor::NW};

inline std::string_view anchor_name(Anchor a) {
    switch (a) {
        case Anchor::N: return "N";
        case Anchor::NE: return "NE";
        case Anchor::E: return "E";
        case Anchor::SE: return "SE";
        case Anchor::S: return "S";
        case Anchor::SW: return "SW";
        case Anchor::W: return "W";
        case Anchor::NW: return "NW";
    }
    return "N";
}

inline double anchor_angle(Anchor a) {
    switch (a) {
        case Anchor::N: return 90.0;
        case Anchor::NE: return 45.0;
        case Anchor::E: return 0.0;
        case Anchor::SE: return -45.0;
        case Anchor::S: return -90.0;
        case Anchor::SW: return -135.0;
        case Anchor::W: return 180.0;
        case Anchor::NW: return 135.0;
    }
    return 90.0;
}

struct Segment {
    Vec2 a, b;
};
struct Polyline {
    std::vector<Vec2> points;
    bool closed = false;
};
struct Circle {
    Vec2 center;
    double radius = 0.0;
};
/// Counterclockwise from start_deg to end_deg (end_deg > start_deg).
struct Arc {
    Vec2 center;
    double radius = 0.0;
    double start_deg = 0.0;
    double end_deg = 0.0;
};
struct AngleMark {
    Vec2 vertex, ray1, ray2;
    std::string text;
};
struct RightAngleMark {
    Vec2 vertex, ray1, ray2;
};
struct Dot {
    Vec2 point;
    std::string name;
};
struct Label {
    Vec2 point;
    std::string text;
    Anchor anchor = Anchor::N;
    std::string name;
};

using Drawable = std::variant<Segment, Polyline, Circle, Arc, AngleMark, RightAngleMark, Dot, Label>;

struct DiagramIR {
    std::vector<Drawable> drawables;
    double viewport = 6.0;  // drawables fit in [0, viewport]^2
};

struct EmitConfig {
    double target_size = 6.0;
    int decimal_places = 4;
    bool auto_right_angle = true;
    double dot_radius = 0.05;
    double line_width = 0.8;  // pt

    void check() const {
        if (!(target_size > 0.0) || !std::isfinite(target_size)) throw std::invalid_argument("target_size must be > 0");
        if (decimal_places < 2 || decimal_places > 8) throw std::invalid_argument("decimal_places must be in [2, 8]");
        if (!(dot_radius > 0.0) || !(line_width > 0.0)) throw std::invalid_argument("dot_radius and line_width must be > 0");
    }
};

class NotSolved : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Compass direction farthest (max-min angular distance) from every incident
/// direction; ties go to the earlier entry of N, NE, E, SE, S, SW, W, NW.
inline Anchor label_placement(const std::vector<Vec2>& incident) {
    Anchor best = Anchor::N;
    double best_gap = -1.0;
    for (Anchor a : kCompassOrder) {
        double gap = 360.0;
        for (const Vec2& d : incident) {
            const double ang = std::atan2(d.y, d.x) * 180.0 / std::numbers::pi;
            double diff = std::fmod(std::abs(ang - anchor_angle(a)), 360.0);
            if (diff > 180.0) diff = 360.0 - diff;
            gap = std::min(gap, diff);
        }
        // A small margin keeps the tie-break stable against rounding in atan2.
        if (gap > best_gap + 1e-9) {
            best_gap = gap;
            best = a;
        }
    }
    return best;
}

namespace detail {

inline std::string degree_text(double deg) {
    std::string s = fmt::format("{:.2f}", deg);
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    if (s == "-0") s = "0";
    return s + "°";
}

inline double scalar_value(const geom::Assignment& a, const lang::ScalarArg& arg) {
    if (const auto* lit = std::get_if<double>(&arg)) return *lit;
    return a.scalars.at(std::get<std::string>(arg));
}

inline double angle_deg_of(Vec2 v) { return std::atan2(v.y, v.x) * 180.0 / std::numbers::pi; }

struct Box {
    double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
    double x1 = -x0, y1 = -x0;
    void add(Vec2 p) {
        x0 = std::min(x0, p.x);
        y0 = std::min(y0, p.y);
        x1 = std::max(x1, p.x);
        y1 = std::max(y1, p.y);
    }
    void add_disk(Vec2 c, double r) {
        add({c.x - r, c.y - r});
        add({c.x + r, c.y + r});
    }
};

struct Similarity {
    double scale = 1.0;
    Vec2 shift;
    Vec2 operator()(Vec2 p) const { return p * scale + shift; }
};

inline Box bounds(const std::vector<Drawable>& ds) {
    Box box;
    for (const auto& d : ds) {
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Segment>) {
                    box.add(v.a);
                    box.add(v.b);
                } else if constexpr (std::is_same_v<T, Polyline>) {
                    for (const auto& p : v.points) box.add(p);
                } else if constexpr (std::is_same_v<T, Circle> || std::is_same_v<T, Arc>) {
                    box.add_disk(v.center, v.radius);
                } else if constexpr (std::is_same_v<T, AngleMark> || std::is_same_v<T, RightAngleMark>) {
                    box.add(v.vertex);
                    box.add(v.ray1);
                    box.add(v.ray2);
                } else {
                    box.add(v.point);
                }
            },
            d);
    }
    return box;
}

inline void apply(std::vector<Drawable>& ds, const Similarity& t) {
    for (auto& d : ds) {
        std::visit(
            [&](auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Segment>) {
                    v.a = t(v.a);
                    v.b = t(v.b);
                } else if constexpr (std::is_same_v<T, Polyline>) {
                    for (auto& p : v.points) p = t(p);
                } else if constexpr (std::is_same_v<T, Circle> || std::is_same_v<T, Arc>) {
                    v.center = t(v.center);
                    v.radius *= t.scale;
                } else if constexpr (std::is_same_v<T, AngleMark> || std::is_same_v<T, RightAngleMark>) {
                    v.vertex = t(v.vertex);
                    v.ray1 = t(v.ray1);
                    v.ray2 = t(v.ray2);
                } else {
                    v.point = t(v.point);
                }
            },
            d);
    }
}

}  // namespace detail

/// Largest residual of `a` against the spec's expanded constraints.
/// Throws NotSolved when a point or free scalar has no value.
inline double max_violation(const lang::GeoSpec& spec, const geom::Assignment& a) {
    for (const auto& p : spec.points)
        if (!a.points.count(p.name)) throw NotSolved("assignment has no coordinates for point '" + p.name + "'");
    for (const auto& s : spec.scalars)
        if (s.is_free() && !a.scalars.count(s.name)) throw NotSolved("assignment has no value for scalar '" + s.name + "'");
    try {
        return geom::residuals(spec, a).max_abs();
    } catch (const geom::DegenerateEvaluation&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw NotSolved(e.what());
    }
}

/// Render-ready drawables for a solved assignment: draw directives in order,
/// then angle and right-angle marks, then one Dot and one Label per point.
/// Everything is mapped by one similarity into [0, target_size]^2, centered.
/// Throws NotSolved when some constraint is violated by more than `tolerance`.
inline DiagramIR build_ir(const lang::GeoSpec& spec, const geom::Assignment& a, const EmitConfig& cfg,
                          double tolerance = 1e-6) {
    cfg.check();
    const double worst = max_violation(spec, a);
    if (!(worst <= tolerance))
        throw NotSolved(fmt::format("assignment violates the spec (max residual {:.3g})", worst));
    const auto P = [&](const std::string& name) { return a.points.at(name); };
    using lang::DrawKind;

    DiagramIR ir;
    ir.viewport = cfg.target_size;
    std::map<std::string, std::vector<Vec2>> incident;
    const auto touch = [&](const std::string& name, Vec2 dir) {
        const double n = geom::norm(dir);
        if (n > geom::kDegenerateLength) incident[name].push_back(dir / n);
    };
    struct DrawnCircle {
        Vec2 center;
        double radius;
    };
    std::vector<DrawnCircle> circles;

    for (const auto& d : spec.draws) {
        switch (d.kind) {
            case DrawKind::Segment: {
                ir.drawables.push_back(Segment{P(d.points[0]), P(d.points[1])});
                touch(d.points[0], P(d.points[1]) - P(d.points[0]));
                touch(d.points[1], P(d.points[0]) - P(d.points[1]));
                break;
            }
            case DrawKind::Polygon: {
                Polyline pl{{}, true};
                const std::size_t n = d.points.size();
                for (std::size_t i = 0; i < n; ++i) {
                    pl.points.push_back(P(d.points[i]));
                    touch(d.points[i], P(d.points[(i + 1) % n]) - P(d.points[i]));
                    touch(d.points[i], P(d.points[(i + n - 1) % n]) - P(d.points[i]));
                }
                ir.drawables.push_back(std::move(pl));
                break;
            }
            case DrawKind::Circle: {
                const double r = detail::scalar_value(a, *d.radius);
                ir.drawables.push_back(Circle{P(d.points[0]), r});
                circles.push_back({P(d.points[0]), r});
                break;
            }
            case DrawKind::Circle3: {
                Vec2 center;
                try {
                    center = geom::detail::circumcenter(P(d.points[0]), P(d.points[1]), P(d.points[2])).center;
                } catch (const geom::DegenerateSlots&) {
                    throw geom::DegenerateEvaluation("circle3", {d.points[0], d.points[1], d.points[2]}, d.source_line,
                                                     "points are collinear");
                }
                const double r = geom::distance(center, P(d.points[0]));
                ir.drawables.push_back(Circle{center, r});
                circles.push_back({center, r});
                break;
            }
            case DrawKind::Arc: {
                const Vec2 o = P(d.points[0]);
                const Vec2 from = P(d.points[1]) - o;
                const Vec2 to = P(d.points[2]) - o;
                const double start = detail::angle_deg_of(from);
                double end = detail::angle_deg_of(to);
                while (end <= start) end += 360.0;
                ir.drawables.push_back(Arc{o, geom::norm(from), start, end});
                touch(d.points[1], geom::Vec2{-from.y, from.x});
                touch(d.points[1], geom::Vec2{from.y, -from.x});
                touch(d.points[1], o - P(d.points[1]));
                break;
            }
        }
    }

    for (const auto& c : spec.constraints) {
        if (c.kind == lang::ConstraintKind::Perpendicular && cfg.auto_right_angle) {
            const auto& q = c.point_args;
            std::string vertex, r1, r2;
            for (int i = 0; i < 2 && vertex.empty(); ++i)
                for (int j = 2; j < 4 && vertex.empty(); ++j)
                    if (q[i] == q[j]) {
                        vertex = q[i];
                        r1 = q[1 - i];
                        r2 = q[5 - j];
                    }
            if (vertex.empty() || r1 == r2) continue;
            ir.drawables.push_back(RightAngleMark{P(vertex), P(r1), P(r2)});
        } else if (c.kind == lang::ConstraintKind::AngleDeg) {
            const auto& q = c.point_args;
            const double deg = detail::scalar_value(a, c.scalar_args[0]);
            ir.drawables.push_back(AngleMark{P(q[1]), P(q[0]), P(q[2]), detail::degree_text(deg)});
        }
    }

    // Points lying on a drawn circle keep their label outside it.
    for (const auto& p : spec.points) {
        for (const auto& c : circles) {
            const Vec2 radial = P(p.name) - c.center;
            const double dist = geom::norm(radial);
            if (dist > geom::kDegenerateLength && std::abs(dist - c.radius) <= 1e-6 * std::max(1.0, c.radius)) {
                touch(p.name, c.center - P(p.name));
                touch(p.name, Vec2{-radial.y, radial.x});
                touch(p.name, Vec2{radial.y, -radial.x});
            }
        }
    }

    for (const auto& p : spec.points) ir.drawables.push_back(Dot{P(p.name), p.name});
    for (const auto& p : spec.points) {
        std::string text = p.name;
        for (const auto& l : spec.labels)
            if (l.point == p.name) text = l.text;
        ir.drawables.push_back(Label{P(p.name), std::move(text), label_placement(incident[p.name]), p.name});
    }

    const detail::Box box = detail::bounds(ir.drawables);
    if (std::isfinite(box.x0)) {
        const double extent = std::max(box.x1 - box.x0, box.y1 - box.y0);
        detail::Similarity t;
        t.scale = extent > 0.0 ? cfg.target_size / extent : 1.0;
        const Vec2 mid{0.5 * (box.x0 + box.x1), 0.5 * (box.y0 + box.y1)};
        t.shift = Vec2{0.5 * cfg.target_size, 0.5 * cfg.target_size} - mid * t.scale;
        detail::apply(ir.drawables, t);
    }
    return ir;
}

}  // namespace magicgeo::tikz
