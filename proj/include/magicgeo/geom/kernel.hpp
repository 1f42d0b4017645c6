#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "magicgeo/geom/vec2.hpp"
#include "magicgeo/lang/types.hpp"

namespace magicgeo::geom {

using lang::ConstraintKind;

/// Raised when a residual or its gradient is undefined at the given
/// configuration (coincident points, zero-length directions, collinear
/// circumcenter triples).
class DegenerateEvaluation : public std::runtime_error {
  public:
    DegenerateEvaluation(std::string constraint, std::vector<std::string> points, int line, const std::string& why)
        : std::runtime_error(fmt::format("degenerate evaluation of {} at line {} ({}): {}", constraint, line,
                                         fmt::join(points, ", "), why)),
          constraint_(std::move(constraint)),
          points_(std::move(points)),
          line_(line) {}

    const std::string& constraint() const { return constraint_; }
    const std::vector<std::string>& points() const { return points_; }
    int line() const { return line_; }

  private:
    std::string constraint_;
    std::vector<std::string> points_;
    int line_;
};

/// Kernel-level failure naming argument slots; callers with names rethrow it
/// as DegenerateEvaluation.
struct DegenerateSlots {
    std::vector<int> slots;
    std::string why;
};

inline constexpr std::size_t kMaxPointArgs = 6;
inline constexpr double kDegenerateLength = 1e-12;

/// Value of one residual row and its partials with respect to each point
/// argument slot and the (single) scalar argument.
struct RowEval {
    double value = 0.0;
    std::array<Vec2, kMaxPointArgs> d_point{};
    double d_scalar = 0.0;
};

/// Number of residual rows a kind contributes after expansion.
inline int row_count(ConstraintKind kind) {
    switch (kind) {
        case ConstraintKind::Between:
        case ConstraintKind::Midpoint: return 2;
        case ConstraintKind::Inscribed: return 3;
        default: return 1;
    }
}

namespace detail {

inline double checked_norm(Vec2 v, std::vector<int> slots, const char* why) {
    const double n = norm(v);
    if (!(n > kDegenerateLength)) throw DegenerateSlots{std::move(slots), why};
    return n;
}

struct AngleEval {
    double angle = 0.0;
    Vec2 d_a, d_b, d_c;
};

// Unsigned angle ABC in [0, pi] via atan2(|u x v|, u . v), u = A - B, v = C - B.
inline AngleEval angle_at(Vec2 a, Vec2 b, Vec2 c, int slot_a, int slot_b, int slot_c) {
    const Vec2 u = a - b;
    const Vec2 v = c - b;
    checked_norm(u, {slot_a, slot_b}, "ray endpoint coincides with the vertex");
    checked_norm(v, {slot_c, slot_b}, "ray endpoint coincides with the vertex");
    const double cr = cross(u, v);
    const double dt = dot(u, v);
    const double abs_cr = std::abs(cr);
    const double sign = cr >= 0.0 ? 1.0 : -1.0;
    const double denom = norm2(u) * norm2(v);
    AngleEval out;
    out.angle = std::atan2(abs_cr, dt);
    out.d_a = (dt * sign * cross_grad_lhs(v) - abs_cr * v) / denom;
    out.d_c = (dt * sign * cross_grad_rhs(u) - abs_cr * u) / denom;
    out.d_b = -(out.d_a + out.d_c);
    return out;
}

// ((B - A) x (C - A)) / |B - A|: signed distance of C from line AB.
inline RowEval collinear_row(Vec2 a, Vec2 b, Vec2 c, int slot_a, int slot_b) {
    const Vec2 u = b - a;
    const Vec2 w = c - a;
    const double nu = checked_norm(u, {slot_a, slot_b}, "line through coincident points");
    RowEval r;
    r.value = cross(u, w) / nu;
    const Vec2 d_u = cross_grad_lhs(w) / nu - r.value * u / (nu * nu);
    const Vec2 d_w = cross_grad_rhs(u) / nu;
    r.d_point[0] = -(d_u + d_w);
    r.d_point[1] = d_u;
    r.d_point[2] = d_w;
    return r;
}

struct Circumcenter {
    Vec2 center;
    // Jacobians d(center)/d(A|B|C), stored as rows: {d cx/d p, d cy/d p}.
    std::array<Vec2, 2> d_a, d_b, d_c;
};

inline Circumcenter circumcenter(Vec2 a, Vec2 b_pt, Vec2 c_pt) {
    const Vec2 b = b_pt - a;
    const Vec2 c = c_pt - a;
    const double nb = norm2(b);
    const double nc = norm2(c);
    const double det = cross(b, c);
    if (!(std::abs(det) > 1e-10 * std::sqrt(nb * nc)) || nb == 0.0 || nc == 0.0)
        throw DegenerateSlots{{0, 1, 2}, "circumcenter of a collinear triple"};
    const double ux = (c.y * nb - b.y * nc) / (2.0 * det);
    const double uy = (b.x * nc - c.x * nb) / (2.0 * det);
    // Partials of the numerators and of det with respect to (bx, by, cx, cy).
    const std::array<double, 4> dnum_x{2.0 * c.y * b.x, 2.0 * c.y * b.y - nc, -2.0 * b.y * c.x, nb - 2.0 * b.y * c.y};
    const std::array<double, 4> dnum_y{nc - 2.0 * c.x * b.x, -2.0 * c.x * b.y, 2.0 * b.x * c.x - nb, 2.0 * b.x * c.y};
    const std::array<double, 4> ddet{c.y, -c.x, -b.y, b.x};
    std::array<double, 4> dux{}, duy{};
    for (int k = 0; k < 4; ++k) {
        dux[k] = (dnum_x[k] - 2.0 * ux * ddet[k]) / (2.0 * det);
        duy[k] = (dnum_y[k] - 2.0 * uy * ddet[k]) / (2.0 * det);
    }
    Circumcenter out;
    out.center = a + Vec2{ux, uy};
    out.d_b = {Vec2{dux[0], dux[1]}, Vec2{duy[0], duy[1]}};
    out.d_c = {Vec2{dux[2], dux[3]}, Vec2{duy[2], duy[3]}};
    out.d_a = {Vec2{1.0 - dux[0] - dux[2], -dux[1] - dux[3]}, Vec2{-duy[0] - duy[2], 1.0 - duy[1] - duy[3]}};
    return out;
}

// Transposed Jacobian-vector product: g^T J where J rows are {d cx, d cy}.
inline Vec2 jt_times(const std::array<Vec2, 2>& jac, Vec2 g) { return g.x * jac[0] + g.y * jac[1]; }

}  // namespace detail

/// Evaluates residual row `part` of a primitive constraint kind. Points and
/// scalars are given in argument-slot order; angle scalars are in degrees.
/// Throws DegenerateSlots when the residual is undefined.
inline RowEval evaluate_row(ConstraintKind kind, int part, std::span<const Vec2> p, std::span<const double> s) {
    using detail::checked_norm;
    RowEval r;
    switch (kind) {
        case ConstraintKind::OnCircle: {
            const Vec2 d = p[0] - p[1];
            const double n = checked_norm(d, {0, 1}, "point coincides with the center");
            r.value = n - s[0];
            r.d_point[0] = d / n;
            r.d_point[1] = -d / n;
            r.d_scalar = -1.0;
            return r;
        }
        case ConstraintKind::Length: {
            const Vec2 d = p[1] - p[0];
            const double n = checked_norm(d, {0, 1}, "coincident segment endpoints");
            r.value = n - s[0];
            r.d_point[0] = -d / n;
            r.d_point[1] = d / n;
            r.d_scalar = -1.0;
            return r;
        }
        case ConstraintKind::EqualLength:
        case ConstraintKind::RatioLength: {
            const double k = kind == ConstraintKind::RatioLength ? s[0] : 1.0;
            const Vec2 u = p[1] - p[0];
            const Vec2 v = p[3] - p[2];
            const double nu = checked_norm(u, {0, 1}, "coincident segment endpoints");
            const double nv = checked_norm(v, {2, 3}, "coincident segment endpoints");
            r.value = nu - k * nv;
            r.d_point[0] = -u / nu;
            r.d_point[1] = u / nu;
            r.d_point[2] = k * v / nv;
            r.d_point[3] = -k * v / nv;
            if (kind == ConstraintKind::RatioLength) r.d_scalar = -nv;
            return r;
        }
        case ConstraintKind::Parallel:
        case ConstraintKind::Perpendicular: {
            const Vec2 u = p[1] - p[0];
            const Vec2 v = p[3] - p[2];
            const double nu = checked_norm(u, {0, 1}, "zero-length direction");
            const double nv = checked_norm(v, {2, 3}, "zero-length direction");
            const double n = nu * nv;
            Vec2 d_u, d_v;
            if (kind == ConstraintKind::Parallel) {
                r.value = cross(u, v) / n;
                d_u = cross_grad_lhs(v) / n - r.value * u / (nu * nu);
                d_v = cross_grad_rhs(u) / n - r.value * v / (nv * nv);
            } else {
                r.value = dot(u, v) / n;
                d_u = v / n - r.value * u / (nu * nu);
                d_v = u / n - r.value * v / (nv * nv);
            }
            r.d_point[0] = -d_u;
            r.d_point[1] = d_u;
            r.d_point[2] = -d_v;
            r.d_point[3] = d_v;
            return r;
        }
        case ConstraintKind::AngleDeg: {
            const auto a = detail::angle_at(p[0], p[1], p[2], 0, 1, 2);
            r.value = a.angle - s[0] * std::numbers::pi / 180.0;
            r.d_point[0] = a.d_a;
            r.d_point[1] = a.d_b;
            r.d_point[2] = a.d_c;
            r.d_scalar = -std::numbers::pi / 180.0;
            return r;
        }
        case ConstraintKind::AngleEq: {
            const auto a = detail::angle_at(p[0], p[1], p[2], 0, 1, 2);
            const auto b = detail::angle_at(p[3], p[4], p[5], 3, 4, 5);
            r.value = a.angle - b.angle;
            r.d_point[0] = a.d_a;
            r.d_point[1] = a.d_b;
            r.d_point[2] = a.d_c;
            r.d_point[3] = -b.d_a;
            r.d_point[4] = -b.d_b;
            r.d_point[5] = -b.d_c;
            return r;
        }
        case ConstraintKind::Collinear: return detail::collinear_row(p[0], p[1], p[2], 0, 1);
        case ConstraintKind::Between: {
            if (part == 0) return detail::collinear_row(p[0], p[1], p[2], 0, 1);
            // B must not overshoot: max(0, -(B - A).(C - B)).
            const Vec2 ab = p[1] - p[0];
            const Vec2 bc = p[2] - p[1];
            const double g = -dot(ab, bc);
            if (g > 0.0) {
                r.value = g;
                r.d_point[0] = bc;
                r.d_point[1] = ab - bc;
                r.d_point[2] = -ab;
            }
            return r;
        }
        case ConstraintKind::Midpoint: {
            const Vec2 unit = part == 0 ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
            const Vec2 mid = 0.5 * (p[1] + p[2]);
            r.value = part == 0 ? p[0].x - mid.x : p[0].y - mid.y;
            r.d_point[0] = unit;
            r.d_point[1] = -0.5 * unit;
            r.d_point[2] = -0.5 * unit;
            return r;
        }
        case ConstraintKind::OnLine: {
            // on_line(P, A, B) is collinear(A, B, P).
            const RowEval c = detail::collinear_row(p[1], p[2], p[0], 1, 2);
            r.value = c.value;
            r.d_point[0] = c.d_point[2];
            r.d_point[1] = c.d_point[0];
            r.d_point[2] = c.d_point[1];
            return r;
        }
        case ConstraintKind::Concyclic: {
            const auto cc = detail::circumcenter(p[0], p[1], p[2]);
            const Vec2 e = p[3] - cc.center;
            const Vec2 f = p[0] - cc.center;
            const double ne = checked_norm(e, {3}, "point coincides with the circumcenter");
            const double nf = checked_norm(f, {0}, "point coincides with the circumcenter");
            const Vec2 e_hat = e / ne;
            const Vec2 f_hat = f / nf;
            r.value = ne - nf;
            const Vec2 d_center = f_hat - e_hat;
            r.d_point[0] = -f_hat + detail::jt_times(cc.d_a, d_center);
            r.d_point[1] = detail::jt_times(cc.d_b, d_center);
            r.d_point[2] = detail::jt_times(cc.d_c, d_center);
            r.d_point[3] = e_hat;
            return r;
        }
        case ConstraintKind::Tangent: {
            // Distance from the center O to line AB equals r.
            const RowEval c = detail::collinear_row(p[0], p[1], p[2], 0, 1);
            const double sign = c.value >= 0.0 ? 1.0 : -1.0;
            r.value = std::abs(c.value) - s[0];
            for (int k = 0; k < 3; ++k) r.d_point[k] = sign * c.d_point[k];
            r.d_scalar = -1.0;
            return r;
        }
        case ConstraintKind::Horizontal:
        case ConstraintKind::Vertical: {
            const bool h = kind == ConstraintKind::Horizontal;
            r.value = h ? p[1].y - p[0].y : p[1].x - p[0].x;
            const Vec2 unit = h ? Vec2{0.0, 1.0} : Vec2{1.0, 0.0};
            r.d_point[0] = -unit;
            r.d_point[1] = unit;
            return r;
        }
        case ConstraintKind::Inscribed: break;
    }
    throw std::invalid_argument(fmt::format("{} has no residual row of its own; expand it first", lang::kind_name(kind)));
}

}  // namespace magicgeo::geom
