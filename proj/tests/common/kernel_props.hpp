#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "magicgeo/geom/residual.hpp"
#include "magicgeo/lang/types.hpp"
#include "test_data.hpp"

namespace magicgeo::testkit {

/// A single constraint over points P0..P5 with a free scalar `s` when the kind
/// takes one, plus a random assignment.
struct KernelCase {
    lang::GeoSpec spec;
    lang::Constraint constraint;
    geom::Assignment assignment;
};

inline std::vector<lang::ConstraintKind> primitive_kinds() {
    std::vector<lang::ConstraintKind> out;
    for (const auto& info : lang::kKindCatalog)
        if (!info.sugar) out.push_back(info.kind);
    return out;
}

// Far from every kink and singularity of the residuals: points well apart, no
// nearly collinear triple, no right angle at any between-style middle point.
inline bool well_conditioned(const std::vector<geom::Vec2>& p) {
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < p.size(); ++j) {
            if (i == j) continue;
            if (geom::distance(p[i], p[j]) < 0.5) return false;
            for (std::size_t k = 0; k < p.size(); ++k) {
                if (k == i || k == j) continue;
                const double h = std::abs(geom::cross(p[j] - p[i], p[k] - p[i])) / geom::distance(p[i], p[j]);
                if (h < 0.2) return false;
                if (std::abs(geom::dot(p[j] - p[i], p[k] - p[j])) < 0.05) return false;
            }
        }
    return true;
}

inline KernelCase random_case(lang::ConstraintKind kind, std::mt19937_64& rng) {
    const auto& info = lang::kind_info(kind);
    KernelCase kc;
    std::vector<geom::Vec2> pts;
    do {
        pts.clear();
        for (int i = 0; i < info.point_arity; ++i) pts.push_back({uniform(rng, -5, 5), uniform(rng, -5, 5)});
    } while (!well_conditioned(pts));
    for (int i = 0; i < info.point_arity; ++i) {
        const std::string name = "P" + std::to_string(i);
        kc.spec.points.push_back({name, std::nullopt, 1});
        kc.constraint.point_args.push_back(name);
        kc.assignment.points[name] = pts[static_cast<std::size_t>(i)];
    }
    if (info.scalar_arity == 1) {
        double lo = 0.01, hi = 1000.0, v = 0.0;
        switch (info.scalar_role) {
            case lang::ScalarRole::AngleDegrees:
                lo = 1e-3;
                hi = 180.0 - 1e-3;
                v = uniform(rng, 10, 170);
                break;
            case lang::ScalarRole::Ratio: v = uniform(rng, 0.3, 3.0); break;
            default: v = uniform(rng, 0.5, 5.0); break;
        }
        kc.spec.scalars.push_back({"s", lang::FreeBounds{lo, hi}, 1});
        kc.constraint.scalar_args.emplace_back(std::string("s"));
        kc.assignment.scalars["s"] = v;
    }
    kc.constraint.kind = kind;
    kc.constraint.source_line = 2;
    kc.spec.constraints.push_back(kc.constraint);
    return kc;
}

struct GradientStats {
    int samples = 0;
    int rows = 0;
    double worst_relative = 0.0;
};

/// Compares the analytic gradient of every residual row with a central
/// difference (step h). The error of a row is ||g - fd|| / max(||g||, ||fd||),
/// or the absolute difference when both norms are below 1e-8.
inline GradientStats gradient_check(lang::ConstraintKind kind, int samples, std::uint64_t seed, double h = 1e-6) {
    std::mt19937_64 rng(seed);
    GradientStats st;
    const int parts = geom::row_count(kind);
    for (int s = 0; s < samples; ++s) {
        const KernelCase kc = random_case(kind, rng);
        ++st.samples;
        for (int part = 0; part < parts; ++part) {
            const geom::Gradient g = geom::residual_gradient(kc.spec, kc.constraint, kc.assignment, part);
            double diff2 = 0, g2 = 0, fd2 = 0;
            const auto fd_at = [&](auto&& bump) {
                geom::Assignment plus = kc.assignment, minus = kc.assignment;
                bump(plus, h);
                bump(minus, -h);
                return (geom::residual(kc.spec, kc.constraint, plus, part) -
                        geom::residual(kc.spec, kc.constraint, minus, part)) /
                       (2 * h);
            };
            for (const auto& [name, p] : kc.assignment.points) {
                const double fx = fd_at([&](geom::Assignment& a, double d) { a.points[name].x += d; });
                const double fy = fd_at([&](geom::Assignment& a, double d) { a.points[name].y += d; });
                geom::Vec2 an{};
                if (auto it = g.points.find(name); it != g.points.end()) an = it->second;
                diff2 += (an.x - fx) * (an.x - fx) + (an.y - fy) * (an.y - fy);
                g2 += an.x * an.x + an.y * an.y;
                fd2 += fx * fx + fy * fy;
            }
            for (const auto& [name, v] : kc.assignment.scalars) {
                const double f = fd_at([&](geom::Assignment& a, double d) { a.scalars[name] += d; });
                double an = 0;
                if (auto it = g.scalars.find(name); it != g.scalars.end()) an = it->second;
                diff2 += (an - f) * (an - f);
                g2 += an * an;
                fd2 += f * f;
            }
            const double scale = std::sqrt(std::max(g2, fd2));
            const double err = scale < 1e-8 ? std::sqrt(diff2) : std::sqrt(diff2) / scale;
            st.worst_relative = std::max(st.worst_relative, err);
            ++st.rows;
        }
    }
    return st;
}

inline bool orientation_kind(lang::ConstraintKind k) {
    return k == lang::ConstraintKind::Horizontal || k == lang::ConstraintKind::Vertical;
}

/// Largest change of any residual row under random rotation + translation
/// (translation only for the axis-bound kinds; midpoint compares the length of
/// its row pair).
inline double rigid_motion_drift(lang::ConstraintKind kind, int trials, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    const int parts = geom::row_count(kind);
    for (int t = 0; t < trials; ++t) {
        const KernelCase kc = random_case(kind, rng);
        const double th = orientation_kind(kind) ? 0.0 : uniform(rng, -std::numbers::pi, std::numbers::pi);
        const geom::Vec2 shift{uniform(rng, -10, 10), uniform(rng, -10, 10)};
        geom::Assignment moved = kc.assignment;
        for (auto& [name, p] : moved.points) {
            const geom::Vec2 q = kc.assignment.points.at(name);
            p = {std::cos(th) * q.x - std::sin(th) * q.y + shift.x, std::sin(th) * q.x + std::cos(th) * q.y + shift.y};
        }
        const auto row = [&](const geom::Assignment& a, int part) { return geom::residual(kc.spec, kc.constraint, a, part); };
        if (kind == lang::ConstraintKind::Midpoint) {
            // The two componentwise rows rotate with the figure; their length does not.
            worst = std::max(worst, std::abs(std::hypot(row(kc.assignment, 0), row(kc.assignment, 1)) -
                                             std::hypot(row(moved, 0), row(moved, 1))));
            continue;
        }
        for (int part = 0; part < parts; ++part)
            worst = std::max(worst, std::abs(row(kc.assignment, part) - row(moved, part)));
    }
    return worst;
}

}  // namespace magicgeo::testkit
