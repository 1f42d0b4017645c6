#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "../common/independent_check.hpp"
#include "../common/kernel_props.hpp"
#include "magicgeo/geom/residual.hpp"
#include "magicgeo/lang/parser.hpp"

using namespace magicgeo;
using geom::Vec2;
using lang::ConstraintKind;

namespace {

lang::Constraint make(ConstraintKind kind, std::vector<std::string> pts, std::vector<double> scalars = {}) {
    lang::Constraint c;
    c.kind = kind;
    c.point_args = std::move(pts);
    for (double s : scalars) c.scalar_args.emplace_back(s);
    c.source_line = 1;
    return c;
}

lang::GeoSpec points_spec(std::initializer_list<const char*> names) {
    lang::GeoSpec s;
    for (const char* n : names) s.points.push_back({n, std::nullopt, 1});
    return s;
}

geom::Assignment at(std::initializer_list<std::pair<const char*, Vec2>> pts) {
    geom::Assignment a;
    for (const auto& [n, p] : pts) a.points[n] = p;
    return a;
}

const lang::GeoSpec kABCD = points_spec({"A", "B", "C", "D", "E", "F", "O", "P", "M"});

}  // namespace

TEST(Residual, AxisAlignedPerpendicularIsZero) {
    const auto a = at({{"A", {0, 0}}, {"B", {1, 0}}, {"C", {0, 0}}, {"D", {0, 1}}});
    EXPECT_EQ(geom::residual(kABCD, make(ConstraintKind::Perpendicular, {"A", "B", "C", "D"}), a), 0.0);
}

TEST(Residual, PythagoreanOnCircleIsZero) {
    const auto a = at({{"P", {3, 4}}, {"O", {0, 0}}});
    EXPECT_EQ(geom::residual(kABCD, make(ConstraintKind::OnCircle, {"P", "O"}, {5}), a), 0.0);
}

TEST(Residual, DiagonalAngleIs45) {
    const auto a = at({{"A", {1, 0}}, {"B", {0, 0}}, {"C", {1, 1}}});
    EXPECT_NEAR(geom::residual(kABCD, make(ConstraintKind::AngleDeg, {"A", "B", "C"}, {45}), a), 0.0, 1e-15);
}

TEST(Residual, RightAngleAgainst49Degrees) {
    const auto a = at({{"A", {1, 0}}, {"B", {0, 0}}, {"C", {0, 1}}});
    const double r = geom::residual(kABCD, make(ConstraintKind::AngleDeg, {"A", "B", "C"}, {49}), a);
    EXPECT_NEAR(r, (90.0 - 49.0) * std::numbers::pi / 180.0, 1e-15);
    EXPECT_NEAR(r, 0.7156, 5e-5);
}

TEST(Residual, FormulasOnHandPickedConfigurations) {
    const auto a = at({{"A", {0, 0}}, {"B", {4, 0}}, {"C", {4, 3}}, {"D", {0, 3}}, {"M", {2, 1}}, {"O", {2, 1.5}}});
    const auto r = [&](ConstraintKind k, std::vector<std::string> p, std::vector<double> s = {}, int part = 0) {
        return geom::residual(kABCD, make(k, std::move(p), std::move(s)), a, part);
    };
    EXPECT_DOUBLE_EQ(r(ConstraintKind::Length, {"A", "C"}, {4}), 1.0);
    EXPECT_DOUBLE_EQ(r(ConstraintKind::EqualLength, {"A", "B", "B", "C"}), 1.0);
    EXPECT_DOUBLE_EQ(r(ConstraintKind::RatioLength, {"A", "B", "B", "C"}, {2}), -2.0);
    EXPECT_DOUBLE_EQ(r(ConstraintKind::Parallel, {"A", "B", "D", "C"}), 0.0);
    EXPECT_DOUBLE_EQ(r(ConstraintKind::Parallel, {"A", "B", "A", "D"}), 1.0);
    EXPECT_DOUBLE_EQ(r(ConstraintKind::Perpendicular, {"A", "B", "D", "C"}), 1.0);
    EXPECT_NEAR(r(ConstraintKind::AngleEq, {"B", "A", "C", "D", "C", "A"}), 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(r(ConstraintKind::Collinear, {"A", "B", "M"}), 1.0);
    EXPECT_DOUBLE_EQ(r(ConstraintKind::OnLine, {"M", "A", "B"}), 1.0);
    EXPECT_DOUBLE_EQ(r(ConstraintKind::Midpoint, {"O", "A", "C"}, {}, 0), 0.0);
    EXPECT_DOUBLE_EQ(r(ConstraintKind::Midpoint, {"M", "A", "C"}, {}, 1), -0.5);
    EXPECT_NEAR(r(ConstraintKind::Concyclic, {"A", "B", "C", "D"}), 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(r(ConstraintKind::Tangent, {"A", "B", "M"}, {1}), 0.0);
    EXPECT_DOUBLE_EQ(r(ConstraintKind::Horizontal, {"A", "B"}), 0.0);
    EXPECT_DOUBLE_EQ(r(ConstraintKind::Vertical, {"A", "C"}), 4.0);
    // B overshoots past C on the ray A->C: penalty is -(B-A).(C-B).
    EXPECT_DOUBLE_EQ(r(ConstraintKind::Between, {"A", "B", "M"}, {}, 1), 8.0);
    EXPECT_DOUBLE_EQ(r(ConstraintKind::Between, {"A", "M", "B"}, {}, 1), 0.0);
}

TEST(Residual, ConcyclicMeasuresDistanceFromCircumcircle) {
    const auto a = at({{"A", {1, 0}}, {"B", {0, 1}}, {"C", {-1, 0}}, {"D", {0, -2}}});
    EXPECT_NEAR(geom::residual(kABCD, make(ConstraintKind::Concyclic, {"A", "B", "C", "D"}), a), 1.0, 1e-15);
}

TEST(Residual, NamedScalarsResolve) {
    const auto spec = lang::parse("point A B\nscalar r = 2\nscalar t in [1, 9]\n").spec.value();
    lang::Constraint c = make(ConstraintKind::Length, {"A", "B"});
    c.scalar_args = {std::string("r")};
    auto a = at({{"A", {0, 0}}, {"B", {3, 0}}});
    EXPECT_DOUBLE_EQ(geom::residual(spec, c, a), 1.0);
    c.scalar_args = {std::string("t")};
    a.scalars["t"] = 2.5;
    EXPECT_DOUBLE_EQ(geom::residual(spec, c, a), 0.5);
}

TEST(Residual, DegenerateInputsThrowNamedErrors) {
    const auto a = at({{"A", {1, 1}}, {"B", {1, 1}}, {"C", {2, 2}}, {"D", {3, 3}}});
    const auto expect_degenerate = [&](lang::Constraint c, const std::string& name) {
        try {
            geom::residual(kABCD, c, a);
            ADD_FAILURE() << name << " did not throw";
        } catch (const geom::DegenerateEvaluation& e) {
            EXPECT_EQ(e.constraint(), name);
            EXPECT_FALSE(e.points().empty());
            EXPECT_EQ(e.line(), 1);
        }
    };
    expect_degenerate(make(ConstraintKind::AngleDeg, {"A", "B", "C"}, {30}), "angle_deg");
    expect_degenerate(make(ConstraintKind::Parallel, {"A", "B", "C", "D"}), "parallel");
    expect_degenerate(make(ConstraintKind::Collinear, {"A", "B", "C"}), "collinear");
    expect_degenerate(make(ConstraintKind::Concyclic, {"A", "C", "D", "B"}), "concyclic");
    expect_degenerate(make(ConstraintKind::Tangent, {"A", "B", "C"}, {1}), "tangent");
}

TEST(Residual, NeverReturnsNonFinite) {
    std::mt19937_64 rng(5);
    for (auto kind : testkit::primitive_kinds()) {
        for (int i = 0; i < 50; ++i) {
            const auto kc = testkit::random_case(kind, rng);
            for (int part = 0; part < geom::row_count(kind); ++part)
                EXPECT_TRUE(std::isfinite(geom::residual(kc.spec, kc.constraint, kc.assignment, part)));
        }
    }
}

TEST(Gradient, LengthIsUnitDirection) {
    const auto a = at({{"A", {0, 0}}, {"B", {3, 4}}});
    const auto g = geom::residual_gradient(kABCD, make(ConstraintKind::Length, {"A", "B"}, {5}), a);
    EXPECT_NEAR(g.points.at("B").x, 0.6, 1e-15);
    EXPECT_NEAR(g.points.at("B").y, 0.8, 1e-15);
    EXPECT_NEAR(g.points.at("A").x, -0.6, 1e-15);
    EXPECT_NEAR(g.points.at("A").y, -0.8, 1e-15);
    EXPECT_TRUE(g.scalars.empty());
}

TEST(Gradient, PinnedPointIsOmitted) {
    const auto spec = lang::parse("point A at (0, 0)\npoint B\n").spec.value();
    const auto a = at({{"A", {0, 0}}, {"B", {3, 4}}});
    const auto g = geom::residual_gradient(spec, make(ConstraintKind::Length, {"A", "B"}, {5}), a);
    EXPECT_EQ(g.points.count("A"), 0u);
    EXPECT_EQ(g.points.count("B"), 1u);
}

TEST(Gradient, RepeatedPointSumsSlots) {
    const auto a = at({{"A", {0, 0}}, {"B", {2, 0}}, {"C", {2, 3}}});
    const auto g = geom::residual_gradient(kABCD, make(ConstraintKind::EqualLength, {"A", "B", "B", "C"}), a);
    // d/dB (|B-A| - |C-B|) = (B-A)/|B-A| + (C-B)/|C-B|
    EXPECT_NEAR(g.points.at("B").x, 1.0, 1e-15);
    EXPECT_NEAR(g.points.at("B").y, 1.0, 1e-15);
}

class GradientByKind : public ::testing::TestWithParam<ConstraintKind> {};

TEST_P(GradientByKind, MatchesCentralDifferences) {
    const auto st = testkit::gradient_check(GetParam(), 30, 101 + static_cast<int>(GetParam()));
    EXPECT_EQ(st.samples, 30);
    EXPECT_LE(st.worst_relative, 1e-5) << lang::kind_name(GetParam());
}

TEST_P(GradientByKind, InvariantUnderRigidMotion) {
    EXPECT_LE(testkit::rigid_motion_drift(GetParam(), 200, 7 + static_cast<int>(GetParam())), 1e-9);
}

INSTANTIATE_TEST_SUITE_P(AllKinds, GradientByKind, ::testing::ValuesIn(testkit::primitive_kinds()),
                         [](const auto& info) { return std::string(lang::kind_name(info.param)); });

TEST(Invariance, AxisKindsChangeUnderRotation) {
    const auto a = at({{"A", {0, 0}}, {"B", {2, 0}}});
    const auto rot = at({{"A", {0, 0}}, {"B", {0, 2}}});
    const auto c = make(ConstraintKind::Horizontal, {"A", "B"});
    EXPECT_EQ(geom::residual(kABCD, c, a), 0.0);
    EXPECT_NE(geom::residual(kABCD, c, rot), 0.0);
}

TEST(Invariance, Symmetries) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        auto a = testkit::random_case(ConstraintKind::AngleEq, rng).assignment;
        geom::Assignment named;
        const char* names[] = {"A", "B", "C", "D", "E", "F"};
        for (int k = 0; k < 6; ++k) named.points[names[k]] = a.points.at("P" + std::to_string(k));
        const auto r = [&](ConstraintKind k, std::vector<std::string> p, std::vector<double> s = {}) {
            return geom::residual(kABCD, make(k, std::move(p), std::move(s)), named);
        };
        EXPECT_NEAR(r(ConstraintKind::EqualLength, {"A", "B", "C", "D"}), -r(ConstraintKind::EqualLength, {"C", "D", "A", "B"}), 1e-12);
        EXPECT_NEAR(std::abs(r(ConstraintKind::Parallel, {"A", "B", "C", "D"})), std::abs(r(ConstraintKind::Parallel, {"C", "D", "A", "B"})), 1e-12);
        EXPECT_NEAR(std::abs(r(ConstraintKind::Perpendicular, {"A", "B", "C", "D"})), std::abs(r(ConstraintKind::Perpendicular, {"C", "D", "A", "B"})), 1e-12);
        EXPECT_NEAR(r(ConstraintKind::AngleDeg, {"A", "B", "C"}, {40}), r(ConstraintKind::AngleDeg, {"C", "B", "A"}, {40}), 1e-12);
    }
}

TEST(Invariance, ScaleFreeKindsKeepTheirZeroSet) {
    // A configuration satisfying every scale-free kind stays satisfying after uniform scaling.
    const auto base = at({{"A", {0, 0}}, {"B", {4, 0}}, {"C", {4, 3}}, {"D", {0, 3}}, {"E", {2, 0}}, {"F", {8, 0}}});
    const std::vector<lang::Constraint> zero = {
        make(ConstraintKind::Parallel, {"A", "B", "D", "C"}),
        make(ConstraintKind::Perpendicular, {"A", "B", "B", "C"}),
        make(ConstraintKind::AngleDeg, {"B", "A", "D"}, {90}),
        make(ConstraintKind::AngleEq, {"B", "A", "C", "D", "C", "A"}),
        make(ConstraintKind::Collinear, {"A", "E", "F"}),
        make(ConstraintKind::RatioLength, {"A", "B", "A", "E"}, {2}),
        make(ConstraintKind::EqualLength, {"A", "B", "D", "C"}),
    };
    for (double k : {0.1, 0.5, 3.0, 40.0}) {
        geom::Assignment scaled = base;
        for (auto& [n, p] : scaled.points) p = k * p;
        for (const auto& c : zero)
            EXPECT_NEAR(geom::residual(kABCD, c, scaled), 0.0, 1e-12) << lang::kind_name(c.kind) << " k=" << k;
    }
    // Literal lengths are not scale free.
    geom::Assignment doubled = base;
    for (auto& [n, p] : doubled.points) p = 2.0 * p;
    const auto len = make(ConstraintKind::Length, {"A", "B"}, {4});
    EXPECT_EQ(geom::residual(kABCD, len, base), 0.0);
    EXPECT_NE(geom::residual(kABCD, len, doubled), 0.0);
}

TEST(Expand, InscribedBecomesThreeOnCircleRows) {
    const auto spec = lang::parse("point A B C O\nconstrain inscribed(A, B, C, O, 3)\n").spec.value();
    const auto rows = geom::expand(spec);
    ASSERT_EQ(rows.size(), 3u);
    const char* vertices[] = {"A", "B", "C"};
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(rows[i].constraint.kind, ConstraintKind::OnCircle);
        EXPECT_EQ(rows[i].constraint.point_args, (std::vector<std::string>{vertices[i], "O"}));
        EXPECT_EQ(std::get<double>(rows[i].constraint.scalar_args.at(0)), 3.0);
        EXPECT_EQ(rows[i].constraint.source_line, 2);
        EXPECT_EQ(rows[i].constraint_index, 0u);
    }
}

TEST(Expand, MidpointAndBetweenHaveTwoRows) {
    const auto spec = lang::parse("point A B M\nconstrain midpoint(M, A, B)\nconstrain between(A, M, B)\n").spec.value();
    const auto rows = geom::expand(spec);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0].part, 0);
    EXPECT_EQ(rows[1].part, 1);
    EXPECT_EQ(rows[2].constraint.kind, ConstraintKind::Between);
    EXPECT_EQ(rows[3].constraint.source_line, 3);
}

TEST(Expand, PlainSpecIsIdentity) {
    const auto spec = lang::parse("point A B C\nconstrain length(A, B, 2)\nconstrain perpendicular(A, B, B, C)\n").spec.value();
    const auto rows = geom::expand(spec);
    ASSERT_EQ(rows.size(), spec.constraints.size());
    for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].constraint, spec.constraints[i]);
}

TEST(Expand, ResidualVectorTracksLines) {
    const auto spec = lang::parse("point A B C O\n\nconstrain inscribed(A, B, C, O, 3)\nconstrain length(A, B, 2)\n").spec.value();
    const auto a = at({{"A", {3, 0}}, {"B", {0, 3}}, {"C", {-3, 0}}, {"O", {0, 0}}});
    const auto rv = geom::residuals(spec, a);
    EXPECT_EQ(rv.lines, (std::vector<int>{3, 3, 3, 4}));
    EXPECT_NEAR(rv.values[3], std::sqrt(18.0) - 2.0, 1e-15);
    EXPECT_NEAR(rv.max_abs(), std::sqrt(18.0) - 2.0, 1e-15);
}

TEST(Penalty, Examples) {
    const auto two = points_spec({"A", "B"});
    EXPECT_EQ(geom::degeneracy_penalty(two, at({{"A", {0, 0}}, {"B", {2, 0}}}), 1.0), 0.0);
    EXPECT_EQ(geom::degeneracy_penalty(two, at({{"A", {1, 1}}, {"B", {1, 1}}}), 1.0), 1.0);
    const auto three = points_spec({"A", "B", "C"});
    const double h = 0.5 * std::sqrt(3.0) / 2.0;
    EXPECT_NEAR(geom::degeneracy_penalty(three, at({{"A", {0, 0}}, {"B", {0.5, 0}}, {"C", {0.25, h}}}), 1.0), 0.75, 1e-15);
    EXPECT_THROW(geom::degeneracy_penalty(two, at({{"A", {0, 0}}, {"B", {2, 0}}}), 0.0), std::invalid_argument);
}

TEST(IndependentChecker, AgreesWithKernelOnSatisfiedConfigurations) {
    const auto spec = lang::parse("point A B C D O\nconstrain inscribed(A, B, C, O, 5)\nconstrain concyclic(A, B, C, D)\n"
                                  "constrain between(A, O, D)\n").spec.value();
    const auto a = at({{"A", {5, 0}}, {"B", {3, 4}}, {"C", {-4, 3}}, {"D", {-5, 0}}, {"O", {0, 0}}});
    EXPECT_LE(geom::residuals(spec, a).max_abs(), 1e-12);
    EXPECT_LE(testkit::max_violation(spec, a), 1e-12);
}
