#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "../common/independent_check.hpp"
#include "../common/test_data.hpp"
#include "magicgeo/lang/parser.hpp"
#include "magicgeo/solver/gauge.hpp"
#include "magicgeo/solver/refine.hpp"
#include "magicgeo/solver/solution_json.hpp"
#include "magicgeo/solver/solve.hpp"

using namespace magicgeo;
using geom::Vec2;
using solver::SolveStatus;

namespace {

lang::GeoSpec spec_of(std::string_view src) {
    auto r = lang::parse(src);
    EXPECT_TRUE(r.ok()) << (r.errors.empty() ? "" : r.errors.front().format());
    return r.spec.value_or(lang::GeoSpec{});
}

constexpr std::string_view kSquare =
    "point A B C D\n"
    "constrain length(A, B, 4)\n"
    "constrain equal_length(A, B, B, C)\n"
    "constrain equal_length(B, C, C, D)\n"
    "constrain equal_length(C, D, D, A)\n"
    "constrain perpendicular(A, B, B, C)\n"
    "constrain perpendicular(B, C, C, D)\n";

double deg_at(const geom::Assignment& a, const char* p, const char* v, const char* q) {
    return testkit::angle_deg(a, p, v, q);
}

double dist(const geom::Assignment& a, const char* p, const char* q) {
    return geom::distance(a.points.at(p), a.points.at(q));
}

}  // namespace

TEST(Gauge, PinnedSpecIsUnchanged) {
    const auto spec = spec_of("point A at (1, 2)\npoint B\nconstrain length(A, B, 2)\n");
    EXPECT_EQ(solver::gauge_fix(spec), spec);
    EXPECT_EQ(solver::gauge_fix(spec).constraints.size(), 1u);
}

TEST(Gauge, TwoFreePointsGetAnchorAndDirection) {
    const auto fixed = solver::gauge_fix(spec_of("point A B\nconstrain length(A, B, 2)\n"));
    ASSERT_TRUE(fixed.points[0].pin.has_value());
    EXPECT_EQ(*fixed.points[0].pin, (lang::Pin{3, 3}));
    EXPECT_FALSE(fixed.points[1].pin.has_value());
    ASSERT_EQ(fixed.constraints.size(), 2u);
    EXPECT_EQ(fixed.constraints[1].kind, lang::ConstraintKind::Horizontal);
    EXPECT_EQ(fixed.constraints[1].point_args, (std::vector<std::string>{"A", "B"}));
    EXPECT_EQ(fixed.constraints[1].source_line, 0);
}

TEST(Gauge, SinglePointGetsNoDirection) {
    const auto fixed = solver::gauge_fix(spec_of("point A\n"));
    EXPECT_TRUE(fixed.points[0].pin.has_value());
    EXPECT_TRUE(fixed.constraints.empty());
}

TEST(Gauge, ExistingOrientationIsKept) {
    const auto fixed = solver::gauge_fix(spec_of("point A B\nconstrain vertical(A, B)\nconstrain length(A, B, 2)\n"));
    EXPECT_TRUE(fixed.points[0].pin.has_value());
    EXPECT_EQ(fixed.constraints.size(), 2u);
}

TEST(Gauge, IsIdempotent) {
    const auto once = solver::gauge_fix(spec_of(kSquare));
    EXPECT_EQ(solver::gauge_fix(once), once);
}

TEST(Solve, SquareHasEqualSidesAndDiagonals) {
    const auto spec = solver::gauge_fix(spec_of(kSquare));
    const auto rep = solver::solve(spec, {});
    ASSERT_EQ(rep.status, SolveStatus::Solved);
    EXPECT_LE(rep.max_residual(), 1e-6);
    for (auto [p, q] : {std::pair{"A", "B"}, {"B", "C"}, {"C", "D"}, {"D", "A"}}) EXPECT_NEAR(dist(rep.assignment, p, q), 4.0, 1e-6);
    EXPECT_NEAR(dist(rep.assignment, "A", "C"), dist(rep.assignment, "B", "D"), 1e-6);
    EXPECT_LE(testkit::max_violation(spec, rep.assignment), 1e-6);
    EXPECT_EQ(rep.assignment.points.at("A"), (Vec2{3, 3}));
    EXPECT_EQ(rep.penalty, 0.0);
}

TEST(Solve, InscribedTriangleSitsOnTheCircle) {
    const auto spec = solver::gauge_fix(spec_of("point O A B C\nconstrain inscribed(A, B, C, O, 3)\n"));
    const auto rep = solver::solve(spec, {});
    ASSERT_EQ(rep.status, SolveStatus::Solved);
    for (const char* v : {"A", "B", "C"}) EXPECT_NEAR(dist(rep.assignment, "O", v), 3.0, 1e-6);
    EXPECT_GE(testkit::min_separation(spec, rep.assignment), 0.5 - 1e-9);
}

TEST(Solve, ContradictoryLengthsAreUnsat) {
    const auto spec = solver::gauge_fix(spec_of("point A B\nconstrain length(A, B, 1)\nconstrain length(A, B, 2)\n"));
    solver::SolverConfig cfg;
    cfg.max_starts = 20;
    const auto rep = solver::solve(spec, cfg);
    EXPECT_EQ(rep.status, SolveStatus::Unsat);
    ASSERT_GE(rep.worst.size(), 2u);
    std::vector<int> top{rep.worst[0].line, rep.worst[1].line};
    std::sort(top.begin(), top.end());
    EXPECT_EQ(top, (std::vector<int>{2, 3}));
    EXPECT_NEAR(std::abs(rep.worst[0].value), 0.5, 1e-3);
    for (std::size_t i = 1; i < rep.worst.size(); ++i) EXPECT_GE(std::abs(rep.worst[i - 1].value), std::abs(rep.worst[i].value));
}

TEST(Solve, QuadrilateralWith120DegreeAngle) {
    const auto spec = solver::gauge_fix(spec_of(testkit::slurp(testkit::data_dir() / "corpus/quadrangle/q02_angle120.geo")));
    const auto rep = solver::solve(spec, {});
    ASSERT_EQ(rep.status, SolveStatus::Solved);
    EXPECT_NEAR(deg_at(rep.assignment, "A", "D", "C"), 120.0, 1e-4);
}

TEST(Solve, NoFreeVariablesSatisfied) {
    const auto rep = solver::solve(spec_of("point A at (1, 1)\npoint B at (4, 5)\nconstrain length(A, B, 5)\n"), {});
    EXPECT_EQ(rep.status, SolveStatus::Solved);
    EXPECT_EQ(rep.refine_iterations, 0);
    EXPECT_EQ(rep.starts_used, 0);
}

TEST(Solve, NoFreeVariablesViolated) {
    const auto rep = solver::solve(spec_of("point A at (1, 1)\npoint B at (4, 5)\nconstrain length(A, B, 4)\n"), {});
    EXPECT_EQ(rep.status, SolveStatus::Unsat);
    EXPECT_EQ(rep.starts_used, 0);
    ASSERT_EQ(rep.worst.size(), 1u);
    EXPECT_NEAR(rep.worst[0].value, 1.0, 1e-15);
}

TEST(Solve, FreeScalarStaysInBounds) {
    const auto spec = solver::gauge_fix(spec_of("point A B C\nscalar t in [20, 40]\nconstrain angle_deg(B, A, C, t)\n"
                                                "constrain length(A, B, 3)\nconstrain length(A, C, 3)\nconstrain length(B, C, 2)\n"));
    const auto rep = solver::solve(spec, {});
    ASSERT_EQ(rep.status, SolveStatus::Solved);
    const double t = rep.assignment.scalars.at("t");
    EXPECT_NEAR(t, 2 * std::asin(1.0 / 3.0) * 180 / std::numbers::pi, 1e-4);
    EXPECT_NEAR(deg_at(rep.assignment, "B", "A", "C"), t, 1e-4);
}

TEST(Solve, IsDeterministic) {
    const auto spec = solver::gauge_fix(spec_of(testkit::slurp(testkit::data_dir() / "corpus/triangle/t01_angle49.geo")));
    solver::SolverConfig cfg;
    cfg.rng_seed = 42;
    const auto a = solver::solve(spec, cfg);
    const auto b = solver::solve(spec, cfg);
    EXPECT_EQ(a.status, b.status);
    EXPECT_EQ(a.starts_used, b.starts_used);
    EXPECT_EQ(a.assignment, b.assignment);
    EXPECT_EQ(solver::to_json(a), solver::to_json(b));
}

TEST(Solve, WarmStartFromSolutionIsImmediate) {
    const auto spec = solver::gauge_fix(spec_of(kSquare));
    const auto cold = solver::solve(spec, {});
    ASSERT_EQ(cold.status, SolveStatus::Solved);
    const auto warm = solver::solve(spec, {}, cold.assignment);
    EXPECT_EQ(warm.status, SolveStatus::Solved);
    EXPECT_EQ(warm.starts_used, 1);
    EXPECT_EQ(warm.refine_iterations, 0);
}

TEST(Solve, TinyBudgetTimesOut) {
    const auto spec = solver::gauge_fix(spec_of(testkit::slurp(testkit::data_dir() / "corpus/triangle/t02_incircle.geo")));
    solver::SolverConfig cfg;
    cfg.time_budget = 1e-5;
    EXPECT_EQ(solver::solve(spec, cfg).status, SolveStatus::TimedOut);
}

TEST(Solve, RejectsBadConfig) {
    solver::SolverConfig cfg;
    cfg.tolerance = 0;
    EXPECT_THROW(solver::solve(spec_of(kSquare), cfg), std::invalid_argument);
    cfg = {};
    cfg.max_starts = 0;
    EXPECT_THROW(cfg.check(), std::invalid_argument);
}

TEST(Grid, FindsPointOnCircleAroundPinnedCenter) {
    const auto spec = spec_of("point O at (5, 5)\npoint P\nconstrain on_circle(P, O, 3)\n");
    const auto rep = solver::grid_traverse(spec, {}, {});
    ASSERT_EQ(rep.status, SolveStatus::Solved);
    EXPECT_LE(rep.max_residual(), 1e-6);
    EXPECT_NEAR(dist(rep.assignment, "O", "P"), 3.0, 1e-6);
    EXPECT_GE(rep.grid_polishes, 1);
}

TEST(Grid, KeepsPartialAssignment) {
    const auto spec = spec_of("point O at (5, 5)\npoint P Q\nconstrain on_circle(P, O, 3)\nconstrain length(P, Q, 2)\n");
    geom::Assignment partial;
    partial.points["P"] = {8, 5};
    const auto rep = solver::grid_traverse(spec, {}, partial);
    ASSERT_EQ(rep.status, SolveStatus::Solved);
    EXPECT_NEAR(dist(rep.assignment, "P", "Q"), 2.0, 1e-6);
}

TEST(Grid, UnsatisfiablePinnedSpec) {
    const auto spec = spec_of("point A at (1, 1)\npoint B at (4, 5)\nconstrain length(A, B, 4)\n");
    EXPECT_EQ(solver::grid_traverse(spec, {}, {}).status, SolveStatus::Unsat);
}

TEST(Refine, SatisfiedStartIsAFixedPoint) {
    const auto spec = spec_of("point O at (0, 0)\npoint P\nconstrain on_circle(P, O, 5)\n");
    geom::Assignment start;
    start.points = {{"O", {0, 0}}, {"P", {3, 4}}};
    const auto out = solver::refine(spec, start, {});
    EXPECT_EQ(out.assignment, start);
    EXPECT_EQ(out.iterations, 0);
}

TEST(Refine, ProjectsRadiallyOntoCircle) {
    const auto spec = spec_of("point O at (0, 0)\npoint P\nconstrain on_circle(P, O, 5)\n");
    geom::Assignment start;
    start.points = {{"O", {0, 0}}, {"P", {6, 0}}};
    const auto out = solver::refine(spec, start, {});
    EXPECT_NEAR(geom::norm(out.assignment.points.at("P")), 5.0, 1e-9);
    EXPECT_NEAR(out.assignment.points.at("P").y, 0.0, 1e-9);
    ASSERT_GE(out.trace.size(), 2u);
    for (std::size_t i = 1; i < out.trace.size(); ++i) EXPECT_LT(out.trace[i], out.trace[i - 1]);
}

TEST(Refine, ObjectiveNeverIncreases) {
    const auto spec = solver::gauge_fix(spec_of(testkit::slurp(testkit::data_dir() / "corpus/circle/c06_cyclic_quad.geo")));
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        geom::Assignment start;
        for (const auto& p : spec.points)
            start.points[p.name] = p.pin ? Vec2{p.pin->x, p.pin->y} : Vec2{testkit::uniform(rng, 0, 10), testkit::uniform(rng, 0, 10)};
        const auto out = solver::refine(spec, start, {});
        for (std::size_t i = 1; i < out.trace.size(); ++i) EXPECT_LE(out.trace[i], out.trace[i - 1]);
    }
}

TEST(SolutionJson, RoundTripsBitExactly) {
    const auto rep = solver::solve(solver::gauge_fix(spec_of(kSquare)), {});
    const auto text = solver::to_json(rep);
    const auto sol = solver::solution_from_json(text);
    EXPECT_TRUE(sol.solved());
    EXPECT_EQ(sol.assignment, rep.assignment);
    EXPECT_EQ(sol.max_residual, rep.max_residual());
    EXPECT_EQ(text.find('\r'), std::string::npos);
    EXPECT_LT(text.find("\"max_residual\""), text.find("\"points\""));
    EXPECT_LT(text.find("\"seed\""), text.find("\"status\""));
}

TEST(SolutionJson, RejectsMalformedInput) {
    EXPECT_THROW(solver::solution_from_json("{"), std::runtime_error);
    EXPECT_THROW(solver::solution_from_json(R"({"status": "Maybe", "points": {}, "scalars": {}, "max_residual": 0,
                                              "worst": [], "seed": 0})"),
                 std::runtime_error);
    EXPECT_THROW(solver::solution_from_json(R"({"status": "Solved", "points": {"A": [1]}, "scalars": {},
                                              "max_residual": 0, "worst": [], "seed": 0})"),
                 std::runtime_error);
}
