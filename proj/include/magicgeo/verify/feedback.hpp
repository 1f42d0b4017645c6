#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "magicgeo/geom/vec2.hpp"
#include "magicgeo/lang/types.hpp"
#include "magicgeo/solver/types.hpp"

namespace magicgeo::verify {

enum class FailureClass { Syntax, Parameter, Unsatisfiable, Timeout, Degenerate };

inline std::string_view failure_class_name(FailureClass c) {
    switch (c) {
        case FailureClass::Syntax: return "Syntax";
        case FailureClass::Parameter: return "Parameter";
        case FailureClass::Unsatisfiable: return "Unsatisfiable";
        case FailureClass::Timeout: return "Timeout";
        case FailureClass::Degenerate: return "Degenerate";
    }
    return "Syntax";
}

struct FeedbackItem {
    int line = 0;
    std::string code;
    std::string message;
};

struct FeedbackReport {
    FailureClass failure_class = FailureClass::Syntax;
    std::vector<FeedbackItem> items;
    int iteration = 1;  // 1-based
    int max_iterations = 5;
    std::string spec_source;
};

inline constexpr int kDefaultMaxIterations = 5;
inline constexpr std::size_t kMaxSolverItems = 3;

/// Lexical and structural defects are Syntax; everything about identifiers,
/// argument counts and values is Parameter.
inline FailureClass class_of(lang::ErrorClass cls) {
    switch (cls) {
        case lang::ErrorClass::LexError:
        case lang::ErrorClass::ParseError:
        case lang::ErrorClass::UnknownConstraint: return FailureClass::Syntax;
        case lang::ErrorClass::UnknownIdentifier:
        case lang::ErrorClass::ArityMismatch:
        case lang::ErrorClass::DuplicateDecl:
        case lang::ErrorClass::RangeError: return FailureClass::Parameter;
    }
    return FailureClass::Syntax;
}

/// A report is Syntax when any error is syntactic, Parameter otherwise. Every
/// error is kept so one round can fix several defects.
inline FeedbackReport classify(const std::vector<lang::SpecError>& errors, std::string spec_source, int iteration,
                               int max_iterations = kDefaultMaxIterations) {
    if (errors.empty()) throw std::invalid_argument("classify needs at least one spec error");
    FeedbackReport rep;
    rep.iteration = iteration;
    rep.max_iterations = max_iterations;
    rep.spec_source = std::move(spec_source);
    rep.failure_class = FailureClass::Parameter;
    for (const auto& e : errors) {
        if (class_of(e.cls) == FailureClass::Syntax) rep.failure_class = FailureClass::Syntax;
        rep.items.push_back({e.line, std::string(e.code()), e.message});
    }
    return rep;
}

namespace detail {

inline std::string magnitude(double v) {
    return std::abs(v) >= 0.1 ? fmt::format("{:.1f}", std::abs(v)) : fmt::format("{:.3g}", std::abs(v));
}

inline std::string violation_text(const solver::WorstEntry& w) {
    using lang::ConstraintKind;
    std::string amount;
    switch (w.kind) {
        case ConstraintKind::AngleDeg:
        case ConstraintKind::AngleEq:
            amount = magnitude(w.value * 180.0 / std::numbers::pi) + " degrees";
            break;
        case ConstraintKind::Parallel:
        case ConstraintKind::Perpendicular:
            amount = magnitude(std::asin(std::min(1.0, std::abs(w.value))) * 180.0 / std::numbers::pi) + " degrees";
            break;
        default: amount = magnitude(w.value) + " units"; break;
    }
    if (w.line == 0)
        return fmt::format("the added orientation constraint ({}) is violated by {}", lang::kind_name(w.kind), amount);
    return fmt::format("constraint at line {} ({}) is violated by {}", w.line, lang::kind_name(w.kind), amount);
}

}  // namespace detail

/// Maps a failed solve onto feedback: Timeout for an expired budget,
/// Degenerate when every constraint holds but points collapsed, Unsatisfiable
/// otherwise. Items are the (at most three) worst violated constraints.
inline FeedbackReport classify(const solver::SolveReport& report, const lang::GeoSpec& spec,
                               const solver::SolverConfig& cfg, std::string spec_source, int iteration,
                               int max_iterations = kDefaultMaxIterations) {
    if (report.status == solver::SolveStatus::Solved)
        throw std::invalid_argument("classify needs a report that is not Solved");
    FeedbackReport rep;
    rep.iteration = iteration;
    rep.max_iterations = max_iterations;
    rep.spec_source = std::move(spec_source);
    const bool residuals_ok = report.max_residual() <= cfg.tolerance;
    if (report.status == solver::SolveStatus::TimedOut)
        rep.failure_class = FailureClass::Timeout;
    else if (residuals_ok && report.penalty > 0.0)
        rep.failure_class = FailureClass::Degenerate;
    else
        rep.failure_class = FailureClass::Unsatisfiable;

    if (rep.failure_class == FailureClass::Degenerate) {
        for (std::size_t i = 0; i < spec.points.size() && rep.items.size() < kMaxSolverItems; ++i) {
            for (std::size_t j = i + 1; j < spec.points.size() && rep.items.size() < kMaxSolverItems; ++j) {
                const auto& a = spec.points[i];
                const auto& b = spec.points[j];
                const double d = geom::distance(report.assignment.points.at(a.name), report.assignment.points.at(b.name));
                if (d >= cfg.d_min) continue;
                rep.items.push_back({b.source_line, "PointsCollapsed",
                                     fmt::format("points {} and {} are only {} apart; distinct points must be at least "
                                                 "{} apart, so the constraints force them together",
                                                 a.name, b.name, detail::magnitude(d), cfg.d_min)});
            }
        }
    } else {
        for (const auto& w : report.worst) {
            if (rep.items.size() == kMaxSolverItems) break;
            if (std::abs(w.value) <= cfg.tolerance && !rep.items.empty()) break;
            rep.items.push_back({w.line, "ConstraintViolated", detail::violation_text(w)});
        }
    }
    if (rep.items.empty()) {
        rep.items.push_back({0, rep.failure_class == FailureClass::Timeout ? "Timeout" : "ConstraintViolated",
                             rep.failure_class == FailureClass::Timeout
                                 ? "the solver ran out of time before satisfying every constraint"
                                 : "no assignment satisfying every constraint was found"});
    }
    return rep;
}

inline std::vector<std::string_view> source_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

/// Plain-text block for the next prompt: one header line, the numbered
/// source, then one bullet per item.
inline std::string render_feedback(const FeedbackReport& report) {
    std::string out = fmt::format("Verification failed ({}), attempt {} of {}. Fix every problem listed below.\n",
                                  failure_class_name(report.failure_class), report.iteration, report.max_iterations);
    const auto lines = source_lines(report.spec_source);
    for (std::size_t i = 0; i < lines.size(); ++i) out += fmt::format("{:>3} | {}\n", i + 1, lines[i]);
    for (const auto& item : report.items)
        out += fmt::format("- line {} [{}]: {}\n", item.line, item.code, item.message);
    return out;
}

}  // namespace magicgeo::verify
