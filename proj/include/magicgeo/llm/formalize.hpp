#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "magicgeo/lang/parser.hpp"
#include "magicgeo/lang/printer.hpp"
#include "magicgeo/llm/manual.hpp"
#include "magicgeo/llm/provider.hpp"
#include "magicgeo/solver/gauge.hpp"
#include "magicgeo/solver/solution_json.hpp"
#include "magicgeo/solver/solve.hpp"
#include "magicgeo/verify/feedback.hpp"

namespace magicgeo::llm {

/// Body of the first fenced block when the reply has one, else the reply.
inline std::string strip_code_fence(const std::string& reply) {
    const auto open = reply.find("```");
    if (open == std::string::npos) return reply;
    const auto body = reply.find('\n', open);
    if (body == std::string::npos) return reply;
    const auto close = reply.find("```", body + 1);
    return reply.substr(body + 1, close == std::string::npos ? std::string::npos : close - body - 1);
}

inline std::string system_prompt(const PromptManual& m) {
    std::string out =
        "You translate plane geometry problems into the .geo constraint language. "
        "Reply with the spec only.\n\n## Grammar\n";
    out += m.grammar_doc;
    out += "\n## Constraints\n";
    out += m.constraint_catalog_doc;
    out += "\n## Examples\n";
    for (const auto& ex : m.few_shot_examples) out += fmt::format("Problem: {}\nSpec:\n```geo\n{}```\n\n", ex.problem, ex.spec);
    return out;
}

inline ChatRequest formalize_request(const Provider& provider, const std::string& problem, const PromptManual& manual,
                                     const verify::FeedbackReport* feedback) {
    if (problem.empty()) throw std::invalid_argument("problem text must not be empty");
    std::string user = fmt::format("Problem: {}\n", problem);
    if (feedback) {
        user += "\nYour previous spec was rejected.\n";
        user += verify::render_feedback(*feedback);
        user += "Return a corrected spec.\n";
    }
    return provider.make_request({{"system", system_prompt(manual)}, {"user", std::move(user)}});
}

/// One formalization call. Returns the raw candidate source; validating it is
/// the caller's job.
inline std::string autoformalize(Provider& provider, const std::string& problem, const PromptManual& manual,
                                 const verify::FeedbackReport* feedback = nullptr) {
    return strip_code_fence(provider.complete(formalize_request(provider, problem, manual, feedback)));
}

struct LoopResult {
    std::optional<lang::GeoSpec> spec;             // set on success
    std::optional<solver::SolveReport> solution;   // set on success
    std::optional<verify::FeedbackReport> feedback;  // last failure, set on exhaustion
    std::string source;                            // last candidate text
    int calls = 0;

    bool ok() const { return spec.has_value(); }
};

/// autoformalize, parse, gauge-fix and solve; every failure becomes feedback
/// for the next attempt. Makes at most `max_iters` provider calls. Provider
/// errors propagate and end the loop.
inline LoopResult formalize_loop(Provider& provider, const std::string& problem, const PromptManual& manual,
                                 const solver::SolverConfig& cfg, int max_iters = verify::kDefaultMaxIterations) {
    if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
    LoopResult out;
    for (int i = 1; i <= max_iters; ++i) {
        out.source = autoformalize(provider, problem, manual, out.feedback ? &*out.feedback : nullptr);
        ++out.calls;
        auto parsed = lang::parse(out.source);
        if (!parsed.ok()) {
            out.feedback = verify::classify(parsed.errors, out.source, i, max_iters);
            continue;
        }
        const lang::GeoSpec fixed = solver::gauge_fix(*parsed.spec);
        solver::SolveReport rep = solver::solve(fixed, cfg);
        if (rep.status == solver::SolveStatus::Solved) {
            out.spec = std::move(*parsed.spec);
            out.solution = std::move(rep);
            out.feedback.reset();
            return out;
        }
        out.feedback = verify::classify(rep, fixed, cfg, out.source, i, max_iters);
    }
    return out;
}

inline ChatRequest tikz_request(const Provider& provider, const solver::Solution& solution, const lang::GeoSpec& spec) {
    if (!solution.solved()) throw std::invalid_argument("TikZ generation needs a Solved solution");
    std::string user = "Write a standalone TikZ document (documentclass standalone, one tikzpicture) for this figure.\n";
    user += "Use these exact coordinates:\n";
    for (const auto& p : spec.points) {
        const auto& c = solution.assignment.points.at(p.name);
        user += fmt::format("  {}: ({:.4f}, {:.4f})\n", p.name, c.x, c.y);
    }
    user += "Figure description:\n";
    for (const auto& c : spec.constraints) user += "  constrain " + lang::format_constraint(c) + "\n";
    for (const auto& d : spec.draws) user += "  draw " + lang::format_draw(d) + "\n";
    for (const auto& l : spec.labels) user += fmt::format("  label {} {}\n", l.point, lang::quote_label(l.text));
    user += "Mark every point with a dot and its name. Reply with the TikZ source only.\n";
    return provider.make_request({{"system", "You write TikZ code for plane geometry diagrams."}, {"user", std::move(user)}});
}

/// Raw provider TikZ; callers must lint it and fall back to the deterministic
/// emitter on any finding.
inline std::string generate_tikz_llm(Provider& provider, const solver::Solution& solution, const lang::GeoSpec& spec) {
    return strip_code_fence(provider.complete(tikz_request(provider, solution, spec)));
}

}  // namespace magicgeo::llm
