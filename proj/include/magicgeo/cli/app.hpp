#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "magicgeo/lang/parser.hpp"
#include "magicgeo/lang/printer.hpp"
#include "magicgeo/llm/formalize.hpp"
#include "magicgeo/llm/http_transport.hpp"
#include "magicgeo/llm/manual.hpp"
#include "magicgeo/llm/provider.hpp"
#include "magicgeo/solver/gauge.hpp"
#include "magicgeo/solver/solution_json.hpp"
#include "magicgeo/solver/solve.hpp"
#include "magicgeo/tikz/emit.hpp"
#include "magicgeo/tikz/ir.hpp"
#include "magicgeo/verify/feedback.hpp"

namespace magicgeo::cli {

namespace fs = std::filesystem;

enum Exit : int {
    kOk = 0,
    kInvalidSpec = 1,  // spec errors or an edit that cannot be applied
    kUsage = 2,        // bad flags or unreadable/unwritable files
    kUnsat = 3,
    kTimedOut = 4,
    kNotSolved = 5,  // render asked for a solution that is not Solved
    kLoopExhausted = 6,
    kProvider = 7,
};

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot read '{}'", p.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& p, const std::string& bytes) {
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", p.string()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(fmt::format("cannot write '{}'", p.string()));
}

inline fs::path sibling(const fs::path& spec, std::string_view suffix) {
    fs::path out = spec;
    out.replace_extension();
    return fs::path(out.string() + std::string(suffix));
}

struct Options {
    // global
    std::uint64_t seed = 0;
    bool verbose = false;
    std::string cache_dir;
    // solver
    solver::SolverConfig solver;
    // emitter
    tikz::EmitConfig emit;
    bool no_right_angles = false;
    // provider
    std::string provider_kind = "mock";
    llm::ProviderConfig provider;
    std::string manual_path;
    int max_iters = verify::kDefaultMaxIterations;
    // command arguments
    std::string spec_path, solution_path, output, out_dir = "magicgeo-out";
    std::string problem;
    bool use_llm = false;
    bool dry_run = false;
    std::vector<std::string> add_draws, remove_draws, sets;
};

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

inline solver::SolverConfig solver_config(const Options& o) {
    solver::SolverConfig cfg = o.solver;
    cfg.rng_seed = o.seed;
    cfg.check();
    return cfg;
}

inline tikz::EmitConfig emit_config(const Options& o) {
    tikz::EmitConfig cfg = o.emit;
    cfg.auto_right_angle = !o.no_right_angles;
    cfg.check();
    return cfg;
}

inline llm::ProviderConfig provider_config(const Options& o) {
    llm::ProviderConfig cfg = o.provider;
    cfg.kind = o.provider_kind == "mock" ? llm::ProviderKind::Mock : llm::ProviderKind::OpenAICompatible;
    return cfg;
}

inline std::unique_ptr<llm::Provider> make_provider(const Options& o) {
    const auto cfg = provider_config(o);
    std::optional<fs::path> cache;
    if (!o.cache_dir.empty()) cache = fs::path(o.cache_dir);
    return std::make_unique<llm::Provider>(cfg, llm::make_transport(cfg), cache);
}

inline llm::PromptManual manual(const Options& o) {
    return o.manual_path.empty() ? llm::default_manual() : llm::load_manual(o.manual_path);
}

/// Reads and parses a spec; prints every error and returns nullopt on failure.
inline std::optional<lang::GeoSpec> load_spec(const std::string& path, Streams io) {
    const auto r = lang::parse(read_file(path));
    for (const auto& e : r.errors) io.out << e.format() << '\n';
    return r.spec;
}

inline int exit_for(solver::SolveStatus s) {
    switch (s) {
        case solver::SolveStatus::Solved: return kOk;
        case solver::SolveStatus::Unsat: return kUnsat;
        case solver::SolveStatus::TimedOut: return kTimedOut;
    }
    return kUnsat;
}

inline int cmd_check(const Options& o, Streams io) {
    return load_spec(o.spec_path, io) ? kOk : kInvalidSpec;
}

inline int cmd_solve(const Options& o, Streams io) {
    const auto cfg = solver_config(o);
    const auto spec = load_spec(o.spec_path, io);
    if (!spec) return kInvalidSpec;
    const auto rep = solver::solve(solver::gauge_fix(*spec), cfg);
    const fs::path out = o.output.empty() ? sibling(o.spec_path, ".solution.json") : fs::path(o.output);
    write_file(out, solver::to_json(rep));
    if (o.verbose)
        io.err << fmt::format("{}: {} after {} start(s), {} iterations, {:.3f}s\n", o.spec_path,
                              solver::status_name(rep.status), rep.starts_used, rep.refine_iterations, rep.elapsed);
    return exit_for(rep.status);
}

inline double render_tolerance(const solver::Solution& sol, const solver::SolverConfig& cfg) {
    return std::max(cfg.tolerance, sol.max_residual);
}

/// Deterministic TikZ, or the provider's when `use_llm` and it lints clean.
inline std::string render_text(const Options& o, const lang::GeoSpec& spec, const solver::Solution& sol, Streams io,
                               llm::Provider* shared = nullptr) {
    const auto ecfg = emit_config(o);
    const std::string deterministic =
        tikz::emit(tikz::build_ir(spec, sol.assignment, ecfg, render_tolerance(sol, solver_config(o))), ecfg);
    if (!o.use_llm) return deterministic;
    std::unique_ptr<llm::Provider> own;
    if (!shared) own = make_provider(o);
    const std::string candidate = llm::generate_tikz_llm(shared ? *shared : *own, sol, spec);
    const auto findings = tikz::lint(candidate);
    if (findings.empty()) return candidate;
    io.err << fmt::format("warning: provider TikZ failed lint ({} finding{}, first: line {}: {}); using the "
                          "deterministic emitter\n",
                          findings.size(), findings.size() == 1 ? "" : "s", findings.front().line,
                          findings.front().message);
    return deterministic;
}

inline int cmd_render(const Options& o, Streams io) {
    const auto spec = load_spec(o.spec_path, io);
    if (!spec) return kInvalidSpec;
    const auto sol = solver::solution_from_json(read_file(o.solution_path));
    if (!sol.solved()) {
        io.err << fmt::format("error: solution status is {}, only Solved solutions can be rendered\n", sol.status);
        return kNotSolved;
    }
    std::string text;
    try {
        text = render_text(o, *spec, sol, io);
    } catch (const tikz::NotSolved& e) {
        io.err << "error: " << e.what() << '\n';
        return kNotSolved;
    }
    write_file(o.output.empty() ? sibling(o.spec_path, ".tikz") : fs::path(o.output), text);
    return kOk;
}

inline nlohmann::ordered_json config_json(const Options& o) {
    const auto s = solver_config(o);
    const auto e = emit_config(o);
    const auto p = provider_config(o);
    nlohmann::ordered_json j;
    j["solver"] = {{"tolerance", s.tolerance},
                   {"canvas", {s.canvas.x_min, s.canvas.y_min, s.canvas.x_max, s.canvas.y_max}},
                   {"d_min", s.d_min},
                   {"penalty_weight", s.penalty_weight},
                   {"max_starts", s.max_starts},
                   {"max_refine_iters", s.max_refine_iters},
                   {"time_budget", s.time_budget},
                   {"rng_seed", s.rng_seed},
                   {"grid_resolution", s.grid_resolution}};
    j["emit"] = {{"target_size", e.target_size},
                 {"decimal_places", e.decimal_places},
                 {"auto_right_angle", e.auto_right_angle},
                 {"dot_radius", e.dot_radius},
                 {"line_width", e.line_width}};
    j["provider"] = {{"kind", o.provider_kind},         {"endpoint", p.endpoint},
                     {"model_name", p.model_name},      {"api_key_env", p.api_key_env},
                     {"temperature", p.temperature},    {"max_tokens", p.max_tokens},
                     {"timeout", p.timeout},            {"transcript_path", p.transcript_path},
                     {"manual", o.manual_path},         {"max_iters", o.max_iters},
                     {"use_llm_render", o.use_llm}};
    return j;
}

inline std::string problem_text(const std::string& arg) {
    if (!arg.empty() && arg.front() == '@') return read_file(arg.substr(1));
    return arg;
}

inline int cmd_pipeline(const Options& o, Streams io) {
    using Clock = std::chrono::steady_clock;
    const std::string problem = problem_text(o.problem);
    const auto man = manual(o);
    if (o.dry_run) {
        llm::Provider offline(provider_config(o), nullptr, std::nullopt);
        io.out << llm::request_text(llm::formalize_request(offline, problem, man, nullptr));
        return kOk;
    }
    const auto scfg = solver_config(o);
    const fs::path dir(o.out_dir);
    nlohmann::ordered_json manifest;
    manifest["input"] = problem;
    manifest["seed"] = o.seed;
    manifest["config"] = config_json(o);
    manifest["artifacts"] = nlohmann::ordered_json::array();
    manifest["timings"] = nlohmann::ordered_json::object();
    const auto record = [&](const std::string& name, const std::string& bytes) {
        write_file(dir / name, bytes);
        manifest["artifacts"].push_back(name);
    };
    const auto finish = [&](int code) {
        manifest["exit_code"] = code;
        manifest["artifacts"].push_back("manifest.json");
        write_file(dir / "manifest.json", manifest.dump(2) + "\n");
        return code;
    };

    auto provider = make_provider(o);
    auto t0 = Clock::now();
    const llm::LoopResult loop = llm::formalize_loop(*provider, problem, man, scfg, o.max_iters);
    manifest["timings"]["formalize_and_solve"] = std::chrono::duration<double>(Clock::now() - t0).count();
    manifest["provider_calls"] = loop.calls;
    if (!loop.ok()) {
        record("spec.geo", loop.source);
        record("feedback.txt", verify::render_feedback(*loop.feedback));
        io.err << fmt::format("error: no valid spec after {} attempt{}\n", loop.calls, loop.calls == 1 ? "" : "s");
        return finish(kLoopExhausted);
    }
    if (o.verbose) io.err << fmt::format("formalized in {} call(s)\n", loop.calls);
    record("spec.geo", loop.source);
    const std::string solution_json = solver::to_json(*loop.solution);
    record("solution.json", solution_json);
    t0 = Clock::now();
    const auto sol = solver::solution_from_json(solution_json);
    record("diagram.tikz", render_text(o, *loop.spec, sol, io, provider.get()));
    manifest["timings"]["render"] = std::chrono::duration<double>(Clock::now() - t0).count();
    return finish(kOk);
}

namespace detail {

/// Parses `statement` (a constraint or draw without its keyword) in the
/// context of `spec`'s declarations.
inline std::optional<lang::GeoSpec> with_statement(const lang::GeoSpec& spec, std::string_view keyword,
                                                   const std::string& statement, Streams io) {
    auto r = lang::parse(lang::pretty_print(spec) + std::string(keyword) + " " + statement + "\n");
    if (!r.ok()) {
        for (const auto& e : r.errors) io.out << e.format() << '\n';
        return std::nullopt;
    }
    return std::move(r.spec);
}

}  // namespace detail

/// Applies structured edits. Draw edits re-render the existing solution;
/// --set replaces the constraint with the same kind and points (or adds it)
/// and re-solves warm-started from the previous solution.
inline int cmd_edit(const Options& o, Streams io) {
    auto spec = load_spec(o.spec_path, io);
    if (!spec) return kInvalidSpec;
    auto sol = solver::solution_from_json(read_file(o.solution_path));
    if (o.add_draws.empty() && o.remove_draws.empty() && o.sets.empty()) {
        io.err << "error: nothing to edit; pass --add-draw, --remove-draw or --set\n";
        return kUsage;
    }
    for (const auto& d : o.add_draws) {
        auto next = detail::with_statement(*spec, "draw", d, io);
        if (!next) return kInvalidSpec;
        spec->draws.push_back(next->draws.back());
    }
    for (const auto& d : o.remove_draws) {
        auto probe = detail::with_statement(*spec, "draw", d, io);
        if (!probe) return kInvalidSpec;
        const auto& target = probe->draws.back();
        auto it = std::find(spec->draws.begin(), spec->draws.end(), target);
        if (it == spec->draws.end()) {
            io.err << fmt::format("error: no directive 'draw {}' to remove\n", lang::format_draw(target));
            return kInvalidSpec;
        }
        spec->draws.erase(it);
    }
    for (const auto& s : o.sets) {
        auto probe = detail::with_statement(*spec, "constrain", s, io);
        if (!probe) return kInvalidSpec;
        const lang::Constraint c = probe->constraints.back();
        auto it = std::find_if(spec->constraints.begin(), spec->constraints.end(), [&](const lang::Constraint& x) {
            return x.kind == c.kind && x.point_args == c.point_args;
        });
        if (it != spec->constraints.end()) *it = c;
        else spec->constraints.push_back(c);
    }
    // Re-parse so source lines match the file we are about to write.
    const std::string text = lang::pretty_print(*spec);
    auto reparsed = lang::parse(text);
    if (!reparsed.ok()) {
        for (const auto& e : reparsed.errors) io.out << e.format() << '\n';
        return kInvalidSpec;
    }
    spec = std::move(reparsed.spec);
    write_file(o.spec_path, text);

    if (!o.sets.empty()) {
        const auto rep = solver::solve(solver::gauge_fix(*spec), solver_config(o), sol.assignment);
        const std::string json = solver::to_json(rep);
        write_file(o.solution_path, json);
        if (o.verbose)
            io.err << fmt::format("re-solved: {} in {} iterations\n", solver::status_name(rep.status),
                                  rep.refine_iterations);
        if (rep.status != solver::SolveStatus::Solved) return exit_for(rep.status);
        sol = solver::solution_from_json(json);
    }
    if (!sol.solved()) {
        io.err << fmt::format("error: solution status is {}, only Solved solutions can be rendered\n", sol.status);
        return kNotSolved;
    }
    try {
        write_file(o.output.empty() ? sibling(o.spec_path, ".tikz") : fs::path(o.output), render_text(o, *spec, sol, io));
    } catch (const tikz::NotSolved& e) {
        io.err << "error: " << e.what() << '\n';
        return kNotSolved;
    }
    return kOk;
}

inline void add_solver_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--tolerance", o.solver.tolerance, "max |residual| accepted as solved")->capture_default_str();
    cmd->add_option("--budget", o.solver.time_budget, "wall-clock budget in seconds")->capture_default_str();
    cmd->add_option("--max-starts", o.solver.max_starts, "random starts before the grid fallback")
        ->capture_default_str();
    cmd->add_option("--d-min", o.solver.d_min, "minimum separation of distinct points")->capture_default_str();
}

inline void add_emit_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--target-size", o.emit.target_size, "diagram size in TikZ units")->capture_default_str();
    cmd->add_option("--decimals", o.emit.decimal_places, "digits after the decimal point")->capture_default_str();
    cmd->add_flag("--no-right-angles", o.no_right_angles, "do not mark perpendicular corners");
}

inline void add_provider_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--provider", o.provider_kind, "mock or openai")
        ->check(CLI::IsMember({"mock", "openai"}))
        ->capture_default_str();
    cmd->add_option("--transcript", o.provider.transcript_path, "mock transcript (JSON)");
    cmd->add_option("--endpoint", o.provider.endpoint, "chat-completions URL");
    cmd->add_option("--model", o.provider.model_name, "model name")->capture_default_str();
    cmd->add_option("--api-key-env", o.provider.api_key_env, "environment variable holding the API key")
        ->capture_default_str();
    cmd->add_option("--temperature", o.provider.temperature)->capture_default_str();
    cmd->add_option("--max-tokens", o.provider.max_tokens)->capture_default_str();
    cmd->add_option("--timeout", o.provider.timeout, "provider timeout in seconds")->capture_default_str();
    cmd->add_option("--manual", o.manual_path, "prompt manual override (JSON)");
}

/// Entry point shared by the executable and the tests.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    Streams io{out, err};
    Options o;
    CLI::App app{"magicgeo: geometry problem text to solved coordinates to TikZ"};
    app.name("magicgeo");
    app.fallthrough();
    app.require_subcommand(1);
    app.set_config("--config", "", "config file (key = value, optional [command] sections)");
    app.add_option("--seed", o.seed, "solver RNG seed")->capture_default_str();
    app.add_flag("-v,--verbose", o.verbose, "progress on stderr");
    app.add_option("--cache-dir", o.cache_dir, "provider response cache directory");

    auto* check = app.add_subcommand("check", "validate a spec");
    check->add_option("spec", o.spec_path)->required();

    auto* solve = app.add_subcommand("solve", "solve a spec and write its solution JSON");
    solve->add_option("spec", o.spec_path)->required();
    solve->add_option("-o,--output", o.output, "solution path (default: <spec>.solution.json)");
    add_solver_flags(solve, o);

    auto* render = app.add_subcommand("render", "render a solved spec as TikZ");
    render->add_option("spec", o.spec_path)->required();
    render->add_option("solution", o.solution_path)->required();
    render->add_option("-o,--output", o.output, "TikZ path (default: <spec>.tikz)");
    render->add_flag("--llm", o.use_llm, "ask the provider for TikZ, falling back when it fails lint");
    add_emit_flags(render, o);
    add_provider_flags(render, o);

    auto* pipeline = app.add_subcommand("pipeline", "problem text to spec, solution and TikZ");
    pipeline->add_option("problem", o.problem, "problem text, or @file")->required();
    pipeline->add_option("--out-dir", o.out_dir, "artifact directory")->capture_default_str();
    pipeline->add_option("--max-iters", o.max_iters, "formalization attempts")
        ->check(CLI::Range(1, 100))
        ->capture_default_str();
    pipeline->add_flag("--dry-run", o.dry_run, "print the first prompt and stop");
    pipeline->add_flag("--llm", o.use_llm, "ask the provider for the TikZ as well");
    add_solver_flags(pipeline, o);
    add_emit_flags(pipeline, o);
    add_provider_flags(pipeline, o);

    auto* edit = app.add_subcommand("edit", "edit a solved spec in place and re-render");
    edit->add_option("spec", o.spec_path)->required();
    edit->add_option("solution", o.solution_path)->required();
    edit->add_option("-o,--output", o.output, "TikZ path (default: <spec>.tikz)");
    edit->add_option("--add-draw", o.add_draws, "e.g. \"segment(A, C)\"");
    edit->add_option("--remove-draw", o.remove_draws, "e.g. \"segment(A, C)\"");
    edit->add_option("--set", o.sets, "e.g. \"angle_deg(A, B, C, 60)\"");
    add_solver_flags(edit, o);
    add_emit_flags(edit, o);
    add_provider_flags(edit, o);

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    try {
        if (check->parsed()) return cmd_check(o, io);
        if (solve->parsed()) return cmd_solve(o, io);
        if (render->parsed()) return cmd_render(o, io);
        if (pipeline->parsed()) return cmd_pipeline(o, io);
        return cmd_edit(o, io);
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const llm::ProviderError& e) {
        err << "error: provider: " << e.what() << '\n';
        return kProvider;
    } catch (const geom::DegenerateEvaluation& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidSpec;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::runtime_error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
}

inline int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(std::move(args), out, err);
}

}  // namespace magicgeo::cli
