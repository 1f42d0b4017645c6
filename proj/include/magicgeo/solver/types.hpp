#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "magicgeo/geom/residual.hpp"
#include "magicgeo/lang/types.hpp"

namespace magicgeo::solver {

struct Canvas {
    double x_min = 0.0, y_min = 0.0, x_max = 10.0, y_max = 10.0;
};

struct SolverConfig {
    double tolerance = 1e-6;  // max |residual| for acceptance, canvas units
    Canvas canvas;
    double d_min = 0.5;  // minimum point separation
    double penalty_weight = 1e-2;
    int max_starts = 200;
    int max_refine_iters = 500;  // per start
    double time_budget = 30.0;   // wall-clock seconds
    std::uint64_t rng_seed = 0;
    int grid_resolution = 24;  // cells per axis in the fallback traversal

    void check() const {
        if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
        if (max_starts < 1) throw std::invalid_argument("max_starts must be at least 1");
        if (!(time_budget > 0.0)) throw std::invalid_argument("time_budget must be positive");
        if (grid_resolution < 2) throw std::invalid_argument("grid_resolution must be at least 2");
        if (!(d_min > 0.0)) throw std::invalid_argument("d_min must be positive");
        if (!(penalty_weight >= 0.0)) throw std::invalid_argument("penalty_weight must be non-negative");
        if (max_refine_iters < 1) throw std::invalid_argument("max_refine_iters must be at least 1");
        if (!(canvas.x_max > canvas.x_min && canvas.y_max > canvas.y_min))
            throw std::invalid_argument("canvas must have positive extent");
    }
};

enum class SolveStatus { Solved, Unsat, TimedOut };

inline std::string_view status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Solved: return "Solved";
        case SolveStatus::Unsat: return "Unsat";
        case SolveStatus::TimedOut: return "TimedOut";
    }
    return "Unsat";
}

/// One entry per source constraint (rows of multi-row constraints are folded
/// into the worst of them).
struct WorstEntry {
    int line = 0;
    double value = 0.0;
    lang::ConstraintKind kind = lang::ConstraintKind::Length;
};

struct SolveReport {
    SolveStatus status = SolveStatus::Unsat;
    geom::Assignment assignment;
    geom::ResidualVector residuals;
    std::vector<WorstEntry> worst;  // sorted by |value| descending
    double penalty = 0.0;           // degeneracy penalty of `assignment`
    int starts_used = 0;
    int grid_polishes = 0;
    long refine_iterations = 0;  // summed over every refinement run
    double elapsed = 0.0;
    std::uint64_t seed = 0;

    double max_residual() const { return residuals.max_abs(); }
};

}  // namespace magicgeo::solver
