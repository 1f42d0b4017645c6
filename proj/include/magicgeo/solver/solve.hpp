#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "magicgeo/geom/residual.hpp"
#include "magicgeo/lang/types.hpp"
#include "magicgeo/solver/model.hpp"
#include "magicgeo/solver/refine.hpp"
#include "magicgeo/solver/types.hpp"

namespace magicgeo::solver {

namespace detail {

struct Candidate {
    Eigen::VectorXd x;
    Model::Eval eval;
    bool accepted = false;
};

struct SearchStats {
    int starts = 0;
    int polishes = 0;
    long iterations = 0;
};

// Keeps the best candidate seen; earlier candidates win ties.
inline void consider(std::optional<Candidate>& best, const Model& model, const RefineResult& rr) {
    if (!rr.valid) return;
    const bool acc = model.accepted(rr.eval);
    if (!best || (acc && !best->accepted) || (acc == best->accepted && rr.eval.objective < best->eval.objective))
        best = Candidate{rr.x, rr.eval, acc};
}

inline SolveReport make_report(const Model& model, const Candidate& c, SolveStatus status, const SearchStats& stats,
                               Deadline::Clock::time_point started) {
    SolveReport rep;
    rep.status = status;
    rep.assignment = model.unpack(c.x);
    rep.penalty = c.eval.penalty;
    rep.starts_used = stats.starts;
    rep.grid_polishes = stats.polishes;
    rep.refine_iterations = stats.iterations;
    rep.seed = model.config().rng_seed;
    const auto& spec = model.spec();
    std::map<std::size_t, WorstEntry> per_constraint;
    for (std::size_t i = 0; i < model.rows().size(); ++i) {
        const auto& row = model.rows()[i];
        const double v = c.eval.r[static_cast<Eigen::Index>(i)];
        rep.residuals.values.push_back(v);
        rep.residuals.lines.push_back(row.source_line);
        auto [it, fresh] = per_constraint.try_emplace(
            row.constraint_index, WorstEntry{row.source_line, v, spec.constraints[row.constraint_index].kind});
        if (!fresh && std::abs(v) > std::abs(it->second.value)) it->second.value = v;
    }
    for (const auto& [idx, entry] : per_constraint) rep.worst.push_back(entry);
    std::stable_sort(rep.worst.begin(), rep.worst.end(),
                     [](const WorstEntry& a, const WorstEntry& b) { return std::abs(a.value) > std::abs(b.value); });
    rep.elapsed = std::chrono::duration<double>(Deadline::Clock::now() - started).count();
    return rep;
}

/// Depth-first assignment of grid-traversed points to cell centers with
/// pruning; every surviving leaf is polished. Returns true when a polished
/// leaf is accepted.
class GridSearch {
  public:
    GridSearch(const Model& model, const Deadline& deadline, SearchStats& stats, std::optional<Candidate>& best)
        : model_(model), deadline_(deadline), stats_(stats), best_(best) {}

    // `fixed` marks points that keep their value from `base` instead of being
    // enumerated (pinned points are always fixed).
    bool run(Eigen::VectorXd base, const std::vector<bool>& fixed) {
        const auto& spec = model_.spec();
        const auto& cfg = model_.config();
        std::vector<int> depth_of(spec.points.size(), -1);
        for (std::size_t i = 0; i < spec.points.size(); ++i) {
            if (model_.point_var(i) >= 0 && !fixed[i]) {
                depth_of[i] = static_cast<int>(order_.size()) + 1;
                order_.push_back(i);
            }
        }
        // Rows whose arguments are all pinned or grid-assigned are checked as
        // soon as their last point is placed; rows touching free scalars or
        // refinable preset points are left to the polish step.
        checks_.assign(order_.size() + 1, {});
        for (std::size_t r = 0; r < model_.rows().size(); ++r) {
            const auto& row = model_.rows()[r];
            bool prunable = std::none_of(row.scalars.begin(), row.scalars.end(), [](const auto& s) { return s.var >= 0; });
            int ready = 0;
            for (int p : row.points) {
                const auto pi = static_cast<std::size_t>(p);
                if (model_.point_var(pi) < 0) continue;
                if (depth_of[pi] < 0) prunable = false;
                ready = std::max(ready, depth_of[pi]);
            }
            if (prunable) checks_[static_cast<std::size_t>(ready)].push_back(r);
        }
        const double cell_w = (cfg.canvas.x_max - cfg.canvas.x_min) / cfg.grid_resolution;
        const double cell_h = (cfg.canvas.y_max - cfg.canvas.y_min) / cfg.grid_resolution;
        slack_ = 10.0 * cfg.tolerance + std::hypot(cell_w, cell_h);
        cell_w_ = cell_w;
        cell_h_ = cell_h;
        x_ = std::move(base);
        // Relations among pinned points alone can never be repaired.
        if (!passes(0, cfg.tolerance)) return false;
        return descend(0);
    }

    bool timed_out() const { return timed_out_; }

  private:
    bool passes(std::size_t depth, double threshold) const {
        const auto pts = model_.coordinates(x_);
        for (std::size_t r : checks_[depth]) {
            try {
                if (std::abs(model_.evaluate_row(model_.rows()[r], pts, x_).value) > threshold) return false;
            } catch (const geom::DegenerateEvaluation&) {
                return false;
            }
        }
        return true;
    }

    bool descend(std::size_t level) {
        if (deadline_.expired()) {
            timed_out_ = true;
            return false;
        }
        if (level == order_.size()) {
            RefineResult rr = refine_state(model_, x_, deadline_);
            ++stats_.polishes;
            stats_.iterations += rr.iterations;
            consider(best_, model_, rr);
            if (rr.timed_out) timed_out_ = true;
            return rr.valid && model_.accepted(rr.eval);
        }
        const auto& cfg = model_.config();
        const int v = model_.point_var(order_[level]);
        for (int i = 0; i < cfg.grid_resolution; ++i) {
            for (int j = 0; j < cfg.grid_resolution; ++j) {
                x_[v] = cfg.canvas.x_min + (i + 0.5) * cell_w_;
                x_[v + 1] = cfg.canvas.y_min + (j + 0.5) * cell_h_;
                if (!passes(level + 1, slack_)) continue;
                if (descend(level + 1)) return true;
                if (timed_out_) return false;
            }
        }
        return false;
    }

    const Model& model_;
    const Deadline& deadline_;
    SearchStats& stats_;
    std::optional<Candidate>& best_;
    std::vector<std::size_t> order_;
    std::vector<std::vector<std::size_t>> checks_;
    Eigen::VectorXd x_;
    double slack_ = 0.0;
    double cell_w_ = 0.0;
    double cell_h_ = 0.0;
    bool timed_out_ = false;
};

inline SolveStatus final_status(const std::optional<Candidate>& best, bool timed_out) {
    if (best && best->accepted) return SolveStatus::Solved;
    return timed_out ? SolveStatus::TimedOut : SolveStatus::Unsat;
}

// Fallback when nothing valid was ever evaluated: report the midpoint start.
inline Candidate placeholder(const Model& model) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(model.n_vars());
    const auto& c = model.config().canvas;
    for (int v = 0; v < model.n_point_vars(); v += 2) {
        x[v] = 0.5 * (c.x_min + c.x_max);
        x[v + 1] = 0.5 * (c.y_min + c.y_max);
    }
    Candidate cand{x, {}, false};
    cand.eval.r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.n_residuals()));
    return cand;
}

inline SolveReport grid_phase(const Model& model, const Eigen::VectorXd& base, const std::vector<bool>& fixed,
                              const Deadline& deadline, SearchStats& stats, std::optional<Candidate>& best,
                              Deadline::Clock::time_point started) {
    GridSearch search(model, deadline, stats, best);
    search.run(base, fixed);
    const SolveStatus status = final_status(best, search.timed_out());
    return make_report(model, best ? *best : placeholder(model), status, stats, started);
}

}  // namespace detail

/// Literal variable traversal: free points (declaration order) visit every
/// grid cell center, branches are pruned once a fully assigned constraint
/// exceeds the relaxed tolerance, and surviving assignments are polished.
/// Points present in `partial` keep their values instead of being enumerated;
/// free scalars start from `partial` or their interval midpoint.
inline SolveReport grid_traverse(const lang::GeoSpec& spec, const SolverConfig& cfg, const geom::Assignment& partial) {
    cfg.check();
    const auto started = Deadline::Clock::now();
    const Deadline deadline(started, cfg.time_budget);
    Model model(spec, cfg);
    Eigen::VectorXd base = Eigen::VectorXd::Zero(model.n_vars());
    std::vector<bool> fixed(spec.points.size(), false);
    for (std::size_t i = 0; i < spec.points.size(); ++i) {
        const int v = model.point_var(i);
        auto it = partial.points.find(spec.points[i].name);
        if (v < 0 || it == partial.points.end()) continue;
        base[v] = it->second.x;
        base[v + 1] = it->second.y;
        fixed[i] = true;
    }
    geom::Assignment scalars_only;
    scalars_only.scalars = partial.scalars;
    for (std::size_t i = 0; i < spec.points.size(); ++i) {
        const int v = model.point_var(i);
        scalars_only.points[spec.points[i].name] = v >= 0 ? geom::Vec2{base[v], base[v + 1]} : geom::Vec2{};
    }
    const Eigen::VectorXd packed = model.pack(scalars_only);
    base.tail(model.n_vars() - model.n_point_vars()) = packed.tail(model.n_vars() - model.n_point_vars());
    detail::SearchStats stats;
    std::optional<detail::Candidate> best;
    return detail::grid_phase(model, base, fixed, deadline, stats, best, started);
}

/// Multi-start damped least squares, then the grid traversal if every start
/// fails. Deterministic for a given (spec, cfg): start i draws from its own
/// seeded stream and the lowest accepted start index wins. `warm_start`, when
/// given, replaces the sample of start 0.
inline SolveReport solve(const lang::GeoSpec& spec, const SolverConfig& cfg,
                         const std::optional<geom::Assignment>& warm_start = std::nullopt) {
    cfg.check();
    const auto started = Deadline::Clock::now();
    const Deadline deadline(started, cfg.time_budget);
    Model model(spec, cfg);
    detail::SearchStats stats;
    std::optional<detail::Candidate> best;

    if (model.n_vars() == 0) {
        Eigen::VectorXd x(0);
        detail::Candidate c{x, {}, false};
        try {
            c.eval = model.evaluate(x, nullptr);
            c.accepted = model.accepted(c.eval);
        } catch (const geom::DegenerateEvaluation&) {
            c = detail::placeholder(model);
        }
        return detail::make_report(model, c, c.accepted ? SolveStatus::Solved : SolveStatus::Unsat, stats, started);
    }

    bool timed_out = false;
    for (int s = 0; s < cfg.max_starts; ++s) {
        if (s > 0 && deadline.expired()) {
            timed_out = true;
            break;
        }
        Eigen::VectorXd x0;
        if (s == 0 && warm_start) {
            x0 = model.pack(*warm_start);
        } else {
            auto rng = start_rng(cfg.rng_seed, static_cast<std::uint64_t>(s));
            x0 = model.sample(rng);
        }
        RefineResult rr = refine_state(model, std::move(x0), deadline);
        ++stats.starts;
        stats.iterations += rr.iterations;
        detail::consider(best, model, rr);
        if (best && best->accepted)
            return detail::make_report(model, *best, SolveStatus::Solved, stats, started);
        if (rr.timed_out) {
            timed_out = true;
            break;
        }
    }
    if (timed_out) return detail::make_report(model, best ? *best : detail::placeholder(model), SolveStatus::TimedOut, stats, started);

    Eigen::VectorXd base = Eigen::VectorXd::Zero(model.n_vars());
    {
        geom::Assignment mid;
        for (const auto& p : spec.points) mid.points[p.name] = {};
        const Eigen::VectorXd packed = model.pack(mid);
        base = packed;
    }
    return detail::grid_phase(model, base, std::vector<bool>(spec.points.size(), false), deadline, stats, best, started);
}

}  // namespace magicgeo::solver
