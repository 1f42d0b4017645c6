#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "magicgeo/geom/residual.hpp"
#include "magicgeo/solver/model.hpp"
#include "magicgeo/solver/types.hpp"

namespace magicgeo::solver {

struct RefineResult {
    Eigen::VectorXd x;
    Model::Eval eval;
    int iterations = 0;
    bool timed_out = false;
    bool valid = true;            // false when even the start was degenerate
    std::vector<double> trace;    // objective after the start and each accepted step
};

/// Damped Gauss-Newton (Levenberg-Marquardt with Nielsen's damping update) on
/// the penalized objective. Accepts a step only on strict decrease, clamps free
/// scalars after each step and treats degenerate trial points as rejections.
inline RefineResult refine_state(const Model& model, Eigen::VectorXd x, const Deadline& deadline,
                                 bool record_trace = false) {
    const SolverConfig& cfg = model.config();
    // Deep convergence keeps solutions well inside the acceptance tolerance.
    const double target = 1e-6 * cfg.tolerance;
    RefineResult out;
    model.clamp(x);
    Eigen::MatrixXd jac;
    Model::Eval cur;
    try {
        cur = model.evaluate(x, &jac);
    } catch (const geom::DegenerateEvaluation&) {
        out.x = std::move(x);
        out.valid = false;
        return out;
    }
    if (record_trace) out.trace.push_back(cur.objective);

    const Eigen::Index n = x.size();
    double lambda = -1.0;
    double nu = 2.0;
    int rejects = 0;
    while (true) {
        if (cur.max_constraint <= target && cur.penalty == 0.0) break;
        if (out.iterations >= cfg.max_refine_iters) break;
        if (deadline.expired()) {
            out.timed_out = true;
            break;
        }
        if (n == 0) break;
        ++out.iterations;
        const Eigen::MatrixXd a = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * cur.r;
        if (lambda < 0.0) lambda = 1e-3 * std::max(1.0, a.diagonal().maxCoeff());
        Eigen::MatrixXd h = a;
        h.diagonal().array() += lambda;
        Eigen::VectorXd step = h.ldlt().solve(-g);
        bool accept = false;
        if (step.allFinite()) {
            if (step.norm() <= 1e-15 * (x.norm() + 1e-15)) break;
            Eigen::VectorXd trial = x + step;
            model.clamp(trial);
            const Eigen::VectorXd taken = trial - x;
            Eigen::MatrixXd trial_jac;
            try {
                Model::Eval next = model.evaluate(trial, &trial_jac);
                if (next.objective < cur.objective) {
                    const double predicted = -2.0 * taken.dot(g) - taken.dot(a * taken);
                    const double rho = predicted > 0.0 ? (cur.objective - next.objective) / predicted : 0.0;
                    lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
                    nu = 2.0;
                    x = std::move(trial);
                    jac = std::move(trial_jac);
                    cur = std::move(next);
                    accept = true;
                    if (record_trace) out.trace.push_back(cur.objective);
                }
            } catch (const geom::DegenerateEvaluation&) {
            }
        }
        if (accept) {
            rejects = 0;
            continue;
        }
        ++rejects;
        lambda *= nu;
        nu *= 2.0;
        // Already acceptable and numerically stuck: further rejections only burn iterations.
        if (model.accepted(cur) && rejects >= 3) break;
        if (rejects >= 40 || !std::isfinite(lambda)) break;
    }
    out.x = std::move(x);
    out.eval = std::move(cur);
    return out;
}

struct RefineOutcome {
    geom::Assignment assignment;
    geom::ResidualVector residuals;
    int iterations = 0;
    std::vector<double> trace;
};

/// Polishes `start` (which must assign every free variable) and returns the
/// final assignment with its residuals.
inline RefineOutcome refine(const lang::GeoSpec& spec, const geom::Assignment& start, const SolverConfig& cfg) {
    cfg.check();
    Model model(spec, cfg);
    RefineResult rr = refine_state(model, model.pack(start), Deadline(cfg.time_budget), true);
    RefineOutcome out;
    out.assignment = model.unpack(rr.x);
    out.iterations = rr.iterations;
    out.trace = std::move(rr.trace);
    const auto pts = model.coordinates(rr.x);
    for (const auto& row : model.rows()) {
        out.residuals.values.push_back(model.evaluate_row(row, pts, rr.x).value);
        out.residuals.lines.push_back(row.source_line);
    }
    return out;
}

}  // namespace magicgeo::solver
