#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "magicgeo/geom/kernel.hpp"
#include "magicgeo/geom/residual.hpp"
#include "magicgeo/lang/types.hpp"
#include "magicgeo/solver/types.hpp"

namespace magicgeo::solver {

class Deadline {
  public:
    using Clock = std::chrono::steady_clock;

    explicit Deadline(double seconds) : end_(Clock::now() + to_duration(seconds)) {}
    Deadline(Clock::time_point start, double seconds) : end_(start + to_duration(seconds)) {}

    bool expired() const { return Clock::now() >= end_; }

  private:
    static Clock::duration to_duration(double seconds) {
        return std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
    }
    Clock::time_point end_;
};

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform
/// unlike std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Generator for start `index`; starts are independent streams so evaluating
/// them in any order gives the same samples.
inline std::mt19937_64 start_rng(std::uint64_t seed, std::uint64_t index) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(index + 1)));
}

/// The spec compiled to index form over a flat variable vector: free point
/// coordinates (x, y) in declaration order, then free scalars.
class Model {
  public:
    struct ScalarRef {
        int var = -1;        // variable index, or -1 for a constant
        int scalar = -1;     // index into spec scalars, or -1 for a literal
        double value = 0.0;  // constant value when var < 0
    };

    struct CompiledRow {
        lang::ConstraintKind kind;
        int part = 0;
        std::vector<int> points;  // indices into spec points
        std::vector<ScalarRef> scalars;
        int source_line = 0;
        std::size_t constraint_index = 0;
    };

    struct Eval {
        Eigen::VectorXd r;  // constraint rows, then one penalty row per point pair
        double objective = 0.0;
        double max_constraint = 0.0;
        double penalty = 0.0;  // unweighted degeneracy penalty
    };

    Model(const lang::GeoSpec& spec, const SolverConfig& cfg) : spec_(spec), cfg_(cfg) {
        int next = 0;
        for (const auto& p : spec.points) {
            if (p.pin) {
                base_points_.push_back({p.pin->x, p.pin->y});
                point_var_.push_back(-1);
            } else {
                base_points_.push_back({0.0, 0.0});
                point_var_.push_back(next);
                next += 2;
            }
        }
        n_point_vars_ = next;
        for (const auto& s : spec.scalars) {
            if (const auto* v = std::get_if<double>(&s.binding)) {
                scalar_value_.push_back(*v);
                scalar_var_.push_back(-1);
            } else {
                const auto& b = std::get<lang::FreeBounds>(s.binding);
                scalar_value_.push_back(0.5 * (b.lo + b.hi));
                scalar_var_.push_back(next++);
                bounds_.push_back(b);
            }
        }
        n_vars_ = next;
        for (const auto& row : geom::expand(spec)) {
            CompiledRow cr{row.constraint.kind, row.part, {}, {}, row.constraint.source_line, row.constraint_index};
            for (const auto& name : row.constraint.point_args) cr.points.push_back(point_index(name));
            for (const auto& arg : row.constraint.scalar_args) {
                ScalarRef ref;
                if (const auto* lit = std::get_if<double>(&arg)) {
                    ref.value = *lit;
                } else {
                    ref.scalar = scalar_index(std::get<std::string>(arg));
                    ref.var = scalar_var_[static_cast<std::size_t>(ref.scalar)];
                    ref.value = scalar_value_[static_cast<std::size_t>(ref.scalar)];
                }
                cr.scalars.push_back(ref);
            }
            rows_.push_back(std::move(cr));
        }
        const std::size_t n = spec.points.size();
        n_pairs_ = n * (n - (n > 0 ? 1 : 0)) / 2;
    }

    const lang::GeoSpec& spec() const { return spec_; }
    const SolverConfig& config() const { return cfg_; }
    int n_vars() const { return n_vars_; }
    int n_point_vars() const { return n_point_vars_; }
    const std::vector<CompiledRow>& rows() const { return rows_; }
    std::size_t n_residuals() const { return rows_.size() + n_pairs_; }
    int point_var(std::size_t point) const { return point_var_[point]; }

    int point_index(const std::string& name) const {
        for (std::size_t i = 0; i < spec_.points.size(); ++i)
            if (spec_.points[i].name == name) return static_cast<int>(i);
        throw std::invalid_argument("unknown point '" + name + "'");
    }
    int scalar_index(const std::string& name) const {
        for (std::size_t i = 0; i < spec_.scalars.size(); ++i)
            if (spec_.scalars[i].name == name) return static_cast<int>(i);
        throw std::invalid_argument("unknown scalar '" + name + "'");
    }

    std::vector<geom::Vec2> coordinates(const Eigen::VectorXd& x) const {
        std::vector<geom::Vec2> pts = base_points_;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const int v = point_var_[i];
            if (v >= 0) pts[i] = {x[v], x[v + 1]};
        }
        return pts;
    }

    Eigen::VectorXd pack(const geom::Assignment& a) const {
        Eigen::VectorXd x(n_vars_);
        for (std::size_t i = 0; i < spec_.points.size(); ++i) {
            const int v = point_var_[i];
            if (v < 0) continue;
            const geom::Vec2 p = a.points.at(spec_.points[i].name);
            x[v] = p.x;
            x[v + 1] = p.y;
        }
        for (std::size_t j = 0; j < spec_.scalars.size(); ++j) {
            const int v = scalar_var_[j];
            if (v < 0) continue;
            auto it = a.scalars.find(spec_.scalars[j].name);
            x[v] = it != a.scalars.end() ? it->second : scalar_value_[j];
        }
        clamp(x);
        return x;
    }

    geom::Assignment unpack(const Eigen::VectorXd& x) const {
        geom::Assignment a;
        const auto pts = coordinates(x);
        for (std::size_t i = 0; i < pts.size(); ++i) a.points[spec_.points[i].name] = pts[i];
        for (std::size_t j = 0; j < spec_.scalars.size(); ++j) {
            const int v = scalar_var_[j];
            a.scalars[spec_.scalars[j].name] = v >= 0 ? x[v] : scalar_value_[j];
        }
        return a;
    }

    void clamp(Eigen::VectorXd& x) const {
        for (std::size_t k = 0; k < bounds_.size(); ++k) {
            const int v = n_point_vars_ + static_cast<int>(k);
            x[v] = std::clamp(x[v], bounds_[k].lo, bounds_[k].hi);
        }
    }

    /// Free coordinates uniform in the canvas, free scalars uniform in bounds.
    Eigen::VectorXd sample(std::mt19937_64& rng) const {
        Eigen::VectorXd x(n_vars_);
        const auto& c = cfg_.canvas;
        for (int v = 0; v < n_point_vars_; v += 2) {
            x[v] = c.x_min + (c.x_max - c.x_min) * uniform01(rng);
            x[v + 1] = c.y_min + (c.y_max - c.y_min) * uniform01(rng);
        }
        for (std::size_t k = 0; k < bounds_.size(); ++k)
            x[n_point_vars_ + static_cast<int>(k)] = bounds_[k].lo + (bounds_[k].hi - bounds_[k].lo) * uniform01(rng);
        return x;
    }

    /// Evaluates one compiled row at the given coordinates. Throws
    /// geom::DegenerateEvaluation.
    geom::RowEval evaluate_row(const CompiledRow& row, const std::vector<geom::Vec2>& pts, const Eigen::VectorXd& x) const {
        std::array<geom::Vec2, geom::kMaxPointArgs> p{};
        std::array<double, 1> s{};
        for (std::size_t k = 0; k < row.points.size(); ++k) p[k] = pts[static_cast<std::size_t>(row.points[k])];
        for (std::size_t k = 0; k < row.scalars.size(); ++k)
            s[k] = row.scalars[k].var >= 0 ? x[row.scalars[k].var] : row.scalars[k].value;
        try {
            return geom::evaluate_row(row.kind, row.part, std::span<const geom::Vec2>(p.data(), row.points.size()),
                                      std::span<const double>(s.data(), row.scalars.size()));
        } catch (const geom::DegenerateSlots& d) {
            std::vector<std::string> names;
            for (int slot : d.slots)
                names.push_back(spec_.points[static_cast<std::size_t>(row.points[static_cast<std::size_t>(slot)])].name);
            throw geom::DegenerateEvaluation(std::string(lang::kind_name(row.kind)), std::move(names), row.source_line,
                                             d.why);
        }
    }

    /// Residuals of the penalized least-squares objective and, optionally, its
    /// Jacobian (n_residuals x n_vars).
    Eval evaluate(const Eigen::VectorXd& x, Eigen::MatrixXd* jac) const {
        Eval e;
        e.r.resize(static_cast<Eigen::Index>(n_residuals()));
        if (jac) jac->setZero(static_cast<Eigen::Index>(n_residuals()), n_vars_);
        const auto pts = coordinates(x);
        Eigen::Index i = 0;
        for (const auto& row : rows_) {
            const geom::RowEval re = evaluate_row(row, pts, x);
            e.r[i] = re.value;
            e.max_constraint = std::max(e.max_constraint, std::abs(re.value));
            if (jac) {
                for (std::size_t k = 0; k < row.points.size(); ++k) {
                    const int v = point_var_[static_cast<std::size_t>(row.points[k])];
                    if (v < 0) continue;
                    (*jac)(i, v) += re.d_point[k].x;
                    (*jac)(i, v + 1) += re.d_point[k].y;
                }
                for (const auto& ref : row.scalars)
                    if (ref.var >= 0) (*jac)(i, ref.var) += re.d_scalar;
            }
            ++i;
        }
        const double sw = std::sqrt(cfg_.penalty_weight);
        for (std::size_t a = 0; a < pts.size(); ++a) {
            for (std::size_t b = a + 1; b < pts.size(); ++b, ++i) {
                const geom::Vec2 d = pts[a] - pts[b];
                const double dist = geom::norm(d);
                const double gap = cfg_.d_min - dist;
                if (gap <= 0.0) {
                    e.r[i] = 0.0;
                    continue;
                }
                e.penalty += gap * gap;
                e.r[i] = sw * gap;
                if (!jac) continue;
                // Coincident points get an arbitrary separating direction.
                const geom::Vec2 u = dist > 0.0 ? d / dist : geom::Vec2{1.0, 0.0};
                const int va = point_var_[a];
                const int vb = point_var_[b];
                if (va >= 0) {
                    (*jac)(i, va) -= sw * u.x;
                    (*jac)(i, va + 1) -= sw * u.y;
                }
                if (vb >= 0) {
                    (*jac)(i, vb) += sw * u.x;
                    (*jac)(i, vb + 1) += sw * u.y;
                }
            }
        }
        e.objective = e.r.squaredNorm();
        return e;
    }

    bool accepted(const Eval& e) const { return e.max_constraint <= cfg_.tolerance && e.penalty == 0.0; }

  private:
    lang::GeoSpec spec_;
    SolverConfig cfg_;
    std::vector<geom::Vec2> base_points_;
    std::vector<int> point_var_;
    std::vector<double> scalar_value_;
    std::vector<int> scalar_var_;
    std::vector<lang::FreeBounds> bounds_;
    std::vector<CompiledRow> rows_;
    int n_point_vars_ = 0;
    int n_vars_ = 0;
    std::size_t n_pairs_ = 0;
};

}  // namespace magicgeo::solver
