#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "magicgeo/geom/residual.hpp"
#include "magicgeo/solver/types.hpp"

namespace magicgeo::solver {

/// Contents of a solution file as consumed by the renderer and editor.
struct Solution {
    std::string status;
    geom::Assignment assignment;
    double max_residual = 0.0;
    std::vector<std::pair<int, double>> worst;  // (line, value)
    std::uint64_t seed = 0;

    bool solved() const { return status == status_name(SolveStatus::Solved); }
};

inline std::string format_json_real(double v) {
    if (!std::isfinite(v)) throw std::invalid_argument("cannot serialize a non-finite real");
    return fmt::format("{:.17g}", v);
}

/// Serializes a report: keys alphabetical, reals with 17 significant digits,
/// two-space indentation, trailing LF.
inline std::string to_json(const SolveReport& rep) {
    std::string out = "{\n";
    out += fmt::format("  \"max_residual\": {},\n", format_json_real(rep.max_residual()));
    out += "  \"points\": {";
    bool first = true;
    for (const auto& [name, p] : rep.assignment.points) {
        out += fmt::format("{}\n    \"{}\": [{}, {}]", first ? "" : ",", name, format_json_real(p.x), format_json_real(p.y));
        first = false;
    }
    out += first ? "},\n" : "\n  },\n";
    out += "  \"scalars\": {";
    first = true;
    for (const auto& [name, v] : rep.assignment.scalars) {
        out += fmt::format("{}\n    \"{}\": {}", first ? "" : ",", name, format_json_real(v));
        first = false;
    }
    out += first ? "},\n" : "\n  },\n";
    out += fmt::format("  \"seed\": {},\n", rep.seed);
    out += fmt::format("  \"status\": \"{}\",\n", status_name(rep.status));
    out += "  \"worst\": [";
    first = true;
    for (const auto& w : rep.worst) {
        out += fmt::format("{}\n    {{\"line\": {}, \"value\": {}}}", first ? "" : ",", w.line, format_json_real(w.value));
        first = false;
    }
    out += first ? "]\n" : "\n  ]\n";
    out += "}\n";
    return out;
}

/// Throws std::runtime_error on malformed input.
inline Solution solution_from_json(const std::string& text) {
    Solution s;
    try {
        const auto j = nlohmann::json::parse(text);
        s.status = j.at("status").get<std::string>();
        if (s.status != "Solved" && s.status != "Unsat" && s.status != "TimedOut")
            throw std::runtime_error("unknown status '" + s.status + "'");
        for (const auto& [name, xy] : j.at("points").items()) {
            if (!xy.is_array() || xy.size() != 2) throw std::runtime_error("point '" + name + "' must be [x, y]");
            s.assignment.points[name] = {xy[0].get<double>(), xy[1].get<double>()};
        }
        for (const auto& [name, v] : j.at("scalars").items()) s.assignment.scalars[name] = v.get<double>();
        s.max_residual = j.at("max_residual").get<double>();
        for (const auto& w : j.at("worst")) s.worst.emplace_back(w.at("line").get<int>(), w.at("value").get<double>());
        s.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("malformed solution JSON: ") + e.what());
    }
    return s;
}

}  // namespace magicgeo::solver
