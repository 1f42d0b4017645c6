#pragma once

#include <string>
#include <variant>

#include <fmt/format.h>

#include "magicgeo/lang/types.hpp"

namespace magicgeo::lang {

/// Shortest text that reads back as the same double.
inline std::string format_real(double v) { return fmt::format("{}", v); }

inline std::string format_scalar_arg(const ScalarArg& arg) {
    if (const auto* name = std::get_if<std::string>(&arg)) return *name;
    return format_real(std::get<double>(arg));
}

inline std::string format_constraint(const Constraint& c) {
    std::string out = fmt::format("{}(", kind_name(c.kind));
    bool first = true;
    auto add = [&](const std::string& s) {
        if (!first) out += ", ";
        out += s;
        first = false;
    };
    for (const auto& p : c.point_args) add(p);
    for (const auto& s : c.scalar_args) add(format_scalar_arg(s));
    out += ")";
    return out;
}

inline std::string format_draw(const DrawDirective& d) {
    std::string out = fmt::format("{}(", draw_kind_name(d.kind));
    for (std::size_t i = 0; i < d.points.size(); ++i) {
        if (i) out += ", ";
        out += d.points[i];
    }
    if (d.radius) out += ", " + format_scalar_arg(*d.radius);
    out += ")";
    return out;
}

inline std::string quote_label(const std::string& text) {
    std::string out = "\"";
    for (char c : text) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

/// Canonical `.geo` text: declarations, then constraints, draws and labels,
/// one statement per line, LF endings.
inline std::string pretty_print(const GeoSpec& spec) {
    std::string out;
    for (const auto& p : spec.points) {
        if (p.pin)
            out += fmt::format("point {} at ({}, {})\n", p.name, format_real(p.pin->x), format_real(p.pin->y));
        else
            out += fmt::format("point {}\n", p.name);
    }
    for (const auto& s : spec.scalars) {
        if (const auto* v = std::get_if<double>(&s.binding))
            out += fmt::format("scalar {} = {}\n", s.name, format_real(*v));
        else
            out += fmt::format("scalar {} in [{}, {}]\n", s.name, format_real(std::get<FreeBounds>(s.binding).lo),
                               format_real(std::get<FreeBounds>(s.binding).hi));
    }
    for (const auto& c : spec.constraints) out += "constrain " + format_constraint(c) + "\n";
    for (const auto& d : spec.draws) out += "draw " + format_draw(d) + "\n";
    for (const auto& l : spec.labels) out += fmt::format("label {} {}\n", l.point, quote_label(l.text));
    return out;
}

}  // namespace magicgeo::lang
