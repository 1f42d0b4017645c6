#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "magicgeo/tikz/ir.hpp"

namespace magicgeo::tikz {

inline constexpr std::string_view kPreambleHead =
    "\\documentclass[tikz,border=2pt]{standalone}\n"
    "\\begin{document}\n";
inline constexpr std::string_view kPreambleTail =
    "\\end{tikzpicture}\n"
    "\\end{document}\n";

namespace detail {

inline std::string num(double v, int places) {
    std::string s = fmt::format("{:.{}f}", v, places);
    // "-0.0000" and "0.0000" must print identically.
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

inline std::string pt(Vec2 p, int places) { return fmt::format("({},{})", num(p.x, places), num(p.y, places)); }

inline std::string tikz_anchor(Anchor a) {
    switch (a) {
        case Anchor::N: return "above";
        case Anchor::NE: return "above right";
        case Anchor::E: return "right";
        case Anchor::SE: return "below right";
        case Anchor::S: return "below";
        case Anchor::SW: return "below left";
        case Anchor::W: return "left";
        case Anchor::NW: return "above left";
    }
    return "above";
}

inline bool plain_name(std::string_view s) {
    if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

/// Point names become math (A_1 subscripts the tail); any other text is
/// escaped for text mode, with the degree sign set as a math superscript.
inline std::string tex_text(std::string_view s) {
    if (plain_name(s)) {
        const auto us = s.find('_');
        if (us == std::string_view::npos) return fmt::format("${}$", s);
        std::string tail;
        for (char c : s.substr(us + 1)) tail += c == '_' ? std::string("\\_") : std::string(1, c);
        return fmt::format("${}_{{{}}}$", s.substr(0, us), tail);
    }
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (s.compare(i, 2, "°") == 0) {
            out += "$^\\circ$";
            ++i;
            continue;
        }
        switch (c) {
            case '#': case '$': case '%': case '&': case '_': case '{': case '}':
                out += '\\';
                out += c;
                break;
            case '~': out += "\\textasciitilde{}"; break;
            case '^': out += "\\textasciicircum{}"; break;
            case '\\': out += "\\textbackslash{}"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string degree_math(std::string_view text) {
    std::string out(text);
    const auto pos = out.find("°");
    if (pos != std::string::npos) out.replace(pos, std::string_view("°").size(), "^\\circ");
    return "$" + out + "$";
}

inline Vec2 unit(Vec2 v) {
    const double n = geom::norm(v);
    return n > 0.0 ? v / n : Vec2{1.0, 0.0};
}

inline std::string statement(const Drawable& d, const EmitConfig& cfg) {
    const int k = cfg.decimal_places;
    return std::visit(
        [&](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Segment>) {
                return fmt::format("\\draw {} -- {};", pt(v.a, k), pt(v.b, k));
            } else if constexpr (std::is_same_v<T, Polyline>) {
                std::string s = "\\draw ";
                for (std::size_t i = 0; i < v.points.size(); ++i) s += (i ? " -- " : "") + pt(v.points[i], k);
                return s + (v.closed ? " -- cycle;" : ";");
            } else if constexpr (std::is_same_v<T, Circle>) {
                return fmt::format("\\draw {} circle[radius={}];", pt(v.center, k), num(v.radius, k));
            } else if constexpr (std::is_same_v<T, Arc>) {
                const double a0 = v.start_deg * std::numbers::pi / 180.0;
                const Vec2 start = v.center + Vec2{std::cos(a0), std::sin(a0)} * v.radius;
                return fmt::format("\\draw {} arc[start angle={}, end angle={}, radius={}];", pt(start, k),
                                   num(v.start_deg, k), num(v.end_deg, k), num(v.radius, k));
            } else if constexpr (std::is_same_v<T, AngleMark>) {
                const Vec2 r1 = v.ray1 - v.vertex;
                const Vec2 r2 = v.ray2 - v.vertex;
                const double rad = std::min(0.5, 0.3 * std::min(geom::norm(r1), geom::norm(r2)));
                double a1 = angle_deg_of(r1);
                double sweep = angle_deg_of(r2) - a1;
                while (sweep <= -180.0) sweep += 360.0;
                while (sweep > 180.0) sweep -= 360.0;
                if (sweep < 0.0) {
                    a1 += sweep;
                    sweep = -sweep;
                }
                const double a0 = a1 * std::numbers::pi / 180.0;
                const double mid = (a1 + 0.5 * sweep) * std::numbers::pi / 180.0;
                const Vec2 start = v.vertex + Vec2{std::cos(a0), std::sin(a0)} * rad;
                const Vec2 text_at = v.vertex + Vec2{std::cos(mid), std::sin(mid)} * (rad + 0.3);
                return fmt::format("\\draw {} arc[start angle={}, end angle={}, radius={}] {} node {{\\scriptsize {}}};",
                                   pt(start, k), num(a1, k), num(a1 + sweep, k), num(rad, k), pt(text_at, k),
                                   degree_math(v.text));
            } else if constexpr (std::is_same_v<T, RightAngleMark>) {
                const Vec2 u1 = unit(v.ray1 - v.vertex);
                const Vec2 u2 = unit(v.ray2 - v.vertex);
                const double s =
                    std::min(0.25, 0.25 * std::min(geom::norm(v.ray1 - v.vertex), geom::norm(v.ray2 - v.vertex)));
                return fmt::format("\\draw {} -- {} -- {};", pt(v.vertex + u1 * s, k), pt(v.vertex + (u1 + u2) * s, k),
                                   pt(v.vertex + u2 * s, k));
            } else if constexpr (std::is_same_v<T, Dot>) {
                return fmt::format("\\fill {} circle[radius={}];", pt(v.point, k), num(cfg.dot_radius, k));
            } else {
                return fmt::format("\\node[{}] at {} {{{}}};", tikz_anchor(v.anchor), pt(v.point, k), tex_text(v.text));
            }
        },
        d);
}

}  // namespace detail

/// Standalone TikZ document, one statement per drawable, LF endings.
inline std::string emit(const DiagramIR& ir, const EmitConfig& cfg) {
    cfg.check();
    std::string out(kPreambleHead);
    out += fmt::format("\\begin{{tikzpicture}}[line width={}pt, line cap=round, line join=round]\n",
                       detail::num(cfg.line_width, 2));
    for (const auto& d : ir.drawables) {
        out += detail::statement(d, cfg);
        out += '\n';
    }
    out += kPreambleTail;
    return out;
}

struct LintFinding {
    int line = 0;
    std::string message;
};

inline const std::set<std::string, std::less<>>& allowed_control_sequences() {
    static const std::set<std::string, std::less<>> allowed = {
        "documentclass", "usepackage", "usetikzlibrary", "tikzset", "begin", "end", "draw", "fill", "filldraw",
        "path", "node", "coordinate", "clip", "foreach", "shade", "shadedraw", "pgfmathsetmacro", "circ",
        "angle", "triangle", "cdot", "prime", "frac", "sqrt", "text", "textbf", "textit", "mathrm", "mathbf",
        "scriptsize", "footnotesize", "small", "tiny", "normalsize", "large", "Large", "textasciitilde",
        "textasciicircum", "textbackslash", "degree", "pi", "alpha", "beta", "gamma", "theta", "varphi", "phi"};
    return allowed;
}

/// Structural checks on TikZ source: braces and environments balanced, a
/// tikzpicture present, numeric literals finite, control sequences drawn from
/// a fixed allow-list. An empty result means the text passed.
inline std::vector<LintFinding> lint(std::string_view text) {
    std::vector<LintFinding> out;
    std::vector<int> open_braces;
    std::vector<std::pair<std::string, int>> envs;
    bool has_picture = false;
    int line = 1;
    const auto read_group = [&](std::size_t& i) -> std::string {
        std::size_t j = i;
        while (j < text.size() && text[j] == ' ') ++j;
        if (j >= text.size() || text[j] != '{') return {};
        const std::size_t close = text.find('}', j);
        if (close == std::string_view::npos) return {};
        i = close + 1;
        return std::string(text.substr(j + 1, close - j - 1));
    };
    for (std::size_t i = 0; i < text.size();) {
        const char c = text[i];
        if (c == '\n') {
            ++line;
            ++i;
        } else if (c == '%') {
            while (i < text.size() && text[i] != '\n') ++i;
        } else if (c == '{') {
            open_braces.push_back(line);
            ++i;
        } else if (c == '}') {
            if (open_braces.empty()) out.push_back({line, "unmatched '}'"});
            else open_braces.pop_back();
            ++i;
        } else if (c == '\\') {
            ++i;
            if (i >= text.size()) {
                out.push_back({line, "dangling backslash at end of input"});
                break;
            }
            if (!std::isalpha(static_cast<unsigned char>(text[i]))) {
                if (text[i] == '\n') ++line;
                ++i;  // control symbol such as \{ or \\ is always fine
                continue;
            }
            std::size_t j = i;
            while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
            const std::string name(text.substr(i, j - i));
            i = j;
            if (!allowed_control_sequences().count(name)) {
                out.push_back({line, fmt::format("control sequence \\{} is not allowed", name)});
            } else if (name == "begin" || name == "end") {
                const int at = line;
                const std::string env = read_group(i);
                if (env.empty()) {
                    out.push_back({at, fmt::format("\\{} without an environment name", name)});
                } else if (name == "begin") {
                    if (env == "tikzpicture") has_picture = true;
                    envs.emplace_back(env, at);
                } else if (envs.empty() || envs.back().first != env) {
                    out.push_back({at, fmt::format("\\end{{{}}} does not match an open environment", env)});
                } else {
                    envs.pop_back();
                }
            }
        } else if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < text.size() &&
                                                                    std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            const std::string rest(text.substr(i, std::min<std::size_t>(64, text.size() - i)));
            char* end = nullptr;
            const double v = std::strtod(rest.c_str(), &end);
            if (!std::isfinite(v)) out.push_back({line, fmt::format("numeric literal '{}' is not finite", rest.substr(0, end - rest.c_str()))});
            i += std::max<std::ptrdiff_t>(1, end - rest.c_str());
        } else if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j]))) ++j;
            std::string word(text.substr(i, j - i));
            std::transform(word.begin(), word.end(), word.begin(), [](unsigned char ch) { return std::tolower(ch); });
            if (word == "nan" || word == "inf" || word == "infinity")
                out.push_back({line, fmt::format("numeric literal '{}' is not finite", text.substr(i, j - i))});
            i = j;
        } else {
            ++i;
        }
    }
    for (int l : open_braces) out.push_back({l, "unclosed '{'"});
    for (const auto& [env, l] : envs) out.push_back({l, fmt::format("environment '{}' is never closed", env)});
    if (!has_picture) out.push_back({0, "no tikzpicture environment"});
    return out;
}

}  // namespace magicgeo::tikz
