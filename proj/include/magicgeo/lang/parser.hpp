#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "magicgeo/lang/types.hpp"
#include "magicgeo/lang/validate.hpp"

namespace magicgeo::lang {

/// Either a spec satisfying every invariant, or the full list of problems found.
struct ParseResult {
    std::optional<GeoSpec> spec;
    std::vector<SpecError> errors;

    bool ok() const { return spec.has_value(); }
};

namespace detail {

enum class Tok { Ident, Number, String, LParen, RParen, LBracket, RBracket, Comma, Equals, End };

struct Token {
    Tok type = Tok::End;
    std::string text;
    double number = 0.0;
};

inline std::string_view tok_name(Tok t) {
    switch (t) {
        case Tok::Ident: return "identifier";
        case Tok::Number: return "number";
        case Tok::String: return "string";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::LBracket: return "'['";
        case Tok::RBracket: return "']'";
        case Tok::Comma: return "','";
        case Tok::Equals: return "'='";
        case Tok::End: return "end of line";
    }
    return "token";
}

inline bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
inline bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}
inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline std::string describe_char(unsigned char c) {
    if (c >= 0x20 && c < 0x7f) return fmt::format("'{}'", static_cast<char>(c));
    return fmt::format("byte 0x{:02X}", static_cast<unsigned>(c));
}

/// Tokenizes one line. Returns an error message on the first non-compliant
/// character.
inline std::optional<std::string> lex_line(std::string_view line, std::vector<Token>& out) {
    std::size_t i = 0;
    while (i < line.size()) {
        const char c = line[i];
        if (c == ' ' || c == '\t') {
            ++i;
        } else if (c == '#') {
            break;
        } else if (is_ident_start(c)) {
            std::size_t j = i;
            while (j < line.size() && is_ident_char(line[j])) ++j;
            out.push_back({Tok::Ident, std::string(line.substr(i, j - i)), 0.0});
            i = j;
        } else if (is_digit(c) || ((c == '-' || c == '+' || c == '.') && i + 1 < line.size() &&
                                   (is_digit(line[i + 1]) || (line[i + 1] == '.' && c != '.')))) {
            std::size_t j = i;
            if (line[j] == '-' || line[j] == '+') ++j;
            while (j < line.size() && is_digit(line[j])) ++j;
            if (j < line.size() && line[j] == '.') {
                ++j;
                while (j < line.size() && is_digit(line[j])) ++j;
            }
            if (j < line.size() && (line[j] == 'e' || line[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < line.size() && (line[k] == '-' || line[k] == '+')) ++k;
                if (k < line.size() && is_digit(line[k])) {
                    while (k < line.size() && is_digit(line[k])) ++k;
                    j = k;
                }
            }
            std::string text(line.substr(i, j - i));
            if (j < line.size() && is_ident_char(line[j]))
                return fmt::format("malformed number '{}{}'", text, line[j]);
            // strtod is used rather than from_chars for its overflow-to-inf behaviour.
            const std::string for_strtod = text[0] == '+' ? text.substr(1) : text;
            char* end = nullptr;
            const double value = std::strtod(for_strtod.c_str(), &end);
            if (end == for_strtod.c_str() || *end != '\0') return fmt::format("malformed number '{}'", text);
            out.push_back({Tok::Number, std::move(text), value});
            i = j;
        } else if (c == '"') {
            std::string text;
            std::size_t j = i + 1;
            bool closed = false;
            while (j < line.size()) {
                if (line[j] == '\\' && j + 1 < line.size() && (line[j + 1] == '"' || line[j + 1] == '\\')) {
                    text.push_back(line[j + 1]);
                    j += 2;
                } else if (line[j] == '"') {
                    closed = true;
                    ++j;
                    break;
                } else {
                    text.push_back(line[j++]);
                }
            }
            if (!closed) return std::string("unterminated string literal");
            out.push_back({Tok::String, std::move(text), 0.0});
            i = j;
        } else {
            Tok t = Tok::End;
            switch (c) {
                case '(': t = Tok::LParen; break;
                case ')': t = Tok::RParen; break;
                case '[': t = Tok::LBracket; break;
                case ']': t = Tok::RBracket; break;
                case ',': t = Tok::Comma; break;
                case '=': t = Tok::Equals; break;
                default: return fmt::format("non-compliant character {}", describe_char(static_cast<unsigned char>(c)));
            }
            out.push_back({t, std::string(1, c), 0.0});
            ++i;
        }
    }
    out.push_back({Tok::End, "", 0.0});
    return std::nullopt;
}

inline bool is_keyword(std::string_view s) {
    return s == "point" || s == "scalar" || s == "constrain" || s == "draw" || s == "label" || s == "at" ||
           s == "in";
}

struct SyntaxError {
    ErrorClass cls;
    std::string message;
};

class LineParser {
  public:
    LineParser(const std::vector<Token>& toks, int line, GeoSpec& spec) : toks_(toks), line_(line), spec_(spec) {}

    std::optional<SyntaxError> run() {
        const Token& head = peek();
        if (head.type == Tok::End) return std::nullopt;
        if (head.type != Tok::Ident) return syntax(fmt::format("expected a statement keyword, got {}", describe(head)));
        next();
        if (head.text == "point") return point_stmt();
        if (head.text == "scalar") return scalar_stmt();
        if (head.text == "constrain") return constrain_stmt();
        if (head.text == "draw") return draw_stmt();
        if (head.text == "label") return label_stmt();
        return syntax(fmt::format("unknown statement '{}'", head.text));
    }

  private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& next() {
        const Token& t = toks_[pos_];
        if (t.type != Tok::End) ++pos_;
        return t;
    }

    static std::string describe(const Token& t) {
        if (t.type == Tok::End) return "end of line";
        return fmt::format("{} '{}'", tok_name(t.type), t.text);
    }

    static SyntaxError syntax(std::string msg) { return {ErrorClass::ParseError, std::move(msg)}; }

    std::optional<SyntaxError> expect(Tok t) {
        if (peek().type != t) return syntax(fmt::format("expected {}, got {}", tok_name(t), describe(peek())));
        next();
        return std::nullopt;
    }

    std::optional<SyntaxError> expect_end() {
        if (peek().type != Tok::End) return syntax(fmt::format("unexpected {} after statement", describe(peek())));
        return std::nullopt;
    }

    std::optional<SyntaxError> name(std::string& out) {
        const Token& t = peek();
        if (t.type != Tok::Ident) return syntax(fmt::format("expected a name, got {}", describe(t)));
        if (is_keyword(t.text)) return syntax(fmt::format("'{}' is a keyword and cannot be used as a name", t.text));
        out = t.text;
        next();
        return std::nullopt;
    }

    std::optional<SyntaxError> number(double& out) {
        const Token& t = peek();
        if (t.type != Tok::Number) return syntax(fmt::format("expected a number, got {}", describe(t)));
        out = t.number;
        next();
        return std::nullopt;
    }

    std::optional<SyntaxError> point_stmt() {
        std::string first;
        if (auto e = name(first)) return e;
        if (peek().type == Tok::Ident && peek().text == "at") {
            next();
            Pin pin;
            if (auto e = expect(Tok::LParen)) return e;
            if (auto e = number(pin.x)) return e;
            if (auto e = expect(Tok::Comma)) return e;
            if (auto e = number(pin.y)) return e;
            if (auto e = expect(Tok::RParen)) return e;
            if (auto e = expect_end()) return e;
            spec_.points.push_back({first, pin, line_});
            return std::nullopt;
        }
        std::vector<std::string> names{first};
        while (peek().type != Tok::End) {
            std::string n;
            if (auto e = name(n)) return e;
            names.push_back(std::move(n));
        }
        for (auto& n : names) spec_.points.push_back({std::move(n), std::nullopt, line_});
        return std::nullopt;
    }

    std::optional<SyntaxError> scalar_stmt() {
        std::string n;
        if (auto e = name(n)) return e;
        if (peek().type == Tok::Equals) {
            next();
            double v = 0;
            if (auto e = number(v)) return e;
            if (auto e = expect_end()) return e;
            spec_.scalars.push_back({n, v, line_});
            return std::nullopt;
        }
        if (peek().type == Tok::Ident && peek().text == "in") {
            next();
            FreeBounds b;
            if (auto e = expect(Tok::LBracket)) return e;
            if (auto e = number(b.lo)) return e;
            if (auto e = expect(Tok::Comma)) return e;
            if (auto e = number(b.hi)) return e;
            if (auto e = expect(Tok::RBracket)) return e;
            if (auto e = expect_end()) return e;
            spec_.scalars.push_back({n, b, line_});
            return std::nullopt;
        }
        return syntax(fmt::format("expected '=' or 'in' after scalar name, got {}", describe(peek())));
    }

    // Parses `(arg, arg, ...)` where each arg is a name or a number.
    std::optional<SyntaxError> arg_list(std::vector<Token>& args) {
        if (auto e = expect(Tok::LParen)) return e;
        if (peek().type == Tok::RParen) {
            next();
            return std::nullopt;
        }
        while (true) {
            const Token& t = peek();
            if (t.type != Tok::Ident && t.type != Tok::Number)
                return syntax(fmt::format("expected a name or number argument, got {}", describe(t)));
            if (t.type == Tok::Ident && is_keyword(t.text))
                return syntax(fmt::format("'{}' is a keyword and cannot be used as an argument", t.text));
            args.push_back(next());
            if (peek().type == Tok::Comma) {
                next();
                continue;
            }
            if (auto e = expect(Tok::RParen)) return e;
            return std::nullopt;
        }
    }

    std::optional<SyntaxError> constrain_stmt() {
        const Token& kind_tok = peek();
        if (kind_tok.type != Tok::Ident) return syntax(fmt::format("expected a constraint name, got {}", describe(kind_tok)));
        const std::string kind_text = kind_tok.text;
        next();
        std::vector<Token> args;
        if (auto e = arg_list(args)) return e;
        if (auto e = expect_end()) return e;
        const auto kind = kind_from_name(kind_text);
        if (!kind) return SyntaxError{ErrorClass::UnknownConstraint, fmt::format("unknown constraint '{}'", kind_text)};
        const KindInfo& info = kind_info(*kind);
        const auto total = static_cast<std::size_t>(info.point_arity + info.scalar_arity);
        if (args.size() != total) {
            return SyntaxError{ErrorClass::ArityMismatch,
                               fmt::format("{} expects {} point argument{} and {} scalar argument{}, got {} argument{}",
                                           info.name, info.point_arity, info.point_arity == 1 ? "" : "s",
                                           info.scalar_arity, info.scalar_arity == 1 ? "" : "s", args.size(),
                                           args.size() == 1 ? "" : "s")};
        }
        Constraint c;
        c.kind = *kind;
        c.source_line = line_;
        for (std::size_t i = 0; i < args.size(); ++i) {
            const Token& a = args[i];
            if (i < static_cast<std::size_t>(info.point_arity)) {
                if (a.type != Tok::Ident)
                    return SyntaxError{ErrorClass::ArityMismatch,
                                       fmt::format("argument {} of {} must be a point name, got {}", i + 1, info.name,
                                                   a.text)};
                c.point_args.push_back(a.text);
            } else if (a.type == Tok::Ident) {
                c.scalar_args.emplace_back(a.text);
            } else {
                c.scalar_args.emplace_back(a.number);
            }
        }
        spec_.constraints.push_back(std::move(c));
        return std::nullopt;
    }

    std::optional<SyntaxError> draw_stmt() {
        const Token& kind_tok = peek();
        if (kind_tok.type != Tok::Ident) return syntax(fmt::format("expected a draw kind, got {}", describe(kind_tok)));
        const std::string kind_text = kind_tok.text;
        next();
        DrawDirective d;
        d.source_line = line_;
        if (kind_text == "segment") d.kind = DrawKind::Segment;
        else if (kind_text == "polygon") d.kind = DrawKind::Polygon;
        else if (kind_text == "circle") d.kind = DrawKind::Circle;
        else if (kind_text == "circle3") d.kind = DrawKind::Circle3;
        else if (kind_text == "arc") d.kind = DrawKind::Arc;
        else return syntax(fmt::format("unknown draw kind '{}'", kind_text));
        std::vector<Token> args;
        if (auto e = arg_list(args)) return e;
        if (auto e = expect_end()) return e;
        for (std::size_t i = 0; i < args.size(); ++i) {
            const Token& a = args[i];
            const bool radius_slot = d.kind == DrawKind::Circle && i == 1;
            if (radius_slot) {
                if (a.type == Tok::Ident) d.radius = ScalarArg(a.text);
                else d.radius = ScalarArg(a.number);
            } else if (a.type != Tok::Ident) {
                return SyntaxError{ErrorClass::ArityMismatch,
                                   fmt::format("argument {} of {} must be a point name, got {}", i + 1, kind_text, a.text)};
            } else {
                d.points.push_back(a.text);
            }
        }
        if (d.kind == DrawKind::Circle && args.size() != 2)
            return SyntaxError{ErrorClass::ArityMismatch,
                               fmt::format("circle expects a center point and a radius, got {} argument{}", args.size(),
                                           args.size() == 1 ? "" : "s")};
        spec_.draws.push_back(std::move(d));
        return std::nullopt;
    }

    std::optional<SyntaxError> label_stmt() {
        std::string point;
        if (auto e = name(point)) return e;
        if (peek().type != Tok::String) return syntax(fmt::format("expected a quoted label, got {}", describe(peek())));
        std::string text = next().text;
        if (auto e = expect_end()) return e;
        spec_.labels.push_back({point, std::move(text), line_});
        return std::nullopt;
    }

    const std::vector<Token>& toks_;
    std::size_t pos_ = 0;
    int line_;
    GeoSpec& spec_;
};

}  // namespace detail

/// Parses `.geo` source. Errors are collected across all lines rather than
/// stopping at the first one; a line with a syntax error contributes no
/// statement, and semantic validation runs on whatever parsed.
inline ParseResult parse(std::string_view source) {
    ParseResult result;
    GeoSpec spec;
    int line_no = 0;
    std::size_t start = 0;
    while (start <= source.size()) {
        std::size_t end = source.find('\n', start);
        const bool last = end == std::string_view::npos;
        if (last) end = source.size();
        std::string_view line = source.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        if (!(last && line.empty() && line_no > 1)) {
            std::vector<detail::Token> toks;
            if (auto lex_err = detail::lex_line(line, toks)) {
                result.errors.push_back({ErrorClass::LexError, line_no, *lex_err});
            } else if (auto err = detail::LineParser(toks, line_no, spec).run()) {
                result.errors.push_back({err->cls, line_no, std::move(err->message)});
            }
        }
        if (last) break;
        start = end + 1;
    }
    auto semantic = validate(spec);
    result.errors.insert(result.errors.end(), semantic.begin(), semantic.end());
    std::stable_sort(result.errors.begin(), result.errors.end(),
                     [](const SpecError& a, const SpecError& b) { return a.line < b.line; });
    if (result.errors.empty()) result.spec = std::move(spec);
    return result;
}

}  // namespace magicgeo::lang
