#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace magicgeo::lang {

enum class ConstraintKind {
    OnCircle,
    Length,
    EqualLength,
    RatioLength,
    Parallel,
    Perpendicular,
    AngleDeg,
    AngleEq,
    Collinear,
    Between,
    Midpoint,
    OnLine,
    Concyclic,
    Tangent,
    Horizontal,
    Vertical,
    // Sugar: expands to one on_circle row per vertex.
    Inscribed,
};

/// What a kind's scalar argument measures; drives range validation.
enum class ScalarRole { None, Distance, AngleDegrees, Ratio };

struct KindInfo {
    ConstraintKind kind;
    std::string_view name;
    int point_arity;
    int scalar_arity;
    ScalarRole scalar_role;
    bool sugar;
    std::string_view signature;
    std::string_view meaning;
    std::string_view example;
};

inline constexpr std::array<KindInfo, 17> kKindCatalog{{
    {ConstraintKind::OnCircle, "on_circle", 2, 1, ScalarRole::Distance, false, "on_circle(P, O, r)",
     "point P lies on the circle with center O and radius r", "constrain on_circle(A, O, 3)"},
    {ConstraintKind::Length, "length", 2, 1, ScalarRole::Distance, false, "length(A, B, l)",
     "segment AB has length l", "constrain length(A, B, 4)"},
    {ConstraintKind::EqualLength, "equal_length", 4, 0, ScalarRole::None, false, "equal_length(A, B, C, D)",
     "segments AB and CD have equal length", "constrain equal_length(A, B, B, C)"},
    {ConstraintKind::RatioLength, "ratio_length", 4, 1, ScalarRole::Ratio, false, "ratio_length(A, B, C, D, k)",
     "|AB| = k * |CD|", "constrain ratio_length(A, B, C, D, 2)"},
    {ConstraintKind::Parallel, "parallel", 4, 0, ScalarRole::None, false, "parallel(A, B, C, D)",
     "line AB is parallel to line CD", "constrain parallel(A, B, D, C)"},
    {ConstraintKind::Perpendicular, "perpendicular", 4, 0, ScalarRole::None, false, "perpendicular(A, B, C, D)",
     "line AB is perpendicular to line CD", "constrain perpendicular(A, B, B, C)"},
    {ConstraintKind::AngleDeg, "angle_deg", 3, 1, ScalarRole::AngleDegrees, false, "angle_deg(A, B, C, t)",
     "the angle ABC (vertex B) measures t degrees, 0 < t < 180", "constrain angle_deg(A, B, C, 49)"},
    {ConstraintKind::AngleEq, "angle_eq", 6, 0, ScalarRole::None, false, "angle_eq(A, B, C, D, E, F)",
     "angle ABC equals angle DEF", "constrain angle_eq(B, A, D, D, A, C)"},
    {ConstraintKind::Collinear, "collinear", 3, 0, ScalarRole::None, false, "collinear(A, B, C)",
     "points A, B and C lie on one line", "constrain collinear(A, D, C)"},
    {ConstraintKind::Between, "between", 3, 0, ScalarRole::None, false, "between(A, B, C)",
     "B lies on segment AC, between A and C", "constrain between(A, D, C)"},
    {ConstraintKind::Midpoint, "midpoint", 3, 0, ScalarRole::None, false, "midpoint(M, A, B)",
     "M is the midpoint of segment AB", "constrain midpoint(M, A, B)"},
    {ConstraintKind::OnLine, "on_line", 3, 0, ScalarRole::None, false, "on_line(P, A, B)",
     "P lies on line AB", "constrain on_line(E, A, B)"},
    {ConstraintKind::Concyclic, "concyclic", 4, 0, ScalarRole::None, false, "concyclic(A, B, C, D)",
     "A, B, C and D lie on one circle", "constrain concyclic(A, B, C, D)"},
    {ConstraintKind::Tangent, "tangent", 3, 1, ScalarRole::Distance, false, "tangent(A, B, O, r)",
     "line AB is tangent to the circle with center O and radius r", "constrain tangent(P, T, O, 2)"},
    {ConstraintKind::Horizontal, "horizontal", 2, 0, ScalarRole::None, false, "horizontal(A, B)",
     "segment AB is horizontal", "constrain horizontal(B, C)"},
    {ConstraintKind::Vertical, "vertical", 2, 0, ScalarRole::None, false, "vertical(A, B)",
     "segment AB is vertical", "constrain vertical(A, D)"},
    {ConstraintKind::Inscribed, "inscribed", 4, 1, ScalarRole::Distance, true, "inscribed(A, B, C, O, r)",
     "triangle ABC is inscribed in the circle with center O and radius r", "constrain inscribed(A, B, C, O, 3)"},
}};

inline constexpr std::size_t kPrimitiveKindCount = 16;

inline const KindInfo& kind_info(ConstraintKind kind) {
    return kKindCatalog[static_cast<std::size_t>(kind)];
}

inline std::string_view kind_name(ConstraintKind kind) { return kind_info(kind).name; }

inline std::optional<ConstraintKind> kind_from_name(std::string_view name) {
    for (const auto& info : kKindCatalog) {
        if (info.name == name) return info.kind;
    }
    return std::nullopt;
}

struct Pin {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Pin&, const Pin&) = default;
};

struct PointDecl {
    std::string name;
    std::optional<Pin> pin;
    int source_line = 0;
};

struct FreeBounds {
    double lo = 0.0;
    double hi = 0.0;
    friend bool operator==(const FreeBounds&, const FreeBounds&) = default;
};

struct ScalarDecl {
    std::string name;
    std::variant<double, FreeBounds> binding;
    int source_line = 0;

    bool is_free() const { return std::holds_alternative<FreeBounds>(binding); }
};

/// A scalar argument is either a reference to a declared scalar or a literal.
using ScalarArg = std::variant<std::string, double>;

struct Constraint {
    ConstraintKind kind = ConstraintKind::Length;
    std::vector<std::string> point_args;
    std::vector<ScalarArg> scalar_args;
    int source_line = 0;
};

enum class DrawKind { Segment, Polygon, Circle, Circle3, Arc };

struct DrawDirective {
    DrawKind kind = DrawKind::Segment;
    std::vector<std::string> points;
    // Radius for DrawKind::Circle; unused otherwise.
    std::optional<ScalarArg> radius;
    int source_line = 0;
};

inline std::string_view draw_kind_name(DrawKind kind) {
    switch (kind) {
        case DrawKind::Segment: return "segment";
        case DrawKind::Polygon: return "polygon";
        case DrawKind::Circle: return "circle";
        case DrawKind::Circle3: return "circle3";
        case DrawKind::Arc: return "arc";
    }
    return "segment";
}

struct LabelDirective {
    std::string point;
    std::string text;
    int source_line = 0;
};

struct GeoSpec {
    std::vector<PointDecl> points;
    std::vector<ScalarDecl> scalars;
    std::vector<Constraint> constraints;
    std::vector<DrawDirective> draws;
    std::vector<LabelDirective> labels;

    const PointDecl* find_point(std::string_view name) const {
        for (const auto& p : points) {
            if (p.name == name) return &p;
        }
        return nullptr;
    }
    const ScalarDecl* find_scalar(std::string_view name) const {
        for (const auto& s : scalars) {
            if (s.name == name) return &s;
        }
        return nullptr;
    }
};

// Structural equality ignores source lines: a pretty-printed spec reparses
// with different line numbers but the same content.
inline bool operator==(const PointDecl& a, const PointDecl& b) { return a.name == b.name && a.pin == b.pin; }
inline bool operator==(const ScalarDecl& a, const ScalarDecl& b) { return a.name == b.name && a.binding == b.binding; }
inline bool operator==(const Constraint& a, const Constraint& b) {
    return a.kind == b.kind && a.point_args == b.point_args && a.scalar_args == b.scalar_args;
}
inline bool operator==(const DrawDirective& a, const DrawDirective& b) {
    return a.kind == b.kind && a.points == b.points && a.radius == b.radius;
}
inline bool operator==(const LabelDirective& a, const LabelDirective& b) {
    return a.point == b.point && a.text == b.text;
}
inline bool operator==(const GeoSpec& a, const GeoSpec& b) {
    return a.points == b.points && a.scalars == b.scalars && a.constraints == b.constraints && a.draws == b.draws &&
           a.labels == b.labels;
}

enum class ErrorClass { LexError, ParseError, UnknownIdentifier, UnknownConstraint, ArityMismatch, DuplicateDecl, RangeError };

inline constexpr std::array<ErrorClass, 7> kAllErrorClasses{
    ErrorClass::LexError,      ErrorClass::ParseError,    ErrorClass::UnknownIdentifier, ErrorClass::UnknownConstraint,
    ErrorClass::ArityMismatch, ErrorClass::DuplicateDecl, ErrorClass::RangeError,
};

/// The machine code is the class name; the set is fixed and documented.
inline std::string_view machine_code(ErrorClass cls) {
    switch (cls) {
        case ErrorClass::LexError: return "LexError";
        case ErrorClass::ParseError: return "ParseError";
        case ErrorClass::UnknownIdentifier: return "UnknownIdentifier";
        case ErrorClass::UnknownConstraint: return "UnknownConstraint";
        case ErrorClass::ArityMismatch: return "ArityMismatch";
        case ErrorClass::DuplicateDecl: return "DuplicateDecl";
        case ErrorClass::RangeError: return "RangeError";
    }
    return "ParseError";
}

struct SpecError {
    ErrorClass cls = ErrorClass::ParseError;
    int line = 0;
    std::string message;

    std::string_view code() const { return machine_code(cls); }
    /// `LINE:<n> CODE:<machine_code> <message>`
    std::string format() const { return "LINE:" + std::to_string(line) + " CODE:" + std::string(code()) + " " + message; }
};

}  // namespace magicgeo::lang
