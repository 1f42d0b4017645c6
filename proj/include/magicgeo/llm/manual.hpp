#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "magicgeo/lang/parser.hpp"
#include "magicgeo/lang/types.hpp"

namespace magicgeo::llm {

struct FewShot {
    std::string problem;
    std::string spec;
};

struct PromptManual {
    std::string constraint_catalog_doc;
    std::string grammar_doc;
    std::vector<FewShot> few_shot_examples;
};

inline constexpr std::string_view kGrammarDoc =
    "A spec is a sequence of lines, one statement per line. '#' starts a comment.\n"
    "  point A B C              declare free points\n"
    "  point A at (x, y)        declare a point with fixed coordinates\n"
    "  scalar r = 3             declare a named constant\n"
    "  scalar t in [lo, hi]     declare a free value the solver picks inside the interval\n"
    "  constrain kind(args)     add a constraint; points first, then scalar names or numbers\n"
    "  draw segment(A, B)       draw a segment\n"
    "  draw polygon(A, B, C)    draw a closed polygon (3 or more points)\n"
    "  draw circle(O, r)        draw a circle with center O and radius r\n"
    "  draw circle3(A, B, C)    draw the circle through three points\n"
    "  draw arc(O, A, B)        draw the arc centered at O from A counterclockwise to B\n"
    "  label A \"text\"           replace the label shown next to A\n"
    "Names are letters, digits and underscores starting with a letter. Keywords cannot be names.\n"
    "Angles are in degrees, strictly between 0 and 180. Lengths and ratios are positive.\n"
    "Distinct points are kept apart, so never reuse two names for one location.\n";

inline std::string default_catalog_doc() {
    std::string out;
    for (const auto& k : lang::kKindCatalog)
        out += fmt::format("- {}: {}. Example: {}\n", k.signature, k.meaning, k.example);
    return out;
}

inline std::vector<FewShot> default_few_shots() {
    return {
        {"Points A and B lie on circle O with radius 2, and chord AB has length 3. M is the midpoint of AB. "
         "Draw the circle, the chord and segment OM.",
         "point O A B M\n"
         "constrain on_circle(A, O, 2)\n"
         "constrain on_circle(B, O, 2)\n"
         "constrain length(A, B, 3)\n"
         "constrain midpoint(M, A, B)\n"
         "draw circle(O, 2)\n"
         "draw segment(A, B)\n"
         "draw segment(O, M)\n"},
        {"Circle O has radius 1.5. The line through P and T touches the circle at T, and PT = 4.",
         "point O T P\n"
         "scalar r = 1.5\n"
         "constrain on_circle(T, O, r)\n"
         "constrain tangent(P, T, O, r)\n"
         "constrain length(P, T, 4)\n"
         "draw circle(O, r)\n"
         "draw segment(P, T)\n"
         "draw segment(O, T)\n"},
        {"In triangle ABC, AB = 5, BC = 6 and angle ABC equals 49 degrees.",
         "point A B C\n"
         "constrain length(A, B, 5)\n"
         "constrain length(B, C, 6)\n"
         "constrain angle_deg(A, B, C, 49)\n"
         "draw polygon(A, B, C)\n"},
        {"Triangle ABC has a right angle at C with AC = 3 and BC = 4. D is the midpoint of the hypotenuse AB.",
         "point A B C D\n"
         "constrain length(A, C, 3)\n"
         "constrain length(B, C, 4)\n"
         "constrain perpendicular(C, A, C, B)\n"
         "constrain midpoint(D, A, B)\n"
         "draw polygon(A, B, C)\n"
         "draw segment(C, D)\n"},
        {"ABCD is a parallelogram with AB = 5, AD = 3 and angle DAB equal to 60 degrees.",
         "point A B C D\n"
         "constrain length(A, B, 5)\n"
         "constrain length(A, D, 3)\n"
         "constrain parallel(A, B, D, C)\n"
         "constrain parallel(A, D, B, C)\n"
         "constrain angle_deg(D, A, B, 60)\n"
         "draw polygon(A, B, C, D)\n"},
        {"In quadrilateral ABCD, AB is parallel to DC, AB = 6, AD = BC = 3 and angle ADC equals 120 degrees.",
         "point A B C D\n"
         "constrain parallel(A, B, D, C)\n"
         "constrain length(A, B, 6)\n"
         "constrain length(A, D, 3)\n"
         "constrain equal_length(A, D, B, C)\n"
         "constrain angle_deg(A, D, C, 120)\n"
         "constrain angle_deg(D, C, B, 120)\n"
         "draw polygon(A, B, C, D)\n"},
    };
}

inline bool mentions_word(std::string_view text, std::string_view word) {
    const auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    for (std::size_t pos = text.find(word); pos != std::string_view::npos; pos = text.find(word, pos + 1)) {
        const bool left = pos == 0 || !is_word(text[pos - 1]);
        const bool right = pos + word.size() == text.size() || !is_word(text[pos + word.size()]);
        if (left && right) return true;
    }
    return false;
}

/// Throws std::invalid_argument when a constraint kind is undocumented or a
/// few-shot spec does not parse cleanly.
inline void check_manual(const PromptManual& m) {
    for (const auto& k : lang::kKindCatalog) {
        if (!mentions_word(m.constraint_catalog_doc, k.name))
            throw std::invalid_argument(fmt::format("prompt manual does not document constraint '{}'", k.name));
    }
    for (std::size_t i = 0; i < m.few_shot_examples.size(); ++i) {
        const auto r = lang::parse(m.few_shot_examples[i].spec);
        if (!r.ok())
            throw std::invalid_argument(
                fmt::format("few-shot example {} is invalid: {}", i + 1, r.errors.front().format()));
    }
}

inline PromptManual default_manual() {
    PromptManual m{default_catalog_doc(), std::string(kGrammarDoc), default_few_shots()};
    check_manual(m);
    return m;
}

/// Manual override file: a JSON object with any of "constraint_catalog_doc",
/// "grammar_doc" and "few_shot_examples" ([{problem, spec}]); missing fields
/// keep their defaults.
inline PromptManual load_manual(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open prompt manual '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    PromptManual m = default_manual();
    try {
        const auto j = nlohmann::json::parse(ss.str());
        if (j.contains("constraint_catalog_doc")) m.constraint_catalog_doc = j["constraint_catalog_doc"].get<std::string>();
        if (j.contains("grammar_doc")) m.grammar_doc = j["grammar_doc"].get<std::string>();
        if (j.contains("few_shot_examples")) {
            m.few_shot_examples.clear();
            for (const auto& e : j["few_shot_examples"])
                m.few_shot_examples.push_back({e.at("problem").get<std::string>(), e.at("spec").get<std::string>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("malformed prompt manual: ") + e.what());
    }
    check_manual(m);
    return m;
}

}  // namespace magicgeo::llm
