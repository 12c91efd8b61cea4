#pragma once

// Line-oriented text formats: structures, pointed structures, graphs,
// bipartite graphs, subdivision witnesses and colourings. '#' starts a
// comment; names are whitespace-free.

#include "mnip/error.hpp"
#include "mnip/relcore.hpp"
#include "mnip/sparsity.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace mnip {

namespace detail {

struct Line {
    std::size_t number = 0;
    std::vector<std::string> words;
    std::vector<std::size_t> columns;

    [[noreturn]] void fail(const std::string& what, std::size_t word = 0) const {
        throw ParseError(what, number, word < columns.size() ? columns[word] : 1);
    }
};

inline std::vector<Line> split_lines(std::string_view text) {
    std::vector<Line> out;
    std::size_t number = 0, pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        ++number;
        auto line = text.substr(pos, end - pos);
        auto hash = line.find('#');
        if (hash != std::string_view::npos)
            line = line.substr(0, hash);
        Line l{number, {}, {}};
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && static_cast<unsigned char>(line[i]) <= ' ')
                ++i;
            std::size_t start = i;
            while (i < line.size() && static_cast<unsigned char>(line[i]) > ' ')
                ++i;
            if (i > start) {
                l.words.emplace_back(line.substr(start, i - start));
                l.columns.push_back(start + 1);
            }
        }
        if (!l.words.empty())
            out.push_back(std::move(l));
        pos = end + 1;
    }
    return out;
}

inline std::size_t parse_count(const Line& l, std::size_t word, const char* what) {
    const auto& w = l.words[word];
    if (w.empty() || w.find_first_not_of("0123456789") != std::string::npos || w.size() > 9)
        l.fail(std::string("expected a number for ") + what, word);
    return std::stoul(w);
}

inline Signature parse_signature_words(const Line& l, std::size_t first) {
    Signature sig;
    for (std::size_t i = first; i < l.words.size(); ++i) {
        const auto& w = l.words[i];
        auto slash = w.rfind('/');
        if (slash == std::string::npos || slash == 0 || slash + 1 == w.size() ||
            w.find_first_not_of("0123456789", slash + 1) != std::string::npos || w.size() - slash > 9)
            l.fail("expected NAME/ARITY", i);
        try {
            sig.add(w.substr(0, slash), std::stoul(w.substr(slash + 1)));
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            l.fail(e.what(), i);
        }
    }
    return sig;
}

template <class F>
auto at_line(const Line& l, std::size_t word, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        l.fail(e.what(), word);
    }
}

// Structure lines after the signature; other keywords go to `extra`.
template <class Extra>
Structure parse_structure_lines(const std::vector<Line>& lines, Extra&& extra) {
    if (lines.empty() || lines[0].words[0] != "signature")
        throw ParseError("structure files start with a signature line", lines.empty() ? 1 : lines[0].number, 1);
    Structure m(parse_signature_words(lines[0], 1));
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const Line& l = lines[i];
        const auto& key = l.words[0];
        if (key == "element") {
            if (l.words.size() != 2)
                l.fail("expected: element NAME");
            at_line(l, 1, [&] { return m.add_element(l.words[1]); });
        } else if (key == "rel") {
            if (l.words.size() < 2)
                l.fail("expected: rel SYMBOL ELEMENT...");
            auto s = m.signature().find(l.words[1]);
            if (!s)
                l.fail("unknown relation symbol " + l.words[1], 1);
            Tuple t;
            for (std::size_t w = 2; w < l.words.size(); ++w) {
                auto e = m.find(l.words[w]);
                if (!e)
                    l.fail("undeclared element " + l.words[w], w);
                t.push_back(*e);
            }
            at_line(l, 1, [&] {
                m.add_tuple(*s, std::move(t));
                return 0;
            });
        } else if (!extra(m, l)) {
            l.fail("unexpected keyword " + key);
        }
    }
    return m;
}

} // namespace detail

inline Structure parse_structure(std::string_view text) {
    return detail::parse_structure_lines(detail::split_lines(text), [](Structure&, const detail::Line&) { return false; });
}

inline std::string to_text(const Structure& m) {
    std::ostringstream out;
    out << "signature";
    for (const auto& s : m.signature().symbols())
        out << ' ' << s.name << '/' << s.arity;
    out << '\n';
    for (Element e = 0; e < m.size(); ++e)
        out << "element " << m.label(e) << '\n';
    for (std::size_t s = 0; s < m.signature().size(); ++s)
        for (const auto& t : m.relation(s)) {
            out << "rel " << m.signature()[s].name;
            for (Element e : t)
                out << ' ' << m.label(e);
            out << '\n';
        }
    return out.str();
}

/// Structure format plus `anchors e...` and `params e...` lines.
inline PointedStructure parse_pointed(std::string_view text) {
    PointedStructure p;
    std::vector<std::pair<const detail::Line*, bool>> marks;
    auto lines = detail::split_lines(text);
    p.structure = detail::parse_structure_lines(lines, [&](Structure&, const detail::Line& l) {
        if (l.words[0] != "anchors" && l.words[0] != "params")
            return false;
        marks.emplace_back(&l, l.words[0] == "anchors");
        return true;
    });
    for (auto [l, anchors] : marks)
        for (std::size_t w = 1; w < l->words.size(); ++w) {
            auto e = p.structure.find(l->words[w]);
            if (!e)
                l->fail("undeclared element " + l->words[w], w);
            (anchors ? p.anchors : p.parameters).push_back(*e);
        }
    return p;
}

inline std::string to_text(const PointedStructure& p) {
    std::string out = to_text(p.structure);
    out += "anchors";
    for (Element e : p.anchors)
        out += " " + p.structure.label(e);
    out += "\nparams";
    for (Element e : p.parameters)
        out += " " + p.structure.label(e);
    return out + "\n";
}

inline Graph parse_graph(std::string_view text) {
    auto lines = detail::split_lines(text);
    if (lines.empty() || lines[0].words.size() != 1 || lines[0].words[0] != "graph")
        throw ParseError("graph files start with a 'graph' line", lines.empty() ? 1 : lines[0].number, 1);
    Graph g;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& l = lines[i];
        if (l.words[0] == "vertex" && l.words.size() == 2) {
            detail::at_line(l, 1, [&] { return g.add_vertex(l.words[1]); });
        } else if (l.words[0] == "edge" && l.words.size() == 3) {
            auto u = g.find(l.words[1]);
            auto v = g.find(l.words[2]);
            if (!u)
                l.fail("undeclared vertex " + l.words[1], 1);
            if (!v)
                l.fail("undeclared vertex " + l.words[2], 2);
            detail::at_line(l, 0, [&] {
                g.add_edge(*u, *v);
                return 0;
            });
        } else {
            l.fail("expected 'vertex NAME' or 'edge U V'");
        }
    }
    return g;
}

inline std::string to_text(const Graph& g) {
    std::string out = "graph\n";
    for (Element v = 0; v < g.size(); ++v)
        out += "vertex " + g.label(v) + "\n";
    for (auto [u, v] : g.edges())
        out += "edge " + g.label(u) + " " + g.label(v) + "\n";
    return out;
}

inline BipartiteGraph parse_bipartite(std::string_view text) {
    auto lines = detail::split_lines(text);
    if (lines.empty() || lines[0].words.size() != 1 || lines[0].words[0] != "bipartite")
        throw ParseError("bipartite files start with a 'bipartite' line", lines.empty() ? 1 : lines[0].number, 1);
    BipartiteGraph g;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& l = lines[i];
        if ((l.words[0] == "left" || l.words[0] == "right") && l.words.size() == 2) {
            detail::at_line(l, 1, [&] {
                return l.words[0] == "left" ? g.add_left(l.words[1]) : g.add_right(l.words[1]);
            });
        } else if (l.words[0] == "edge" && l.words.size() == 3) {
            auto u = g.find_left(l.words[1]);
            auto v = g.find_right(l.words[2]);
            if (!u)
                l.fail("unknown left vertex " + l.words[1], 1);
            if (!v)
                l.fail("unknown right vertex " + l.words[2], 2);
            g.add_edge(*u, *v);
        } else {
            l.fail("expected 'left NAME', 'right NAME' or 'edge U V'");
        }
    }
    return g;
}

inline std::string to_text(const BipartiteGraph& g) {
    std::string out = "bipartite\n";
    for (std::size_t u = 0; u < g.left_size(); ++u)
        out += "left " + g.left_label(u) + "\n";
    for (std::size_t v = 0; v < g.right_size(); ++v)
        out += "right " + g.right_label(v) + "\n";
    for (auto [u, v] : g.edges())
        out += "edge " + g.left_label(u) + " " + g.right_label(v) + "\n";
    return out;
}

// Subdivision witnesses:  witness N R / branch I VERTEX / route I J V0 ... V(R+1)
inline std::string to_text(const SubdivisionWitness& w, const Graph& g) {
    std::string out = "witness " + std::to_string(w.n) + " " + std::to_string(w.r) + "\n";
    for (std::size_t i = 0; i < w.branch.size(); ++i)
        out += "branch " + std::to_string(i) + " " + g.label(w.branch[i]) + "\n";
    for (const auto& [ij, route] : w.routes) {
        out += "route " + std::to_string(ij.first) + " " + std::to_string(ij.second);
        for (Element v : route)
            out += " " + g.label(v);
        out += "\n";
    }
    return out;
}

inline SubdivisionWitness parse_witness(std::string_view text, const Graph& g) {
    auto lines = detail::split_lines(text);
    if (lines.empty() || lines[0].words.size() != 3 || lines[0].words[0] != "witness")
        throw ParseError("witness files start with 'witness N R'", lines.empty() ? 1 : lines[0].number, 1);
    SubdivisionWitness w;
    w.n = detail::parse_count(lines[0], 1, "n");
    w.r = detail::parse_count(lines[0], 2, "r");
    w.branch.assign(w.n, 0);
    std::vector<char> seen(w.n, 0);
    auto vertex = [&](const detail::Line& l, std::size_t word) {
        auto v = g.find(l.words[word]);
        if (!v)
            l.fail("unknown vertex " + l.words[word], word);
        return *v;
    };
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& l = lines[i];
        if (l.words[0] == "branch" && l.words.size() == 3) {
            auto idx = detail::parse_count(l, 1, "branch index");
            if (idx >= w.n || seen[idx]++)
                l.fail("branch index out of range or repeated", 1);
            w.branch[idx] = vertex(l, 2);
        } else if (l.words[0] == "route" && l.words.size() >= 4) {
            auto a = detail::parse_count(l, 1, "route start");
            auto b = detail::parse_count(l, 2, "route end");
            std::vector<Element> route;
            for (std::size_t k = 3; k < l.words.size(); ++k)
                route.push_back(vertex(l, k));
            w.routes[{a, b}] = std::move(route);
        } else {
            l.fail("expected 'branch I V' or 'route I J V...'");
        }
    }
    for (std::size_t i = 0; i < w.n; ++i)
        if (!seen[i])
            throw ParseError("branch " + std::to_string(i) + " is missing", lines[0].number, 1);
    return w;
}

/// Colourings read from text. Ground elements are named; colours are opaque
/// strings. Uniform colourings colour k-subsets of one ground set, bipartite
/// ones colour the cells of left × right.
struct TextColoring {
    bool bipartite = false;
    std::size_t k = 2;
    std::vector<std::string> left;   // ground set for uniform colourings
    std::vector<std::string> right;
    std::map<std::vector<std::size_t>, std::string> colors;  // sorted subset, or (x, y)

    const std::string& cell(std::size_t x, std::size_t y) const { return colors.at({x, y}); }
    const std::string& subset(std::vector<std::size_t> s) const {
        std::sort(s.begin(), s.end());
        return colors.at(s);
    }
};

inline TextColoring parse_coloring(std::string_view text) {
    auto lines = detail::split_lines(text);
    if (lines.empty() || lines[0].words.size() != 3 || lines[0].words[0] != "coloring" ||
        (lines[0].words[1] != "bipartite" && lines[0].words[1] != "uniform"))
        throw ParseError("coloring files start with 'coloring bipartite|uniform K'",
                         lines.empty() ? 1 : lines[0].number, 1);
    TextColoring c;
    c.bipartite = lines[0].words[1] == "bipartite";
    c.k = detail::parse_count(lines[0], 2, "k");
    if (c.k == 0 || (c.bipartite && c.k != 2))
        lines[0].fail("k must be positive, and 2 for bipartite colourings", 2);
    auto index = [](std::vector<std::string>& names, const std::string& name) {
        auto it = std::find(names.begin(), names.end(), name);
        if (it != names.end())
            return static_cast<std::size_t>(it - names.begin());
        names.push_back(name);
        return names.size() - 1;
    };
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto& l = lines[i];
        std::vector<std::size_t> key;
        if (c.bipartite && l.words[0] == "cell" && l.words.size() == 4) {
            key = {index(c.left, l.words[1]), index(c.right, l.words[2])};
        } else if (!c.bipartite && l.words[0] == "set" && l.words.size() == c.k + 2) {
            for (std::size_t w = 1; w <= c.k; ++w)
                key.push_back(index(c.left, l.words[w]));
            std::sort(key.begin(), key.end());
            if (std::adjacent_find(key.begin(), key.end()) != key.end())
                l.fail("a set lists an element twice");
        } else {
            l.fail(c.bipartite ? "expected 'cell X Y COLOR'" : "expected 'set E1 ... Ek COLOR' with k elements");
        }
        if (!c.colors.emplace(key, l.words.back()).second)
            l.fail("colour given twice");
    }
    std::size_t expected = 0;
    if (c.bipartite) {
        expected = c.left.size() * c.right.size();
    } else {
        expected = 1;
        for (std::size_t i = 0; i < c.k; ++i)
            expected = expected * (c.left.size() - i) / (i + 1);
        if (c.left.size() < c.k)
            expected = 0;
    }
    if (c.colors.size() != expected)
        throw ParseError("colouring is not total: " + std::to_string(c.colors.size()) + " of " +
                             std::to_string(expected) + " colours given",
                         lines.back().number, 1);
    return c;
}

} // namespace mnip
