#include "mnip/io.hpp"
#include "mnip/relcore.hpp"
#include "support/generators.hpp"

#include <gtest/gtest.h>

using namespace mnip;

namespace {

Structure triangle_t() {
    Structure m(Signature({{"T", 3}}));
    auto a = m.add_element("a"), b = m.add_element("b"), c = m.add_element("c");
    m.add_tuple("T", {a, b, c});
    return m;
}

} // namespace

TEST(Signature, RejectsBadSymbols) {
    Signature s;
    s.add("E", 2);
    EXPECT_THROW(s.add("E", 3), Error);
    EXPECT_THROW(s.add("F", 0), Error);
    EXPECT_THROW(s.add("a(b", 1), Error);
    EXPECT_EQ(s.index("E"), 0u);
    EXPECT_FALSE(s.find("T"));
    EXPECT_EQ(gen::mixed_signature().max_arity(), 3u);
}

TEST(Structure, TuplesAreChecked) {
    Structure m(gen::graph_signature());
    auto a = m.add_element("a");
    EXPECT_THROW(m.add_tuple("E", {a}), Error);
    EXPECT_THROW(m.add_tuple("E", {a, 7}), Error);
    EXPECT_THROW(m.add_element("a"), Error);
    m.add_tuple("E", {a, a});
    EXPECT_TRUE(m.holds(0, {a, a}));
    EXPECT_EQ(m.add_fresh_element("a"), 1u);
    EXPECT_EQ(m.label(1), "a'1");
}

TEST(Gaifman, TernaryTupleGivesTriangle) {
    auto g = gaifman(triangle_t());
    ASSERT_EQ(g.size(), 3u);
    EXPECT_EQ(g.edge_count(), 3u);
    EXPECT_TRUE(g.adjacent(0, 1) && g.adjacent(1, 2) && g.adjacent(0, 2));
}

TEST(Gaifman, EdgesAreExactlyCoOccurrences) {
    gen::Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        auto m = gen::random_structure(rng, gen::mixed_signature(), gen::pick(rng, 1, 6), 0.05);
        auto g = gaifman(m);
        std::set<std::pair<Element, Element>> want;
        for (std::size_t s = 0; s < m.signature().size(); ++s)
            for (const auto& tup : m.relation(s))
                for (Element x : tup)
                    for (Element y : tup)
                        if (x < y)
                            want.emplace(x, y);
        auto got = g.edges();
        EXPECT_EQ((std::set<std::pair<Element, Element>>(got.begin(), got.end())), want);
    }
}

TEST(Graph, LoopsAreRejected) {
    Graph g;
    auto v = g.add_vertex("v");
    EXPECT_THROW(g.add_edge(v, v), Error);
}

TEST(Subdivide, CountsAndDegrees) {
    for (std::size_t n = 1; n <= 6; ++n)
        for (std::size_t r = 0; r <= 3; ++r) {
            auto g = subdivide(gen::complete_graph(n), r);
            std::size_t pairs = n * (n - 1) / 2;
            EXPECT_EQ(g.size(), n + r * pairs);
            EXPECT_EQ(g.edge_count(), (r + 1) * pairs);
            for (Element v = 0; v < n; ++v)
                EXPECT_EQ(g.degree(v), n - 1);
            for (Element v = static_cast<Element>(n); v < g.size(); ++v)
                EXPECT_EQ(g.degree(v), 2u);
        }
}

TEST(Substructure, InducedRenumbersInOrder) {
    Structure m(gen::graph_signature());
    for (int i = 0; i < 4; ++i)
        m.add_element("v" + std::to_string(i));
    m.add_tuple("E", {0, 1});
    m.add_tuple("E", {1, 3});
    m.add_tuple("E", {3, 2});
    std::vector<Element> keep{3, 1};
    auto s = induced_substructure(m, keep);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s.label(0), "v1");
    EXPECT_EQ(s.label(1), "v3");
    EXPECT_EQ(s.relation(0), (std::set<Tuple>{{0, 1}}));
}

TEST(Substructure, WeakKeepsOnlyGivenTuples) {
    auto m = triangle_t();
    std::vector<Element> all{0, 1, 2};
    auto w = weak_substructure(m, all, {{}});
    EXPECT_TRUE(w.relation(0).empty());
    std::vector<Element> two{0, 1};
    EXPECT_THROW(weak_substructure(m, two, {{{0, 1, 2}}}), Error);
    EXPECT_THROW(weak_substructure(m, all, {{{0, 0, 0}}}), Error);
}

TEST(EqualityType, PairsAndClosure) {
    Tuple t{4, 5, 4, 4};
    auto e = equality_type(t);
    EXPECT_EQ(e.pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 2}, {0, 3}, {2, 3}}));
    EXPECT_EQ(EqualityType::from_pairs(4, {{2, 3}, {0, 3}, {0, 2}}), e);
    EXPECT_THROW(EqualityType::from_pairs(3, {{0, 1}, {1, 2}}), Error);
    EXPECT_THROW(EqualityType::from_pairs(3, {{1, 0}}), Error);
}

TEST(Neighborhood, RadiusAndComponents) {
    Graph g;
    for (int i = 0; i < 5; ++i)
        g.add_vertex();
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    g.add_edge(3, 4);
    std::vector<Element> src{0};
    EXPECT_EQ(neighborhood(g, src, 1), (std::vector<Element>{0, 1}));
    EXPECT_EQ(neighborhood(g, src, std::nullopt), (std::vector<Element>{0, 1, 2}));
}

TEST(Conversions, GraphStructureRoundTrip) {
    gen::Rng rng(2);
    for (int t = 0; t < 20; ++t) {
        auto g = gen::random_graph(rng, gen::pick(rng, 0, 8), 0.4);
        auto back = structure_to_graph(graph_to_structure(g));
        EXPECT_EQ(back.edges(), g.edges());
    }
    Structure m(gen::graph_signature());
    m.add_element("a");
    m.add_element("b");
    m.add_tuple("E", {0, 1});
    EXPECT_THROW(structure_to_graph(m), Error);
}

TEST(Conversions, BipartiteLeftFirst) {
    BipartiteGraph g;
    g.add_left("u");
    g.add_right("v");
    g.add_right("w");
    g.add_edge(0, 1);
    auto m = bipartite_to_structure(g);
    EXPECT_EQ(m.label(2), "w");
    EXPECT_EQ(m.relation(0), (std::set<Tuple>{{0, 2}}));
    EXPECT_EQ(bipartite_to_structure(g, true).relation(0).size(), 2u);
    EXPECT_THROW(g.add_left("v"), Error);
}

TEST(TextFormats, StructuresRoundTrip) {
    gen::Rng rng(3);
    for (int t = 0; t < 30; ++t) {
        auto m = gen::random_structure(rng, gen::mixed_signature(), gen::pick(rng, 0, 4), 0.1);
        auto back = parse_structure(to_text(m));
        EXPECT_EQ(to_text(back), to_text(m));
    }
}

TEST(TextFormats, PointedGraphBipartiteRoundTrip) {
    PointedStructure p{triangle_t(), {2, 0}, {1}};
    auto q = parse_pointed(to_text(p));
    EXPECT_EQ(q.anchors, p.anchors);
    EXPECT_EQ(q.parameters, p.parameters);

    auto g = subdivide(gen::complete_graph(4), 1);
    EXPECT_EQ(to_text(parse_graph(to_text(g))), to_text(g));

    gen::Rng rng(4);
    auto b = gen::random_bipartite(rng, 3, 4);
    EXPECT_EQ(to_text(parse_bipartite(to_text(b))), to_text(b));
}

TEST(TextFormats, ErrorsCarryPositions) {
    try {
        parse_structure("signature E/2\nelement a\nrel E a b\n");
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_EQ(e.column(), 9u);
    }
    EXPECT_THROW(parse_graph("graph\nedge a b\n"), ParseError);
    EXPECT_THROW(parse_structure("element a\n"), ParseError);
    EXPECT_NO_THROW(parse_structure("# comment\nsignature E/2\n\nelement a # trailing\n"));
}
