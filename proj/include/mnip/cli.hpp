#pragma once

// Command-line front end. run() parses argv, reads the named files and calls
// the library; tools/mnip.cpp is only a main() around it.
//
// Exit codes: 0 success, 1 negative answer, 2 input error, 3 budget exceeded.

#include "mnip/canonical.hpp"
#include "mnip/error.hpp"
#include "mnip/evaluator.hpp"
#include "mnip/formula.hpp"
#include "mnip/interp.hpp"
#include "mnip/io.hpp"
#include "mnip/ipencode.hpp"
#include "mnip/ipextract.hpp"
#include "mnip/path.hpp"
#include "mnip/ramsey.hpp"
#include "mnip/relcore.hpp"
#include "mnip/sparsity.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace mnip::cli {

enum Exit : int { ok = 0, negative = 1, input_error = 2, budget_exceeded = 3 };

inline std::string read_file(const std::string& path) {
    if (path == "-") {
        std::ostringstream s;
        s << std::cin.rdbuf();
        return s.str();
    }
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Inline s-expression text when the argument starts with '(', a file otherwise.
inline std::string text_or_file(const std::string& arg) {
    auto first = arg.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && arg[first] == '(')
        return arg;
    return read_file(arg);
}

/// Random bipartite graph with vertices u0.. and v0.., each edge kept with
/// probability 1/2.
inline BipartiteGraph random_bipartite(std::size_t nu, std::size_t nv, std::mt19937_64& rng) {
    BipartiteGraph g;
    for (std::size_t u = 0; u < nu; ++u)
        g.add_left("u" + std::to_string(u));
    for (std::size_t v = 0; v < nv; ++v)
        g.add_right("v" + std::to_string(v));
    for (std::size_t u = 0; u < nu; ++u)
        for (std::size_t v = 0; v < nv; ++v)
            if (rng() & 1u)
                g.add_edge(u, v);
    return g;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sparsity, homomorphism, Ramsey and interpretation tools for finite relational structures", "mnip"};
    app.require_subcommand(1);
    std::size_t budget_nodes = 0;
    std::string output;
    app.add_option("--budget", budget_nodes, "Search node limit (0 = unlimited)");
    app.add_option("-o,--output", output, "Write the result to a file instead of standard output");

    std::string path_a, path_b, path_c;
    std::vector<std::string> paths;
    std::vector<std::string> binds;
    std::size_t n = 0, r = 0, m = 0, rmax = 0, jobs = 1;
    bool augment = false;
    std::vector<std::size_t> random_sizes;
    std::uint64_t seed = 0;
    std::size_t count = 1;

    auto* gaifman_cmd = app.add_subcommand("gaifman", "Gaifman graph of a structure");
    gaifman_cmd->add_option("structure", path_a)->required();

    auto* check_cmd = app.add_subcommand("check", "Model-check a formula on a structure");
    check_cmd->add_option("structure", path_a)->required();
    check_cmd->add_option("formula", path_b, "Formula file or inline text")->required();
    check_cmd->add_option("--bind", binds, "name=element for a free variable or parameter");

    auto* subdiv_cmd = app.add_subcommand("subdiv", "Search for an exact r-subdivided n-clique");
    subdiv_cmd->add_option("graph", path_a)->required();
    subdiv_cmd->add_option("--n", n)->required();
    subdiv_cmd->add_option("--r", r)->required();

    auto* profile_cmd = app.add_subcommand("ndprofile", "Largest subdivided clique per r over graph files");
    profile_cmd->add_option("graphs", paths)->required();
    profile_cmd->add_option("--rmax", rmax)->required();
    profile_cmd->add_option("--jobs", jobs);

    auto* canon_cmd = app.add_subcommand("canon", "Formula to canonical structure, or pointed structure to formula");
    canon_cmd->add_option("input", path_a)->required();

    auto* pathtype_cmd = app.add_subcommand("pathtype", "Path type of a Gaifman-graph path");
    pathtype_cmd->add_option("structure", path_a)->required();
    pathtype_cmd->add_option("vertices", paths)->required();

    auto* ramsey_cmd = app.add_subcommand("ramsey", "Ramsey searches on a colouring file");
    ramsey_cmd->require_subcommand(1);
    auto* mono_cmd = ramsey_cmd->add_subcommand("mono", "Monochromatic m-subset of a uniform colouring");
    mono_cmd->add_option("coloring", path_a)->required();
    mono_cmd->add_option("--m", m)->required();
    auto* biclique_cmd = ramsey_cmd->add_subcommand("biclique", "Monochromatic m x m biclique");
    biclique_cmd->add_option("coloring", path_a)->required();
    biclique_cmd->add_option("--m", m)->required();
    auto* canonical_cmd = ramsey_cmd->add_subcommand("canonical", "n x n grid with canonical colouring");
    canonical_cmd->add_option("coloring", path_a)->required();
    canonical_cmd->add_option("--n", n)->required();

    auto* interp_cmd = app.add_subcommand("interp", "Simple interpretations");
    interp_cmd->require_subcommand(1);
    auto* apply_cmd = interp_cmd->add_subcommand("apply", "Apply an interpretation to a structure");
    apply_cmd->add_option("interpretation", path_a)->required();
    apply_cmd->add_option("structure", path_b)->required();
    auto* hat_cmd = interp_cmd->add_subcommand("hat", "Rewrite a target formula into a source formula");
    hat_cmd->add_option("interpretation", path_a)->required();
    hat_cmd->add_option("formula", path_b)->required();
    auto* reduce_cmd = interp_cmd->add_subcommand("reduce", "Decide a target sentence on I(M) by checking M");
    reduce_cmd->add_option("interpretation", path_a)->required();
    reduce_cmd->add_option("structure", path_b)->required();
    reduce_cmd->add_option("sentence", path_c)->required();

    auto* encode_cmd = app.add_subcommand("encode", "Encode a bipartite graph with a path template");
    encode_cmd->add_option("graph", path_a)->required();
    encode_cmd->add_option("template", path_b)->required();
    encode_cmd->add_flag("--augment", augment, "Add pendant vertices first");

    auto* decode_cmd = app.add_subcommand("decode", "Decode an encoded instance into a graph structure");
    decode_cmd->add_option("encoded", path_a)->required();
    decode_cmd->add_option("template", path_b)->required();

    auto* roundtrip_cmd = app.add_subcommand("roundtrip", "Encode then decode, compare with the input graph");
    roundtrip_cmd->add_option("inputs", paths, "[graph] template")->required();
    roundtrip_cmd->add_option("--random", random_sizes, "NU NV: random graphs instead of a graph file")->expected(2);
    roundtrip_cmd->add_option("--seed", seed);
    roundtrip_cmd->add_option("--count", count, "Number of random graphs");

    auto* extract_cmd = app.add_subcommand("extract", "Extraction pipeline report");
    extract_cmd->add_option("structure", path_a)->required();
    extract_cmd->add_option("witness", path_b, "Subdivided clique witness; searched for when omitted");
    extract_cmd->add_option("--n", n)->required();
    extract_cmd->add_option("--r", r, "Subdivision length used when searching");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "mnip: " << e.what() << "\n";
        return input_error;
    }

    Budget budget{budget_nodes};
    std::ostringstream result;
    int code = ok;
    try {
        if (gaifman_cmd->parsed()) {
            result << to_text(gaifman(parse_structure(read_file(path_a))));
        } else if (check_cmd->parsed()) {
            auto s = parse_structure(read_file(path_a));
            auto f = parse_formula(text_or_file(path_b), &s.signature());
            Assignment a;
            std::set<std::string> params(f.params.begin(), f.params.end());
            for (const auto& b : binds) {
                auto eq = b.find('=');
                if (eq == std::string::npos)
                    throw Error("--bind expects name=element, got " + b);
                auto name = b.substr(0, eq);
                auto e = s.element(b.substr(eq + 1));
                (params.count(name) ? a.parameters : a.variables)[name] = e;
            }
            Evaluator ev(s, budget);
            bool holds = ev.check(f, a);
            result << (holds ? "true" : "false") << "\n";
            code = holds ? ok : negative;
        } else if (subdiv_cmd->parsed()) {
            auto g = parse_graph(read_file(path_a));
            auto w = find_subdivided_clique(g, n, r, budget);
            if (w) {
                result << to_text(*w, g);
            } else {
                result << "none\n";
                code = negative;
            }
        } else if (profile_cmd->parsed()) {
            std::vector<Graph> graphs;
            for (const auto& p : paths)
                graphs.push_back(parse_graph(read_file(p)));
            result << "r n complete\n";
            for (const auto& e : nd_profile(graphs, rmax, budget, jobs))
                result << e.r << " " << e.n << " " << (e.complete ? "yes" : "no") << "\n";
        } else if (canon_cmd->parsed()) {
            auto text = read_file(path_a);
            auto first = text.find_first_not_of(" \t\r\n");
            if (first != std::string::npos && text[first] == '(')
                result << to_text(canonical_structure(parse_formula(text)));
            else
                result << to_string(canonical_formula(parse_pointed(text))) << "\n";
        } else if (pathtype_cmd->parsed()) {
            auto s = parse_structure(read_file(path_a));
            std::vector<Element> vs;
            for (const auto& v : paths)
                vs.push_back(s.element(v));
            result << to_string(path_type(s, vs)) << "\n";
        } else if (ramsey_cmd->parsed()) {
            auto c = parse_coloring(read_file(path_a));
            auto names = [](const std::vector<std::string>& labels, const std::vector<std::size_t>& idx) {
                std::string s;
                for (std::size_t i = 0; i < idx.size(); ++i)
                    s += (i ? " " : "") + labels[idx[i]];
                return s;
            };
            if (mono_cmd->parsed()) {
                if (c.bipartite)
                    throw Error("mono needs a uniform colouring");
                auto s = mono_subset(
                    c.left.size(), c.k, m, [&](const std::vector<std::size_t>& e) { return c.subset(e); }, budget);
                if (s) {
                    result << "subset " << names(c.left, *s) << "\n";
                    if (m >= c.k)
                        result << "color " << c.subset({s->begin(), s->begin() + static_cast<std::ptrdiff_t>(c.k)})
                               << "\n";
                } else {
                    result << "none\n";
                    code = negative;
                }
            } else {
                if (!c.bipartite)
                    throw Error("biclique and canonical need a bipartite colouring");
                auto cell = [&](std::size_t x, std::size_t y) { return c.cell(x, y); };
                if (biclique_cmd->parsed()) {
                    auto b = mono_biclique(c.left.size(), c.right.size(), m, cell, budget);
                    if (b) {
                        result << "left " << names(c.left, b->left) << "\nright " << names(c.right, b->right) << "\n";
                        if (m > 0)
                            result << "color " << c.cell(b->left[0], b->right[0]) << "\n";
                    } else {
                        result << "none\n";
                        code = negative;
                    }
                } else {
                    auto g = find_canonical_grid(c.left.size(), c.right.size(), n, cell, budget);
                    if (g) {
                        result << "left " << names(c.left, g->left) << "\nright " << names(c.right, g->right)
                               << "\ntype " << g->types[0] << "\n";
                    } else {
                        result << "none\n";
                        code = negative;
                    }
                }
            }
        } else if (apply_cmd->parsed()) {
            auto I = parse_interpretation(text_or_file(path_a));
            result << to_text(apply(I, parse_structure(read_file(path_b)), budget).structure);
        } else if (hat_cmd->parsed()) {
            auto I = parse_interpretation(text_or_file(path_a));
            result << to_string(hat(I, parse_formula(text_or_file(path_b), &I.target))) << "\n";
        } else if (reduce_cmd->parsed()) {
            auto I = parse_interpretation(text_or_file(path_a));
            auto s = parse_structure(read_file(path_b));
            auto sentence = parse_formula(text_or_file(path_c), &I.target);
            auto image = apply(I, s, budget).structure;
            bool holds = reduce_mc(image, sentence, I, s, budget);
            result << (holds ? "true" : "false") << "\n";
            code = holds ? ok : negative;
        } else if (encode_cmd->parsed()) {
            auto g = parse_bipartite(read_file(path_a));
            auto t = desymmetrize(parse_template(text_or_file(path_b)));
            if (augment)
                g = pendant_augment(g, t.k);
            result << to_text(encode(g, t));
        } else if (decode_cmd->parsed()) {
            auto inst = parse_encoded(read_file(path_a));
            auto t = desymmetrize(parse_template(text_or_file(path_b)));
            result << to_text(apply(decoder(t), inst.structure, budget).structure);
        } else if (roundtrip_cmd->parsed()) {
            bool random = !random_sizes.empty();
            if (paths.size() != (random ? 1u : 2u))
                throw Error(random ? "roundtrip --random takes only a template" : "roundtrip takes a graph and a template");
            auto t = desymmetrize(parse_template(text_or_file(paths.back())));
            std::vector<BipartiteGraph> graphs;
            if (random) {
                std::mt19937_64 rng(seed);
                for (std::size_t i = 0; i < count; ++i)
                    graphs.push_back(random_bipartite(random_sizes[0], random_sizes[1], rng));
            } else {
                graphs.push_back(parse_bipartite(read_file(paths[0])));
            }
            for (const auto& g : graphs) {
                auto rt = roundtrip(g, t, budget);
                if (!rt.ok) {
                    result << "DIFFERENT: " << rt.detail << "\n";
                    if (random)
                        result << to_text(g);
                    code = negative;
                    break;
                }
            }
            if (code == ok)
                result << "ISOMORPHIC\n";
        } else if (extract_cmd->parsed()) {
            auto s = parse_structure(read_file(path_a));
            auto g = gaifman(s);
            SubdivisionWitness w;
            if (!path_b.empty()) {
                w = parse_witness(read_file(path_b), g);
            } else {
                auto found = find_subdivided_clique(g, 2 * n, r, budget);
                if (!found) {
                    result << "no subdivided clique with " << 2 * n << " branches and r = " << r << "\n";
                    out << result.str();
                    return negative;
                }
                w = *found;
            }
            auto res = extract(s, w, n, budget);
            result << res.report << (res.ok ? "result ok\n" : "result failed\n");
            code = res.ok ? ok : negative;
        }
    } catch (const BudgetExceeded& e) {
        err << "mnip: " << e.what() << "\n";
        return budget_exceeded;
    } catch (const Error& e) {
        err << "mnip: " << e.what() << "\n";
        return input_error;
    }

    if (output.empty()) {
        out << result.str();
    } else {
        std::ofstream file(output, std::ios::binary);
        if (!(file << result.str())) {
            err << "mnip: cannot write " << output << "\n";
            return input_error;
        }
    }
    return code;
}

} // namespace mnip::cli
