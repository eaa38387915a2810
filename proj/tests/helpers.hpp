#pragma once

// Test-only oracles and fixtures. Everything here recomputes expectations
// independently of the library code paths it checks.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tandem/graph.hpp"

namespace testsupport {

// The 10-vertex / 12-edge instance used throughout the replay tests.
inline const char* walkthrough_dimacs() {
    return "p edges 10 12\n"
           " c edges\n"
           " a b\n"
           " a c\n"
           " b d\n"
           " b e\n"
           " c f\n"
           " d g\n"
           " e h\n"
           " f i\n"
           " g j\n"
           " h i\n"
           " h j\n"
           " i j\n";
}

inline tandem::GraphInstance walkthrough_graph() {
    return tandem::parse_dimacs(walkthrough_dimacs()).with_k(4);
}

// First attempt: three conflicts on the {h,i,j} triangle, nothing else.
inline const char* walkthrough_attempt1() {
    return "(a 1)  (b 2)  (c 2)  (d 1)  (e 1)\n(f 1)  (g 2)  (h 3)  (i 3)  (j 3)";
}

// Second attempt of the success path: a valid 4-coloring.
inline const char* walkthrough_attempt2_correct() {
    return "(a 1)  (b 2)  (c 3)  (d 1)  (e 3)\n(f 1)  (g 2)  (h 2)  (i 4)  (j 1)";
}

// Second attempt of the fallback path: introduces the (a,c) conflict.
inline const char* walkthrough_attempt2_incorrect() {
    return "(a 2)  (b 1)  (c 2)  (d 3)  (e 4)\n(f 1)  (g 2)  (h 1)  (i 2)  (j 3)";
}

// Exhaustive k^n enumeration: is there any proper <=k coloring?
inline bool brute_force_solvable(const tandem::GraphInstance& g) {
    int n = g.vertex_count();
    int k = g.k();
    std::vector<int> colors(static_cast<size_t>(n), 1);
    while (true) {
        bool ok = true;
        for (auto [a, b] : g.edges())
            if (colors[static_cast<size_t>(a)] == colors[static_cast<size_t>(b)]) { ok = false; break; }
        if (ok) return true;
        int pos = 0;
        while (pos < n) {
            if (++colors[static_cast<size_t>(pos)] <= k) break;
            colors[static_cast<size_t>(pos)] = 1;
            ++pos;
        }
        if (pos == n) return false;
    }
}

// Checks a returned assignment directly against the instance.
inline bool is_proper_coloring(const tandem::GraphInstance& g,
                               const std::map<std::string, int>& assignment) {
    for (const auto& v : g.vertices()) {
        auto it = assignment.find(v);
        if (it == assignment.end() || it->second < 1 || it->second > g.k()) return false;
    }
    for (const auto& [u, v] : g.edge_names())
        if (assignment.at(u) == assignment.at(v)) return false;
    return true;
}

// Independent edge-by-edge recount of the correctness fraction, written
// against the name-based edge list rather than the library's index paths.
inline double recount_score(const tandem::GraphInstance& g,
                            const std::map<std::string, int>& assignment) {
    long m = g.edge_count();
    auto proper = [&](const std::string& v) {
        auto it = assignment.find(v);
        return it != assignment.end() && it->second >= 1 && it->second <= g.k();
    };
    long violated = 0;
    for (const auto& [u, v] : g.edge_names()) {
        bool same = assignment.count(u) && assignment.count(v) &&
                    assignment.at(u) == assignment.at(v);
        if (!(proper(u) && proper(v)) || same) ++violated;
    }
    long improper = 0;
    for (const auto& v : g.vertices())
        if (!proper(v)) ++improper;

    if (m == 0) return improper == 0 ? 1.0 : 0.0;
    if (violated > 0) return static_cast<double>(m - violated) / static_cast<double>(m);
    return improper == 0 ? 1.0 : static_cast<double>(m) / static_cast<double>(m + improper);
}

} // namespace testsupport
