#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tandem/errors.hpp"
#include "tandem/util.hpp"

namespace tandem {

struct GraphMeta {
    int size = 0;
    double edge_prob = 0.0;
    std::uint64_t seed = 0;
    std::optional<bool> solvable;
};

// Undirected, unweighted graph plus a color budget k. Vertices keep their
// insertion order; edges are stored as index pairs with lo < hi and are
// deduplicated. Instances are immutable once built and safe to share.
class GraphInstance {
public:
    GraphInstance() = default;

    GraphInstance(std::vector<std::string> vertex_names,
                  const std::vector<std::pair<std::string, std::string>>& edge_list,
                  int k = 0, GraphMeta meta = {}) {
        for (auto& name : vertex_names) add_vertex(name);
        for (const auto& [u, v] : edge_list) add_edge(u, v);
        meta_ = meta;
        meta_.size = static_cast<int>(names_.size());
        set_k(k);
    }

    int vertex_count() const { return static_cast<int>(names_.size()); }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    int k() const { return k_; }
    const GraphMeta& meta() const { return meta_; }
    GraphMeta& meta() { return meta_; }

    const std::vector<std::string>& vertices() const { return names_; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    const std::string& vertex_name(int idx) const { return names_.at(static_cast<size_t>(idx)); }
    const std::vector<int>& neighbors(int idx) const { return adj_.at(static_cast<size_t>(idx)); }
    int degree(int idx) const { return static_cast<int>(adj_.at(static_cast<size_t>(idx)).size()); }

    bool has_vertex(const std::string& name) const { return index_.count(name) > 0; }

    int vertex_index(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw UnknownVertexError("unknown vertex '" + name + "'");
        return it->second;
    }

    bool has_edge(const std::string& u, const std::string& v) const {
        auto a = index_.find(u);
        auto b = index_.find(v);
        if (a == index_.end() || b == index_.end()) return false;
        return edge_set_.count(norm(a->second, b->second)) > 0;
    }

    // Edge endpoints as names, lexicographic within each pair.
    std::vector<std::pair<std::string, std::string>> edge_names() const {
        std::vector<std::pair<std::string, std::string>> out;
        out.reserve(edges_.size());
        for (auto [a, b] : edges_) {
            std::string u = names_[static_cast<size_t>(a)];
            std::string v = names_[static_cast<size_t>(b)];
            if (v < u) std::swap(u, v);
            out.emplace_back(std::move(u), std::move(v));
        }
        return out;
    }

    GraphInstance with_k(int k) const {
        GraphInstance g = *this;
        g.set_k(k);
        return g;
    }

    GraphInstance with_meta(GraphMeta meta) const {
        GraphInstance g = *this;
        meta.size = g.vertex_count();
        g.meta_ = meta;
        return g;
    }

    void set_k(int k) {
        if (k < 0) throw std::invalid_argument("color budget k must be >= 1");
        k_ = k; // 0 means "not yet supplied" (parse_dimacs output)
    }

private:
    friend GraphInstance parse_dimacs(const std::string&);
    friend GraphInstance generate_instance(int, double, std::uint64_t, int);
    friend GraphInstance induced_subgraph(const GraphInstance&, const std::vector<std::string>&);

    static std::pair<int, int> norm(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

    void add_vertex(const std::string& name) {
        if (name.empty()) throw std::invalid_argument("empty vertex name");
        if (index_.count(name)) return;
        index_.emplace(name, static_cast<int>(names_.size()));
        names_.push_back(name);
        adj_.emplace_back();
    }

    // Endpoints must already be vertices; self-loops and duplicates rejected.
    void add_edge(const std::string& u, const std::string& v) {
        if (u == v) throw ParseError(ParseErrc::SelfLoop, "self-loop on vertex '" + u + "'");
        int a = vertex_index(u);
        int b = vertex_index(v);
        auto e = norm(a, b);
        if (!edge_set_.insert(e).second) return;
        edges_.push_back(e);
        adj_[static_cast<size_t>(a)].push_back(b);
        adj_[static_cast<size_t>(b)].push_back(a);
    }

    std::vector<std::string> names_;
    std::unordered_map<std::string, int> index_;
    std::vector<std::pair<int, int>> edges_;
    std::set<std::pair<int, int>> edge_set_;
    std::vector<std::vector<int>> adj_;
    int k_ = 0;
    GraphMeta meta_;
};

inline std::string default_vertex_name(int i, int n) {
    if (n <= 26 && i < 26) return std::string(1, static_cast<char>('a' + i));
    return "v" + std::to_string(i + 1);
}

// ---------------------------------------------------------------------------
// DIMACS-like text I/O.
//
// Accepted on input: `p edge N M` or `p edges N M` headers, edge lines in
// both `e u v` and bare `u v` forms, comments starting with `c`, and a
// `c vertices: ...` roster naming isolated vertices. A two-token line whose
// first token is `c` is an edge (the bare format legitimately produces e.g.
// `c f`) unless the second token is the conventional marker word "edges".

inline GraphInstance parse_dimacs(const std::string& text) {
    std::optional<std::pair<long, long>> declared;
    GraphInstance g;
    std::set<std::pair<std::string, std::string>> seen_edges;
    long parsed_edges = 0;

    auto note_vertex = [&](const std::string& v) { g.add_vertex(v); };
    auto note_edge = [&](const std::string& u, const std::string& v, int lineno) {
        if (u == v)
            throw ParseError(ParseErrc::SelfLoop,
                             "line " + std::to_string(lineno) + ": self-loop on '" + u + "'");
        note_vertex(u);
        note_vertex(v);
        auto key = u < v ? std::pair{u, v} : std::pair{v, u};
        if (seen_edges.insert(key).second) {
            g.add_edge(u, v);
            ++parsed_edges;
        }
    };

    int lineno = 0;
    for (const auto& raw_line : split_lines(text)) {
        ++lineno;
        std::string line = trim(raw_line);
        if (line.empty()) continue;
        auto tok = split_ws(line);

        if (tok[0] == "c") {
            if (tok.size() >= 2 && tok[1] == "vertices:") {
                for (size_t i = 2; i < tok.size(); ++i) note_vertex(tok[i]);
                continue;
            }
            if (tok.size() == 2 && tok[1] != "edges") {
                note_edge(tok[0], tok[1], lineno); // bare edge with endpoint named "c"
                continue;
            }
            continue;
        }

        if (tok[0] == "p") {
            if (tok.size() == 2) { // bare edge with endpoint named "p"
                note_edge(tok[0], tok[1], lineno);
                continue;
            }
            if (tok.size() != 4 || (tok[1] != "edge" && tok[1] != "edges"))
                throw ParseError(ParseErrc::MalformedLine,
                                 "line " + std::to_string(lineno) + ": bad problem line '" + line + "'");
            if (declared)
                throw ParseError(ParseErrc::MalformedLine,
                                 "line " + std::to_string(lineno) + ": duplicate problem line");
            try {
                declared = {std::stol(tok[2]), std::stol(tok[3])};
            } catch (const std::exception&) {
                throw ParseError(ParseErrc::MalformedLine,
                                 "line " + std::to_string(lineno) + ": non-numeric counts in '" + line + "'");
            }
            if (declared->first < 0 || declared->second < 0 || declared->first > 1000000 ||
                declared->second > 10000000)
                throw ParseError(ParseErrc::MalformedLine,
                                 "line " + std::to_string(lineno) + ": unreasonable counts in '" + line + "'");
            continue;
        }

        if (tok[0] == "e") {
            if (tok.size() == 3) {
                note_edge(tok[1], tok[2], lineno);
                continue;
            }
            if (tok.size() == 2) { // bare edge with endpoint named "e"
                note_edge(tok[0], tok[1], lineno);
                continue;
            }
            throw ParseError(ParseErrc::MalformedLine,
                             "line " + std::to_string(lineno) + ": expected 'e u v' in '" + line + "'");
        }

        if (tok.size() != 2)
            throw ParseError(ParseErrc::MalformedLine,
                             "line " + std::to_string(lineno) + ": expected 'u v' in '" + line + "'");
        note_edge(tok[0], tok[1], lineno);
    }

    if (!declared)
        throw ParseError(ParseErrc::MissingHeader, "no 'p edge N M' line found");
    if (declared->first > g.vertex_count()) {
        // vertices that appear in no edge line and no roster are implicit;
        // synthesize scheme names for them up to the declared count
        int n = static_cast<int>(declared->first);
        for (int i = 0; g.vertex_count() < n; ++i) {
            auto name = default_vertex_name(i, n);
            if (!g.has_vertex(name)) g.add_vertex(name);
        }
    }
    if (declared->first != g.vertex_count())
        throw ParseError(ParseErrc::CountMismatch,
                         "declared " + std::to_string(declared->first) + " vertices, parsed " +
                             std::to_string(g.vertex_count()));
    if (declared->second != parsed_edges)
        throw ParseError(ParseErrc::CountMismatch,
                         "declared " + std::to_string(declared->second) + " edges, parsed " +
                             std::to_string(parsed_edges));

    g.meta_.size = g.vertex_count();
    return g;
}

// Canonical serializer: `p edge N M`, one comment line, then sorted `e u v`
// lines with endpoints in lexicographic order. Graphs with isolated vertices
// get a `c vertices:` roster so parse(emit(g)) reproduces the vertex set.
inline std::string emit_dimacs(const GraphInstance& g) {
    auto edges = g.edge_names();
    std::sort(edges.begin(), edges.end());

    bool isolated = false;
    for (int i = 0; i < g.vertex_count(); ++i)
        if (g.degree(i) == 0) { isolated = true; break; }

    std::string out = "p edge " + std::to_string(g.vertex_count()) + " " +
                      std::to_string(g.edge_count());
    if (isolated) {
        out += "\nc vertices:";
        for (const auto& v : g.vertices()) out += " " + v;
    } else {
        out += "\nc edges";
    }
    for (const auto& [u, v] : edges) out += "\ne " + u + " " + v;
    return out;
}

// ---------------------------------------------------------------------------
// Seeded instance generation (Erdos-Renyi style G(n, p)).

inline GraphInstance generate_instance(int n, double edge_prob, std::uint64_t seed, int k) {
    if (n < 1) throw std::invalid_argument("vertex count must be >= 1");
    if (edge_prob < 0.0 || edge_prob > 1.0) throw std::invalid_argument("edge_prob must be in [0,1]");

    GraphInstance g;
    for (int i = 0; i < n; ++i) g.add_vertex(default_vertex_name(i, n));

    std::mt19937_64 rng(seed);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (canonical_u01(rng) < edge_prob)
                g.add_edge(g.vertex_name(i), g.vertex_name(j));

    g.set_k(k);
    g.meta_ = GraphMeta{n, edge_prob, seed, std::nullopt};
    return g;
}

// ---------------------------------------------------------------------------
// Exact decision oracle: backtracking with forward checking, vertices ordered
// by descending degree (ties by identifier). Color symmetry is broken by
// allowing each vertex only colors up to one past the maximum used so far.

enum class ExactStatus { Solution, Unsolvable, Timeout };

struct ExactResult {
    ExactStatus status = ExactStatus::Unsolvable;
    std::map<std::string, int> assignment; // present iff status == Solution
};

namespace detail {

struct ExactSearch {
    int k;
    std::vector<std::vector<int>> adj;   // in search positions
    std::vector<int> color;              // 0 = unassigned, per position
    std::vector<std::vector<int>> bans;  // bans[v][c] = #assigned neighbors with color c
    std::vector<int> free_colors;        // colors with zero bans
    std::chrono::steady_clock::time_point deadline;
    std::uint64_t nodes = 0;
    bool timed_out = false;

    // Must visit every neighbor even after a domain wipes out, so unassign()
    // can undo symmetrically.
    bool assign(int pos, int c) {
        color[static_cast<size_t>(pos)] = c;
        bool viable = true;
        for (int nb : adj[static_cast<size_t>(pos)]) {
            if (color[static_cast<size_t>(nb)] != 0) continue;
            if (bans[static_cast<size_t>(nb)][static_cast<size_t>(c)]++ == 0 &&
                --free_colors[static_cast<size_t>(nb)] == 0)
                viable = false;
        }
        return viable;
    }

    void unassign(int pos, int c) {
        for (int nb : adj[static_cast<size_t>(pos)]) {
            if (color[static_cast<size_t>(nb)] != 0) continue;
            if (--bans[static_cast<size_t>(nb)][static_cast<size_t>(c)] == 0)
                ++free_colors[static_cast<size_t>(nb)];
        }
        color[static_cast<size_t>(pos)] = 0;
    }

    bool solve(int pos, int max_used) {
        if ((++nodes & 1023u) == 0 && std::chrono::steady_clock::now() > deadline) {
            timed_out = true;
            return false;
        }
        if (pos == static_cast<int>(adj.size())) return true;
        int limit = std::min(k, max_used + 1);
        for (int c = 1; c <= limit; ++c) {
            if (bans[static_cast<size_t>(pos)][static_cast<size_t>(c)] > 0) continue;
            bool viable = assign(pos, c);
            if (viable && solve(pos + 1, std::max(max_used, c))) return true;
            unassign(pos, c);
            if (timed_out) return false;
        }
        return false;
    }
};

} // namespace detail

inline ExactResult exact_color(const GraphInstance& g,
                               std::chrono::milliseconds budget = std::chrono::milliseconds(10000)) {
    int n = g.vertex_count();
    int k = g.k();
    if (k < 1) throw std::invalid_argument("exact_color requires k >= 1");

    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (g.degree(a) != g.degree(b)) return g.degree(a) > g.degree(b);
        return g.vertex_name(a) < g.vertex_name(b);
    });
    std::vector<int> pos_of(static_cast<size_t>(n));
    for (int p = 0; p < n; ++p) pos_of[static_cast<size_t>(order[static_cast<size_t>(p)])] = p;

    detail::ExactSearch search{
        k, {}, {}, {}, {}, std::chrono::steady_clock::now() + budget};
    search.adj.resize(static_cast<size_t>(n));
    for (auto [a, b] : g.edges()) {
        search.adj[static_cast<size_t>(pos_of[static_cast<size_t>(a)])].push_back(pos_of[static_cast<size_t>(b)]);
        search.adj[static_cast<size_t>(pos_of[static_cast<size_t>(b)])].push_back(pos_of[static_cast<size_t>(a)]);
    }
    search.color.assign(static_cast<size_t>(n), 0);
    search.bans.assign(static_cast<size_t>(n), std::vector<int>(static_cast<size_t>(k) + 1, 0));
    search.free_colors.assign(static_cast<size_t>(n), k);

    bool found = search.solve(0, 0);
    if (search.timed_out) return {ExactStatus::Timeout, {}};
    if (!found) return {ExactStatus::Unsolvable, {}};

    ExactResult res{ExactStatus::Solution, {}};
    for (int p = 0; p < n; ++p)
        res.assignment[g.vertex_name(order[static_cast<size_t>(p)])] = search.color[static_cast<size_t>(p)];
    return res;
}

// Sets meta.solvable from the oracle. Timeout propagates as SandboxError-free
// ExactStatus so dataset generation can redraw the instance.
inline GraphInstance label_solvability(const GraphInstance& g,
                                       std::chrono::milliseconds budget = std::chrono::milliseconds(10000)) {
    auto res = exact_color(g, budget);
    if (res.status == ExactStatus::Timeout)
        throw OracleTimeoutError("exact_color timed out while labeling instance");
    GraphInstance out = g;
    out.meta().solvable = (res.status == ExactStatus::Solution);
    return out;
}

// ---------------------------------------------------------------------------
// Candidate scoring.

enum class CandidateKind { Assignment, NotSolvableClaim, ParseFailure };

struct ColoringCandidate {
    CandidateKind kind = CandidateKind::ParseFailure;
    std::map<std::string, int> assignment; // present iff kind == Assignment
    std::string raw_text;
    std::vector<std::string> unknown_vertices; // names parsed but absent from the instance
};

struct Conflict {
    std::string u, v;
    int color = 0;
};

struct ConflictReport {
    CandidateKind kind = CandidateKind::ParseFailure;
    std::vector<Conflict> conflicts;            // instance edge order
    std::vector<std::string> conflict_vertices; // deduplicated, instance vertex order
    double score = 0.0;
    std::vector<std::string> notes; // format notes (unknown / missing / out-of-range vertices)
};

// Fraction of edges whose endpoints got distinct in-range colors. An
// unassigned endpoint or a color outside [1,k] violates all incident edges.
// Equal-color edges are additionally enumerated as conflicts. A score of 1.0
// requires every vertex properly colored, so improperly colored isolated
// vertices (invisible to any edge) cap the score below 1.0.
inline ConflictReport score(const GraphInstance& g, const ColoringCandidate& c) {
    ConflictReport rep;
    rep.kind = c.kind;

    if (c.kind == CandidateKind::ParseFailure) {
        rep.score = 0.0;
        return rep;
    }
    if (c.kind == CandidateKind::NotSolvableClaim) {
        if (!g.meta().solvable.has_value())
            throw MissingLabelError("NOT-SOLVABLE claim scored against unlabeled instance");
        rep.score = *g.meta().solvable ? 0.0 : 1.0;
        return rep;
    }

    int n = g.vertex_count();
    int k = g.k();
    std::vector<int> col(static_cast<size_t>(n), 0); // 0 = unassigned
    for (const auto& [name, color] : c.assignment) {
        if (!g.has_vertex(name))
            throw UnknownVertexError("assignment names unknown vertex '" + name + "'");
        col[static_cast<size_t>(g.vertex_index(name))] = color;
    }

    auto proper = [&](int v) { return col[static_cast<size_t>(v)] >= 1 && col[static_cast<size_t>(v)] <= k; };

    long violations = 0;
    std::vector<char> in_conflict(static_cast<size_t>(n), 0);
    for (auto [a, b] : g.edges()) {
        int ca = col[static_cast<size_t>(a)];
        int cb = col[static_cast<size_t>(b)];
        bool assigned_both = ca != 0 && cb != 0;
        if (assigned_both && ca == cb) {
            rep.conflicts.push_back({g.vertex_name(a), g.vertex_name(b), ca});
            in_conflict[static_cast<size_t>(a)] = in_conflict[static_cast<size_t>(b)] = 1;
        }
        bool satisfied = proper(a) && proper(b) && ca != cb;
        if (!satisfied) ++violations;
    }
    for (int v = 0; v < n; ++v)
        if (in_conflict[static_cast<size_t>(v)]) rep.conflict_vertices.push_back(g.vertex_name(v));

    long improper = 0;
    for (int v = 0; v < n; ++v) {
        if (col[static_cast<size_t>(v)] == 0) {
            rep.notes.push_back("vertex '" + g.vertex_name(v) + "' has no color assigned");
            ++improper;
        } else if (!proper(v)) {
            rep.notes.push_back("vertex '" + g.vertex_name(v) + "' has color " +
                                std::to_string(col[static_cast<size_t>(v)]) + " outside [1, " +
                                std::to_string(k) + "]");
            ++improper;
        }
    }
    for (const auto& u : c.unknown_vertices)
        rep.notes.push_back("unknown vertex name '" + u + "' ignored");

    long m = g.edge_count();
    if (m > 0) {
        if (violations > 0)
            rep.score = static_cast<double>(m - violations) / static_cast<double>(m);
        else
            rep.score = improper == 0
                            ? 1.0
                            : static_cast<double>(m) / static_cast<double>(m + improper);
    } else {
        rep.score = improper == 0 ? 1.0 : 0.0;
    }
    return rep;
}

// ---------------------------------------------------------------------------

inline GraphInstance induced_subgraph(const GraphInstance& g, const std::vector<std::string>& vs) {
    std::unordered_set<std::string> keep;
    for (const auto& v : vs) {
        g.vertex_index(v); // throws UnknownVertexError
        keep.insert(v);
    }

    GraphInstance sub;
    for (const auto& name : g.vertices())
        if (keep.count(name)) sub.add_vertex(name);
    for (auto [a, b] : g.edges()) {
        const auto& u = g.vertex_name(a);
        const auto& v = g.vertex_name(b);
        if (keep.count(u) && keep.count(v)) sub.add_edge(u, v);
    }
    sub.set_k(g.k());
    sub.meta_.size = sub.vertex_count();
    return sub;
}

} // namespace tandem
