#pragma once

#include "negcq/core.hpp"
#include "negcq/rational.hpp"

#include <cstdint>
#include <limits>
#include <numeric>
#include <map>
#include <optional>

namespace negcq {

struct VertexOrdering {
    std::vector<int> sigma;  // v_1..v_n; v_n is eliminated first
    bool f_constrained = false;
    std::vector<int> free;

    // F occupies a prefix of sigma.
    bool has_f_prefix(const std::vector<int>& F) const {
        std::set<int> f(F.begin(), F.end());
        for (std::size_t i = 0; i < sigma.size(); ++i)
            if ((i < f.size()) != (f.count(sigma[i]) > 0)) return false;
        return true;
    }
};

struct BagCover {
    std::vector<int> bag;
    Rational rho;
    std::vector<Rational> weights;  // one per edge of H
};

struct WidthEstimate {
    Rational value;
    std::vector<BagCover> certificate;
    bool optimal = true;  // false when a heuristic ordering was used
};

struct EliminationStep {
    int vertex;
    std::vector<int> J;
    Hypergraph after;
};

// J^σ_n first. Isolated vertices yield J = {v}.
inline std::vector<EliminationStep> elimination_sequence(const Hypergraph& H, const VertexOrdering& order) {
    std::vector<int> check = order.sigma;
    std::sort(check.begin(), check.end());
    if (check != H.vertices) throw ParameterError("ordering is not a permutation of the vertex set");
    Hypergraph cur = H;
    std::vector<EliminationStep> out;
    for (auto it = order.sigma.rbegin(); it != order.sigma.rend(); ++it) {
        const int v = *it;
        std::set<int> J{v};
        Hypergraph next;
        for (int u : cur.vertices)
            if (u != v) next.add_vertex(u);
        for (const auto& e : cur.edges) {
            if (std::binary_search(e.begin(), e.end(), v)) J.insert(e.begin(), e.end());
            else next.edges.push_back(e);
        }
        std::vector<int> rest;
        for (int u : J)
            if (u != v) rest.push_back(u);
        if (!rest.empty()) next.add_edge(rest);
        out.push_back({v, std::vector<int>(J.begin(), J.end()), next});
        cur = std::move(next);
    }
    return out;
}

namespace detail {

// max 1·y s.t. A y ≤ 1, y ≥ 0 by tableau simplex with Bland's rule; the slack
// reduced costs at optimum are the primal (edge cover) weights.
inline std::pair<Rational, std::vector<Rational>> cover_lp(const std::vector<std::vector<int>>& rows, std::size_t n) {
    const std::size_t m = rows.size();
    const std::size_t cols = n + m;
    std::vector<std::vector<Rational>> T(m, std::vector<Rational>(cols + 1, 0));
    for (std::size_t i = 0; i < m; ++i) {
        for (int j : rows[i]) T[i][static_cast<std::size_t>(j)] = 1;
        T[i][n + i] = 1;
        T[i][cols] = 1;
    }
    std::vector<Rational> z(cols + 1, 0);
    for (std::size_t j = 0; j < n; ++j) z[j] = -1;
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) basis[i] = n + i;
    for (;;) {
        std::size_t enter = cols;
        for (std::size_t j = 0; j < cols; ++j)
            if (z[j] < 0) { enter = j; break; }
        if (enter == cols) break;
        std::size_t leave = m;
        Rational best;
        for (std::size_t i = 0; i < m; ++i) {
            if (T[i][enter] <= 0) continue;
            const Rational ratio = T[i][cols] / T[i][enter];
            if (leave == m || ratio < best || (ratio == best && basis[i] < basis[leave])) {
                leave = i;
                best = ratio;
            }
        }
        if (leave == m) throw ConstructionBug("cover LP dual unbounded");
        const Rational piv = T[leave][enter];
        for (auto& x : T[leave]) x /= piv;
        for (std::size_t i = 0; i < m; ++i) {
            if (i == leave || T[i][enter] == 0) continue;
            const Rational f = T[i][enter];
            for (std::size_t j = 0; j <= cols; ++j) T[i][j] -= f * T[leave][j];
        }
        if (z[enter] != 0) {
            const Rational f = z[enter];
            for (std::size_t j = 0; j <= cols; ++j) z[j] -= f * T[leave][j];
        }
        basis[leave] = enter;
    }
    std::vector<Rational> w(m);
    for (std::size_t i = 0; i < m; ++i) w[i] = z[n + i];
    return {z[cols], w};
}

}  // namespace detail

inline BagCover fractional_edge_cover_bag(const Hypergraph& H, const std::vector<int>& B) {
    std::vector<int> bag = B;
    std::sort(bag.begin(), bag.end());
    bag.erase(std::unique(bag.begin(), bag.end()), bag.end());
    std::map<int, int> idx;
    for (int v : bag) {
        if (!H.has_vertex(v)) throw InfeasibleCover("vertex " + std::to_string(v) + " is not in the hypergraph");
        idx.emplace(v, static_cast<int>(idx.size()));
    }
    std::vector<std::vector<int>> rows;
    std::vector<std::size_t> edge_of_row;
    std::vector<int> covered(bag.size(), 0);
    for (std::size_t e = 0; e < H.edges.size(); ++e) {
        std::vector<int> row;
        for (int v : H.edges[e])
            if (auto it = idx.find(v); it != idx.end()) { row.push_back(it->second); covered[static_cast<std::size_t>(it->second)] = 1; }
        if (!row.empty()) { rows.push_back(row); edge_of_row.push_back(e); }
    }
    for (std::size_t i = 0; i < bag.size(); ++i)
        if (!covered[i]) throw InfeasibleCover("vertex " + std::to_string(bag[i]) + " lies in no edge");
    BagCover out;
    out.bag = bag;
    out.weights.assign(H.edges.size(), 0);
    if (bag.empty()) { out.rho = 0; return out; }
    auto [value, w] = detail::cover_lp(rows, bag.size());
    out.rho = value;
    for (std::size_t i = 0; i < w.size(); ++i) out.weights[edge_of_row[i]] = w[i];
    return out;
}

inline WidthEstimate fractional_edge_cover(const Hypergraph& H, const std::vector<int>& B) {
    WidthEstimate w;
    w.certificate.push_back(fractional_edge_cover_bag(H, B));
    w.value = w.certificate.back().rho;
    return w;
}

// Exact replay: weights nonnegative, every bag vertex covered ≥ 1, total = rho.
inline bool verify_cover(const Hypergraph& H, const BagCover& c) {
    if (c.weights.size() != H.edges.size()) return false;
    Rational total = 0;
    for (const Rational& w : c.weights) {
        if (w < 0) return false;
        total += w;
    }
    if (total != c.rho) return false;
    for (int v : c.bag) {
        Rational s = 0;
        for (std::size_t e = 0; e < H.edges.size(); ++e)
            if (std::binary_search(H.edges[e].begin(), H.edges[e].end(), v)) s += c.weights[e];
        if (s < 1) return false;
    }
    return true;
}

inline WidthEstimate induced_fhtw(const Hypergraph& H, const VertexOrdering& order) {
    WidthEstimate out;
    out.value = 0;
    for (const auto& step : elimination_sequence(H, order)) {
        BagCover c = fractional_edge_cover_bag(H, step.J);
        if (c.rho > out.value) out.value = c.rho;
        out.certificate.push_back(std::move(c));
    }
    return out;
}

// Orderings with F first: non-F vertices are eliminated before any F vertex.
inline VertexOrdering min_fill_ordering(const Hypergraph& H, const std::vector<int>& F) {
    std::map<int, std::set<int>> adj;
    for (int v : H.vertices) adj[v];
    for (const auto& e : H.edges)
        for (int a : e)
            for (int b : e)
                if (a != b) adj[a].insert(b);
    std::set<int> f(F.begin(), F.end());
    std::set<int> remaining(H.vertices.begin(), H.vertices.end());
    std::vector<int> elim;
    while (!remaining.empty()) {
        bool any_nonfree = false;
        for (int v : remaining)
            if (!f.count(v)) any_nonfree = true;
        int best = -1;
        std::size_t best_fill = std::numeric_limits<std::size_t>::max();
        for (int v : remaining) {
            if (any_nonfree && f.count(v)) continue;
            std::size_t fill = 0;
            for (int a : adj[v])
                for (int b : adj[v])
                    if (a < b && !adj[a].count(b)) ++fill;
            if (fill < best_fill) { best_fill = fill; best = v; }
        }
        for (int a : adj[best])
            for (int b : adj[best])
                if (a != b) adj[a].insert(b);
        for (int a : adj[best]) adj[a].erase(best);
        adj.erase(best);
        remaining.erase(best);
        elim.push_back(best);
    }
    VertexOrdering out;
    out.sigma.assign(elim.rbegin(), elim.rend());
    out.f_constrained = !F.empty();
    out.free = F;
    return out;
}

inline std::pair<VertexOrdering, WidthEstimate> optimal_ordering(const Hypergraph& H, const std::vector<int>& F,
                                                                 std::size_t cap = 16) {
    const std::size_t n = H.vertices.size();
    if (n > cap || n > 30)
        throw PlanningBudgetExceeded(std::to_string(n) + " vertices exceed the ordering cap of " + std::to_string(cap));
    std::vector<std::uint32_t> nbr(n, 0);
    for (const auto& e : H.edges)
        for (int a : e)
            for (int b : e)
                if (a != b) nbr[H.vertex_index(a)] |= 1u << H.vertex_index(b);
    std::uint32_t fmask = 0;
    for (int v : F) {
        if (!H.has_vertex(v)) throw ParameterError("free variable " + std::to_string(v) + " is not a vertex");
        fmask |= 1u << H.vertex_index(v);
    }
    const std::uint32_t full = n == 32 ? ~0u : ((1u << n) - 1);
    const std::uint32_t nonfree = full & ~fmask;
    // J of v given eliminated set S: v plus vertices outside S reachable through S.
    auto j_of = [&](std::size_t v, std::uint32_t S) {
        std::uint32_t reach = nbr[v], seen = 0, frontier = nbr[v] & S;
        while (frontier) {
            seen |= frontier;
            std::uint32_t next = 0;
            for (std::uint32_t f = frontier; f; f &= f - 1) next |= nbr[static_cast<std::size_t>(__builtin_ctz(f))];
            reach |= next;
            frontier = next & S & ~seen;
        }
        return (reach & ~S) | (1u << v);
    };
    std::unordered_map<std::uint32_t, Rational> rho_cache;
    auto rho = [&](std::uint32_t J) -> const Rational& {
        auto it = rho_cache.find(J);
        if (it != rho_cache.end()) return it->second;
        std::vector<int> bag;
        for (std::size_t i = 0; i < n; ++i)
            if (J >> i & 1u) bag.push_back(H.vertices[i]);
        return rho_cache.emplace(J, fractional_edge_cover_bag(H, bag).rho).first->second;
    };
    const std::size_t states = std::size_t{1} << n;
    std::vector<std::optional<Rational>> dp(states);
    std::vector<int> choice(states, -1);
    dp[0] = Rational(0);
    for (std::uint32_t S = 0; S < states; ++S) {
        if (!dp[S]) continue;
        const bool nonfree_done = (S & nonfree) == nonfree;
        for (std::size_t v = 0; v < n; ++v) {
            if (S >> v & 1u) continue;
            const bool is_free = fmask >> v & 1u;
            if (is_free != nonfree_done) continue;
            const std::uint32_t T = S | (1u << v);
            Rational w = rho(j_of(v, S));
            if (w < *dp[S]) w = *dp[S];
            if (!dp[T] || w < *dp[T]) { dp[T] = w; choice[T] = static_cast<int>(v); }
        }
    }
    std::vector<int> elim;
    for (std::uint32_t S = full; S;) {
        const int v = choice[S];
        elim.push_back(H.vertices[static_cast<std::size_t>(v)]);
        S &= ~(1u << v);
    }
    VertexOrdering order;
    order.sigma.assign(elim.begin(), elim.end());  // last chosen is eliminated first
    order.f_constrained = !F.empty();
    order.free = F;
    WidthEstimate w = induced_fhtw(H, order);
    if (w.value != *dp[full]) throw ConstructionBug("ordering DP disagrees with its own replay");
    return {order, w};
}

// Optimal under the cap, min-fill above it (flagged non-optimal).
inline std::pair<VertexOrdering, WidthEstimate> plan_ordering(const Hypergraph& H, const std::vector<int>& F,
                                                              std::size_t cap = 16) {
    if (H.vertices.size() <= cap) return optimal_ordering(H, F, cap);
    VertexOrdering order = min_fill_ordering(H, F);
    WidthEstimate w = induced_fhtw(H, order);
    w.optimal = false;
    return {order, w};
}

// ---------------------------------------------------------------- tree decompositions

struct TreeDecomposition {
    std::vector<std::vector<int>> bags;  // sorted vertex sets
    std::vector<int> parent;             // -1 at the root
    std::vector<int> witness;            // F-connex witness nodes

    std::vector<std::vector<int>> neighbours() const {
        std::vector<std::vector<int>> adj(bags.size());
        for (std::size_t i = 0; i < parent.size(); ++i)
            if (parent[i] >= 0) {
                adj[i].push_back(parent[i]);
                adj[static_cast<std::size_t>(parent[i])].push_back(static_cast<int>(i));
            }
        return adj;
    }
    // Node sequence along the unique tree path a..b.
    std::vector<int> path(int a, int b) const {
        auto adj = neighbours();
        std::vector<int> prev(bags.size(), -2);
        std::vector<int> queue{a};
        prev[static_cast<std::size_t>(a)] = -1;
        for (std::size_t q = 0; q < queue.size(); ++q)
            for (int y : adj[static_cast<std::size_t>(queue[q])])
                if (prev[static_cast<std::size_t>(y)] == -2) { prev[static_cast<std::size_t>(y)] = queue[q]; queue.push_back(y); }
        std::vector<int> out;
        for (int x = b; x != -1; x = prev[static_cast<std::size_t>(x)]) {
            if (x == -2) return {};
            out.push_back(x);
        }
        std::reverse(out.begin(), out.end());
        return out;
    }
    bool contains(std::size_t node, int v) const {
        return std::binary_search(bags[node].begin(), bags[node].end(), v);
    }
};

namespace detail {

inline bool connected_nodes(const TreeDecomposition& td, const std::vector<int>& nodes) {
    if (nodes.empty()) return true;
    std::set<int> in(nodes.begin(), nodes.end());
    auto adj = td.neighbours();
    std::set<int> seen{nodes.front()};
    std::vector<int> stack{nodes.front()};
    while (!stack.empty()) {
        const int x = stack.back();
        stack.pop_back();
        for (int y : adj[static_cast<std::size_t>(x)])
            if (in.count(y) && seen.insert(y).second) stack.push_back(y);
    }
    return seen.size() == in.size();
}

}  // namespace detail

inline bool td_covers_edges(const TreeDecomposition& td, const std::vector<std::vector<int>>& edges) {
    for (const auto& e : edges) {
        bool ok = false;
        for (const auto& b : td.bags)
            if (std::includes(b.begin(), b.end(), e.begin(), e.end())) { ok = true; break; }
        if (!ok) return false;
    }
    return true;
}

inline bool td_running_intersection(const TreeDecomposition& td) {
    std::set<int> all;
    for (const auto& b : td.bags) all.insert(b.begin(), b.end());
    for (int v : all) {
        std::vector<int> nodes;
        for (std::size_t i = 0; i < td.bags.size(); ++i)
            if (td.contains(i, v)) nodes.push_back(static_cast<int>(i));
        if (!detail::connected_nodes(td, nodes)) return false;
    }
    return true;
}

inline bool td_is_tree(const TreeDecomposition& td) {
    int roots = 0;
    for (int p : td.parent) roots += p < 0;
    std::vector<int> all(td.bags.size());
    std::iota(all.begin(), all.end(), 0);
    return (td.bags.empty() || roots == 1) && detail::connected_nodes(td, all);
}

inline bool td_f_connex(const TreeDecomposition& td, const std::vector<int>& F) {
    std::set<int> uni;
    for (int n : td.witness) uni.insert(td.bags[static_cast<std::size_t>(n)].begin(), td.bags[static_cast<std::size_t>(n)].end());
    return uni == std::set<int>(F.begin(), F.end()) && detail::connected_nodes(td, td.witness);
}

inline bool td_valid(const TreeDecomposition& td, const Hypergraph& H) {
    return td_is_tree(td) && td_covers_edges(td, H.edges) && td_running_intersection(td);
}

// Bags are J^σ_j; the parent of bag j is the bag of the latest-σ vertex of J_j − {v_j}.
// Nested bags of the same kind (free / non-free) are merged; nodes are listed in σ order.
inline TreeDecomposition ordering_to_tree_decomposition(const Hypergraph& H, const VertexOrdering& order,
                                                        const std::vector<int>& F = {}) {
    const auto steps = elimination_sequence(H, order);
    const std::size_t n = order.sigma.size();
    std::map<int, std::size_t> pos;
    for (std::size_t i = 0; i < n; ++i) pos[order.sigma[i]] = i;
    std::set<int> f(F.begin(), F.end());
    std::vector<std::vector<int>> bag(n);
    std::vector<int> parent(n, -1);
    for (const auto& s : steps) {
        const std::size_t j = pos[s.vertex];
        bag[j] = s.J;
        int best = -1;
        for (int u : s.J)
            if (u != s.vertex && (best < 0 || pos[u] > static_cast<std::size_t>(best))) best = static_cast<int>(pos[u]);
        parent[j] = best;
    }
    std::vector<int> alive(n, 1);
    auto kind = [&](std::size_t j) { return f.count(order.sigma[j]) > 0; };
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t c = 0; c < n && !changed; ++c) {
            if (!alive[c] || parent[c] < 0) continue;
            const std::size_t p = static_cast<std::size_t>(parent[c]);
            if (kind(c) != kind(p)) continue;
            const bool c_in_p = std::includes(bag[p].begin(), bag[p].end(), bag[c].begin(), bag[c].end());
            const bool p_in_c = std::includes(bag[c].begin(), bag[c].end(), bag[p].begin(), bag[p].end());
            if (!c_in_p && !p_in_c) continue;
            // keep the lower σ index as the survivor so node order follows σ
            const std::size_t keep = std::min(c, p), drop = std::max(c, p);
            if (p_in_c) bag[p] = bag[c];
            bag[keep] = bag[p];
            const int new_parent = parent[p];
            for (std::size_t x = 0; x < n; ++x)
                if (alive[x] && (parent[x] == static_cast<int>(c) || parent[x] == static_cast<int>(p)))
                    parent[x] = static_cast<int>(keep);
            parent[keep] = new_parent;
            alive[drop] = 0;
            changed = true;
        }
    }
    std::vector<int> remap(n, -1);
    TreeDecomposition td;
    for (std::size_t j = 0; j < n; ++j)
        if (alive[j]) { remap[j] = static_cast<int>(td.bags.size()); td.bags.push_back(bag[j]); }
    td.parent.assign(td.bags.size(), -1);
    std::vector<int> free_roots, other_roots;
    for (std::size_t j = 0; j < n; ++j) {
        if (!alive[j]) continue;
        const int me = remap[j];
        if (parent[j] >= 0) td.parent[static_cast<std::size_t>(me)] = remap[static_cast<std::size_t>(parent[j])];
        else (kind(j) ? free_roots : other_roots).push_back(me);
        if (kind(j)) td.witness.push_back(me);
    }
    std::vector<int> roots = free_roots;
    roots.insert(roots.end(), other_roots.begin(), other_roots.end());
    for (std::size_t i = 1; i < roots.size(); ++i) td.parent[static_cast<std::size_t>(roots[i])] = roots[i - 1];
    return td;
}

}  // namespace negcq
