#pragma once

#include "negcq/colorcode.hpp"
#include "negcq/parser.hpp"
#include "negcq/widths.hpp"

namespace negcq {

// H′: the disjunct's hypergraph plus color variables C_i, FD edges {X_i, C_i} and NAE(C_S) edges.
struct ColorJoinIR {
    QueryIR query;                          // disjunct with the colored NAE atoms removed
    std::vector<std::string> var_names;     // input names followed by color names
    std::vector<Var> input_vars;            // U, sorted
    std::map<Var, Var> color_of;            // X_i -> C_i
    std::map<Var, Var> input_of;            // C_i -> X_i
    std::vector<std::vector<Var>> fd_edges;
    std::vector<std::vector<Var>> color_edges;  // NAE(C_S), in query order
    Hypergraph H;                           // positive atoms only
    Hypergraph Hprime;
    std::size_t c = 0;
    std::shared_ptr<const ColorFamily> family;

    bool is_color(Var v) const { return input_of.count(v) > 0; }
};

inline Hypergraph atom_hypergraph(const QueryIR& q) {
    Hypergraph H;
    for (const Atom& a : q.positive_atoms) {
        std::vector<int> e(a.vars.begin(), a.vars.end());
        H.add_edge(e);
    }
    for (const auto& [v, r] : q.singleton_filters) H.add_edge({v});
    for (const auto& [v, d] : q.domain_decls) H.add_edge({v});
    return H;
}

// `colored` selects which NAE atoms of the disjunct become color edges (default: all).
inline ColorJoinIR colors_as_join(const QueryIR& disjunct, std::size_t c, std::shared_ptr<const ColorFamily> F,
                                  std::vector<std::size_t> colored = {}, bool all = true) {
    ColorJoinIR out;
    if (all) {
        colored.clear();
        for (std::size_t i = 0; i < disjunct.nae_atoms.size(); ++i) colored.push_back(i);
    }
    out.query = disjunct;
    out.query.nae_atoms.clear();
    std::set<Var> U;
    for (std::size_t i = 0; i < disjunct.nae_atoms.size(); ++i) {
        if (std::find(colored.begin(), colored.end(), i) == colored.end()) out.query.nae_atoms.push_back(disjunct.nae_atoms[i]);
        else U.insert(disjunct.nae_atoms[i].begin(), disjunct.nae_atoms[i].end());
    }
    out.var_names = disjunct.var_names;
    out.input_vars.assign(U.begin(), U.end());
    for (Var x : out.input_vars) {
        const Var cv = static_cast<Var>(out.var_names.size());
        out.var_names.push_back("C_" + disjunct.name(x));
        out.color_of[x] = cv;
        out.input_of[cv] = x;
        out.fd_edges.push_back({x, cv});
    }
    for (std::size_t i : colored) {
        std::vector<Var> e;
        for (Var x : disjunct.nae_atoms[i]) e.push_back(out.color_of[x]);
        out.color_edges.push_back(e);
    }
    out.H = atom_hypergraph(out.query);
    out.Hprime = out.H;
    for (const auto& e : out.fd_edges) out.Hprime.add_edge(e);
    for (const auto& e : out.color_edges) out.Hprime.add_edge(e);
    out.c = c;
    out.family = std::move(F);
    return out;
}

// ---------------------------------------------------------------- color amendment

namespace detail {

// Nodes of the minimal subtree spanning all `marked` nodes.
inline std::vector<char> spanning_subtree(const TreeDecomposition& td, const std::vector<char>& marked) {
    const std::size_t n = td.bags.size();
    auto adj = td.neighbours();
    std::vector<char> in(n, 1);
    std::vector<std::size_t> deg(n);
    for (std::size_t i = 0; i < n; ++i) deg[i] = adj[i].size();
    std::vector<std::size_t> leaves;
    for (std::size_t i = 0; i < n; ++i)
        if (deg[i] <= 1 && !marked[i]) leaves.push_back(i);
    std::size_t alive = n;
    while (!leaves.empty()) {
        const std::size_t v = leaves.back();
        leaves.pop_back();
        if (!in[v] || alive == 1) continue;
        in[v] = 0;
        --alive;
        for (int w : adj[v]) {
            const auto u = static_cast<std::size_t>(w);
            if (!in[u]) continue;
            if (--deg[u] <= 1 && !marked[u]) leaves.push_back(u);
        }
    }
    if (std::none_of(marked.begin(), marked.end(), [](char m) { return m; })) return std::vector<char>(n, 0);
    return in;
}

inline void add_to_bag(std::vector<int>& bag, int v) {
    auto it = std::lower_bound(bag.begin(), bag.end(), v);
    if (it == bag.end() || *it != v) bag.insert(it, v);
}

inline bool bag_has(const std::vector<int>& bag, int v) { return std::binary_search(bag.begin(), bag.end(), v); }

inline void repair_running_intersection(TreeDecomposition& td, int v) {
    std::vector<char> marked(td.bags.size());
    for (std::size_t i = 0; i < td.bags.size(); ++i) marked[i] = bag_has(td.bags[i], v);
    const auto span = spanning_subtree(td, marked);
    for (std::size_t i = 0; i < td.bags.size(); ++i)
        if (span[i]) add_to_bag(td.bags[i], v);
}

}  // namespace detail

// Objective tuple: (max non-FD colors in a bag, distinct non-FD colors, non-FD occurrences).
inline std::tuple<std::size_t, std::size_t, std::size_t> amendment_objective(const TreeDecomposition& td,
                                                                             const std::map<Var, Var>& input_of) {
    std::size_t worst = 0, total = 0;
    std::set<Var> distinct;
    for (const auto& bag : td.bags) {
        std::size_t k = 0;
        for (int v : bag) {
            auto it = input_of.find(v);
            if (it != input_of.end() && !detail::bag_has(bag, it->second)) {
                ++k;
                distinct.insert(v);
            }
        }
        worst = std::max(worst, k);
        total += k;
    }
    return {worst, distinct.size(), total};
}

// Greedy: C_i joins every bag holding X_i, then each uncovered NAE(C_S) goes to the candidate bag
// with the lexicographically least objective (ties: earliest bag), followed by path repair.
inline TreeDecomposition color_amendment(const TreeDecomposition& td, const std::vector<std::vector<Var>>& color_edges,
                                         const std::map<Var, Var>& input_of) {
    TreeDecomposition out = td;
    for (auto& bag : out.bags) {
        std::vector<int> add;
        for (const auto& [cv, x] : input_of)
            if (detail::bag_has(bag, x)) add.push_back(cv);
        for (int v : add) detail::add_to_bag(bag, v);
    }
    for (const auto& S : color_edges) {
        bool covered = false;
        for (const auto& bag : out.bags)
            covered = covered || std::all_of(S.begin(), S.end(), [&](Var v) { return detail::bag_has(bag, v); });
        if (covered) continue;
        std::optional<std::tuple<std::size_t, std::size_t, std::size_t>> best;
        TreeDecomposition chosen;
        for (std::size_t t = 0; t < out.bags.size(); ++t) {
            if (std::none_of(S.begin(), S.end(), [&](Var v) { return detail::bag_has(out.bags[t], v); })) continue;
            TreeDecomposition trial = out;
            for (Var v : S) detail::add_to_bag(trial.bags[t], v);
            for (Var v : S) detail::repair_running_intersection(trial, v);
            const auto obj = amendment_objective(trial, input_of);
            if (!best || obj < *best) { best = obj; chosen = std::move(trial); }
        }
        if (!best) {  // no bag meets C_S: place it in the first bag
            for (Var v : S) detail::add_to_bag(out.bags[0], v);
            for (Var v : S) detail::repair_running_intersection(out, v);
        } else {
            out = std::move(chosen);
        }
    }
    return out;
}

// Elimination order read off a rooted TD: post-order, each node eliminating what its parent lacks,
// input variables before color variables; free variables are moved to the end of the elimination.
inline VertexOrdering td_to_ordering(const TreeDecomposition& td, const std::set<Var>& colors, const std::vector<Var>& F = {}) {
    const std::size_t n = td.bags.size();
    std::vector<std::vector<int>> children(n);
    std::vector<int> roots;
    for (std::size_t i = 0; i < n; ++i) {
        if (td.parent[i] < 0) roots.push_back(static_cast<int>(i));
        else children[static_cast<std::size_t>(td.parent[i])].push_back(static_cast<int>(i));
    }
    std::vector<int> elim;
    std::set<int> done;
    std::function<void(int)> visit = [&](int t) {
        for (int c : children[static_cast<std::size_t>(t)]) visit(c);
        const auto& bag = td.bags[static_cast<std::size_t>(t)];
        const int p = td.parent[static_cast<std::size_t>(t)];
        std::vector<int> inputs, cols;
        for (int v : bag) {
            if (done.count(v)) continue;
            if (p >= 0 && detail::bag_has(td.bags[static_cast<std::size_t>(p)], v)) continue;
            (colors.count(v) ? cols : inputs).push_back(v);
        }
        for (int v : inputs) { elim.push_back(v); done.insert(v); }
        for (int v : cols) { elim.push_back(v); done.insert(v); }
    };
    for (int r : roots) visit(r);
    std::set<int> f(F.begin(), F.end());
    std::vector<int> nonfree, freev;
    for (int v : elim) (f.count(v) ? freev : nonfree).push_back(v);
    nonfree.insert(nonfree.end(), freev.begin(), freev.end());
    VertexOrdering o;
    o.sigma.assign(nonfree.rbegin(), nonfree.rend());
    o.f_constrained = !F.empty();
    o.free = F;
    return o;
}

// ---------------------------------------------------------------- cost table

struct ColorCostStep {
    int vertex;
    std::vector<int> J, J_input, J_color;
    Rational n_exponent;      // ρ*_H(J|_V)
    std::size_t c_exponent;   // |J|_U|
};

struct ColorCost {
    std::vector<ColorCostStep> steps;
    Rational n_exponent = 0;
    std::size_t c_exponent = 0;

    static std::string term(const Rational& ne, std::size_t ce) {
        std::string s;
        if (ne != 0) s = ne == 1 ? "N" : "N^" + to_string(ne);
        if (ce > 0) s += ce == 1 ? "c" : "c^" + std::to_string(ce);
        return s.empty() ? "1" : s;
    }
    std::string max_term() const { return term(n_exponent, c_exponent); }
};

namespace detail {

// (ρ*_H(J|_V), |J|_U|) for eliminating v from the current hypergraph.
inline std::pair<Rational, std::size_t> color_step_cost(const ColorJoinIR& cj, const std::vector<int>& J, int v,
                                                        std::vector<int>* J_input = nullptr,
                                                        std::vector<int>* J_color = nullptr) {
    std::vector<int> in, col;
    for (int u : J)
        if (!cj.is_color(u)) in.push_back(u);
    for (int u : J) {
        if (!cj.is_color(u) || u == v) continue;
        if (std::binary_search(in.begin(), in.end(), cj.input_of.at(u))) continue;
        col.push_back(u);
    }
    const Rational ne = in.empty() ? Rational(0) : fractional_edge_cover_bag(cj.H, in).rho;
    const std::size_t ce = col.size();
    if (J_input) *J_input = std::move(in);
    if (J_color) *J_color = std::move(col);
    return {ne, ce};
}

inline std::vector<int> neighbourhood(const std::vector<std::vector<int>>& edges, int v) {
    std::set<int> J{v};
    for (const auto& e : edges)
        if (std::binary_search(e.begin(), e.end(), v)) J.insert(e.begin(), e.end());
    return {J.begin(), J.end()};
}

inline void eliminate_in(std::vector<std::vector<int>>& edges, int v) {
    const std::vector<int> J = neighbourhood(edges, v);
    std::vector<std::vector<int>> next;
    for (auto& e : edges)
        if (!std::binary_search(e.begin(), e.end(), v)) next.push_back(std::move(e));
    std::vector<int> rest;
    for (int u : J)
        if (u != v) rest.push_back(u);
    if (!rest.empty()) next.push_back(std::move(rest));
    edges = std::move(next);
}

}  // namespace detail

// As above, but within each node the next vertex eliminated is the cheapest by the colored
// InsideOut step cost on H′, so colors leave right after the variables that determine them.
inline VertexOrdering td_to_ordering(const TreeDecomposition& td, const ColorJoinIR& cj, const std::vector<Var>& F = {}) {
    const std::size_t n = td.bags.size();
    std::vector<std::vector<int>> children(n);
    std::vector<int> roots;
    for (std::size_t i = 0; i < n; ++i) {
        if (td.parent[i] < 0) roots.push_back(static_cast<int>(i));
        else children[static_cast<std::size_t>(td.parent[i])].push_back(static_cast<int>(i));
    }
    const std::set<int> f(F.begin(), F.end());
    std::vector<std::vector<int>> edges = cj.Hprime.edges;
    std::vector<int> elim;
    std::set<int> done;
    std::function<void(int)> visit = [&](int t) {
        for (int c : children[static_cast<std::size_t>(t)]) visit(c);
        const int p = td.parent[static_cast<std::size_t>(t)];
        std::vector<int> pending;
        for (int v : td.bags[static_cast<std::size_t>(t)]) {
            if (done.count(v) || f.count(v)) continue;
            if (p >= 0 && detail::bag_has(td.bags[static_cast<std::size_t>(p)], v)) continue;
            pending.push_back(v);
        }
        std::stable_sort(pending.begin(), pending.end(), [&](int a, int b) { return !cj.is_color(a) && cj.is_color(b); });
        while (!pending.empty()) {
            std::size_t best = 0;
            std::pair<Rational, std::size_t> best_cost;
            for (std::size_t i = 0; i < pending.size(); ++i) {
                const auto cost = detail::color_step_cost(cj, detail::neighbourhood(edges, pending[i]), pending[i]);
                if (i == 0 || cost < best_cost) { best = i; best_cost = cost; }
            }
            const int v = pending[best];
            pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(best));
            detail::eliminate_in(edges, v);
            elim.push_back(v);
            done.insert(v);
        }
    };
    for (int r : roots) visit(r);
    for (int v : cj.Hprime.vertices)
        if (!done.count(v) && !f.count(v)) elim.push_back(v);
    for (Var v : F) elim.push_back(v);
    VertexOrdering o;
    o.sigma.assign(elim.rbegin(), elim.rend());
    o.f_constrained = !F.empty();
    o.free = F;
    return o;
}


// J|_U counts color variables of J − {Z} not determined by their input variable inside J.
// Steps compare by N-exponent first, then c-exponent.
inline ColorCost io_color_cost(const ColorJoinIR& cj, const VertexOrdering& pi) {
    ColorCost out;
    bool first = true;
    for (const auto& step : elimination_sequence(cj.Hprime, pi)) {
        ColorCostStep s;
        s.vertex = step.vertex;
        s.J = step.J;
        std::tie(s.n_exponent, s.c_exponent) = detail::color_step_cost(cj, step.J, step.vertex, &s.J_input, &s.J_color);
        if (first || std::make_pair(s.n_exponent, s.c_exponent) > std::make_pair(out.n_exponent, out.c_exponent)) {
            out.n_exponent = s.n_exponent;
            out.c_exponent = s.c_exponent;
            first = false;
        }
        out.steps.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------- symmetry pruning

// Forbidden colors for each C_i in L: x is forbidden iff some S ∋ C_i with S − {C_i} ⊆ K has
// every member of S − {C_i} colored x by c_K.
inline std::map<Var, std::set<int>> forbidden_spectrum(const std::vector<int>& cK, const std::vector<Var>& K,
                                                       const std::vector<Var>& L, const std::vector<std::vector<Var>>& A) {
    std::map<Var, int> col;
    for (std::size_t i = 0; i < K.size(); ++i) col[K[i]] = cK[i];
    std::map<Var, std::set<int>> out;
    for (Var l : L) {
        auto& spec = out[l];
        for (const auto& S : A) {
            if (std::find(S.begin(), S.end(), l) == S.end()) continue;
            std::optional<int> x;
            bool ok = true;
            for (Var v : S) {
                if (v == l) continue;
                auto it = col.find(v);
                if (it == col.end()) { ok = false; break; }
                if (x && *x != it->second) { ok = false; break; }
                x = it->second;
            }
            if (ok && x) spec.insert(*x);
        }
    }
    return out;
}

// For each x_I, keeps the lexicographically least c_K of each spectrum class and sums the class values
// into it. K members listed in `hard`, in edges with two or more variables outside K, or in edges
// inside K keep their exact colors in the class key, so the kept tuples remain interchangeable.
template <class V, class SR>
Factor<V> symmetric_prune(const Factor<V>& f, const std::vector<Var>& K, const std::vector<Var>& L,
                          const std::vector<std::vector<Var>>& A, const SR& sr, const std::vector<Var>& hard = {}) {
    std::vector<std::size_t> kpos, ipos;
    for (std::size_t i = 0; i < f.schema.size(); ++i)
        (std::find(K.begin(), K.end(), f.schema[i]) != K.end() ? kpos : ipos).push_back(i);
    if (kpos.empty()) return f;
    std::vector<Var> Kf;
    for (std::size_t p : kpos) Kf.push_back(f.schema[p]);
    std::set<Var> hardset(hard.begin(), hard.end());
    std::set<Var> Lset(L.begin(), L.end());
    std::vector<std::vector<Var>> relevant;
    for (const auto& S : A) {
        std::size_t outside = 0, inside = 0;
        bool touches_other = false;
        for (Var v : S) {
            if (std::find(Kf.begin(), Kf.end(), v) != Kf.end()) ++inside;
            else { ++outside; touches_other = touches_other || !Lset.count(v); }
        }
        if (inside == 0) continue;
        if (outside != 1 || touches_other) {
            for (Var v : S)
                if (std::find(Kf.begin(), Kf.end(), v) != Kf.end()) hardset.insert(v);
        } else {
            relevant.push_back(S);
        }
    }
    using Key = std::tuple<Tuple, Tuple, std::vector<std::vector<int>>>;
    std::map<Key, std::size_t> rep;
    std::vector<std::pair<Tuple, V>> entries;
    for (std::size_t r = 0; r < f.size(); ++r) {
        const Value* row = f.key(r);
        Tuple xi, hk;
        std::vector<int> ck;
        for (std::size_t p : ipos) xi.push_back(row[p]);
        for (std::size_t j = 0; j < kpos.size(); ++j) {
            ck.push_back(row[kpos[j]]);
            if (hardset.count(Kf[j])) hk.push_back(row[kpos[j]]);
        }
        std::vector<std::vector<int>> spec;
        for (const auto& [l, s] : forbidden_spectrum(ck, Kf, L, relevant)) spec.emplace_back(s.begin(), s.end());
        Key key{xi, hk, spec};
        auto it = rep.find(key);
        if (it == rep.end()) {
            rep.emplace(std::move(key), entries.size());
            entries.emplace_back(f.tuple(r), f.values[r]);
        } else {
            // rows are sorted, so the first row seen is the lexicographically least c_K for this x_I
            entries[it->second].second = sr.plus(entries[it->second].second, f.values[r]);
        }
    }
    return Factor<V>::build(f.schema, std::move(entries), sr);
}

}  // namespace negcq
