#pragma once

#include "negcq/core.hpp"
#include "negcq/gf.hpp"
#include "negcq/rational.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <random>

namespace negcq {

struct ColorBudgets {
    std::size_t quotient_cap = 10;          // max |U| for partition enumeration
    std::uint64_t coloring_cap = 10'000'000;  // max proper colorings listed
    std::uint64_t verify_exhaustive = 1'000'000;  // N^|U| limit for exhaustive coverage checks
    std::uint64_t verify_samples = 100'000;
    std::size_t retries = 50;
    std::uint64_t inner_verify = 1'000'000;  // q^|U| limit for explicit inner families
    unsigned confidence_bits = 40;           // extra ln(2^bits)/θ terms when coverage is only sampled
    std::uint64_t disjunct_verify = 512;     // max N for exhaustive disjunct checks
    std::uint64_t greedy_work = 50'000'000;  // max candidates x proper N-colorings for greedy cover
};

// ---------------------------------------------------------------- local hypergraphs

// Vertices renumbered 0..n-1; edges_at[v] = edges whose largest vertex is v.
struct LocalGraph {
    std::size_t n = 0;
    std::vector<std::vector<int>> edges;
    std::vector<std::vector<std::size_t>> edges_at;

    LocalGraph() = default;
    LocalGraph(std::size_t vertices, std::vector<std::vector<int>> es) : n(vertices), edges(std::move(es)) {
        edges_at.assign(n, {});
        for (std::size_t e = 0; e < edges.size(); ++e) {
            std::sort(edges[e].begin(), edges[e].end());
            edges[e].erase(std::unique(edges[e].begin(), edges[e].end()), edges[e].end());
            if (!edges[e].empty()) edges_at[static_cast<std::size_t>(edges[e].back())].push_back(e);
        }
    }
    explicit LocalGraph(const Hypergraph& G) {
        std::vector<std::vector<int>> es;
        for (const auto& e : G.edges) {
            std::vector<int> le;
            for (int v : e) le.push_back(static_cast<int>(G.vertex_index(v)));
            es.push_back(std::move(le));
        }
        *this = LocalGraph(G.vertices.size(), std::move(es));
    }
    Hypergraph hypergraph() const {
        Hypergraph H;
        for (std::size_t v = 0; v < n; ++v) H.add_vertex(static_cast<int>(v));
        for (const auto& e : edges) H.add_edge(e);
        return H;
    }
};

template <class Labels>
bool monochromatic(const std::vector<int>& e, const Labels& col) {
    for (std::size_t i = 1; i < e.size(); ++i)
        if (col[static_cast<std::size_t>(e[i])] != col[static_cast<std::size_t>(e[0])]) return false;
    return true;
}

template <class Labels>
bool is_proper(const LocalGraph& g, const Labels& col) {
    for (const auto& e : g.edges)
        if (monochromatic(e, col)) return false;
    return true;
}

namespace detail {

// DFS over proper colorings with `colors` colors. canonical=true lists restricted-growth
// labelings only (one per partition). visit(labels, blocks) returns false to stop.
template <class Visit>
bool dfs_colorings(const LocalGraph& g, std::size_t colors, bool canonical, Visit&& visit) {
    std::vector<int> col(g.n, -1);
    std::function<bool(std::size_t, int)> rec = [&](std::size_t v, int used) -> bool {
        if (v == g.n) return visit(col, static_cast<std::size_t>(used));
        const int limit = canonical ? std::min<int>(used + 1, static_cast<int>(colors)) : static_cast<int>(colors);
        for (int x = 0; x < limit; ++x) {
            col[v] = x;
            bool ok = true;
            for (std::size_t e : g.edges_at[v])
                if (monochromatic(g.edges[e], col)) { ok = false; break; }
            if (ok && !rec(v + 1, std::max(used, x + 1))) return false;
        }
        col[v] = -1;
        return true;
    };
    return rec(0, 0);
}

inline BigInt falling(std::uint64_t n, std::size_t k) {
    BigInt out = 1;
    for (std::size_t i = 0; i < k; ++i) {
        if (n < i) return 0;
        out *= n - i;
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------- quotients and chromatic quantities

struct Quotient {
    std::vector<int> labels;  // restricted-growth block labels
    std::size_t blocks = 0;
    LocalGraph image;
};

inline std::vector<Quotient> quotient_images(const LocalGraph& g, const ColorBudgets& b = {}) {
    if (g.n > b.quotient_cap)
        throw QuotientBudgetExceeded("|U|=" + std::to_string(g.n) + " exceeds the quotient cap " + std::to_string(b.quotient_cap));
    std::vector<Quotient> out;
    detail::dfs_colorings(g, g.n, true, [&](const std::vector<int>& lab, std::size_t blocks) {
        std::vector<std::vector<int>> es;
        for (const auto& e : g.edges) {
            std::vector<int> m;
            for (int v : e) m.push_back(lab[static_cast<std::size_t>(v)]);
            std::sort(m.begin(), m.end());
            m.erase(std::unique(m.begin(), m.end()), m.end());
            es.push_back(std::move(m));
        }
        std::sort(es.begin(), es.end());
        es.erase(std::unique(es.begin(), es.end()), es.end());
        out.push_back({lab, blocks, LocalGraph(blocks, std::move(es))});
        return true;
    });
    return out;
}
inline std::vector<Quotient> quotient_images(const Hypergraph& G, const ColorBudgets& b = {}) {
    return quotient_images(LocalGraph(G), b);
}

inline std::size_t chromatic_number(const LocalGraph& g) {
    if (g.n == 0) return 1;
    for (std::size_t k = 1;; ++k) {
        bool found = false;
        detail::dfs_colorings(g, k, true, [&](const std::vector<int>&, std::size_t) { found = true; return false; });
        if (found) return k;
    }
}

struct ColorCount {
    std::size_t c = 1;
    bool exact = true;  // false: fallback c = |U|
};

inline ColorCount color_count(const LocalGraph& g, const ColorBudgets& b = {}) {
    if (g.n > b.quotient_cap) return {std::max<std::size_t>(g.n, 1), false};
    std::size_t best = 1;
    for (const Quotient& q : quotient_images(g, b)) {
        if (q.blocks <= best) continue;  // χ ≤ #blocks
        best = std::max(best, chromatic_number(q.image));
    }
    return {best, true};
}
inline ColorCount color_count(const Hypergraph& G, const ColorBudgets& b = {}) { return color_count(LocalGraph(G), b); }

// P(G, x) = Σ over proper partitions of x falling |blocks|; exact for all x.
inline BigInt chromatic_polynomial(const LocalGraph& g, std::uint64_t x, const ColorBudgets& b = {}) {
    if (g.n > b.quotient_cap)
        throw ChromaticBudgetExceeded("|U|=" + std::to_string(g.n) + " exceeds the partition cap " + std::to_string(b.quotient_cap));
    BigInt total = 0;
    detail::dfs_colorings(g, g.n, true, [&](const std::vector<int>&, std::size_t blocks) {
        total += detail::falling(x, blocks);
        return true;
    });
    return total;
}
inline BigInt chromatic_polynomial(const Hypergraph& G, std::uint64_t x, const ColorBudgets& b = {}) {
    return chromatic_polynomial(LocalGraph(G), x, b);
}

inline std::vector<std::vector<std::uint8_t>> proper_colorings(const LocalGraph& g, std::size_t c, const ColorBudgets& b = {}) {
    std::vector<std::vector<std::uint8_t>> out;
    detail::dfs_colorings(g, c, false, [&](const std::vector<int>& col, std::size_t) {
        if (out.size() >= b.coloring_cap)
            throw ChromaticBudgetExceeded("more than " + std::to_string(b.coloring_cap) + " proper colorings");
        out.emplace_back(col.begin(), col.end());
        return true;
    });
    return out;
}

// ---------------------------------------------------------------- theta

inline void check_distribution(const std::vector<Rational>& p, std::size_t c) {
    if (p.size() != c) throw InvalidDistribution("expected " + std::to_string(c) + " probabilities, got " + std::to_string(p.size()));
    Rational s = 0;
    for (const Rational& x : p) {
        if (x < 0) throw InvalidDistribution("negative probability " + to_string(x));
        s += x;
    }
    if (s != 1) throw InvalidDistribution("probabilities sum to " + to_string(s));
}

inline std::vector<Rational> uniform_distribution(std::size_t c) { return std::vector<Rational>(c, Rational(1, static_cast<long>(c))); }

namespace detail {

// Σ over proper c-colorings g of h of ∏_v p_{g(v)}.
inline Rational proper_mass(const LocalGraph& h, const std::vector<Rational>& p) {
    BigInt D = 1;
    for (const Rational& x : p) D = boost::multiprecision::lcm(D, boost::multiprecision::denominator(x));
    std::vector<BigInt> a;
    for (const Rational& x : p) a.push_back(boost::multiprecision::numerator(x) * (D / boost::multiprecision::denominator(x)));
    BigInt sum = 0;
    const bool small = D < 64 && std::all_of(a.begin(), a.end(), [](const BigInt& v) { return v < 64; });
    if (small && h.n <= 9) {  // 64^9 < 2^54: exact in 64 bits, and ≤ 8^9 terms per image
        std::vector<std::uint64_t> a64;
        for (const BigInt& v : a) a64.push_back(static_cast<std::uint64_t>(v));
        unsigned __int128 acc = 0;
        detail::dfs_colorings(h, p.size(), false, [&](const std::vector<int>& col, std::size_t) {
            std::uint64_t t = 1;
            for (int x : col) t *= a64[static_cast<std::size_t>(x)];
            acc += t;
            return true;
        });
        std::string digits;
        if (acc == 0) digits = "0";
        while (acc > 0) { digits.insert(digits.begin(), static_cast<char>('0' + static_cast<int>(acc % 10))); acc /= 10; }
        sum = BigInt(digits);
    } else {
        detail::dfs_colorings(h, p.size(), false, [&](const std::vector<int>& col, std::size_t) {
            BigInt t = 1;
            for (int x : col) t *= a[static_cast<std::size_t>(x)];
            sum += t;
            return true;
        });
    }
    return Rational(sum) / Rational(boost::multiprecision::pow(D, static_cast<unsigned>(h.n)));
}

inline bool is_uniform(const std::vector<Rational>& p) {
    return std::all_of(p.begin(), p.end(), [&](const Rational& x) { return x == p.front(); });
}

}  // namespace detail

inline Rational theta(const LocalGraph& g, std::size_t c, const std::vector<Rational>& p, const ColorBudgets& b = {}) {
    check_distribution(p, c);
    std::optional<Rational> best;
    for (const Quotient& q : quotient_images(g, b)) {
        Rational m;
        if (detail::is_uniform(p))
            m = Rational(chromatic_polynomial(q.image, c, b)) / Rational(boost::multiprecision::pow(BigInt(c), static_cast<unsigned>(q.blocks)));
        else
            m = detail::proper_mass(q.image, p);
        if (!best || m < *best) best = m;
        if (*best == 0) break;
    }
    return best.value_or(Rational(1));
}
inline Rational theta(const Hypergraph& G, std::size_t c, const std::vector<Rational>& p, const ColorBudgets& b = {}) {
    return theta(LocalGraph(G), c, p, b);
}

struct ThetaBound {
    std::vector<Rational> p;
    Rational bound;
    std::size_t c = 1;
    bool multipartite = false;
    std::vector<std::size_t> mu;  // part sizes, descending, when multipartite
};

// Part sizes of G if it is a complete multipartite graph; vertex i's part recorded in `part`.
inline std::optional<std::vector<std::size_t>> multipartite_parts(const LocalGraph& g, std::vector<int>* part = nullptr) {
    for (const auto& e : g.edges)
        if (e.size() != 2) return std::nullopt;
    std::vector<std::vector<char>> adj(g.n, std::vector<char>(g.n, 0));
    for (const auto& e : g.edges) adj[static_cast<std::size_t>(e[0])][static_cast<std::size_t>(e[1])] = adj[static_cast<std::size_t>(e[1])][static_cast<std::size_t>(e[0])] = 1;
    std::vector<int> cls(g.n, -1);
    std::vector<std::size_t> sizes;
    for (std::size_t v = 0; v < g.n; ++v) {
        if (cls[v] >= 0) continue;
        cls[v] = static_cast<int>(sizes.size());
        sizes.push_back(1);
        for (std::size_t w = v + 1; w < g.n; ++w)
            if (!adj[v][w]) {
                if (cls[w] >= 0) return std::nullopt;
                cls[w] = cls[v];
                ++sizes.back();
            }
    }
    for (std::size_t v = 0; v < g.n; ++v)
        for (std::size_t w = v + 1; w < g.n; ++w)
            if ((cls[v] == cls[w]) == static_cast<bool>(adj[v][w])) return std::nullopt;
    if (part) *part = cls;
    return sizes;
}

// Structure-aware p for complete multipartite K_μ, else uniform with 1/c^c.
inline ThetaBound theta_star_lower(const LocalGraph& g, const ColorBudgets& b = {}) {
    ThetaBound out;
    if (auto mu = multipartite_parts(g); mu && g.n > 0) {
        std::vector<std::size_t> s = *mu;
        std::sort(s.rbegin(), s.rend());
        std::size_t total = 0;
        for (std::size_t m : s) total += m;
        out.multipartite = true;
        out.mu = s;
        out.c = s.size();
        Rational prod = 1;
        for (std::size_t m : s) {
            const Rational pi(static_cast<long>(m), static_cast<long>(total));
            out.p.push_back(pi);
            prod *= pow(pi, static_cast<unsigned>(m));
        }
        BigInt fp = 1;
        for (std::size_t i = 0; i < s.size();) {
            std::size_t j = i;
            while (j < s.size() && s[j] == s[i]) ++j;
            for (std::size_t f = 2; f <= j - i; ++f) fp *= f;
            i = j;
        }
        out.bound = Rational(fp) * prod;
        return out;
    }
    out.c = color_count(g, b).c;
    out.p = uniform_distribution(out.c);
    out.bound = Rational(1) / Rational(boost::multiprecision::pow(BigInt(out.c), static_cast<unsigned>(out.c)));
    return out;
}
inline ThetaBound theta_star_lower(const Hypergraph& G, const ColorBudgets& b = {}) { return theta_star_lower(LocalGraph(G), b); }

// ---------------------------------------------------------------- families

struct ColorFamily {
    std::size_t c = 0;
    std::size_t N = 0;
    std::vector<std::vector<std::uint8_t>> table;  // explicit rows f:[N]->[c]
    std::shared_ptr<const RSCode> outer;           // concatenated form when set
    std::vector<std::vector<std::uint8_t>> inner;  // inner rows [q]->[c]
    std::string provenance;
    std::string certification;

    std::size_t size() const { return outer ? static_cast<std::size_t>(outer->n) * inner.size() : table.size(); }
    int at(std::size_t f, std::size_t x) const {
        if (!outer) return table[f][x];
        const std::size_t pos = f / inner.size();
        return inner[f % inner.size()][static_cast<std::size_t>(outer->symbol(x, static_cast<int>(pos)))];
    }
    std::vector<std::uint8_t> row(std::size_t f) const {
        if (!outer) return table[f];
        std::vector<std::uint8_t> r(N);
        for (std::size_t x = 0; x < N; ++x) r[x] = static_cast<std::uint8_t>(at(f, x));
        return r;
    }
    // colors[f] for a fixed value x
    std::vector<std::uint8_t> column(std::size_t x) const {
        std::vector<std::uint8_t> out(size());
        if (!outer) {
            for (std::size_t f = 0; f < table.size(); ++f) out[f] = table[f][x];
            return out;
        }
        const auto msg = outer->message(x);
        for (int pos = 0; pos < outer->n; ++pos) {
            const auto s = static_cast<std::size_t>(outer->field.eval(msg, pos));
            for (std::size_t fb = 0; fb < inner.size(); ++fb)
                out[static_cast<std::size_t>(pos) * inner.size() + fb] = inner[fb][s];
        }
        return out;
    }
};

namespace detail {

inline bool upow_le(std::uint64_t base, std::size_t e, std::uint64_t cap) {
    unsigned __int128 acc = 1;
    for (std::size_t i = 0; i < e; ++i) {
        acc *= base;
        if (acc > cap) return false;
    }
    return true;
}

inline bool covers(const LocalGraph& g, const ColorFamily& F, const std::vector<std::size_t>& h) {
    std::vector<int> col(g.n);
    for (std::size_t f = 0; f < F.size(); ++f) {
        for (std::size_t v = 0; v < g.n; ++v) col[v] = F.at(f, h[v]);
        if (is_proper(g, col)) return true;
    }
    return false;
}

// Proper N-colorings h of g, lexicographic; visit returns false to stop.
template <class Visit>
void for_each_proper(const LocalGraph& g, std::size_t N, Visit&& visit) {
    std::vector<std::size_t> h(g.n);
    detail::dfs_colorings(g, N, false, [&](const std::vector<int>& col, std::size_t) {
        for (std::size_t v = 0; v < g.n; ++v) h[v] = static_cast<std::size_t>(col[v]);
        return visit(h);
    });
}

}  // namespace detail

struct CoverageCheck {
    bool ok = true;
    bool exhaustive = true;
    std::uint64_t checked = 0;
    std::vector<std::size_t> counterexample;
    std::string level() const { return exhaustive ? "exhaustive" : "sampled:" + std::to_string(checked); }
};

// Every proper N-coloring h has some f with f∘h proper.
inline CoverageCheck verify_coverage(const LocalGraph& g, const ColorFamily& F, std::size_t N, const ColorBudgets& b = {},
                                     std::uint64_t seed = 0) {
    CoverageCheck out;
    if (detail::upow_le(N, g.n, b.verify_exhaustive)) {
        detail::for_each_proper(g, N, [&](const std::vector<std::size_t>& h) {
            ++out.checked;
            if (!detail::covers(g, F, h)) {
                out.ok = false;
                out.counterexample = h;
                return false;
            }
            return true;
        });
        return out;
    }
    out.exhaustive = false;
    std::mt19937_64 rng(seed ^ 0x5eedc0deULL);
    std::uniform_int_distribution<std::size_t> pick(0, N - 1);
    std::vector<std::size_t> h(g.n);
    std::uint64_t attempts = 0;
    while (out.checked < b.verify_samples && attempts < 100 * b.verify_samples) {
        ++attempts;
        for (auto& x : h) x = pick(rng);
        if (!is_proper(g, h)) continue;
        ++out.checked;
        if (!detail::covers(g, F, h)) {
            out.ok = false;
            out.counterexample = h;
            break;
        }
    }
    return out;
}

// ⌈(ln P + extra) / θ⌉ in 50-digit floating point; at least 1.
inline std::size_t family_size_bound(const BigInt& P, const Rational& th, double extra_nats = 0) {
    using F50 = boost::multiprecision::cpp_bin_float_50;
    if (th <= 0) throw FamilyConstructionFailed("theta(p) = 0: no proper coloring has positive mass under p");
    if (P <= 1 && extra_nats == 0) return 1;
    const F50 lnP = P <= 1 ? F50(0) : boost::multiprecision::log(F50(P));
    const F50 t = F50(boost::multiprecision::numerator(th)) / F50(boost::multiprecision::denominator(th));
    const F50 s = boost::multiprecision::ceil((lnP + F50(extra_nats)) / t);
    return std::max<std::size_t>(1, s.convert_to<std::size_t>());
}

struct FamilyOptions {
    std::uint64_t seed = 0;
    double size_multiplier = 1.0;
    ColorBudgets budgets;
};

// i.i.d. draws with P[f(x)=i] = p_i, verified and resampled on failure.
inline ColorFamily random_family(const LocalGraph& g, std::size_t c, const std::vector<Rational>& p, std::size_t N,
                                 const FamilyOptions& opt = {}) {
    check_distribution(p, c);
    const ColorBudgets& b = opt.budgets;
    const bool exhaustive = detail::upow_le(N, g.n, b.verify_exhaustive);
    const BigInt P = chromatic_polynomial(g, N, b);
    const Rational th = theta(g, c, p, b);
    const double extra = exhaustive ? 0.0 : static_cast<double>(b.confidence_bits) * std::log(2.0);
    std::size_t size = family_size_bound(P, th, extra);
    if (opt.size_multiplier != 1.0) size = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(static_cast<double>(size) * opt.size_multiplier)));

    BigInt D = 1;
    for (const Rational& x : p) D = boost::multiprecision::lcm(D, boost::multiprecision::denominator(x));
    std::vector<std::uint64_t> cum;
    std::uint64_t acc = 0;
    for (const Rational& x : p) {
        acc += static_cast<std::uint64_t>(boost::multiprecision::numerator(x) * (D / boost::multiprecision::denominator(x)));
        cum.push_back(acc);
    }
    std::mt19937_64 rng(opt.seed);
    std::uniform_int_distribution<std::uint64_t> draw(0, acc - 1);
    for (std::size_t attempt = 0; attempt < b.retries; ++attempt) {
        ColorFamily F;
        F.c = c;
        F.N = N;
        F.table.assign(size, std::vector<std::uint8_t>(N));
        for (auto& row : F.table)
            for (auto& x : row)
                x = static_cast<std::uint8_t>(std::upper_bound(cum.begin(), cum.end(), draw(rng)) - cum.begin());
        const CoverageCheck chk = verify_coverage(g, F, N, b, opt.seed + attempt);
        if (chk.ok) {
            F.provenance = "random-verified";
            F.certification = chk.level() + (exhaustive ? "" : " (size includes 2^-" + std::to_string(b.confidence_bits) + " union-bound slack)");
            return F;
        }
    }
    throw FamilyConstructionFailed("no covering family of size " + std::to_string(size) + " after " +
                                   std::to_string(b.retries) + " draws; raise the size multiplier");
}

// All c^N functions [N]->[c], lexicographic.
inline std::vector<std::vector<std::uint8_t>> all_functions(std::size_t N, std::size_t c) {
    std::vector<std::vector<std::uint8_t>> out;
    std::vector<std::uint8_t> f(N, 0);
    while (true) {
        out.push_back(f);
        std::size_t i = N;
        while (i > 0 && f[i - 1] + 1u == c) f[--i] = 0;
        if (i == 0) break;
        ++f[i - 1];
    }
    return out;
}

inline ColorFamily greedy_cover_family(const LocalGraph& g, std::size_t c, std::size_t N,
                                       const std::vector<std::vector<std::uint8_t>>& candidates, const ColorBudgets& b = {}) {
    if (!detail::upow_le(N, g.n, b.verify_exhaustive))
        throw ChromaticBudgetExceeded("N^|U| above the exhaustive budget; greedy cover needs the full universe");
    std::vector<std::vector<std::size_t>> universe;
    const std::uint64_t cap = std::min<std::uint64_t>(b.coloring_cap, b.greedy_work / std::max<std::size_t>(1, candidates.size()));
    detail::for_each_proper(g, N, [&](const std::vector<std::size_t>& h) {
        if (universe.size() >= cap) throw ChromaticBudgetExceeded("proper N-colorings exceed the cap");
        universe.push_back(h);
        return true;
    });
    std::vector<std::vector<std::size_t>> covered(candidates.size());
    std::vector<int> col(g.n);
    for (std::size_t f = 0; f < candidates.size(); ++f)
        for (std::size_t h = 0; h < universe.size(); ++h) {
            for (std::size_t v = 0; v < g.n; ++v) col[v] = candidates[f][universe[h][v]];
            if (is_proper(g, col)) covered[f].push_back(h);
        }
    std::vector<char> done(universe.size(), 0);
    std::size_t remaining = universe.size();
    ColorFamily F;
    F.c = c;
    F.N = N;
    while (remaining > 0) {
        std::size_t best = candidates.size(), gain = 0;
        for (std::size_t f = 0; f < candidates.size(); ++f) {
            std::size_t k = 0;
            for (std::size_t h : covered[f]) k += !done[h];
            if (k > gain) { gain = k; best = f; }
        }
        if (best == candidates.size()) {
            std::size_t h = 0;
            while (done[h]) ++h;
            std::string msg = "candidate pool leaves h = (";
            for (std::size_t v = 0; v < g.n; ++v) msg += (v ? "," : "") + std::to_string(universe[h][v]);
            throw CoverageGap(msg + ") uncovered");
        }
        for (std::size_t h : covered[best])
            if (!done[h]) { done[h] = 1; --remaining; }
        F.table.push_back(candidates[best]);
    }
    if (F.table.empty()) F.table.push_back(std::vector<std::uint8_t>(N, 0));
    F.provenance = "greedy-cover";
    F.certification = "exhaustive";
    return F;
}

struct ExplicitParams {
    int q = 0, d = 0, n = 0;
};

// Smallest prime power q with n = C(u,2)(d-1)+1 <= q, d = ⌈log_q N⌉: each pair of codewords agrees in
// at most d-1 positions, so any u codewords have a position with pairwise-distinct symbols.
inline ExplicitParams explicit_params(std::size_t u, std::size_t N) {
    const std::size_t pairs = u * (u - 1) / 2;
    for (int q = 2;; q = next_prime_power(q + 1)) {
        int d = 1;
        std::uint64_t cap = static_cast<std::uint64_t>(q);
        while (cap < N) { cap *= static_cast<std::uint64_t>(q); ++d; }
        const std::size_t n = pairs * static_cast<std::size_t>(d - 1) + 1;
        if (n <= static_cast<std::size_t>(q)) return {q, d, static_cast<int>(n)};
    }
}

inline ColorFamily explicit_family(const LocalGraph& g, std::size_t c, std::size_t N, const std::vector<Rational>& p,
                                   const FamilyOptions& opt = {}) {
    const ExplicitParams ep = explicit_params(g.n, N);
    if (!detail::upow_le(static_cast<std::uint64_t>(ep.q), g.n, opt.budgets.inner_verify))
        throw ExplicitBudgetExceeded("inner alphabet q=" + std::to_string(ep.q) + " gives q^|U| above the inner budget");
    ColorFamily inner = random_family(g, c, p, static_cast<std::size_t>(ep.q), opt);
    ColorFamily F;
    F.c = c;
    F.N = N;
    F.outer = std::make_shared<RSCode>(ep.q, ep.d, ep.n);
    F.inner = std::move(inner.table);
    F.provenance = "explicit-rs(q=" + std::to_string(ep.q) + ",d=" + std::to_string(ep.d) + ",n=" + std::to_string(ep.n) + ")";
    F.certification = "by-construction";
    return F;
}

// ---------------------------------------------------------------- disjunct matrices

struct DisjunctMatrix {
    std::size_t k = 0, N = 0;
    std::vector<std::vector<std::uint8_t>> rows;  // t x N
    std::string construction;
    std::size_t t() const { return rows.size(); }
};

inline bool is_disjunct(const DisjunctMatrix& M, std::size_t k) {
    const std::size_t N = M.N;
    std::vector<std::vector<std::size_t>> supp(N);
    for (std::size_t r = 0; r < M.t(); ++r)
        for (std::size_t j = 0; j < N; ++j)
            if (M.rows[r][j]) supp[j].push_back(r);
    for (std::size_t j = 0; j < N; ++j) {
        if (supp[j].empty()) return false;
        std::vector<std::pair<std::size_t, std::size_t>> overlap;  // (size, column)
        for (std::size_t i = 0; i < N; ++i) {
            if (i == j) continue;
            std::size_t o = 0;
            for (std::size_t r : supp[j]) o += M.rows[r][i];
            if (o) overlap.push_back({o, i});
        }
        std::sort(overlap.rbegin(), overlap.rend());
        std::size_t top = 0;
        for (std::size_t a = 0; a < std::min(k, overlap.size()); ++a) top += overlap[a].first;
        if (top < supp[j].size()) continue;
        // exhaustive over S ⊆ overlapping columns with |S| ≤ k
        std::vector<std::size_t> hit(M.t(), 0);
        std::function<bool(std::size_t, std::size_t)> rec = [&](std::size_t from, std::size_t depth) -> bool {
            bool all = true;
            for (std::size_t r : supp[j]) all = all && hit[r] > 0;
            if (all) return false;
            if (depth == k) return true;
            for (std::size_t a = from; a < overlap.size(); ++a) {
                const std::size_t i = overlap[a].second;
                for (std::size_t r : supp[j]) hit[r] += M.rows[r][i];
                const bool ok = rec(a + 1, depth + 1);
                for (std::size_t r : supp[j]) hit[r] -= M.rows[r][i];
                if (!ok) return false;
            }
            return true;
        };
        if (!rec(0, 0)) return false;
    }
    return true;
}

inline DisjunctMatrix identity_matrix(std::size_t N, std::size_t k) {
    DisjunctMatrix M;
    M.k = k;
    M.N = N;
    M.rows.assign(N, std::vector<std::uint8_t>(N, 0));
    for (std::size_t i = 0; i < N; ++i) M.rows[i][i] = 1;
    M.construction = "identity";
    return M;
}

// Kautz–Singleton: RS outer code with unary inner code; rows indexed by (position, symbol).
inline DisjunctMatrix disjunct_matrix(std::size_t k, std::size_t N, const ColorBudgets& b = {}) {
    if (k < 1) throw ParameterError("disjunct_matrix needs k >= 1");
    DisjunctMatrix M;
    if (k * k >= N) {
        M = identity_matrix(N, k);
    } else {
        int q = 2, d = 1, n = 1;
        for (;; q = next_prime_power(q + 1)) {
            d = 1;
            std::uint64_t cap = static_cast<std::uint64_t>(q);
            while (cap < N) { cap *= static_cast<std::uint64_t>(q); ++d; }
            n = static_cast<int>(k) * (d - 1) + 1;
            if (n <= q) break;
        }
        const RSCode rs(q, d, n);
        M.k = k;
        M.N = N;
        M.rows.assign(static_cast<std::size_t>(n * q), std::vector<std::uint8_t>(N, 0));
        for (std::size_t x = 0; x < N; ++x) {
            const auto w = rs.codeword(x);
            for (int i = 0; i < n; ++i) M.rows[static_cast<std::size_t>(i * q + w[static_cast<std::size_t>(i)])][x] = 1;
        }
        M.construction = "kautz-singleton(q=" + std::to_string(q) + ",d=" + std::to_string(d) + ",n=" + std::to_string(n) + ")";
    }
    if (N <= b.disjunct_verify && !is_disjunct(M, k))
        throw ConstructionBug("constructed matrix is not " + std::to_string(k) + "-disjunct");
    return M;
}

// Minimum Hamming distance over all pairs of codewords.
inline int rs_min_distance(const RSCode& rs) {
    std::vector<std::vector<int>> words;
    for (std::uint64_t j = 0; j < rs.num_codewords(); ++j) words.push_back(rs.codeword(j));
    int best = rs.n + 1;
    for (std::size_t a = 0; a < words.size(); ++a)
        for (std::size_t c = a + 1; c < words.size(); ++c) {
            int dist = 0;
            for (int i = 0; i < rs.n; ++i) dist += words[a][static_cast<std::size_t>(i)] != words[c][static_cast<std::size_t>(i)];
            best = std::min(best, dist);
        }
    return best;
}

// ---------------------------------------------------------------- tensor decomposition

// ⋁_g ⋁_f ⋀_i f(x_i) = g(i); term (g, f) has index g·|F| + f.
struct TensorDecomposition {
    Hypergraph G;
    LocalGraph local;
    std::size_t c = 0;
    std::vector<std::vector<std::uint8_t>> colorings;
    std::shared_ptr<const ColorFamily> family;

    std::size_t rank() const { return colorings.size() * family->size(); }
    std::size_t term(std::size_t g, std::size_t f) const { return g * family->size() + f; }

    // Bit (g, f) set iff f(x) = g(i); `fx` is family->column(x).
    BitWords unary(std::size_t i, const std::vector<std::uint8_t>& fx) const {
        BitVectorSemiring sr(rank());
        BitWords out = sr.zero();
        for (std::size_t g = 0; g < colorings.size(); ++g)
            for (std::size_t f = 0; f < fx.size(); ++f)
                if (fx[f] == colorings[g][i]) BitVectorSemiring::set(out, term(g, f));
        return out;
    }
    BitWords unary(std::size_t i, std::size_t x) const { return unary(i, family->column(x)); }

    bool evaluate(const std::vector<std::size_t>& xs) const {
        for (std::size_t g = 0; g < colorings.size(); ++g)
            for (std::size_t f = 0; f < family->size(); ++f) {
                bool all = true;
                for (std::size_t i = 0; i < xs.size() && all; ++i) all = family->at(f, xs[i]) == colorings[g][i];
                if (all) return true;
            }
        return false;
    }
};

inline TensorDecomposition tensor_decomposition(const Hypergraph& G, std::size_t c, std::shared_ptr<const ColorFamily> F,
                                                const ColorBudgets& b = {}) {
    TensorDecomposition T;
    T.G = G;
    T.local = LocalGraph(G);
    T.c = c;
    T.colorings = proper_colorings(T.local, c, b);
    T.family = std::move(F);
    return T;
}

}  // namespace negcq
