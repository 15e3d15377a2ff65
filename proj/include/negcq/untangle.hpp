#pragma once

#include "negcq/parser.hpp"
#include "negcq/rational.hpp"

#include <functional>
#include <unordered_set>

namespace negcq {

inline std::size_t column_degree(const Relation& R) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < R.arity(); ++i) {
        std::unordered_map<Value, std::size_t> hist;
        for (const Tuple& t : R.tuples) best = std::max(best, ++hist[t[i]]);
    }
    return best;
}

inline bool is_matching(const Relation& R) { return column_degree(R) <= 1; }

// Lexicographic scan; each tuple goes to the lowest-index matching without a coordinate clash.
inline std::vector<Relation> matching_decompose(const Relation& R) {
    std::vector<std::vector<Tuple>> parts;
    std::vector<std::vector<std::unordered_set<Value>>> used;
    for (const Tuple& t : R.tuples) {
        std::size_t m = 0;
        for (; m < parts.size(); ++m) {
            bool clash = false;
            for (std::size_t i = 0; i < t.size() && !clash; ++i) clash = used[m][i].count(t[i]) > 0;
            if (!clash) break;
        }
        if (m == parts.size()) {
            parts.emplace_back();
            used.emplace_back(t.size());
        }
        parts[m].push_back(t);
        for (std::size_t i = 0; i < t.size(); ++i) used[m][i].insert(t[i]);
    }
    std::vector<Relation> out;
    for (std::size_t m = 0; m < parts.size(); ++m)
        out.emplace_back(R.name + "#" + std::to_string(m + 1), R.schema, std::move(parts[m]));
    return out;
}

// One disjunct of ¬M(X_S): unary W_i(X_i), or the pivot branch with pendant M_{ℓj}(Y_j, X_j) and NAE.
struct Branch {
    std::vector<Atom> atoms;
    std::vector<std::vector<Var>> nae;
};

struct RewriteFragment {
    std::vector<Branch> branches;
    std::vector<std::pair<Relation, std::vector<int>>> relations;  // generated, with column dictionaries
};

// `vars` are the atom's distinct variables, aligned with M's columns; domains[i] = Dom(vars[i]).
inline RewriteFragment negate_matching(const Relation& M, const std::vector<Var>& vars, std::size_t pivot,
                                       const std::vector<std::set<Value>>& domains, const std::string& tag,
                                       QueryIR& ir, const std::vector<int>& column_dicts = {}) {
    const std::size_t k = M.arity();
    if (vars.size() != k || domains.size() != k || pivot >= k)
        throw ParameterError("negate_matching: schema, domains and pivot disagree");
    auto dict = [&](std::size_t i) { return column_dicts.empty() ? 0 : column_dicts[i]; };
    RewriteFragment out;
    auto add_w = [&](std::size_t i) {
        const std::set<Value> proj = M.column(i);
        std::vector<Tuple> rows;
        for (Value v : domains[i])
            if (!proj.count(v)) rows.push_back({v});
        const std::string name = "__W_" + tag + "_" + std::to_string(i + 1);
        out.relations.push_back({Relation::stored(name, 1, std::move(rows)), {dict(i)}});
        out.branches.push_back({{Atom{name, {vars[i]}}}, {}});
    };
    if (k == 1) {
        add_w(0);
        return out;
    }
    for (std::size_t i = 0; i < k; ++i)
        if (i != pivot) add_w(i);
    Branch b;
    std::vector<Var> nae{vars[pivot]};
    for (std::size_t j = 0; j < k; ++j) {
        if (j == pivot) continue;
        std::vector<Tuple> rows;
        for (const Tuple& t : M.tuples) rows.push_back({t[pivot], t[j]});
        const std::string name = "__M_" + tag + "_" + std::to_string(pivot + 1) + "_" + std::to_string(j + 1);
        out.relations.push_back({Relation::stored(name, 2, std::move(rows)), {dict(pivot), dict(j)}});
        const Var y = ir.fresh("Y_" + tag + "_" + std::to_string(j + 1));
        b.atoms.push_back(Atom{name, {y, vars[j]}});
        nae.push_back(y);
    }
    b.nae.push_back(nae);
    out.branches.push_back(std::move(b));
    return out;
}

// One choice point per (negated atom, matching).
struct UntangleSlot {
    std::size_t atom;
    std::size_t matching;
    std::vector<Branch> branches;
};

struct UntangledQuery {
    QueryIR base;  // input without negated atoms; fresh variables registered
    std::vector<UntangleSlot> slots;
    std::vector<QueryIR> disjuncts;
    BigInt B = 1;
    BigInt bound = 1;                     // ∏_S |S|^{|S|(ℓ_S−1)+1}
    std::vector<std::size_t> matchings;   // per negated atom
    std::vector<std::size_t> degrees;     // column degree per negated atom
    std::vector<std::string> generated;

    QueryIR disjunct(const std::vector<std::size_t>& choice) const {
        QueryIR q = base;
        for (std::size_t s = 0; s < slots.size(); ++s) {
            const Branch& b = slots[s].branches[choice[s]];
            q.positive_atoms.insert(q.positive_atoms.end(), b.atoms.begin(), b.atoms.end());
            q.nae_atoms.insert(q.nae_atoms.end(), b.nae.begin(), b.nae.end());
        }
        return q;
    }

    // Visits choices in lexicographic order; `keep` may reject a partial choice (prefix) early.
    // Returning false from `visit` stops the enumeration.
    void enumerate(const std::function<bool(const std::vector<std::size_t>&)>& visit,
                   const std::function<bool(const std::vector<std::size_t>&)>& keep = nullptr) const {
        std::vector<std::size_t> choice;
        std::function<bool()> rec = [&]() -> bool {
            if (keep && !choice.empty() && !keep(choice)) return true;
            if (choice.size() == slots.size()) return visit(choice);
            for (std::size_t b = 0; b < slots[choice.size()].branches.size(); ++b) {
                choice.push_back(b);
                const bool go = rec();
                choice.pop_back();
                if (!go) return false;
            }
            return true;
        };
        rec();
    }
};

// Pivot is the first schema variable. Generated relations are registered in db.
inline UntangledQuery untangle_query(const QueryIR& ir, Database& db, bool materialize = true) {
    UntangledQuery out;
    out.base = ir;
    out.base.negated_atoms.clear();
    for (std::size_t a = 0; a < ir.negated_atoms.size(); ++a) {
        const Atom& atom = ir.negated_atoms[a];
        const Relation bound_rel = bind_atom(db, atom);
        const std::size_t k = bound_rel.arity();
        const std::size_t ell = column_degree(bound_rel);
        out.degrees.push_back(ell);
        if (bound_rel.empty()) {
            out.matchings.push_back(0);
            continue;
        }
        if (k == 0) {  // ¬R() with R nonempty is false
            out.slots.push_back({a, 0, {}});
            out.matchings.push_back(0);
            out.B = 0;
            continue;
        }
        out.bound *= boost::multiprecision::pow(BigInt(k), static_cast<unsigned>(k * (ell - 1) + 1));
        std::vector<std::set<Value>> domains;
        std::vector<int> dicts;
        for (std::size_t i = 0; i < k; ++i) {
            domains.push_back(active_domain(db, ir, bound_rel.schema[i]));
            const auto pos = static_cast<std::size_t>(std::find(atom.vars.begin(), atom.vars.end(), bound_rel.schema[i]) - atom.vars.begin());
            dicts.push_back(db.domain_of(atom.relation, pos));
        }
        const auto parts = matching_decompose(bound_rel);
        out.matchings.push_back(parts.size());
        for (std::size_t m = 0; m < parts.size(); ++m) {
            const std::string tag = atom.relation + std::to_string(a) + "m" + std::to_string(m + 1);
            RewriteFragment frag = negate_matching(parts[m], bound_rel.schema, 0, domains, tag, out.base, dicts);
            for (auto& [rel, cols] : frag.relations) {
                out.generated.push_back(rel.name);
                db.add_relation(std::move(rel), cols);
            }
            out.B *= frag.branches.size();
            out.slots.push_back({a, m, std::move(frag.branches)});
        }
    }
    if (materialize)
        out.enumerate([&](const std::vector<std::size_t>& c) {
            out.disjuncts.push_back(out.disjunct(c));
            return true;
        });
    return out;
}

}  // namespace negcq
