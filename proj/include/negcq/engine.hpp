#pragma once

#include "negcq/coloropt.hpp"
#include "negcq/untangle.hpp"

#include <chrono>
#include <unordered_set>

namespace negcq {

// ---------------------------------------------------------------- predicates and tables

// Virtual factor: a membership test over `vars`, never materialized.
struct Predicate {
    std::vector<Var> vars;
    std::function<bool(const Value*)> test;  // arguments aligned with vars
};

inline bool not_all_equal(const Value* x, std::size_t n) {
    for (std::size_t i = 1; i < n; ++i)
        if (x[i] != x[0]) return true;
    return false;
}

inline Predicate nae_predicate(std::vector<Var> vars) {
    const std::size_t n = vars.size();
    return {std::move(vars), [n](const Value* x) { return not_all_equal(x, n); }};
}

// Row-major keys; indicator tables carry no values (every row is one).
template <class V>
struct Table {
    std::vector<Var> schema;
    std::vector<Value> keys;
    std::vector<V> values;
    std::size_t n = 0;
    bool indicator = false;

    std::size_t arity() const { return schema.size(); }
    const Value* key(std::size_t r) const { return keys.data() + r * arity(); }
};

template <class V>
Table<V> indicator_table(const std::vector<Var>& schema, const std::vector<Tuple>& rows) {
    Table<V> t;
    t.schema = schema;
    t.indicator = true;
    t.n = rows.size();
    for (const Tuple& r : rows) t.keys.insert(t.keys.end(), r.begin(), r.end());
    return t;
}

template <class V>
Table<V> table_from_factor(const Factor<V>& f) {
    Table<V> t;
    t.schema = f.schema;
    t.keys = f.keys;
    t.values = f.values;
    t.n = f.size();
    return t;
}

// Rows are already sorted and duplicate-free when produced by the join.
template <class V, class SR>
Factor<V> factor_from_table(const Table<V>& t, const SR& sr) {
    std::vector<std::pair<Tuple, V>> entries;
    for (std::size_t r = 0; r < t.n; ++r)
        entries.emplace_back(Tuple(t.key(r), t.key(r) + t.arity()), t.indicator ? sr.one() : t.values[r]);
    return Factor<V>::build(t.schema, std::move(entries), sr);
}

template <class V>
Table<V> project_indicator(const Table<V>& t, const std::vector<Var>& onto) {
    std::vector<std::size_t> pos;
    std::vector<Var> schema;
    for (std::size_t i = 0; i < t.arity(); ++i)
        if (std::find(onto.begin(), onto.end(), t.schema[i]) != onto.end()) {
            pos.push_back(i);
            schema.push_back(t.schema[i]);
        }
    std::vector<Tuple> rows;
    rows.reserve(t.n);
    for (std::size_t r = 0; r < t.n; ++r) {
        Tuple u;
        for (std::size_t p : pos) u.push_back(t.key(r)[p]);
        rows.push_back(std::move(u));
    }
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    return indicator_table<V>(schema, rows);
}

// ---------------------------------------------------------------- generic join

namespace detail {

// Multiway join over `order`; the first m variables are kept, the rest summed out.
// Each variable is bound by intersecting the sorted ranges of every input that holds it.
template <class SR>
class Joiner {
public:
    using V = typename SR::value_type;

    Joiner(const SR& sr, const std::vector<const Table<V>*>& inputs, const std::vector<const Table<V>*>& filters,
           const std::vector<const Predicate*>& preds, std::vector<Var> order, std::size_t m)
        : sr_(sr), order_(std::move(order)), m_(m) {
        const std::size_t D = order_.size();
        part_.assign(D, {});
        completes_.assign(D, {});
        preds_at_.assign(D, {});
        empty_ = false;
        base_ = sr_.one();
        auto add = [&](const Table<V>* t, bool valued) {
            if (t->n == 0) { empty_ = true; return; }
            In in;
            in.arity = t->arity();
            in.valued = valued && !t->indicator;
            in.values = &t->values;
            std::vector<std::size_t> depth(in.arity);
            for (std::size_t c = 0; c < in.arity; ++c) {
                auto it = std::find(order_.begin(), order_.end(), t->schema[c]);
                if (it == order_.end()) throw ConstructionBug("join input variable missing from the join order");
                depth[c] = static_cast<std::size_t>(it - order_.begin());
            }
            std::vector<std::size_t> perm(in.arity);
            std::iota(perm.begin(), perm.end(), 0);
            std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return depth[a] < depth[b]; });
            in.depth.resize(in.arity);
            for (std::size_t c = 0; c < in.arity; ++c) in.depth[c] = depth[perm[c]];
            std::vector<std::size_t> rows(t->n);
            std::iota(rows.begin(), rows.end(), 0);
            std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
                for (std::size_t c : perm) {
                    const Value x = t->key(a)[c], y = t->key(b)[c];
                    if (x != y) return x < y;
                }
                return false;
            });
            in.keys.reserve(t->n * in.arity);
            for (std::size_t r : rows)
                for (std::size_t c : perm) in.keys.push_back(t->key(r)[c]);
            in.row = std::move(rows);
            const std::size_t idx = ins_.size();
            if (in.arity == 0) {
                if (in.valued) base_ = sr_.times(base_, (*in.values)[in.row[0]]);
            } else {
                for (std::size_t c = 0; c < in.arity; ++c) part_[in.depth[c]].push_back(idx);
                if (in.valued) completes_[in.depth.back()].push_back(idx);
            }
            ins_.push_back(std::move(in));
        };
        for (const auto* t : inputs) add(t, true);
        for (const auto* t : filters) add(t, false);
        for (const Predicate* p : preds) {
            std::size_t last = 0;
            for (Var v : p->vars) {
                auto it = std::find(order_.begin(), order_.end(), v);
                if (it == order_.end()) throw ConstructionBug("predicate variable missing from the join order");
                last = std::max(last, static_cast<std::size_t>(it - order_.begin()));
            }
            std::vector<std::size_t> at;
            for (Var v : p->vars) at.push_back(static_cast<std::size_t>(std::find(order_.begin(), order_.end(), v) - order_.begin()));
            preds_at_[last].push_back({p, std::move(at)});
        }
        for (std::size_t d = 0; d < D; ++d)
            if (part_[d].empty() && !empty_)
                throw ConstructionBug("join variable without a range-providing input");
    }

    Table<V> run() {
        Table<V> out;
        out.schema.assign(order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(m_));
        out_ = &out;
        if (empty_ || sr_.is_zero(base_)) return out;
        lo_.assign(ins_.size(), 0);
        hi_.assign(ins_.size(), 0);
        col_.assign(ins_.size(), 0);
        for (std::size_t i = 0; i < ins_.size(); ++i) hi_[i] = ins_[i].row.size();
        bound_.assign(order_.size(), 0);
        step(0, base_);
        return out;
    }

private:
    struct In {
        std::vector<Value> keys;
        std::size_t arity = 0;
        std::vector<std::size_t> depth;
        std::vector<std::size_t> row;
        const std::vector<V>* values = nullptr;
        bool valued = false;
        Value at(std::size_t r, std::size_t c) const { return keys[r * arity + c]; }
    };
    struct PredAt {
        const Predicate* p;
        std::vector<std::size_t> at;
    };

    const SR& sr_;
    std::vector<Var> order_;
    std::size_t m_;
    std::vector<In> ins_;
    std::vector<std::vector<std::size_t>> part_, completes_;
    std::vector<std::vector<PredAt>> preds_at_;
    std::vector<std::size_t> lo_, hi_, col_;
    std::vector<Value> bound_;
    bool empty_ = false;
    V base_;
    V acc_;
    Table<V>* out_ = nullptr;

    bool full(const V& v) const {
        if constexpr (std::is_same_v<V, bool>) return v;
        else if constexpr (std::is_same_v<V, BitWords>) return v == sr_.one();
        else return false;
    }

    void emit() {
        out_->keys.insert(out_->keys.end(), bound_.begin(), bound_.begin() + static_cast<std::ptrdiff_t>(m_));
        out_->values.push_back(acc_);
        ++out_->n;
    }

    // Returns true when the current output group is saturated.
    bool step(std::size_t d, const V& prod) {
        if (d == m_) {
            acc_ = sr_.zero();
            explore(d, prod);
            if (!sr_.is_zero(acc_)) emit();
            return false;
        }
        return explore(d, prod);
    }

    std::pair<std::size_t, std::size_t> range_of(std::size_t i, Value x) const {
        const In& in = ins_[i];
        const std::size_t c = col_[i];
        std::size_t a = lo_[i], b = hi_[i];
        std::size_t l = a, h = b;
        while (l < h) {
            const std::size_t mid = (l + h) / 2;
            if (in.at(mid, c) < x) l = mid + 1;
            else h = mid;
        }
        std::size_t l2 = l, h2 = b;
        while (l2 < h2) {
            const std::size_t mid = (l2 + h2) / 2;
            if (in.at(mid, c) <= x) l2 = mid + 1;
            else h2 = mid;
        }
        return {l, l2};
    }

    bool explore(std::size_t d, const V& prod) {
        if (d == order_.size()) {
            acc_ = sr_.plus(acc_, prod);
            return full(acc_);
        }
        const auto& ps = part_[d];
        std::size_t lead = ps[0];
        for (std::size_t i : ps)
            if (hi_[i] - lo_[i] < hi_[lead] - lo_[lead]) lead = i;
        struct Saved { std::size_t lo, hi, col; };
        boost::container::small_vector<Saved, 8> saved;
        for (std::size_t i : ps) saved.push_back({lo_[i], hi_[i], col_[i]});
        const std::size_t lead_lo = lo_[lead], lead_hi = hi_[lead];
        for (std::size_t r = lead_lo; r < lead_hi;) {
            const Value x = ins_[lead].at(r, col_[lead]);
            std::size_t end = r + 1;
            while (end < lead_hi && ins_[lead].at(end, col_[lead]) == x) ++end;
            bool ok = true;
            for (std::size_t k = 0; k < ps.size() && ok; ++k) {
                const std::size_t i = ps[k];
                if (i == lead) continue;
                const auto [a, b] = range_of(i, x);
                if (a == b) ok = false;
                else { lo_[i] = a; hi_[i] = b; }
            }
            if (ok) {
                lo_[lead] = r;
                hi_[lead] = end;
                for (std::size_t i : ps) ++col_[i];
                bound_[d] = x;
                for (const PredAt& pa : preds_at_[d]) {
                    boost::container::small_vector<Value, 8> args;
                    for (std::size_t a : pa.at) args.push_back(bound_[a]);
                    if (!pa.p->test(args.data())) { ok = false; break; }
                }
                if (ok) {
                    V p = prod;
                    for (std::size_t i : completes_[d]) {
                        p = sr_.times(p, (*ins_[i].values)[ins_[i].row[lo_[i]]]);
                        if (sr_.is_zero(p)) { ok = false; break; }
                    }
                    if (ok && step(d + 1, p) && d >= m_) {
                        for (std::size_t k = 0; k < ps.size(); ++k) { lo_[ps[k]] = saved[k].lo; hi_[ps[k]] = saved[k].hi; col_[ps[k]] = saved[k].col; }
                        return true;
                    }
                }
            }
            for (std::size_t k = 0; k < ps.size(); ++k) { lo_[ps[k]] = saved[k].lo; hi_[ps[k]] = saved[k].hi; col_[ps[k]] = saved[k].col; }
            r = end;
        }
        return false;
    }
};

}  // namespace detail

template <class SR>
using TableOf = Table<typename SR::value_type>;

template <class SR>
TableOf<SR> join_tables(const SR& sr, const std::vector<const TableOf<SR>*>& inputs,
                        const std::vector<const TableOf<SR>*>& filters, const std::vector<const Predicate*>& preds,
                        const std::vector<Var>& order, std::size_t m) {
    return detail::Joiner<SR>(sr, inputs, filters, preds, order, m).run();
}

// ---------------------------------------------------------------- variable elimination

template <class SR>
using StepHook = std::function<void(TableOf<SR>& produced, Var eliminated, const std::vector<TableOf<SR>>& others,
                                    const std::vector<Predicate>& remaining_preds)>;

// Joins ∂(v) with indicator projections of the other tables meeting J and sums v out.
template <class SR>
TableOf<SR> eliminate_step(std::vector<TableOf<SR>>& tables, std::vector<Predicate>& preds, Var v, const SR& sr) {
    using T = TableOf<SR>;
    std::vector<T> touching, rest;
    for (auto& t : tables)
        (std::find(t.schema.begin(), t.schema.end(), v) != t.schema.end() ? touching : rest).push_back(std::move(t));
    std::vector<Predicate> ptouch, prest;
    for (auto& p : preds)
        (std::find(p.vars.begin(), p.vars.end(), v) != p.vars.end() ? ptouch : prest).push_back(std::move(p));
    std::vector<Var> order;
    auto note = [&](Var u) {
        if (u != v && std::find(order.begin(), order.end(), u) == order.end()) order.push_back(u);
    };
    for (const T& t : touching)
        for (Var u : t.schema) note(u);
    for (const Predicate& p : ptouch)
        for (Var u : p.vars) note(u);
    const std::size_t m = order.size();
    order.push_back(v);
    std::vector<T> proj;
    for (const T& t : rest) {
        bool meets = false;
        for (Var u : t.schema) meets = meets || std::find(order.begin(), order.end(), u) != order.end();
        if (meets) proj.push_back(project_indicator(t, order));
    }
    std::vector<const T*> in, fil;
    for (const T& t : touching) in.push_back(&t);
    for (const T& t : proj) fil.push_back(&t);
    std::vector<const Predicate*> pp;
    for (const Predicate& p : ptouch) pp.push_back(&p);
    T out = join_tables(sr, in, fil, pp, order, m);
    tables = std::move(rest);
    preds = std::move(prest);
    return out;
}

template <class SR>
TableOf<SR> run_elimination(std::vector<TableOf<SR>> tables, std::vector<Predicate> preds, const VertexOrdering& sigma,
                            const std::vector<Var>& F, const SR& sr, const StepHook<SR>& hook = nullptr) {
    using T = TableOf<SR>;
    if (!sigma.has_f_prefix(F)) throw PlanError("ordering does not place the free variables first");
    const std::set<Var> free(F.begin(), F.end());
    for (auto it = sigma.sigma.rbegin(); it != sigma.sigma.rend(); ++it) {
        const Var v = *it;
        if (free.count(v)) break;
        bool present = false;
        for (const T& t : tables) present = present || std::find(t.schema.begin(), t.schema.end(), v) != t.schema.end();
        if (!present) {
            for (const Predicate& p : preds)
                if (std::find(p.vars.begin(), p.vars.end(), v) != p.vars.end())
                    throw ConstructionBug("predicate variable with no table");
            continue;
        }
        T produced = eliminate_step(tables, preds, v, sr);
        if (hook) hook(produced, v, tables, preds);
        tables.push_back(std::move(produced));
    }
    std::vector<const T*> in;
    for (const T& t : tables) in.push_back(&t);
    std::vector<const Predicate*> pp;
    for (const Predicate& p : preds) pp.push_back(&p);
    return join_tables(sr, in, {}, pp, F, F.size());
}

// Factor-level elimination of one variable.
template <class SR>
Factor<typename SR::value_type> eliminate_variable(const std::vector<Factor<typename SR::value_type>>& factors, Var v,
                                                   const SR& sr) {
    std::vector<TableOf<SR>> tables;
    bool found = false;
    for (const auto& f : factors) {
        tables.push_back(table_from_factor(f));
        found = found || std::find(f.schema.begin(), f.schema.end(), v) != f.schema.end();
    }
    if (!found) throw ParameterError("variable " + std::to_string(v) + " occurs in no factor");
    std::vector<Predicate> none;
    return factor_from_table(eliminate_step(tables, none, v, sr), sr);
}

// ---------------------------------------------------------------- building tables from a query

template <class V>
std::vector<Table<V>> atom_tables(const QueryIR& q, const Database& db) {
    std::vector<Table<V>> out;
    for (const Atom& a : q.positive_atoms) {
        const Relation r = bind_atom(db, a);
        out.push_back(indicator_table<V>(r.schema, r.tuples));
    }
    for (const auto& [v, rel] : q.singleton_filters) {
        const Relation& r = db.relation(rel);
        out.push_back(indicator_table<V>({v}, r.tuples));
    }
    for (const auto& [v, d] : q.domain_decls) {
        const std::size_t col = static_cast<std::size_t>(resolve_dom_column(db, d));
        std::set<Value> vals;
        for (const Tuple& t : db.relation(d.relation).tuples) vals.insert(t[col]);
        std::vector<Tuple> rows;
        for (Value x : vals) rows.push_back({x});
        out.push_back(indicator_table<V>({v}, rows));
    }
    return out;
}

inline Hypergraph plan_hypergraph(const QueryIR& q, const std::vector<std::vector<Var>>& extra = {}) {
    Hypergraph H = atom_hypergraph(q);
    for (const auto& e : extra) H.add_edge(e);
    return H;
}

// Width of σ's bags measured with covers from the atom hypergraph only.
inline WidthEstimate atom_width(const Hypergraph& H_atoms, const Hypergraph& H_plan, const VertexOrdering& sigma) {
    WidthEstimate w;
    w.value = 0;
    for (const auto& step : elimination_sequence(H_plan, sigma)) {
        BagCover c = fractional_edge_cover_bag(H_atoms, step.J);
        if (c.rho > w.value) w.value = c.rho;
        w.certificate.push_back(std::move(c));
    }
    return w;
}

template <class V>
std::set<Tuple> table_tuples(const Table<V>& t) {
    std::set<Tuple> out;
    for (std::size_t r = 0; r < t.n; ++r) out.insert(Tuple(t.key(r), t.key(r) + t.arity()));
    return out;
}

// Semiring evaluation of positive atoms with every NAE atom as a direct predicate.
template <class SR>
Factor<typename SR::value_type> insideout(const QueryIR& ir, const Database& db, const VertexOrdering& sigma, const SR& sr) {
    if (!ir.negated_atoms.empty()) throw PlanError("insideout expects a query without negated atoms");
    auto tables = atom_tables<typename SR::value_type>(ir, db);
    if constexpr (!std::is_same_v<typename SR::value_type, bool>) {
        for (auto& t : tables) {  // counting needs explicit ones
            t.indicator = false;
            t.values.assign(t.n, sr.one());
        }
    }
    std::vector<Predicate> preds;
    for (const auto& e : ir.nae_atoms) preds.push_back(nae_predicate(e));
    return factor_from_table(run_elimination(std::move(tables), std::move(preds), sigma, ir.free_vars, sr), sr);
}

// ---------------------------------------------------------------- oracles

// Backtracking over active domains with every atom tested directly.
inline std::set<Tuple> naive_eval(const QueryIR& ir, const Database& db, std::uint64_t budget = 200'000'000) {
    std::vector<Var> vars;
    auto note = [&](Var v) {
        if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
    };
    for (const Atom& a : ir.positive_atoms)
        for (Var v : a.vars) note(v);
    for (const auto& [v, r] : ir.singleton_filters) note(v);
    for (const auto& [v, d] : ir.domain_decls) note(v);
    for (Var v : ir.used_vars()) note(v);
    std::map<Var, std::size_t> pos;
    for (std::size_t i = 0; i < vars.size(); ++i) pos[vars[i]] = i;
    std::vector<std::vector<Value>> cand;
    for (Var v : vars) {
        const auto d = active_domain(db, ir, v);
        cand.emplace_back(d.begin(), d.end());
    }
    struct Check {
        int kind;  // 0 positive, 1 negated, 2 nae, 3 unary set
        const Relation* rel = nullptr;
        std::vector<std::size_t> at;
        std::set<Value> set;
    };
    std::vector<std::vector<Check>> checks(vars.size() + 1);
    auto last_of = [&](const std::vector<std::size_t>& at) {
        std::size_t m = 0;
        for (std::size_t a : at) m = std::max(m, a + 1);
        return m;
    };
    auto atom_check = [&](const Atom& a, int kind) {
        Check c;
        c.kind = kind;
        c.rel = &db.relation(a.relation);
        for (Var v : a.vars) c.at.push_back(pos.at(v));
        checks[last_of(c.at)].push_back(std::move(c));
    };
    for (const Atom& a : ir.positive_atoms) atom_check(a, 0);
    for (const Atom& a : ir.negated_atoms) atom_check(a, 1);
    for (const auto& e : ir.nae_atoms) {
        Check c;
        c.kind = 2;
        for (Var v : e) c.at.push_back(pos.at(v));
        checks[last_of(c.at)].push_back(std::move(c));
    }
    for (const auto& [v, rel] : ir.singleton_filters) {
        Check c;
        c.kind = 3;
        c.at = {pos.at(v)};
        for (const Tuple& t : db.relation(rel).tuples) c.set.insert(t[0]);
        checks[last_of(c.at)].push_back(std::move(c));
    }
    for (const auto& [v, d] : ir.domain_decls) {
        Check c;
        c.kind = 3;
        c.at = {pos.at(v)};
        const std::size_t col = static_cast<std::size_t>(resolve_dom_column(db, d));
        for (const Tuple& t : db.relation(d.relation).tuples) c.set.insert(t[col]);
        checks[last_of(c.at)].push_back(std::move(c));
    }
    std::vector<Value> val(vars.size());
    std::set<Tuple> out;
    std::uint64_t nodes = 0;
    auto pass = [&](std::size_t depth) {
        Tuple t;
        for (const Check& c : checks[depth]) {
            t.clear();
            for (std::size_t a : c.at) t.push_back(val[a]);
            switch (c.kind) {
                case 0: if (!c.rel->contains(t)) return false; break;
                case 1: if (c.rel->contains(t)) return false; break;
                case 2: if (!not_all_equal(t.data(), t.size())) return false; break;
                default: if (!c.set.count(t[0])) return false; break;
            }
        }
        return true;
    };
    std::function<void(std::size_t)> rec = [&](std::size_t d) {
        if (++nodes > budget) throw EvaluationBudgetExceeded("naive evaluation visited more than " + std::to_string(budget) + " nodes");
        if (!pass(d)) return;
        if (d == vars.size()) {
            Tuple t;
            for (Var f : ir.free_vars) t.push_back(val[pos.at(f)]);
            out.insert(std::move(t));
            return;
        }
        for (Value x : cand[d]) {
            val[d] = x;
            rec(d + 1);
        }
    };
    rec(0);
    return out;
}

// Materializes the positive join tuple by tuple (hash-indexed) and filters afterwards; no early exit.
// `budget` bounds the partial join tuples visited.
inline std::set<Tuple> join_then_filter(const QueryIR& ir, const Database& db, std::uint64_t budget = 200'000'000) {
    std::vector<Relation> rels;
    for (const Atom& a : ir.positive_atoms) rels.push_back(bind_atom(db, a));
    std::map<Var, std::size_t> pos;
    std::vector<Var> vars;
    struct Plan {
        std::vector<std::size_t> key_cols, key_slots, new_cols, new_slots;
        std::unordered_map<std::string, std::vector<std::size_t>> index;
    };
    std::vector<Plan> plans(rels.size());
    auto enc = [](const std::vector<Value>& k) { return std::string(reinterpret_cast<const char*>(k.data()), k.size() * sizeof(Value)); };
    for (std::size_t i = 0; i < rels.size(); ++i) {
        Plan& p = plans[i];
        for (std::size_t c = 0; c < rels[i].arity(); ++c) {
            const Var v = rels[i].schema[c];
            if (pos.count(v)) { p.key_cols.push_back(c); p.key_slots.push_back(pos[v]); }
            else { pos[v] = vars.size(); vars.push_back(v); p.new_cols.push_back(c); p.new_slots.push_back(pos[v]); }
        }
        for (std::size_t r = 0; r < rels[i].size(); ++r) {
            std::vector<Value> k;
            for (std::size_t c : p.key_cols) k.push_back(rels[i].tuples[r][c]);
            p.index[enc(k)].push_back(r);
        }
    }
    std::vector<std::pair<std::vector<Value>, const std::set<Value>*>> unary;
    std::vector<std::set<Value>> unary_sets;
    std::vector<Var> unary_vars;
    for (const auto& [v, rel] : ir.singleton_filters) {
        std::set<Value> s;
        for (const Tuple& t : db.relation(rel).tuples) s.insert(t[0]);
        unary_sets.push_back(std::move(s));
        unary_vars.push_back(v);
    }
    for (const auto& [v, d] : ir.domain_decls) {
        std::set<Value> s;
        const std::size_t col = static_cast<std::size_t>(resolve_dom_column(db, d));
        for (const Tuple& t : db.relation(d.relation).tuples) s.insert(t[col]);
        unary_sets.push_back(std::move(s));
        unary_vars.push_back(v);
    }
    std::vector<Value> val(vars.size());
    std::set<Tuple> out;
    std::vector<Value> key;
    std::uint64_t nodes = 0;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (++nodes > budget) throw EvaluationBudgetExceeded("join-then-filter visited more than " + std::to_string(budget) + " partial tuples");
        if (i == rels.size()) {
            for (const Atom& a : ir.negated_atoms) {
                Tuple t;
                for (Var v : a.vars) t.push_back(val[pos.at(v)]);
                if (db.relation(a.relation).contains(t)) return;
            }
            for (const auto& e : ir.nae_atoms) {
                Tuple t;
                for (Var v : e) t.push_back(val[pos.at(v)]);
                if (!not_all_equal(t.data(), t.size())) return;
            }
            for (std::size_t u = 0; u < unary_vars.size(); ++u)
                if (!unary_sets[u].count(val[pos.at(unary_vars[u])])) return;
            Tuple t;
            for (Var f : ir.free_vars) t.push_back(val[pos.at(f)]);
            out.insert(std::move(t));
            return;
        }
        const Plan& p = plans[i];
        key.clear();
        for (std::size_t s : p.key_slots) key.push_back(val[s]);
        auto it = p.index.find(enc(key));
        if (it == p.index.end()) return;
        for (std::size_t r : it->second) {
            for (std::size_t k = 0; k < p.new_cols.size(); ++k) val[p.new_slots[k]] = rels[i].tuples[r][p.new_cols[k]];
            rec(i + 1);
        }
    };
    rec(0);
    return out;
}

// ---------------------------------------------------------------- configuration and reports

enum class Strategy { tensor, colors_join, naive };
enum class FamilyMode { random, greedy, explicit_code };

inline std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::tensor: return "tensor";
        case Strategy::colors_join: return "colors-join";
        default: return "naive";
    }
}
inline std::string to_string(FamilyMode m) {
    switch (m) {
        case FamilyMode::random: return "random";
        case FamilyMode::greedy: return "greedy";
        default: return "explicit";
    }
}

struct EngineConfig {
    Strategy strategy = Strategy::tensor;
    FamilyMode family_mode = FamilyMode::random;
    std::uint64_t seed = 0;
    ColorBudgets color;
    std::size_t bit_budget = std::size_t{1} << 16;  // max bits per BitVector run; larger ranks are chunked
    std::size_t rank_cap = std::size_t{1} << 18;    // above this, NAE atoms are checked directly instead
    std::size_t ordering_cap = 16;
    std::uint64_t naive_budget = 200'000'000;
    std::uint64_t disjunct_cap = 10'000'000;
    double size_multiplier = 1.0;
    bool symmetric_prune = true;
    bool prune_disjuncts = true;     // unary-consistency and existence checks on partial choices
    bool exclusive_branches = true;  // later branches assert that earlier W branches failed
    std::size_t max_colored_vars = 8;
    bool merge_pendants = true;
    bool early_exit = true;
};

// Named random streams: FNV-1a of the name mixed into the seed, finished with splitmix64.
inline std::uint64_t stream_seed(std::uint64_t seed, const std::string& name) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : name) { h ^= ch; h *= 1099511628211ULL; }
    std::uint64_t z = seed ^ h;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct DisjunctReport {
    std::string choice;
    std::string strategy;
    Rational fhtw = 0;
    bool fhtw_optimal = true;
    std::size_t U = 0;
    std::size_t N = 0;
    std::size_t c = 0;
    Rational theta = 0;
    std::size_t family_size = 0;
    std::size_t rank = 0;
    std::size_t chunks = 0;
    std::size_t colored_nae = 0;
    std::size_t direct_nae = 0;
    std::string provenance;
    std::string certification;
    std::string note;
    std::size_t tuples = 0;
    double ms = 0;
};

struct RunReport {
    std::string strategy;
    std::string family_mode;
    std::uint64_t seed = 0;
    BigInt B = 1;
    BigInt bound = 1;
    std::vector<std::size_t> matchings, degrees;
    std::uint64_t enumerated = 0, pruned = 0, evaluated = 0, empty_after_merge = 0;
    bool early_exit = false;
    BigInt work = 0;  // Σ r over evaluated disjuncts: the B·r product actually incurred
    std::vector<DisjunctReport> disjuncts;
    double ms = 0;
};

struct Answer {
    std::vector<Var> free;
    std::set<Tuple> tuples;
    RunReport report;
};

// ---------------------------------------------------------------- colour setup for one disjunct

struct ColorSetup {
    Hypergraph G;                 // vertices are query variables
    LocalGraph local;
    std::vector<std::size_t> colored;  // indices into the disjunct's NAE atoms
    std::vector<Value> universe;        // sorted union of the U variables' domains
    std::unordered_map<Value, std::size_t> index;
    std::size_t c = 1;
    bool c_exact = true;
    std::vector<Rational> p;
    Rational theta = 1;
    std::shared_ptr<const ColorFamily> family;
    std::string note;
};

inline std::vector<Rational> default_distribution(const LocalGraph& g, std::size_t c, Rational& th, const ColorBudgets& b) {
    const std::vector<Rational> uni = uniform_distribution(c);
    const Rational tu = theta(g, c, uni, b);
    const ThetaBound lb = theta_star_lower(g, b);
    if (lb.multipartite && lb.c == c) {
        const Rational tm = theta(g, c, lb.p, b);
        if (tm >= tu) { th = tm; return lb.p; }
    }
    th = tu;
    return uni;
}

struct Analysis {
    std::size_t c = 1;
    bool exact = true;
    std::vector<Rational> p;
    Rational theta = 1;
};

// Families keyed by (structure, c, N, mode, p); analyses keyed by structure.
struct FamilyCache : std::map<std::string, std::shared_ptr<const ColorFamily>> {
    std::map<std::string, Analysis> analyses;
};

inline std::string graph_key(const LocalGraph& g) {
    std::string k = std::to_string(g.n) + ":";
    for (const auto& e : g.edges) {
        for (int v : e) k += std::to_string(v) + ",";
        k += ";";
    }
    return k;
}

inline std::shared_ptr<const ColorFamily> build_family(const LocalGraph& g, std::size_t c, const std::vector<Rational>& p,
                                                       std::size_t N, const EngineConfig& cfg, FamilyCache& cache,
                                                       std::string& note) {
    std::string key = graph_key(g) + "|c=" + std::to_string(c) + "|N=" + std::to_string(N) + "|" + to_string(cfg.family_mode) + "|p=";
    for (const Rational& x : p) key += to_string(x) + ",";
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    FamilyOptions opt;
    opt.seed = stream_seed(cfg.seed, "family/" + key);
    opt.size_multiplier = cfg.size_multiplier;
    opt.budgets = cfg.color;
    std::shared_ptr<const ColorFamily> fam;
    auto random = [&]() { return std::make_shared<const ColorFamily>(random_family(g, c, p, N, opt)); };
    if (cfg.family_mode == FamilyMode::explicit_code) {
        try {
            fam = std::make_shared<const ColorFamily>(explicit_family(g, c, N, p, opt));
        } catch (const ExplicitBudgetExceeded& e) {
            note = std::string("explicit family over budget, used random: ") + e.what();
            fam = random();
        }
    } else if (cfg.family_mode == FamilyMode::greedy) {
        try {
            std::vector<std::vector<std::uint8_t>> pool;
            if (detail::upow_le(c, N, 4096)) {
                pool = all_functions(N, c);
            } else {
                const std::size_t bound = family_size_bound(chromatic_polynomial(g, N, cfg.color), theta(g, c, p, cfg.color));
                std::mt19937_64 rng(opt.seed);
                std::uniform_int_distribution<std::size_t> col(0, c - 1);
                for (std::size_t i = 0; i < 4 * bound + 64; ++i) {
                    std::vector<std::uint8_t> f(N);
                    for (auto& x : f) x = static_cast<std::uint8_t>(col(rng));
                    pool.push_back(std::move(f));
                }
            }
            fam = std::make_shared<const ColorFamily>(greedy_cover_family(g, c, N, pool, cfg.color));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::internal) throw;
            note = std::string("greedy family unavailable, used random: ") + e.what();
            fam = random();
        }
    } else {
        fam = random();
    }
    cache[key] = fam;
    return fam;
}

// Colors the longest prefix of NAE atoms whose structure fits the budgets; the rest stay direct.
inline ColorSetup prepare_coloring(const QueryIR& d, const Database& db, const EngineConfig& cfg, FamilyCache& cache,
                                   bool need_rank) {
    std::size_t take = 0;
    {
        std::set<Var> U;
        for (; take < d.nae_atoms.size(); ++take) {
            std::set<Var> next = U;
            next.insert(d.nae_atoms[take].begin(), d.nae_atoms[take].end());
            if (next.size() > std::min(cfg.color.quotient_cap, cfg.max_colored_vars)) break;
            U = std::move(next);
        }
    }
    std::string shed;
    while (true) {
        ColorSetup s;
        for (std::size_t i = 0; i < take; ++i) {
            s.colored.push_back(i);
            s.G.add_edge(std::vector<int>(d.nae_atoms[i].begin(), d.nae_atoms[i].end()));
        }
        if (take == 0) return s;
        try {
            s.local = LocalGraph(s.G);
            std::set<Value> uni;
            for (Var v : s.G.vertices) {
                const auto dom = active_domain(db, d, v);
                uni.insert(dom.begin(), dom.end());
            }
            s.universe.assign(uni.begin(), uni.end());
            for (std::size_t i = 0; i < s.universe.size(); ++i) s.index[s.universe[i]] = i;
            const std::string gk = graph_key(s.local);
            auto an = cache.analyses.find(gk);
            if (an == cache.analyses.end()) {
                Analysis a;
                const ColorCount cc = color_count(s.local, cfg.color);
                a.c = cc.c;
                a.exact = cc.exact;
                if (a.c > 255) throw ChromaticBudgetExceeded("more than 255 colors");
                a.p = default_distribution(s.local, a.c, a.theta, cfg.color);
                an = cache.analyses.emplace(gk, std::move(a)).first;
            }
            s.c = an->second.c;
            s.c_exact = an->second.exact;
            s.p = an->second.p;
            s.theta = an->second.theta;
            const std::size_t N = std::max<std::size_t>(s.universe.size(), 1);
            s.family = build_family(s.local, s.c, s.p, N, cfg, cache, s.note);
            if (need_rank) {
                const BigInt pc = chromatic_polynomial(s.local, s.c, cfg.color);
                if (pc * s.family->size() > cfg.rank_cap) throw ChromaticBudgetExceeded("rank above the rank cap");
            } else if (s.family->size() > cfg.rank_cap) {
                throw ChromaticBudgetExceeded("family above the rank cap");
            }
            if (!shed.empty()) s.note += (s.note.empty() ? "" : "; ") + shed;
            return s;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::budget) throw;
            --take;
            shed = "shed NAE atoms to direct checks after: " + std::string(e.what());
        }
    }
}

// ---------------------------------------------------------------- tensor evaluation

struct TensorRun {
    std::set<Tuple> tuples;
    std::size_t chunks = 0;
};

// Unary factors ψ̄_i over term range [lo, hi): bit (g, f) set iff f(x) = g(i).
inline std::vector<Table<BitWords>> unary_tables(const TensorDecomposition& T, const QueryIR& d, const Database& db,
                                                 const std::unordered_map<Value, std::size_t>& index, std::size_t lo,
                                                 std::size_t hi) {
    std::vector<Table<BitWords>> out;
    const BitVectorSemiring sr(hi - lo);
    const std::size_t Fs = T.family->size();
    for (std::size_t i = 0; i < T.G.vertices.size(); ++i) {
        const Var v = T.G.vertices[i];
        Table<BitWords> t;
        t.schema = {v};
        for (Value x : active_domain(db, d, v)) {
            auto it = index.find(x);
            if (it == index.end()) throw PlanError("value outside the family's domain");
            const auto fx = T.family->column(it->second);
            BitWords bits = sr.zero();
            for (std::size_t g = 0; g < T.colorings.size(); ++g) {
                const std::size_t base = g * Fs;
                if (base + Fs <= lo || base >= hi) continue;
                const std::uint8_t want = T.colorings[g][i];
                for (std::size_t f = 0; f < Fs; ++f) {
                    const std::size_t term = base + f;
                    if (term >= lo && term < hi && fx[f] == want) BitVectorSemiring::set(bits, term - lo);
                }
            }
            if (sr.is_zero(bits)) continue;
            t.keys.push_back(x);
            t.values.push_back(std::move(bits));
            ++t.n;
        }
        out.push_back(std::move(t));
    }
    return out;
}

// NAE atoms whose edge belongs to T.G are tensorized; the rest are checked directly.
inline TensorRun eval_with_tensor(const QueryIR& d, const Database& db, const TensorDecomposition& T,
                                  const std::unordered_map<Value, std::size_t>& index, const VertexOrdering& sigma,
                                  std::size_t bit_budget = std::size_t{1} << 16, bool batched = true) {
    std::vector<std::vector<int>> gedges = T.G.edges;
    std::vector<Predicate> direct;
    std::vector<char> used(gedges.size(), 0);
    for (const auto& e : d.nae_atoms) {
        std::vector<int> s(e.begin(), e.end());
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        // Repeated atoms may map to repeated edges; take an unused copy first.
        std::size_t hit = gedges.size();
        for (std::size_t k = 0; k < gedges.size(); ++k)
            if (gedges[k] == s && (hit == gedges.size() || (used[hit] && !used[k]))) hit = k;
        if (hit < gedges.size()) used[hit] = 1;
        else direct.push_back(nae_predicate(e));
    }
    if (std::find(used.begin(), used.end(), 0) != used.end())
        throw PlanError("decomposition has an NAE edge that the disjunct lacks");
    TensorRun out;
    const std::size_t r = T.rank();
    if (r == 0) return out;
    const std::size_t width = batched ? std::max<std::size_t>(1, bit_budget) : 1;
    for (std::size_t lo = 0; lo < r; lo += width) {
        const std::size_t hi = std::min(r, lo + width);
        ++out.chunks;
        const BitVectorSemiring sr(hi - lo);
        auto tables = atom_tables<BitWords>(d, db);
        for (auto& u : unary_tables(T, d, db, index, lo, hi)) tables.push_back(std::move(u));
        const auto res = run_elimination(std::move(tables), direct, sigma, d.free_vars, sr);
        for (std::size_t k = 0; k < res.n; ++k)
            if (!sr.is_zero(res.values[k])) out.tuples.insert(Tuple(res.key(k), res.key(k) + res.arity()));
    }
    return out;
}

// ---------------------------------------------------------------- colors-as-join evaluation

struct ColorsJoinRun {
    std::set<Tuple> tuples;
    std::size_t chunks = 0;
    ColorCost cost;
    VertexOrdering pi;
};

inline ColorsJoinRun eval_colors_join(const QueryIR& d, const Database& db, const ColorSetup& s, const EngineConfig& cfg) {
    ColorsJoinRun out;
    const ColorJoinIR cj = colors_as_join(d, s.c, s.family, s.colored, false);
    std::vector<std::vector<Var>> direct_edges = cj.query.nae_atoms;
    Hypergraph H_plan = plan_hypergraph(cj.query, direct_edges);
    const auto [sigma, w] = plan_ordering(H_plan, d.free_vars, cfg.ordering_cap);
    const TreeDecomposition td = ordering_to_tree_decomposition(H_plan, sigma, d.free_vars);
    const TreeDecomposition amended = color_amendment(td, cj.color_edges, cj.input_of);
    out.pi = td_to_ordering(amended, cj, d.free_vars);
    out.cost = io_color_cost(cj, out.pi);
    const std::size_t Fs = s.family->size();
    const std::size_t width = std::max<std::size_t>(1, cfg.bit_budget);
    for (std::size_t lo = 0; lo < Fs; lo += width) {
        const std::size_t hi = std::min(Fs, lo + width);
        ++out.chunks;
        const BitVectorSemiring sr(hi - lo);
        auto tables = atom_tables<BitWords>(cj.query, db);
        for (Var x : cj.input_vars) {
            Table<BitWords> t;
            t.schema = {x, cj.color_of.at(x)};
            for (Value v : active_domain(db, d, x)) {
                const auto fx = s.family->column(s.index.at(v));
                for (std::size_t k = 0; k < s.c; ++k) {
                    BitWords bits = sr.zero();
                    for (std::size_t f = lo; f < hi; ++f)
                        if (fx[f] == k) BitVectorSemiring::set(bits, f - lo);
                    if (sr.is_zero(bits)) continue;
                    t.keys.push_back(v);
                    t.keys.push_back(static_cast<Value>(k));
                    t.values.push_back(std::move(bits));
                    ++t.n;
                }
            }
            tables.push_back(std::move(t));
        }
        std::vector<Predicate> preds;
        for (const auto& e : cj.color_edges) preds.push_back(nae_predicate(e));
        for (const auto& e : direct_edges) preds.push_back(nae_predicate(e));
        StepHook<BitVectorSemiring> hook;
        if (cfg.symmetric_prune) {
            hook = [&](Table<BitWords>& produced, Var, const std::vector<Table<BitWords>>& others, const std::vector<Predicate>& rest) {
                std::vector<Var> K, L, hard;
                for (Var v : produced.schema)
                    if (cj.is_color(v)) K.push_back(v);
                if (K.empty()) return;
                std::set<Var> live;
                for (const auto& t : others) live.insert(t.schema.begin(), t.schema.end());
                for (const auto& p : rest) live.insert(p.vars.begin(), p.vars.end());
                for (Var v : live)
                    if (cj.is_color(v) && std::find(K.begin(), K.end(), v) == K.end()) L.push_back(v);
                std::set<Var> in_tables;
                for (const auto& t : others) in_tables.insert(t.schema.begin(), t.schema.end());
                for (Var v : K)
                    if (in_tables.count(v)) hard.push_back(v);
                std::vector<std::vector<Var>> A;
                for (const auto& p : rest) {
                    const bool all_color = std::all_of(p.vars.begin(), p.vars.end(), [&](Var v) { return cj.is_color(v); });
                    if (all_color) A.push_back(p.vars);
                    else
                        for (Var v : p.vars)
                            if (std::find(K.begin(), K.end(), v) != K.end()) hard.push_back(v);
                }
                const auto pruned = symmetric_prune(factor_from_table(produced, sr), K, L, A, sr, hard);
                produced = table_from_factor(pruned);
            };
        }
        const auto res = run_elimination(std::move(tables), std::move(preds), out.pi, d.free_vars, sr, hook);
        for (std::size_t k = 0; k < res.n; ++k)
            if (!sr.is_zero(res.values[k])) out.tuples.insert(Tuple(res.key(k), res.key(k) + res.arity()));
    }
    return out;
}

// ---------------------------------------------------------------- disjunct simplification

namespace detail {

// Merges Y into Y' when M(Y, X) and M'(Y', X) have identical contents and the relation is a
// function of its second column; false when some NAE atom collapses to a single variable.
inline bool merge_pendants(QueryIR& q, const Database& db) {
    const std::set<Var> free(q.free_vars.begin(), q.free_vars.end());
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t a = 0; a < q.positive_atoms.size() && !changed; ++a)
            for (std::size_t b = a + 1; b < q.positive_atoms.size() && !changed; ++b) {
                const Atom& A = q.positive_atoms[a];
                const Atom& B = q.positive_atoms[b];
                if (A.vars.size() != 2 || B.vars.size() != 2 || A.vars[1] != B.vars[1] || A.vars[0] == B.vars[0]) continue;
                if (A.vars[0] == A.vars[1] || B.vars[0] == B.vars[1] || free.count(B.vars[0])) continue;
                const Relation& ra = db.relation(A.relation);
                const Relation& rb = db.relation(B.relation);
                if (ra.tuples != rb.tuples) continue;
                std::set<Value> seen;
                bool functional = true;
                for (const Tuple& t : ra.tuples) functional = functional && seen.insert(t[1]).second;
                if (!functional) continue;
                const Var from = B.vars[0], to = A.vars[0];
                auto sub = [&](Var& v) { if (v == from) v = to; };
                for (Atom& at : q.positive_atoms) for (Var& v : at.vars) sub(v);
                for (auto& e : q.nae_atoms) for (Var& v : e) sub(v);
                for (auto& [v, r] : q.singleton_filters) sub(v);
                q.positive_atoms.erase(q.positive_atoms.begin() + static_cast<std::ptrdiff_t>(b));
                changed = true;
            }
    }
    std::vector<Atom> atoms;
    for (const Atom& a : q.positive_atoms)
        if (std::find(atoms.begin(), atoms.end(), a) == atoms.end()) atoms.push_back(a);
    q.positive_atoms = std::move(atoms);
    std::vector<std::vector<Var>> nae;
    std::set<std::vector<Var>> seen;
    for (const auto& e : q.nae_atoms) {
        std::vector<Var> s = e;
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        if (s.size() < 2) return false;
        if (seen.insert(s).second) nae.push_back(e);
    }
    q.nae_atoms = std::move(nae);
    return true;
}

inline std::vector<Value> intersect(const std::vector<Value>& a, const std::vector<Value>& b) {
    std::vector<Value> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

// extras[slot][branch]: atoms added to a branch so that the branches of a slot are mutually exclusive.
using BranchExtras = std::vector<std::vector<std::vector<Atom>>>;

// W branch t additionally asserts X_s ∈ π_s M for every earlier W branch s; the pivot branch already
// implies these through its pendant atoms. Projection relations are registered in db.
inline BranchExtras exclusivity_atoms(const UntangledQuery& u, Database& db, bool enabled) {
    BranchExtras out;
    for (const UntangleSlot& slot : u.slots) {
        out.emplace_back(slot.branches.size());
        if (!enabled || slot.branches.size() < 2) continue;
        const Branch& pivot = slot.branches.back();
        std::vector<Atom> member;
        for (std::size_t t = 0; t + 1 < slot.branches.size(); ++t) {
            const Atom& w = slot.branches[t].atoms.at(0);
            const Atom& m = pivot.atoms.at(t);
            const std::string name = "__P" + w.relation.substr(3);
            if (!db.has_relation(name)) {
                std::vector<Tuple> rows;
                for (Value x : db.relation(m.relation).column(1)) rows.push_back({x});
                db.add_relation(Relation::stored(name, 1, std::move(rows)), {db.domain_of(m.relation, 1)});
            }
            out.back()[t] = member;
            member.push_back(Atom{name, {w.vars.at(0)}});
        }
    }
    return out;
}

inline QueryIR partial_disjunct(const UntangledQuery& u, const BranchExtras& extras, const std::vector<std::size_t>& prefix) {
    QueryIR q = u.base;
    for (std::size_t s = 0; s < prefix.size(); ++s) {
        const Branch& b = u.slots[s].branches[prefix[s]];
        q.positive_atoms.insert(q.positive_atoms.end(), b.atoms.begin(), b.atoms.end());
        const auto& ex = extras[s][prefix[s]];
        q.positive_atoms.insert(q.positive_atoms.end(), ex.begin(), ex.end());
        q.nae_atoms.insert(q.nae_atoms.end(), b.nae.begin(), b.nae.end());
    }
    return q;
}

// Whether a negation-free query with NAE atoms has any satisfying assignment.
inline bool satisfiable(QueryIR q, const Database& db) {
    q.free_vars.clear();
    std::vector<Predicate> preds;
    for (const auto& e : q.nae_atoms) preds.push_back(nae_predicate(e));
    const Hypergraph H = plan_hypergraph(q, q.nae_atoms);
    const VertexOrdering sigma = min_fill_ordering(H, {});
    BooleanSemiring sr;
    return run_elimination(atom_tables<bool>(q, db), std::move(preds), sigma, {}, sr).n > 0;
}

// Per-variable candidate sets from unary projections; a prefix of choices is dropped when some set empties.
class UnaryPruner {
public:
    UnaryPruner(const UntangledQuery& u, const Database& db, const BranchExtras& extras) : u_(u), db_(db), extras_(extras) {
        std::map<Var, std::vector<Value>> base;
        for (const Atom& a : u.base.positive_atoms) restrict(base, a);
        for (const auto& [v, rel] : u.base.singleton_filters) {
            std::vector<Value> col;
            for (const Tuple& t : db.relation(rel).tuples) col.push_back(t[0]);
            narrow(base, v, col);
        }
        for (const auto& [v, d] : u.base.domain_decls) {
            const std::size_t c = static_cast<std::size_t>(resolve_dom_column(db, d));
            std::set<Value> s;
            for (const Tuple& t : db.relation(d.relation).tuples) s.insert(t[c]);
            narrow(base, v, std::vector<Value>(s.begin(), s.end()));
        }
        stack_.push_back(std::move(base));
        base_ok_ = ok(stack_.back());
    }

    bool base_ok() const { return base_ok_; }

    bool keep(const std::vector<std::size_t>& prefix) {
        stack_.resize(prefix.size());
        auto state = stack_.back();
        const Branch& br = u_.slots[prefix.size() - 1].branches[prefix.back()];
        for (const Atom& a : br.atoms) restrict(state, a);
        for (const Atom& a : extras_[prefix.size() - 1][prefix.back()]) restrict(state, a);
        const bool good = ok(state);
        stack_.push_back(std::move(state));
        return good;
    }

private:
    const UntangledQuery& u_;
    const Database& db_;
    const BranchExtras& extras_;
    std::vector<std::map<Var, std::vector<Value>>> stack_;
    std::map<std::pair<std::string, std::size_t>, std::vector<Value>> columns_;
    bool base_ok_ = true;

    static bool ok(const std::map<Var, std::vector<Value>>& s) {
        for (const auto& [v, c] : s)
            if (c.empty()) return false;
        return true;
    }
    static void narrow(std::map<Var, std::vector<Value>>& s, Var v, const std::vector<Value>& col) {
        auto it = s.find(v);
        if (it == s.end()) s[v] = col;
        else it->second = intersect(it->second, col);
    }
    const std::vector<Value>& column(const std::string& rel, std::size_t c) {
        auto key = std::make_pair(rel, c);
        auto it = columns_.find(key);
        if (it != columns_.end()) return it->second;
        const auto s = db_.relation(rel).column(c);
        return columns_.emplace(key, std::vector<Value>(s.begin(), s.end())).first->second;
    }
    void restrict(std::map<Var, std::vector<Value>>& s, const Atom& a) {
        for (std::size_t i = 0; i < a.vars.size(); ++i) narrow(s, a.vars[i], column(a.relation, i));
    }
};

inline std::string choice_label(const std::vector<std::size_t>& c) {
    std::string s;
    for (std::size_t x : c) s += std::to_string(x);
    return s.empty() ? "-" : s;
}

}  // namespace detail

// ---------------------------------------------------------------- the pipeline

// Evaluates one negation-free disjunct; returns its answer set and fills the report.
inline std::set<Tuple> evaluate_disjunct(const QueryIR& d, const Database& db, const EngineConfig& cfg, FamilyCache& cache,
                                         DisjunctReport& rep) {
    const auto t0 = std::chrono::steady_clock::now();
    std::set<Tuple> out;
    const Hypergraph H_atoms = atom_hypergraph(d);
    if (d.nae_atoms.empty()) {
        const auto [sigma, w] = plan_ordering(H_atoms, d.free_vars, cfg.ordering_cap);
        rep.strategy = "plain";
        rep.fhtw = w.value;
        rep.fhtw_optimal = w.optimal;
        rep.rank = 1;
        rep.family_size = 1;
        BooleanSemiring sr;
        out = table_tuples(run_elimination(atom_tables<bool>(d, db), {}, sigma, d.free_vars, sr));
    } else {
        const bool tensor = cfg.strategy == Strategy::tensor;
        ColorSetup s = prepare_coloring(d, db, cfg, cache, tensor);
        rep.colored_nae = s.colored.size();
        rep.direct_nae = d.nae_atoms.size() - s.colored.size();
        rep.note = s.note;
        if (s.colored.empty()) {
            std::vector<Predicate> preds;
            for (const auto& e : d.nae_atoms) preds.push_back(nae_predicate(e));
            const Hypergraph H_plan = plan_hypergraph(d, d.nae_atoms);
            const auto [sigma, w0] = plan_ordering(H_plan, d.free_vars, cfg.ordering_cap);
            const WidthEstimate w = atom_width(H_atoms, H_plan, sigma);
            rep.strategy = "direct-nae";
            rep.fhtw = w.value;
            rep.fhtw_optimal = false;
            rep.rank = 1;
            BooleanSemiring sr;
            out = table_tuples(run_elimination(atom_tables<bool>(d, db), std::move(preds), sigma, d.free_vars, sr));
        } else {
            rep.U = s.G.vertices.size();
            rep.N = s.universe.size();
            rep.c = s.c;
            rep.theta = s.theta;
            rep.family_size = s.family->size();
            rep.provenance = s.family->provenance;
            rep.certification = s.family->certification;
            if (!s.c_exact) rep.note += (rep.note.empty() ? "" : "; ") + std::string("c fallback |U|");
            if (tensor) {
                std::vector<std::vector<Var>> direct;
                for (std::size_t i = s.colored.size(); i < d.nae_atoms.size(); ++i) direct.push_back(d.nae_atoms[i]);
                const Hypergraph H_plan = plan_hypergraph(d, direct);
                const auto [sigma, w0] = plan_ordering(H_plan, d.free_vars, cfg.ordering_cap);
                const WidthEstimate w = direct.empty() ? w0 : atom_width(H_atoms, H_plan, sigma);
                rep.fhtw = w.value;
                rep.fhtw_optimal = direct.empty() && w0.optimal;
                const TensorDecomposition T = tensor_decomposition(s.G, s.c, s.family, cfg.color);
                rep.rank = T.rank();
                rep.strategy = "tensor";
                const TensorRun run = eval_with_tensor(d, db, T, s.index, sigma, cfg.bit_budget);
                rep.chunks = run.chunks;
                out = run.tuples;
            } else {
                const ColorsJoinRun run = eval_colors_join(d, db, s, cfg);
                rep.strategy = "colors-join";
                rep.rank = s.family->size();
                rep.chunks = run.chunks;
                rep.fhtw = run.cost.n_exponent;
                rep.fhtw_optimal = false;
                out = run.tuples;
            }
        }
    }
    rep.tuples = out.size();
    rep.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

inline Answer answer_query(const QueryIR& input, const Database& db_in, const EngineConfig& cfg = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    const QueryIR ir = validate_query(input, db_in);
    Answer ans;
    ans.free = ir.free_vars;
    RunReport& rep = ans.report;
    rep.strategy = to_string(cfg.strategy);
    rep.family_mode = to_string(cfg.family_mode);
    rep.seed = cfg.seed;
    auto finish = [&]() {
        rep.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        return ans;
    };
    if (cfg.strategy == Strategy::naive) {
        ans.tuples = join_then_filter(ir, db_in, cfg.naive_budget);
        return finish();
    }
    Database db = db_in;
    const UntangledQuery u = untangle_query(ir, db, false);
    rep.B = u.B;
    rep.bound = u.bound;
    rep.matchings = u.matchings;
    rep.degrees = u.degrees;
    if (u.B == 0) return finish();
    FamilyCache cache;
    const detail::BranchExtras extras = detail::exclusivity_atoms(u, db, cfg.exclusive_branches);
    detail::UnaryPruner pruner(u, db, extras);
    if (cfg.prune_disjuncts && !pruner.base_ok()) {
        rep.pruned = 1;
        return finish();
    }
    const bool boolean = ir.free_vars.empty();
    std::function<bool(const std::vector<std::size_t>&)> keep;
    if (cfg.prune_disjuncts)
        keep = [&](const std::vector<std::size_t>& prefix) {
            bool k = pruner.keep(prefix);
            if (k && prefix.size() < u.slots.size()) {
                QueryIR part = detail::partial_disjunct(u, extras, prefix);
                k = detail::merge_pendants(part, db) && detail::satisfiable(std::move(part), db);
            }
            if (!k) ++rep.pruned;
            return k;
        };
    u.enumerate(
        [&](const std::vector<std::size_t>& choice) {
            ++rep.enumerated;
            if (rep.enumerated > cfg.disjunct_cap)
                throw EvaluationBudgetExceeded("more than " + std::to_string(cfg.disjunct_cap) + " disjuncts");
            QueryIR d = detail::partial_disjunct(u, extras, choice);
            if (cfg.merge_pendants && !detail::merge_pendants(d, db)) {
                ++rep.empty_after_merge;
                return true;
            }
            DisjunctReport dr;
            dr.choice = detail::choice_label(choice);
            const std::set<Tuple> part = evaluate_disjunct(d, db, cfg, cache, dr);
            ++rep.evaluated;
            rep.work += dr.rank;
            ans.tuples.insert(part.begin(), part.end());
            rep.disjuncts.push_back(std::move(dr));
            if (boolean && cfg.early_exit && !ans.tuples.empty()) {
                rep.early_exit = true;
                return false;
            }
            return true;
        },
        keep);
    return finish();
}

}  // namespace negcq
