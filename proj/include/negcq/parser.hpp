#pragma once

#include "negcq/core.hpp"

#include <cctype>
#include <functional>
#include <numeric>
#include <optional>

namespace negcq {

struct Atom {
    std::string relation;
    std::vector<Var> vars;
    bool operator==(const Atom&) const = default;
};

// Column is 1-based when numeric; column_name is used when the source named a header.
struct DomSource {
    std::string relation;
    int column = 0;
    std::string column_name;
    bool operator==(const DomSource&) const = default;
};

struct QueryIR {
    std::string head_name = "Q";
    std::vector<std::string> var_names;
    std::vector<Var> free_vars;
    std::vector<Atom> positive_atoms;
    std::vector<Atom> negated_atoms;
    std::vector<std::vector<Var>> nae_atoms;
    std::vector<std::pair<Var, std::string>> singleton_filters;  // var must lie in a unary relation
    std::map<Var, DomSource> domain_decls;

    bool operator==(const QueryIR&) const = default;

    std::optional<Var> find_var(const std::string& name) const {
        for (std::size_t i = 0; i < var_names.size(); ++i)
            if (var_names[i] == name) return static_cast<Var>(i);
        return std::nullopt;
    }
    Var var(const std::string& name) {
        if (auto v = find_var(name)) return *v;
        var_names.push_back(name);
        return static_cast<Var>(var_names.size() - 1);
    }
    Var fresh(const std::string& base) {
        std::string name = base;
        for (int i = 1; find_var(name); ++i) name = base + "_" + std::to_string(i);
        return var(name);
    }
    const std::string& name(Var v) const { return var_names.at(static_cast<std::size_t>(v)); }
    std::size_t num_vars() const { return var_names.size(); }

    // Variables that are range-restricted by a positive atom, a filter or a dom declaration.
    std::set<Var> restricted_vars() const {
        std::set<Var> out;
        for (const Atom& a : positive_atoms) out.insert(a.vars.begin(), a.vars.end());
        for (const auto& [v, r] : singleton_filters) out.insert(v);
        for (const auto& [v, d] : domain_decls) out.insert(v);
        return out;
    }
    std::set<Var> used_vars() const {
        std::set<Var> out = restricted_vars();
        out.insert(free_vars.begin(), free_vars.end());
        for (const Atom& a : negated_atoms) out.insert(a.vars.begin(), a.vars.end());
        for (const auto& e : nae_atoms) out.insert(e.begin(), e.end());
        return out;
    }
};

// ---------------------------------------------------------------- lexer

namespace detail {

enum class Tok { ident, number, lparen, rparen, comma, dot, turnstile, bang, neq, end };

struct Token {
    Tok kind;
    std::string text;
    int line, col;
};

inline std::vector<Token> lex(const std::string& s) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n && i < s.size(); ++k, ++i) {
            if (s[i] == '\n') { ++line; col = 1; }
            else ++col;
        }
    };
    while (i < s.size()) {
        const char ch = s[i];
        if (std::isspace(static_cast<unsigned char>(ch))) { advance(1); continue; }
        if (ch == '%' || ch == '#' || (ch == '/' && i + 1 < s.size() && s[i + 1] == '/')) {
            while (i < s.size() && s[i] != '\n') advance(1);
            continue;
        }
        const int l = line, c = col;
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            std::size_t j = i;
            while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
            out.push_back({Tok::ident, s.substr(i, j - i), l, c});
            advance(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(ch))) {
            std::size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            out.push_back({Tok::number, s.substr(i, j - i), l, c});
            advance(j - i);
        } else if (ch == ':' && i + 1 < s.size() && s[i + 1] == '-') {
            out.push_back({Tok::turnstile, ":-", l, c});
            advance(2);
        } else if (ch == '!' && i + 1 < s.size() && s[i + 1] == '=') {
            out.push_back({Tok::neq, "!=", l, c});
            advance(2);
        } else {
            Tok k;
            switch (ch) {
                case '(': k = Tok::lparen; break;
                case ')': k = Tok::rparen; break;
                case ',': k = Tok::comma; break;
                case '.': k = Tok::dot; break;
                case '!': k = Tok::bang; break;
                default:
                    throw ParseError("line " + std::to_string(l) + " col " + std::to_string(c) +
                                     ": unexpected character '" + std::string(1, ch) + "'");
            }
            out.push_back({k, std::string(1, ch), l, c});
            advance(1);
        }
    }
    out.push_back({Tok::end, "", line, col});
    return out;
}

class Parser {
public:
    explicit Parser(const std::string& text) : toks_(lex(text)) {}

    QueryIR run() {
        QueryIR ir;
        ir.head_name = expect(Tok::ident, "head relation name").text;
        for (const Token& v : var_list()) {
            const Var x = ir.var(v.text);
            if (std::find(ir.free_vars.begin(), ir.free_vars.end(), x) != ir.free_vars.end())
                fail(v, "repeated head variable " + v.text);
            ir.free_vars.push_back(x);
        }
        expect(Tok::turnstile, "':-'");
        do body_item(ir);
        while (accept(Tok::comma));
        accept(Tok::dot);
        if (peek().kind != Tok::end) fail(peek(), "unexpected '" + peek().text + "' after query");
        return ir;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;

    const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    [[noreturn]] static void fail(const Token& t, const std::string& msg) {
        throw ParseError("line " + std::to_string(t.line) + " col " + std::to_string(t.col) + ": " + msg);
    }
    const Token& expect(Tok k, const std::string& what) {
        if (peek().kind != k) fail(peek(), "expected " + what + ", found '" + peek().text + "'");
        return toks_[pos_++];
    }
    bool accept(Tok k) {
        if (peek().kind != k) return false;
        ++pos_;
        return true;
    }
    std::vector<Token> var_list() {
        std::vector<Token> out;
        expect(Tok::lparen, "'('");
        if (accept(Tok::rparen)) return out;
        do out.push_back(expect(Tok::ident, "variable"));
        while (accept(Tok::comma));
        expect(Tok::rparen, "')'");
        return out;
    }
    std::vector<Var> vars_of(QueryIR& ir, const std::vector<Token>& ts) {
        std::vector<Var> out;
        for (const Token& t : ts) out.push_back(ir.var(t.text));
        return out;
    }
    void body_item(QueryIR& ir) {
        if (accept(Tok::bang)) {
            const Token& name = expect(Tok::ident, "negated relation name");
            ir.negated_atoms.push_back({name.text, vars_of(ir, var_list())});
            return;
        }
        const Token& first = expect(Tok::ident, "atom, disequality or declaration");
        if (accept(Tok::neq)) {
            const Token& second = expect(Tok::ident, "variable after '!='");
            ir.nae_atoms.push_back({ir.var(first.text), ir.var(second.text)});
            return;
        }
        if (first.text == "NAE" && peek().kind == Tok::lparen) {
            auto vs = var_list();
            if (vs.size() < 2) fail(first, "NAE needs at least two variables");
            ir.nae_atoms.push_back(vars_of(ir, vs));
            return;
        }
        if (first.text == "dom" && peek().kind == Tok::lparen) {
            expect(Tok::lparen, "'('");
            const Var v = ir.var(expect(Tok::ident, "variable").text);
            expect(Tok::comma, "','");
            DomSource d;
            d.relation = expect(Tok::ident, "relation name").text;
            expect(Tok::dot, "'.'");
            if (peek().kind == Tok::number) {
                const Token& n = toks_[pos_++];
                d.column = std::stoi(n.text);
                if (d.column < 1) fail(n, "column index is 1-based");
            } else d.column_name = expect(Tok::ident, "column").text;
            expect(Tok::rparen, "')'");
            if (ir.domain_decls.count(v)) fail(first, "duplicate dom declaration for " + ir.name(v));
            ir.domain_decls[v] = d;
            return;
        }
        if (first.text == "filter" && peek().kind == Tok::lparen) {
            expect(Tok::lparen, "'('");
            const Var v = ir.var(expect(Tok::ident, "variable").text);
            expect(Tok::comma, "','");
            ir.singleton_filters.emplace_back(v, expect(Tok::ident, "unary relation").text);
            expect(Tok::rparen, "')'");
            return;
        }
        ir.positive_atoms.push_back({first.text, vars_of(ir, var_list())});
    }
};

// Renumber variables by first occurrence in print order, so print/parse is a fixed point.
inline QueryIR canonicalize(const QueryIR& in) {
    std::vector<Var> order;
    std::vector<int> seen(in.num_vars(), 0);
    auto touch = [&](Var v) {
        if (!seen[static_cast<std::size_t>(v)]) { seen[static_cast<std::size_t>(v)] = 1; order.push_back(v); }
    };
    for (Var v : in.free_vars) touch(v);
    for (const Atom& a : in.positive_atoms) for (Var v : a.vars) touch(v);
    for (const Atom& a : in.negated_atoms) for (Var v : a.vars) touch(v);
    for (const auto& e : in.nae_atoms) for (Var v : e) touch(v);
    for (const auto& [v, r] : in.singleton_filters) touch(v);
    for (const auto& [v, d] : in.domain_decls) touch(v);
    std::vector<Var> remap(in.num_vars(), -1);
    QueryIR out;
    out.head_name = in.head_name;
    for (Var v : order) {
        remap[static_cast<std::size_t>(v)] = static_cast<Var>(out.var_names.size());
        out.var_names.push_back(in.name(v));
    }
    auto m = [&](Var v) { return remap[static_cast<std::size_t>(v)]; };
    for (Var v : in.free_vars) out.free_vars.push_back(m(v));
    for (const Atom& a : in.positive_atoms) {
        Atom b{a.relation, {}};
        for (Var v : a.vars) b.vars.push_back(m(v));
        out.positive_atoms.push_back(b);
    }
    for (const Atom& a : in.negated_atoms) {
        Atom b{a.relation, {}};
        for (Var v : a.vars) b.vars.push_back(m(v));
        out.negated_atoms.push_back(b);
    }
    for (const auto& e : in.nae_atoms) {
        std::vector<Var> f;
        for (Var v : e) f.push_back(m(v));
        out.nae_atoms.push_back(f);
    }
    for (const auto& [v, r] : in.singleton_filters) out.singleton_filters.emplace_back(m(v), r);
    for (const auto& [v, d] : in.domain_decls) out.domain_decls[m(v)] = d;
    return out;
}

}  // namespace detail

inline QueryIR parse_query(const std::string& text) {
    QueryIR ir = detail::Parser(text).run();
    const std::set<Var> body = [&] {
        QueryIR tmp = ir;
        tmp.free_vars.clear();
        return tmp.used_vars();
    }();
    for (Var v : ir.free_vars)
        if (!body.count(v)) throw UnsafeHead("head variable " + ir.name(v) + " does not occur in the body");
    return detail::canonicalize(ir);
}

inline std::string print_query(const QueryIR& ir) {
    std::ostringstream out;
    auto vars = [&](const std::vector<Var>& vs) {
        std::string s = "(";
        for (std::size_t i = 0; i < vs.size(); ++i) s += (i ? "," : "") + ir.name(vs[i]);
        return s + ")";
    };
    out << ir.head_name << vars(ir.free_vars) << " :- ";
    std::vector<std::string> items;
    for (const Atom& a : ir.positive_atoms) items.push_back(a.relation + vars(a.vars));
    for (const Atom& a : ir.negated_atoms) items.push_back("!" + a.relation + vars(a.vars));
    for (const auto& e : ir.nae_atoms) {
        if (e.size() == 2) items.push_back(ir.name(e[0]) + " != " + ir.name(e[1]));
        else items.push_back("NAE" + vars(e));
    }
    for (const auto& [v, r] : ir.singleton_filters) items.push_back("filter(" + ir.name(v) + ", " + r + ")");
    for (const auto& [v, d] : ir.domain_decls)
        items.push_back("dom(" + ir.name(v) + ", " + d.relation + "." +
                        (d.column_name.empty() ? std::to_string(d.column) : d.column_name) + ")");
    for (std::size_t i = 0; i < items.size(); ++i) out << (i ? ", " : "") << items[i];
    out << ".";
    return out.str();
}

// ---------------------------------------------------------------- binding against a database

// Relation over the atom's distinct variables; repeated variables select equal columns.
inline Relation bind_atom(const Database& db, const Atom& a) {
    const Relation& r = db.relation(a.relation);
    if (r.arity() != a.vars.size())
        throw ArityMismatch(a.relation + " has arity " + std::to_string(r.arity()) + ", used with " +
                            std::to_string(a.vars.size()) + " arguments");
    std::vector<Var> schema;
    std::vector<std::size_t> first;
    for (std::size_t i = 0; i < a.vars.size(); ++i) {
        auto it = std::find(schema.begin(), schema.end(), a.vars[i]);
        if (it == schema.end()) { schema.push_back(a.vars[i]); first.push_back(i); }
    }
    std::vector<Tuple> rows;
    rows.reserve(r.size());
    for (const Tuple& t : r.tuples) {
        bool ok = true;
        for (std::size_t i = 0; i < a.vars.size() && ok; ++i) {
            const std::size_t j = static_cast<std::size_t>(std::find(a.vars.begin(), a.vars.end(), a.vars[i]) - a.vars.begin());
            ok = t[i] == t[j];
        }
        if (!ok) continue;
        Tuple u;
        for (std::size_t i : first) u.push_back(t[i]);
        rows.push_back(std::move(u));
    }
    return Relation(a.relation, schema, std::move(rows));
}

inline int resolve_dom_column(const Database& db, const DomSource& d) {
    const Relation& r = db.relation(d.relation);
    if (!d.column_name.empty()) {
        const auto& names = db.column_names.at(d.relation);
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == d.column_name) return static_cast<int>(i);
        throw ArityMismatch("relation " + d.relation + " has no column " + d.column_name);
    }
    if (d.column < 1 || static_cast<std::size_t>(d.column) > r.arity())
        throw ArityMismatch("relation " + d.relation + " has no column " + std::to_string(d.column));
    return d.column - 1;
}

inline std::set<Value> active_domain(const Database& db, const QueryIR& ir, Var var) {
    std::set<Value> out;
    bool found = false;
    auto scan = [&](const std::vector<Atom>& atoms) {
        for (const Atom& a : atoms) {
            if (std::find(a.vars.begin(), a.vars.end(), var) == a.vars.end()) continue;
            found = true;
            const Relation r = bind_atom(db, a);
            const std::size_t col = static_cast<std::size_t>(std::find(r.schema.begin(), r.schema.end(), var) - r.schema.begin());
            for (const Tuple& t : r.tuples) out.insert(t[col]);
        }
    };
    scan(ir.positive_atoms);
    for (const auto& [v, rel] : ir.singleton_filters)
        if (v == var) {
            found = true;
            for (const Tuple& t : db.relation(rel).tuples) out.insert(t[0]);
        }
    if (auto it = ir.domain_decls.find(var); it != ir.domain_decls.end()) {
        found = true;
        const std::size_t col = static_cast<std::size_t>(resolve_dom_column(db, it->second));
        for (const Tuple& t : db.relation(it->second.relation).tuples) out.insert(t[col]);
    }
    if (!found) scan(ir.negated_atoms);
    if (!found) throw UnknownVariable(static_cast<std::size_t>(var) < ir.num_vars() ? ir.name(var) : std::to_string(var));
    return out;
}

inline QueryIR validate_query(const QueryIR& ir, const Database& db) {
    auto check = [&](const Atom& a) {
        const Relation& r = db.relation(a.relation);
        if (r.arity() != a.vars.size())
            throw ArityMismatch(a.relation + " has arity " + std::to_string(r.arity()) + ", used with " +
                                std::to_string(a.vars.size()) + " arguments");
    };
    for (const Atom& a : ir.positive_atoms) check(a);
    for (const Atom& a : ir.negated_atoms) check(a);
    for (const auto& [v, rel] : ir.singleton_filters)
        if (db.relation(rel).arity() != 1) throw ArityMismatch("filter relation " + rel + " is not unary");
    for (const auto& e : ir.nae_atoms)
        if (e.size() < 2) throw ParseError("NAE atom with fewer than two variables");
    QueryIR out = ir;
    for (auto& [v, d] : out.domain_decls) {
        const int col = resolve_dom_column(db, d);
        d.column = col + 1;
        d.column_name.clear();
    }
    const std::set<Var> restricted = out.restricted_vars();
    for (Var v : out.used_vars())
        if (!restricted.count(v))
            throw RangeRestrictionError("variable " + out.name(v) +
                                        " occurs in no positive atom and has no dom declaration");
    return out;
}

// Columns that the query compares must share one dictionary; returns the grouping for encode_database.
inline DomainMap bind_domains(const QueryIR& ir, const std::vector<RawTable>& tables) {
    std::map<std::pair<std::string, int>, int> id;
    std::vector<int> parent;
    auto node = [&](const std::string& t, int c) {
        auto [it, fresh] = id.emplace(std::make_pair(t, c), static_cast<int>(parent.size()));
        if (fresh) parent.push_back(it->second);
        return it->second;
    };
    for (const RawTable& t : tables)
        for (std::size_t c = 0; c < t.columns.size(); ++c) node(t.name, static_cast<int>(c));
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
    std::map<Var, int> anchor;
    auto bind = [&](Var v, int n) {
        auto [it, fresh] = anchor.emplace(v, n);
        if (!fresh) unite(it->second, n);
    };
    auto column_index = [&](const std::string& rel, const DomSource& d) {
        if (d.column_name.empty()) return d.column - 1;
        for (const RawTable& t : tables)
            if (t.name == rel)
                for (std::size_t c = 0; c < t.columns.size(); ++c)
                    if (t.columns[c] == d.column_name) return static_cast<int>(c);
        throw ArityMismatch("relation " + rel + " has no column " + d.column_name);
    };
    for (const auto* atoms : {&ir.positive_atoms, &ir.negated_atoms})
        for (const Atom& a : *atoms)
            for (std::size_t i = 0; i < a.vars.size(); ++i) bind(a.vars[i], node(a.relation, static_cast<int>(i)));
    for (const auto& [v, rel] : ir.singleton_filters) bind(v, node(rel, 0));
    for (const auto& [v, d] : ir.domain_decls) bind(v, node(d.relation, column_index(d.relation, d)));
    for (const auto& e : ir.nae_atoms)
        for (std::size_t i = 1; i < e.size(); ++i)
            if (anchor.count(e[0]) && anchor.count(e[i])) unite(anchor[e[0]], anchor[e[i]]);
    DomainMap out;
    std::map<int, std::string> label;
    for (const auto& [key, n] : id) {
        const int root = find(n);
        if (!label.count(root)) label[root] = key.first + "." + std::to_string(key.second);
        out[key] = label[root];
    }
    return out;
}

}  // namespace negcq
