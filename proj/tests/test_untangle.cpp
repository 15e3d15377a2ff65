#include "negcq/engine.hpp"
#include "negcq/untangle.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace negcq;

namespace {

Relation rel(std::vector<Tuple> t, std::size_t k = 2) { return Relation::stored("R", k, std::move(t)); }

// Brute-force truth of ⋁ branches at tuple x, with fresh variables ranging over `ydom`.
bool fragment_holds(const RewriteFragment& f, const std::vector<Var>& vars, const Tuple& x, const std::set<Value>& ydom) {
    std::map<std::string, const Relation*> by_name;
    for (const auto& [r, cols] : f.relations) by_name[r.name] = &r;
    for (const Branch& b : f.branches) {
        std::vector<Var> ys;
        for (const Atom& a : b.atoms)
            for (Var v : a.vars)
                if (std::find(vars.begin(), vars.end(), v) == vars.end() && std::find(ys.begin(), ys.end(), v) == ys.end())
                    ys.push_back(v);
        std::map<Var, Value> asg;
        for (std::size_t i = 0; i < vars.size(); ++i) asg[vars[i]] = x[i];
        std::function<bool(std::size_t)> rec = [&](std::size_t i) -> bool {
            if (i == ys.size()) {
                for (const Atom& a : b.atoms) {
                    Tuple t;
                    for (Var v : a.vars) t.push_back(asg[v]);
                    if (!by_name.at(a.relation)->contains(t)) return false;
                }
                for (const auto& e : b.nae) {
                    std::set<Value> s;
                    for (Var v : e) s.insert(asg[v]);
                    if (s.size() < 2) return false;
                }
                return true;
            }
            for (Value y : ydom) {
                asg[ys[i]] = y;
                if (rec(i + 1)) return true;
            }
            return false;
        };
        if (rec(0)) return true;
    }
    return false;
}

void check_negation(const Relation& M, const std::vector<std::set<Value>>& doms) {
    QueryIR ir;
    std::vector<Var> vars;
    for (std::size_t i = 0; i < M.arity(); ++i) vars.push_back(ir.var("X" + std::to_string(i)));
    std::set<Value> all;
    for (const auto& d : doms) all.insert(d.begin(), d.end());
    for (std::size_t pivot = 0; pivot < M.arity(); ++pivot) {
        QueryIR tmp = ir;
        RewriteFragment f = negate_matching(M, vars, pivot, doms, "t", tmp);
        EXPECT_EQ(f.branches.size(), M.arity());
        Tuple x(M.arity());
        std::function<void(std::size_t)> rec = [&](std::size_t i) {
            if (i == x.size()) {
                EXPECT_EQ(fragment_holds(f, vars, x, all), !M.contains(x));
                return;
            }
            for (Value v : doms[i]) {
                x[i] = v;
                rec(i + 1);
            }
        };
        rec(0);
    }
}

}  // namespace

TEST(ColumnDegree, Examples) {
    EXPECT_EQ(column_degree(rel({{1, 2}, {1, 3}})), 2u);
    EXPECT_EQ(column_degree(rel({{1, 2}, {2, 3}})), 1u);
    EXPECT_EQ(column_degree(rel({})), 0u);
}

TEST(ColumnDegree, MatchesHistogram) {
    std::mt19937_64 rng(2);
    for (int it = 0; it < 100; ++it) {
        const std::size_t k = 1 + rng() % 4;
        std::vector<Tuple> rows;
        for (int i = 0; i < 30; ++i) {
            Tuple t;
            for (std::size_t c = 0; c < k; ++c) t.push_back(static_cast<Value>(rng() % 6));
            rows.push_back(t);
        }
        Relation R = rel(rows, k);
        std::size_t want = 0;
        for (std::size_t c = 0; c < k; ++c)
            for (Value v = 0; v < 6; ++v) {
                std::size_t n = 0;
                for (const Tuple& t : R.tuples) n += t[c] == v;
                want = std::max(want, n);
            }
        EXPECT_EQ(column_degree(R), want);
    }
}

TEST(MatchingDecompose, Examples) {
    auto parts = matching_decompose(rel({{1, 1}, {1, 2}, {2, 1}}));
    ASSERT_EQ(parts.size(), 2u);
    EXPECT_EQ(parts[0].tuples, (std::vector<Tuple>{{1, 1}}));
    EXPECT_EQ(parts[1].tuples, (std::vector<Tuple>{{1, 2}, {2, 1}}));
    EXPECT_EQ(matching_decompose(rel({{1, 2}, {2, 3}})).size(), 1u);
}

TEST(MatchingDecompose, RandomPartitionAndBound) {
    std::mt19937_64 rng(6);
    for (int it = 0; it < 200; ++it) {
        const std::size_t k = 1 + rng() % 4;
        std::vector<Tuple> rows;
        const std::size_t n = rng() % 201;
        for (std::size_t i = 0; i < n; ++i) {
            Tuple t;
            for (std::size_t c = 0; c < k; ++c) t.push_back(static_cast<Value>(rng() % 25));
            rows.push_back(t);
        }
        Relation R = rel(rows, k);
        auto parts = matching_decompose(R);
        std::vector<Tuple> uni;
        for (const Relation& m : parts) {
            EXPECT_TRUE(is_matching(m));
            uni.insert(uni.end(), m.tuples.begin(), m.tuples.end());
        }
        std::sort(uni.begin(), uni.end());
        EXPECT_EQ(uni, R.tuples);  // disjoint: no duplicates survive the sort
        const std::size_t ell = column_degree(R);
        if (!R.empty()) {
            EXPECT_LE(parts.size(), k * (ell - 1) + 1);
            EXPECT_GE(parts.size(), ell);
        }
    }
}

TEST(NegateMatching, Examples) {
    check_negation(rel({{1, 1}, {2, 2}}), {{1, 2}, {1, 2}});
    check_negation(rel({}), {{0, 1, 2}, {0, 1}});
    check_negation(rel({{1, 2, 3}}, 3), {{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
    check_negation(rel({{1, 2, 3}, {2, 3, 1}}, 3), {{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
    check_negation(Relation::stored("R", 1, {{2}}), {{1, 2, 3}});
}

TEST(NegateMatching, GeneratedRelationNames) {
    QueryIR ir;
    std::vector<Var> v{ir.var("X"), ir.var("Z")};
    RewriteFragment f = negate_matching(rel({{1, 1}, {2, 2}}), v, 0, {{1, 2}, {1, 2}}, "T0m1", ir);
    ASSERT_EQ(f.relations.size(), 2u);
    EXPECT_EQ(f.relations[0].first.name, "__W_T0m1_2");
    EXPECT_TRUE(f.relations[0].first.empty());
    EXPECT_EQ(f.relations[1].first.name, "__M_T0m1_1_2");
}

TEST(UntangleQuery, QueryCGivesFourDisjuncts) {
    Database db;
    std::vector<Tuple> R, S, T;
    for (Value i = 0; i < 12; ++i) {
        R.push_back({i, i % 3});
        S.push_back({i % 3, i});
        T.push_back({i, i});
        T.push_back({i, i + 1});
    }
    db.add_relation("R", 2, R);
    db.add_relation("S", 2, S);
    db.add_relation("T", 2, T);
    const QueryIR q = validate_query(parse_query("C() :- R(X,Y), S(Y,Z), !T(X,Z)."), db);
    Database work = db;
    UntangledQuery u = untangle_query(q, work);
    EXPECT_EQ(u.matchings, (std::vector<std::size_t>{2}));
    EXPECT_EQ(u.B, 4);
    EXPECT_EQ(u.disjuncts.size(), 4u);
    EXPECT_LE(u.B, u.bound);
    for (const QueryIR& d : u.disjuncts) EXPECT_TRUE(d.negated_atoms.empty());
}

TEST(UntangleQuery, NoNegationIsIdentity) {
    Database db;
    db.add_relation("R", 2, {{0, 1}});
    const QueryIR q = parse_query("Q(X) :- R(X,Y).");
    UntangledQuery u = untangle_query(q, db);
    ASSERT_EQ(u.disjuncts.size(), 1u);
    EXPECT_EQ(u.disjuncts[0], q);
}

TEST(UntangleQuery, DegreeThreeWithinBound) {
    Database db;
    db.add_relation("R", 2, {{0, 1}, {1, 2}, {2, 0}, {3, 3}});
    db.add_relation("N", 2, {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {2, 3}});
    const QueryIR q = validate_query(parse_query("Q(X) :- R(X,Y), !N(X,Y)."), db);
    Database work = db;
    UntangledQuery u = untangle_query(q, work);
    EXPECT_EQ(u.degrees, (std::vector<std::size_t>{3}));
    EXPECT_EQ(u.bound, 32);
    EXPECT_LE(u.B, u.bound);
    std::set<Tuple> uni;
    for (const QueryIR& d : u.disjuncts) {
        auto a = naive_eval(d, work);
        uni.insert(a.begin(), a.end());
    }
    EXPECT_EQ(uni, naive_eval(q, db));
}

TEST(UntangleQuery, EmptyNegatedRelationNeedsNoRewrite) {
    Database db;
    db.add_relation("R", 1, {{0}});
    db.add_relation("T", 1, {});
    UntangledQuery u = untangle_query(validate_query(parse_query("Q(X) :- R(X), !T(X)."), db), db);
    EXPECT_TRUE(u.slots.empty());
    EXPECT_EQ(u.B, 1);
}

TEST(UntangleQuery, RandomEquivalence) {
    for (int it = 0; it < 300; ++it) {
        std::mt19937_64 rng(900 + static_cast<std::uint64_t>(it));
        oracle::RandomCase rc = oracle::random_case(rng);
        const QueryIR q = validate_query(parse_query(rc.query), rc.db);
        Database work = rc.db;
        UntangledQuery u = untangle_query(q, work);
        EXPECT_LE(u.B, u.bound);
        std::set<Tuple> uni;
        for (const QueryIR& d : u.disjuncts) {
            EXPECT_TRUE(d.negated_atoms.empty());
            auto a = naive_eval(d, work);
            uni.insert(a.begin(), a.end());
        }
        EXPECT_EQ(uni, naive_eval(q, rc.db)) << rc.query;
    }
}
