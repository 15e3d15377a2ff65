#include "negcq/colorcode.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace negcq;

namespace {

LocalGraph edge() { return LocalGraph(2, {{0, 1}}); }
LocalGraph star(std::size_t leaves) {
    std::vector<std::vector<int>> es;
    for (std::size_t i = 1; i <= leaves; ++i) es.push_back({0, static_cast<int>(i)});
    return LocalGraph(leaves + 1, es);
}
LocalGraph clique(std::size_t k) {
    std::vector<std::vector<int>> es;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) es.push_back({static_cast<int>(i), static_cast<int>(j)});
    return LocalGraph(k, es);
}
LocalGraph nae3() { return LocalGraph(3, {{0, 1, 2}}); }

bool nae_holds(const LocalGraph& g, const std::vector<std::size_t>& xs) { return is_proper(g, xs); }

// Tensor identity over all of [N]^n.
void expect_identity(const LocalGraph& g, std::size_t c, const std::shared_ptr<const ColorFamily>& F, std::size_t N) {
    TensorDecomposition T = tensor_decomposition(g.hypergraph(), c, F);
    EXPECT_EQ(T.rank(), static_cast<std::size_t>(chromatic_polynomial(g, c)) * F->size());
    std::vector<std::size_t> xs(g.n, 0);
    while (true) {
        ASSERT_EQ(T.evaluate(xs), nae_holds(g, xs));
        std::size_t i = 0;
        while (i < xs.size() && ++xs[i] == N) xs[i++] = 0;
        if (i == xs.size()) break;
    }
}

Rational uniform_theta(const LocalGraph& g, std::size_t c) { return theta(g, c, uniform_distribution(c)); }

}  // namespace

TEST(Quotients, Examples) {
    EXPECT_EQ(quotient_images(edge()).size(), 1u);
    auto s = quotient_images(star(2));
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(quotient_images(clique(3)).size(), 1u);
    EXPECT_THROW(quotient_images(LocalGraph(11, {{0, 1}})), QuotientBudgetExceeded);
}

TEST(ColorCount, Examples) {
    for (std::size_t k = 2; k <= 5; ++k) EXPECT_EQ(color_count(clique(k)).c, k);
    for (std::size_t k = 1; k <= 5; ++k) EXPECT_EQ(color_count(star(k)).c, 2u);
    EXPECT_EQ(color_count(nae3()).c, 2u);
    ColorCount fb = color_count(LocalGraph(12, {{0, 1}}));
    EXPECT_FALSE(fb.exact);
    EXPECT_EQ(fb.c, 12u);
}

TEST(ChromaticPolynomial, Examples) {
    EXPECT_EQ(chromatic_polynomial(edge(), 2), 2);
    EXPECT_EQ(chromatic_polynomial(clique(4), 4), 24);
    EXPECT_EQ(chromatic_polynomial(nae3(), 2), 6);
    EXPECT_EQ(chromatic_polynomial(edge(), 4), 12);
    // Matches brute-force enumeration.
    for (std::size_t x = 1; x <= 4; ++x) EXPECT_EQ(chromatic_polynomial(star(3), x), BigInt(proper_colorings(star(3), x).size()));
}

TEST(Theta, Examples) {
    EXPECT_EQ(uniform_theta(clique(3), 3), Rational(2, 9));
    EXPECT_EQ(uniform_theta(star(2), 2), Rational(1, 4));
    EXPECT_EQ(theta(edge(), 2, {Rational(1), Rational(0)}), Rational(0));
    EXPECT_THROW(theta(edge(), 2, {Rational(1, 2), Rational(1, 3)}), InvalidDistribution);
    EXPECT_THROW(theta(edge(), 2, {Rational(1)}), InvalidDistribution);
    // Non-uniform path agrees with the uniform shortcut.
    EXPECT_EQ(detail::proper_mass(clique(3), uniform_distribution(3)), Rational(2, 9));
}

TEST(Theta, UniformLowerBoundOnRandomHypergraphs) {
    std::mt19937_64 rng(77);
    for (int it = 0; it < 100; ++it) {
        const std::size_t n = 2 + rng() % 5;
        std::vector<std::vector<int>> es;
        const std::size_t m = 1 + rng() % 5;
        for (std::size_t e = 0; e < m; ++e) {
            std::vector<int> ed;
            const std::size_t a = 2 + rng() % 2;
            for (std::size_t i = 0; i < a; ++i) ed.push_back(static_cast<int>(rng() % n));
            std::sort(ed.begin(), ed.end());
            ed.erase(std::unique(ed.begin(), ed.end()), ed.end());
            if (ed.size() >= 2) es.push_back(ed);
        }
        if (es.empty()) es.push_back({0, 1});
        LocalGraph g(n, es);
        const std::size_t c = color_count(g).c;
        const Rational th = uniform_theta(g, c);
        EXPECT_GE(th, Rational(1) / Rational(boost::multiprecision::pow(BigInt(c), static_cast<unsigned>(n))));
        EXPECT_GE(th, Rational(1) / Rational(boost::multiprecision::pow(BigInt(n), static_cast<unsigned>(n))));
    }
}

// The c^-c form fails on stars: the 3-star has c = 2, yet θ(p) = p1³p2 + p1p2³ ≤ 1/8 for every p.
TEST(Theta, CToTheCBoundFailsOnStars) {
    EXPECT_EQ(color_count(star(3)).c, 2u);
    EXPECT_EQ(uniform_theta(star(3), 2), Rational(1, 8));
    for (int a = 1; a < 10; ++a) EXPECT_LE(theta(star(3), 2, {Rational(a, 10), Rational(10 - a, 10)}), Rational(1, 8));
}

TEST(ThetaStarLower, Examples) {
    for (std::size_t k = 3; k <= 6; ++k) {
        ThetaBound b = theta_star_lower(star(k - 1));
        EXPECT_TRUE(b.multipartite);
        EXPECT_GE(static_cast<double>(b.bound.convert_to<double>()), 1.0 / (std::exp(1.0) * static_cast<double>(k)));
        EXPECT_GE(theta(star(k - 1), b.c, b.p), b.bound);
    }
    for (std::size_t k = 2; k <= 5; ++k) {
        ThetaBound b = theta_star_lower(clique(k));
        BigInt f = 1;
        for (std::size_t i = 2; i <= k; ++i) f *= i;
        EXPECT_EQ(b.bound, Rational(f) / Rational(boost::multiprecision::pow(BigInt(k), static_cast<unsigned>(k))));
        EXPECT_EQ(theta(clique(k), k, b.p), b.bound);
    }
    LocalGraph g(4, {{0, 1}, {1, 2}, {0, 2}, {2, 3}});
    ThetaBound b = theta_star_lower(g);
    EXPECT_FALSE(b.multipartite);
    EXPECT_EQ(b.c, 3u);
    EXPECT_EQ(b.bound, Rational(1, 27));
}

TEST(ThetaStarLower, MultipartiteBoundHolds) {
    for (auto mu : std::vector<std::vector<int>>{{2, 1}, {2, 2}, {3, 1}, {2, 1, 1}, {3, 2}, {2, 2, 1}}) {
        std::vector<int> part;
        for (std::size_t i = 0; i < mu.size(); ++i)
            for (int j = 0; j < mu[i]; ++j) part.push_back(static_cast<int>(i));
        std::vector<std::vector<int>> es;
        for (std::size_t a = 0; a < part.size(); ++a)
            for (std::size_t b = a + 1; b < part.size(); ++b)
                if (part[a] != part[b]) es.push_back({static_cast<int>(a), static_cast<int>(b)});
        LocalGraph g(part.size(), es);
        ThetaBound tb = theta_star_lower(g);
        ASSERT_TRUE(tb.multipartite);
        EXPECT_GE(theta(g, tb.c, tb.p), tb.bound);
    }
}

TEST(RandomFamily, Examples) {
    FamilyOptions opt;
    opt.seed = 1;
    ColorFamily F = random_family(edge(), 2, uniform_distribution(2), 4, opt);
    EXPECT_EQ(F.size(), 5u);
    EXPECT_TRUE(verify_coverage(edge(), F, 4).ok);
    ColorFamily S = random_family(star(2), 2, uniform_distribution(2), 5, opt);
    EXPECT_TRUE(verify_coverage(star(2), S, 5).ok);
    EXPECT_EQ(S.provenance, "random-verified");
    EXPECT_EQ(S.certification, "exhaustive");
}

TEST(RandomFamily, ZeroThetaFails) {
    EXPECT_THROW(random_family(edge(), 2, {Rational(1), Rational(0)}, 4), FamilyConstructionFailed);
}

TEST(Coverage, IdentityOnTwo) {
    ColorFamily F;
    F.c = 2;
    F.N = 2;
    F.table = {{0, 1}};
    EXPECT_TRUE(verify_coverage(edge(), F, 2).ok);
}

// A failing verifier's counterexample breaks the tensor identity.
TEST(Coverage, VerifierAgreesWithIdentity) {
    ColorFamily F;
    F.c = 2;
    F.N = 5;
    F.table = {{0, 1, 0, 1, 0}};
    CoverageCheck chk = verify_coverage(star(2), F, 5);
    ASSERT_FALSE(chk.ok);
    auto T = tensor_decomposition(star(2).hypergraph(), 2, std::make_shared<ColorFamily>(F));
    EXPECT_TRUE(nae_holds(star(2), chk.counterexample));
    EXPECT_FALSE(T.evaluate(chk.counterexample));
}

TEST(GreedyCover, Examples) {
    ColorFamily F = greedy_cover_family(edge(), 2, 3, all_functions(3, 2));
    EXPECT_LE(F.size(), 3u);
    EXPECT_TRUE(verify_coverage(edge(), F, 3).ok);
    EXPECT_EQ(greedy_cover_family(edge(), 2, 2, {{0, 1}}).size(), 1u);
    EXPECT_THROW(greedy_cover_family(edge(), 2, 3, {{0, 0, 0}, {1, 1, 1}}), CoverageGap);
}

TEST(ReedSolomon, Examples) {
    EXPECT_EQ(rs_min_distance(RSCode(4, 1, 3)), 3);
    EXPECT_EQ(rs_min_distance(RSCode(5, 2, 4)), 3);
    EXPECT_EQ(rs_min_distance(RSCode(3, 2, 3)), 2);
    EXPECT_THROW(RSCode(3, 2, 4), ParameterError);
}

TEST(ReedSolomon, DistanceExhaustiveSmallFields) {
    for (int q : {2, 3, 4, 5, 7, 8})
        for (int n = 1; n <= q; ++n)
            for (int d = 1; d <= n && std::pow(q, d) <= 4096; ++d) EXPECT_EQ(rs_min_distance(RSCode(q, d, n)), n - d + 1) << q << d << n;
}

TEST(GaloisField, Axioms) {
    for (int q : {2, 3, 4, 5, 7, 8, 9}) {
        GaloisField F(q);
        for (int a = 0; a < q; ++a) {
            EXPECT_EQ(F.add(a, 0), a);
            EXPECT_EQ(F.mul(a, 1), a);
            bool inv = a == 0;
            for (int b = 0; b < q; ++b) {
                EXPECT_EQ(F.add(a, b), F.add(b, a));
                EXPECT_EQ(F.mul(a, b), F.mul(b, a));
                inv = inv || F.mul(a, b) == 1;
                for (int c = 0; c < q; ++c) EXPECT_EQ(F.mul(a, F.add(b, c)), F.add(F.mul(a, b), F.mul(a, c)));
            }
            EXPECT_TRUE(inv);
        }
    }
}

TEST(DisjunctMatrix, Examples) {
    EXPECT_TRUE(is_disjunct(identity_matrix(6, 5), 5));
    DisjunctMatrix M = disjunct_matrix(2, 9);
    EXPECT_EQ(M.N, 9u);
    EXPECT_TRUE(is_disjunct(M, 2));
    DisjunctMatrix L = disjunct_matrix(2, 10000);
    EXPECT_LE(L.t(), 100u);
    DisjunctMatrix bad;
    bad.N = 3;
    bad.k = 1;
    bad.rows = {{1, 1, 0}, {0, 1, 1}};
    EXPECT_FALSE(is_disjunct(bad, 1));
}

TEST(ExplicitFamily, Examples) {
    ColorFamily E = explicit_family(edge(), 2, 6, uniform_distribution(2));
    EXPECT_TRUE(verify_coverage(edge(), E, 6).ok);
    ColorFamily S = explicit_family(star(2), 2, 8, uniform_distribution(2));
    EXPECT_TRUE(verify_coverage(star(2), S, 8).ok);
    EXPECT_EQ(S.size(), static_cast<std::size_t>(S.outer->n) * S.inner.size());
    const ExplicitParams small = explicit_params(2, 2);
    EXPECT_EQ(small.n, 1);
    ColorBudgets tight;
    tight.inner_verify = 10;
    FamilyOptions opt;
    opt.budgets = tight;
    EXPECT_THROW(explicit_family(clique(3), 3, 100, uniform_distribution(3), opt), ExplicitBudgetExceeded);
}

TEST(TensorDecomposition, Examples) {
    ColorFamily id;
    id.c = 2;
    id.N = 2;
    id.table = {{0, 1}};
    auto F = std::make_shared<ColorFamily>(id);
    EXPECT_EQ(tensor_decomposition(edge().hypergraph(), 2, F).rank(), 2u);
    expect_identity(edge(), 2, F, 2);
    FamilyOptions opt;
    opt.seed = 4;
    expect_identity(star(2), 2, std::make_shared<ColorFamily>(random_family(star(2), 2, uniform_distribution(2), 5, opt)), 5);
    expect_identity(nae3(), 2, std::make_shared<ColorFamily>(random_family(nae3(), 2, uniform_distribution(2), 4, opt)), 4);
    expect_identity(clique(3), 3, std::make_shared<ColorFamily>(greedy_cover_family(clique(3), 3, 4, all_functions(4, 3))), 4);
}

TEST(TensorDecomposition, UnaryBitsMatchEvaluate) {
    FamilyOptions opt;
    ColorFamily F = random_family(star(2), 2, uniform_distribution(2), 4, opt);
    auto T = tensor_decomposition(star(2).hypergraph(), 2, std::make_shared<ColorFamily>(F));
    BitVectorSemiring sr(T.rank());
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = 0; b < 4; ++b)
            for (std::size_t c = 0; c < 4; ++c) {
                BitWords w = sr.times(sr.times(T.unary(0, a), T.unary(1, b)), T.unary(2, c));
                EXPECT_EQ(!sr.is_zero(w), T.evaluate({a, b, c}));
            }
}
