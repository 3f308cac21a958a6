#include "doctest.h"

#include <set>

#include "affwalk/cayley.hpp"

using namespace affwalk;

namespace {

// Distinct products of all words of length <= r.
std::set<GroupElement> words_up_to(const GroupPresentation& g, int r) {
    std::set<GroupElement> all{g.identity}, frontier{g.identity};
    for (int k = 0; k < r; ++k) {
        std::set<GroupElement> next;
        for (const auto& x : frontier)
            for (const auto& s : g.generators) next.insert(g.multiply(x, s));
        all.insert(next.begin(), next.end());
        frontier = std::move(next);
    }
    return all;
}

GroupElement random_word(const GroupPresentation& g, int length, Rng& rng) {
    GroupElement x = g.identity;
    std::uniform_int_distribution<std::size_t> pick(0, g.generators.size() - 1);
    for (int i = 0; i < length; ++i) x = g.multiply(x, g.generators[pick(rng)]);
    return x;
}

// Same pencil as hf_dimension_row, built from a dense null-space basis of the
// full constraint matrix.
Eigen::VectorXd oracle_singular_values(const GroupPresentation& g, const DiscreteMeasure& mu, int r_outer,
                                       int r_inner, int ell) {
    const CayleyBall b = ball(g, r_outer);
    const auto n = static_cast<Eigen::Index>(b.size());
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    Eigen::Index rows = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (b.word_length[static_cast<std::size_t>(k)] > r_outer - ell) continue;
        l(rows, k) += 1.0;
        for (std::size_t j = 0; j < mu.support.size(); ++j)
            l(rows, static_cast<Eigen::Index>(*b.find(g.multiply(b.elements[static_cast<std::size_t>(k)], mu.support[j])))) -=
                mu.weights[j];
        ++rows;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(l.topRows(rows));
    const Eigen::MatrixXd basis = lu.kernel();
    const auto ni = static_cast<Eigen::Index>(b.count_within(r_inner));
    const Eigen::MatrixXd go = basis.transpose() * basis / static_cast<double>(n);
    const Eigen::MatrixXd gi = basis.topRows(ni).transpose() * basis.topRows(ni) / static_cast<double>(ni);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> pencil(gi, go, Eigen::EigenvaluesOnly);
    return pencil.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
}

HfDimensionRow synthetic(int dimension, bool stable) {
    HfDimensionRow row;
    row.dimension = dimension;
    row.stable = stable;
    return row;
}

}  // namespace

TEST_SUITE("hf-dim-lab") {

TEST_CASE("ball sizes") {
    const auto z1 = ball(GroupPresentation::free_abelian(1), 2);
    CHECK(z1.size() == 5);
    std::set<std::int64_t> xs;
    for (const auto& e : z1.elements) xs.insert(e[0]);
    CHECK(xs == std::set<std::int64_t>{-2, -1, 0, 1, 2});
    CHECK(ball(GroupPresentation::free_abelian(2), 3).size() == 25);
    for (int r = 0; r <= 10; ++r) CHECK(ball(GroupPresentation::free_abelian(2), r).size() == std::size_t(2 * r * r + 2 * r + 1));
    CHECK(ball(GroupPresentation::heisenberg(), 1).size() == 5);
}

TEST_CASE("balls agree with word enumeration") {
    for (const char* name : {"free-abelian-3", "heisenberg", "bs12", "lamplighter"}) {
        CAPTURE(name);
        const auto g = GroupPresentation::by_name(name);
        CHECK(g.generators_symmetric());
        for (int r = 0; r <= 6; ++r) {
            const auto b = ball(g, r);
            const auto oracle = words_up_to(g, r);
            CHECK(b.size() == oracle.size());
            for (const auto& x : b.elements) CHECK(oracle.count(x) == 1);
        }
    }
}

TEST_CASE("word lengths are 1-Lipschitz and ball sizes increase") {
    for (const char* name : {"free-abelian-2", "heisenberg", "bs12", "lamplighter"}) {
        CAPTURE(name);
        const auto g = GroupPresentation::by_name(name);
        const auto b = ball(g, 7);
        CHECK(std::is_sorted(b.word_length.begin(), b.word_length.end()));
        for (std::size_t i = 0; i < b.size(); ++i)
            for (auto j : b.neighbors[i]) {
                if (j < 0) {
                    CHECK(b.word_length[i] == 7);
                    continue;
                }
                CHECK(std::abs(b.word_length[i] - b.word_length[static_cast<std::size_t>(j)]) <= 1);
            }
        for (int r = 1; r <= 7; ++r) CHECK(b.count_within(r) > b.count_within(r - 1));
    }
}

TEST_CASE("group laws on random words") {
    for (const char* name : {"free-abelian-2", "heisenberg", "bs12", "lamplighter"}) {
        CAPTURE(name);
        const auto g = GroupPresentation::by_name(name);
        Rng rng = make_stream(5, 0);
        for (int i = 0; i < 1000; ++i) {
            const auto x = random_word(g, 12, rng), y = random_word(g, 12, rng), z = random_word(g, 12, rng);
            REQUIRE(g.multiply(g.multiply(x, y), z) == g.multiply(x, g.multiply(y, z)));
            REQUIRE(g.multiply(x, g.inverse(x)) == g.identity);
            REQUIRE(g.multiply(g.inverse(x), x) == g.identity);
            REQUIRE(g.multiply(g.identity, x) == x);
        }
    }
}

TEST_CASE("normal forms") {
    const auto h = GroupPresentation::heisenberg();
    // commutator [a, b] = (0, 0, 1)
    const auto a = h.generators[0], b = h.generators[2];
    CHECK(h.multiply(h.multiply(a, b), h.multiply(h.inverse(a), h.inverse(b))) == GroupElement{0, 0, 1});

    const auto bs = GroupPresentation::bs12();
    // t u t^-1 = u^2 with t = (1, 0, 0), u = (0, 1, 0)
    const auto t = bs.generators[0], u = bs.generators[2];
    CHECK(bs.multiply(bs.multiply(t, u), bs.inverse(t)) == bs.multiply(u, u));
    CHECK(bs.multiply(bs.inverse(t), u) == GroupElement{-1, 1, 1});

    const auto l = GroupPresentation::lamplighter();
    const auto tog = l.generators[2];
    CHECK(l.multiply(tog, tog) == l.identity);
    CHECK(l.multiply(l.multiply(l.generators[0], tog), l.generators[1]) == GroupElement{0, 1});

    CHECK_THROWS(GroupPresentation::by_name("free-abelian-x"));
    CHECK_THROWS(GroupPresentation::by_name("sl2z"));
}

TEST_CASE("budget") {
    CHECK_THROWS_AS(ball(GroupPresentation::lamplighter(), 20, 1000), BudgetExceeded);
    CHECK_NOTHROW(ball(GroupPresentation::lamplighter(), 5, 1000));
}

TEST_CASE("growth classification") {
    const auto z2 = growth_classify(GroupPresentation::free_abelian(2), {2, 4, 6, 8, 10, 12, 16, 20, 24, 28, 32});
    CHECK(z2.verdict == GrowthVerdict::Polynomial);
    CHECK(z2.degree == doctest::Approx(2.0).epsilon(0.1));
    const auto heis = growth_classify(GroupPresentation::heisenberg(), {2, 4, 6, 8, 10, 12, 14, 16});
    CHECK(heis.verdict == GrowthVerdict::Polynomial);
    CHECK(heis.degree > 3.0);
    CHECK(heis.degree < 4.5);
    CHECK(growth_classify(GroupPresentation::lamplighter(), {2, 4, 6, 8, 10, 12}).verdict == GrowthVerdict::Exponential);
    CHECK(growth_classify(GroupPresentation::bs12(), {2, 4, 6, 8, 10}).verdict == GrowthVerdict::Exponential);
    CHECK_THROWS(growth_classify(GroupPresentation::free_abelian(1), {2, 4}));
    CHECK(to_string(GrowthVerdict::Polynomial) == "POLYNOMIAL");
}

TEST_CASE("measures on groups") {
    const auto z1 = GroupPresentation::free_abelian(1);
    const auto simple = DiscreteMeasure::generator_uniform(z1);
    CHECK(simple.symmetric(z1));
    const DiscreteMeasure drift{{{1}, {-1}}, {0.7, 0.3}};
    CHECK_FALSE(drift.symmetric(z1));
}

TEST_CASE("harmonic space on the line") {
    const auto z1 = GroupPresentation::free_abelian(1);
    const auto mu = DiscreteMeasure::generator_uniform(z1);
    HfOptions o;
    o.inner = InnerRadius::fixed(4);
    const auto row = hf_dimension_row(z1, mu, 8, o);
    CHECK(row.ball_size == 17);
    CHECK(row.interior_size == 15);
    CHECK(row.boundary_size == 2);
    REQUIRE(row.singular_values.size() == 2);
    // constants give 1; x gives sqrt(mean x^2 on B_4 / mean x^2 on B_8)
    CHECK(row.singular_values(0) == doctest::Approx(1.0));
    CHECK(row.singular_values(1) == doctest::Approx(std::sqrt((60.0 / 9.0) / 24.0)));
    CHECK(row.dimension == 2);
    CHECK(std::isinf(row.gap));
    CHECK(row.stable);
    CHECK(row.eps_rank == 2);
}

TEST_CASE("pencil spectrum matches the dense null-space oracle") {
    struct Case {
        const char* group;
        int r_outer;
        InnerRadius inner;
    };
    for (const Case& c : {Case{"free-abelian-1", 10, InnerRadius::fixed(4)}, Case{"free-abelian-2", 6, InnerRadius::fixed(1)},
                          Case{"free-abelian-2", 7, InnerRadius::fixed(2)}, Case{"bs12", 4, InnerRadius::offset(2)},
                          Case{"heisenberg", 4, InnerRadius::fixed(2)}}) {
        CAPTURE(c.group);
        CAPTURE(c.r_outer);
        const auto g = GroupPresentation::by_name(c.group);
        const auto mu = DiscreteMeasure::generator_uniform(g);
        HfOptions o;
        o.inner = c.inner;
        const auto row = hf_dimension_row(g, mu, c.r_outer, o);
        const auto oracle = oracle_singular_values(g, mu, c.r_outer, c.inner.at(c.r_outer), 1);
        REQUIRE(oracle.size() == row.singular_values.size());
        const Eigen::Index top = std::min<Eigen::Index>(oracle.size(), 8);
        for (Eigen::Index i = 0; i < top; ++i)
            CHECK(row.singular_values(i) == doctest::Approx(oracle(i)).epsilon(1e-6));
    }
}

TEST_CASE("dimension tables") {
    const auto z1 = GroupPresentation::free_abelian(1);
    HfOptions o;
    o.inner = InnerRadius::fixed(4);
    int dim = 0;
    const auto t1 = hf_dimension_estimate(z1, DiscreteMeasure::generator_uniform(z1), {8, 9, 10, 11, 12, 13, 14}, o);
    CHECK(stabilizes(t1, &dim));
    CHECK(dim == 2);

    const auto z2 = GroupPresentation::free_abelian(2);
    o.inner = InnerRadius::fixed(1);
    const auto t2 = hf_dimension_estimate(z2, DiscreteMeasure::generator_uniform(z2), {8, 11, 14}, o);
    for (const auto& row : t2) CHECK(row.dimension == 3);

    const auto bs = GroupPresentation::bs12();
    o.inner = InnerRadius::offset(2);
    const auto tb = hf_dimension_estimate(bs, DiscreteMeasure::generator_uniform(bs), {4, 5, 6}, o);
    CHECK(strictly_increasing(tb));
    CHECK_FALSE(stabilizes(tb));
}

TEST_CASE("a lazy step law has the same harmonic functions") {
    const auto z2 = GroupPresentation::free_abelian(2);
    DiscreteMeasure lazy{{{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}}, {0.5, 0.125, 0.125, 0.125, 0.125}};
    HfOptions o;
    const auto a = hf_dimension_row(z2, DiscreteMeasure::generator_uniform(z2), 8, o);
    const auto b = hf_dimension_row(z2, lazy, 8, o);
    CHECK(a.dimension == b.dimension);
    CHECK(a.eps_rank == b.eps_rank);
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(a.singular_values(i) == doctest::Approx(b.singular_values(i)).epsilon(1e-8));
}

TEST_CASE("degenerate laws and radii") {
    const auto z1 = GroupPresentation::free_abelian(1);
    CHECK_THROWS_AS(hf_dimension_row(z1, DiscreteMeasure{{{1}}, {1.0}}, 8), DegenerateMeasure);
    CHECK_THROWS_AS(hf_dimension_row(z1, DiscreteMeasure{{{0}}, {1.0}}, 8), DegenerateMeasure);
    CHECK_THROWS_AS(hf_dimension_row(z1, DiscreteMeasure{{{1}, {-1}}, {0.5, 0.6}}, 8), DegenerateMeasure);
    HfOptions o;
    o.inner = InnerRadius::fixed(8);
    CHECK_THROWS_AS(hf_dimension_row(z1, DiscreteMeasure::generator_uniform(z1), 8, o), std::invalid_argument);
    o.budget = 10;
    o.inner = InnerRadius::fixed(1);
    CHECK_THROWS_AS(hf_dimension_row(z1, DiscreteMeasure::generator_uniform(z1), 8, o), BudgetExceeded);
}

TEST_CASE("table verdict helpers") {
    CHECK(stabilizes({synthetic(2, true), synthetic(2, true)}));
    CHECK_FALSE(stabilizes({synthetic(2, true), synthetic(2, false)}));
    CHECK_FALSE(stabilizes({synthetic(2, true), synthetic(3, true)}));
    CHECK_FALSE(stabilizes({}));
    CHECK(strictly_increasing({synthetic(1, false), synthetic(2, false), synthetic(4, false)}));
    CHECK_FALSE(strictly_increasing({synthetic(1, false), synthetic(1, false)}));
}

TEST_CASE("hitting law and restriction to the even integers") {
    const auto fixture = SubgroupFixture::integers_even();
    const auto law = empirical_hitting_law(fixture, 100'000, 3);
    REQUIRE(law.support.size() == 3);
    CHECK(law.support[0] == GroupElement{-1});
    CHECK(law.support[1] == GroupElement{0});
    CHECK(law.support[2] == GroupElement{1});
    const double exact[] = {0.25, 0.5, 0.25};
    for (int i = 0; i < 3; ++i) {
        const double se = std::sqrt(exact[i] * (1 - exact[i]) / 1e5);
        CHECK(std::abs(law.weights[static_cast<std::size_t>(i)] - exact[i]) <= 3 * se);
    }

    HfOptions o;
    o.inner = InnerRadius::fixed(4);
    const auto rep = restriction_isomorphism_check(fixture, {8, 10, 12}, o, 100'000, 3);
    CHECK(rep.pass);
    for (const auto& row : rep.subgroup_table) CHECK(row.dimension == 2);

    const auto mismatched =
        restriction_isomorphism_check(fixture, {8, 10, 12}, o, 0, 3, DiscreteMeasure{{{1}, {-1}}, {0.7, 0.3}});
    CHECK_FALSE(mismatched.pass);
}

TEST_CASE("restriction to the whole group gives identical tables") {
    HfOptions o;
    o.inner = InnerRadius::fixed(4);
    const auto rep = restriction_isomorphism_check(SubgroupFixture::integers_whole(), {8, 9}, o, 10'000, 1);
    CHECK(rep.pass);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(rep.group_table[i].dimension == rep.subgroup_table[i].dimension);
        CHECK(rep.group_table[i].singular_values.isApprox(rep.subgroup_table[i].singular_values, 1e-2));
    }
}

}
