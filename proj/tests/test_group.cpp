#include "doctest.h"

#include "affwalk/group.hpp"
#include "affwalk/measure.hpp"

using namespace affwalk;

namespace {

AffineElementd st(double log_a, std::initializer_list<double> b) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(b.size()));
    Eigen::Index i = 0;
    for (double x : b) v(i++) = x;
    return AffineElementd::scaling_translation(log_a, v);
}

}  // namespace

TEST_SUITE("group-core") {

TEST_CASE("compose matches the group law on fixed elements") {
    const auto g = compose(st(std::log(2.0), {0, 0}), st(0.0, {1, 0}));
    CHECK(g.scale() == doctest::Approx(2.0));
    CHECK(g.translation()(0) == doctest::Approx(2.0));
    CHECK(g.translation()(1) == doctest::Approx(0.0));
    CHECK(g.rotation().isIdentity());

    const auto id = AffineElementd::identity(2);
    const auto h = st(0.3, {1.5, -2});
    CHECK(element_distance(compose(id, h), h) == 0.0);
    CHECK(element_distance(compose(h, id), h) == 0.0);
}

TEST_CASE("rotation enters the translation of a product") {
    // k = rotation by 90 degrees: (1, k, 0)(1, I, (1, 0)) = (1, k, (0, 1))
    Eigen::Matrix2d k;
    k << 0, -1, 1, 0;
    const AffineElementd r(0.0, k, Eigen::Vector2d::Zero());
    const auto g = compose(r, st(0.0, {1, 0}));
    CHECK(g.translation()(0) == doctest::Approx(0.0));
    CHECK(g.translation()(1) == doctest::Approx(1.0));
}

TEST_CASE("invert and act on fixed elements") {
    const auto g = invert(st(std::log(2.0), {0}));
    CHECK(g.scale() == doctest::Approx(0.5));
    CHECK(g.translation()(0) == 0.0);
    CHECK(element_distance(invert(AffineElementd::identity(3)), AffineElementd::identity(3)) == 0.0);

    const auto x = act(st(std::log(2.0), {1, 0}), Eigen::Vector2d(3, 0));
    CHECK(x(0) == doctest::Approx(7.0));
    CHECK(x(1) == doctest::Approx(0.0));
    const Eigen::Vector3d y(1, -2, 3);
    CHECK((act(AffineElementd::identity(3), y) - y).norm() == 0.0);
}

TEST_CASE("length proxy and S1 projection") {
    CHECK(length_proxy(AffineElementd::identity(2)) == 0.0);
    CHECK(length_proxy(st(1.0, {0})) == doctest::Approx(1.0));
    CHECK(length_proxy(st(0.0, {std::exp(1.0) - 1.0, 0.5})) == doctest::Approx(1.0));

    const auto p = project_s1(st(std::log(2.0), {0, 0}));
    CHECK(p.scale() == doctest::Approx(2.0));
    CHECK(p.shift == 1.0);
    const auto q = project_s1(st(0.0, {-3.0, 1.0}));
    CHECK(q.log_scale == 0.0);
    CHECK(q.shift == 3.0);
}

TEST_CASE("S1 companion recursion") {
    const S1Elementd g{std::log(2.0), 3.0};
    const auto r2 = compose(g, g);
    CHECK(r2.scale() == doctest::Approx(4.0));
    CHECK(r2.shift == doctest::Approx(9.0));
    CHECK(r2.act(1.0) == doctest::Approx(13.0));
}

TEST_CASE("dimension errors") {
    CHECK_THROWS_AS(compose(AffineElementd::identity(1), AffineElementd::identity(2)), DimensionMismatch);
    CHECK_THROWS_AS(act(AffineElementd::identity(2), Eigen::Vector3d::Zero()), DimensionMismatch);
    CHECK_THROWS_AS(AffineElementd::identity(AffineElementd::kMaxDim + 1), std::invalid_argument);
    CHECK_THROWS_AS(AffineElementd::identity(0), std::invalid_argument);
}

TEST_CASE("group laws on random triples" * doctest::description("10^4 samples per dimension")) {
    for (int d = 1; d <= 3; ++d) {
        CAPTURE(d);
        const auto spec = CourteousSpec::critical(d, 0.5, 1.0, d == 1 ? RotationLaw::Trivial : RotationLaw::Haar);
        Rng rng = make_stream(42, static_cast<std::uint64_t>(d));
        double assoc = 0, inv = 0, action = 0, logsum = 0;
        for (int i = 0; i < 10'000; ++i) {
            const auto g1 = sample(spec, rng), g2 = sample(spec, rng), g3 = sample(spec, rng);
            assoc = std::max(assoc, element_distance(compose(compose(g1, g2), g3), compose(g1, compose(g2, g3))));
            inv = std::max(inv, element_distance(compose(invert(g1), g1), AffineElementd::identity(d)));
            inv = std::max(inv, element_distance(compose(g1, invert(g1)), AffineElementd::identity(d)));
            Eigen::VectorXd x = Eigen::VectorXd::Random(d);
            action = std::max(action, linf_norm(act(compose(g1, g2), x) - act(g1, act(g2, x))));
            logsum = std::max(logsum, std::abs(compose(g1, g2).log_scale() - (g1.log_scale() + g2.log_scale())));
        }
        CHECK(assoc <= 1e-10);
        CHECK(inv <= 1e-10);
        CHECK(action <= 1e-10);
        CHECK(logsum == 0.0);
    }
}

TEST_CASE("long products stay orthogonal and finite") {
    const auto spec = CourteousSpec::critical(3, 0.5, 1.0, RotationLaw::Haar);
    Rng rng = make_stream(7, 0);
    AffineElementd g = AffineElementd::identity(3);
    double worst = 0.0;
    for (int t = 0; t < 5000; ++t) {
        g = compose(g, sample(spec, rng));
        worst = std::max(worst, orthogonality_defect(g.rotation()));
        CHECK(g.depth() < AffineElementd::kReorthonormalizePeriod);
    }
    CHECK(worst <= 1e-9);
    CHECK(std::isfinite(g.log_scale()));
}

TEST_CASE("nearest_orthogonal repairs a perturbed rotation") {
    Eigen::MatrixXd k(2, 2);
    k << std::cos(0.3), -std::sin(0.3), std::sin(0.3), std::cos(0.3);
    Eigen::MatrixXd noisy = k;
    noisy(0, 1) += 1e-6;
    const Eigen::MatrixXd fixed = nearest_orthogonal<double>(noisy);
    CHECK(orthogonality_defect(fixed) <= 1e-14);
    CHECK((fixed - k).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("float elements compose with the same law") {
    using Af = AffineElement<float>;
    const Af g = Af::scaling_translation(0.5f, Eigen::Vector2f(1.0f, 2.0f));
    const Af h = compose(g, invert(g));
    CHECK(element_distance(h, Af::identity(2)) <= 1e-6f);
}

}
