#include "doctest.h"

#include "affwalk/harmonic.hpp"

using namespace affwalk;

namespace {

std::shared_ptr<HarmonicEstimate> small_estimate() {
    static const auto h = [] {
        StationaryOptions o;
        o.steps = 200'000;
        o.chains = 8;
        o.seed = 77;
        o.threads = 4;
        return build_harmonic(CourteousSpec::critical(1), o, 4);
    }();
    return h;
}

AffineElementd st(double log_a, double b) { return AffineElementd::scaling_translation(log_a, Eigen::VectorXd::Constant(1, b)); }

}  // namespace

TEST_SUITE("harmonic-lab") {

TEST_CASE("bump function") {
    const BumpFunction phi;
    CHECK(phi(0.0) == 1.0);
    CHECK(phi(0.5) == 1.0);
    CHECK(phi(0.75) == doctest::Approx(0.5));
    CHECK(phi(1.0) == 0.0);
    CHECK(phi(Eigen::Vector2d(0.1, -0.8)) == doctest::Approx(0.4));
}

TEST_CASE("value at the identity is the tent mass near the origin") {
    const auto h = small_estimate();
    const auto id = AffineElementd::identity(1);
    CHECK((*h)(id) == doctest::Approx(h->measure().tent_integral(id)));
    CHECK(h->evaluate(id).se > 0.0);
    CHECK(h->block_reference_mass().size() == 32);
}

TEST_CASE("sandwich and positivity hold exactly") {
    const auto h = small_estimate();
    Rng rng = make_stream(4, 0);
    for (int i = 0; i < 2000; ++i) {
        const auto g = st(8.0 * uniform01(rng) - 4.0, 40.0 * uniform01(rng) - 20.0);
        const auto s = h->sandwich(g);
        CHECK(s.holds());
        CHECK(s.value == (*h)(g));
    }
}

TEST_CASE("evaluation is cached and deterministic") {
    const auto h = small_estimate();
    const auto g = st(0.3, 1.7);
    const double first = (*h)(g);
    const auto size = h->cache_size();
    CHECK((*h)(g) == first);
    CHECK(h->cache_size() == size);
}

TEST_CASE("laplacian of an identity step is zero") {
    const GroupFunction f = [](const AffineElementd& g) { return g.scale() + g.translation()(0); };
    const auto r = laplacian_residual(f, CourteousSpec::identity(1), st(0.2, 3.0), 1000, 1);
    CHECK(r.value == 0.0);
    CHECK(r.se == 0.0);
    CHECK(r.within(3.0));
}

TEST_CASE("the scaling probe is not harmonic") {
    // E[a] = exp(sd^2 / 2) for log a ~ N(0, sd^2)
    const auto spec = CourteousSpec::critical(1);
    const double mean_a = std::exp(0.125);
    const GroupFunction f = [](const AffineElementd& g) { return g.scale(); };
    for (double log_a : {-1.0, 0.0, 2.0}) {
        const auto g = st(log_a, 0.5);
        const auto r = laplacian_residual(f, spec, g, 1000, 2);
        CHECK(std::abs(r.value - std::exp(log_a) * (1.0 - mean_a)) <= 4 * r.se);
        CHECK_FALSE(r.within(3.0));
    }
}

TEST_CASE("estimated h is harmonic within its error") {
    const auto h = small_estimate();
    const auto spec = CourteousSpec::critical(1);
    Rng rng = make_stream(12, 0);
    int within = 0;
    for (int i = 0; i < 20; ++i) {
        const auto g = st(6.0 * uniform01(rng) - 3.0, 10.0 * uniform01(rng) - 5.0);
        const auto r = laplacian_residual(*h, spec, g, 1000, derive_seed(3, i));
        CHECK(r.se_measure > 0.0);
        CHECK(r.se == doctest::Approx(std::hypot(r.se_sampling, r.se_measure)));
        within += r.within(3.0);
    }
    CHECK(within >= 18);
}

TEST_CASE("elements of a given length") {
    Rng rng = make_stream(1, 0);
    for (int d = 1; d <= 3; ++d)
        for (double r : {0.5, 3.0, 12.0})
            for (const auto& g : elements_of_length(d, r, 10, rng)) CHECK(length_proxy(g) == doctest::Approx(r));
}

TEST_CASE("growth profile verdicts") {
    const std::vector<double> radii{1, 2, 4, 8, 12, 16, 20, 25, 30};
    const auto lin = growth_profile([](const AffineElementd& g) { return 1.0 + length_proxy(g); }, 1, radii, 8, 1);
    CHECK(lin.linear);
    CHECK(lin.rows.size() == radii.size());
    const auto expo =
        growth_profile([](const AffineElementd& g) { return std::exp(std::abs(g.log_scale())); }, 1, radii, 8, 1);
    CHECK_FALSE(expo.linear);

    // point mass far from every g.B: h vanishes on the sweep
    Eigen::MatrixXd p(1, 2);
    p << 0.0, 1e30;
    const auto far = std::make_shared<const EmpiricalMeasure>(EmpiricalMeasure::raw(p, Eigen::Vector2d(0, 1), 1.0));
    const HarmonicEstimate h0(far);
    const auto flat = growth_profile([&](const AffineElementd& g) { return h0(g); }, 1, radii, 8, 1);
    for (const auto& row : flat.rows) CHECK(row.ratio == 0.0);

    const auto profile = growth_profile([&](const AffineElementd& g) { return (*small_estimate())(g); }, 1, radii, 16, 4);
    CHECK(profile.linear);
}

TEST_CASE("martingale diagnostics") {
    const auto h = small_estimate();
    const auto nu = std::shared_ptr<const EmpiricalMeasure>(h, &h->measure());
    const auto process = box_process(nu, Box::centered(1, 1.0));
    CHECK(process(AffineElementd::identity(1)) == doctest::Approx(1.0));

    MartingaleOptions o;
    o.times = {10, 100};
    o.paths = 50;
    o.check_convergence = false;
    const auto trivial = martingale_diag(process, CourteousSpec::identity(1), o, 1);
    for (const auto& row : trivial.one_step) {
        CHECK(row.mean_diff == 0.0);
        CHECK(row.pass);
    }

    o.paths = 200;
    o.check_convergence = true;
    o.trajectories = 100;
    o.horizon = 20'000;
    o.threads = 4;
    const auto rep = martingale_diag(process, CourteousSpec::critical(1), o, 2);
    CHECK(rep.one_step_pass);
    CHECK(rep.convergence.trajectories == 100);
    CHECK(rep.convergence.fraction > 0.5);
}

}
