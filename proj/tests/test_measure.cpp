#include "doctest.h"

#include <map>

#include "affwalk/measure.hpp"
#include "affwalk/stats.hpp"

using namespace affwalk;

namespace {

AffineElementd s1(double a, double b) { return AffineElementd::scaling_translation(std::log(a), Eigen::VectorXd::Constant(1, b)); }

}  // namespace

TEST_SUITE("measure-kit") {

TEST_CASE("generator-uniform law stays on its support") {
    const std::vector<AffineElementd> atoms{s1(2, 0), s1(0.5, 0), s1(1, 1), s1(1, -1)};
    const auto spec = CourteousSpec::uniform_on(atoms);
    Rng rng = make_stream(3, 0);
    std::vector<int> counts(atoms.size(), 0);
    for (int i = 0; i < 4000; ++i) {
        const auto g = sample(spec, rng);
        int match = -1;
        for (std::size_t k = 0; k < atoms.size(); ++k)
            if (element_distance(g, atoms[k]) == 0.0) match = static_cast<int>(k);
        REQUIRE(match >= 0);
        ++counts[static_cast<std::size_t>(match)];
    }
    for (int c : counts) CHECK(c > 800);
    CHECK(spec.declared_symmetric());
}

TEST_CASE("critical law has centred log-scale") {
    const auto rec = check_recurrence(CourteousSpec::critical(1), 100'000, 5);
    CHECK(std::abs(rec.mean_log_scale) <= 3 * rec.se);
    CHECK(rec.pass);
}

TEST_CASE("recurrence audit rejects constant scalings") {
    CHECK_FALSE(check_recurrence(CourteousSpec::point_mass(s1(2, 0)), 1000, 1).pass);
    const auto two = check_recurrence(CourteousSpec::point_mass(s1(2, 0)), 1000, 1);
    CHECK(two.mean_log_scale == doctest::Approx(std::log(2.0)));
    CHECK_FALSE(check_recurrence(CourteousSpec::translation(1), 1000, 1).pass);
}

TEST_CASE("symmetry audit") {
    CHECK(check_symmetry(CourteousSpec::identity(2), 1000, 1).pass);
    CHECK(check_symmetry(CourteousSpec::critical(1), 100'000, 2).pass);
    CHECK(check_symmetry(CourteousSpec::critical(2, 0.5, 1.0, RotationLaw::SignedPermutation), 100'000, 2).pass);

    auto shifted = CourteousSpec::translation(1);
    shifted.translation_mean = 1.0;
    shifted.symmetrize = false;
    CHECK_FALSE(check_symmetry(shifted, 100'000, 3).pass);

    // asymmetric base, symmetrized: log a(psi) and log a(psi^-1) agree
    auto drift = CourteousSpec::critical(1);
    drift.log_scale_mean = 0.7;
    drift.symmetrize = true;
    CHECK(check_symmetry(drift, 100'000, 4).pass);
}

TEST_CASE("third moment oracles") {
    CHECK(moment3(CourteousSpec::identity(1), 1000, 1).value == 0.0);
    CHECK(moment3(CourteousSpec::point_mass(s1(std::exp(1.0), 0)), 1000, 1).value == doctest::Approx(1.0));
    const auto m = moment3(CourteousSpec::critical(1), 100'000, 9);
    CHECK(std::isfinite(m.value));
    CHECK(m.value > 0.0);
}

TEST_CASE("sampling is reproducible") {
    const auto spec = CourteousSpec::critical(3, 0.5, 1.0, RotationLaw::Haar);
    Rng a = make_stream(11, 4), b = make_stream(11, 4);
    for (int i = 0; i < 100; ++i) CHECK(element_distance(sample(spec, a), sample(spec, b)) == 0.0);
}

TEST_CASE("rotation laws produce orthogonal matrices") {
    Rng rng = make_stream(1, 1);
    for (auto law : {RotationLaw::Trivial, RotationLaw::SignedPermutation, RotationLaw::Haar}) {
        for (int d = 1; d <= 4; ++d) {
            const auto k = sample_rotation(law, d, rng);
            CHECK(orthogonality_defect(k) <= 1e-12);
        }
    }
    CHECK(parse_rotation_law(to_string(RotationLaw::Haar)) == RotationLaw::Haar);
    CHECK(parse_family(to_string(MeasureFamily::PointMassMixture)) == MeasureFamily::PointMassMixture);
}

TEST_CASE("invalid specs are rejected") {
    auto bad = CourteousSpec::critical(1);
    bad.log_scale_sd = -1.0;
    CHECK_THROWS(bad.validate());
    CHECK_THROWS(CourteousSpec::mixture({s1(1, 1)}, {0.5, 0.5}).validate());
}

TEST_CASE("hitting the whole group stops after one step") {
    const auto spec = CourteousSpec::critical(1);
    const auto sampler = affine_hitting_sampler(spec, [](const AffineElementd&) { return true; });
    Rng rng = make_stream(2, 0), ref = make_stream(2, 0);
    for (int i = 0; i < 50; ++i) {
        const auto draw = hitting_measure(sampler, rng);
        CHECK(draw.time == 1);
        CHECK(element_distance(draw.value, sample(spec, ref)) == 0.0);
    }
}

TEST_CASE("hitting law of the even integers") {
    HittingSampler<long> sampler{0, [](Rng& r) { return uniform01(r) < 0.5 ? 1L : -1L; },
                                 [](long x, long y) { return x + y; }, [](long x) { return x % 2 == 0; }, 1000};
    Rng rng = make_stream(17, 0);
    std::map<long, std::size_t> counts;
    const std::size_t n = 100'000;
    for (std::size_t i = 0; i < n; ++i) {
        const auto draw = hitting_measure(sampler, rng);
        CHECK(draw.time == 2);
        ++counts[draw.value];
    }
    CHECK(counts.size() == 3);
    const std::map<long, double> exact{{-2, 0.25}, {0, 0.5}, {2, 0.25}};
    for (const auto& [x, p] : exact) {
        const auto est = proportion(counts[x], n);
        CHECK(std::abs(est.value - p) <= 3 * est.se);
    }
    // Y and Y^-1 have the same law
    const auto plus = proportion(counts[2], n), minus = proportion(counts[-2], n);
    CHECK(std::abs(plus.value - minus.value) <= 3 * std::hypot(plus.se, minus.se));
}

TEST_CASE("hitting cap") {
    HittingSampler<long> sampler{0, [](Rng&) { return 1L; }, [](long x, long y) { return x + y; },
                                 [](long x) { return x < 0; }, 10};
    Rng rng = make_stream(1, 0);
    CHECK_THROWS_AS(hitting_measure(sampler, rng), CapExceeded);
}

}
