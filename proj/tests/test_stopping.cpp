#include "doctest.h"

#include "affwalk/stopping.hpp"

using namespace affwalk;

namespace {

EmpiricalMeasure cloud(std::uint64_t seed) {
    Rng rng = make_stream(seed, 0);
    Eigen::MatrixXd p(1, 4000);
    for (Eigen::Index i = 0; i < p.cols(); ++i) p(0, i) = 10.0 * standard_normal(rng);
    return EmpiricalMeasure(p, Eigen::VectorXd::Ones(p.cols()), 1.0);
}

}  // namespace

TEST_SUITE("stopping-lab") {

TEST_CASE("box entry times") {
    for (int d = 1; d <= 3; ++d) {
        const auto traj = run_walk(CourteousSpec::critical(d), 10, 1);
        CHECK(first_entry_box(traj, Box::centered(d, 1.0), Box::centered(d, 2.0), 10) == 0);
    }
    const auto half = AffineElementd::scaling_translation(std::log(0.5), Eigen::VectorXd::Zero(2));
    const auto contraction = run_walk(CourteousSpec::point_mass(half), 5, 1);
    CHECK(first_entry_box(contraction, Box::centered(2, 1.0), Box::centered(2, 0.6), 5) == 1);
    CHECK_FALSE(first_entry_box(contraction, Box::centered(2, 1.0), Box::centered(2, 0.6), 0).has_value());
    CHECK(maps_into(half, Box::centered(2, 1.0), Box::centered(2, 0.5)));
    CHECK_FALSE(maps_into(half, Box::centered(2, 1.0), Box::centered(2, 0.49)));
}

TEST_CASE("V_z entry times") {
    CompanionTrajectory id{{S1Elementd{0.0, 0.0}}};
    CHECK(first_entry_vz(id, VzRegion(1.0, 2.0), 10) == 0);

    const auto psi = AffineElementd::scaling_translation(std::log(0.5), Eigen::VectorXd::Constant(1, 1.0));
    const auto comp = companion(run_walk(CourteousSpec::point_mass(psi), 3, 1));
    CHECK(first_entry_vz(comp, VzRegion(4.0, 2.0), 3) == 1);

    const VzRegion v(4.0, 2.0);
    CHECK(v.contains(S1Elementd{std::log(0.125), 2.0}));
    CHECK_FALSE(v.contains(S1Elementd{std::log(0.12), 0.0}));
    CHECK_FALSE(v.contains(S1Elementd{std::log(0.5), 2.01}));
    CHECK_THROWS(VzRegion(0.5, 2.0));
    CHECK_THROWS(VzRegion(2.0, 1.0));
}

TEST_CASE("optional stopping inequality") {
    const auto nu = cloud(3);
    SUBCASE("identity law reduces to monotonicity") {
        const auto r = ost_check(nu, CourteousSpec::identity(1), Box::centered(1, 1), Box::centered(1, 2), 50, 10, 1);
        CHECK(r.hit_probability == 1.0);
        CHECK(r.margin == doctest::Approx(nu.box_mass(2) - nu.box_mass(1)));
        CHECK(r.pass);
    }
    SUBCASE("zero horizon with U outside V") {
        const auto r = ost_check(nu, CourteousSpec::critical(1), Box::centered(1, 8), Box::centered(1, 4), 100, 0, 1);
        CHECK(r.hits == 0);
        CHECK(r.pass);
    }
    SUBCASE("zero-mass U") {
        const Box empty{Eigen::VectorXd::Constant(1, 1e6), Eigen::VectorXd::Constant(1, 2e6)};
        CHECK_THROWS_AS(ost_check(nu, CourteousSpec::critical(1), empty, Box::centered(1, 1), 10, 10, 1), ZeroMassBox);
    }
}

TEST_CASE("delta fit") {
    const std::vector<double> grid{2, 4, 8, 16, 32, 64, 128, 256};
    const auto fit = delta_fit(CourteousSpec::critical(1), grid, 4.0, 300, 5000, 9, 4);
    REQUIRE(fit.rows.size() == grid.size());
    for (const auto& row : fit.rows) {
        CHECK(fit.delta <= row.scaled + 1e-15);
        CHECK(row.scaled == doctest::Approx(row.probability * (1 + std::log(row.z))));
    }
    const auto longer = delta_fit(CourteousSpec::critical(1), grid, 4.0, 300, 10'000, 9, 4);
    CHECK(longer.delta >= fit.delta);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(longer.rows[i].hits >= fit.rows[i].hits);

    const auto threaded = delta_fit(CourteousSpec::critical(1), grid, 4.0, 300, 5000, 9, 1);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(threaded.rows[i].hits == fit.rows[i].hits);
}

TEST_CASE("box is entered no later than the companion region") {
    for (double z : {2.0, 16.0}) {
        const auto rep = compare_stopping_times(CourteousSpec::critical(1), z, 4.0, 200, 5000, 4, 4);
        CHECK(rep.violations == 0);
        CHECK(rep.hits_uv >= rep.hits_vz);
    }
}

}
