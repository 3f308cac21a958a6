// Stopping times of the walk: T_{U,V} = inf{t : Phi_t.U in V} on S_d and
// T_{V_z} = inf{t : R_t in V_z} on the companion S_1 walk, with the
// optional-stopping inequality and the delta / (1 + log z) hitting bound.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "affwalk/group.hpp"
#include "affwalk/measure.hpp"
#include "affwalk/stationary.hpp"
#include "affwalk/walk.hpp"

namespace affwalk {

/// g.U subset of V, decided on the 2^d corners of U. The image of a box under a
/// similarity is the convex hull of its corner images and V is convex.
bool maps_into(const AffineElementd& g, const Box& u, const Box& v);

/// First t <= horizon with Phi_t.U in V; nullopt when not hit.
std::optional<int> first_entry_box(const Trajectory& traj, const Box& u, const Box& v, int horizon);

/// V_z = {(a, b) : 1 / (k0 z) <= a <= k0 / z, b <= k0} in S_1.
struct VzRegion {
    double z = 1.0;
    double k0 = 4.0;

    VzRegion(double z, double k0);
    bool contains(const S1Elementd& r) const;
};

/// First t <= horizon with R_t in V_z; nullopt when not hit.
std::optional<int> first_entry_vz(const CompanionTrajectory& comp, const VzRegion& region, int horizon);

struct OstReport {
    int trials = 0;
    int hits = 0;
    double hit_probability = 0.0;  // P[T_{U,V} <= horizon]
    double mass_u = 0.0;
    double mass_v = 0.0;
    double margin = 0.0;  // nu(V) - P nu(U)
    double se = 0.0;
    bool pass = false;  // margin >= -2 se
};

/// nu(V) >= P[T_{U,V} < inf] nu(U) with P replaced by its finite-horizon estimate.
OstReport ost_check(const EmpiricalMeasure& nu, const CourteousSpec& spec, const Box& u, const Box& v, int trials,
                    int horizon, std::uint64_t seed, int threads = 1);

struct DeltaRow {
    double z = 0.0;
    int trials = 0;
    int hits = 0;
    double probability = 0.0;
    double se = 0.0;
    double scaled = 0.0;  // P (1 + log z)
    double scaled_se = 0.0;
};

struct DeltaFit {
    std::vector<DeltaRow> rows;
    double k0 = 4.0;
    int horizon = 0;
    double delta = 0.0;  // min over z of P (1 + log z)
    double delta_se = 0.0;
    bool separated = false;  // delta > 2 delta_se
    /// Weighted least-squares slope of log(P (1 + log z)) against log z.
    double trend_slope = 0.0;
    double trend_se = 0.0;
    bool no_trend = false;  // slope >= -2 se
};

/// Estimates P[T_{V_z} <= horizon] for every z of the grid from one set of
/// companion walks. b(R_t) never decreases, so a walk stops once b(R_t) > k0.
DeltaFit delta_fit(const CourteousSpec& spec, const std::vector<double>& z_grid, double k0, int trials, int horizon,
                   std::uint64_t seed, int threads = 1);

struct StoppingOrderReport {
    int trajectories = 0;
    int hits_vz = 0;
    int hits_uv = 0;
    int violations = 0;  // trajectories with T_{V_z} < T_{U,V}
};

/// Compares T_{V_z} with T_{U,V} for U = [-z, z]^d and V = [-2 k0, 2 k0]^d on the
/// same walks.
StoppingOrderReport compare_stopping_times(const CourteousSpec& spec, double z, double k0, int trajectories,
                                           int horizon, std::uint64_t seed, int threads = 1);

}  // namespace affwalk
