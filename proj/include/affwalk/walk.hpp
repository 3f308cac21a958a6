// mu-random walks on S_d: partial products Phi_t = psi_1 ... psi_t, the companion
// S_1 products R_t = g_1 ... g_t, and functionals evaluated along walks.
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "affwalk/group.hpp"
#include "affwalk/measure.hpp"

namespace affwalk {

using GroupFunction = std::function<double(const AffineElementd&)>;

struct Trajectory {
    std::uint64_t seed = 0;
    /// Phi_0 .. Phi_T, Phi_0 = identity.
    std::vector<AffineElementd> products;
    /// psi_1 .. psi_T; empty when the walk was run without keeping increments.
    std::vector<AffineElementd> increments;

    int steps() const { return static_cast<int>(products.size()) - 1; }
    bool has_increments() const { return !products.empty() && increments.size() + 1 == products.size(); }
};

struct CompanionTrajectory {
    /// R_0 .. R_T with R_0 = (a = 1, b = 0).
    std::vector<S1Elementd> products;
};

/// Streaming walk: holds Phi_t only.
class Walker {
public:
    Walker(const CourteousSpec& spec, Rng rng);

    const AffineElementd& position() const { return position_; }
    int time() const { return time_; }
    /// Draws psi_{t+1}, sets Phi_{t+1} = Phi_t psi_{t+1}, and returns psi_{t+1}.
    AffineElementd step();
    Rng& rng() { return rng_; }

private:
    CourteousSpec spec_;
    Rng rng_;
    AffineElementd position_;
    int time_ = 0;
};

Trajectory run_walk(const CourteousSpec& spec, int steps, std::uint64_t seed, bool keep_increments = true);

/// Stream for trajectory `index` of an experiment seeded with `master_seed`.
inline std::uint64_t trajectory_seed(std::uint64_t master_seed, std::uint64_t index) {
    return derive_seed(master_seed, index);
}

class MissingIncrements : public std::logic_error {
public:
    MissingIncrements() : std::logic_error("trajectory was run without keeping its increments") {}
};

CompanionTrajectory companion(const Trajectory& traj);

/// CSV with header t,log_a,b_norm and a trailing f column when f is given.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const GroupFunction& f = {});

/// max_{t,s >= from} |f_t - f_s|.
double tail_oscillation(std::span<const double> values, std::size_t from);

struct AlongWalk {
    std::vector<double> values;
    double oscillation = 0.0;
    double tolerance = 1e-3;
    bool converges = true;
};

/// f(start Phi_t) for t = 0..T with the tail-oscillation verdict at horizon T/2.
AlongWalk evaluate_along_walk(const GroupFunction& f, const Trajectory& traj, const AffineElementd& start,
                              double tolerance = 1e-3);

struct ConvergenceSummary {
    int trajectories = 0;
    int converging = 0;
    double fraction = 0.0;
    std::vector<double> oscillations;
};

/// Runs `trajectories` independent walks of length `steps` and applies the
/// tail-oscillation verdict to f(start Phi_t). Only the tail t >= steps/2 is
/// evaluated, which is all the verdict needs.
ConvergenceSummary walk_convergence(const GroupFunction& f, const CourteousSpec& spec, int steps, int trajectories,
                                    std::uint64_t seed, const AffineElementd& start, double tolerance = 1e-3,
                                    int threads = 1);

struct ControlReport {
    int trajectories = 0;
    int steps = 0;
    long checks = 0;
    long violations = 0;
    double worst_excess = 0.0;  // max(0, (lhs - rhs) / (1 + rhs))
    bool pass() const { return violations == 0; }
};

/// Checks ||Phi_t.x||_inf <= a(R_t) ||x||_inf + b(R_t) for t = 1..steps along
/// independent walks, with one test point of each norm in `radii` per walk.
/// A check fails when lhs > rhs + slack (1 + rhs).
ControlReport control_check(const CourteousSpec& spec, int trajectories, int steps, const std::vector<double>& radii,
                            std::uint64_t seed, double slack = 1e-9, int threads = 1);

/// Walk on the circle group SO(2) = R / 2 pi Z. Each step rotates by +angle or
/// -angle with probability 1/2 each, plus N(0, jitter^2). With angle / pi
/// irrational the closed subgroup generated is the whole circle.
struct CircleWalkSpec {
    double angle = 1.0;
    double jitter = 0.0;
};

struct Arc {
    double begin = 0.0;  // radians in [0, 2 pi)
    double length = 0.0; // radians, <= 2 pi; wraps around
    double haar_mass() const;
    bool contains(double theta) const;
};

/// Fraction of t in 1..T with X_t in the arc, and its batch-means standard error.
Estimate occupation_frequency(const CircleWalkSpec& spec, int steps, std::uint64_t seed, const Arc& target);

/// Occupation of an arbitrary target set of the circle (angles in [0, 2 pi)).
Estimate occupation_frequency(const CircleWalkSpec& spec, int steps, std::uint64_t seed,
                              const std::function<bool(double)>& target);

}  // namespace affwalk
