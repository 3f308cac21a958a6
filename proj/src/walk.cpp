#include "affwalk/walk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "affwalk/parallel.hpp"

namespace affwalk {

Walker::Walker(const CourteousSpec& spec, Rng rng)
    : spec_(spec), rng_(std::move(rng)), position_(AffineElementd::identity(spec.dim)) {
    spec.validate();
}

AffineElementd Walker::step() {
    AffineElementd psi = sample(spec_, rng_);
    position_ = compose(position_, psi);
    ++time_;
    return psi;
}

Trajectory run_walk(const CourteousSpec& spec, int steps, std::uint64_t seed, bool keep_increments) {
    if (steps < 1) throw std::invalid_argument("run_walk: steps must be >= 1");
    Walker walker(spec, make_stream(seed, 0));
    Trajectory traj;
    traj.seed = seed;
    traj.products.reserve(static_cast<std::size_t>(steps) + 1);
    traj.products.push_back(walker.position());
    if (keep_increments) traj.increments.reserve(static_cast<std::size_t>(steps));
    for (int t = 0; t < steps; ++t) {
        auto psi = walker.step();
        if (keep_increments) traj.increments.push_back(std::move(psi));
        traj.products.push_back(walker.position());
    }
    return traj;
}

CompanionTrajectory companion(const Trajectory& traj) {
    if (!traj.has_increments()) throw MissingIncrements();
    CompanionTrajectory comp;
    comp.products.reserve(traj.products.size());
    S1Elementd r{0.0, 0.0};
    comp.products.push_back(r);
    for (const auto& psi : traj.increments) {
        r = compose(r, project_s1(psi));
        comp.products.push_back(r);
    }
    return comp;
}

double tail_oscillation(std::span<const double> values, std::size_t from) {
    if (from >= values.size()) return 0.0;
    const auto [lo, hi] = std::minmax_element(values.begin() + static_cast<std::ptrdiff_t>(from), values.end());
    return *hi - *lo;
}

AlongWalk evaluate_along_walk(const GroupFunction& f, const Trajectory& traj, const AffineElementd& start,
                              double tolerance) {
    AlongWalk out;
    out.tolerance = tolerance;
    out.values.reserve(traj.products.size());
    for (const auto& phi : traj.products) out.values.push_back(f(compose(start, phi)));
    out.oscillation = tail_oscillation(out.values, static_cast<std::size_t>(traj.steps() / 2));
    out.converges = out.oscillation < tolerance;
    return out;
}

ConvergenceSummary walk_convergence(const GroupFunction& f, const CourteousSpec& spec, int steps, int trajectories,
                                    std::uint64_t seed, const AffineElementd& start, double tolerance, int threads) {
    if (steps < 1 || trajectories < 1) throw std::invalid_argument("walk_convergence: counts must be positive");
    ConvergenceSummary summary;
    summary.trajectories = trajectories;
    summary.oscillations.assign(static_cast<std::size_t>(trajectories), 0.0);
    parallel_for(static_cast<std::size_t>(trajectories), threads, [&](std::size_t i) {
        Walker walker(spec, make_stream(trajectory_seed(seed, i), 0));
        const bool from_identity = element_distance(start, AffineElementd::identity(spec.dim)) == 0.0;
        const int from = steps / 2;
        double lo = 0.0, hi = 0.0;
        bool first = true;
        for (int t = 0; t <= steps; ++t) {
            if (t > 0) walker.step();
            if (t < from) continue;
            const double v = from_identity ? f(walker.position()) : f(compose(start, walker.position()));
            if (first) {
                lo = hi = v;
                first = false;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        summary.oscillations[i] = hi - lo;
    });
    summary.converging = static_cast<int>(std::count_if(summary.oscillations.begin(), summary.oscillations.end(),
                                                        [&](double o) { return o < tolerance; }));
    summary.fraction = static_cast<double>(summary.converging) / static_cast<double>(trajectories);
    return summary;
}

double Arc::haar_mass() const { return std::clamp(length / (2.0 * std::numbers::pi), 0.0, 1.0); }

bool Arc::contains(double theta) const {
    if (length >= 2.0 * std::numbers::pi) return true;
    double offset = std::fmod(theta - begin, 2.0 * std::numbers::pi);
    if (offset < 0) offset += 2.0 * std::numbers::pi;
    return offset < length;
}

Estimate occupation_frequency(const CircleWalkSpec& spec, int steps, std::uint64_t seed,
                              const std::function<bool(double)>& target) {
    if (steps < 1) throw std::invalid_argument("occupation_frequency: steps must be >= 1");
    Rng rng = make_stream(seed, 0);
    const double two_pi = 2.0 * std::numbers::pi;
    double theta = 0.0;
    std::vector<double> hits;
    hits.reserve(static_cast<std::size_t>(steps));
    for (int t = 0; t < steps; ++t) {
        double delta = uniform01(rng) < 0.5 ? spec.angle : -spec.angle;
        if (spec.jitter > 0) delta += spec.jitter * standard_normal(rng);
        theta = std::fmod(theta + delta, two_pi);
        if (theta < 0) theta += two_pi;
        hits.push_back(target(theta) ? 1.0 : 0.0);
    }
    return batch_means(hits);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const GroupFunction& f) {
    const auto precision = out.precision(17);
    out << "t,log_a,b_norm" << (f ? ",f" : "") << '\n';
    for (std::size_t t = 0; t < traj.products.size(); ++t) {
        const auto& g = traj.products[t];
        out << t << ',' << g.log_scale() << ',' << linf_norm(g.translation());
        if (f) out << ',' << f(g);
        out << '\n';
    }
    out.precision(precision);
}

ControlReport control_check(const CourteousSpec& spec, int trajectories, int steps, const std::vector<double>& radii,
                            std::uint64_t seed, double slack, int threads) {
    spec.validate();
    std::vector<ControlReport> per(static_cast<std::size_t>(std::max(trajectories, 0)));
    parallel_for(per.size(), threads, [&](std::size_t i) {
        Walker walker(spec, make_stream(trajectory_seed(seed, i), 0));
        Rng pts = make_stream(trajectory_seed(seed, i), 1);
        std::vector<Eigen::VectorXd> xs;
        for (double r : radii) {
            Eigen::VectorXd x(spec.dim);
            for (int j = 0; j < spec.dim; ++j) x(j) = 2.0 * uniform01(pts) - 1.0;
            const double n = linf_norm(x);
            xs.push_back(n > 0 ? Eigen::VectorXd(x * (r / n)) : x);
        }
        ControlReport& rep = per[i];
        S1Elementd r{0.0, 0.0};
        for (int t = 1; t <= steps; ++t) {
            r = compose(r, project_s1(walker.step()));
            for (const auto& x : xs) {
                const double lhs = linf_norm(act(walker.position(), x));
                const double rhs = r.scale() * linf_norm(x) + r.shift;
                const double excess = (lhs - rhs) / (1.0 + rhs);
                rep.worst_excess = std::max(rep.worst_excess, excess);
                ++rep.checks;
                if (excess > slack) ++rep.violations;
            }
        }
    });
    ControlReport total;
    total.trajectories = trajectories;
    total.steps = steps;
    for (const auto& rep : per) {
        total.checks += rep.checks;
        total.violations += rep.violations;
        total.worst_excess = std::max(total.worst_excess, rep.worst_excess);
    }
    return total;
}

Estimate occupation_frequency(const CircleWalkSpec& spec, int steps, std::uint64_t seed, const Arc& target) {
    return occupation_frequency(spec, steps, seed, [&](double theta) { return target.contains(theta); });
}

}  // namespace affwalk
