// Occupation-measure estimates of a mu-stationary Radon measure nu on R^d for
// the chain x -> psi.x, with stationarity and box-growth diagnostics.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "affwalk/group.hpp"
#include "affwalk/measure.hpp"
#include "affwalk/stats.hpp"

namespace affwalk {

/// Closed axis-aligned box [lower, upper].
struct Box {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    static Box centered(int dim, double radius);
    int dim() const { return static_cast<int>(lower.size()); }
    bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    /// The 2^d corner points.
    std::vector<Eigen::VectorXd> corners() const;
};

/// Weighted point cloud, normalized so the reference box [-r0, r0]^d has mass 1.
/// nu is only defined up to scale, hence the normalization.
class EmpiricalMeasure {
public:
    /// `points` is d x n. Non-finite points are dropped; they lie outside every
    /// bounded query region.
    EmpiricalMeasure(Eigen::MatrixXd points, Eigen::VectorXd weights, double ref_radius);
    /// Keeps the weights as given; the reference box may be empty.
    static EmpiricalMeasure raw(Eigen::MatrixXd points, Eigen::VectorXd weights, double ref_radius);

    int dim() const { return static_cast<int>(points_.rows()); }
    Eigen::Index size() const { return points_.cols(); }
    const Eigen::MatrixXd& points() const { return points_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    double ref_radius() const { return ref_radius_; }
    double total_mass() const { return weights_.sum(); }
    bool normalized() const { return normalized_; }

    /// Mass of [-z, z]^d.
    double box_mass(double z) const;
    double mass(const Box& box) const;
    /// Mass of g^-1.box = {x : g.x in box}.
    double preimage_mass(const AffineElementd& g, const Box& box) const;
    /// sum_i w_i phi(g.x_i) for the tent phi(y) = clamp(2 - 2 ||y||_inf, 0, 1).
    /// Always lies in [preimage_mass(g, B/2), preimage_mass(g, B)].
    double tent_integral(const AffineElementd& g) const;

private:
    EmpiricalMeasure(Eigen::MatrixXd points, Eigen::VectorXd weights, double ref_radius, bool normalize);
    void build_index();
    // d = 1 helpers on the sorted coordinate array.
    std::pair<Eigen::Index, Eigen::Index> index_range(double lo, double hi) const;
    std::pair<Eigen::Index, Eigen::Index> index_range(double lo, double hi, Eigen::Index first,
                                                      Eigen::Index last) const;
    std::pair<Eigen::Index, Eigen::Index> search_window(double v) const;
    double range_weight(Eigen::Index i, Eigen::Index j) const;
    double range_moment(Eigen::Index i, Eigen::Index j) const;
    std::pair<double, double> preimage_interval(const AffineElementd& g, double lo, double hi) const;

    Eigen::MatrixXd points_;
    Eigen::VectorXd weights_;
    double ref_radius_;
    bool normalized_ = true;
    std::vector<double> prefix_weight_;  // d = 1: over sorted points
    std::vector<double> moment_;         // d = 1: sum w x, anchored at the first x >= 0
    Eigen::Index zero_index_ = 0;
    std::vector<Eigen::Index> directory_;  // d = 1: first index per bucket of the order-preserving bit key
    std::vector<double> sorted_norms_;   // d > 1: ||x||_inf ascending
    std::vector<double> norm_prefix_weight_;
};

/// CSV with header x1..xd,weight, one row per stored point.
void write_csv(std::ostream& out, const EmpiricalMeasure& nu);

struct StationaryOptions {
    int steps = 1'000'000;
    int burn_in = -1;  // < 0 means steps / 10
    int chains = 16;
    double ref_radius = 1.0;
    std::uint64_t seed = 1;
    Eigen::VectorXd start;  // empty means the origin
    std::size_t point_cap = 10'000'000;
    std::size_t min_reference_visits = 100;
    int threads = 1;
};

class StarvedReference : public std::runtime_error {
public:
    explicit StarvedReference(std::size_t visits)
        : std::runtime_error("reference box received only " + std::to_string(visits) + " visits") {}
};

/// Pools post-burn-in states of independent chains x_{t+1} = psi_{t+1}.x_t.
/// When more than `point_cap` states would be kept, every chain is thinned by
/// the same stride and weights scale accordingly.
EmpiricalMeasure estimate_stationary(const CourteousSpec& spec, const StationaryOptions& options);

/// The pooled estimate together with raw (unnormalized) measures of
/// consecutive time blocks of every chain. A pooled ratio sum_k X_k / sum_k M_k
/// gets its standard error from the spread of the block terms.
struct BlockedStationary {
    std::shared_ptr<const EmpiricalMeasure> pooled;
    std::vector<std::shared_ptr<const EmpiricalMeasure>> blocks;
};

BlockedStationary estimate_stationary_blocked(const CourteousSpec& spec, const StationaryOptions& options,
                                              int blocks_per_chain);

/// Ratio estimate sum x_k / sum m_k with the batch-means standard error
/// sqrt(K / (K - 1) sum (x_k - r m_k)^2) / sum m_k.
Estimate ratio_estimate(std::span<const double> x, std::span<const double> m);

class ZeroMassBox : public std::invalid_argument {
public:
    ZeroMassBox() : std::invalid_argument("test box has zero estimated mass") {}
};

struct StationarityRow {
    Box box;
    double mass = 0.0;
    double convolved = 0.0;  // (mu * nu)(A) estimate
    double se = 0.0;
    double residual = 0.0;   // |convolved - mass| / mass
};

/// (mu * nu)(A) = E_g[nu(g^-1.A)] averaged over m fresh steps g.
std::vector<StationarityRow> stationarity_residual(const EmpiricalMeasure& nu, const CourteousSpec& spec,
                                                   const std::vector<Box>& boxes, int m, std::uint64_t seed);

struct GrowthFit {
    std::vector<double> z;
    std::vector<double> mass;
    double slope = 0.0;
    double intercept = 0.0;
    /// RMS residual of the fit mass ~ slope (1 + log z) + intercept over mean mass.
    double relative_residual = 0.0;
    /// max / min over the grid of mass(z) / (1 + log z).
    double sup_ratio = 0.0;
    double sup_ratio_threshold = 3.0;
    double residual_threshold = 0.25;
    bool log_growth = false;
};

GrowthFit growth_fit(const EmpiricalMeasure& nu, const std::vector<double>& z_grid);

/// z0 * ratio^k for k = 0 .. count-1.
std::vector<double> geometric_grid(double z0, double ratio, int count);

}  // namespace affwalk
