// The positive harmonic function h(g) = int phi(g.x) dnu(x) built from an
// empirical stationary measure, with harmonicity, growth and martingale checks.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "affwalk/group.hpp"
#include "affwalk/measure.hpp"
#include "affwalk/stationary.hpp"
#include "affwalk/stats.hpp"
#include "affwalk/walk.hpp"

namespace affwalk {

/// phi(x) = clamp(2 - 2 ||x||_inf, 0, 1): 1 on B/2, 0 outside B.
struct BumpFunction {
    double inner_radius = 0.5;
    double outer_radius = 1.0;

    double operator()(double linf) const { return std::clamp(2.0 - 2.0 * linf, 0.0, 1.0); }
    template <typename Derived>
    double operator()(const Eigen::MatrixBase<Derived>& x) const {
        return (*this)(linf_norm(x));
    }
};

struct SandwichBounds {
    double lower = 0.0;  // nu(g^-1.(B/2))
    double value = 0.0;  // h(g)
    double upper = 0.0;  // nu(g^-1.B)
    bool holds() const { return lower <= value && value <= upper && value >= 0.0; }
};

struct HarmonicRecord {
    double value = 0.0;
    double se = 0.0;  // block batch-means error of nu-hat; 0 without blocks
};

/// h evaluated against an empirical measure. Evaluation is deterministic and
/// read-only over the measure. Evaluated records are cached under a mutex up
/// to `cache_capacity` entries; later evaluations are computed but not stored.
///
/// `blocks` are optional raw measures of disjoint time blocks of the chains that
/// make up `measure`. They only feed standard errors.
class HarmonicEstimate {
public:
    using MeasurePtr = std::shared_ptr<const EmpiricalMeasure>;

    explicit HarmonicEstimate(MeasurePtr measure, std::vector<MeasurePtr> blocks = {},
                              std::size_t cache_capacity = 1 << 16);

    const EmpiricalMeasure& measure() const { return *measure_; }
    const BumpFunction& bump() const { return bump_; }
    int dim() const { return measure_->dim(); }
    const std::vector<MeasurePtr>& blocks() const { return blocks_; }
    /// Raw reference-box mass of every block.
    const std::vector<double>& block_reference_mass() const { return block_ref_mass_; }

    double operator()(const AffineElementd& g) const;
    HarmonicRecord evaluate(const AffineElementd& g) const;
    SandwichBounds sandwich(const AffineElementd& g) const;
    std::size_t cache_size() const;

private:
    using Key = std::vector<double>;
    static Key key_of(const AffineElementd& g);

    MeasurePtr measure_;
    std::vector<MeasurePtr> blocks_;
    std::vector<double> block_ref_mass_;
    BumpFunction bump_;
    std::size_t cache_capacity_;
    mutable std::mutex mutex_;
    mutable std::map<Key, HarmonicRecord> cache_;
};

/// Estimates nu and wraps it. With blocks_per_chain > 0 every chain is also cut
/// into that many consecutive time blocks for standard errors.
std::shared_ptr<HarmonicEstimate> build_harmonic(const CourteousSpec& spec, const StationaryOptions& options,
                                                 int blocks_per_chain = 0);

struct LaplacianResidual {
    double value = 0.0;  // f(g) - mean_j f(g s_j)
    double se = 0.0;
    double se_sampling = 0.0;  // from the m fresh steps
    double se_measure = 0.0;   // block batch-means error of nu-hat
    int samples = 0;
    bool within(double k = 3.0) const { return std::abs(value) <= k * se; }
};

/// f(g) - (1/m) sum_j f(g s_j) with s_j ~ mu and its Monte Carlo standard error.
/// With zero spread the residual is exact and se is 0.
LaplacianResidual laplacian_residual(const GroupFunction& f, const CourteousSpec& spec, const AffineElementd& g,
                                     int m, std::uint64_t seed);

/// Residual of h itself. When h carries blocks, the same steps s_j are replayed
/// against every block and the block batch-means error of the ratio enters the
/// standard error: se^2 = se_sampling^2 + se_measure^2.
LaplacianResidual laplacian_residual(const HarmonicEstimate& h, const CourteousSpec& spec, const AffineElementd& g,
                                     int m, std::uint64_t seed);

struct GrowthProfileRow {
    double radius = 0.0;
    double sup = 0.0;
    double ratio = 0.0;  // sup / (1 + r)
    int evaluated = 0;
};

struct GrowthProfile {
    std::vector<GrowthProfileRow> rows;
    double max_ratio = 0.0;
    double median_ratio = 0.0;
    double factor = 3.0;
    bool linear = false;
};

/// Elements with length_proxy exactly r: a = e^{+-r} with b = 0, a = 1 with
/// b = +-(e^r - 1) e_j, and `random_per_radius` random splits of r between
/// |log a| and log(1 + ||b||).
std::vector<AffineElementd> elements_of_length(int dim, double r, int random_per_radius, Rng& rng);

/// sup f over elements_of_length(r) for each r. LINEAR iff max ratio <= 3 median ratio.
GrowthProfile growth_profile(const GroupFunction& f, int dim, const std::vector<double>& radii, int random_per_radius,
                             std::uint64_t seed);

/// A positive martingale candidate along the walk: value of M at Phi_t.
using WalkProcess = std::function<double(const AffineElementd&)>;

/// M(Phi) = nu(Phi^-1.V).
WalkProcess box_process(std::shared_ptr<const EmpiricalMeasure> nu, Box v);

struct OneStepRow {
    int time = 0;
    double mean_diff = 0.0;  // mean over paths of (mean_j M(Phi_t s_j) - M(Phi_t))
    double se = 0.0;
    bool pass = false;
};

struct MartingaleReport {
    std::vector<OneStepRow> one_step;
    bool one_step_pass = true;
    ConvergenceSummary convergence;
    double required_fraction = 0.95;
    bool convergence_pass = false;
};

struct MartingaleOptions {
    std::vector<int> times{10, 100, 1000};
    int paths = 200;              // walks per checked time
    int refresh = 64;             // fresh increments per path
    int trajectories = 1000;      // convergence verdict
    int horizon = 10'000;
    double tolerance = 1e-3;
    double required_fraction = 0.95;
    bool check_convergence = true;
    int threads = 1;
};

/// One-step check: E[M(Phi_t s) | Phi_t] = M(Phi_t) at each sampled t within 3 SE,
/// plus the tail-oscillation convergence verdict of M(Phi_t).
MartingaleReport martingale_diag(const WalkProcess& process, const CourteousSpec& spec,
                                 const MartingaleOptions& options, std::uint64_t seed);

}  // namespace affwalk
