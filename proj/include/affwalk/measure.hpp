// Step distributions on S_d, sampling, and empirical audits of the assumptions a
// recurrent similarity walk needs (symmetry, E[log a] = 0, third moment).
#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "affwalk/group.hpp"
#include "affwalk/random.hpp"
#include "affwalk/stats.hpp"

namespace affwalk {

enum class MeasureFamily { ContinuousCritical, DiscreteGeneratorUniform, PointMassMixture };
enum class RotationLaw { Trivial, SignedPermutation, Haar };

std::string to_string(MeasureFamily family);
std::string to_string(RotationLaw law);
MeasureFamily parse_family(const std::string& tag);
RotationLaw parse_rotation_law(const std::string& tag);

/// Declarative description of a step law mu on S_d.
///
/// ContinuousCritical: log a ~ N(log_scale_mean, log_scale_sd^2), k from
/// `rotation`, b_j ~ N(translation_mean, translation_sd^2) i.i.d. With
/// log_scale_sd = 0 this is a pure translation walk.
/// DiscreteGeneratorUniform: uniform on `atoms`.
/// PointMassMixture: atoms with `weights`.
/// With `symmetrize` set, each draw is replaced by its inverse with probability 1/2,
/// which makes the law symmetric whatever the base.
///
/// Adaptedness of the built-ins: the continuous family has a density in (log a, b),
/// so no proper closed subgroup of the group it generates carries full mass. The
/// discrete families are adapted to the subgroup their atoms generate.
struct CourteousSpec {
    MeasureFamily family = MeasureFamily::ContinuousCritical;
    int dim = 1;
    double log_scale_mean = 0.0;
    double log_scale_sd = 0.5;
    RotationLaw rotation = RotationLaw::Trivial;
    double translation_mean = 0.0;
    double translation_sd = 1.0;
    std::vector<AffineElementd> atoms;
    std::vector<double> weights;
    bool symmetrize = true;

    void validate() const;

    /// True when mu(A) = mu(A^-1) holds by construction.
    bool declared_symmetric() const;

    static CourteousSpec critical(int dim, double log_scale_sd = 0.5, double translation_sd = 1.0,
                                  RotationLaw rotation = RotationLaw::Trivial);
    static CourteousSpec translation(int dim, double translation_sd = 1.0);
    static CourteousSpec point_mass(const AffineElementd& g);
    static CourteousSpec identity(int dim) { return point_mass(AffineElementd::identity(dim)); }
    static CourteousSpec uniform_on(std::vector<AffineElementd> atoms, bool symmetrize = false);
    static CourteousSpec mixture(std::vector<AffineElementd> atoms, std::vector<double> weights,
                                 bool symmetrize = false);
};

/// Draws one step psi ~ mu. Deterministic given the stream state.
AffineElementd sample(const CourteousSpec& spec, Rng& rng);

AffineElementd::Matrix sample_rotation(RotationLaw law, int dim, Rng& rng);

struct SymmetryReport {
    std::size_t samples = 0;
    /// Max over the compared feature pairs of the standardized chi-square
    /// homogeneity statistic (chi2 - dof) / sqrt(2 dof).
    double distance = 0.0;
    double threshold = 5.0;
    double scale_norm_distance = 0.0;   // features (log a, ||b||_inf)
    double scale_coord_distance = 0.0;  // features (log a, b_1)
    bool pass = true;
};

SymmetryReport check_symmetry(const CourteousSpec& spec, std::size_t n, std::uint64_t seed,
                              double threshold = 5.0);

struct RecurrenceReport {
    std::size_t samples = 0;
    double mean_log_scale = 0.0;
    double se = 0.0;
    double unit_scale_fraction = 0.0;
    bool pass = false;
};

/// Passes iff |mean log a| <= 3 SE and P[a = 1] < 1 empirically.
RecurrenceReport check_recurrence(const CourteousSpec& spec, std::size_t n, std::uint64_t seed);

/// E[(|log a| + log(1 + ||b||))^3] with its standard error.
Estimate moment3(const CourteousSpec& spec, std::size_t n, std::uint64_t seed);

class CapExceeded : public std::runtime_error {
public:
    explicit CapExceeded(std::int64_t cap)
        : std::runtime_error("hitting time exceeded cap of " + std::to_string(cap) + " steps") {}
};

/// Walk X_t = X_{t-1} s_t from the identity, stopped at the first t >= 1 with
/// X_t in the subgroup H. The stopped position is a draw from the hitting measure.
template <typename Element>
struct HittingSampler {
    Element identity;
    std::function<Element(Rng&)> step;
    std::function<Element(const Element&, const Element&)> multiply;
    std::function<bool(const Element&)> member;
    std::int64_t cap_bound = 1'000'000;
};

template <typename Element>
struct HittingDraw {
    Element value;
    std::int64_t time = 0;
};

template <typename Element>
HittingDraw<Element> hitting_measure(const HittingSampler<Element>& sampler, Rng& rng) {
    Element x = sampler.identity;
    for (std::int64_t t = 1; t <= sampler.cap_bound; ++t) {
        x = sampler.multiply(x, sampler.step(rng));
        if (sampler.member(x)) return {std::move(x), t};
    }
    throw CapExceeded(sampler.cap_bound);
}

/// Hitting sampler for a step law on S_d.
HittingSampler<AffineElementd> affine_hitting_sampler(const CourteousSpec& spec,
                                                       std::function<bool(const AffineElementd&)> member,
                                                       std::int64_t cap_bound = 1'000'000);

}  // namespace affwalk
