// Finitely generated groups by normal forms: word-metric balls, growth
// classification, and finite-ball estimates of the dimension of harmonic
// functions of linear growth.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "affwalk/random.hpp"

namespace affwalk {

using GroupElement = std::vector<std::int64_t>;

struct GroupElementHash {
    std::size_t operator()(const GroupElement& x) const noexcept;
};

/// A group given by normal forms and a symmetric generating list.
///
/// free-abelian-d: integer d-tuples.
/// heisenberg: (a, b, c) with (a, b, c)(a', b', c') = (a + a', b + b', c + c' + a b').
/// bs12: (m, n, e) for the map x -> 2^m x + n / 2^e, with n odd or e = 0.
/// lamplighter: (cursor, lamp positions ascending); generators t, t^-1 and the
/// toggle at the cursor.
struct GroupPresentation {
    std::string name;
    GroupElement identity;
    std::vector<GroupElement> generators;
    std::function<GroupElement(const GroupElement&, const GroupElement&)> multiply;
    std::function<GroupElement(const GroupElement&)> inverse;

    static GroupPresentation free_abelian(int d);
    static GroupPresentation heisenberg();
    static GroupPresentation bs12();
    static GroupPresentation lamplighter();
    /// "free-abelian-<d>", "heisenberg", "bs12" or "lamplighter".
    static GroupPresentation by_name(const std::string& name);

    bool generators_symmetric() const;
};

class BudgetExceeded : public std::runtime_error {
public:
    explicit BudgetExceeded(std::size_t budget)
        : std::runtime_error("ball exceeds the budget of " + std::to_string(budget) + " elements") {}
};

/// Word-metric ball {x : |x| <= r}, enumerated breadth-first from the identity.
struct CayleyBall {
    int radius = 0;
    std::vector<GroupElement> elements;  // breadth-first order, so lengths are nondecreasing
    std::vector<int> word_length;
    std::unordered_map<GroupElement, std::size_t, GroupElementHash> index;
    /// neighbors[i][j] = index of elements[i] * generators[j], or -1 outside the ball.
    std::vector<std::vector<std::ptrdiff_t>> neighbors;

    std::size_t size() const { return elements.size(); }
    std::optional<std::size_t> find(const GroupElement& x) const;
    /// Number of elements with |x| <= r.
    std::size_t count_within(int r) const;
};

CayleyBall ball(const GroupPresentation& group, int r, std::size_t budget = 1'000'000);

enum class GrowthVerdict { Polynomial, Exponential, Inconclusive };
std::string to_string(GrowthVerdict verdict);

struct GrowthReport {
    std::vector<int> radii;
    std::vector<std::size_t> sizes;
    double degree = 0.0;       // slope of log |B_r| against log r
    double rate = 0.0;         // slope of log |B_r| against r
    double rss_polynomial = 0.0;
    double rss_exponential = 0.0;
    double margin = 2.0;       // the better fit must win by this RSS factor
    GrowthVerdict verdict = GrowthVerdict::Inconclusive;
};

/// Fits log |B_r| against log r and against r over the grid; the better fit wins
/// when its residual sum of squares is smaller by the margin factor.
GrowthReport growth_classify(const GroupPresentation& group, const std::vector<int>& radii,
                             std::size_t budget = 1'000'000, double margin = 2.0);

/// Finitely supported law on a group.
struct DiscreteMeasure {
    std::vector<GroupElement> support;
    std::vector<double> weights;

    static DiscreteMeasure uniform(std::vector<GroupElement> support);
    static DiscreteMeasure generator_uniform(const GroupPresentation& group);
    bool symmetric(const GroupPresentation& group, double tol = 1e-12) const;
};

class DegenerateMeasure : public std::invalid_argument {
public:
    explicit DegenerateMeasure(const std::string& why) : std::invalid_argument("degenerate measure: " + why) {}
};

/// Inner ball radius: a fixed r, or rOuter - k.
struct InnerRadius {
    enum class Kind { Fixed, Offset } kind = Kind::Fixed;
    int value = 1;

    static InnerRadius fixed(int r) { return {Kind::Fixed, r}; }
    static InnerRadius offset(int k) { return {Kind::Offset, k}; }
    int at(int r_outer) const { return kind == Kind::Fixed ? value : r_outer - value; }
};

struct HfDimensionRow {
    int r_outer = 0;
    int r_inner = 0;
    std::size_t ball_size = 0;
    std::size_t interior_size = 0;
    std::size_t boundary_size = 0;
    /// Restriction singular values, descending: sqrt of the generalized
    /// eigenvalues of (mean square on B_inner, mean square on B_outer).
    Eigen::VectorXd singular_values;
    /// kappa_i = -log sigma_i / log((1 + R) / (1 + r)): apparent growth degree.
    Eigen::VectorXd degrees;
    int dimension = 0;    // #{kappa <= degree_threshold}
    double gap = 0.0;     // sigma_dim / sigma_{dim + 1}; infinite when nothing follows
    bool stable = false;  // gap >= gap_threshold
    int eps_rank = 0;     // #{sigma >= eps * sigma_1}
};

struct HfOptions {
    InnerRadius inner = InnerRadius::fixed(1);
    double degree_threshold = 1.5;
    double gap_threshold = 10.0;
    double eps_rank = 1e-6;
    std::size_t budget = 1'000'000;
};

/// Harmonic functions on B_R: f(x) = sum_s mu(s) f(x s) at every x with
/// |x| <= R - l, where l is the largest word length in supp(mu). They are
/// parametrized by their values on the remaining boundary layer through the
/// Dirichlet solve. Each row reports the spectrum of the restriction to B_r
/// measured against the mean square on B_R, so a function of growth degree k
/// has sigma about ((1 + r) / (1 + R))^k.
HfDimensionRow hf_dimension_row(const GroupPresentation& group, const DiscreteMeasure& mu, int r_outer,
                                const HfOptions& options = {});

std::vector<HfDimensionRow> hf_dimension_estimate(const GroupPresentation& group, const DiscreteMeasure& mu,
                                                  const std::vector<int>& r_outer, const HfOptions& options = {});

/// True when every row has the same dimension and is stable.
bool stabilizes(const std::vector<HfDimensionRow>& table, int* dimension = nullptr);
/// True when the dimensions strictly increase along the table.
bool strictly_increasing(const std::vector<HfDimensionRow>& table);

/// G with a finite-index subgroup H, a coordinate map H -> presentation of H,
/// and the step law on G.
struct SubgroupFixture {
    GroupPresentation group;
    DiscreteMeasure mu;
    std::function<bool(const GroupElement&)> member;
    GroupPresentation subgroup;
    std::function<GroupElement(const GroupElement&)> to_subgroup;

    /// Integers with the simple walk; H = 2Z in the coordinate y / 2.
    static SubgroupFixture integers_even();
    /// Integers with the simple walk; H = G.
    static SubgroupFixture integers_whole();
};

/// Empirical hitting law mu_H in subgroup coordinates from n draws.
DiscreteMeasure empirical_hitting_law(const SubgroupFixture& fixture, std::size_t n, std::uint64_t seed,
                                      std::int64_t cap_bound = 1'000'000);

struct RestrictionReport {
    std::vector<HfDimensionRow> group_table;
    std::vector<HfDimensionRow> subgroup_table;
    DiscreteMeasure subgroup_law;
    bool pass = false;  // dimensions agree at every radius
};

/// Compares hf_dimension_estimate on (G, mu) with (H, mu_H). With `law_override`
/// set, that law replaces the estimated mu_H.
RestrictionReport restriction_isomorphism_check(const SubgroupFixture& fixture, const std::vector<int>& r_outer,
                                                const HfOptions& options, std::size_t hitting_samples,
                                                std::uint64_t seed,
                                                const std::optional<DiscreteMeasure>& law_override = std::nullopt);

}  // namespace affwalk
