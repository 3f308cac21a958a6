#include "affwalk/measure.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace affwalk {

std::string to_string(MeasureFamily family) {
    switch (family) {
    case MeasureFamily::ContinuousCritical: return "continuous-critical";
    case MeasureFamily::DiscreteGeneratorUniform: return "discrete-generator-uniform";
    case MeasureFamily::PointMassMixture: return "point-mass-mixture";
    }
    return "unknown";
}

std::string to_string(RotationLaw law) {
    switch (law) {
    case RotationLaw::Trivial: return "trivial";
    case RotationLaw::SignedPermutation: return "signed-permutation";
    case RotationLaw::Haar: return "haar";
    }
    return "unknown";
}

MeasureFamily parse_family(const std::string& tag) {
    for (auto f : {MeasureFamily::ContinuousCritical, MeasureFamily::DiscreteGeneratorUniform,
                   MeasureFamily::PointMassMixture})
        if (to_string(f) == tag) return f;
    throw std::invalid_argument("unknown measure family: " + tag);
}

RotationLaw parse_rotation_law(const std::string& tag) {
    for (auto r : {RotationLaw::Trivial, RotationLaw::SignedPermutation, RotationLaw::Haar})
        if (to_string(r) == tag) return r;
    throw std::invalid_argument("unknown rotation law: " + tag);
}

void CourteousSpec::validate() const {
    if (dim < 1) throw std::invalid_argument("measure: dim must be positive");
    switch (family) {
    case MeasureFamily::ContinuousCritical:
        if (!(log_scale_sd >= 0.0) || !(translation_sd >= 0.0))
            throw std::invalid_argument("measure: standard deviations must be nonnegative");
        if (!std::isfinite(log_scale_mean) || !std::isfinite(translation_mean))
            throw std::invalid_argument("measure: means must be finite");
        break;
    case MeasureFamily::PointMassMixture:
        if (weights.size() != atoms.size())
            throw std::invalid_argument("measure: one weight per atom required");
        if (std::any_of(weights.begin(), weights.end(), [](double w) { return !(w >= 0.0); }) ||
            std::accumulate(weights.begin(), weights.end(), 0.0) <= 0.0)
            throw std::invalid_argument("measure: weights must be nonnegative with positive sum");
        [[fallthrough]];
    case MeasureFamily::DiscreteGeneratorUniform:
        if (atoms.empty()) throw std::invalid_argument("measure: no atoms");
        for (const auto& a : atoms) require_same_dim(dim, a.dim());
        break;
    }
}

namespace {

bool atoms_inverse_closed(const CourteousSpec& spec) {
    const auto& atoms = spec.atoms;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const auto inv = invert(atoms[i]);
        bool found = false;
        for (std::size_t j = 0; j < atoms.size() && !found; ++j) {
            const double wi = spec.weights.empty() ? 1.0 : spec.weights[i];
            const double wj = spec.weights.empty() ? 1.0 : spec.weights[j];
            found = element_distance(inv, atoms[j]) <= 1e-12 && std::abs(wi - wj) <= 1e-12;
        }
        if (!found) return false;
    }
    return true;
}

}  // namespace

bool CourteousSpec::declared_symmetric() const {
    if (symmetrize) return true;
    switch (family) {
    case MeasureFamily::ContinuousCritical:
        // psi^-1 = (1, k^T, -k^T b): same law when a == 1, b is centered and k^T ~ k.
        return log_scale_sd == 0.0 && log_scale_mean == 0.0 && translation_mean == 0.0;
    case MeasureFamily::DiscreteGeneratorUniform:
    case MeasureFamily::PointMassMixture: return atoms_inverse_closed(*this);
    }
    return false;
}

CourteousSpec CourteousSpec::critical(int dim, double log_scale_sd, double translation_sd, RotationLaw rotation) {
    CourteousSpec s;
    s.family = MeasureFamily::ContinuousCritical;
    s.dim = dim;
    s.log_scale_sd = log_scale_sd;
    s.translation_sd = translation_sd;
    s.rotation = rotation;
    s.symmetrize = true;
    return s;
}

CourteousSpec CourteousSpec::translation(int dim, double translation_sd) {
    CourteousSpec s = critical(dim, 0.0, translation_sd);
    s.symmetrize = false;
    return s;
}

CourteousSpec CourteousSpec::point_mass(const AffineElementd& g) {
    return mixture({g}, {1.0}, false);
}

CourteousSpec CourteousSpec::uniform_on(std::vector<AffineElementd> atoms, bool symmetrize) {
    CourteousSpec s;
    s.family = MeasureFamily::DiscreteGeneratorUniform;
    s.dim = atoms.empty() ? 1 : atoms.front().dim();
    s.atoms = std::move(atoms);
    s.symmetrize = symmetrize;
    return s;
}

CourteousSpec CourteousSpec::mixture(std::vector<AffineElementd> atoms, std::vector<double> weights,
                                     bool symmetrize) {
    CourteousSpec s;
    s.family = MeasureFamily::PointMassMixture;
    s.dim = atoms.empty() ? 1 : atoms.front().dim();
    s.atoms = std::move(atoms);
    s.weights = std::move(weights);
    s.symmetrize = symmetrize;
    return s;
}

AffineElementd::Matrix sample_rotation(RotationLaw law, int dim, Rng& rng) {
    switch (law) {
    case RotationLaw::Trivial: return AffineElementd::Matrix::Identity(dim, dim);
    case RotationLaw::SignedPermutation: {
        std::vector<int> perm(static_cast<std::size_t>(dim));
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = dim - 1; i > 0; --i) {
            const int j = std::uniform_int_distribution<int>(0, i)(rng);
            std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
        }
        AffineElementd::Matrix k = AffineElementd::Matrix::Zero(dim, dim);
        for (int i = 0; i < dim; ++i) k(i, perm[static_cast<std::size_t>(i)]) = uniform01(rng) < 0.5 ? -1.0 : 1.0;
        return k;
    }
    case RotationLaw::Haar: {
        // QR of a Gaussian matrix with the sign of diag(R) folded into Q.
        Eigen::MatrixXd z(dim, dim);
        for (int j = 0; j < dim; ++j)
            for (int i = 0; i < dim; ++i) z(i, j) = standard_normal(rng);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
        AffineElementd::Matrix q = qr.householderQ();
        const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
        for (int j = 0; j < dim; ++j)
            if (r(j, j) < 0) q.col(j) = -q.col(j);
        return q;
    }
    }
    return AffineElementd::Matrix::Identity(dim, dim);
}

AffineElementd sample(const CourteousSpec& spec, Rng& rng) {
    AffineElementd psi;
    switch (spec.family) {
    case MeasureFamily::ContinuousCritical: {
        const double log_a = spec.log_scale_mean + spec.log_scale_sd * standard_normal(rng);
        const AffineElementd::Matrix k = sample_rotation(spec.rotation, spec.dim, rng);
        AffineElementd::Vector b(spec.dim);
        for (int j = 0; j < spec.dim; ++j) b(j) = spec.translation_mean + spec.translation_sd * standard_normal(rng);
        psi = AffineElementd(log_a, k, b);
        break;
    }
    case MeasureFamily::DiscreteGeneratorUniform: {
        const auto i = std::uniform_int_distribution<std::size_t>(0, spec.atoms.size() - 1)(rng);
        psi = spec.atoms[i];
        break;
    }
    case MeasureFamily::PointMassMixture: {
        if (spec.atoms.size() == 1) {
            psi = spec.atoms.front();
        } else {
            std::discrete_distribution<std::size_t> pick(spec.weights.begin(), spec.weights.end());
            psi = spec.atoms[pick(rng)];
        }
        break;
    }
    }
    if (spec.symmetrize && uniform01(rng) < 0.5) return invert(psi);
    return psi;
}

namespace {

/// Standardized chi-square homogeneity statistic for two equal-size samples of
/// 2-d features, binned on a grid of pooled marginal quantiles.
double homogeneity_distance(const std::vector<std::array<double, 2>>& first,
                            const std::vector<std::array<double, 2>>& second, int bins = 8) {
    std::array<std::vector<double>, 2> edges;
    for (int f = 0; f < 2; ++f) {
        std::vector<double> pooled;
        pooled.reserve(first.size() + second.size());
        for (const auto& p : first) pooled.push_back(p[static_cast<std::size_t>(f)]);
        for (const auto& p : second) pooled.push_back(p[static_cast<std::size_t>(f)]);
        std::sort(pooled.begin(), pooled.end());
        for (int q = 1; q < bins; ++q)
            edges[static_cast<std::size_t>(f)].push_back(pooled[pooled.size() * static_cast<std::size_t>(q) /
                                                               static_cast<std::size_t>(bins)]);
        auto& e = edges[static_cast<std::size_t>(f)];
        e.erase(std::unique(e.begin(), e.end()), e.end());
    }
    const auto cell = [&](const std::array<double, 2>& p) {
        std::size_t idx = 0;
        for (std::size_t f = 0; f < 2; ++f) {
            const auto& e = edges[f];
            const auto pos = static_cast<std::size_t>(std::upper_bound(e.begin(), e.end(), p[f]) - e.begin());
            idx = idx * (e.size() + 1) + pos;
        }
        return idx;
    };
    const std::size_t cells = (edges[0].size() + 1) * (edges[1].size() + 1);
    std::vector<double> c1(cells, 0.0), c2(cells, 0.0);
    for (const auto& p : first) c1[cell(p)] += 1.0;
    for (const auto& p : second) c2[cell(p)] += 1.0;
    double chi2 = 0.0;
    int used = 0;
    for (std::size_t i = 0; i < cells; ++i) {
        const double tot = c1[i] + c2[i];
        if (tot <= 0) continue;
        ++used;
        chi2 += (c1[i] - c2[i]) * (c1[i] - c2[i]) / tot;
    }
    const int dof = used - 1;
    if (dof <= 0) return 0.0;
    return (chi2 - dof) / std::sqrt(2.0 * dof);
}

}  // namespace

SymmetryReport check_symmetry(const CourteousSpec& spec, std::size_t n, std::uint64_t seed, double threshold) {
    spec.validate();
    if (n < 1000) throw std::invalid_argument("check_symmetry: need at least 1000 samples");
    Rng forward = make_stream(seed, 0);
    Rng backward = make_stream(seed, 1);
    std::vector<std::array<double, 2>> f_norm, b_norm, f_coord, b_coord;
    f_norm.reserve(n);
    b_norm.reserve(n);
    f_coord.reserve(n);
    b_coord.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto psi = sample(spec, forward);
        const auto inv = invert(sample(spec, backward));
        f_norm.push_back({psi.log_scale(), linf_norm(psi.translation())});
        b_norm.push_back({inv.log_scale(), linf_norm(inv.translation())});
        f_coord.push_back({psi.log_scale(), psi.translation()(0)});
        b_coord.push_back({inv.log_scale(), inv.translation()(0)});
    }
    SymmetryReport report;
    report.samples = n;
    report.threshold = threshold;
    report.scale_norm_distance = homogeneity_distance(f_norm, b_norm);
    report.scale_coord_distance = homogeneity_distance(f_coord, b_coord);
    report.distance = std::max(report.scale_norm_distance, report.scale_coord_distance);
    report.pass = report.distance <= threshold;
    return report;
}

RecurrenceReport check_recurrence(const CourteousSpec& spec, std::size_t n, std::uint64_t seed) {
    spec.validate();
    if (n < 1000) throw std::invalid_argument("check_recurrence: need at least 1000 samples");
    Rng rng = make_stream(seed, 0);
    RunningStats log_a;
    std::size_t unit = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto psi = sample(spec, rng);
        log_a.add(psi.log_scale());
        if (psi.log_scale() == 0.0) ++unit;
    }
    RecurrenceReport r;
    r.samples = n;
    r.mean_log_scale = log_a.mean();
    r.se = log_a.standard_error();
    r.unit_scale_fraction = static_cast<double>(unit) / static_cast<double>(n);
    r.pass = std::abs(r.mean_log_scale) <= 3.0 * r.se && r.unit_scale_fraction < 1.0;
    return r;
}

Estimate moment3(const CourteousSpec& spec, std::size_t n, std::uint64_t seed) {
    spec.validate();
    if (n < 1000) throw std::invalid_argument("moment3: need at least 1000 samples");
    Rng rng = make_stream(seed, 0);
    RunningStats m;
    for (std::size_t i = 0; i < n; ++i) {
        const double l = length_proxy(sample(spec, rng));
        m.add(l * l * l);
    }
    return {m.mean(), m.standard_error()};
}

HittingSampler<AffineElementd> affine_hitting_sampler(const CourteousSpec& spec,
                                                       std::function<bool(const AffineElementd&)> member,
                                                       std::int64_t cap_bound) {
    spec.validate();
    HittingSampler<AffineElementd> s;
    s.identity = AffineElementd::identity(spec.dim);
    s.step = [spec](Rng& rng) { return sample(spec, rng); };
    s.multiply = [](const AffineElementd& x, const AffineElementd& y) { return compose(x, y); };
    s.member = std::move(member);
    s.cap_bound = cap_bound;
    return s;
}

}  // namespace affwalk
