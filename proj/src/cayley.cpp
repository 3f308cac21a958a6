#include "affwalk/cayley.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "affwalk/measure.hpp"
#include "affwalk/stats.hpp"

namespace affwalk {

std::size_t GroupElementHash::operator()(const GroupElement& x) const noexcept {
    std::uint64_t h = 0x84222325cbf29ce4ULL ^ x.size();
    for (auto v : x) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    return static_cast<std::size_t>(h);
}

namespace {

constexpr std::int64_t kDyadicLimit = std::int64_t{1} << 61;

std::int64_t checked_shift(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > 60 || std::abs(n) >= (kDyadicLimit >> k))
        throw std::overflow_error("bs12: dyadic numerator out of range");
    return n * (std::int64_t{1} << k);
}

// n / 2^e in lowest terms with e >= 0.
void reduce(std::int64_t& n, std::int64_t& e) {
    if (n == 0) {
        e = 0;
        return;
    }
    while (e > 0 && n % 2 == 0) {
        n /= 2;
        --e;
    }
}

// 2^m * (n / 2^e) as a reduced dyadic.
std::pair<std::int64_t, std::int64_t> scale_dyadic(std::int64_t n, std::int64_t e, std::int64_t m) {
    if (m >= 0) {
        const std::int64_t drop = std::min(m, e);
        e -= drop;
        n = checked_shift(n, m - drop);
    } else {
        e -= m;
    }
    reduce(n, e);
    return {n, e};
}

std::pair<std::int64_t, std::int64_t> add_dyadic(std::int64_t n1, std::int64_t e1, std::int64_t n2, std::int64_t e2) {
    const std::int64_t e = std::max(e1, e2);
    std::int64_t n = checked_shift(n1, e - e1) + checked_shift(n2, e - e2);
    std::int64_t out_e = e;
    reduce(n, out_e);
    return {n, out_e};
}

GroupElement toggle(const GroupElement& lamps_from, std::size_t offset, std::vector<std::int64_t> extra) {
    // symmetric difference of lamps_from[offset..] and extra, both ascending
    GroupElement out;
    std::set_symmetric_difference(lamps_from.begin() + static_cast<std::ptrdiff_t>(offset), lamps_from.end(),
                                  extra.begin(), extra.end(), std::back_inserter(out));
    return out;
}

}  // namespace

GroupPresentation GroupPresentation::free_abelian(int d) {
    if (d < 1) throw std::invalid_argument("free_abelian: d must be positive");
    GroupPresentation g;
    g.name = "free-abelian-" + std::to_string(d);
    g.identity.assign(static_cast<std::size_t>(d), 0);
    for (int i = 0; i < d; ++i)
        for (int sign : {1, -1}) {
            GroupElement e = g.identity;
            e[static_cast<std::size_t>(i)] = sign;
            g.generators.push_back(e);
        }
    g.multiply = [](const GroupElement& x, const GroupElement& y) {
        GroupElement z(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] + y[i];
        return z;
    };
    g.inverse = [](const GroupElement& x) {
        GroupElement z(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) z[i] = -x[i];
        return z;
    };
    return g;
}

GroupPresentation GroupPresentation::heisenberg() {
    GroupPresentation g;
    g.name = "heisenberg";
    g.identity = {0, 0, 0};
    g.generators = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
    g.multiply = [](const GroupElement& x, const GroupElement& y) {
        return GroupElement{x[0] + y[0], x[1] + y[1], x[2] + y[2] + x[0] * y[1]};
    };
    g.inverse = [](const GroupElement& x) { return GroupElement{-x[0], -x[1], -x[2] + x[0] * x[1]}; };
    return g;
}

GroupPresentation GroupPresentation::bs12() {
    GroupPresentation g;
    g.name = "bs12";
    g.identity = {0, 0, 0};
    g.generators = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
    // (x y)(t) = x(y(t)) = 2^{m1} (2^{m2} t + q2) + q1
    g.multiply = [](const GroupElement& x, const GroupElement& y) {
        const auto [sn, se] = scale_dyadic(y[1], y[2], x[0]);
        const auto [n, e] = add_dyadic(sn, se, x[1], x[2]);
        return GroupElement{x[0] + y[0], n, e};
    };
    g.inverse = [](const GroupElement& x) {
        const auto [n, e] = scale_dyadic(-x[1], x[2], -x[0]);
        return GroupElement{-x[0], n, e};
    };
    return g;
}

GroupPresentation GroupPresentation::lamplighter() {
    GroupPresentation g;
    g.name = "lamplighter";
    g.identity = {0};
    g.generators = {{1}, {-1}, {0, 0}};
    // (c1, L1)(c2, L2) = (c1 + c2, L1 xor (L2 + c1))
    g.multiply = [](const GroupElement& x, const GroupElement& y) {
        std::vector<std::int64_t> shifted(y.begin() + 1, y.end());
        for (auto& p : shifted) p += x[0];
        GroupElement z{x[0] + y[0]};
        const GroupElement lamps = toggle(x, 1, std::move(shifted));
        z.insert(z.end(), lamps.begin(), lamps.end());
        return z;
    };
    g.inverse = [](const GroupElement& x) {
        GroupElement z{-x[0]};
        for (std::size_t i = 1; i < x.size(); ++i) z.push_back(x[i] - x[0]);
        return z;
    };
    return g;
}

GroupPresentation GroupPresentation::by_name(const std::string& name) {
    if (name == "heisenberg") return heisenberg();
    if (name == "bs12") return bs12();
    if (name == "lamplighter") return lamplighter();
    const std::string prefix = "free-abelian-";
    if (name.rfind(prefix, 0) == 0) {
        const std::string rest = name.substr(prefix.size());
        if (!rest.empty() && rest.size() <= 2 && std::all_of(rest.begin(), rest.end(), ::isdigit))
            return free_abelian(std::stoi(rest));
    }
    throw std::invalid_argument("unknown group: " + name);
}

bool GroupPresentation::generators_symmetric() const {
    for (const auto& s : generators)
        if (std::find(generators.begin(), generators.end(), inverse(s)) == generators.end()) return false;
    return true;
}

std::optional<std::size_t> CayleyBall::find(const GroupElement& x) const {
    if (auto it = index.find(x); it != index.end()) return it->second;
    return std::nullopt;
}

std::size_t CayleyBall::count_within(int r) const {
    return static_cast<std::size_t>(std::upper_bound(word_length.begin(), word_length.end(), r) - word_length.begin());
}

CayleyBall ball(const GroupPresentation& group, int r, std::size_t budget) {
    if (r < 0) throw std::invalid_argument("ball: negative radius");
    CayleyBall b;
    b.radius = r;
    b.elements.push_back(group.identity);
    b.word_length.push_back(0);
    b.index.emplace(group.identity, 0);
    const std::size_t ng = group.generators.size();
    for (std::size_t head = 0; head < b.elements.size(); ++head) {
        std::vector<std::ptrdiff_t> nb(ng, -1);
        const int len = b.word_length[head];
        for (std::size_t j = 0; j < ng; ++j) {
            GroupElement y = group.multiply(b.elements[head], group.generators[j]);
            if (auto it = b.index.find(y); it != b.index.end()) {
                nb[j] = static_cast<std::ptrdiff_t>(it->second);
            } else if (len < r) {
                if (b.elements.size() >= budget) throw BudgetExceeded(budget);
                nb[j] = static_cast<std::ptrdiff_t>(b.elements.size());
                b.index.emplace(y, b.elements.size());
                b.elements.push_back(std::move(y));
                b.word_length.push_back(len + 1);
            }
        }
        b.neighbors.push_back(std::move(nb));
    }
    return b;
}

std::string to_string(GrowthVerdict verdict) {
    switch (verdict) {
        case GrowthVerdict::Polynomial: return "POLYNOMIAL";
        case GrowthVerdict::Exponential: return "EXPONENTIAL";
        case GrowthVerdict::Inconclusive: break;
    }
    return "INCONCLUSIVE";
}

GrowthReport growth_classify(const GroupPresentation& group, const std::vector<int>& radii, std::size_t budget,
                             double margin) {
    if (radii.size() < 3 || !std::is_sorted(radii.begin(), radii.end()) || radii.front() < 1)
        throw std::invalid_argument("growth_classify: need at least 3 increasing positive radii");
    GrowthReport report;
    report.radii = radii;
    report.margin = margin;
    const CayleyBall b = ball(group, radii.back(), budget);
    std::vector<double> log_r, r, log_size;
    for (int radius : radii) {
        const std::size_t n = b.count_within(radius);
        report.sizes.push_back(n);
        log_r.push_back(std::log(radius));
        r.push_back(radius);
        log_size.push_back(std::log(static_cast<double>(n)));
    }
    const LineFit poly = fit_line(log_r, log_size);
    const LineFit expo = fit_line(r, log_size);
    report.degree = poly.slope;
    report.rate = expo.slope;
    report.rss_polynomial = poly.rss;
    report.rss_exponential = expo.rss;
    if (poly.rss * margin < expo.rss)
        report.verdict = GrowthVerdict::Polynomial;
    else if (expo.rss * margin < poly.rss)
        report.verdict = GrowthVerdict::Exponential;
    return report;
}

DiscreteMeasure DiscreteMeasure::uniform(std::vector<GroupElement> support) {
    if (support.empty()) throw DegenerateMeasure("empty support");
    DiscreteMeasure mu;
    mu.weights.assign(support.size(), 1.0 / static_cast<double>(support.size()));
    mu.support = std::move(support);
    return mu;
}

DiscreteMeasure DiscreteMeasure::generator_uniform(const GroupPresentation& group) {
    return uniform(group.generators);
}

bool DiscreteMeasure::symmetric(const GroupPresentation& group, double tol) const {
    for (std::size_t i = 0; i < support.size(); ++i) {
        const GroupElement inv = group.inverse(support[i]);
        double w = 0.0;
        for (std::size_t j = 0; j < support.size(); ++j)
            if (support[j] == inv) w += weights[j];
        if (std::abs(w - weights[i]) > tol) return false;
    }
    return true;
}

namespace {

constexpr int kSupportSearchRadius = 8;

// Largest word length over supp(mu); checks that supp(mu) generates the group.
int support_length(const GroupPresentation& group, const DiscreteMeasure& mu, std::size_t budget) {
    if (mu.support.empty() || mu.support.size() != mu.weights.size()) throw DegenerateMeasure("bad support");
    double total = 0.0;
    for (double w : mu.weights) {
        if (!(w >= 0.0)) throw DegenerateMeasure("negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DegenerateMeasure("weights do not sum to 1");

    const CayleyBall near = ball(group, kSupportSearchRadius, budget);
    int ell = 0;
    for (std::size_t i = 0; i < mu.support.size(); ++i) {
        if (mu.weights[i] == 0.0) continue;
        const auto k = near.find(mu.support[i]);
        if (!k) throw DegenerateMeasure("support element beyond radius " + std::to_string(kSupportSearchRadius));
        ell = std::max(ell, near.word_length[*k]);
    }
    if (ell == 0) throw DegenerateMeasure("supported on the identity");

    // Products of at most kSupportSearchRadius steps must reach every generator.
    std::unordered_map<GroupElement, int, GroupElementHash> seen{{group.identity, 0}};
    std::deque<GroupElement> queue{group.identity};
    while (!queue.empty()) {
        GroupElement x = std::move(queue.front());
        queue.pop_front();
        const int depth = seen[x];
        if (depth == kSupportSearchRadius) continue;
        for (std::size_t i = 0; i < mu.support.size(); ++i) {
            if (mu.weights[i] == 0.0) continue;
            GroupElement y = group.multiply(x, mu.support[i]);
            if (!near.find(y) || seen.count(y)) continue;
            seen.emplace(y, depth + 1);
            queue.push_back(std::move(y));
        }
    }
    for (const auto& s : group.generators)
        if (!seen.count(s)) throw DegenerateMeasure("not adapted: a generator is not reached by the support");
    return ell;
}

}  // namespace

HfDimensionRow hf_dimension_row(const GroupPresentation& group, const DiscreteMeasure& mu, int r_outer,
                                const HfOptions& options) {
    const int ell = support_length(group, mu, options.budget);
    const int r_inner = options.inner.at(r_outer);
    if (r_inner < 0 || r_inner >= r_outer) throw std::invalid_argument("hf_dimension: need 0 <= rInner < rOuter");
    if (r_outer - ell < 0) throw std::invalid_argument("hf_dimension: rOuter smaller than the step length");

    const CayleyBall b = ball(group, r_outer, options.budget);
    const auto n = static_cast<Eigen::Index>(b.size());
    const auto ni = static_cast<Eigen::Index>(b.count_within(r_outer - ell));
    const Eigen::Index nb = n - ni;

    HfDimensionRow row;
    row.r_outer = r_outer;
    row.r_inner = r_inner;
    row.ball_size = b.size();
    row.interior_size = static_cast<std::size_t>(ni);
    row.boundary_size = static_cast<std::size_t>(nb);

    // Breadth-first order puts the interior first, so element k is interior
    // iff k < ni. Constraint rows: f(x) - sum_s mu(s) f(x s) = 0.
    std::vector<Eigen::Triplet<double>> tii, tib;
    for (Eigen::Index k = 0; k < ni; ++k) {
        const auto& x = b.elements[static_cast<std::size_t>(k)];
        tii.emplace_back(k, k, 1.0);
        for (std::size_t j = 0; j < mu.support.size(); ++j) {
            if (mu.weights[j] == 0.0) continue;
            const auto col = b.find(group.multiply(x, mu.support[j]));
            if (!col) throw std::logic_error("hf_dimension: step leaves the ball");
            const auto c = static_cast<Eigen::Index>(*col);
            if (c < ni)
                tii.emplace_back(k, c, -mu.weights[j]);
            else
                tib.emplace_back(k, c - ni, -mu.weights[j]);
        }
    }
    Eigen::SparseMatrix<double> lii(ni, ni), lib(ni, nb);
    lii.setFromTriplets(tii.begin(), tii.end());
    lib.setFromTriplets(tib.begin(), tib.end());

    // Interior values of the harmonic extension of each boundary indicator.
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(ni, nb);
    if (ni > 0) {
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(lii);
        if (lu.info() != Eigen::Success) throw std::runtime_error("hf_dimension: singular interior system");
        x = lu.solve(-Eigen::MatrixXd(lib));
    }

    Eigen::MatrixXd g_outer = x.transpose() * x;
    g_outer.diagonal().array() += 1.0;
    g_outer /= static_cast<double>(n);

    const auto n_inner = static_cast<Eigen::Index>(b.count_within(r_inner));
    const Eigen::Index inner_interior = std::min(n_inner, ni);
    Eigen::MatrixXd g_inner = x.topRows(inner_interior).transpose() * x.topRows(inner_interior);
    for (Eigen::Index k = inner_interior; k < n_inner; ++k) g_inner(k - ni, k - ni) += 1.0;
    g_inner /= static_cast<double>(n_inner);

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> pencil(g_inner, g_outer, Eigen::EigenvaluesOnly);
    if (pencil.info() != Eigen::Success) throw std::runtime_error("hf_dimension: eigensolver failed");
    const Eigen::VectorXd ev = pencil.eigenvalues().reverse();
    row.singular_values = ev.cwiseMax(0.0).cwiseSqrt();

    const double scale = std::log((1.0 + r_outer) / (1.0 + r_inner));
    row.degrees.resize(row.singular_values.size());
    for (Eigen::Index i = 0; i < row.degrees.size(); ++i) {
        const double s = row.singular_values(i);
        row.degrees(i) = s > 0 ? -std::log(s) / scale : std::numeric_limits<double>::infinity();
        if (row.degrees(i) <= options.degree_threshold) ++row.dimension;
    }
    if (row.dimension == 0) {
        row.gap = 0.0;
    } else if (row.dimension >= row.singular_values.size() || row.singular_values(row.dimension) == 0.0) {
        row.gap = std::numeric_limits<double>::infinity();
    } else {
        row.gap = row.singular_values(row.dimension - 1) / row.singular_values(row.dimension);
    }
    row.stable = row.gap >= options.gap_threshold;
    const double top = row.singular_values.size() > 0 ? row.singular_values(0) : 0.0;
    row.eps_rank = static_cast<int>((row.singular_values.array() >= options.eps_rank * top).count());
    return row;
}

std::vector<HfDimensionRow> hf_dimension_estimate(const GroupPresentation& group, const DiscreteMeasure& mu,
                                                  const std::vector<int>& r_outer, const HfOptions& options) {
    std::vector<HfDimensionRow> table;
    for (int r : r_outer) table.push_back(hf_dimension_row(group, mu, r, options));
    return table;
}

bool stabilizes(const std::vector<HfDimensionRow>& table, int* dimension) {
    if (table.empty()) return false;
    const int dim = table.front().dimension;
    if (dimension) *dimension = dim;
    return std::all_of(table.begin(), table.end(),
                       [dim](const HfDimensionRow& row) { return row.dimension == dim && row.stable; });
}

bool strictly_increasing(const std::vector<HfDimensionRow>& table) {
    for (std::size_t i = 1; i < table.size(); ++i)
        if (table[i].dimension <= table[i - 1].dimension) return false;
    return !table.empty();
}

SubgroupFixture SubgroupFixture::integers_even() {
    SubgroupFixture f;
    f.group = GroupPresentation::free_abelian(1);
    f.mu = DiscreteMeasure::generator_uniform(f.group);
    f.member = [](const GroupElement& x) { return x[0] % 2 == 0; };
    f.subgroup = GroupPresentation::free_abelian(1);
    f.to_subgroup = [](const GroupElement& x) { return GroupElement{x[0] / 2}; };
    return f;
}

SubgroupFixture SubgroupFixture::integers_whole() {
    SubgroupFixture f;
    f.group = GroupPresentation::free_abelian(1);
    f.mu = DiscreteMeasure::generator_uniform(f.group);
    f.member = [](const GroupElement&) { return true; };
    f.subgroup = GroupPresentation::free_abelian(1);
    f.to_subgroup = [](const GroupElement& x) { return x; };
    return f;
}

DiscreteMeasure empirical_hitting_law(const SubgroupFixture& fixture, std::size_t n, std::uint64_t seed,
                                      std::int64_t cap_bound) {
    if (n == 0) throw std::invalid_argument("empirical_hitting_law: no samples");
    std::vector<double> cumulative;
    double acc = 0.0;
    for (double w : fixture.mu.weights) cumulative.push_back(acc += w);
    HittingSampler<GroupElement> sampler;
    sampler.identity = fixture.group.identity;
    sampler.multiply = fixture.group.multiply;
    sampler.member = fixture.member;
    sampler.cap_bound = cap_bound;
    sampler.step = [&](Rng& rng) {
        const double u = uniform01(rng) * acc;
        const auto k = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                                cumulative.begin());
        return fixture.mu.support[std::min(k, cumulative.size() - 1)];
    };
    Rng rng = make_stream(seed, 0);
    std::map<GroupElement, std::size_t> counts;
    for (std::size_t i = 0; i < n; ++i) ++counts[fixture.to_subgroup(hitting_measure(sampler, rng).value)];
    DiscreteMeasure law;
    for (const auto& [x, c] : counts) {
        law.support.push_back(x);
        law.weights.push_back(static_cast<double>(c) / static_cast<double>(n));
    }
    return law;
}

RestrictionReport restriction_isomorphism_check(const SubgroupFixture& fixture, const std::vector<int>& r_outer,
                                                const HfOptions& options, std::size_t hitting_samples,
                                                std::uint64_t seed,
                                                const std::optional<DiscreteMeasure>& law_override) {
    RestrictionReport report;
    report.subgroup_law = law_override ? *law_override : empirical_hitting_law(fixture, hitting_samples, seed);
    report.group_table = hf_dimension_estimate(fixture.group, fixture.mu, r_outer, options);
    report.subgroup_table = hf_dimension_estimate(fixture.subgroup, report.subgroup_law, r_outer, options);
    report.pass = true;
    for (std::size_t i = 0; i < r_outer.size(); ++i)
        report.pass = report.pass && report.group_table[i].dimension == report.subgroup_table[i].dimension;
    return report;
}

}  // namespace affwalk
