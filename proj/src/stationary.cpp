#include "affwalk/stationary.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "affwalk/parallel.hpp"

namespace affwalk {

Box Box::centered(int dim, double radius) {
    return {Eigen::VectorXd::Constant(dim, -radius), Eigen::VectorXd::Constant(dim, radius)};
}

bool Box::contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    for (Eigen::Index j = 0; j < x.size(); ++j)
        if (!(x(j) >= lower(j) && x(j) <= upper(j))) return false;
    return true;
}

std::vector<Eigen::VectorXd> Box::corners() const {
    const int d = dim();
    std::vector<Eigen::VectorXd> out;
    out.reserve(std::size_t{1} << d);
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
        Eigen::VectorXd c(d);
        for (int j = 0; j < d; ++j) c(j) = (mask >> j) & 1u ? upper(j) : lower(j);
        out.push_back(std::move(c));
    }
    return out;
}

namespace {

constexpr int kBucketShift = 44;  // 2^20 buckets over the 64-bit key
constexpr std::size_t kDirectoryMinPoints = std::size_t{1} << 18;

/// Monotone map from finite doubles to unsigned integers.
inline std::uint64_t order_key(double x) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    return bits >> 63 ? ~bits : bits | (std::uint64_t{1} << 63);
}

inline std::size_t bucket_of(double x) { return static_cast<std::size_t>(order_key(x) >> kBucketShift); }

inline double tent(double linf) { return std::clamp(2.0 - 2.0 * linf, 0.0, 1.0); }

Eigen::MatrixXd image_points(const AffineElementd& g, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd y = g.scale() * (g.rotation() * x);
    y.colwise() += g.translation();
    return y;
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(Eigen::MatrixXd points, Eigen::VectorXd weights, double ref_radius)
    : EmpiricalMeasure(std::move(points), std::move(weights), ref_radius, true) {}

EmpiricalMeasure EmpiricalMeasure::raw(Eigen::MatrixXd points, Eigen::VectorXd weights, double ref_radius) {
    return EmpiricalMeasure(std::move(points), std::move(weights), ref_radius, false);
}

EmpiricalMeasure::EmpiricalMeasure(Eigen::MatrixXd points, Eigen::VectorXd weights, double ref_radius,
                                   bool normalize)
    : ref_radius_(ref_radius), normalized_(normalize) {
    if (points.cols() != weights.size()) throw std::invalid_argument("EmpiricalMeasure: one weight per point");
    if (points.rows() < 1) throw std::invalid_argument("EmpiricalMeasure: dimension must be positive");
    if (!(ref_radius > 0)) throw std::invalid_argument("EmpiricalMeasure: reference radius must be positive");
    if ((weights.array() < 0).any()) throw std::invalid_argument("EmpiricalMeasure: negative weight");

    std::vector<Eigen::Index> keep;
    keep.reserve(static_cast<std::size_t>(points.cols()));
    for (Eigen::Index i = 0; i < points.cols(); ++i)
        if (points.col(i).allFinite()) keep.push_back(i);
    if (static_cast<Eigen::Index>(keep.size()) != points.cols()) {
        Eigen::MatrixXd p(points.rows(), static_cast<Eigen::Index>(keep.size()));
        Eigen::VectorXd w(static_cast<Eigen::Index>(keep.size()));
        for (std::size_t k = 0; k < keep.size(); ++k) {
            p.col(static_cast<Eigen::Index>(k)) = points.col(keep[k]);
            w(static_cast<Eigen::Index>(k)) = weights(keep[k]);
        }
        points = std::move(p);
        weights = std::move(w);
    }

    if (points.rows() == 1) {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(points.cols()));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return points(0, a) < points(0, b); });
        points_.resize(1, points.cols());
        weights_.resize(points.cols());
        for (std::size_t k = 0; k < order.size(); ++k) {
            points_(0, static_cast<Eigen::Index>(k)) = points(0, order[k]);
            weights_(static_cast<Eigen::Index>(k)) = weights(order[k]);
        }
    } else {
        points_ = std::move(points);
        weights_ = std::move(weights);
    }

    build_index();
    if (!normalize) return;
    const double ref_mass = box_mass(ref_radius_);
    if (!(ref_mass > 0)) throw std::invalid_argument("EmpiricalMeasure: reference box has no mass");
    weights_ /= ref_mass;
    build_index();
}

void EmpiricalMeasure::build_index() {
    const auto n = static_cast<std::size_t>(size());
    if (dim() == 1) {
        prefix_weight_.assign(n + 1, 0.0);
        long double acc = 0;
        for (std::size_t k = 0; k < n; ++k) {
            acc += weights_(static_cast<Eigen::Index>(k));
            prefix_weight_[k + 1] = static_cast<double>(acc);
        }
        const auto row = points_.row(0);
        zero_index_ = static_cast<Eigen::Index>(std::lower_bound(row.data(), row.data() + n, 0.0) - row.data());
        directory_.clear();
        if (n >= kDirectoryMinPoints) {
            directory_.assign((std::size_t{1} << (64 - kBucketShift)) + 1, 0);
            std::size_t next = 0;
            for (std::size_t k = 0; k < n; ++k) {
                const std::size_t b = bucket_of(points_(0, static_cast<Eigen::Index>(k)));
                while (next <= b) directory_[next++] = static_cast<Eigen::Index>(k);
            }
            while (next < directory_.size()) directory_[next++] = static_cast<Eigen::Index>(n);
        }
        moment_.assign(n + 1, 0.0);
        acc = 0;
        for (auto k = zero_index_; k < static_cast<Eigen::Index>(n); ++k) {
            acc += static_cast<long double>(weights_(k)) * points_(0, k);
            moment_[static_cast<std::size_t>(k) + 1] = static_cast<double>(acc);
        }
        acc = 0;
        for (auto k = zero_index_ - 1; k >= 0; --k) {
            acc -= static_cast<long double>(weights_(k)) * points_(0, k);
            moment_[static_cast<std::size_t>(k)] = static_cast<double>(acc);
        }
    } else {
        std::vector<std::pair<double, double>> nw(n);
        for (std::size_t k = 0; k < n; ++k)
            nw[k] = {linf_norm(points_.col(static_cast<Eigen::Index>(k))), weights_(static_cast<Eigen::Index>(k))};
        std::sort(nw.begin(), nw.end());
        sorted_norms_.resize(n);
        norm_prefix_weight_.assign(n + 1, 0.0);
        long double acc = 0;
        for (std::size_t k = 0; k < n; ++k) {
            sorted_norms_[k] = nw[k].first;
            acc += nw[k].second;
            norm_prefix_weight_[k + 1] = static_cast<double>(acc);
        }
    }
}

std::pair<Eigen::Index, Eigen::Index> EmpiricalMeasure::search_window(double v) const {
    if (directory_.empty() || std::isnan(v)) return {0, size()};
    if (v == 0.0) return {directory_[bucket_of(-0.0)], directory_[bucket_of(0.0) + 1]};
    const std::size_t b = bucket_of(v);
    return {directory_[b], directory_[b + 1]};
}

std::pair<Eigen::Index, Eigen::Index> EmpiricalMeasure::index_range(double lo, double hi) const {
    const double* x = points_.data();
    const auto [li, lj] = search_window(lo);
    const auto i = static_cast<Eigen::Index>(std::lower_bound(x + li, x + lj, lo) - x);
    if (!(lo <= hi)) return {i, i};
    const auto [ui, uj] = search_window(hi);
    const auto j = static_cast<Eigen::Index>(std::upper_bound(x + ui, x + uj, hi) - x);
    return {i, std::max(i, j)};
}

std::pair<Eigen::Index, Eigen::Index> EmpiricalMeasure::index_range(double lo, double hi, Eigen::Index first,
                                                                    Eigen::Index last) const {
    const double* x = points_.data();
    const auto i = static_cast<Eigen::Index>(std::lower_bound(x + first, x + last, lo) - x);
    if (!(lo <= hi)) return {i, i};
    const auto j = static_cast<Eigen::Index>(std::upper_bound(x + i, x + last, hi) - x);
    return {i, std::max(i, j)};
}

double EmpiricalMeasure::range_weight(Eigen::Index i, Eigen::Index j) const {
    return j > i ? prefix_weight_[static_cast<std::size_t>(j)] - prefix_weight_[static_cast<std::size_t>(i)] : 0.0;
}

double EmpiricalMeasure::range_moment(Eigen::Index i, Eigen::Index j) const {
    return j > i ? moment_[static_cast<std::size_t>(j)] - moment_[static_cast<std::size_t>(i)] : 0.0;
}

std::pair<double, double> EmpiricalMeasure::preimage_interval(const AffineElementd& g, double lo, double hi) const {
    const double s = g.scale() * g.rotation()(0, 0);
    const double c = g.translation()(0);
    const double inf = std::numeric_limits<double>::infinity();
    if (s == 0.0) {
        // Every point maps to c.
        if (c >= lo && c <= hi) return {-inf, inf};
        return {inf, -inf};
    }
    const double x1 = (lo - c) / s;
    const double x2 = (hi - c) / s;
    return s > 0 ? std::pair{x1, x2} : std::pair{x2, x1};
}

double EmpiricalMeasure::box_mass(double z) const {
    if (dim() == 1) {
        const auto [i, j] = index_range(-z, z);
        return range_weight(i, j);
    }
    const auto j = std::upper_bound(sorted_norms_.begin(), sorted_norms_.end(), z) - sorted_norms_.begin();
    return norm_prefix_weight_[static_cast<std::size_t>(j)];
}

double EmpiricalMeasure::mass(const Box& box) const {
    require_same_dim(dim(), box.dim());
    if (dim() == 1) {
        const auto [i, j] = index_range(box.lower(0), box.upper(0));
        return range_weight(i, j);
    }
    double m = 0.0;
    for (Eigen::Index k = 0; k < size(); ++k)
        if (box.contains(points_.col(k))) m += weights_(k);
    return m;
}

double EmpiricalMeasure::preimage_mass(const AffineElementd& g, const Box& box) const {
    require_same_dim(dim(), g.dim());
    require_same_dim(dim(), box.dim());
    if (dim() == 1) {
        const auto [lo, hi] = preimage_interval(g, box.lower(0), box.upper(0));
        const auto [i, j] = index_range(lo, hi);
        return range_weight(i, j);
    }
    const Eigen::MatrixXd y = image_points(g, points_);
    double m = 0.0;
    for (Eigen::Index k = 0; k < size(); ++k)
        if (box.contains(y.col(k))) m += weights_(k);
    return m;
}

double EmpiricalMeasure::tent_integral(const AffineElementd& g) const {
    require_same_dim(dim(), g.dim());
    if (dim() > 1) {
        const Eigen::MatrixXd y = image_points(g, points_);
        double h = 0.0;
        for (Eigen::Index k = 0; k < size(); ++k) h += weights_(k) * tent(linf_norm(y.col(k)));
        return h;
    }

    const auto [ilo, ihi] = preimage_interval(g, -0.5, 0.5);
    const auto [olo, ohi] = preimage_interval(g, -1.0, 1.0);
    const auto [i0, j0] = index_range(olo, ohi);
    const auto [i1, j1] = index_range(ilo, ihi, i0, j0);
    const double inner = range_weight(i1, j1);
    const double outer = range_weight(i0, j0);

    const double s = g.scale() * g.rotation()(0, 0);
    const double c = g.translation()(0);
    constexpr Eigen::Index kDirectBand = 256;
    const auto band = [&](Eigen::Index i, Eigen::Index j) {
        if (j <= i) return 0.0;
        const double w = range_weight(i, j);
        double v = 0.0;
        if (j - i <= kDirectBand) {
            for (Eigen::Index k = i; k < j; ++k) v += weights_(k) * tent(std::abs(s * points_(0, k) + c));
        } else {
            // y = s x + c has one sign across a band, so the tent is affine in x there.
            const double sign = s * points_(0, i) + c >= 0 ? 1.0 : -1.0;
            v = 2.0 * w - 2.0 * sign * (s * range_moment(i, j) + c * w);
        }
        return std::clamp(v, 0.0, w);
    };
    double h = inner + band(i0, i1) + band(j1, j0);
    // Rounding in the band sums may leave the exact bounds by an ulp.
    return std::clamp(h, inner, outer);
}

namespace {

/// Chain state x = mantissa * 2^exponent so that long critical excursions do
/// not overflow. exponent is a nonnegative multiple of kShift.
struct ScaledPoint {
    static constexpr int kShift = 512;
    Eigen::VectorXd mantissa;
    int exponent = 0;

    void apply(const AffineElementd& g) {
        Eigen::VectorXd next = g.scale() * (g.rotation() * mantissa);
        if (exponent == 0)
            next += g.translation();
        else
            next += std::ldexp(1.0, -exponent) * g.translation();
        mantissa = std::move(next);
        const double n = linf_norm(mantissa);
        if (n > std::ldexp(1.0, kShift)) {
            mantissa *= std::ldexp(1.0, -kShift);
            exponent += kShift;
        } else if (exponent > 0 && n < 1.0) {
            mantissa *= std::ldexp(1.0, kShift);
            exponent -= kShift;
        }
    }

    /// Value as doubles; infinite when out of range.
    Eigen::VectorXd value() const {
        if (exponent == 0) return mantissa;
        Eigen::VectorXd v(mantissa.size());
        for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = std::ldexp(mantissa(j), exponent);
        return v;
    }
};

struct ChainOutput {
    std::vector<double> coords;  // stored states, d per state
    std::size_t reference_visits = 0;
};

}  // namespace

namespace {

struct ChainRun {
    std::vector<ChainOutput> outputs;
    std::size_t stride = 1;
};

ChainRun run_chains(const CourteousSpec& spec, const StationaryOptions& options) {
    spec.validate();
    const int d = spec.dim;
    const int burn_in = options.burn_in < 0 ? options.steps / 10 : options.burn_in;
    if (options.chains < 1) throw std::invalid_argument("estimate_stationary: chains must be positive");
    if (options.steps <= burn_in) throw std::invalid_argument("estimate_stationary: steps must exceed burn-in");
    if (options.start.size() != 0) require_same_dim(d, static_cast<int>(options.start.size()));

    const std::size_t kept_per_chain = static_cast<std::size_t>(options.steps - burn_in);
    const std::size_t total = kept_per_chain * static_cast<std::size_t>(options.chains);
    const std::size_t cap = std::max<std::size_t>(options.point_cap, 1);

    ChainRun run;
    run.stride = (total + cap - 1) / cap;
    run.outputs.resize(static_cast<std::size_t>(options.chains));
    parallel_for(run.outputs.size(), options.threads, [&](std::size_t c) {
        Rng rng = make_stream(options.seed, c);
        ScaledPoint x;
        x.mantissa = options.start.size() ? options.start : Eigen::VectorXd::Zero(d);
        auto& out = run.outputs[c];
        out.coords.reserve((kept_per_chain / run.stride + 1) * static_cast<std::size_t>(d));
        for (int t = 1; t <= options.steps; ++t) {
            x.apply(sample(spec, rng));
            if (t <= burn_in) continue;
            const bool near = x.exponent == 0 && linf_norm(x.mantissa) <= options.ref_radius;
            if (near) ++out.reference_visits;
            if (static_cast<std::size_t>(t - burn_in - 1) % run.stride != 0) continue;
            const Eigen::VectorXd v = x.value();
            out.coords.insert(out.coords.end(), v.data(), v.data() + d);
        }
    });

    std::size_t visits = 0;
    for (const auto& o : run.outputs) visits += o.reference_visits;
    if (visits < options.min_reference_visits) throw StarvedReference(visits);
    return run;
}

Eigen::MatrixXd gather(const std::vector<std::pair<const double*, Eigen::Index>>& pieces, int d) {
    Eigen::Index total = 0;
    for (const auto& p : pieces) total += p.second;
    Eigen::MatrixXd points(d, total);
    Eigen::Index col = 0;
    for (const auto& [data, n] : pieces) {
        points.middleCols(col, n) = Eigen::Map<const Eigen::MatrixXd>(data, d, n);
        col += n;
    }
    return points;
}

}  // namespace

void write_csv(std::ostream& out, const EmpiricalMeasure& nu) {
    const auto precision = out.precision(17);
    for (int j = 0; j < nu.dim(); ++j) out << 'x' << j + 1 << ',';
    out << "weight\n";
    for (Eigen::Index i = 0; i < nu.size(); ++i) {
        for (int j = 0; j < nu.dim(); ++j) out << nu.points()(j, i) << ',';
        out << nu.weights()(i) << '\n';
    }
    out.precision(precision);
}

EmpiricalMeasure estimate_stationary(const CourteousSpec& spec, const StationaryOptions& options) {
    ChainRun run = run_chains(spec, options);
    const int d = spec.dim;
    std::vector<std::pair<const double*, Eigen::Index>> pieces;
    for (const auto& o : run.outputs)
        pieces.emplace_back(o.coords.data(), static_cast<Eigen::Index>(o.coords.size()) / d);
    Eigen::MatrixXd points = gather(pieces, d);
    run.outputs.clear();
    Eigen::VectorXd weights = Eigen::VectorXd::Constant(points.cols(), static_cast<double>(run.stride));
    return EmpiricalMeasure(std::move(points), std::move(weights), options.ref_radius);
}

BlockedStationary estimate_stationary_blocked(const CourteousSpec& spec, const StationaryOptions& options,
                                              int blocks_per_chain) {
    if (blocks_per_chain < 1) throw std::invalid_argument("estimate_stationary_blocked: blocks must be positive");
    ChainRun run = run_chains(spec, options);
    const int d = spec.dim;
    const double w = static_cast<double>(run.stride);

    BlockedStationary out;
    std::vector<std::pair<const double*, Eigen::Index>> all;
    for (const auto& o : run.outputs) {
        const auto n = static_cast<Eigen::Index>(o.coords.size()) / d;
        all.emplace_back(o.coords.data(), n);
        for (int b = 0; b < blocks_per_chain; ++b) {
            const Eigen::Index first = n * b / blocks_per_chain;
            const Eigen::Index last = n * (b + 1) / blocks_per_chain;
            Eigen::MatrixXd points = gather({{o.coords.data() + first * d, last - first}}, d);
            Eigen::VectorXd weights = Eigen::VectorXd::Constant(points.cols(), w);
            out.blocks.push_back(std::make_shared<const EmpiricalMeasure>(
                EmpiricalMeasure::raw(std::move(points), std::move(weights), options.ref_radius)));
        }
    }
    Eigen::MatrixXd points = gather(all, d);
    run.outputs.clear();
    Eigen::VectorXd weights = Eigen::VectorXd::Constant(points.cols(), w);
    out.pooled = std::make_shared<const EmpiricalMeasure>(std::move(points), std::move(weights), options.ref_radius);
    return out;
}

std::vector<StationarityRow> stationarity_residual(const EmpiricalMeasure& nu, const CourteousSpec& spec,
                                                   const std::vector<Box>& boxes, int m, std::uint64_t seed) {
    spec.validate();
    if (m < 1) throw std::invalid_argument("stationarity_residual: m must be positive");
    std::vector<StationarityRow> rows;
    rows.reserve(boxes.size());
    for (const auto& box : boxes)
        if (!(nu.mass(box) > 0)) throw ZeroMassBox();
    Rng rng = make_stream(seed, 0);
    std::vector<RunningStats> acc(boxes.size());
    for (int j = 0; j < m; ++j) {
        const auto g = sample(spec, rng);
        for (std::size_t b = 0; b < boxes.size(); ++b) acc[b].add(nu.preimage_mass(g, boxes[b]));
    }
    for (std::size_t b = 0; b < boxes.size(); ++b) {
        StationarityRow row;
        row.box = boxes[b];
        row.mass = nu.mass(boxes[b]);
        row.convolved = acc[b].mean();
        row.se = acc[b].standard_error();
        row.residual = std::abs(row.convolved - row.mass) / row.mass;
        rows.push_back(std::move(row));
    }
    return rows;
}

GrowthFit growth_fit(const EmpiricalMeasure& nu, const std::vector<double>& z_grid) {
    if (z_grid.size() < 2) throw std::invalid_argument("growth_fit: grid needs at least two points");
    if (!std::is_sorted(z_grid.begin(), z_grid.end()) || !(z_grid.front() > 0))
        throw std::invalid_argument("growth_fit: grid must be positive and increasing");
    if (z_grid.back() / z_grid.front() < 100.0)
        throw std::invalid_argument("growth_fit: grid must span at least two decades");
    GrowthFit fit;
    fit.z = z_grid;
    std::vector<double> x;
    std::vector<double> ratio;
    for (double z : z_grid) {
        const double m = nu.box_mass(z);
        fit.mass.push_back(m);
        x.push_back(1.0 + std::log(z));
        ratio.push_back(m / (1.0 + std::log(z)));
    }
    const LineFit line = fit_line(x, fit.mass);
    fit.slope = line.slope;
    fit.intercept = line.intercept;
    const double mean_mass = std::accumulate(fit.mass.begin(), fit.mass.end(), 0.0) / static_cast<double>(fit.mass.size());
    fit.relative_residual = mean_mass > 0 ? std::sqrt(line.rss / static_cast<double>(fit.mass.size())) / mean_mass : 0.0;
    const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
    fit.sup_ratio = *lo > 0 ? *hi / *lo : std::numeric_limits<double>::infinity();
    fit.log_growth = fit.sup_ratio <= fit.sup_ratio_threshold && fit.relative_residual <= fit.residual_threshold;
    return fit;
}

Estimate ratio_estimate(std::span<const double> x, std::span<const double> m) {
    if (x.size() != m.size() || x.empty()) throw std::invalid_argument("ratio_estimate: size mismatch");
    long double sx = 0, sm = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sx += x[k];
        sm += m[k];
    }
    if (!(sm > 0)) throw std::invalid_argument("ratio_estimate: zero denominator");
    const double r = static_cast<double>(sx / sm);
    const std::size_t n = x.size();
    if (n < 2) return {r, 0.0};
    long double ss = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const long double e = x[k] - r * m[k];
        ss += e * e;
    }
    const double se = static_cast<double>(std::sqrt(ss * n / (n - 1)) / sm);
    return {r, se};
}

std::vector<double> geometric_grid(double z0, double ratio, int count) {
    std::vector<double> grid;
    double z = z0;
    for (int k = 0; k < count; ++k, z *= ratio) grid.push_back(z);
    return grid;
}

}  // namespace affwalk
