#include "affwalk/harmonic.hpp"

#include <cmath>

#include "affwalk/parallel.hpp"

namespace affwalk {

HarmonicEstimate::HarmonicEstimate(MeasurePtr measure, std::vector<MeasurePtr> blocks, std::size_t cache_capacity)
    : measure_(std::move(measure)), blocks_(std::move(blocks)), cache_capacity_(cache_capacity) {
    if (!measure_) throw std::invalid_argument("HarmonicEstimate: null measure");
    for (const auto& b : blocks_) {
        if (!b || b->dim() != measure_->dim()) throw std::invalid_argument("HarmonicEstimate: bad block measure");
        block_ref_mass_.push_back(b->box_mass(measure_->ref_radius()));
    }
}

HarmonicEstimate::Key HarmonicEstimate::key_of(const AffineElementd& g) {
    Key key;
    key.reserve(static_cast<std::size_t>(1 + g.dim() * g.dim() + g.dim()));
    key.push_back(g.log_scale());
    key.insert(key.end(), g.rotation().data(), g.rotation().data() + g.rotation().size());
    key.insert(key.end(), g.translation().data(), g.translation().data() + g.translation().size());
    return key;
}

HarmonicRecord HarmonicEstimate::evaluate(const AffineElementd& g) const {
    require_same_dim(dim(), g.dim());
    Key key = key_of(g);
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    HarmonicRecord rec;
    rec.value = measure_->tent_integral(g);
    if (blocks_.size() > 1) {
        std::vector<double> x;
        for (const auto& b : blocks_) x.push_back(b->tent_integral(g));
        rec.se = ratio_estimate(x, block_ref_mass_).se;
    }
    std::lock_guard lock(mutex_);
    if (cache_.size() < cache_capacity_) cache_.emplace(std::move(key), rec);
    return rec;
}

double HarmonicEstimate::operator()(const AffineElementd& g) const {
    if (blocks_.empty()) {
        require_same_dim(dim(), g.dim());
        return measure_->tent_integral(g);
    }
    return evaluate(g).value;
}

SandwichBounds HarmonicEstimate::sandwich(const AffineElementd& g) const {
    SandwichBounds s;
    s.value = evaluate(g).value;
    s.lower = measure_->preimage_mass(g, Box::centered(dim(), bump_.inner_radius));
    s.upper = measure_->preimage_mass(g, Box::centered(dim(), bump_.outer_radius));
    return s;
}

std::size_t HarmonicEstimate::cache_size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

std::shared_ptr<HarmonicEstimate> build_harmonic(const CourteousSpec& spec, const StationaryOptions& options,
                                                 int blocks_per_chain) {
    if (blocks_per_chain <= 0)
        return std::make_shared<HarmonicEstimate>(
            std::make_shared<const EmpiricalMeasure>(estimate_stationary(spec, options)));
    auto est = estimate_stationary_blocked(spec, options, blocks_per_chain);
    return std::make_shared<HarmonicEstimate>(std::move(est.pooled), std::move(est.blocks));
}

LaplacianResidual laplacian_residual(const GroupFunction& f, const CourteousSpec& spec, const AffineElementd& g,
                                     int m, std::uint64_t seed) {
    spec.validate();
    if (m < 1) throw std::invalid_argument("laplacian_residual: m must be positive");
    Rng rng = make_stream(seed, 0);
    const double fg = f(g);
    RunningStats diffs;
    for (int j = 0; j < m; ++j) diffs.add(fg - f(compose(g, sample(spec, rng))));
    return {diffs.mean(), diffs.standard_error(), diffs.standard_error(), 0.0, m};
}

LaplacianResidual laplacian_residual(const HarmonicEstimate& h, const CourteousSpec& spec, const AffineElementd& g,
                                     int m, std::uint64_t seed) {
    const auto pooled = [&](const AffineElementd& x) { return h.measure().tent_integral(x); };
    LaplacianResidual res = laplacian_residual(pooled, spec, g, m, seed);
    if (h.blocks().size() < 2) return res;
    std::vector<double> raw;
    for (const auto& block : h.blocks()) {
        const auto f = [&](const AffineElementd& x) { return block->tent_integral(x); };
        raw.push_back(laplacian_residual(f, spec, g, m, seed).value);
    }
    res.se_measure = ratio_estimate(raw, h.block_reference_mass()).se;
    res.se = std::hypot(res.se_sampling, res.se_measure);
    return res;
}

std::vector<AffineElementd> elements_of_length(int dim, double r, int random_per_radius, Rng& rng) {
    std::vector<AffineElementd> out;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dim);
    out.push_back(AffineElementd::scaling_translation(r, zero));
    out.push_back(AffineElementd::scaling_translation(-r, zero));
    const double shift = std::expm1(r);
    for (int j = 0; j < dim; ++j)
        for (double sign : {1.0, -1.0}) {
            Eigen::VectorXd b = zero;
            b(j) = sign * shift;
            out.push_back(AffineElementd::scaling_translation(0.0, b));
        }
    for (int i = 0; i < random_per_radius; ++i) {
        const double u = uniform01(rng);
        const double log_a = (uniform01(rng) < 0.5 ? 1.0 : -1.0) * u * r;
        Eigen::VectorXd dir(dim);
        for (int j = 0; j < dim; ++j) dir(j) = 2.0 * uniform01(rng) - 1.0;
        const auto top = static_cast<Eigen::Index>(std::min<double>(std::floor(uniform01(rng) * dim), dim - 1));
        dir(top) = dir(top) >= 0 ? 1.0 : -1.0;
        dir /= linf_norm(dir);
        out.push_back(AffineElementd::scaling_translation(log_a, std::expm1((1.0 - u) * r) * dir));
    }
    return out;
}

GrowthProfile growth_profile(const GroupFunction& f, int dim, const std::vector<double>& radii, int random_per_radius,
                             std::uint64_t seed) {
    if (radii.empty() || !std::is_sorted(radii.begin(), radii.end()))
        throw std::invalid_argument("growth_profile: radii must be increasing");
    GrowthProfile profile;
    Rng rng = make_stream(seed, 0);
    std::vector<double> ratios;
    for (double r : radii) {
        GrowthProfileRow row;
        row.radius = r;
        for (const auto& g : elements_of_length(dim, r, random_per_radius, rng)) {
            row.sup = std::max(row.sup, f(g));
            ++row.evaluated;
        }
        row.ratio = row.sup / (1.0 + r);
        ratios.push_back(row.ratio);
        profile.rows.push_back(row);
    }
    profile.max_ratio = *std::max_element(ratios.begin(), ratios.end());
    profile.median_ratio = median(ratios);
    profile.linear = profile.max_ratio <= profile.factor * profile.median_ratio;
    return profile;
}

WalkProcess box_process(std::shared_ptr<const EmpiricalMeasure> nu, Box v) {
    return [nu = std::move(nu), v = std::move(v)](const AffineElementd& phi) {
        return nu->preimage_mass(phi, v);
    };
}

MartingaleReport martingale_diag(const WalkProcess& process, const CourteousSpec& spec,
                                 const MartingaleOptions& options, std::uint64_t seed) {
    spec.validate();
    if (options.paths < 2 || options.refresh < 1) throw std::invalid_argument("martingale_diag: bad sample counts");
    MartingaleReport report;
    report.required_fraction = options.required_fraction;

    for (int t : options.times) {
        std::vector<double> diffs(static_cast<std::size_t>(options.paths));
        const std::uint64_t time_seed = derive_seed(seed, static_cast<std::uint64_t>(t));
        parallel_for(diffs.size(), options.threads, [&](std::size_t p) {
            Walker walker(spec, make_stream(time_seed, p));
            while (walker.time() < t) walker.step();
            const double m0 = process(walker.position());
            double sum = 0.0;
            for (int j = 0; j < options.refresh; ++j)
                sum += process(compose(walker.position(), sample(spec, walker.rng())));
            diffs[p] = sum / options.refresh - m0;
        });
        RunningStats acc;
        for (double d : diffs) acc.add(d);
        OneStepRow row{t, acc.mean(), acc.standard_error(), false};
        row.pass = row.se > 0 ? std::abs(row.mean_diff) <= 3.0 * row.se : std::abs(row.mean_diff) <= 1e-12;
        report.one_step_pass = report.one_step_pass && row.pass;
        report.one_step.push_back(row);
    }

    if (options.check_convergence) {
        report.convergence = walk_convergence(process, spec, options.horizon, options.trajectories,
                                              derive_seed(seed, 0x6d617274ULL), AffineElementd::identity(spec.dim),
                                              options.tolerance, options.threads);
        report.convergence_pass = report.convergence.fraction >= options.required_fraction;
    }
    return report;
}

}  // namespace affwalk
