#include "affwalk/stopping.hpp"

#include <cmath>

#include "affwalk/parallel.hpp"

namespace affwalk {

bool maps_into(const AffineElementd& g, const Box& u, const Box& v) {
    require_same_dim(g.dim(), u.dim());
    require_same_dim(g.dim(), v.dim());
    for (const auto& corner : u.corners())
        if (!v.contains(act(g, corner))) return false;
    return true;
}

std::optional<int> first_entry_box(const Trajectory& traj, const Box& u, const Box& v, int horizon) {
    const int last = std::min(horizon, traj.steps());
    for (int t = 0; t <= last; ++t)
        if (maps_into(traj.products[static_cast<std::size_t>(t)], u, v)) return t;
    return std::nullopt;
}

VzRegion::VzRegion(double z_, double k0_) : z(z_), k0(k0_) {
    if (!(z >= 1.0)) throw std::invalid_argument("VzRegion: z must be >= 1");
    if (!(k0 > 1.0)) throw std::invalid_argument("VzRegion: k0 must be > 1");
}

bool VzRegion::contains(const S1Elementd& r) const {
    const double log_k0 = std::log(k0), log_z = std::log(z);
    return r.log_scale >= -log_k0 - log_z && r.log_scale <= log_k0 - log_z && r.shift <= k0;
}

std::optional<int> first_entry_vz(const CompanionTrajectory& comp, const VzRegion& region, int horizon) {
    const int last = std::min<int>(horizon, static_cast<int>(comp.products.size()) - 1);
    for (int t = 0; t <= last; ++t)
        if (region.contains(comp.products[static_cast<std::size_t>(t)])) return t;
    return std::nullopt;
}

OstReport ost_check(const EmpiricalMeasure& nu, const CourteousSpec& spec, const Box& u, const Box& v, int trials,
                    int horizon, std::uint64_t seed, int threads) {
    spec.validate();
    if (trials < 1 || horizon < 0) throw std::invalid_argument("ost_check: bad trial count or horizon");
    OstReport report;
    report.trials = trials;
    report.mass_u = nu.mass(u);
    report.mass_v = nu.mass(v);
    if (!(report.mass_u > 0)) throw ZeroMassBox();

    std::vector<char> hit(static_cast<std::size_t>(trials), 0);
    parallel_for(hit.size(), threads, [&](std::size_t i) {
        Walker walker(spec, make_stream(trajectory_seed(seed, i), 0));
        for (int t = 0; t <= horizon; ++t) {
            if (t > 0) walker.step();
            if (maps_into(walker.position(), u, v)) {
                hit[i] = 1;
                return;
            }
        }
    });
    for (char h : hit) report.hits += h;
    const Estimate p = proportion(static_cast<std::size_t>(report.hits), static_cast<std::size_t>(trials));
    report.hit_probability = p.value;
    report.margin = report.mass_v - p.value * report.mass_u;
    report.se = report.mass_u * p.se;
    report.pass = report.margin >= -2.0 * report.se;
    return report;
}

DeltaFit delta_fit(const CourteousSpec& spec, const std::vector<double>& z_grid, double k0, int trials, int horizon,
                   std::uint64_t seed, int threads) {
    spec.validate();
    if (z_grid.empty() || trials < 1 || horizon < 0) throw std::invalid_argument("delta_fit: bad arguments");
    std::vector<VzRegion> regions;
    for (double z : z_grid) regions.emplace_back(z, k0);

    const std::size_t nz = regions.size();
    std::vector<char> hit(static_cast<std::size_t>(trials) * nz, 0);
    parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t i) {
        Rng rng = make_stream(trajectory_seed(seed, i), 0);
        char* row = hit.data() + i * nz;
        std::size_t remaining = nz;
        S1Elementd r{0.0, 0.0};
        for (int t = 0; t <= horizon && remaining > 0; ++t) {
            if (t > 0) r = compose(r, project_s1(sample(spec, rng)));
            if (r.shift > k0) break;
            for (std::size_t k = 0; k < nz; ++k)
                if (!row[k] && regions[k].contains(r)) {
                    row[k] = 1;
                    --remaining;
                }
        }
    });

    DeltaFit fit;
    fit.k0 = k0;
    fit.horizon = horizon;
    std::vector<double> x, y, w;
    for (std::size_t k = 0; k < nz; ++k) {
        DeltaRow row;
        row.z = z_grid[k];
        row.trials = trials;
        for (int i = 0; i < trials; ++i) row.hits += hit[static_cast<std::size_t>(i) * nz + k];
        const Estimate p = proportion(static_cast<std::size_t>(row.hits), static_cast<std::size_t>(trials));
        row.probability = p.value;
        row.se = p.se;
        const double factor = 1.0 + std::log(row.z);
        row.scaled = p.value * factor;
        row.scaled_se = p.se * factor;
        if (row.hits > 0 && row.hits < trials) {
            x.push_back(std::log(row.z));
            y.push_back(std::log(row.scaled));
            const double rel = row.se / row.probability;
            w.push_back(1.0 / (rel * rel));
        }
        fit.rows.push_back(row);
    }
    const auto argmin = std::min_element(fit.rows.begin(), fit.rows.end(),
                                         [](const DeltaRow& a, const DeltaRow& b) { return a.scaled < b.scaled; });
    fit.delta = argmin->scaled;
    fit.delta_se = argmin->scaled_se;
    fit.separated = fit.delta > 2.0 * fit.delta_se;

    if (x.size() >= 2) {
        double sw = 0, sx = 0, sy = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sw += w[i];
            sx += w[i] * x[i];
            sy += w[i] * y[i];
        }
        const double mx = sx / sw, my = sy / sw;
        double sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sxx += w[i] * (x[i] - mx) * (x[i] - mx);
            sxy += w[i] * (x[i] - mx) * (y[i] - my);
        }
        if (sxx > 0) {
            fit.trend_slope = sxy / sxx;
            fit.trend_se = std::sqrt(1.0 / sxx);
        }
    }
    fit.no_trend = fit.trend_slope >= -2.0 * fit.trend_se;
    return fit;
}

StoppingOrderReport compare_stopping_times(const CourteousSpec& spec, double z, double k0, int trajectories,
                                           int horizon, std::uint64_t seed, int threads) {
    spec.validate();
    const VzRegion region(z, k0);
    const Box u = Box::centered(spec.dim, z);
    const Box v = Box::centered(spec.dim, 2.0 * k0);
    struct Outcome {
        std::optional<int> uv, vz;
    };
    std::vector<Outcome> out(static_cast<std::size_t>(trajectories));
    parallel_for(out.size(), threads, [&](std::size_t i) {
        Walker walker(spec, make_stream(trajectory_seed(seed, i), 0));
        S1Elementd r{0.0, 0.0};
        for (int t = 0; t <= horizon; ++t) {
            if (t > 0) r = compose(r, project_s1(walker.step()));
            if (!out[i].uv && maps_into(walker.position(), u, v)) out[i].uv = t;
            if (region.contains(r)) {
                out[i].vz = t;
                break;
            }
            // b(R_t) never decreases, so V_z is out of reach from here on.
            if (r.shift > k0) break;
        }
    });
    StoppingOrderReport report;
    report.trajectories = trajectories;
    for (const auto& o : out) {
        report.hits_uv += o.uv.has_value();
        report.hits_vz += o.vz.has_value();
        if (o.vz && (!o.uv || *o.uv > *o.vz)) ++report.violations;
    }
    return report;
}

}  // namespace affwalk
