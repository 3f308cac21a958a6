#include "affwalk/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "affwalk/cayley.hpp"
#include "affwalk/harmonic.hpp"
#include "affwalk/representation.hpp"
#include "affwalk/stationary.hpp"
#include "affwalk/stopping.hpp"
#include "affwalk/walk.hpp"

#ifndef AFFWALK_VERSION
#define AFFWALK_VERSION "0.0.0"
#endif

namespace affwalk {

const char* artifact_version() { return AFFWALK_VERSION; }

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------- config

namespace {

// JSON has no infinities; they are written as strings.
json number(double v) { return std::isfinite(v) ? json(v) : json(format_number(v)); }

template <typename T>
void read(const json& j, const char* key, T& target, std::set<std::string>& seen) {
    seen.insert(key);
    if (!j.contains(key)) return;
    try {
        target = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
}

bool positive_increasing(const std::vector<double>& v) {
    if (v.empty()) return false;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!(v[i] > 0) || !std::isfinite(v[i]) || (i > 0 && !(v[i] > v[i - 1]))) return false;
    return true;
}

bool increasing(const std::vector<int>& v, int min_value) {
    if (v.empty()) return false;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] < min_value || (i > 0 && v[i] <= v[i - 1])) return false;
    return true;
}

bool known_group(const std::string& name) {
    try {
        GroupPresentation::by_name(name);
        return true;
    } catch (const std::invalid_argument&) {
        return false;
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    require(is_experiment(experiment) || experiment == "full-suite", "unknown experiment tag '" + experiment + "'");
    require(dim >= 1 && dim <= AffineElementd::kMaxDim, "dim must be in 1.." + std::to_string(AffineElementd::kMaxDim));
    require(measure.dim == dim, "measure dimension differs from dim");
    try {
        measure.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    require(steps > 0 && chains > 0 && blocks > 1 && trials > 0 && horizon > 0, "counts must be positive");
    require(convolution_samples > 0 && test_points > 0 && laplacian_samples >= 1000 && random_per_radius >= 0,
            "sample counts must be positive (laplacian_samples >= 1000)");
    require(words > 1 && word_length > 0 && hitting_samples > 0 && threads > 0, "counts must be positive");
    require(ref_radius > 0 && std::isfinite(ref_radius), "ref_radius must be positive");
    require(positive_increasing(test_boxes), "test_boxes must be positive and increasing");
    require(positive_increasing(z_grid) && z_grid.size() >= 3, "z_grid must have >= 3 increasing positive values");
    require(positive_increasing(radius_grid), "radius_grid must be positive and increasing");
    require(positive_increasing(stop_z_grid) && stop_z_grid.front() >= 1.0, "stop_z_grid must be increasing and >= 1");
    require(k0 > 1.0 && ost_u > 0 && ost_v > 0, "k0 > 1 and positive OST boxes required");
    for (const auto& g : growth) {
        require(known_group(g.group), "unknown group '" + g.group + "'");
        require(increasing(g.radii, 1) && g.radii.size() >= 3, "growth radii must be >= 3 increasing positive values");
    }
    for (const auto& h : hf) {
        require(known_group(h.group), "unknown group '" + h.group + "'");
        require(increasing(h.r_outer, 1), "r_outer must be increasing and positive");
        require(h.inner_fixed >= 0 || h.inner_offset >= 1, "hf sweep needs inner_fixed >= 0 or inner_offset >= 1");
        const InnerRadius inner = h.inner_fixed >= 0 ? InnerRadius::fixed(h.inner_fixed) : InnerRadius::offset(h.inner_offset);
        for (int r : h.r_outer) require(inner.at(r) >= 0 && inner.at(r) < r, "hf inner radius must lie in [0, r_outer)");
    }
    require(format == "csv" || format == "json", "format must be csv or json");
    require(!out_dir.empty(), "out_dir must not be empty");
}

json ExperimentConfig::to_json() const {
    json j;
    j["experiment"] = experiment;
    j["dim"] = dim;
    j["measure"] = {{"family", to_string(measure.family)},
                    {"log_scale_mean", measure.log_scale_mean},
                    {"log_scale_sd", measure.log_scale_sd},
                    {"rotation", to_string(measure.rotation)},
                    {"translation_mean", measure.translation_mean},
                    {"translation_sd", measure.translation_sd},
                    {"symmetrize", measure.symmetrize}};
    j["steps"] = steps;
    j["chains"] = chains;
    j["blocks"] = blocks;
    j["ref_radius"] = ref_radius;
    j["test_boxes"] = test_boxes;
    j["convolution_samples"] = convolution_samples;
    j["z_grid"] = z_grid;
    j["test_points"] = test_points;
    j["laplacian_samples"] = laplacian_samples;
    j["radius_grid"] = radius_grid;
    j["random_per_radius"] = random_per_radius;
    j["trials"] = trials;
    j["horizon"] = horizon;
    j["stop_z_grid"] = stop_z_grid;
    j["k0"] = k0;
    j["ost_u"] = ost_u;
    j["ost_v"] = ost_v;
    j["growth"] = json::array();
    for (const auto& g : growth) j["growth"].push_back({{"group", g.group}, {"radii", g.radii}});
    j["hf"] = json::array();
    for (const auto& h : hf) {
        json e{{"group", h.group}, {"r_outer", h.r_outer}};
        if (h.inner_fixed >= 0)
            e["inner_fixed"] = h.inner_fixed;
        else
            e["inner_offset"] = h.inner_offset;
        j["hf"].push_back(e);
    }
    j["hitting_samples"] = hitting_samples;
    j["words"] = words;
    j["word_length"] = word_length;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["format"] = format;
    j["threads"] = threads;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig c;
    std::set<std::string> seen;
    read(j, "experiment", c.experiment, seen);
    read(j, "dim", c.dim, seen);
    c.measure.dim = c.dim;
    if (c.dim >= 2) c.measure.rotation = RotationLaw::SignedPermutation;
    seen.insert("measure");
    if (j.contains("measure")) {
        const json& m = j.at("measure");
        if (!m.is_object()) throw ConfigError("config field 'measure' must be an object");
        std::set<std::string> mseen;
        std::string family = to_string(c.measure.family), rotation = to_string(c.measure.rotation);
        read(m, "family", family, mseen);
        read(m, "rotation", rotation, mseen);
        read(m, "log_scale_mean", c.measure.log_scale_mean, mseen);
        read(m, "log_scale_sd", c.measure.log_scale_sd, mseen);
        read(m, "translation_mean", c.measure.translation_mean, mseen);
        read(m, "translation_sd", c.measure.translation_sd, mseen);
        read(m, "symmetrize", c.measure.symmetrize, mseen);
        for (const auto& [key, value] : m.items())
            if (!mseen.count(key)) throw ConfigError("unknown measure field '" + key + "'");
        try {
            c.measure.family = parse_family(family);
            c.measure.rotation = parse_rotation_law(rotation);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (c.measure.family != MeasureFamily::ContinuousCritical)
            throw ConfigError("only the continuous-critical family is configurable from a file");
    }
    read(j, "steps", c.steps, seen);
    read(j, "chains", c.chains, seen);
    read(j, "blocks", c.blocks, seen);
    read(j, "ref_radius", c.ref_radius, seen);
    read(j, "test_boxes", c.test_boxes, seen);
    read(j, "convolution_samples", c.convolution_samples, seen);
    read(j, "z_grid", c.z_grid, seen);
    read(j, "test_points", c.test_points, seen);
    read(j, "laplacian_samples", c.laplacian_samples, seen);
    read(j, "radius_grid", c.radius_grid, seen);
    read(j, "random_per_radius", c.random_per_radius, seen);
    read(j, "trials", c.trials, seen);
    read(j, "horizon", c.horizon, seen);
    read(j, "stop_z_grid", c.stop_z_grid, seen);
    read(j, "k0", c.k0, seen);
    read(j, "ost_u", c.ost_u, seen);
    read(j, "ost_v", c.ost_v, seen);
    seen.insert("growth");
    if (j.contains("growth")) {
        c.growth.clear();
        for (const auto& g : j.at("growth")) {
            GrowthSweep s;
            std::set<std::string> gseen;
            read(g, "group", s.group, gseen);
            read(g, "radii", s.radii, gseen);
            c.growth.push_back(s);
        }
    }
    seen.insert("hf");
    if (j.contains("hf")) {
        c.hf.clear();
        for (const auto& h : j.at("hf")) {
            HfSweep s;
            std::set<std::string> hseen;
            read(h, "group", s.group, hseen);
            read(h, "r_outer", s.r_outer, hseen);
            read(h, "inner_fixed", s.inner_fixed, hseen);
            read(h, "inner_offset", s.inner_offset, hseen);
            c.hf.push_back(s);
        }
    }
    read(j, "hitting_samples", c.hitting_samples, seen);
    read(j, "words", c.words, seen);
    read(j, "word_length", c.word_length, seen);
    read(j, "seed", c.seed, seen);
    read(j, "out_dir", c.out_dir, seen);
    read(j, "format", c.format, seen);
    read(j, "threads", c.threads, seen);
    for (const auto& [key, value] : j.items())
        if (!seen.count(key)) throw ConfigError("unknown config field '" + key + "'");
    c.validate();
    return c;
}

// ---------------------------------------------------------------- tables

void Table::add(std::vector<double> row) {
    if (row.size() != columns.size()) throw std::logic_error("table '" + name + "': row width mismatch");
    rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& col) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == col) return i;
    throw std::out_of_range("table '" + name + "' has no column '" + col + "'");
}

const Table* Report::find(const std::string& name) const {
    for (const auto& t : tables)
        if (t.name == name) return &t;
    return nullptr;
}

// ---------------------------------------------------------------- registry

const std::vector<ExperimentInfo>& list_experiments() {
    static const std::vector<ExperimentInfo> registry{
        {"group-algebra", "similarity group identities, step-law audits and the L-inf control bound",
         "S_d group law; companion walk bound"},
        {"stationary", "occupation-measure estimate of nu, stationarity residuals and box-mass growth",
         "stationary Radon measure; nu([-z,z]^d) <= C (1 + log z)"},
        {"harmonic", "h(g) = int phi(g.x) dnu: Laplacian residuals, sandwich, growth profile, martingales",
         "positive harmonic function of linear growth"},
        {"stopping", "optional-stopping inequality, delta / (1 + log z) hitting bound, stopping-time order",
         "OST lemma; reduction lemma"},
        {"hf-dim", "word-metric growth of discrete groups and dimension of harmonic functions of linear growth",
         "HF_1 finite-dimensionality; restriction to finite-index subgroups"},
        {"repr", "type-S block form, scaling homomorphisms, orbit spans and the power recursions",
         "convergence along random walks for finite-dimensional orbits"},
    };
    return registry;
}

bool is_experiment(const std::string& tag) {
    for (const auto& e : list_experiments())
        if (e.tag == tag) return true;
    return false;
}

// ---------------------------------------------------------------- experiments

namespace {

std::uint64_t experiment_seed(const ExperimentConfig& c, const std::string& tag) {
    std::uint64_t h = 0;
    for (char ch : tag) h = splitmix64(h ^ static_cast<unsigned char>(ch));
    return derive_seed(c.seed, h);
}

StationaryOptions stationary_options(const ExperimentConfig& c, std::uint64_t seed) {
    StationaryOptions o;
    o.steps = c.steps;
    o.chains = c.chains;
    o.ref_radius = c.ref_radius;
    o.seed = seed;
    o.threads = c.threads;
    return o;
}

// The blocked stationary estimate is shared by the measure-based experiments.
class Context {
public:
    explicit Context(const ExperimentConfig& c) : config_(c) {}

    const BlockedStationary& stationary() {
        if (!stationary_)
            stationary_ = std::make_unique<BlockedStationary>(estimate_stationary_blocked(
                config_.measure, stationary_options(config_, experiment_seed(config_, "nu")), config_.blocks));
        return *stationary_;
    }

private:
    const ExperimentConfig& config_;
    std::unique_ptr<BlockedStationary> stationary_;
};

AffineElementd random_element(int dim, Rng& rng, double log_range, double shift_range) {
    Eigen::VectorXd b(dim);
    for (int j = 0; j < dim; ++j) b(j) = shift_range * (2.0 * uniform01(rng) - 1.0);
    return AffineElementd::scaling_translation(log_range * (2.0 * uniform01(rng) - 1.0), b);
}

void group_algebra(const ExperimentConfig& c, Report& out) {
    const std::uint64_t seed = experiment_seed(c, "group-algebra");
    Table identities{"group-algebra_identities", {"d", "triples", "associativity", "inverse", "action"}, {}};
    double worst = 0.0;
    constexpr int kTriples = 10'000;
    for (int d = 1; d <= 3; ++d) {
        const CourteousSpec spec = CourteousSpec::critical(d, 0.5, 1.0, d == 1 ? RotationLaw::Trivial : RotationLaw::Haar);
        Rng rng = make_stream(seed, static_cast<std::uint64_t>(d));
        double assoc = 0, inv = 0, action = 0;
        for (int i = 0; i < kTriples; ++i) {
            const auto g1 = sample(spec, rng), g2 = sample(spec, rng), g3 = sample(spec, rng);
            assoc = std::max(assoc, element_distance(compose(compose(g1, g2), g3), compose(g1, compose(g2, g3))));
            inv = std::max(inv, element_distance(compose(g1, invert(g1)), AffineElementd::identity(d)));
            Eigen::VectorXd x(d);
            for (int j = 0; j < d; ++j) x(j) = standard_normal(rng);
            action = std::max(action, linf_norm(act(compose(g1, g2), x) - act(g1, act(g2, x))));
        }
        identities.add({double(d), double(kTriples), assoc, inv, action});
        worst = std::max({worst, assoc, inv, action});
    }

    // ||Phi_t.x|| <= R_t.||x|| along walks of the configured law
    const CourteousSpec& spec = c.measure;
    const ControlReport control =
        control_check(spec, c.trials, 500, {0.0, 0.5, 1.0, 2.0, 5.0, 10.0}, seed, 1e-9, c.threads);

    const auto sym = check_symmetry(spec, 100'000, derive_seed(seed, 11));
    const auto rec = check_recurrence(spec, 100'000, derive_seed(seed, 12));
    const auto m3 = moment3(spec, 100'000, derive_seed(seed, 13));

    out.summary["group-algebra"] = {
        {"max_identity_error", worst},
        {"identities_pass", worst <= 1e-10},
        {"control_trajectories", c.trials},
        {"control_steps", control.steps},
        {"control_violations", control.violations},
        {"control_pass", control.pass()},
        {"symmetry_distance", sym.distance},
        {"symmetry_pass", sym.pass},
        {"mean_log_scale", rec.mean_log_scale},
        {"mean_log_scale_se", rec.se},
        {"recurrence_pass", rec.pass},
        {"moment3", m3.value},
        {"moment3_se", m3.se},
    };
    out.tables.push_back(std::move(identities));
}

void stationary(const ExperimentConfig& c, Context& ctx, Report& out) {
    const std::uint64_t seed = experiment_seed(c, "stationary");
    const EmpiricalMeasure& nu = *ctx.stationary().pooled;
    std::vector<Box> boxes;
    for (double z : c.test_boxes) boxes.push_back(Box::centered(c.dim, z));
    const auto rows = stationarity_residual(nu, c.measure, boxes, c.convolution_samples, derive_seed(seed, 1));
    Table residual{"stationary_residual", {"radius", "mass", "convolved", "se", "residual"}, {}};
    double worst = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        residual.add({c.test_boxes[i], rows[i].mass, rows[i].convolved, rows[i].se, rows[i].residual});
        worst = std::max(worst, rows[i].residual);
    }

    const GrowthFit fit = growth_fit(nu, c.z_grid);
    Table growth{"stationary_growth", {"z", "mass", "ratio"}, {}};
    for (std::size_t i = 0; i < fit.z.size(); ++i)
        growth.add({fit.z[i], fit.mass[i], fit.mass[i] / (1.0 + std::log(fit.z[i]))});

    // the verdict must not depend on the starting point of the chains
    StationaryOptions shifted = stationary_options(c, derive_seed(seed, 3));
    shifted.start = Eigen::VectorXd::Unit(c.dim, 0);
    const GrowthFit shifted_fit = growth_fit(estimate_stationary(c.measure, shifted), c.z_grid);

    // discriminating control: a pure translation walk has Lebesgue-like nu
    const EmpiricalMeasure lebesgue =
        estimate_stationary(CourteousSpec::translation(c.dim), stationary_options(c, derive_seed(seed, 2)));
    const GrowthFit control = growth_fit(lebesgue, c.z_grid);

    out.summary["stationary"] = {
        {"points", nu.size()},
        {"max_residual", worst},
        {"residual_pass", worst <= 0.10},
        {"slope", fit.slope},
        {"intercept", fit.intercept},
        {"relative_residual", fit.relative_residual},
        {"sup_ratio", fit.sup_ratio},
        {"log_growth", fit.log_growth},
        {"shifted_start_sup_ratio", shifted_fit.sup_ratio},
        {"shifted_start_log_growth", shifted_fit.log_growth},
        {"start_invariant", shifted_fit.log_growth == fit.log_growth},
        {"translation_sup_ratio", control.sup_ratio},
        {"translation_log_growth", control.log_growth},
    };
    out.tables.push_back(std::move(residual));
    out.tables.push_back(std::move(growth));
}

void harmonic(const ExperimentConfig& c, Context& ctx, Report& out) {
    const std::uint64_t seed = experiment_seed(c, "harmonic");
    const auto& est = ctx.stationary();
    const HarmonicEstimate h(est.pooled, est.blocks);

    Rng rng = make_stream(seed, 0);
    Table residual{"harmonic_residual", {"point", "log_a", "b1", "value", "residual", "se", "within"}, {}};
    int within = 0, sandwich_violations = 0, negative = 0;
    const GroupFunction probe = [](const AffineElementd& g) { return std::exp(g.log_scale()); };
    int probe_flagged = 0;
    for (int i = 0; i < c.test_points; ++i) {
        const AffineElementd g = random_element(c.dim, rng, 3.0, 5.0);
        const auto res = laplacian_residual(h, c.measure, g, c.laplacian_samples, derive_seed(seed, 100 + i));
        const auto s = h.sandwich(g);
        if (!s.holds()) ++sandwich_violations;
        if (s.value < 0) ++negative;
        within += res.within(3.0);
        const auto pr = laplacian_residual(probe, c.measure, g, c.laplacian_samples, derive_seed(seed, 10'000 + i));
        probe_flagged += !pr.within(3.0);
        residual.add({double(i), g.log_scale(), g.translation()(0), s.value, res.value, res.se,
                      res.within(3.0) ? 1.0 : 0.0});
    }

    const GroupFunction hf = [&](const AffineElementd& g) { return h.measure().tent_integral(g); };
    const GrowthProfile profile = growth_profile(hf, c.dim, c.radius_grid, c.random_per_radius, derive_seed(seed, 1));
    const GroupFunction exp_probe = [](const AffineElementd& g) { return std::exp(std::abs(g.log_scale())); };
    const GrowthProfile exp_profile =
        growth_profile(exp_probe, c.dim, c.radius_grid, c.random_per_radius, derive_seed(seed, 1));
    Table prof{"harmonic_profile", {"r", "sup", "ratio", "probe_sup", "probe_ratio"}, {}};
    for (std::size_t i = 0; i < profile.rows.size(); ++i)
        prof.add({profile.rows[i].radius, profile.rows[i].sup, profile.rows[i].ratio, exp_profile.rows[i].sup,
                  exp_profile.rows[i].ratio});
    Rng sweep = make_stream(seed, 2);
    for (double r : c.radius_grid)
        for (const auto& g : elements_of_length(c.dim, r, c.random_per_radius, sweep)) {
            const auto s = h.sandwich(g);
            if (!s.holds()) ++sandwich_violations;
            if (s.value < 0) ++negative;
        }

    MartingaleOptions mo;
    mo.paths = 400;
    mo.trajectories = c.trials;
    mo.horizon = c.horizon;
    mo.threads = c.threads;
    mo.check_convergence = false;
    const auto mart = martingale_diag(box_process(est.pooled, Box::centered(c.dim, 2.0)), c.measure, mo,
                                      derive_seed(seed, 3));
    Table one_step{"harmonic_martingale", {"t", "mean_diff", "se", "pass"}, {}};
    for (const auto& row : mart.one_step) one_step.add({double(row.time), row.mean_diff, row.se, row.pass ? 1.0 : 0.0});
    // the identity plus 8 random starts share the trajectory budget
    constexpr int kStarts = 9;
    Rng starts = make_stream(seed, 5);
    ConvergenceSummary conv;
    double worst_start = 1.0;
    for (int s = 0; s < kStarts; ++s) {
        const AffineElementd start = s == 0 ? AffineElementd::identity(c.dim) : random_element(c.dim, starts, 3.0, 5.0);
        const int n = c.trials / kStarts + (s < c.trials % kStarts ? 1 : 0);
        if (n == 0) continue;
        const auto part = walk_convergence(hf, c.measure, c.horizon, n, derive_seed(seed, 40 + s), start,
                                           mo.tolerance, c.threads);
        conv.trajectories += part.trajectories;
        conv.converging += part.converging;
        worst_start = std::min(worst_start, part.fraction);
    }
    conv.fraction = conv.trajectories > 0 ? double(conv.converging) / conv.trajectories : 0.0;

    // non-constancy: h at the identity against h far down the scale axis
    const auto h0 = h.evaluate(AffineElementd::identity(c.dim));
    const auto h1 = h.evaluate(AffineElementd::scaling_translation(-5.0, Eigen::VectorXd::Zero(c.dim)));

    out.summary["harmonic"] = {
        {"test_points", c.test_points},
        {"within_3se", within},
        {"harmonicity_pass", within == c.test_points},
        {"probe_flagged", probe_flagged},
        {"probe_pass", probe_flagged == c.test_points},
        {"sandwich_violations", sandwich_violations},
        {"negative_values", negative},
        {"max_ratio", profile.max_ratio},
        {"median_ratio", profile.median_ratio},
        {"linear", profile.linear},
        {"probe_linear", exp_profile.linear},
        {"one_step_pass", mart.one_step_pass},
        {"convergence_starts", kStarts},
        {"convergence_fraction", conv.fraction},
        {"convergence_worst_start", worst_start},
        {"convergence_pass", conv.fraction >= mo.required_fraction},
        {"h_identity", h0.value},
        {"h_identity_se", h0.se},
        {"h_contracted", h1.value},
        {"h_contracted_se", h1.se},
        {"non_constant", std::abs(h0.value - h1.value) > 6.0 * (h0.se + h1.se)},
    };
    out.tables.push_back(std::move(residual));
    out.tables.push_back(std::move(prof));
    out.tables.push_back(std::move(one_step));
}

void stopping(const ExperimentConfig& c, Context& ctx, Report& out) {
    const std::uint64_t seed = experiment_seed(c, "stopping");
    const EmpiricalMeasure& nu = *ctx.stationary().pooled;
    const OstReport ost = ost_check(nu, c.measure, Box::centered(c.dim, c.ost_u), Box::centered(c.dim, c.ost_v),
                                    c.trials, c.horizon, derive_seed(seed, 1), c.threads);
    const DeltaFit fit = delta_fit(c.measure, c.stop_z_grid, c.k0, c.trials, c.horizon, derive_seed(seed, 2), c.threads);
    Table delta{"stopping_delta", {"z", "hits", "probability", "se", "scaled", "scaled_se"}, {}};
    for (const auto& row : fit.rows)
        delta.add({row.z, double(row.hits), row.probability, row.se, row.scaled, row.scaled_se});
    Table order{"stopping_order", {"z", "hits_vz", "hits_uv", "violations"}, {}};
    int violations = 0;
    for (double z : c.stop_z_grid) {
        const auto rep = compare_stopping_times(c.measure, z, c.k0, c.trials, c.horizon,
                                                derive_seed(seed, 3 + static_cast<std::uint64_t>(z)), c.threads);
        order.add({z, double(rep.hits_vz), double(rep.hits_uv), double(rep.violations)});
        violations += rep.violations;
    }
    out.summary["stopping"] = {
        {"ost_hit_probability", ost.hit_probability},
        {"ost_mass_u", ost.mass_u},
        {"ost_mass_v", ost.mass_v},
        {"ost_margin", ost.margin},
        {"ost_se", ost.se},
        {"ost_pass", ost.pass},
        {"delta", fit.delta},
        {"delta_se", fit.delta_se},
        {"delta_separated", fit.separated},
        {"trend_slope", fit.trend_slope},
        {"trend_se", fit.trend_se},
        {"no_trend", fit.no_trend},
        {"order_violations", violations},
        {"order_pass", violations == 0},
    };
    out.tables.push_back(std::move(delta));
    out.tables.push_back(std::move(order));
}

void hf_dim(const ExperimentConfig& c, Report& out) {
    const std::uint64_t seed = experiment_seed(c, "hf-dim");
    json summary;
    for (const auto& g : c.growth) {
        const auto rep = growth_classify(GroupPresentation::by_name(g.group), g.radii);
        Table t{"hf-dim_growth_" + g.group, {"r", "size"}, {}};
        for (std::size_t i = 0; i < rep.radii.size(); ++i) t.add({double(rep.radii[i]), double(rep.sizes[i])});
        summary["growth"][g.group] = {{"verdict", to_string(rep.verdict)},
                                      {"degree", rep.degree},
                                      {"rate", rep.rate},
                                      {"rss_polynomial", rep.rss_polynomial},
                                      {"rss_exponential", rep.rss_exponential}};
        out.tables.push_back(std::move(t));
    }
    for (const auto& s : c.hf) {
        const auto group = GroupPresentation::by_name(s.group);
        HfOptions opts;
        opts.inner = s.inner_fixed >= 0 ? InnerRadius::fixed(s.inner_fixed) : InnerRadius::offset(s.inner_offset);
        const auto table = hf_dimension_estimate(group, DiscreteMeasure::generator_uniform(group), s.r_outer, opts);
        Table t{"hf-dim_table_" + s.group,
                {"r_outer", "r_inner", "ball_size", "dimension", "gap", "eps_rank", "sigma1", "sigma2", "sigma3",
                 "sigma4", "sigma5", "sigma6"},
                {}};
        std::vector<int> dims;
        double min_gap = std::numeric_limits<double>::infinity();
        for (const auto& row : table) {
            std::vector<double> r{double(row.r_outer), double(row.r_inner), double(row.ball_size),
                                  double(row.dimension), row.gap, double(row.eps_rank)};
            for (Eigen::Index k = 0; k < 6; ++k)
                r.push_back(k < row.singular_values.size() ? row.singular_values(k) : 0.0);
            t.add(std::move(r));
            dims.push_back(row.dimension);
            min_gap = std::min(min_gap, row.gap);
        }
        int dim = 0;
        const bool stable = stabilizes(table, &dim);
        summary["hf"][s.group] = {{"dimensions", dims},
                                  {"min_gap", number(min_gap)},
                                  {"stabilizes", stable},
                                  {"same_dimension", std::all_of(dims.begin(), dims.end(),
                                                                 [&](int d) { return d == dims.front(); })},
                                  {"strictly_increasing", strictly_increasing(table)}};
        out.tables.push_back(std::move(t));
    }

    // hitting law of the simple walk on Z in 2Z, and the restriction check
    const auto fixture = SubgroupFixture::integers_even();
    HfOptions ropts;
    ropts.inner = InnerRadius::fixed(4);
    const std::vector<int> radii{8, 10, 12, 14};
    const auto rep = restriction_isomorphism_check(fixture, radii, ropts, static_cast<std::size_t>(c.hitting_samples),
                                                   derive_seed(seed, 1));
    const std::map<std::int64_t, double> exact{{-1, 0.25}, {0, 0.5}, {1, 0.25}};
    Table law{"hf-dim_hitting", {"value", "probability", "se", "exact"}, {}};
    bool law_pass = true;
    std::map<std::int64_t, double> seen;
    for (std::size_t i = 0; i < rep.subgroup_law.support.size(); ++i)
        seen[rep.subgroup_law.support[i][0]] = rep.subgroup_law.weights[i];
    for (const auto& [y, p] : exact) {
        const double phat = seen.count(y) ? seen[y] : 0.0;
        const double se = std::sqrt(p * (1.0 - p) / c.hitting_samples);
        law_pass = law_pass && std::abs(phat - p) <= 3.0 * se;
        law.add({2.0 * double(y), phat, se, p});
    }
    law_pass = law_pass && seen.size() == exact.size();
    DiscreteMeasure skewed;
    skewed.support = {{1}, {-1}};
    skewed.weights = {0.7, 0.3};
    const auto mismatched = restriction_isomorphism_check(fixture, radii, ropts, 0, 0, skewed);
    std::vector<int> gd, hd;
    for (const auto& row : rep.group_table) gd.push_back(row.dimension);
    for (const auto& row : rep.subgroup_table) hd.push_back(row.dimension);
    summary["hitting"] = {{"samples", c.hitting_samples},
                          {"law_pass", law_pass},
                          {"restriction_pass", rep.pass},
                          {"group_dimensions", gd},
                          {"subgroup_dimensions", hd},
                          {"mismatched_law_pass", mismatched.pass}};
    out.summary["hf-dim"] = summary;
    out.tables.push_back(std::move(law));
}

void repr(const ExperimentConfig& c, Report& out) {
    const std::uint64_t seed = experiment_seed(c, "repr");
    const auto type_s = random_type_s_rep({2, 1, 2}, 3, derive_seed(seed, 1));
    const auto words = random_words(3, static_cast<std::size_t>(c.words), c.word_length, derive_seed(seed, 2));
    const auto block = verify_block_form(type_s, words);
    const auto scal = extract_scalings(type_s, words);
    const auto rot = rotation_block_rep({2, 2}, 2, derive_seed(seed, 3));
    const auto rot_scal = extract_scalings(rot, random_words(2, 200, c.word_length, derive_seed(seed, 4)));
    const auto diag = diagonal_integer_rep();
    const auto diag_scal = extract_scalings(diag, {{1}, {1, 1}, {-1}});

    const auto z1 = GroupPresentation::free_abelian(1);
    const auto z2 = GroupPresentation::free_abelian(2);
    std::vector<GroupElement> t1, p1, t2, p2;
    for (int i = -5; i <= 5; ++i) {
        t1.push_back({i});
        p1.push_back({2 * i + 1});
    }
    for (int i = -3; i <= 3; ++i)
        for (int j = -3; j <= 3; ++j) {
            t2.push_back({i, j});
            p2.push_back({i + 1, 2 * j});
        }
    const int rank_const = orbit_span_dim(z2, [](const GroupElement&) { return 1.0; }, t2, p2);
    const int rank_coord = orbit_span_dim(z2, [](const GroupElement& x) { return double(x[0]); }, t2, p2);
    const int rank_square = orbit_span_dim(z1, [](const GroupElement& x) { return double(x[0] * x[0]); }, t1, p1);

    std::vector<int> grid;
    for (int n = 0; n <= 20; ++n) grid.push_back(n);
    const auto rec = step_recursion_check(2.0, 1.0, 2.0, grid);
    const auto flat = step_recursion_check(1.0, 1.0, 2.0, grid);
    Table table{"repr_recursion", {"n", "scaling", "affine", "affine_a1"}, {}};
    double closed_form_error = 0.0;
    for (std::size_t i = 0; i < rec.rows.size(); ++i) {
        const double n = rec.rows[i].n;
        table.add({n, rec.rows[i].scaling, rec.rows[i].affine, flat.rows[i].affine});
        closed_form_error = std::max({closed_form_error, std::abs(rec.rows[i].scaling - std::exp2(n)),
                                      std::abs(rec.rows[i].affine - std::exp2(n)),
                                      std::abs(flat.rows[i].affine - (1.0 + n))});
    }

    out.summary["repr"] = {
        {"block_form_pass", block.pass},
        {"block_max_violation", block.max_violation},
        {"homomorphism_residual", scal.homomorphism_residual},
        {"orthogonality_residual", scal.orthogonality_residual},
        {"rotation_scaling_residual", rot_scal.homomorphism_residual},
        {"rotation_orthogonality_residual", rot_scal.orthogonality_residual},
        {"diagonal_scalings", diag_scal.scalings},
        {"rank_constant", rank_const},
        {"rank_coordinate", rank_coord},
        {"rank_square", rank_square},
        {"recursion_closed_form_error", closed_form_error},
        {"recursion_log_slope", rec.log_slope},
        {"recursion_sub_exponential", rec.sub_exponential},
        {"flat_sub_exponential", flat.sub_exponential},
    };
    out.tables.push_back(std::move(table));
}

}  // namespace

Report run_experiment(const ExperimentConfig& config) {
    config.validate();
    Report report;
    report.experiment = config.experiment;
    Context ctx(config);
    const bool all = config.experiment == "full-suite";
    const auto wants = [&](const char* tag) { return all || config.experiment == tag; };
    if (wants("group-algebra")) group_algebra(config, report);
    if (wants("stationary")) stationary(config, ctx, report);
    if (wants("harmonic")) harmonic(config, ctx, report);
    if (wants("stopping")) stopping(config, ctx, report);
    if (wants("hf-dim")) hf_dim(config, report);
    if (wants("repr")) repr(config, report);
    return report;
}

// ---------------------------------------------------------------- output

namespace {

void write_csv(const Table& t, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < t.columns.size(); ++i) f << (i ? "," : "") << t.columns[i];
    f << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << format_number(row[i]);
        f << '\n';
    }
}

Table read_csv(const std::string& name, const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    Table t{name, {}, {}};
    std::string line, cell;
    if (std::getline(f, line)) {
        std::stringstream ss(line);
        while (std::getline(ss, cell, ',')) t.columns.push_back(cell);
    }
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        t.add(std::move(row));
    }
    return t;
}

json table_json(const Table& t) {
    json rows = json::array();
    for (const auto& row : t.rows) {
        json r = json::array();
        for (double v : row) r.push_back(number(v));
        rows.push_back(r);
    }
    return {{"name", t.name}, {"columns", t.columns}, {"rows", rows}};
}

Table table_from_json(const json& j) {
    Table t{j.at("name").get<std::string>(), j.at("columns").get<std::vector<std::string>>(), {}};
    for (const auto& r : j.at("rows")) {
        std::vector<double> row;
        for (const auto& v : r) row.push_back(v.is_string() ? std::stod(v.get<std::string>()) : v.get<double>());
        t.add(std::move(row));
    }
    return t;
}

}  // namespace

std::vector<std::filesystem::path> write_report(const Report& report, const ExperimentConfig& config,
                                                double wall_seconds) {
    const std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written{dir / "summary.json"};
    json files = json::array();
    for (const auto& t : report.tables) {
        const auto path = dir / (t.name + "." + config.format);
        if (config.format == "csv") {
            write_csv(t, path);
        } else {
            std::ofstream f(path);
            f << table_json(t).dump(2) << '\n';
        }
        files.push_back(path.filename().string());
        written.push_back(path);
    }
    json summary{{"artifact", kArtifactName},
                 {"version", artifact_version()},
                 {"experiment", report.experiment},
                 {"config", config.to_json()},
                 {"results", report.summary},
                 {"tables", files},
                 {"wall_time_seconds", wall_seconds}};
    std::ofstream f(written.front());
    if (!f) throw std::runtime_error("cannot write " + written.front().string());
    f << summary.dump(2) << '\n';
    return written;
}

Report load_report(const std::filesystem::path& dir) {
    std::ifstream f(dir / "summary.json");
    if (!f) throw std::runtime_error("no summary.json in " + dir.string());
    const json summary = json::parse(f);
    Report report;
    report.experiment = summary.at("experiment").get<std::string>();
    report.summary = summary.at("results");
    for (const auto& file : summary.at("tables")) {
        const std::filesystem::path path = dir / file.get<std::string>();
        const std::string name = path.stem().string();
        if (path.extension() == ".csv") {
            report.tables.push_back(read_csv(name, path));
        } else {
            std::ifstream tf(path);
            report.tables.push_back(table_from_json(json::parse(tf)));
        }
    }
    return report;
}

std::vector<std::string> plot_kinds() { return {"stationary", "stopping", "harmonic", "hf-dim"}; }

void emit_plot_data(const Report& report, const std::string& kind, const std::filesystem::path& path) {
    struct Series {
        const Table* table;
        std::size_t x, y;
    };
    std::vector<Series> series;
    const auto pick = [&](const Table* t, const char* x, const char* y) {
        if (t) series.push_back({t, t->column(x), t->column(y)});
    };
    if (kind == "stationary") {
        pick(report.find("stationary_growth"), "z", "mass");
    } else if (kind == "stopping") {
        pick(report.find("stopping_delta"), "z", "scaled");
    } else if (kind == "harmonic") {
        pick(report.find("harmonic_profile"), "r", "sup");
    } else if (kind == "hf-dim") {
        for (const auto& t : report.tables)
            if (t.name.rfind("hf-dim_table_", 0) == 0) pick(&t, "r_outer", "eps_rank");
    } else {
        throw std::invalid_argument("unknown plot kind '" + kind + "'");
    }
    if (series.empty()) throw MissingSeries(kind);

    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t s = 0; s < series.size(); ++s) {
        const Series& ser = series[s];
        if (s > 0) f << "\n\n";
        f << "# " << ser.table->name << ": " << ser.table->columns[ser.x] << ' ' << ser.table->columns[ser.y] << '\n';
        for (const auto& row : ser.table->rows) f << format_number(row[ser.x]) << ' ' << format_number(row[ser.y]) << '\n';
    }
}

}  // namespace affwalk
