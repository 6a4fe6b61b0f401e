#include "logdet/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>

#include "logdet/errors.hpp"
#include "logdet/parallel.hpp"

namespace logdet::experiments {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Offset for auxiliary streams (eps probe) so they never collide with trials.
constexpr std::uint64_t kAuxStream = 0x8000000000000000ULL;

std::string csv_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json json_number(double v)
{
    if (std::isfinite(v))
        return v;
    return csv_number(v);
}

json json_optional(const std::optional<double>& v)
{
    if (!v)
        return "unavailable";
    return json_number(*v);
}

json summary_to_json(const noise::Summary& s)
{
    json q = json::object();
    for (const auto& [p, v] : s.quantiles) {
        char key[16];
        std::snprintf(key, sizeof key, "q%02d", static_cast<int>(std::lround(p * 100)));
        q[key] = json_number(v);
    }
    return {{"mean", json_number(s.mean)}, {"quantiles", q}};
}

json params_json(const equiv::EquivalenceParams& p)
{
    return {{"alpha", p.alpha}, {"M", p.m},           {"nu_N", p.nu_n},     {"gamma", p.gamma},
            {"eta", p.eta},     {"delta", p.delta},   {"tau", p.tau},       {"kappa1", p.kappa1},
            {"kappa2", p.kappa2}, {"beta", p.beta},   {"L", p.L},           {"C", p.C},
            {"headroom", p.headroom}};
}

double mean_of(std::span<const double> v)
{
    double acc = 0.0;
    for (double x : v)
        acc += x;
    return acc / static_cast<double>(v.size());
}

double sd_of(std::span<const double> v, double mean)
{
    if (v.size() < 2)
        return 0.0;
    double acc = 0.0;
    for (double x : v)
        acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

} // namespace

equiv::EquivalenceParams resolve_params(const ParamSettings& s, std::span<const double> singvals)
{
    const std::size_t n = singvals.size();
    equiv::EquivalenceParams p;
    p.gamma = s.gamma;
    p.eta = s.eta;
    p.delta = s.delta;
    p.tau = s.tau;
    p.kappa1 = s.kappa1;
    p.kappa2 = s.kappa2;
    p.beta = s.beta;
    p.L = s.L;
    p.C = s.C;
    p.headroom = s.headroom;
    if (s.alpha) {
        p.alpha = *s.alpha;
    } else {
        const auto choice = equiv::auto_alpha(singvals, s.nu_target, s.L, s.C);
        if (!choice)
            throw ConfigError("no admissible alpha: every candidate in [C N^-L, 1] deflates more than nu_target N / "
                              "log N singular values");
        p.alpha = choice->alpha;
    }
    p.m = equiv::count_below(singvals, p.alpha);
    p.nu_n = equiv::nu_from_count(p.m, n);
    equiv::validate(p, n);
    return p;
}

TrialRecord evaluate_trial(const ComplexMatrix& a, const noise::NoiseModel& model, double delta, double alpha,
                           std::size_t m, double rhs, const equiv::ErrorBudget& budget, std::size_t trial,
                           std::uint64_t seed_used)
{
    const auto n = static_cast<std::size_t>(a.rows());
    const ComplexMatrix g = noise::sample(model, n, seed_used);
    const ComplexMatrix perturbed = delta == 0.0 ? a : ComplexMatrix(a + Complex(delta, 0.0) * g);

    TrialRecord r;
    r.trial = trial;
    r.seed_used = seed_used;
    r.n = n;
    r.delta = delta;
    r.alpha = alpha;
    r.m = m;
    r.lhs = linalg::log_abs_det(perturbed) / static_cast<double>(n);
    r.rhs = rhs;
    r.error = r.lhs == r.rhs ? 0.0 : std::abs(r.lhs - r.rhs);
    r.budget = budget;
    r.within_budget = r.error <= budget.error_bound;
    r.norm_g = linalg::operator_norm(g);
    r.s_min_perturbed = linalg::smallest_singular_value(perturbed);
    r.contraction = delta * r.norm_g / alpha;
    return r;
}

Theorem2Result run_theorem2(const ExperimentConfig& config, std::size_t workers)
{
    validate(config);
    const ComplexMatrix a = ensembles::realize(config.matrix);
    const auto s = ensembles::spectrum(config.matrix, a);
    const std::size_t n = s.size();

    Theorem2Result out;
    out.n = n;
    out.params = resolve_params(config.params, s);
    const auto& p = out.params;
    out.budget = equiv::error_budget(p, n);

    if (p.delta > 0.0 && config.params.estimate_eps) {
        const double beta = p.beta;
        const auto probe = noise::anti_concentration_probe(
            a, config.model, config.params.eps_trials, std::span(&beta, 1),
            noise::substream_seed(config.seed, kAuxStream), noise::RescaledProbe{p.delta, p.gamma}, workers);
        out.budget.eps_n = probe.entries.front().rescaled_frequency;
    }

    const double rhs = equiv::deterministic_equivalent(s, p.alpha);
    out.records.resize(config.trials);
    parallel_for(config.trials, workers, [&](std::size_t k) {
        out.records[k] = evaluate_trial(a, config.model, p.delta, p.alpha, p.m, rhs, out.budget, k,
                                        noise::substream_seed(config.seed, k));
    });

    auto& sum = out.summary;
    sum.trials = config.trials;
    sum.rhs = rhs;
    std::vector<double> lhs, err;
    for (const auto& r : out.records) {
        lhs.push_back(r.lhs);
        err.push_back(r.error);
        sum.within_budget += r.within_budget ? 1 : 0;
    }
    sum.success_frequency = static_cast<double>(sum.within_budget) / static_cast<double>(sum.trials);
    sum.partial_floor = 1.0 - out.budget.tail_prob;
    sum.eps_hat = out.budget.eps_n;
    if (const auto fp = out.budget.failure_prob())
        sum.floor = 1.0 - *fp;
    sum.outside_theorem = p.delta < std::pow(static_cast<double>(n), -p.gamma);
    sum.lhs = noise::summarize(lhs);
    sum.error = noise::summarize(err);
    return out;
}

Theorem1Result run_theorem1(const ExperimentConfig& config, double gamma, double eta,
                            equiv::SumConvention convention, std::size_t workers)
{
    if (!(gamma > 0.5))
        throw ConfigError("theorem 1 requires gamma > 1/2");
    if (!(eta > 0.0))
        throw ConfigError("theorem 1 requires eta > 0");
    if (config.trials < 1)
        throw ConfigError("trials must be at least 1");
    std::vector<std::size_t> sizes = config.n_list;
    if (sizes.empty())
        sizes.push_back(config.matrix.n);

    Theorem1Result out;
    out.convention = convention;
    for (std::size_t pos = 0; pos < sizes.size(); ++pos) {
        const std::size_t n = sizes[pos];
        const auto spec = ensembles::resized(config.matrix, n);
        const ComplexMatrix a = ensembles::realize(spec);
        const auto s = ensembles::spectrum(spec, a);
        const double nd = static_cast<double>(n);

        SweepPoint pt;
        pt.n = n;
        pt.n_star = equiv::n_star(s, gamma, eta);
        pt.delta = std::pow(nd, -gamma);
        pt.rhs = equiv::bpz_equivalent(s, pt.n_star, convention);
        pt.rhs_infinite = std::isinf(pt.rhs);

        equiv::ErrorBudget budget;
        budget.error_bound = kNaN;
        budget.tail_prob = kNaN;
        const double cutoff = std::pow(nd, eta - gamma);

        std::vector<TrialRecord> records(config.trials);
        parallel_for(config.trials, workers, [&](std::size_t k) {
            const std::uint64_t key = (static_cast<std::uint64_t>(pos) << 32) | k;
            records[k] = evaluate_trial(a, config.model, pt.delta, cutoff, pt.n_star, pt.rhs, budget, k,
                                        noise::substream_seed(config.seed, key));
            records[k].within_budget = false;
        });

        std::vector<double> err, lhs;
        for (const auto& r : records) {
            err.push_back(r.error);
            lhs.push_back(r.lhs);
        }
        pt.median_error = pt.rhs_infinite ? std::numeric_limits<double>::infinity() : noise::empirical_quantile(err, 0.5);
        pt.q25_error = pt.rhs_infinite ? pt.median_error : noise::empirical_quantile(err, 0.25);
        pt.q75_error = pt.rhs_infinite ? pt.median_error : noise::empirical_quantile(err, 0.75);
        pt.median_lhs = noise::empirical_quantile(lhs, 0.5);
        out.flagged += pt.rhs_infinite ? 1 : 0;
        out.points.push_back(pt);
        out.records.insert(out.records.end(), records.begin(), records.end());
    }

    std::vector<double> trend;
    for (const auto& pt : out.points)
        if (!pt.rhs_infinite)
            trend.push_back(pt.median_error);
    out.decreasing = trend.size() >= 2;
    for (std::size_t i = 1; i < trend.size(); ++i)
        out.decreasing = out.decreasing && trend[i] < trend[i - 1];
    return out;
}

std::optional<grushin::CheckRecord> GrushinSuiteReport::first_failure() const
{
    for (const auto& r : records)
        if (!r.pass)
            return r;
    return std::nullopt;
}

GrushinSuiteReport run_grushin_suite(const ExperimentConfig& config, std::size_t workers)
{
    using grushin::CheckRecord;
    using grushin::Relation;

    if (config.trials < 1)
        throw ConfigError("trials must be at least 1");
    const ComplexMatrix a = ensembles::realize(config.matrix);
    const auto s = linalg::singular_values_descending(a);
    const std::size_t n = s.size();
    const double nd = static_cast<double>(n);
    const auto& ps = config.params;

    double alpha = 0.0;
    if (ps.alpha) {
        alpha = *ps.alpha;
        if (!(alpha > 0.0))
            throw ConfigError("params.alpha must be positive");
    } else {
        const auto choice = equiv::auto_alpha(s, ps.nu_target, ps.L, ps.C);
        if (!choice)
            throw ConfigError("no admissible alpha for the Grushin suite");
        alpha = choice->alpha;
    }
    if (!(ps.delta >= 0.0))
        throw ConfigError("params.delta must be nonnegative");
    const std::size_t m = equiv::count_below(s, alpha);
    const double scale = ps.tolerance_scale;

    GrushinSuiteReport report;
    report.n = n;
    report.m = m;
    report.alpha = alpha;

    const auto [sys, blocks] = grushin::build_grushin(a, m);
    const double a_norm = sys.svd.t(sys.svd.t.size() - 1);
    const double e_norm = linalg::operator_norm(blocks.e);
    const double inverse_tol = 1e-10 * static_cast<double>(n + m) * std::max(1.0, a_norm) * std::max(1.0, e_norm);
    auto& recs = report.records;

    recs.push_back(CheckRecord::make("inverse_two_sided", 0, grushin::two_sided_residual(sys, blocks), 0.0,
                                     scale * inverse_tol, Relation::equal));
    if (m == n || sys.svd.t(static_cast<Eigen::Index>(m)) >= 0.01) {
        const auto direct = grushin::direct_inverse(sys);
        double worst = 0.0;
        worst = std::max(worst, (direct.e - blocks.e).cwiseAbs().maxCoeff());
        if (m > 0) {
            worst = std::max(worst, (direct.e_plus - blocks.e_plus).cwiseAbs().maxCoeff());
            worst = std::max(worst, (direct.e_minus - blocks.e_minus).cwiseAbs().maxCoeff());
            worst = std::max(worst, (direct.e_minus_plus - blocks.e_minus_plus).cwiseAbs().maxCoeff());
        }
        recs.push_back(CheckRecord::make("closed_form_vs_direct", 0, worst, 0.0, scale * inverse_tol,
                                         Relation::equal));
    }
    const auto det = grushin::grushin_det_identity(sys);
    recs.push_back(CheckRecord::make("gp10_det_identity", 0, det.lhs, det.rhs, scale * 1e-8 * nd, Relation::equal));
    for (auto& r : grushin::norm_estimates(sys, blocks, alpha, 1e-12 * std::max(1.0, e_norm)))
        recs.push_back(std::move(r));

    std::vector<std::vector<CheckRecord>> per_trial(config.trials);
    std::vector<char> skipped(config.trials, 0);
    parallel_for(config.trials, workers, [&](std::size_t k) {
        auto& out = per_trial[k];
        const ComplexMatrix g = noise::sample(config.model, n, noise::substream_seed(config.seed, k));
        const auto pert = grushin::invert_perturbed(sys, blocks, g, ps.delta, alpha);

        const auto schur = grushin::schur_logdet(sys, pert);
        out.push_back(CheckRecord::make("gpp7_schur_logdet", k, schur.lhs, schur.rhs, scale * 1e-7 * nd,
                                        Relation::equal));

        if (pert.contraction > 0.5) {
            skipped[k] = 1;
        } else {
            for (auto r : grushin::perturbed_bounds(sys, blocks, pert, 1e-12 * std::max(1.0, e_norm))) {
                r.n = k;
                out.push_back(std::move(r));
            }
            const auto drift = grushin::perturbation_drift_bound(sys, pert);
            out.push_back(CheckRecord::make("gpp9_drift", k, drift.drift, drift.bound, 1e-10, Relation::at_most));

            const int terms = ps.neumann_terms;
            const auto series = grushin::invert_perturbed(sys, blocks, g, ps.delta, alpha,
                                                          grushin::Inversion::neumann(terms));
            const double c = pert.contraction;
            const double block_scale = std::max(1.0, 1.0 / alpha);
            const double tail = 2.0 * std::pow(c, terms + 1) * block_scale;
            out.push_back(CheckRecord::make("gpp5_neumann_vs_direct", k,
                                            grushin::block_difference(series.blocks, pert.blocks), tail,
                                            scale * 1e-9 * block_scale * std::max(1.0, a_norm), Relation::at_most));
        }

        if (m > 0) {
            const auto inter = grushin::interlacing_check(sys, pert);
            for (auto r : inter.records()) {
                r.check += "_trial" + std::to_string(k);
                out.push_back(std::move(r));
            }
        }
    });

    for (std::size_t k = 0; k < config.trials; ++k) {
        report.skipped_contraction += skipped[k] ? 1 : 0;
        for (auto& r : per_trial[k])
            recs.push_back(std::move(r));
    }

    std::map<std::string, CheckSummary> by_name;
    std::vector<std::string> order;
    for (const auto& r : recs) {
        std::string name = r.check;
        if (const auto pos = name.find("_trial"); pos != std::string::npos)
            name.erase(pos);
        auto [it, inserted] = by_name.try_emplace(name, CheckSummary{name, 0, 0, std::numeric_limits<double>::infinity()});
        if (inserted)
            order.push_back(name);
        auto& c = it->second;
        ++c.evaluated;
        c.failed += r.pass ? 0 : 1;
        const double margin = r.margin();
        if (std::isnan(margin) || margin < c.worst_margin)
            c.worst_margin = margin;
        report.pass = report.pass && r.pass;
    }
    for (const auto& name : order)
        report.checks.push_back(by_name.at(name));
    return report;
}

std::vector<FieldPoint> log_potential_field(const ExperimentConfig& config, std::size_t workers)
{
    if (!config.z_grid)
        throw ConfigError("field mode requires z_grid");
    if (config.trials < 1)
        throw ConfigError("trials must be at least 1");
    const ComplexMatrix base = ensembles::realize(config.matrix);
    const auto n = static_cast<Eigen::Index>(base.rows());
    const auto zs = config.z_grid->points();
    const std::size_t trials = config.trials;

    std::vector<FieldPoint> out(zs.size());
    // One grid point at a time keeps memory at O(N^2 + trials) regardless of grid size.
    for (std::size_t p = 0; p < zs.size(); ++p) {
        // Without a configured shift, A_z is exactly the shifted spec; point p
        // then matches run_theorem2 on that spec.
        ComplexMatrix a;
        std::vector<double> s;
        if (!config.matrix.shift) {
            auto spec = config.matrix;
            spec.shift = zs[p];
            a = ensembles::realize(spec);
            s = ensembles::spectrum(spec, a);
        } else {
            a = zs[p] * ComplexMatrix::Identity(n, n) - base;
            s = linalg::singular_values_descending(a);
        }
        const auto params = resolve_params(config.params, s);
        const auto budget = equiv::error_budget(params, s.size());
        const double rhs = equiv::deterministic_equivalent(s, params.alpha);

        std::vector<double> lhs(trials);
        parallel_for(trials, workers, [&](std::size_t k) {
            const auto key = static_cast<std::uint64_t>(p * trials + k);
            lhs[k] = evaluate_trial(a, config.model, params.delta, params.alpha, params.m, rhs, budget, k,
                                    noise::substream_seed(config.seed, key))
                         .lhs;
        });
        FieldPoint& fp = out[p];
        fp.z = zs[p];
        fp.rhs = rhs;
        fp.lhs_mean = mean_of(lhs);
        fp.lhs_sd = sd_of(lhs, fp.lhs_mean);
        fp.trials = trials;
        fp.alpha = params.alpha;
        fp.m = params.m;
    }
    return out;
}

const char* const kRecordsHeader =
    "trial,seed_used,N,delta,alpha,M,lhs,rhs,error,error_bound,within_budget,norm_G,s_min_perturbed,contraction";
const char* const kFieldHeader = "re_z,im_z,rhs,lhs_mean,lhs_sd,trials";

void write_records_csv(std::ostream& os, std::span<const TrialRecord> records)
{
    os << kRecordsHeader << '\n';
    for (const auto& r : records) {
        os << r.trial << ',' << r.seed_used << ',' << r.n << ',' << csv_number(r.delta) << ','
           << csv_number(r.alpha) << ',' << r.m << ',' << csv_number(r.lhs) << ',' << csv_number(r.rhs) << ','
           << csv_number(r.error) << ',' << csv_number(r.budget.error_bound) << ','
           << (r.within_budget ? "true" : "false") << ',' << csv_number(r.norm_g) << ','
           << csv_number(r.s_min_perturbed) << ',' << csv_number(r.contraction) << '\n';
    }
}

void write_field_csv(std::ostream& os, std::span<const FieldPoint> points)
{
    os << kFieldHeader << '\n';
    for (const auto& p : points) {
        os << csv_number(p.z.real()) << ',' << csv_number(p.z.imag()) << ',' << csv_number(p.rhs) << ','
           << csv_number(p.lhs_mean) << ',' << csv_number(p.lhs_sd) << ',' << p.trials << '\n';
    }
}

json summary_json(const Theorem2Result& r)
{
    const auto& s = r.summary;
    return {{"N", r.n},
            {"params", params_json(r.params)},
            {"error_bound", json_number(r.budget.error_bound)},
            {"trials", s.trials},
            {"within_budget", s.within_budget},
            {"success_frequency", s.success_frequency},
            {"partial_floor", s.partial_floor},
            {"eps_hat", json_optional(s.eps_hat)},
            {"floor", json_optional(s.floor)},
            {"outside_theorem", s.outside_theorem},
            {"rhs", json_number(s.rhs)},
            {"lhs", summary_to_json(s.lhs)},
            {"error", summary_to_json(s.error)}};
}

json summary_json(const Theorem1Result& r)
{
    json pts = json::array();
    for (const auto& p : r.points) {
        pts.push_back({{"N", p.n},
                       {"n_star", p.n_star},
                       {"delta", p.delta},
                       {"rhs", json_number(p.rhs)},
                       {"rhs_infinite", p.rhs_infinite},
                       {"median_error", json_number(p.median_error)},
                       {"q25_error", json_number(p.q25_error)},
                       {"q75_error", json_number(p.q75_error)},
                       {"median_lhs", json_number(p.median_lhs)}});
    }
    return {{"convention", equiv::to_string(r.convention)},
            {"points", pts},
            {"flagged_infinite_rhs", r.flagged},
            {"median_error_decreasing", r.decreasing}};
}

json summary_json(const GrushinSuiteReport& r)
{
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"check", c.check},
                          {"evaluated", c.evaluated},
                          {"failed", c.failed},
                          {"worst_margin", json_number(c.worst_margin)}});
    json failures = json::array();
    for (const auto& rec : r.records)
        if (!rec.pass)
            failures.push_back(rec);
    return {{"N", r.n},
            {"M", r.m},
            {"alpha", r.alpha},
            {"pass", r.pass},
            {"skipped_contraction", r.skipped_contraction},
            {"checks", checks},
            {"failures", failures}};
}

std::ofstream open_output(const std::string& path)
{
    const auto parent = std::filesystem::path(path).parent_path();
    std::error_code ec;
    if (!parent.empty())
        std::filesystem::create_directories(parent, ec);
    if (ec)
        throw IoError("cannot create directory '" + parent.string() + "': " + ec.message());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write '" + path + "'");
    return out;
}

void write_results(std::span<const TrialRecord> records, const std::string& path_prefix)
{
    const std::string path = path_prefix + ".csv";
    auto out = open_output(path);
    write_records_csv(out, records);
    if (!out)
        throw IoError("write failed for '" + path + "'");
}

void write_field(std::span<const FieldPoint> points, const std::string& path_prefix)
{
    const std::string path = path_prefix + "_field.csv";
    auto out = open_output(path);
    write_field_csv(out, points);
    if (!out)
        throw IoError("write failed for '" + path + "'");
}

void write_json(const json& j, const std::string& path)
{
    auto out = open_output(path);
    out << j.dump(2) << '\n';
    if (!out)
        throw IoError("write failed for '" + path + "'");
}

} // namespace logdet::experiments
