// logdet-equiv: Monte Carlo harness and verification suites for the
// log-determinant deterministic equivalent.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "logdet/errors.hpp"
#include "logdet/experiments.hpp"

namespace {

using namespace logdet;
using experiments::ExperimentConfig;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitViolation = 2;
constexpr int kExitConfig = 3;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> trials;
    std::optional<std::size_t> workers;
    std::optional<double> alpha;
    std::optional<double> delta;
    std::optional<double> gamma;
    std::optional<double> eta;
    std::optional<double> tau;
    std::optional<double> nu_target;
    std::optional<double> tolerance_scale;
    std::optional<std::string> matrix;
    std::optional<std::size_t> n;
    std::optional<std::string> model;
    std::optional<std::string> convention;
    std::vector<std::size_t> n_list;
    std::string z_grid;
    std::vector<double> taus{2.0, 5.0, 10.0};
    std::vector<double> betas{2.0};
    bool estimate_eps = false;
};

void add_shared_flags(CLI::App* cmd, Options& o)
{
    cmd->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "Base seed (64-bit)");
    cmd->add_option("--out", o.out, "Output path prefix");
    cmd->add_option("--trials", o.trials, "Number of Monte Carlo trials");
    cmd->add_option("--workers", o.workers, "Worker threads (default: $LOGDET_EQUIV_WORKERS or 1)");
    cmd->add_option("--alpha", o.alpha, "Singular value cutoff alpha (default: automatic)");
    cmd->add_option("--delta", o.delta, "Noise amplitude delta");
    cmd->add_option("--gamma", o.gamma, "Noise scale exponent gamma");
    cmd->add_option("--eta", o.eta, "Exponent eta, eps_N = N^-eta");
    cmd->add_option("--tau", o.tau, "Tail parameter tau");
    cmd->add_option("--nu-target", o.nu_target, "nu_N target for automatic alpha");
    cmd->add_option("--matrix", o.matrix, "jordan | zero | bidiag:A,B | diag:V[xK],... | file:PATH, optional @z shift");
    cmd->add_option("--n", o.n, "Matrix size N");
    cmd->add_option("--model", o.model,
                    "complex_ginibre | real_gaussian | rademacher_complex | uniform_complex");
    cmd->add_option("--convention", o.convention, "inclusive | drop_all_small");
}

std::size_t resolve_workers(const Options& o)
{
    if (o.workers)
        return std::max<std::size_t>(*o.workers, 1);
    if (const char* env = std::getenv("LOGDET_EQUIV_WORKERS")) {
        try {
            return std::max<std::size_t>(std::stoul(env), 1);
        } catch (const std::exception&) {
            throw ConfigError(std::string("LOGDET_EQUIV_WORKERS is not a count: '") + env + "'");
        }
    }
    return 1;
}

experiments::ZGrid parse_grid(const std::string& text)
{
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        v.push_back(std::stod(item));
    if (v.size() != 5 || v[4] < 1)
        throw ConfigError("--z-grid expects re_min,re_max,im_min,im_max,steps");
    return {v[0], v[1], v[2], v[3], static_cast<std::size_t>(v[4])};
}

ExperimentConfig build_config(const Options& o, experiments::Mode mode, const char* default_matrix)
{
    ExperimentConfig c;
    if (!o.config.empty()) {
        c = experiments::read_config(o.config);
    } else {
        c.matrix = ensembles::parse_matrix_spec(default_matrix, 100);
        c.trials = 10;
    }
    if (o.matrix || o.n) {
        const std::size_t n = o.n.value_or(c.matrix.n);
        c.matrix = o.matrix ? ensembles::parse_matrix_spec(*o.matrix, n) : ensembles::resized(c.matrix, n);
    }
    if (o.seed)
        c.seed = *o.seed;
    if (o.trials)
        c.trials = *o.trials;
    if (!o.out.empty())
        c.output = o.out;
    if (o.model)
        c.model.kind = noise::parse_noise_kind(*o.model);
    auto& p = c.params;
    if (o.alpha)
        p.alpha = *o.alpha;
    if (o.delta)
        p.delta = *o.delta;
    if (o.gamma)
        p.gamma = *o.gamma;
    if (o.eta)
        p.eta = *o.eta;
    if (o.tau)
        p.tau = *o.tau;
    if (o.nu_target)
        p.nu_target = *o.nu_target;
    if (o.tolerance_scale)
        p.tolerance_scale = *o.tolerance_scale;
    if (o.convention)
        p.convention = equiv::parse_convention(*o.convention);
    if (o.estimate_eps)
        p.estimate_eps = true;
    if (!o.n_list.empty())
        c.n_list = o.n_list;
    if (!o.z_grid.empty())
        c.z_grid = parse_grid(o.z_grid);

    c.mode = mode;
    if (mode != experiments::Mode::sweep)
        c.n_list.clear();
    if (mode != experiments::Mode::field)
        c.z_grid.reset();
    experiments::validate(c);
    return c;
}

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

int cmd_equiv(const Options& o)
{
    const auto c = build_config(o, experiments::Mode::single, "jordan");
    const ComplexMatrix a = ensembles::realize(c.matrix);
    const auto s = ensembles::spectrum(c.matrix, a);
    auto settings = c.params;
    settings.delta = 0.0; // no sampling here
    const auto p = experiments::resolve_params(settings, s);
    const double rhs = equiv::deterministic_equivalent(s, p.alpha);
    const std::size_t nstar = equiv::n_star(s, p.gamma, p.eta);
    const double bpz_inc = equiv::bpz_equivalent(s, nstar, equiv::SumConvention::inclusive);
    const double bpz_drop = equiv::bpz_equivalent(s, nstar, equiv::SumConvention::drop_all_small);

    std::cout << "matrix = " << ensembles::format_matrix_spec(c.matrix) << "  N = " << s.size() << '\n'
              << "alpha = " << num(p.alpha) << "  M = " << p.m << "  nu_N = " << num(p.nu_n) << '\n'
              << "rhs = " << num(rhs) << '\n'
              << "n_star = " << nstar << "  (gamma = " << num(p.gamma) << ", eta = " << num(p.eta) << ")\n"
              << "bpz inclusive = " << num(bpz_inc) << "  bpz drop_all_small = " << num(bpz_drop) << '\n';

    if (!c.output.empty()) {
        nlohmann::json j{{"N", s.size()},   {"alpha", p.alpha},          {"M", p.m},
                         {"nu_N", p.nu_n},  {"rhs", rhs},                {"n_star", nstar},
                         {"bpz_inclusive", std::isfinite(bpz_inc) ? nlohmann::json(bpz_inc) : nlohmann::json("-inf")},
                         {"bpz_drop_all_small", std::isfinite(bpz_drop) ? nlohmann::json(bpz_drop) : nlohmann::json("-inf")}};
        experiments::write_json(j, c.output + "_equiv.json");
    }
    return kExitOk;
}

int cmd_grushin(const Options& o)
{
    auto c = build_config(o, experiments::Mode::single, "jordan");
    const auto report = experiments::run_grushin_suite(c, resolve_workers(o));
    std::cout << "grushin suite: N = " << report.n << "  M = " << report.m << "  alpha = " << num(report.alpha)
              << "  trials = " << c.trials << '\n';
    for (const auto& chk : report.checks) {
        std::cout << "  " << (chk.failed == 0 ? "PASS " : "FAIL ") << chk.check << "  evaluated = " << chk.evaluated
                  << "  failed = " << chk.failed << "  worst margin = " << num(chk.worst_margin) << '\n';
    }
    if (report.skipped_contraction > 0)
        std::cout << "  contraction > 1/2 in " << report.skipped_contraction
                  << " trials; perturbed bounds skipped there\n";
    if (!c.output.empty())
        experiments::write_json(experiments::summary_json(report), c.output + "_grushin.json");
    if (const auto bad = report.first_failure()) {
        std::cout << "violation: " << nlohmann::json(*bad).dump() << '\n';
        return kExitViolation;
    }
    std::cout << "all checks passed\n";
    return kExitOk;
}

int cmd_mc(const Options& o)
{
    const auto c = build_config(o, experiments::Mode::single, "jordan");
    const auto r = experiments::run_theorem2(c, resolve_workers(o));
    const auto& s = r.summary;
    std::cout << "theorem 2 run: N = " << r.n << "  alpha = " << num(r.params.alpha) << "  M = " << r.params.m
              << "  nu_N = " << num(r.params.nu_n) << "  delta = " << num(r.params.delta) << '\n'
              << "rhs = " << num(s.rhs) << "  lhs median = " << num(s.lhs.quantile(0.5))
              << "  [q05, q95] = [" << num(s.lhs.quantile(0.05)) << ", " << num(s.lhs.quantile(0.95)) << "]\n"
              << "error median = " << num(s.error.quantile(0.5)) << "  error bound (C = " << num(r.params.C)
              << ") = " << num(r.budget.error_bound) << '\n'
              << "success frequency = " << num(s.success_frequency) << " (" << s.within_budget << "/" << s.trials
              << ")  floor 1 - 1/tau = " << num(s.partial_floor);
    if (s.floor)
        std::cout << "  floor 1 - eps - 1/tau = " << num(*s.floor) << " (eps = " << num(*s.eps_hat) << ")";
    else
        std::cout << "  eps_N unavailable";
    std::cout << '\n';
    if (s.outside_theorem)
        std::cout << "note: delta is below N^-gamma; run is outside the theorem's range\n";
    if (!c.output.empty()) {
        experiments::write_results(r.records, c.output);
        experiments::write_json(experiments::summary_json(r), c.output + "_summary.json");
        std::cout << "wrote " << c.output << ".csv\n";
    }
    return kExitOk;
}

int cmd_sweep(const Options& o)
{
    const auto c = build_config(o, experiments::Mode::sweep, "jordan");
    const auto r = experiments::run_theorem1(c, c.params.gamma, c.params.eta, c.params.convention, resolve_workers(o));
    std::cout << "theorem 1 sweep (" << equiv::to_string(r.convention) << ")\n";
    for (const auto& p : r.points) {
        std::cout << "  N = " << p.n << "  N* = " << p.n_star << "  delta = " << num(p.delta)
                  << "  rhs = " << num(p.rhs) << "  median |lhs - rhs| = " << num(p.median_error)
                  << (p.rhs_infinite ? "  [rhs = -inf, excluded from trend]" : "") << '\n';
    }
    std::cout << "flagged N values = " << r.flagged << "  median error decreasing = " << (r.decreasing ? "yes" : "no")
              << '\n';
    if (!c.output.empty()) {
        experiments::write_results(r.records, c.output);
        experiments::write_json(experiments::summary_json(r), c.output + "_summary.json");
    }
    return kExitOk;
}

int cmd_field(const Options& o)
{
    const auto c = build_config(o, experiments::Mode::field, "jordan");
    const auto pts = experiments::log_potential_field(c, resolve_workers(o));
    std::cout << "log-potential field: " << pts.size() << " grid points, " << c.trials << " trials each\n";
    const std::size_t show = std::min<std::size_t>(pts.size(), 10);
    for (std::size_t i = 0; i < show; ++i) {
        const auto& p = pts[i];
        std::cout << "  z = " << num(p.z.real()) << (p.z.imag() < 0 ? " - " : " + ") << num(std::abs(p.z.imag()))
                  << "i  rhs = " << num(p.rhs) << "  lhs = " << num(p.lhs_mean) << " +/- " << num(p.lhs_sd) << '\n';
    }
    if (pts.size() > show)
        std::cout << "  ... (" << pts.size() - show << " more)\n";
    if (!c.output.empty())
        experiments::write_field(pts, c.output);
    return kExitOk;
}

int cmd_probe(const Options& o)
{
    const auto c = build_config(o, experiments::Mode::single, "zero");
    const std::size_t workers = resolve_workers(o);
    std::vector<std::size_t> ns = o.n_list;
    if (ns.empty())
        ns = {c.matrix.n, 2 * c.matrix.n, 4 * c.matrix.n};

    const auto growth = noise::norm_growth_probe(c.model, ns, c.trials, c.seed, workers);
    const auto markov = noise::markov_tail_check(c.model, c.matrix.n, std::max<std::size_t>(c.trials, 100), o.taus,
                                                 c.seed, growth.fit.slope, workers);
    const ComplexMatrix d = ensembles::realize(c.matrix);
    const auto anti = noise::anti_concentration_probe(d, c.model, c.trials, o.betas, c.seed,
                                                      noise::RescaledProbe{c.params.delta, c.params.gamma}, workers);

    std::cout << "noise model " << noise::to_string(c.model.kind) << '\n'
              << "norm growth: kappa1_hat = " << num(growth.fit.slope) << "  intercept = " << num(growth.fit.intercept)
              << '\n';
    for (const auto& chk : markov.checks)
        std::cout << "  markov tau = " << num(chk.tau) << "  P(|G| > C N^k tau) = " << num(chk.empirical)
                  << "  bound = " << num(chk.bound) << " + 3 SE (" << num(chk.std_error) << ")  "
                  << (chk.pass ? "PASS" : "FAIL") << '\n';
    for (const auto& e : anti.entries) {
        std::cout << "  anti-concentration beta = " << num(e.beta) << "  P(s_N(D+G) <= N^-beta) = "
                  << (e.frequency ? num(*e.frequency) : std::string("none"));
        if (e.rescaled_frequency)
            std::cout << "  P(s_N(D + delta G) <= N^(-gamma-beta)) = " << num(*e.rescaled_frequency);
        std::cout << '\n';
    }
    if (!c.output.empty()) {
        std::vector<noise::ProbeResult> all = growth.per_n;
        all.push_back(markov.norms);
        all.push_back(anti.smin);
        if (anti.rescaled_smin)
            all.push_back(*anti.rescaled_smin);
        auto csv = experiments::open_output(c.output + "_probe.csv");
        noise::write_probe_csv(csv, all);
    }
    return markov.pass ? kExitOk : kExitViolation;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Log-determinant deterministic equivalents: Grushin verification and Monte Carlo harness"};
    app.require_subcommand(1);
    Options o;

    auto* equiv_cmd = app.add_subcommand("equiv", "Cutoff sums and N* for a matrix, without sampling");
    auto* grushin_cmd = app.add_subcommand("grushin-verify", "Check every Grushin identity and bound");
    auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo comparison of log|det(A + delta G)| / N with the cutoff sum");
    auto* sweep_cmd = app.add_subcommand("sweep", "Sweep N with delta = N^-gamma and the N* cutoff sum");
    auto* field_cmd = app.add_subcommand("field", "Log-potential over a grid of z");
    auto* probe_cmd = app.add_subcommand("probe-noise", "Norm growth, Markov tail and anti-concentration probes");
    for (auto* cmd : {equiv_cmd, grushin_cmd, mc_cmd, sweep_cmd, field_cmd, probe_cmd})
        add_shared_flags(cmd, o);
    grushin_cmd->add_option("--tolerance-scale", o.tolerance_scale, "Scale applied to identity tolerances");
    mc_cmd->add_flag("--estimate-eps", o.estimate_eps, "Estimate eps_N with the anti-concentration probe");
    sweep_cmd->add_option("--n-list", o.n_list, "Matrix sizes (ascending)")->delimiter(',');
    field_cmd->add_option("--z-grid", o.z_grid, "re_min,re_max,im_min,im_max,steps");
    probe_cmd->add_option("--n-list", o.n_list, "Sizes for the norm growth fit")->delimiter(',');
    probe_cmd->add_option("--taus", o.taus, "Markov tail parameters")->delimiter(',');
    probe_cmd->add_option("--betas", o.betas, "Anti-concentration exponents")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*equiv_cmd)
            return cmd_equiv(o);
        if (*grushin_cmd)
            return cmd_grushin(o);
        if (*mc_cmd)
            return cmd_mc(o);
        if (*sweep_cmd)
            return cmd_sweep(o);
        if (*field_cmd)
            return cmd_field(o);
        if (*probe_cmd)
            return cmd_probe(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ParameterError& e) {
        std::cerr << "parameter error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}
