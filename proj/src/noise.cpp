#include "logdet/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <cstdio>
#include <random>

#include "logdet/errors.hpp"
#include "logdet/parallel.hpp"

namespace logdet::noise {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

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

ProbeResult make_probe(const NoiseModel& model, std::size_t n, std::string stat, std::vector<double> values)
{
    ProbeResult r;
    r.model = model;
    r.n = n;
    r.trials = values.size();
    r.stat_name = std::move(stat);
    r.values = std::move(values);
    r.summary = summarize(r.values);
    return r;
}

} // namespace

std::string to_string(NoiseKind kind)
{
    switch (kind) {
    case NoiseKind::complex_ginibre: return "complex_ginibre";
    case NoiseKind::real_gaussian: return "real_gaussian";
    case NoiseKind::rademacher_complex: return "rademacher_complex";
    case NoiseKind::uniform_complex: return "uniform_complex";
    }
    return "unknown";
}

NoiseKind parse_noise_kind(const std::string& text)
{
    for (auto k : {NoiseKind::complex_ginibre, NoiseKind::real_gaussian, NoiseKind::rademacher_complex,
                   NoiseKind::uniform_complex}) {
        if (text == to_string(k))
            return k;
    }
    if (text == "ginibre")
        return NoiseKind::complex_ginibre;
    throw ConfigError("unknown noise model '" + text + "'");
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index)
{
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

ComplexMatrix sample(const NoiseModel& model, std::size_t n, std::uint64_t seed)
{
    const auto ni = static_cast<Eigen::Index>(n);
    ComplexMatrix g(ni, ni);
    std::mt19937_64 rng(seed);
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;

    switch (model.kind) {
    case NoiseKind::complex_ginibre: {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index i = 0; i < ni; ++i)
            for (Eigen::Index j = 0; j < ni; ++j) {
                const double x = normal(rng);
                const double y = normal(rng);
                g(i, j) = Complex(x * inv_sqrt2, y * inv_sqrt2);
            }
        break;
    }
    case NoiseKind::real_gaussian: {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index i = 0; i < ni; ++i)
            for (Eigen::Index j = 0; j < ni; ++j)
                g(i, j) = Complex(normal(rng), 0.0);
        break;
    }
    case NoiseKind::rademacher_complex: {
        std::bernoulli_distribution coin(0.5);
        for (Eigen::Index i = 0; i < ni; ++i)
            for (Eigen::Index j = 0; j < ni; ++j) {
                const double x = coin(rng) ? inv_sqrt2 : -inv_sqrt2;
                const double y = coin(rng) ? inv_sqrt2 : -inv_sqrt2;
                g(i, j) = Complex(x, y);
            }
        break;
    }
    case NoiseKind::uniform_complex: {
        // Radius sqrt(2) sqrt(U) gives E|g|^2 = 1.
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (Eigen::Index i = 0; i < ni; ++i)
            for (Eigen::Index j = 0; j < ni; ++j) {
                const double r = std::numbers::sqrt2 * std::sqrt(unit(rng));
                const double phi = 2.0 * std::numbers::pi * unit(rng);
                g(i, j) = std::polar(r, phi);
            }
        break;
    }
    }
    return g;
}

double empirical_quantile(std::vector<double> values, double p)
{
    std::erase_if(values, [](double v) { return !std::isfinite(v); });
    if (values.empty())
        return std::nan("");
    std::sort(values.begin(), values.end());
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double Summary::quantile(double p) const
{
    for (const auto& [prob, value] : quantiles)
        if (prob == p)
            return value;
    return std::nan("");
}

Summary summarize(std::span<const double> values)
{
    Summary s;
    std::vector<double> finite;
    for (double v : values)
        if (std::isfinite(v))
            finite.push_back(v);
    if (finite.empty()) {
        s.mean = std::nan("");
    } else {
        double acc = 0.0;
        for (double v : finite)
            acc += v;
        s.mean = acc / static_cast<double>(finite.size());
    }
    for (double p : {0.05, 0.25, 0.5, 0.75, 0.95})
        s.quantiles.emplace_back(p, empirical_quantile(finite, p));
    return s;
}

void write_probe_csv(std::ostream& os, std::span<const ProbeResult> results, bool header)
{
    if (header)
        os << "model,N,trial,stat_name,value\n";
    for (const auto& r : results)
        for (std::size_t k = 0; k < r.values.size(); ++k)
            os << to_string(r.model.kind) << ',' << r.n << ',' << k << ',' << r.stat_name << ','
               << csv_number(r.values[k]) << '\n';
}

PowerLawFit fit_power_law(std::span<const std::size_t> ns, std::span<const double> ys)
{
    if (ns.size() != ys.size())
        throw ContractError("fit_power_law: size mismatch");
    if (ns.size() < 2)
        throw ContractError("fit_power_law: need at least two values of N");
    const std::size_t k = ns.size();
    std::vector<double> x(k), y(k);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (!(ys[i] > 0.0))
            throw ContractError("fit_power_law: values must be positive");
        x[i] = std::log(static_cast<double>(ns[i]));
        y[i] = std::log(ys[i]);
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(k);
    my /= static_cast<double>(k);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0)
        throw ContractError("fit_power_law: need at least two distinct values of N");
    PowerLawFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    for (std::size_t i = 0; i < k; ++i)
        fit.residuals.push_back(y[i] - (fit.intercept + fit.slope * x[i]));
    return fit;
}

NormGrowthResult norm_growth_probe(const NoiseModel& model, std::span<const std::size_t> ns, std::size_t trials,
                                   std::uint64_t seed, std::size_t workers)
{
    if (ns.size() < 2)
        throw ContractError("norm_growth_probe: need at least two values of N");
    if (!std::is_sorted(ns.begin(), ns.end()))
        throw ContractError("norm_growth_probe: N list must be ascending");

    NormGrowthResult out;
    std::vector<double> means;
    for (std::size_t n : ns) {
        std::vector<double> norms(trials);
        parallel_for(trials, workers, [&](std::size_t k) {
            const auto key = (static_cast<std::uint64_t>(n) << 32) | static_cast<std::uint64_t>(k);
            norms[k] = linalg::operator_norm(sample(model, n, substream_seed(seed, key)));
        });
        out.per_n.push_back(make_probe(model, n, "operator_norm", std::move(norms)));
        means.push_back(out.per_n.back().summary.mean);
    }
    out.fit = fit_power_law(ns, means);
    return out;
}

MarkovTailResult markov_tail_check(const NoiseModel& model, std::size_t n, std::size_t trials,
                                   std::span<const double> taus, std::uint64_t seed, double kappa1,
                                   std::size_t workers)
{
    if (trials < 100)
        throw ContractError("markov_tail_check: need at least 100 trials");
    std::vector<double> norms(trials);
    parallel_for(trials, workers, [&](std::size_t k) {
        norms[k] = linalg::operator_norm(sample(model, n, substream_seed(seed, k)));
    });

    MarkovTailResult out;
    out.norms = make_probe(model, n, "operator_norm", std::move(norms));
    out.kappa1 = kappa1;
    const double scale = std::pow(static_cast<double>(n), kappa1);
    out.constant = out.norms.summary.mean / scale;
    const double count = static_cast<double>(trials);
    for (double tau : taus) {
        TailCheck c;
        c.tau = tau;
        c.threshold = out.constant * scale * tau;
        const auto exceed = std::count_if(out.norms.values.begin(), out.norms.values.end(),
                                          [&](double v) { return v > c.threshold; });
        c.empirical = static_cast<double>(exceed) / count;
        c.bound = 1.0 / tau;
        const double p0 = std::min(c.bound, 1.0);
        c.std_error = std::sqrt(p0 * (1.0 - p0) / count);
        c.pass = c.empirical <= c.bound + 3.0 * c.std_error;
        out.pass = out.pass && c.pass;
        out.checks.push_back(c);
    }
    return out;
}

AntiConcentrationResult anti_concentration_probe(const ComplexMatrix& d, const NoiseModel& model, std::size_t trials,
                                                 std::span<const double> betas, std::uint64_t seed,
                                                 std::optional<RescaledProbe> rescaled, std::size_t workers)
{
    linalg::require_square(d, "anti_concentration_probe");
    const auto n = static_cast<std::size_t>(d.rows());
    const double nd = static_cast<double>(n);

    std::vector<double> smin(trials);
    std::vector<double> smin_rescaled(rescaled ? trials : 0);
    parallel_for(trials, workers, [&](std::size_t k) {
        const ComplexMatrix g = sample(model, n, substream_seed(seed, k));
        smin[k] = linalg::smallest_singular_value(d + g);
        if (rescaled)
            smin_rescaled[k] = linalg::smallest_singular_value(d + Complex(rescaled->delta, 0.0) * g);
    });

    auto frequency = [&](const std::vector<double>& values, double threshold) -> std::optional<double> {
        if (values.empty())
            return std::nullopt;
        const auto hits = std::count_if(values.begin(), values.end(), [&](double v) { return v <= threshold; });
        return static_cast<double>(hits) / static_cast<double>(values.size());
    };

    AntiConcentrationResult out;
    for (double beta : betas) {
        AntiConcentrationEntry e;
        e.beta = beta;
        e.threshold = std::pow(nd, -beta);
        e.frequency = frequency(smin, e.threshold);
        if (rescaled) {
            e.rescaled_threshold = std::pow(nd, -rescaled->gamma - beta);
            e.rescaled_frequency = frequency(smin_rescaled, e.rescaled_threshold);
        }
        out.entries.push_back(e);
    }
    out.smin = make_probe(model, n, "s_min", std::move(smin));
    if (rescaled)
        out.rescaled_smin = make_probe(model, n, "s_min_rescaled", std::move(smin_rescaled));
    return out;
}

} // namespace logdet::noise
