#include "logdet/equivalents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "logdet/errors.hpp"
#include "logdet/linalg.hpp"

namespace logdet::equiv {

namespace {

using LogSum = linalg::CompensatedSum;

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

} // namespace

std::string to_string(SumConvention c)
{
    return c == SumConvention::inclusive ? "inclusive" : "drop_all_small";
}

SumConvention parse_convention(const std::string& text)
{
    if (text == "inclusive")
        return SumConvention::inclusive;
    if (text == "drop_all_small")
        return SumConvention::drop_all_small;
    throw ConfigError("unknown sum convention '" + text + "' (expected inclusive or drop_all_small)");
}

std::optional<double> ErrorBudget::failure_prob() const
{
    if (!eps_n)
        return std::nullopt;
    return *eps_n + tail_prob;
}

void require_descending(std::span<const double> s, const char* what)
{
    for (std::size_t j = 0; j < s.size(); ++j) {
        if (!(s[j] >= 0.0))
            throw ContractError(std::string(what) + ": singular values must be nonnegative");
        if (j > 0 && s[j] > s[j - 1])
            throw ContractError(std::string(what) + ": singular values must be sorted descending");
    }
}

double deterministic_equivalent(std::span<const double> s, double alpha)
{
    require_descending(s, "deterministic_equivalent");
    if (!(alpha > 0.0))
        throw ContractError("deterministic_equivalent: alpha must be positive");
    if (s.empty())
        return 0.0;
    LogSum acc;
    for (double v : s) {
        if (!(v > alpha))
            break;
        acc.add(std::log(v));
    }
    return acc.value() / static_cast<double>(s.size());
}

std::size_t count_below(std::span<const double> s, double alpha)
{
    require_descending(s, "count_below");
    const auto first_small = std::partition_point(s.begin(), s.end(), [alpha](double v) { return v > alpha; });
    return static_cast<std::size_t>(s.end() - first_small);
}

double nu_from_count(std::size_t m, std::size_t n)
{
    if (n < 2)
        return 0.0;
    const double nd = static_cast<double>(n);
    return static_cast<double>(m) * std::log(nd) / nd;
}

std::size_t max_deflation(double nu_target, std::size_t n)
{
    if (n < 2)
        return n;
    const double nd = static_cast<double>(n);
    const double cap = nu_target * nd / std::log(nd);
    if (cap >= nd)
        return n;
    return static_cast<std::size_t>(std::floor(cap + 1e-12));
}

std::optional<AlphaChoice> auto_alpha(std::span<const double> s, double nu_target, double L, double C)
{
    require_descending(s, "auto_alpha");
    const std::size_t n = s.size();
    if (n == 0)
        return std::nullopt;
    const double lo = C * std::pow(static_cast<double>(n), -L);
    const double hi = 1.0;
    if (lo > hi)
        return std::nullopt;

    std::vector<double> candidates{lo, hi};
    for (std::size_t j = 1; j < n; ++j) {
        if (s[j] == s[j - 1])
            continue;
        const double mid = 0.5 * (s[j] + s[j - 1]);
        if (mid >= lo && mid <= hi)
            candidates.push_back(mid);
    }
    std::sort(candidates.begin(), candidates.end(), std::greater<>());

    const std::size_t cap = max_deflation(nu_target, n);
    for (double alpha : candidates) {
        const std::size_t m = count_below(s, alpha);
        if (m <= cap)
            return AlphaChoice{alpha, m};
    }
    return std::nullopt;
}

std::size_t n_star(std::span<const double> s, double gamma, double eta)
{
    require_descending(s, "n_star");
    const std::size_t n = s.size();
    if (n == 0)
        return 1;
    const double nd = static_cast<double>(n);
    const double scale = std::pow(nd, eta - gamma);
    for (std::size_t i = n; i >= 1; --i) {
        const std::size_t idx = n - i + 1; // 1-based
        if (s[idx - 1] <= scale * std::sqrt(static_cast<double>(idx)))
            return i;
    }
    return 1;
}

double bpz_equivalent(std::span<const double> s, std::size_t n_star, SumConvention convention)
{
    require_descending(s, "bpz_equivalent");
    const std::size_t n = s.size();
    if (n == 0)
        return 0.0;
    if (n_star < 1 || n_star > n)
        throw ContractError("bpz_equivalent: N* must lie in [1, N]");
    const std::size_t upper = convention == SumConvention::inclusive ? n - n_star + 1 : n - n_star;
    LogSum acc;
    for (std::size_t i = 0; i < upper; ++i) {
        if (s[i] == 0.0)
            return -std::numeric_limits<double>::infinity();
        acc.add(std::log(s[i]));
    }
    return acc.value() / static_cast<double>(n);
}

Interval admissible_delta_range(double alpha, double gamma, double kappa1, double tau, std::size_t n,
                                double headroom)
{
    const double nd = static_cast<double>(n);
    return {std::pow(nd, -gamma), headroom * std::pow(nd, -kappa1) * alpha / tau};
}

void validate(const EquivalenceParams& p, std::size_t n)
{
    if (n < 1)
        throw ParameterError("N must be at least 1");
    const double nd = static_cast<double>(n);
    const double alpha_floor = p.C * std::pow(nd, -p.L);
    if (!(p.alpha > 0.0) || !(p.alpha <= 1.0))
        throw ParameterError("alpha must lie in (0, 1], got " + fmt(p.alpha));
    if (p.alpha < alpha_floor)
        throw ParameterError("alpha = " + fmt(p.alpha) + " is below C N^-L = " + fmt(alpha_floor));
    if (p.m > n)
        throw ParameterError("M exceeds N");
    if (n >= 2 && static_cast<double>(p.m) > p.nu_n * nd / std::log(nd) * (1.0 + 1e-12))
        throw ParameterError("M = " + std::to_string(p.m) + " exceeds nu_N N / log N with nu_N = " + fmt(p.nu_n));
    if (!(p.tau > 0.0))
        throw ParameterError("tau must be positive");
    if (!(p.headroom > 0.0 && p.headroom < 1.0))
        throw ParameterError("headroom must lie in (0, 1)");
    if (!(p.C >= 0.0))
        throw ParameterError("C must be nonnegative");
    if (!(p.delta >= 0.0))
        throw ParameterError("delta must be nonnegative");
    if (p.delta > 0.0) {
        const Interval window = admissible_delta_range(p.alpha, p.gamma, p.kappa1, p.tau, n, p.headroom);
        if (window.empty())
            throw ParameterError("admissible delta range is empty: N^-gamma = " + fmt(window.lo) +
                                 " exceeds headroom N^-kappa1 alpha / tau = " + fmt(window.hi));
        if (p.delta < window.lo)
            throw ParameterError("delta = " + fmt(p.delta) + " is below N^-gamma = " + fmt(window.lo));
        if (p.delta > window.hi)
            throw ParameterError("delta = " + fmt(p.delta) + " exceeds headroom N^-kappa1 alpha / tau = " +
                                 fmt(window.hi));
    }
}

ErrorBudget error_budget(const EquivalenceParams& p, std::size_t n)
{
    validate(p, n);
    const double nd = static_cast<double>(n);
    ErrorBudget b;
    b.error_bound = p.C * (p.nu_n + std::pow(nd, p.kappa1) * p.delta * p.tau / p.alpha);
    b.tail_prob = 1.0 / p.tau;
    return b;
}

} // namespace logdet::equiv
