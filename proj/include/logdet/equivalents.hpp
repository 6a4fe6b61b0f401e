#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

namespace logdet::equiv {

/// Which indices enter the cutoff sum (1/N) sum_{i=1}^{K} log s_i.
enum class SumConvention {
    inclusive,     // K = N - N* + 1, as printed; may include a zero singular value
    drop_all_small // K = N - N*
};

std::string to_string(SumConvention c);
SumConvention parse_convention(const std::string& text);

struct EquivalenceParams {
    double alpha = 1.0;
    std::size_t m = 0;
    double nu_n = 0.0; // M log N / N
    double gamma = 4.0;
    double eta = 0.01;
    double delta = 0.0;
    double tau = 10.0;
    double kappa1 = 0.5;
    double kappa2 = 0.0;
    double beta = 2.0;
    double L = 1.0;
    double C = 1.0;
    /// Operational meaning of "delta << N^{-kappa1} alpha / tau".
    double headroom = 0.1;
};

struct ErrorBudget {
    /// C (nu_N + N^{kappa1} delta tau / alpha)
    double error_bound = 0.0;
    /// 1 / tau
    double tail_prob = 0.0;
    /// Empirical anti-concentration failure rate, when measured.
    std::optional<double> eps_n;

    /// eps_N + 1/tau, available only once eps_N has been measured.
    [[nodiscard]] std::optional<double> failure_prob() const;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] bool empty() const { return lo > hi; }
    [[nodiscard]] bool contains(double x) const { return !empty() && x >= lo && x <= hi; }
};

struct AlphaChoice {
    double alpha = 0.0;
    std::size_t m = 0;
};

/// Throws ContractError unless `s` is descending and nonnegative.
void require_descending(std::span<const double> s, const char* what);

/// (1/N) sum_{j : s_j > alpha} log s_j
double deterministic_equivalent(std::span<const double> s, double alpha);

/// #{j : s_j <= alpha}
std::size_t count_below(std::span<const double> s, double alpha);

/// nu_N = M log N / N (zero for N = 1).
double nu_from_count(std::size_t m, std::size_t n);

/// Largest M permitted by nu_N <= nu_target, i.e. floor(nu_target N / log N).
std::size_t max_deflation(double nu_target, std::size_t n);

/// Largest alpha in [C N^{-L}, 1] among {C N^{-L}, 1} and the midpoints of
/// consecutive distinct singular values that fall in that range, subject to
/// count_below(alpha) <= nu_target N / log N.
std::optional<AlphaChoice> auto_alpha(std::span<const double> s, double nu_target, double L, double C);

/// Largest i in [1, N] with s_{N-i+1} <= N^{eta-gamma} (N-i+1)^{1/2}; 1 if none.
std::size_t n_star(std::span<const double> s, double gamma, double eta);

/// (1/N) sum_{i=1}^{K} log s_i with K set by the convention. May be -infinity.
double bpz_equivalent(std::span<const double> s, std::size_t n_star, SumConvention convention);

/// [N^{-gamma}, headroom N^{-kappa1} alpha / tau]; lo > hi signals infeasibility.
Interval admissible_delta_range(double alpha, double gamma, double kappa1, double tau, std::size_t n,
                                double headroom);

/// Throws ParameterError naming the first violated constraint. delta = 0 is
/// accepted (deterministic runs) and skips the delta window.
void validate(const EquivalenceParams& p, std::size_t n);

ErrorBudget error_budget(const EquivalenceParams& p, std::size_t n);

} // namespace logdet::equiv
