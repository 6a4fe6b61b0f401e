#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "logdet/linalg.hpp"

namespace logdet::noise {

/// Entry distributions, all centered with E|g|^2 = 1.
enum class NoiseKind {
    complex_ginibre,    // (x + iy)/sqrt(2), x, y standard normal
    real_gaussian,      // x standard normal
    rademacher_complex, // (s1 + i s2)/sqrt(2), independent signs
    uniform_complex     // uniform on the disk of radius sqrt(2)
};

struct NoiseModel {
    NoiseKind kind = NoiseKind::complex_ginibre;

    friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

std::string to_string(NoiseKind kind);
NoiseKind parse_noise_kind(const std::string& text);

/// Seed of the independent stream for work item `index` under `seed`
/// (splitmix64 finalizer over both words).
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

/// N x N matrix of i.i.d. entries; a pure function of (model, n, seed).
ComplexMatrix sample(const NoiseModel& model, std::size_t n, std::uint64_t seed);

struct Summary {
    double mean = 0.0;
    /// (probability, value) pairs at 0.05, 0.25, 0.5, 0.75, 0.95.
    std::vector<std::pair<double, double>> quantiles;

    [[nodiscard]] double quantile(double p) const;
};

/// Linear-interpolated quantiles over the finite values; mean over the same.
Summary summarize(std::span<const double> values);

/// Linear-interpolated empirical quantile of finite values (NaN when none).
double empirical_quantile(std::vector<double> values, double p);

struct ProbeResult {
    NoiseModel model;
    std::size_t n = 0;
    std::size_t trials = 0;
    std::string stat_name;
    std::vector<double> values;
    Summary summary;
};

/// CSV rows: model,N,trial,stat_name,value
void write_probe_csv(std::ostream& os, std::span<const ProbeResult> results, bool header = true);

struct PowerLawFit {
    double slope = 0.0;     // kappa1 estimate
    double intercept = 0.0; // log C
    std::vector<double> residuals;
};

/// Least-squares fit of log y against log n. Throws ContractError for fewer
/// than two points.
PowerLawFit fit_power_law(std::span<const std::size_t> ns, std::span<const double> ys);

struct NormGrowthResult {
    std::vector<ProbeResult> per_n; // stat "operator_norm"
    PowerLawFit fit;
};

/// Mean |G| per N and its power-law slope. Trial k at size N uses
/// substream_seed(seed, N * 2^32 + k).
NormGrowthResult norm_growth_probe(const NoiseModel& model, std::span<const std::size_t> ns, std::size_t trials,
                                   std::uint64_t seed, std::size_t workers = 1);

struct TailCheck {
    double tau = 0.0;
    double threshold = 0.0; // C N^kappa1 tau
    double empirical = 0.0;
    double bound = 0.0;     // 1/tau
    double std_error = 0.0; // binomial standard error of `empirical`
    bool pass = false;
};

struct MarkovTailResult {
    ProbeResult norms;
    double kappa1 = 0.0;
    double constant = 0.0; // mean |G| / N^kappa1
    std::vector<TailCheck> checks;
    bool pass = true;
};

/// Empirical P(|G| > C N^kappa1 tau) against 1/tau + 3 SE. Requires trials >= 100.
MarkovTailResult markov_tail_check(const NoiseModel& model, std::size_t n, std::size_t trials,
                                   std::span<const double> taus, std::uint64_t seed, double kappa1 = 0.5,
                                   std::size_t workers = 1);

struct RescaledProbe {
    double delta = 0.0;
    double gamma = 0.0;
};

struct AntiConcentrationEntry {
    double beta = 0.0;
    double threshold = 0.0;              // N^-beta
    std::optional<double> frequency;     // P(s_N(D + G) <= N^-beta)
    double rescaled_threshold = 0.0;     // N^{-gamma-beta}
    std::optional<double> rescaled_frequency; // P(s_N(D + delta G) <= N^{-gamma-beta})
};

struct AntiConcentrationResult {
    ProbeResult smin;                   // s_N(D + G)
    std::optional<ProbeResult> rescaled_smin; // s_N(D + delta G)
    std::vector<AntiConcentrationEntry> entries;
};

/// Frequencies are empty when trials = 0. The rescaled variant runs only when
/// `rescaled` is given and uses the same G samples.
AntiConcentrationResult anti_concentration_probe(const ComplexMatrix& d, const NoiseModel& model, std::size_t trials,
                                                 std::span<const double> betas, std::uint64_t seed,
                                                 std::optional<RescaledProbe> rescaled = std::nullopt,
                                                 std::size_t workers = 1);

} // namespace logdet::noise
