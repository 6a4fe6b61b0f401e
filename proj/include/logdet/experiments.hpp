#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "logdet/ensembles.hpp"
#include "logdet/equivalents.hpp"
#include "logdet/grushin.hpp"
#include "logdet/noise.hpp"

namespace logdet::experiments {

enum class Mode { single, sweep, field };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& text);

struct ZGrid {
    double re_min = 0.0;
    double re_max = 0.0;
    double im_min = 0.0;
    double im_max = 0.0;
    std::size_t steps = 1;

    /// steps x steps points, real part varying fastest.
    [[nodiscard]] std::vector<Complex> points() const;

    friend bool operator==(const ZGrid&, const ZGrid&) = default;
};

/// Parameter settings as written in a config. `alpha` unset means "choose
/// automatically" via auto_alpha with `nu_target`.
struct ParamSettings {
    std::optional<double> alpha;
    double nu_target = 0.5;
    double gamma = 4.0;
    double eta = 0.01;
    double delta = 1e-10;
    double tau = 10.0;
    double kappa1 = 0.5;
    double kappa2 = 0.0;
    double beta = 2.0;
    double L = 1.0;
    double C = 1.0;
    double headroom = 0.1;
    equiv::SumConvention convention = equiv::SumConvention::drop_all_small;
    bool estimate_eps = false;
    std::size_t eps_trials = 200;
    int neumann_terms = 40;
    /// Multiplies the tolerances of equality checks in the Grushin suite.
    double tolerance_scale = 1.0;

    friend bool operator==(const ParamSettings&, const ParamSettings&) = default;
};

struct ExperimentConfig {
    ensembles::MatrixSpec matrix;
    noise::NoiseModel model;
    ParamSettings params;
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    Mode mode = Mode::single;
    std::vector<std::size_t> n_list;
    std::optional<ZGrid> z_grid;
    std::string output;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Throws ConfigError when the mode and its inputs disagree or counts are invalid.
void validate(const ExperimentConfig& config);

nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig read_config(const std::string& path);
void write_config(const std::string& path, const ExperimentConfig& config);

/// Picks alpha (fixed or automatic), counts M and fills nu_N; then validates.
/// Throws ConfigError when no admissible alpha exists, ParameterError on
/// violated constraints.
equiv::EquivalenceParams resolve_params(const ParamSettings& settings, std::span<const double> singvals);

struct TrialRecord {
    std::size_t trial = 0;
    std::uint64_t seed_used = 0;
    std::size_t n = 0;
    double delta = 0.0;
    double alpha = 0.0;
    std::size_t m = 0;
    double lhs = 0.0; // (1/N) log|det(A + delta G)|
    double rhs = 0.0;
    double error = 0.0; // |lhs - rhs|
    equiv::ErrorBudget budget;
    bool within_budget = false;
    double norm_g = 0.0;
    double s_min_perturbed = 0.0;
    double contraction = 0.0;
};

/// One Monte Carlo sample: draws G from `seed_used` and fills every field.
TrialRecord evaluate_trial(const ComplexMatrix& a, const noise::NoiseModel& model, double delta, double alpha,
                           std::size_t m, double rhs, const equiv::ErrorBudget& budget, std::size_t trial,
                           std::uint64_t seed_used);

struct Theorem2Summary {
    std::size_t trials = 0;
    std::size_t within_budget = 0;
    double success_frequency = 0.0;
    /// 1 - 1/tau
    double partial_floor = 0.0;
    /// eps_N estimate and the full floor 1 - eps_N - 1/tau when requested.
    std::optional<double> eps_hat;
    std::optional<double> floor;
    /// delta outside [N^-gamma, ...) (e.g. delta = 0).
    bool outside_theorem = false;
    double rhs = 0.0;
    noise::Summary lhs;
    noise::Summary error;
};

struct Theorem2Result {
    std::size_t n = 0;
    equiv::EquivalenceParams params;
    equiv::ErrorBudget budget;
    std::vector<TrialRecord> records;
    Theorem2Summary summary;
};

/// Trial k draws G from noise::substream_seed(config.seed, k).
Theorem2Result run_theorem2(const ExperimentConfig& config, std::size_t workers = 1);

struct SweepPoint {
    std::size_t n = 0;
    std::size_t n_star = 0;
    double delta = 0.0;
    double rhs = 0.0;
    bool rhs_infinite = false;
    double median_error = 0.0;
    double q25_error = 0.0;
    double q75_error = 0.0;
    double median_lhs = 0.0;
};

struct Theorem1Result {
    equiv::SumConvention convention = equiv::SumConvention::drop_all_small;
    std::vector<TrialRecord> records;
    std::vector<SweepPoint> points;
    /// N values whose rhs was -infinity; excluded from the trend.
    std::size_t flagged = 0;
    /// Median error strictly decreasing over the non-flagged N values.
    bool decreasing = false;
};

/// delta = N^-gamma per N; trial k at sweep position p draws from
/// substream_seed(seed, p * 2^32 + k). Records carry M = N* and
/// alpha = N^{eta-gamma}; the error budget does not apply and is NaN.
Theorem1Result run_theorem1(const ExperimentConfig& config, double gamma, double eta,
                            equiv::SumConvention convention, std::size_t workers = 1);

struct CheckSummary {
    std::string check;
    std::size_t evaluated = 0;
    std::size_t failed = 0;
    double worst_margin = 0.0;
};

struct GrushinSuiteReport {
    std::size_t n = 0;
    std::size_t m = 0;
    double alpha = 0.0;
    std::vector<grushin::CheckRecord> records;
    std::vector<CheckSummary> checks;
    std::size_t skipped_contraction = 0;
    bool pass = true;

    [[nodiscard]] std::optional<grushin::CheckRecord> first_failure() const;
};

/// Evaluates every Grushin identity and bound on the configured matrix and
/// on `trials` sampled perturbations of size delta.
GrushinSuiteReport run_grushin_suite(const ExperimentConfig& config, std::size_t workers = 1);

struct FieldPoint {
    Complex z;
    double rhs = 0.0;
    double lhs_mean = 0.0;
    double lhs_sd = 0.0;
    std::size_t trials = 0;
    double alpha = 0.0;
    std::size_t m = 0;
};

/// For each grid point z (index p), A_z = z I - A; trial k draws from
/// substream_seed(seed, p * trials + k), so point 0 reproduces run_theorem2
/// on the shifted matrix.
std::vector<FieldPoint> log_potential_field(const ExperimentConfig& config, std::size_t workers = 1);

extern const char* const kRecordsHeader;
extern const char* const kFieldHeader;

void write_records_csv(std::ostream& os, std::span<const TrialRecord> records);
void write_field_csv(std::ostream& os, std::span<const FieldPoint> points);

nlohmann::json summary_json(const Theorem2Result& result);
nlohmann::json summary_json(const Theorem1Result& result);
nlohmann::json summary_json(const GrushinSuiteReport& report);

/// Binary-mode stream for `path`, creating missing parent directories.
/// Throws IoError on failure.
std::ofstream open_output(const std::string& path);

/// Writes <prefix>.csv. Throws IoError when the file cannot be written.
void write_results(std::span<const TrialRecord> records, const std::string& path_prefix);
void write_field(std::span<const FieldPoint> points, const std::string& path_prefix);
void write_json(const nlohmann::json& j, const std::string& path);

} // namespace logdet::experiments
