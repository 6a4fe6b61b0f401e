#pragma once

// Grushin (bordered) problem for a square matrix A.
//
// Given the paired SVD A e_i = t_i f_i with t ascending and a deflation count M,
// the bordered operator
//
//     P = [ A    R_- ]      R_+ = sum_{i<=M} d_i e_i^*,   R_- = sum_{i<=M} f_i d_i^*
//         [ R_+  0   ]
//
// is invertible whenever t_{M+1} > 0, with explicit inverse
//
//     E      = sum_{i>M} t_i^{-1} e_i f_i^*      E_+  = sum_{i<=M} e_i d_i^*
//     E_-    = sum_{i<=M} d_i f_i^*              E_-+ = -sum_{i<=M} t_i d_i d_i^*
//
// where d_i is the standard basis of C^M. For A^delta = A + delta G the
// perturbed inverse is obtained by dense inversion or by the Neumann series in
// delta G E. The checks below evaluate each identity and bound numerically.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "logdet/linalg.hpp"

namespace logdet::grushin {

struct GrushinSystem {
    ComplexMatrix a;
    std::size_t m = 0;
    ComplexMatrix r_plus;  // M x N
    ComplexMatrix r_minus; // N x M
    linalg::SvdFactorization svd;

    [[nodiscard]] std::size_t n() const { return static_cast<std::size_t>(a.rows()); }
};

struct InverseBlocks {
    ComplexMatrix e;            // N x N
    ComplexMatrix e_plus;       // N x M
    ComplexMatrix e_minus;      // M x N
    ComplexMatrix e_minus_plus; // M x M

    /// [[E, E_+], [E_-, E_-+]]
    [[nodiscard]] ComplexMatrix assemble() const;
};

struct PerturbedSystem {
    ComplexMatrix g;
    double delta = 0.0;
    double alpha = 1.0;
    double g_norm = 0.0;
    /// delta * |G| / alpha
    double contraction = 0.0;
    InverseBlocks blocks;

    /// A + delta G
    [[nodiscard]] ComplexMatrix perturbed(const GrushinSystem& sys) const;
};

enum class InversionMethod { direct, neumann };

struct Inversion {
    InversionMethod method = InversionMethod::direct;
    int n_terms = 0;

    static Inversion direct() { return {}; }
    static Inversion neumann(int terms) { return {InversionMethod::neumann, terms}; }
};

/// How a CheckRecord compares lhs to rhs.
enum class Relation {
    equal,   // |lhs - rhs| <= bound
    at_most, // lhs <= rhs + bound
    at_least // lhs >= rhs - bound
};

/// One evaluated identity or inequality. `n` is an index (trial, singular value
/// number) whose meaning depends on the check.
struct CheckRecord {
    std::string check;
    std::size_t n = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double bound = 0.0;
    Relation relation = Relation::equal;
    bool pass = false;

    /// Distance to failure; negative when the check fails.
    [[nodiscard]] double margin() const;

    static CheckRecord make(std::string check, std::size_t n, double lhs, double rhs, double bound,
                            Relation relation);
};

void to_json(nlohmann::json& j, const CheckRecord& r);

std::pair<GrushinSystem, InverseBlocks> build_grushin(const ComplexMatrix& a, std::size_t m);

/// [[A, R_-], [R_+, 0]]; equals A itself when M = 0.
ComplexMatrix assemble(const GrushinSystem& sys);

/// [[A + delta G, R_-], [R_+, 0]]
ComplexMatrix assemble_perturbed(const GrushinSystem& sys, const ComplexMatrix& g, double delta);

/// Splits a dense (N+M)x(N+M) inverse into its four blocks.
InverseBlocks split_blocks(const ComplexMatrix& inverse, std::size_t n, std::size_t m);

/// Blocks read off a dense inversion of assemble(sys).
InverseBlocks direct_inverse(const GrushinSystem& sys);

/// Max over P*E - I and E*P - I of the largest entry magnitude.
double two_sided_residual(const GrushinSystem& sys, const InverseBlocks& blocks);

struct IdentityValues {
    double lhs = 0.0;
    double rhs = 0.0;
};

/// lhs = 2 log|det P|, rhs = sum_{i>M} 2 log t_i.
IdentityValues grushin_det_identity(const GrushinSystem& sys);

/// Unperturbed norm estimates |E| <= 1/alpha, |E_+-| = 1, |E_-+| <= alpha.
/// Meaningful for alpha in [t_M, t_{M+1}].
std::vector<CheckRecord> norm_estimates(const GrushinSystem& sys, const InverseBlocks& blocks, double alpha,
                                        double slack = 1e-12);

/// Inverse of the perturbed problem P^delta.
///
/// `base` are the unperturbed blocks (needed by the Neumann route). Throws
/// ContractionError for the Neumann route when delta |G| / alpha > 1/2 and
/// NumericalError when the direct route meets a singular system.
PerturbedSystem invert_perturbed(const GrushinSystem& sys, const InverseBlocks& base, const ComplexMatrix& g,
                                 double delta, double alpha, Inversion method = Inversion::direct());

/// Largest operator-norm difference over the four blocks.
double block_difference(const InverseBlocks& x, const InverseBlocks& y);

/// Perturbed block bounds: |E^d| <= 2/alpha, |E^d_+-| <= 2,
/// |E^d_-+ - E_-+| <= 2 delta |G| and <= alpha, |E^d_-+| <= 2 alpha.
std::vector<CheckRecord> perturbed_bounds(const GrushinSystem& sys, const InverseBlocks& base,
                                          const PerturbedSystem& pert, double slack = 1e-12);

/// lhs = log|det(A + delta G)|, rhs = log|det P^delta| + log|det E^delta_-+|.
IdentityValues schur_logdet(const GrushinSystem& sys, const PerturbedSystem& pert);

struct DriftValues {
    double drift = 0.0;
    double bound = 0.0;
};

/// drift = |(log|det P^delta| - log|det P|) / N|, bound = 2 delta |G| / alpha.
DriftValues perturbation_drift_bound(const GrushinSystem& sys, const PerturbedSystem& pert);

struct InterlacingEntry {
    std::size_t n = 0;
    double t_a = 0.0;   // t_n(A^delta)
    double t_emp = 0.0; // t_n(E^delta_-+)
    double lower = 0.0;
    double upper = 0.0;
    bool lower_ok = false;
    bool upper_ok = false;
    bool specialization_ok = false;
};

struct InterlacingReport {
    std::vector<InterlacingEntry> entries;
    double r_plus_norm = 0.0;
    double r_minus_norm = 0.0;
    double slack = 0.0;
    bool pass = true;

    [[nodiscard]] std::vector<CheckRecord> records() const;
};

/// For n = 1..M:
///   t_n(E_-+) / (|E| t_n(E_-+) + |E_-| |E_+|) <= t_n(A^delta) <= |R_+| |R_-| t_n(E_-+)
/// and t_n(A^delta) <= t_n(E_-+), all with ascending singular values.
InterlacingReport interlacing_check(const GrushinSystem& sys, const PerturbedSystem& pert, double slack = 1e-9);

} // namespace logdet::grushin
