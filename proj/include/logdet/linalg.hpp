#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace logdet {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

namespace linalg {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double v)
    {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    [[nodiscard]] double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Singular value decomposition with the pairing A e_i = t_i f_i, A^* f_i = t_i e_i.
///
/// Values are stored ascending (t_1 <= ... <= t_N). Column i of `e` is the right
/// vector e_i, column i of `f` the left vector f_i. The descending view used by
/// the cutoff sums is s_j = t_{N+1-j}.
struct SvdFactorization {
    RealVector t;
    ComplexMatrix e;
    ComplexMatrix f;

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(t.size()); }

    /// s_1 >= ... >= s_N.
    [[nodiscard]] std::vector<double> descending() const;

    /// sum_i t_i f_i e_i^*
    [[nodiscard]] ComplexMatrix reconstruct() const;
};

/// Scale-aware tolerance 1e-10 * max(1, |A|) used for identity checks.
double default_tolerance(double norm);

void require_square(const ComplexMatrix& a, const char* what);

/// Throws DimensionError on an empty matrix and NumericalError on NaN/Inf entries.
void require_finite(const ComplexMatrix& a, const char* what);

SvdFactorization svd_paired(const ComplexMatrix& a);

/// Singular values only; ascending order.
RealVector singular_values_ascending(const ComplexMatrix& a);

/// Singular values only; descending order (s_1 >= ... >= s_N).
std::vector<double> singular_values_descending(const ComplexMatrix& a);

/// log|det A| accumulated from the pivots of a partially pivoted LU factorization.
///
/// Returns -infinity when a pivot is exactly zero. The empty 0x0 matrix has
/// determinant 1, so its log is 0.
double log_abs_det(const ComplexMatrix& a);

/// Largest singular value. The empty matrix has norm 0.
double operator_norm(const ComplexMatrix& a);

double smallest_singular_value(const ComplexMatrix& a);

/// Max-abs entry of A - I.
double identity_residual(const ComplexMatrix& a);

} // namespace linalg
} // namespace logdet
