#include "logdet/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "logdet/errors.hpp"

namespace logdet::linalg {

namespace {

const char* svd_info_name(Eigen::ComputationInfo info)
{
    switch (info) {
    case Eigen::Success: return "success";
    case Eigen::NumericalIssue: return "numerical issue";
    case Eigen::NoConvergence: return "no convergence";
    case Eigen::InvalidInput: return "invalid input";
    }
    return "unknown";
}

} // namespace

std::vector<double> SvdFactorization::descending() const
{
    std::vector<double> s(t.data(), t.data() + t.size());
    std::reverse(s.begin(), s.end());
    return s;
}

ComplexMatrix SvdFactorization::reconstruct() const
{
    return f * t.cast<Complex>().asDiagonal() * e.adjoint();
}

double default_tolerance(double norm) { return 1e-10 * std::max(1.0, norm); }

void require_square(const ComplexMatrix& a, const char* what)
{
    if (a.rows() != a.cols()) {
        throw DimensionError(std::string(what) + ": expected a square matrix, got " +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    }
}

void require_finite(const ComplexMatrix& a, const char* what)
{
    if (a.rows() < 1 || a.cols() < 1)
        throw DimensionError(std::string(what) + ": matrix must be at least 1x1");
    if (!a.allFinite())
        throw NumericalError(std::string(what) + ": matrix has non-finite entries");
}

SvdFactorization svd_paired(const ComplexMatrix& a)
{
    require_square(a, "svd_paired");
    const Eigen::Index n = a.rows();
    SvdFactorization out;
    if (n == 0)
        return out;
    if (!a.allFinite())
        throw NumericalError("svd_paired: matrix has non-finite entries");

    Eigen::BDCSVD<ComplexMatrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.info() != Eigen::Success) {
        throw NumericalError(std::string("svd_paired: SVD failed (") + svd_info_name(svd.info()) +
                             ") for " + std::to_string(n) + "x" + std::to_string(n) + " input");
    }

    // Eigen returns descending values; flip to the ascending t_i ordering.
    out.t = svd.singularValues().reverse();
    out.e = svd.matrixV().rowwise().reverse();
    out.f = svd.matrixU().rowwise().reverse();

    // Absorb any residual phase into f so that A e_i = t_i f_i with t_i >= 0.
    for (Eigen::Index i = 0; i < n; ++i) {
        const Complex c = out.f.col(i).dot(a * out.e.col(i));
        const double mag = std::abs(c);
        if (mag > 0.0)
            out.f.col(i) *= c / mag;
    }
    return out;
}

RealVector singular_values_ascending(const ComplexMatrix& a)
{
    if (a.size() == 0)
        return RealVector(0);
    Eigen::BDCSVD<ComplexMatrix> svd(a);
    if (svd.info() != Eigen::Success)
        throw NumericalError(std::string("singular values: SVD failed (") + svd_info_name(svd.info()) + ")");
    return svd.singularValues().reverse();
}

std::vector<double> singular_values_descending(const ComplexMatrix& a)
{
    if (a.size() == 0)
        return {};
    Eigen::BDCSVD<ComplexMatrix> svd(a);
    if (svd.info() != Eigen::Success)
        throw NumericalError(std::string("singular values: SVD failed (") + svd_info_name(svd.info()) + ")");
    const RealVector& s = svd.singularValues();
    return {s.data(), s.data() + s.size()};
}

double log_abs_det(const ComplexMatrix& a)
{
    require_square(a, "log_abs_det");
    const Eigen::Index n = a.rows();
    if (n == 0)
        return 0.0;

    // Rows whose entries approach the overflow or underflow range are
    // rescaled by a power of two; other rows are left untouched so ordinary
    // inputs give bit-identical results.
    ComplexMatrix lu = a;
    CompensatedSum acc;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double biggest = lu.row(i).cwiseAbs().maxCoeff();
        if (biggest == 0.0)
            return -std::numeric_limits<double>::infinity();
        int exponent = 0;
        std::frexp(biggest, &exponent);
        if (exponent > 500 || exponent < -500) {
            // Two steps: 2^-exponent itself overflows for subnormal rows.
            const int half = -exponent / 2;
            lu.row(i) *= std::ldexp(1.0, half);
            lu.row(i) *= std::ldexp(1.0, -exponent - half);
            acc.add(static_cast<double>(exponent) * std::numbers::ln2);
        }
    }

    // Unblocked LU with partial pivoting. Multipliers use std::complex
    // division, which scales internally and stays finite for tiny pivots.
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::Index p = k;
        double best = std::abs(lu(k, k));
        for (Eigen::Index i = k + 1; i < n; ++i) {
            const double v = std::abs(lu(i, k));
            if (v > best) {
                best = v;
                p = i;
            }
        }
        if (best == 0.0)
            return -std::numeric_limits<double>::infinity();
        if (p != k)
            lu.row(k).swap(lu.row(p));
        const Complex pivot = lu(k, k);
        acc.add(std::log(best));
        const Eigen::Index rest = n - k - 1;
        if (rest == 0)
            break;
        for (Eigen::Index i = k + 1; i < n; ++i)
            lu(i, k) = lu(i, k) / pivot;
        lu.bottomRightCorner(rest, rest).noalias() -= lu.col(k).tail(rest) * lu.row(k).tail(rest);
    }
    return acc.value();
}

double operator_norm(const ComplexMatrix& a)
{
    if (a.size() == 0)
        return 0.0;
    return singular_values_descending(a).front();
}

double smallest_singular_value(const ComplexMatrix& a)
{
    require_square(a, "smallest_singular_value");
    if (a.size() == 0)
        return 0.0;
    return singular_values_descending(a).back();
}

double identity_residual(const ComplexMatrix& a)
{
    if (a.size() == 0)
        return 0.0;
    return (a - ComplexMatrix::Identity(a.rows(), a.cols())).cwiseAbs().maxCoeff();
}

} // namespace logdet::linalg
