#include "logdet/grushin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "logdet/errors.hpp"

namespace logdet::grushin {

namespace {

using Eigen::Index;

ComplexMatrix dense_inverse(const ComplexMatrix& p, const char* what)
{
    const Eigen::PartialPivLU<ComplexMatrix> lu(p);
    const ComplexMatrix& packed = lu.matrixLU();
    for (Index i = 0; i < packed.rows(); ++i) {
        if (packed(i, i) == Complex(0.0, 0.0))
            throw NumericalError(std::string(what) + ": bordered system is singular (zero pivot at " +
                                 std::to_string(i) + ")");
    }
    ComplexMatrix inv = lu.inverse();
    if (!inv.allFinite())
        throw NumericalError(std::string(what) + ": inverse has non-finite entries");
    return inv;
}

double identity_gap(double lhs, double rhs)
{
    // Both sides -inf (or both +inf) is agreement, not NaN.
    if (lhs == rhs)
        return 0.0;
    return std::abs(lhs - rhs);
}

} // namespace

ComplexMatrix InverseBlocks::assemble() const
{
    const Index n = e.rows();
    const Index m = e_minus_plus.rows();
    ComplexMatrix out(n + m, n + m);
    out.topLeftCorner(n, n) = e;
    out.topRightCorner(n, m) = e_plus;
    out.bottomLeftCorner(m, n) = e_minus;
    out.bottomRightCorner(m, m) = e_minus_plus;
    return out;
}

ComplexMatrix PerturbedSystem::perturbed(const GrushinSystem& sys) const
{
    if (delta == 0.0)
        return sys.a;
    return sys.a + Complex(delta, 0.0) * g;
}

double CheckRecord::margin() const
{
    switch (relation) {
    case Relation::equal: return bound - identity_gap(lhs, rhs);
    case Relation::at_most: return rhs + bound - lhs;
    case Relation::at_least: return lhs - (rhs - bound);
    }
    return -std::numeric_limits<double>::infinity();
}

CheckRecord CheckRecord::make(std::string check, std::size_t n, double lhs, double rhs, double bound,
                              Relation relation)
{
    CheckRecord r{std::move(check), n, lhs, rhs, bound, relation, false};
    r.pass = r.margin() >= 0.0; // NaN fails
    return r;
}

void to_json(nlohmann::json& j, const CheckRecord& r)
{
    auto num = [](double v) -> nlohmann::json {
        if (std::isfinite(v))
            return v;
        if (std::isnan(v))
            return "nan";
        return v > 0 ? "inf" : "-inf";
    };
    j = nlohmann::json{{"check", r.check}, {"n", r.n},          {"lhs", num(r.lhs)},
                       {"rhs", num(r.rhs)}, {"bound", num(r.bound)}, {"pass", r.pass}};
}

std::pair<GrushinSystem, InverseBlocks> build_grushin(const ComplexMatrix& a, std::size_t m)
{
    linalg::require_square(a, "build_grushin");
    linalg::require_finite(a, "build_grushin");
    const auto n = static_cast<std::size_t>(a.rows());
    if (m > n)
        throw DimensionError("build_grushin: M = " + std::to_string(m) + " exceeds N = " + std::to_string(n));

    GrushinSystem sys;
    sys.a = a;
    sys.m = m;
    sys.svd = linalg::svd_paired(a);
    const auto& t = sys.svd.t;
    const auto mi = static_cast<Index>(m);
    const auto ni = static_cast<Index>(n);

    if (m < n && t(mi) == 0.0) {
        throw DeflationError("build_grushin: t_" + std::to_string(m + 1) +
                             " = 0, so the retained block is singular; raise M to at least the number of zero "
                             "singular values");
    }

    sys.r_plus = sys.svd.e.leftCols(mi).adjoint();
    sys.r_minus = sys.svd.f.leftCols(mi);

    InverseBlocks blocks;
    const Index kept = ni - mi;
    const RealVector inv_t = t.tail(kept).cwiseInverse();
    blocks.e = sys.svd.e.rightCols(kept) * inv_t.cast<Complex>().asDiagonal() * sys.svd.f.rightCols(kept).adjoint();
    blocks.e_plus = sys.svd.e.leftCols(mi);
    blocks.e_minus = sys.svd.f.leftCols(mi).adjoint();
    blocks.e_minus_plus = ComplexMatrix::Zero(mi, mi);
    blocks.e_minus_plus.diagonal() = -t.head(mi).cast<Complex>();
    return {std::move(sys), std::move(blocks)};
}

ComplexMatrix assemble(const GrushinSystem& sys)
{
    return assemble_perturbed(sys, ComplexMatrix(), 0.0);
}

ComplexMatrix assemble_perturbed(const GrushinSystem& sys, const ComplexMatrix& g, double delta)
{
    const auto n = static_cast<Index>(sys.n());
    const auto m = static_cast<Index>(sys.m);
    ComplexMatrix p = ComplexMatrix::Zero(n + m, n + m);
    p.topLeftCorner(n, n) = sys.a;
    if (delta != 0.0) {
        if (g.rows() != n || g.cols() != n)
            throw DimensionError("assemble_perturbed: G must be " + std::to_string(n) + "x" + std::to_string(n));
        p.topLeftCorner(n, n) += Complex(delta, 0.0) * g;
    }
    p.topRightCorner(n, m) = sys.r_minus;
    p.bottomLeftCorner(m, n) = sys.r_plus;
    return p;
}

InverseBlocks split_blocks(const ComplexMatrix& inverse, std::size_t n, std::size_t m)
{
    const auto ni = static_cast<Index>(n);
    const auto mi = static_cast<Index>(m);
    if (inverse.rows() != ni + mi || inverse.cols() != ni + mi)
        throw DimensionError("split_blocks: expected a square matrix of size N + M");
    return {inverse.topLeftCorner(ni, ni), inverse.topRightCorner(ni, mi), inverse.bottomLeftCorner(mi, ni),
            inverse.bottomRightCorner(mi, mi)};
}

InverseBlocks direct_inverse(const GrushinSystem& sys)
{
    return split_blocks(dense_inverse(assemble(sys), "direct_inverse"), sys.n(), sys.m);
}

double two_sided_residual(const GrushinSystem& sys, const InverseBlocks& blocks)
{
    const ComplexMatrix p = assemble(sys);
    const ComplexMatrix e = blocks.assemble();
    return std::max(linalg::identity_residual(p * e), linalg::identity_residual(e * p));
}

IdentityValues grushin_det_identity(const GrushinSystem& sys)
{
    IdentityValues out;
    out.lhs = 2.0 * linalg::log_abs_det(assemble(sys));
    double acc = 0.0;
    for (Index i = static_cast<Index>(sys.m); i < sys.svd.t.size(); ++i)
        acc += 2.0 * std::log(sys.svd.t(i));
    out.rhs = acc;
    return out;
}

std::vector<CheckRecord> norm_estimates(const GrushinSystem& sys, const InverseBlocks& blocks, double alpha,
                                        double slack)
{
    std::vector<CheckRecord> out;
    out.push_back(CheckRecord::make("gp9_E_norm", 0, linalg::operator_norm(blocks.e), 1.0 / alpha, slack,
                                    Relation::at_most));
    if (sys.m > 0) {
        out.push_back(CheckRecord::make("gp9_E_plus_norm", 0, linalg::operator_norm(blocks.e_plus), 1.0, slack,
                                        Relation::equal));
        out.push_back(CheckRecord::make("gp9_E_minus_norm", 0, linalg::operator_norm(blocks.e_minus), 1.0, slack,
                                        Relation::equal));
    }
    out.push_back(CheckRecord::make("gp9_E_minus_plus_norm", 0, linalg::operator_norm(blocks.e_minus_plus), alpha,
                                    slack, Relation::at_most));
    return out;
}

PerturbedSystem invert_perturbed(const GrushinSystem& sys, const InverseBlocks& base, const ComplexMatrix& g,
                                 double delta, double alpha, Inversion method)
{
    const auto n = static_cast<Index>(sys.n());
    if (g.rows() != n || g.cols() != n)
        throw DimensionError("invert_perturbed: G must be " + std::to_string(n) + "x" + std::to_string(n));
    if (!(delta >= 0.0))
        throw ContractError("invert_perturbed: delta must be nonnegative");
    if (!(alpha > 0.0))
        throw ContractError("invert_perturbed: alpha must be positive");

    PerturbedSystem out;
    out.g = g;
    out.delta = delta;
    out.alpha = alpha;
    out.g_norm = linalg::operator_norm(g);
    out.contraction = delta * out.g_norm / alpha;

    if (method.method == InversionMethod::neumann) {
        if (out.contraction > 0.5) {
            throw ContractionError("invert_perturbed: contraction delta*|G|/alpha = " +
                                   std::to_string(out.contraction) + " exceeds 1/2; Neumann series not admissible");
        }
        if (method.n_terms < 0)
            throw ContractError("invert_perturbed: n_terms must be nonnegative");
    }

    if (delta == 0.0) {
        out.blocks = base;
        return out;
    }

    if (method.method == InversionMethod::direct) {
        out.blocks = split_blocks(dense_inverse(assemble_perturbed(sys, g, delta), "invert_perturbed"), sys.n(),
                                  sys.m);
        return out;
    }

    // E^d = E + sum_{k>=1} (-d)^k [[E (GE)^k,        (EG)^k E_+           ],
    //                             [E_- (GE)^k,      E_- (GE)^{k-1} G E_+ ]]
    // with (EG)^k E_+ = E (GE)^{k-1} G E_+.
    const ComplexMatrix ge = g * base.e;
    const ComplexMatrix g_eplus = g * base.e_plus;
    InverseBlocks acc = base;
    ComplexMatrix power = ComplexMatrix::Identity(n, n); // (GE)^{k-1}
    double coeff = 1.0;
    for (int k = 1; k <= method.n_terms; ++k) {
        coeff *= -delta;
        const ComplexMatrix next = power * ge; // (GE)^k
        const ComplexMatrix tail_plus = power * g_eplus;
        const Complex c(coeff, 0.0);
        acc.e += c * (base.e * next);
        acc.e_plus += c * (base.e * tail_plus);
        acc.e_minus += c * (base.e_minus * next);
        acc.e_minus_plus += c * (base.e_minus * tail_plus);
        power = next;
    }
    out.blocks = std::move(acc);
    return out;
}

double block_difference(const InverseBlocks& x, const InverseBlocks& y)
{
    return std::max({linalg::operator_norm(x.e - y.e), linalg::operator_norm(x.e_plus - y.e_plus),
                     linalg::operator_norm(x.e_minus - y.e_minus),
                     linalg::operator_norm(x.e_minus_plus - y.e_minus_plus)});
}

std::vector<CheckRecord> perturbed_bounds(const GrushinSystem& sys, const InverseBlocks& base,
                                          const PerturbedSystem& pert, double slack)
{
    const double alpha = pert.alpha;
    const auto& b = pert.blocks;
    const double shift = linalg::operator_norm(b.e_minus_plus - base.e_minus_plus);
    std::vector<CheckRecord> out;
    out.push_back(CheckRecord::make("gpp6_E_norm", 0, linalg::operator_norm(b.e), 2.0 / alpha, slack,
                                    Relation::at_most));
    if (sys.m > 0) {
        out.push_back(CheckRecord::make("gpp6_E_plus_norm", 0, linalg::operator_norm(b.e_plus), 2.0, slack,
                                        Relation::at_most));
        out.push_back(CheckRecord::make("gpp6_E_minus_norm", 0, linalg::operator_norm(b.e_minus), 2.0, slack,
                                        Relation::at_most));
    }
    out.push_back(CheckRecord::make("gpp6_E_minus_plus_shift", 0, shift, 2.0 * pert.delta * pert.g_norm, slack,
                                    Relation::at_most));
    out.push_back(CheckRecord::make("gpp6_E_minus_plus_shift_alpha", 0, shift, alpha, slack, Relation::at_most));
    out.push_back(CheckRecord::make("gpp6_E_minus_plus_norm", 0, linalg::operator_norm(b.e_minus_plus),
                                    2.0 * alpha, slack, Relation::at_most));
    return out;
}

IdentityValues schur_logdet(const GrushinSystem& sys, const PerturbedSystem& pert)
{
    IdentityValues out;
    out.lhs = linalg::log_abs_det(pert.perturbed(sys));
    const double bordered = linalg::log_abs_det(assemble_perturbed(sys, pert.g, pert.delta));
    const double effective = linalg::log_abs_det(pert.blocks.e_minus_plus);
    out.rhs = bordered + effective;
    return out;
}

DriftValues perturbation_drift_bound(const GrushinSystem& sys, const PerturbedSystem& pert)
{
    const double n = static_cast<double>(sys.n());
    const double perturbed = linalg::log_abs_det(assemble_perturbed(sys, pert.g, pert.delta));
    const double unperturbed = linalg::log_abs_det(assemble(sys));
    DriftValues out;
    out.drift = pert.delta == 0.0 ? 0.0 : std::abs(perturbed - unperturbed) / n;
    out.bound = 2.0 * pert.delta * pert.g_norm / pert.alpha;
    return out;
}

InterlacingReport interlacing_check(const GrushinSystem& sys, const PerturbedSystem& pert, double slack)
{
    InterlacingReport report;
    report.slack = slack;
    if (sys.m == 0)
        return report;
    const RealVector t_a = linalg::singular_values_ascending(pert.perturbed(sys));
    const RealVector t_e = linalg::singular_values_ascending(pert.blocks.e_minus_plus);
    const double e_norm = linalg::operator_norm(pert.blocks.e);
    const double ep_norm = linalg::operator_norm(pert.blocks.e_plus);
    const double em_norm = linalg::operator_norm(pert.blocks.e_minus);
    report.r_plus_norm = linalg::operator_norm(sys.r_plus);
    report.r_minus_norm = linalg::operator_norm(sys.r_minus);

    for (std::size_t k = 0; k < sys.m; ++k) {
        const auto i = static_cast<Index>(k);
        InterlacingEntry entry;
        entry.n = k + 1;
        entry.t_a = t_a(i);
        entry.t_emp = t_e(i);
        const double denom = e_norm * entry.t_emp + em_norm * ep_norm;
        entry.lower = denom > 0.0 ? entry.t_emp / denom : 0.0;
        entry.upper = report.r_plus_norm * report.r_minus_norm * entry.t_emp;
        entry.lower_ok = entry.t_a >= entry.lower - slack;
        entry.upper_ok = entry.t_a <= entry.upper + slack;
        entry.specialization_ok = entry.t_a <= entry.t_emp + slack;
        report.pass = report.pass && entry.lower_ok && entry.upper_ok && entry.specialization_ok;
        report.entries.push_back(entry);
    }
    return report;
}

std::vector<CheckRecord> InterlacingReport::records() const
{
    std::vector<CheckRecord> out;
    for (const auto& e : entries) {
        auto lo = CheckRecord::make("interlacing_lower", e.n, e.t_a, e.lower, slack, Relation::at_least);
        auto up = CheckRecord::make("interlacing_upper", e.n, e.t_a, e.upper, slack, Relation::at_most);
        auto sp = CheckRecord::make("interlacing_rn6", e.n, e.t_a, e.t_emp, slack, Relation::at_most);
        lo.pass = e.lower_ok;
        up.pass = e.upper_ok;
        sp.pass = e.specialization_ok;
        out.push_back(std::move(lo));
        out.push_back(std::move(up));
        out.push_back(std::move(sp));
    }
    return out;
}

} // namespace logdet::grushin
