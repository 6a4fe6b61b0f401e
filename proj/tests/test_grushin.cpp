#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "logdet/errors.hpp"
#include "logdet/grushin.hpp"
#include "logdet/linalg.hpp"
#include "oracles.hpp"

using namespace logdet;
using namespace logdet::grushin;

namespace {

ComplexMatrix diag(std::initializer_list<double> v)
{
    ComplexMatrix a = ComplexMatrix::Zero(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) {
        a(i, i) = x;
        ++i;
    }
    return a;
}

// U diag(s) V^* with prescribed singular values.
ComplexMatrix with_spectrum(const std::vector<double>& s, std::uint64_t seed)
{
    const auto n = s.size();
    const ComplexMatrix u = oracle::random_unitary(n, seed);
    const ComplexMatrix v = oracle::random_unitary(n, seed + 7777);
    ComplexMatrix d = ComplexMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = s[i];
    return u * d * v.adjoint();
}

struct Instance {
    ComplexMatrix a;
    std::size_t m;
    double alpha;
};

// Random N in [3, 20], M in [1, min(6, N-1)], gap between t_M and t_{M+1}.
Instance random_instance(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const std::size_t n = 3 + rng() % 18;
    const std::size_t m = 1 + rng() % std::min<std::size_t>(6, n - 1);
    std::uniform_real_distribution<double> small(0.0, 0.2);
    std::uniform_real_distribution<double> large(0.5, 3.0);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i)
        s[i] = i < m ? small(rng) : large(rng);
    std::sort(s.begin(), s.end());
    const double alpha = 0.5 * (s[m - 1] + s[m]);
    return {with_spectrum(s, seed * 31 + 1), m, alpha};
}

double max_abs(const ComplexMatrix& x)
{
    return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
}

} // namespace

TEST(BuildGrushin, DiagonalWithZero)
{
    const auto [sys, blocks] = build_grushin(diag({2, 0}), 1);
    ASSERT_EQ(blocks.e_minus_plus.rows(), 1);
    EXPECT_EQ(blocks.e_minus_plus(0, 0), Complex(0.0, 0.0));
    ComplexMatrix expected = ComplexMatrix::Zero(2, 2);
    expected(0, 0) = 0.5;
    EXPECT_LE(max_abs(blocks.e - expected), 1e-15);
    EXPECT_NEAR(linalg::operator_norm(sys.r_plus), 1.0, 1e-14);
    EXPECT_NEAR(linalg::operator_norm(sys.r_minus), 1.0, 1e-14);
}

TEST(BuildGrushin, NoDeflationGivesInverse)
{
    const ComplexMatrix a = oracle::random_complex(7, 3);
    const auto [sys, blocks] = build_grushin(a, 0);
    EXPECT_EQ(sys.r_plus.rows(), 0);
    EXPECT_EQ(sys.r_minus.cols(), 0);
    EXPECT_EQ(blocks.e_plus.cols(), 0);
    EXPECT_EQ(blocks.e_minus.rows(), 0);
    EXPECT_EQ(blocks.e_minus_plus.size(), 0);
    EXPECT_EQ(linalg::log_abs_det(blocks.e_minus_plus), 0.0);
    EXPECT_LE(max_abs(blocks.e - oracle::gauss_jordan_inverse(a)), 1e-11);
}

TEST(BuildGrushin, RandomSixBySixInverse)
{
    const ComplexMatrix a = oracle::random_complex(6, 11);
    const auto [sys, blocks] = build_grushin(a, 2);
    const ComplexMatrix prod = assemble(sys) * blocks.assemble();
    EXPECT_LE(max_abs(prod - ComplexMatrix::Identity(8, 8)), 1e-11);
}

TEST(BuildGrushin, Errors)
{
    EXPECT_THROW(build_grushin(diag({2, 0}), 3), DimensionError);
    EXPECT_THROW(build_grushin(diag({2, 0, 0}), 1), DeflationError);
    EXPECT_NO_THROW(build_grushin(diag({2, 0, 0}), 2));
    EXPECT_THROW(build_grushin(ComplexMatrix::Zero(2, 3), 0), DimensionError);
}

TEST(BuildGrushin, FullDeflation)
{
    const ComplexMatrix a = oracle::random_complex(5, 4);
    const auto [sys, blocks] = build_grushin(a, 5);
    EXPECT_EQ(blocks.e.rows(), 5);
    EXPECT_LE(max_abs(blocks.e), 0.0);
    for (Eigen::Index i = 0; i < 5; ++i)
        EXPECT_EQ(blocks.e_minus_plus(i, i), Complex(-sys.svd.t(i), 0.0));
    EXPECT_LE(two_sided_residual(sys, blocks), 1e-12);
}

TEST(Assemble, NoDeflationReturnsA)
{
    const ComplexMatrix a = oracle::random_complex(4, 9);
    const auto [sys, blocks] = build_grushin(a, 0);
    EXPECT_EQ(assemble(sys), a);
}

TEST(Assemble, ThreeByThreeLayout)
{
    const ComplexMatrix a = diag({2, 0});
    const auto [sys, blocks] = build_grushin(a, 1);
    const ComplexMatrix p = assemble(sys);
    ASSERT_EQ(p.rows(), 3);
    EXPECT_EQ(p.topLeftCorner(2, 2), a);
    EXPECT_EQ(p(2, 2), Complex(0.0, 0.0));
    // R_+ = e_1^*, R_- = f_1; for diag(2, 0) both span the second coordinate.
    EXPECT_NEAR(std::abs(p(2, 1)), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(p(1, 2)), 1.0, 1e-15);
    EXPECT_EQ(p(2, 0), Complex(0.0, 0.0));
    EXPECT_EQ(p(0, 2), Complex(0.0, 0.0));
    EXPECT_LE(max_abs(p.bottomLeftCorner(1, 2) - sys.svd.e.col(0).adjoint()), 1e-15);
    EXPECT_LE(max_abs(p.topRightCorner(2, 1) - sys.svd.f.col(0)), 1e-15);
}

TEST(Assemble, LogDetFiniteForRetainedPositive)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto inst = random_instance(seed);
        const auto [sys, blocks] = build_grushin(inst.a, inst.m);
        EXPECT_TRUE(std::isfinite(linalg::log_abs_det(assemble(sys))));
    }
    // Zero singular values absorbed into the deflated block keep P invertible.
    const auto [sys, blocks] = build_grushin(diag({3, 0, 0}), 2);
    EXPECT_NEAR(linalg::log_abs_det(assemble(sys)), std::log(3.0), 1e-14);
}

TEST(DetIdentity, DiagonalExample)
{
    const auto [sys, blocks] = build_grushin(diag({2, 0}), 1);
    const auto id = grushin_det_identity(sys);
    EXPECT_NEAR(id.lhs, 2 * std::log(2.0), 1e-15);
    EXPECT_NEAR(id.rhs, 2 * std::log(2.0), 1e-15);
}

TEST(DetIdentity, IdentityMatrix)
{
    const auto [sys, blocks] = build_grushin(ComplexMatrix::Identity(5, 5), 0);
    const auto id = grushin_det_identity(sys);
    EXPECT_EQ(id.lhs, 0.0);
    EXPECT_EQ(id.rhs, 0.0);
}

TEST(DetIdentity, RandomAgainstDenseOracle)
{
    const ComplexMatrix a = oracle::random_complex(10, 21);
    const auto [sys, blocks] = build_grushin(a, 3);
    const auto id = grushin_det_identity(sys);
    const double expected = 2 * oracle::log_abs_det(assemble(sys));
    EXPECT_NEAR(id.lhs, expected, 1e-8);
    EXPECT_NEAR(id.rhs, expected, 1e-8);
    EXPECT_LE(std::abs(id.lhs - id.rhs), 1e-8 * 10);
}

TEST(InvertPerturbed, ZeroDeltaIsExact)
{
    const auto inst = random_instance(5);
    const auto [sys, blocks] = build_grushin(inst.a, inst.m);
    const ComplexMatrix g = oracle::random_complex(sys.n(), 6);
    for (auto method : {Inversion::direct(), Inversion::neumann(10)}) {
        const auto pert = invert_perturbed(sys, blocks, g, 0.0, inst.alpha, method);
        EXPECT_EQ(pert.blocks.e, blocks.e);
        EXPECT_EQ(pert.blocks.e_plus, blocks.e_plus);
        EXPECT_EQ(pert.blocks.e_minus, blocks.e_minus);
        EXPECT_EQ(pert.blocks.e_minus_plus, blocks.e_minus_plus);
        EXPECT_EQ(pert.contraction, 0.0);
    }
}

TEST(InvertPerturbed, DiagonalAgainstDenseOracle)
{
    const auto [sys, blocks] = build_grushin(diag({2, 0}), 1);
    const ComplexMatrix g = ComplexMatrix::Identity(2, 2);
    const auto pert = invert_perturbed(sys, blocks, g, 0.1, 1.0);
    const ComplexMatrix dense = oracle::gauss_jordan_inverse(assemble_perturbed(sys, g, 0.1));
    EXPECT_NEAR(std::abs(pert.blocks.e_minus_plus(0, 0) - dense(2, 2)), 0.0, 1e-14);
    // Schur complement of the 3x3 system: -(0 + 0.1) on the deflated direction.
    EXPECT_NEAR(pert.blocks.e_minus_plus(0, 0).real(), -0.1, 1e-14);
    EXPECT_NEAR(pert.contraction, 0.1, 1e-14);
}

TEST(InvertPerturbed, NeumannMatchesDirect)
{
    std::vector<double> s = {0.01, 0.03, 1.0, 1.2, 1.5, 2.0, 2.5, 3.0};
    const ComplexMatrix a = with_spectrum(s, 8);
    const auto [sys, blocks] = build_grushin(a, 2);
    const double alpha = 0.5;
    const ComplexMatrix g = oracle::random_complex(8, 9);
    const double delta = 0.3 * alpha / linalg::operator_norm(g);
    const auto direct = invert_perturbed(sys, blocks, g, delta, alpha);
    const auto series = invert_perturbed(sys, blocks, g, delta, alpha, Inversion::neumann(20));
    EXPECT_NEAR(series.contraction, 0.3, 1e-12);
    EXPECT_LE(block_difference(direct.blocks, series.blocks), 1e-9);
}

TEST(InvertPerturbed, Errors)
{
    const auto [sys, blocks] = build_grushin(diag({2, 1}), 0);
    const ComplexMatrix g = ComplexMatrix::Identity(2, 2);
    EXPECT_THROW(invert_perturbed(sys, blocks, g, 0.6, 1.0, Inversion::neumann(5)), ContractionError);
    EXPECT_NO_THROW(invert_perturbed(sys, blocks, g, 0.6, 1.0));
    EXPECT_THROW(invert_perturbed(sys, blocks, ComplexMatrix::Identity(3, 3), 0.1, 1.0), DimensionError);

    const auto [id_sys, id_blocks] = build_grushin(ComplexMatrix::Identity(2, 2), 0);
    const ComplexMatrix minus = -ComplexMatrix::Identity(2, 2);
    EXPECT_THROW(invert_perturbed(id_sys, id_blocks, minus, 1.0, 1.0), NumericalError);
}

TEST(SchurLogdet, NoDeflation)
{
    const ComplexMatrix a = oracle::random_complex(6, 12);
    const auto [sys, blocks] = build_grushin(a, 0);
    const auto pert = invert_perturbed(sys, blocks, oracle::random_complex(6, 13), 0.01, 1.0);
    const auto v = schur_logdet(sys, pert);
    EXPECT_EQ(v.lhs, v.rhs);
}

TEST(SchurLogdet, JordanCornerPerturbation)
{
    ComplexMatrix j = ComplexMatrix::Zero(3, 3);
    j(0, 1) = 1.0;
    j(1, 2) = 1.0;
    ComplexMatrix g = ComplexMatrix::Zero(3, 3);
    g(2, 0) = 1.0;
    const auto [sys, blocks] = build_grushin(j, 1);
    const auto pert = invert_perturbed(sys, blocks, g, 1e-3, 0.5);
    const auto v = schur_logdet(sys, pert);
    EXPECT_NEAR(v.lhs, std::log(1e-3), 1e-12);
    EXPECT_NEAR(v.rhs, std::log(1e-3), 1e-12);
}

TEST(SchurLogdet, RandomAgainstDenseOracle)
{
    const ComplexMatrix a = oracle::random_complex(10, 14);
    const auto [sys, blocks] = build_grushin(a, 3);
    const ComplexMatrix g = oracle::random_complex(10, 15);
    const double delta = 1e-4;
    const auto pert = invert_perturbed(sys, blocks, g, delta, 0.5);
    const auto v = schur_logdet(sys, pert);
    const ComplexMatrix ad = a + Complex(delta, 0.0) * g;
    const double expected = oracle::log_abs_det(ad);
    EXPECT_NEAR(v.lhs, expected, 1e-8);
    EXPECT_NEAR(v.rhs, expected, 1e-8);
}

TEST(DriftBound, ZeroDelta)
{
    const auto [sys, blocks] = build_grushin(diag({2, 0}), 1);
    const auto pert = invert_perturbed(sys, blocks, ComplexMatrix::Identity(2, 2), 0.0, 1.0);
    const auto d = perturbation_drift_bound(sys, pert);
    EXPECT_EQ(d.drift, 0.0);
    EXPECT_EQ(d.bound, 0.0);
}

TEST(DriftBound, DiagonalExample)
{
    const auto [sys, blocks] = build_grushin(diag({2, 0}), 1);
    const ComplexMatrix g = ComplexMatrix::Identity(2, 2);
    const auto pert = invert_perturbed(sys, blocks, g, 0.05, 1.0);
    const auto d = perturbation_drift_bound(sys, pert);
    const double expected =
        std::abs(oracle::log_abs_det(assemble_perturbed(sys, g, 0.05)) - oracle::log_abs_det(assemble(sys))) / 2;
    EXPECT_NEAR(d.drift, expected, 1e-14);
    EXPECT_NEAR(d.bound, 0.1, 1e-15);
    EXPECT_LE(d.drift, d.bound + 1e-10);
}

TEST(DriftBound, RandomInstances)
{
    for (std::uint64_t seed = 100; seed < 200; ++seed) {
        const auto inst = random_instance(seed);
        const auto [sys, blocks] = build_grushin(inst.a, inst.m);
        const ComplexMatrix g = oracle::random_complex(sys.n(), seed + 5000);
        const double c = 0.5 * static_cast<double>(seed % 10 + 1) / 10.0;
        const double delta = c * inst.alpha / linalg::operator_norm(g);
        const auto pert = invert_perturbed(sys, blocks, g, delta, inst.alpha);
        const auto d = perturbation_drift_bound(sys, pert);
        EXPECT_LE(d.drift, d.bound + 1e-10) << "seed " << seed;
    }
}

TEST(Interlacing, UnperturbedDiagonal)
{
    const auto [sys, blocks] = build_grushin(diag({2, 0}), 1);
    const auto pert = invert_perturbed(sys, blocks, ComplexMatrix::Identity(2, 2), 0.0, 1.0);
    const auto rep = interlacing_check(sys, pert);
    ASSERT_EQ(rep.entries.size(), 1u);
    EXPECT_EQ(rep.entries[0].t_a, 0.0);
    EXPECT_EQ(rep.entries[0].t_emp, 0.0);
    EXPECT_EQ(rep.entries[0].lower, 0.0);
    EXPECT_EQ(rep.entries[0].upper, 0.0);
    EXPECT_TRUE(rep.pass);
}

TEST(Interlacing, FullDeflationTightOnTheRight)
{
    const ComplexMatrix a = oracle::random_complex(6, 40);
    const auto [sys, blocks] = build_grushin(a, 6);
    const auto pert = invert_perturbed(sys, blocks, ComplexMatrix::Identity(6, 6), 0.0, 1.0);
    const auto rep = interlacing_check(sys, pert);
    ASSERT_TRUE(rep.pass);
    for (const auto& e : rep.entries)
        EXPECT_NEAR(e.t_a, e.upper, 1e-12 * std::max(1.0, e.upper));
}

TEST(Interlacing, RandomInstances)
{
    for (std::uint64_t seed = 300; seed < 400; ++seed) {
        const auto inst = random_instance(seed);
        const auto [sys, blocks] = build_grushin(inst.a, inst.m);
        const ComplexMatrix g = oracle::random_complex(sys.n(), seed + 9000);
        const double c = 0.4 * static_cast<double>(seed % 9 + 1) / 9.0;
        const double delta = c * inst.alpha / linalg::operator_norm(g);
        const auto pert = invert_perturbed(sys, blocks, g, delta, inst.alpha);
        const auto rep = interlacing_check(sys, pert);
        EXPECT_TRUE(rep.pass) << "seed " << seed;
        EXPECT_EQ(rep.records().size(), 3 * inst.m);
        // Cross-check the ascending singular values against the oracle inverse norm.
        const ComplexMatrix ad = pert.perturbed(sys);
        const double smin = 1.0 / oracle::power_norm(oracle::gauss_jordan_inverse(ad), 500);
        EXPECT_NEAR(rep.entries[0].t_a, smin, 1e-8 * std::max(1.0, smin));
    }
}

TEST(GrushinProperties, TwoSidedInverse)
{
    for (std::uint64_t seed = 500; seed < 550; ++seed) {
        const auto inst = random_instance(seed);
        const auto [sys, blocks] = build_grushin(inst.a, inst.m);
        const double n = static_cast<double>(sys.n() + sys.m);
        EXPECT_LE(two_sided_residual(sys, blocks), 1e-10 * n) << "seed " << seed;
    }
}

TEST(GrushinProperties, ClosedFormMatchesDenseInversion)
{
    for (std::uint64_t seed = 600; seed < 650; ++seed) {
        const auto inst = random_instance(seed);
        const auto [sys, blocks] = build_grushin(inst.a, inst.m);
        ASSERT_GE(sys.svd.t(static_cast<Eigen::Index>(inst.m)), 0.01);
        const ComplexMatrix dense = oracle::gauss_jordan_inverse(assemble(sys));
        EXPECT_LE(max_abs(dense - blocks.assemble()), 1e-10) << "seed " << seed;
        const auto direct = direct_inverse(sys);
        EXPECT_LE(max_abs(direct.assemble() - blocks.assemble()), 1e-10) << "seed " << seed;
    }
}

TEST(GrushinProperties, NormEstimates)
{
    for (std::uint64_t seed = 700; seed < 750; ++seed) {
        const auto inst = random_instance(seed);
        const auto [sys, blocks] = build_grushin(inst.a, inst.m);
        const double lo = sys.svd.t(static_cast<Eigen::Index>(inst.m) - 1);
        const double hi = sys.svd.t(static_cast<Eigen::Index>(inst.m));
        for (double alpha : {lo, inst.alpha, hi}) {
            for (const auto& r : norm_estimates(sys, blocks, alpha))
                EXPECT_TRUE(r.pass) << r.check << " seed " << seed << " lhs " << r.lhs << " rhs " << r.rhs;
        }
        // Oracle norms, independent of the library's SVD.
        EXPECT_LE(oracle::power_norm(blocks.e), 1.0 / inst.alpha + 1e-10);
        EXPECT_NEAR(oracle::power_norm(blocks.e_plus), 1.0, 1e-10);
    }
}

TEST(GrushinProperties, PerturbedBounds)
{
    for (std::uint64_t seed = 800; seed < 900; ++seed) {
        const auto inst = random_instance(seed);
        const auto [sys, blocks] = build_grushin(inst.a, inst.m);
        const ComplexMatrix g = oracle::random_complex(sys.n(), seed + 17);
        const double c = 0.5 * static_cast<double>(seed % 10 + 1) / 10.0;
        const double delta = c * inst.alpha / linalg::operator_norm(g);
        const auto pert = invert_perturbed(sys, blocks, g, delta, inst.alpha);
        ASSERT_LE(pert.contraction, 0.5 + 1e-12);
        for (const auto& r : perturbed_bounds(sys, blocks, pert))
            EXPECT_TRUE(r.pass) << r.check << " seed " << seed << " lhs " << r.lhs << " rhs " << r.rhs;
    }
}

TEST(GrushinProperties, NeumannGeometricDecay)
{
    for (std::uint64_t seed = 900; seed < 910; ++seed) {
        const auto inst = random_instance(seed);
        const auto [sys, blocks] = build_grushin(inst.a, inst.m);
        const ComplexMatrix g = oracle::random_complex(sys.n(), seed + 23);
        const double c = 0.2 + 0.02 * static_cast<double>(seed % 10);
        const double delta = c * inst.alpha / linalg::operator_norm(g);
        const auto direct = invert_perturbed(sys, blocks, g, delta, inst.alpha);

        std::vector<double> xs, ys;
        for (int k = 1; k <= 30; ++k) {
            const auto series = invert_perturbed(sys, blocks, g, delta, inst.alpha, Inversion::neumann(k));
            const double err = block_difference(series.blocks, direct.blocks);
            if (err > 1e-12) {
                xs.push_back(k);
                ys.push_back(std::log(err));
            }
        }
        ASSERT_GE(xs.size(), 3u);
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i];
            my += ys[i];
        }
        mx /= static_cast<double>(xs.size());
        my /= static_cast<double>(xs.size());
        double sxy = 0, sxx = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx) * (xs[i] - mx);
        }
        EXPECT_LE(std::exp(sxy / sxx), c + 0.05) << "seed " << seed;
    }
}

TEST(GrushinProperties, SchurIdentity)
{
    for (std::uint64_t seed = 1000; seed < 1100; ++seed) {
        const auto inst = random_instance(seed);
        const auto [sys, blocks] = build_grushin(inst.a, inst.m);
        const ComplexMatrix g = oracle::random_complex(sys.n(), seed + 3);
        const double delta = 0.3 * inst.alpha / linalg::operator_norm(g);
        const auto pert = invert_perturbed(sys, blocks, g, delta, inst.alpha);
        const auto v = schur_logdet(sys, pert);
        EXPECT_LE(std::abs(v.lhs - v.rhs), 1e-7 * static_cast<double>(sys.n())) << "seed " << seed;
    }
}

TEST(CheckRecord, RelationsAndJson)
{
    EXPECT_TRUE(CheckRecord::make("x", 0, 1.0, 1.0 + 1e-13, 1e-12, Relation::equal).pass);
    EXPECT_FALSE(CheckRecord::make("x", 0, 1.0, 1.1, 1e-12, Relation::equal).pass);
    EXPECT_TRUE(CheckRecord::make("x", 0, 0.9, 1.0, 0.0, Relation::at_most).pass);
    EXPECT_FALSE(CheckRecord::make("x", 0, 1.1, 1.0, 0.0, Relation::at_most).pass);
    EXPECT_TRUE(CheckRecord::make("x", 0, 1.1, 1.0, 0.0, Relation::at_least).pass);
    const double ninf = -std::numeric_limits<double>::infinity();
    EXPECT_TRUE(CheckRecord::make("x", 0, ninf, ninf, 1e-8, Relation::equal).pass);
    EXPECT_FALSE(CheckRecord::make("x", 0, std::nan(""), 0.0, 1.0, Relation::at_most).pass);

    nlohmann::json j = CheckRecord::make("gp10", 3, ninf, ninf, 1e-8, Relation::equal);
    EXPECT_EQ(j["check"], "gp10");
    EXPECT_EQ(j["n"], 3);
    EXPECT_EQ(j["lhs"], "-inf");
    EXPECT_EQ(j["pass"], true);
    EXPECT_EQ(j.size(), 6u);
}
