#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "logdet/errors.hpp"
#include "logdet/linalg.hpp"
#include "logdet/noise.hpp"
#include "logdet/parallel.hpp"

using namespace logdet;
using namespace logdet::noise;

namespace {

const NoiseKind kAllKinds[] = {NoiseKind::complex_ginibre, NoiseKind::real_gaussian, NoiseKind::rademacher_complex,
                               NoiseKind::uniform_complex};

} // namespace

TEST(Sample, Deterministic)
{
    for (auto kind : kAllKinds) {
        const NoiseModel m{kind};
        EXPECT_EQ(sample(m, 30, 42), sample(m, 30, 42));
        EXPECT_NE(sample(m, 30, 42), sample(m, 30, 43));
    }
}

TEST(Sample, GinibreSecondMomentBand)
{
    const NoiseModel m{NoiseKind::complex_ginibre};
    double acc = 0.0;
    for (std::uint64_t k = 0; k < 50; ++k)
        acc += sample(m, 200, substream_seed(7, k)).cwiseAbs2().mean();
    acc /= 50;
    EXPECT_GE(acc, 0.98);
    EXPECT_LE(acc, 1.02);
}

TEST(Sample, GinibreComponentsHaveHalfVariance)
{
    const ComplexMatrix g = sample(NoiseModel{}, 400, 3);
    const double re = g.real().array().square().mean();
    const double im = g.imag().array().square().mean();
    EXPECT_NEAR(re, 0.5, 0.01);
    EXPECT_NEAR(im, 0.5, 0.01);
    const double cross = (g.real().array() * g.imag().array()).mean();
    EXPECT_NEAR(cross, 0.0, 0.01);
}

TEST(Sample, UnitVarianceAndZeroMeanForEveryModel)
{
    const std::size_t n = 100, trials = 20;
    for (auto kind : kAllKinds) {
        const NoiseModel m{kind};
        Complex mean = 0.0;
        std::vector<double> abs2;
        abs2.reserve(n * n * trials);
        for (std::uint64_t k = 0; k < trials; ++k) {
            const ComplexMatrix g = sample(m, n, substream_seed(99, k));
            mean += g.sum();
            for (Eigen::Index i = 0; i < g.size(); ++i)
                abs2.push_back(std::norm(g.data()[i]));
        }
        const double count = static_cast<double>(abs2.size());
        mean /= count;
        EXPECT_LE(std::abs(mean), 4.0 / std::sqrt(count)) << to_string(kind);

        double m2 = 0.0, m4 = 0.0;
        for (double v : abs2) {
            m2 += v;
            m4 += v * v;
        }
        m2 /= count;
        m4 /= count;
        const double se = std::sqrt(std::max(m4 - m2 * m2, 1e-30) / count);
        // Rademacher has |g|^2 = 1 identically.
        EXPECT_LE(std::abs(m2 - 1.0), 5 * se + 1e-12) << to_string(kind);
    }
}

TEST(Sample, ModelSpecificSupport)
{
    const ComplexMatrix r = sample(NoiseModel{NoiseKind::real_gaussian}, 20, 1);
    EXPECT_EQ(r.imag().cwiseAbs().maxCoeff(), 0.0);
    const ComplexMatrix s = sample(NoiseModel{NoiseKind::rademacher_complex}, 20, 1);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        EXPECT_DOUBLE_EQ(std::abs(s.data()[i].real()), 1 / std::sqrt(2.0));
        EXPECT_DOUBLE_EQ(std::abs(s.data()[i].imag()), 1 / std::sqrt(2.0));
    }
    const ComplexMatrix u = sample(NoiseModel{NoiseKind::uniform_complex}, 50, 1);
    EXPECT_LE(u.cwiseAbs().maxCoeff(), std::sqrt(2.0));
}

TEST(Sample, GinibreEdgeSanityBand)
{
    for (std::size_t n : {100u, 200u, 400u}) {
        double acc = 0.0;
        const int trials = 5;
        for (int k = 0; k < trials; ++k)
            acc += linalg::operator_norm(sample(NoiseModel{}, n, substream_seed(n, k)));
        EXPECT_NEAR(acc / trials / std::sqrt(double(n)), 2.0, 0.2) << n;
    }
}

TEST(NoiseKindNames, RoundTrip)
{
    for (auto kind : kAllKinds)
        EXPECT_EQ(parse_noise_kind(to_string(kind)), kind);
    EXPECT_EQ(parse_noise_kind("ginibre"), NoiseKind::complex_ginibre);
    EXPECT_THROW(parse_noise_kind("cauchy"), ConfigError);
}

TEST(SubstreamSeed, DistinctAndStable)
{
    std::set<std::uint64_t> seen;
    for (std::uint64_t k = 0; k < 10000; ++k)
        seen.insert(substream_seed(5, k));
    EXPECT_EQ(seen.size(), 10000u);
    EXPECT_EQ(substream_seed(5, 17), substream_seed(5, 17));
    EXPECT_NE(substream_seed(5, 17), substream_seed(6, 17));
}

TEST(Summary, QuantilesMonotoneAndMean)
{
    std::vector<double> v;
    for (int i = 0; i <= 100; ++i)
        v.push_back(100 - i);
    const auto s = summarize(v);
    EXPECT_DOUBLE_EQ(s.mean, 50.0);
    EXPECT_DOUBLE_EQ(s.quantile(0.5), 50.0);
    EXPECT_DOUBLE_EQ(s.quantile(0.05), 5.0);
    for (std::size_t i = 1; i < s.quantiles.size(); ++i)
        EXPECT_LE(s.quantiles[i - 1].second, s.quantiles[i].second);
    EXPECT_TRUE(std::isnan(empirical_quantile({}, 0.5)));
}

TEST(NormGrowth, GinibreSlopeNearHalf)
{
    const std::vector<std::size_t> ns = {50, 100, 200, 400};
    const auto r = norm_growth_probe(NoiseModel{}, ns, 4, 11);
    EXPECT_GE(r.fit.slope, 0.4);
    EXPECT_LE(r.fit.slope, 0.6);
    ASSERT_EQ(r.per_n.size(), ns.size());
    for (const auto& p : r.per_n) {
        EXPECT_EQ(p.values.size(), 4u);
        EXPECT_EQ(p.stat_name, "operator_norm");
    }
    EXPECT_EQ(r.fit.residuals.size(), ns.size());
}

TEST(NormGrowth, DeterministicAcrossWorkerCounts)
{
    const std::vector<std::size_t> ns = {20, 40};
    const auto a = norm_growth_probe(NoiseModel{}, ns, 3, 8, 1);
    const auto b = norm_growth_probe(NoiseModel{}, ns, 3, 8, 4);
    for (std::size_t i = 0; i < ns.size(); ++i)
        EXPECT_EQ(a.per_n[i].values, b.per_n[i].values);
    EXPECT_EQ(a.fit.slope, b.fit.slope);
}

TEST(PowerLawFit, ScalingShiftsInterceptOnly)
{
    const std::vector<std::size_t> ns = {10, 20, 40, 80};
    std::vector<double> ys, scaled;
    for (auto n : ns) {
        ys.push_back(3.0 * std::pow(double(n), 0.7) * (1 + 0.01 * double(n % 3)));
        scaled.push_back(ys.back() * 5.0);
    }
    const auto a = fit_power_law(ns, ys);
    const auto b = fit_power_law(ns, scaled);
    EXPECT_NEAR(a.slope, b.slope, 1e-12);
    EXPECT_NEAR(b.intercept - a.intercept, std::log(5.0), 1e-12);
    const std::vector<std::size_t> one = {10};
    const std::vector<double> y1 = {1.0};
    EXPECT_THROW(fit_power_law(one, y1), ContractError);
}

TEST(MarkovTail, PassesAndIsMonotone)
{
    const std::vector<double> taus = {1.0, 1.05, 1.1, 2.0, 10.0};
    const auto r = markov_tail_check(NoiseModel{}, 40, 200, taus, 5);
    ASSERT_EQ(r.checks.size(), taus.size());
    EXPECT_TRUE(r.pass);
    EXPECT_TRUE(r.checks[0].pass); // bound 1 is vacuous
    for (std::size_t i = 1; i < r.checks.size(); ++i)
        EXPECT_LE(r.checks[i].empirical, r.checks[i - 1].empirical);
    EXPECT_EQ(r.checks.back().empirical, 0.0);
    EXPECT_THROW(markov_tail_check(NoiseModel{}, 10, 50, taus, 5), ContractError);
}

TEST(MarkovTail, EveryModelWithinThreeStandardErrors)
{
    const std::vector<double> taus = {1.02, 1.1, 2.0};
    for (auto kind : kAllKinds) {
        const auto r = markov_tail_check(NoiseModel{kind}, 30, 150, taus, 77);
        for (const auto& c : r.checks)
            EXPECT_LE(c.empirical, c.bound + 3 * c.std_error) << to_string(kind) << " tau " << c.tau;
    }
}

TEST(AntiConcentration, ZeroMatrixGinibre)
{
    const ComplexMatrix d = ComplexMatrix::Zero(100, 100);
    const std::vector<double> betas = {0.0, 2.0};
    const auto r = anti_concentration_probe(d, NoiseModel{}, 60, betas, 3);
    ASSERT_EQ(r.entries.size(), 2u);
    ASSERT_TRUE(r.entries[1].frequency.has_value());
    EXPECT_LE(*r.entries[1].frequency, 0.05);
    EXPECT_GE(*r.entries[0].frequency, 0.9);
    EXPECT_FALSE(r.rescaled_smin.has_value());
}

TEST(AntiConcentration, NoTrials)
{
    const ComplexMatrix d = ComplexMatrix::Zero(5, 5);
    const std::vector<double> betas = {2.0};
    const auto r = anti_concentration_probe(d, NoiseModel{}, 0, betas, 3);
    ASSERT_EQ(r.entries.size(), 1u);
    EXPECT_FALSE(r.entries[0].frequency.has_value());
    EXPECT_FALSE(r.entries[0].rescaled_frequency.has_value());
    EXPECT_TRUE(r.smin.values.empty());
}

TEST(AntiConcentration, RescaledVariantUsesSameSamples)
{
    ComplexMatrix d = ComplexMatrix::Zero(30, 30);
    for (Eigen::Index i = 0; i + 1 < 30; ++i)
        d(i, i + 1) = 1.0;
    const std::vector<double> betas = {1.0, 3.0};
    const auto r = anti_concentration_probe(d, NoiseModel{}, 20, betas, 9, RescaledProbe{1e-3, 1.0}, 3);
    ASSERT_TRUE(r.rescaled_smin.has_value());
    EXPECT_EQ(r.rescaled_smin->values.size(), 20u);
    for (const auto& e : r.entries) {
        ASSERT_TRUE(e.rescaled_frequency.has_value());
        EXPECT_NEAR(e.rescaled_threshold, std::pow(30.0, -1.0 - e.beta), 1e-15);
    }
    const auto again = anti_concentration_probe(d, NoiseModel{}, 20, betas, 9, RescaledProbe{1e-3, 1.0}, 1);
    EXPECT_EQ(r.smin.values, again.smin.values);
    EXPECT_EQ(r.rescaled_smin->values, again.rescaled_smin->values);
}

TEST(ProbeCsv, Format)
{
    ProbeResult p;
    p.model = NoiseModel{};
    p.n = 10;
    p.trials = 2;
    p.stat_name = "operator_norm";
    p.values = {1.5, 2.25};
    std::ostringstream os;
    write_probe_csv(os, std::span<const ProbeResult>(&p, 1));
    EXPECT_EQ(os.str(), "model,N,trial,stat_name,value\n"
                        "complex_ginibre,10,0,operator_norm,1.5\n"
                        "complex_ginibre,10,1,operator_norm,2.25\n");
}

TEST(ParallelFor, CoversEveryIndexAndRethrows)
{
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
    EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 1000);
    EXPECT_THROW(parallel_for(10, 3,
                              [](std::size_t i) {
                                  if (i == 5)
                                      throw NumericalError("boom");
                              }),
                 NumericalError);
}
