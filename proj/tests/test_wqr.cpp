#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/QR>

#include <wextrap/wqr.hpp>

#include "support/random.hpp"

using namespace wextrap;

namespace
{

double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

Vector e(Index n, Index i) { return Vector::Unit(n, i); }

} // namespace

TEST(WeightedQr, SingleColumnUnitScaling)
{
    Matrix a(2, 1);
    a << 3.0, 4.0;
    for (const WQRFactors& f : {gs_factorize(a, WeightOperator::identity(2)),
                                mgs_factorize(a, WeightOperator::identity(2))})
    {
        EXPECT_NEAR(f.q(0, 0).real(), 0.6, 1e-15);
        EXPECT_NEAR(f.q(1, 0).real(), 0.8, 1e-15);
        EXPECT_NEAR(f.r(0, 0).real(), 5.0, 1e-15);
    }
}

TEST(WeightedQr, DiagonalWeightScalesColumn)
{
    RealVector wts(2);
    wts << 4.0, 9.0;
    const WeightOperator w = WeightOperator::diagonal(wts);
    Matrix a(2, 1);
    a << 1.0, 0.0;
    const WQRFactors f = mgs_factorize(a, w);
    EXPECT_DOUBLE_EQ(f.r_diag(0), 2.0);
    EXPECT_DOUBLE_EQ(f.q(0, 0).real(), 0.5);
    EXPECT_EQ(f.q(1, 0), Scalar(0.0));
}

TEST(WeightedQr, TwoColumnHandExample)
{
    Matrix a(3, 2);
    a << 1.0, 1.0, 1.0, 0.0, 0.0, 0.0;
    const double s = std::sqrt(2.0);
    for (const WQRFactors& f : {gs_factorize(a, WeightOperator::identity(3)),
                                mgs_factorize(a, WeightOperator::identity(3))})
    {
        EXPECT_NEAR(f.r(0, 0).real(), s, 1e-15);
        EXPECT_NEAR(f.r(0, 1).real(), 1.0 / s, 1e-15);
        EXPECT_NEAR(f.r(1, 1).real(), 1.0 / s, 1e-15);
        EXPECT_EQ(f.r(1, 0), Scalar(0.0));
        EXPECT_NEAR(f.q(0, 1).real(), 1.0 / s, 1e-15);
        EXPECT_NEAR(f.q(1, 1).real(), -1.0 / s, 1e-15);
        EXPECT_NEAR(std::abs(f.q(2, 1)), 0.0, 1e-15);
    }
}

TEST(WeightedQr, AppendOrthogonalComplement)
{
    const WeightOperator w = WeightOperator::identity(3);
    WQRFactors f = WQRFactors::empty(3);
    f = append_column(f, e(3, 0), w);
    Vector a(3);
    a << 1.0, 1.0, 0.0;
    f = append_column(f, a, w);
    EXPECT_EQ(f.k(), 1);
    EXPECT_EQ(f.q.col(1), e(3, 1));
    EXPECT_EQ(f.r(0, 1), Scalar(1.0));
    EXPECT_EQ(f.r(1, 1), Scalar(1.0));
}

TEST(WeightedQr, AppendCollinearIsRankDeficient)
{
    const WeightOperator w = WeightOperator::identity(3);
    const WQRFactors f = append_column(WQRFactors::empty(3), e(3, 0), w);
    try
    {
        append_column(f, Vector(2.0 * e(3, 0)), w);
        FAIL() << "expected RankDeficient";
    }
    catch (const RankDeficient& ex)
    {
        EXPECT_EQ(ex.index(), 1);
    }
}

TEST(WeightedQr, FactorizeReportsDependentColumn)
{
    testgen::Rng rng(4);
    Matrix a = rng.matrix(6, 4);
    a.col(3) = 2.0 * a.col(0) - a.col(2);
    try
    {
        mgs_factorize(a, testgen::random_dense_weight(rng, 6));
        FAIL() << "expected RankDeficient";
    }
    catch (const RankDeficient& ex)
    {
        EXPECT_EQ(ex.index(), 3);
    }
}

TEST(WeightedQr, MoreColumnsThanDimensionIsDependent)
{
    testgen::Rng rng(6);
    EXPECT_THROW(mgs_factorize(rng.matrix(3, 4), WeightOperator::identity(3)), RankDeficient);
}

TEST(WeightedQr, AppendKeepsLeadingBlockBitIdentical)
{
    testgen::Rng rng(7);
    const WeightOperator w = testgen::random_dense_weight(rng, 8);
    const WQRFactors f = mgs_factorize(rng.matrix(8, 3), w);
    const WQRFactors g = append_column(f, rng.vector(8), w);
    EXPECT_TRUE(g.q.leftCols(3) == f.q);
    EXPECT_TRUE(g.r.topLeftCorner(3, 3) == f.r);
    EXPECT_TRUE(g.leading(3).q == f.q);
}

TEST(WeightedQr, RandomInvariants)
{
    testgen::Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial)
    {
        const Index n = rng.integer(4, 16);
        const Index m = rng.integer(1, static_cast<int>(n));
        const WeightOperator w = testgen::random_weight(rng, n);
        const Matrix a = rng.matrix(n, m);
        const WQRFactors f = mgs_factorize(a, w);
        EXPECT_LE(orthogonality_deviation(f), 1e-10);
        for (Index j = 0; j < m; ++j)
        {
            EXPECT_LE(w.norm(a.col(j) - f.q * f.r.col(j)), 1e-12 * w.norm(a.col(j)));
            EXPECT_GT(f.r(j, j).real(), 0.0);
            EXPECT_EQ(f.r(j, j).imag(), 0.0);
            for (Index i = j + 1; i < m; ++i)
            {
                EXPECT_EQ(f.r(i, j), Scalar(0.0));
            }
        }
        const WQRFactors g = gs_factorize(a, w);
        EXPECT_LE(max_abs(f.q - g.q), 1e-8);
        EXPECT_LE(max_abs(f.r - g.r), 1e-8 * max_abs(f.r));
    }
}

TEST(WeightedQr, IdentityWeightMatchesHouseholder)
{
    testgen::Rng rng(99);
    for (int trial = 0; trial < 30; ++trial)
    {
        const Index n = rng.integer(3, 12);
        const Index m = rng.integer(1, static_cast<int>(n));
        const Matrix a = rng.matrix(n, m);
        const WQRFactors f = mgs_factorize(a, WeightOperator::identity(n));
        Eigen::HouseholderQR<Matrix> hh(a);
        Matrix q = hh.householderQ() * Matrix::Identity(n, m);
        Matrix r = hh.matrixQR().topRows(m).triangularView<Eigen::Upper>();
        // Normalize to a real positive diagonal: Q D, D^* R.
        for (Index i = 0; i < m; ++i)
        {
            const Scalar phase = r(i, i) / std::abs(r(i, i));
            q.col(i) *= phase;
            r.row(i) *= std::conj(phase);
        }
        EXPECT_LE(max_abs(f.q - q), 1e-10);
        EXPECT_LE(max_abs(f.r - r), 1e-10 * max_abs(r));
    }
}

TEST(WeightedQr, IncrementalEqualsOneShot)
{
    testgen::Rng rng(12);
    for (int trial = 0; trial < 20; ++trial)
    {
        const WeightOperator w = testgen::random_weight(rng, 9);
        const Matrix a = rng.matrix(9, 5);
        WQRFactors inc = WQRFactors::empty(9);
        for (Index j = 0; j < 5; ++j)
        {
            inc = append_column(inc, a.col(j), w);
        }
        const WQRFactors one = mgs_factorize(a, w);
        EXPECT_LE(max_abs(inc.q - one.q), 1e-12);
        EXPECT_LE(max_abs(inc.r - one.r), 1e-12 * max_abs(one.r));
    }
}

TEST(WeightedQr, NormOfCombinationEqualsTriangularNorm)
{
    testgen::Rng rng(13);
    for (int trial = 0; trial < 30; ++trial)
    {
        const WeightOperator w = testgen::random_weight(rng, 10);
        const Matrix a = rng.matrix(10, 6);
        const WQRFactors f = mgs_factorize(a, w);
        const Vector z = rng.vector(6);
        const double lhs = w.norm(a * z);
        const double rhs = (f.r * z).norm();
        EXPECT_LE(std::abs(lhs - rhs), 1e-10 * rhs);
    }
}

TEST(WeightedQr, ModifiedBeatsClassicalOnNearDependentColumns)
{
    testgen::Rng rng(14);
    const Index n = 12;
    Matrix a = rng.matrix(n, 6);
    // Nearly collinear columns: a_j = a_0 + small perturbations.
    for (Index j = 1; j < 6; ++j)
    {
        a.col(j) = a.col(0) + std::pow(1e-4, static_cast<double>(j)) * rng.vector(n);
    }
    QrOptions opts;
    opts.rank_tolerance = 1e-30;
    const WeightOperator w = testgen::random_dense_weight(rng, n);
    const double mgs = orthogonality_deviation(mgs_factorize(a, w, opts));
    const double gs = orthogonality_deviation(gs_factorize(a, w, opts));
    EXPECT_LE(mgs, gs);
}

TEST(WeightedQr, SecondPassImprovesOrthogonality)
{
    testgen::Rng rng(15);
    const Index n = 12;
    Matrix a = rng.matrix(n, 5);
    for (Index j = 1; j < 5; ++j)
    {
        a.col(j) = a.col(0) + 1e-7 * rng.vector(n);
    }
    const WeightOperator w = WeightOperator::identity(n);
    QrOptions twice;
    twice.reorthogonalize = true;
    const WQRFactors f = mgs_factorize(a, w, twice);
    EXPECT_LE(orthogonality_deviation(f), 1e-14);
    for (Index j = 0; j < 5; ++j)
    {
        EXPECT_LE((a.col(j) - f.q * f.r.col(j)).norm(), 1e-12 * a.col(j).norm());
    }
}

TEST(WeightedQr, ProjectionReportsDeflatedNorm)
{
    const WeightOperator w = WeightOperator::identity(3);
    const WQRFactors f = append_column(WQRFactors::empty(3), e(3, 0), w);
    Vector a(3);
    a << 2.0, 0.0, 3.0;
    const Projection p = project(f, a, w);
    EXPECT_FALSE(p.dependent);
    EXPECT_DOUBLE_EQ(p.residual_norm, 3.0);
    EXPECT_EQ(p.coefficients[0], Scalar(2.0));
    EXPECT_DOUBLE_EQ(p.input_norm, std::sqrt(13.0));
}
