#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <wextrap/io.hpp>
#include <wextrap/problem.hpp>

#include "support/random.hpp"

using namespace wextrap;

namespace
{

std::filesystem::path scratch(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / "wextrap_io_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

void write_file(const std::filesystem::path& p, const std::string& text)
{
    std::ofstream(p) << text;
}

} // namespace

TEST(Iterate, LinearDemoDyadicValues)
{
    const VectorSequence s = iterate(make_linear_demo(), 3);
    ASSERT_EQ(s.size(), 4);
    EXPECT_EQ(s[1], (Vector(2) << 0.5, 0.75).finished());
    EXPECT_EQ(s[2], (Vector(2) << 0.75, 0.9375).finished());
    EXPECT_EQ(s[3], (Vector(2) << 0.875, 0.984375).finished());
}

TEST(Iterate, IdentityMapIsConstantAndConverges)
{
    const FixedPointProblem p = make_nonlinear_problem([](const Vector& x) { return x; }, Vector::Ones(3));
    const VectorSequence s = iterate(p, 2);
    EXPECT_EQ(s[2], s[0]);
    const RunHistory h = run(s, WeightOperator::identity(3), 1);
    EXPECT_EQ(h.status, RunStatus::converged);
    EXPECT_EQ(h.k0, 0);
}

TEST(Iterate, DivergentButFinite)
{
    Matrix t = 2.0 * Matrix::Identity(2, 2);
    const FixedPointProblem p = make_linear_problem(t, Vector::Ones(2), Vector::Zero(2));
    const VectorSequence s = iterate(p, 10);
    EXPECT_GT(s[10].norm(), s[9].norm());
    // antilimit: (I - T)^-1 d = -d
    ASSERT_TRUE(p.known_solution.has_value());
    EXPECT_LT((*p.known_solution + Vector::Ones(2)).norm(), 1e-15);
    const RunHistory h = run(s, WeightOperator::identity(2), 1);
    EXPECT_LT((h.records[1].rre->s - *p.known_solution).norm(), 1e-10);
}

TEST(Iterate, OverflowIsReported)
{
    Matrix t = 1e200 * Matrix::Identity(2, 2);
    const FixedPointProblem p = make_linear_problem(t, Vector::Ones(2), Vector::Zero(2));
    try
    {
        iterate(p, 5);
        FAIL() << "expected NonFiniteIterate";
    }
    catch (const NonFiniteIterate& ex)
    {
        EXPECT_EQ(ex.index(), 3);
    }
    EXPECT_THROW(iterate(p, 0), InsufficientVectors);
}

TEST(Residual, Examples)
{
    const FixedPointProblem p = make_linear_demo();
    EXPECT_LT(residual(p, *p.known_solution).norm(), 1e-15);
    const Vector s1(Vector((Vector(2) << 70.0 / 97.0, 105.0 / 97.0).finished()));
    EXPECT_NEAR(residual(p, s1).norm(), std::sqrt(9.0 / 388.0), 1e-15);
    EXPECT_EQ(residual(p, p.x0), iterate(p, 1)[1] - p.x0);
    EXPECT_THROW(residual(p, Vector::Zero(3)), DimensionMismatch);
}

TEST(Problem, KindAccess)
{
    EXPECT_TRUE(make_linear_demo().is_linear());
    EXPECT_THROW(make_cosine_problem(2).linear(), WrongProblemKind);
    const VectorSequence s = iterate(make_cosine_problem(2), 60);
    EXPECT_NEAR(s[60][0].real(), 0.7390851332151607, 1e-10);
    const VectorSequence q = iterate(make_quadratic_problem(3), 60);
    EXPECT_LT(residual(make_quadratic_problem(3), q[60]).norm(), 1e-12);
}

TEST(Problem, DiagonalContractionRate)
{
    const FixedPointProblem p = make_linear_demo();
    const VectorSequence s = iterate(p, 8);
    for (Index m = 1; m <= 8; ++m)
    {
        const double prev = (s[m - 1] - *p.known_solution).norm();
        const double cur = (s[m] - *p.known_solution).norm();
        EXPECT_LE(cur, 0.5 * prev * (1.0 + 1e-14));
    }
}

TEST(FailureSequence, ExactVectors)
{
    const VectorSequence s = make_mpe_failure_sequence(3);
    EXPECT_EQ(s[0], Vector::Zero(3));
    EXPECT_EQ(s[1], (Vector(3) << 1, 0, 0).finished());
    EXPECT_EQ(s[2], (Vector(3) << 2, 1, 0).finished());
    EXPECT_THROW(make_mpe_failure_sequence(2), DimensionMismatch);
}

TEST(FailureSequence, AlphaVanishesUnderAnyWeight)
{
    testgen::Rng rng(501);
    for (int trial = 0; trial < 20; ++trial)
    {
        const Index n = rng.integer(3, 9);
        const WeightOperator w = testgen::random_weight(rng, n);
        const VectorSequence s = make_mpe_failure_sequence(n, w);
        const RunHistory h = run(s, w, 1);
        const CoefficientSolve c = mpe_coefficients(h.factors);
        EXPECT_LT(std::abs(c.alpha), 1e-14 * c.c.cwiseAbs().sum());
        EXPECT_FALSE(h.records[1].mpe_exists);
    }
}

TEST(FailureProblem, IteratesStartLikeFailureSequence)
{
    const VectorSequence a = iterate(make_mpe_failure_problem(4), 2);
    const VectorSequence b = make_mpe_failure_sequence(4);
    for (Index i = 0; i < 3; ++i)
    {
        EXPECT_EQ(a[i], b[i]);
    }
}

TEST(Sequence, Validation)
{
    EXPECT_THROW(VectorSequence({Vector::Zero(2)}), InsufficientVectors);
    EXPECT_THROW(VectorSequence({Vector::Zero(2), Vector::Zero(3)}), DimensionMismatch);
}

TEST(MatrixMarket, CoordinateRealKeepsExplicitZeros)
{
    std::istringstream in("%%MatrixMarket matrix coordinate real general\n% comment\n3 3 3\n1 1 0.5\n2 3 0\n3 2 -1e-3\n");
    const io::MatrixMarketData m = io::read_matrix_market(in);
    EXPECT_EQ(m.matrix.nonZeros(), 3);
    EXPECT_EQ(m.matrix.coeff(0, 0), Scalar(0.5));
    EXPECT_EQ(m.matrix.coeff(2, 1), Scalar(-1e-3));
}

TEST(MatrixMarket, ArrayComplexHermitian)
{
    std::istringstream in("%%MatrixMarket matrix array complex hermitian\n2 2\n2 0\n1 1\n3 0\n");
    const Matrix m(io::read_matrix_market(in).matrix);
    EXPECT_EQ(m(1, 0), Scalar(1.0, 1.0));
    EXPECT_EQ(m(0, 1), Scalar(1.0, -1.0));
    EXPECT_EQ(m(1, 1), Scalar(3.0));
    EXPECT_NO_THROW(WeightOperator::dense(m));
}

TEST(MatrixMarket, SymmetricCoordinate)
{
    std::istringstream in("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 4\n2 1 1\n");
    const Matrix m(io::read_matrix_market(in).matrix);
    EXPECT_EQ(m(0, 1), Scalar(1.0));
    EXPECT_EQ(m(1, 0), Scalar(1.0));
}

TEST(MatrixMarket, MalformedHeaderNamesLineOne)
{
    std::istringstream in("%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1\n");
    try
    {
        io::read_matrix_market(in, "bad.mtx");
        FAIL() << "expected ParseError";
    }
    catch (const ParseError& ex)
    {
        EXPECT_EQ(ex.line(), 1u);
        EXPECT_NE(std::string(ex.what()).find("bad.mtx:1:"), std::string::npos);
    }
}

TEST(MatrixMarket, BadEntryPosition)
{
    std::istringstream in("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 2 x\n");
    try
    {
        io::read_matrix_market(in);
        FAIL() << "expected ParseError";
    }
    catch (const ParseError& ex)
    {
        EXPECT_EQ(ex.line(), 4u);
        EXPECT_EQ(ex.column(), 5u);
    }
    std::istringstream oob("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n");
    EXPECT_THROW(io::read_matrix_market(oob), ParseError);
    std::istringstream shortfile("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n");
    EXPECT_THROW(io::read_matrix_market(shortfile), ParseError);
}

TEST(MatrixMarket, RoundTripBitIdentical)
{
    testgen::Rng rng(502);
    const Matrix a = rng.matrix(4, 3);
    std::stringstream buf;
    io::write_matrix_market(buf, a);
    const Matrix b(io::read_matrix_market(buf).matrix);
    EXPECT_TRUE(a == b);

    const SparseMatrix s = testgen::random_sparse_contraction(rng, 6);
    std::stringstream sbuf;
    io::write_matrix_market(sbuf, s);
    const SparseMatrix t = io::read_matrix_market(sbuf).matrix;
    EXPECT_TRUE(Matrix(s) == Matrix(t));
}

TEST(Vectors, RealAndComplexTokens)
{
    std::istringstream in("# header\n1.5 (2,-3)\n-0.25\n");
    const Vector v = io::read_vector(in);
    ASSERT_EQ(v.size(), 3);
    EXPECT_EQ(v[1], Scalar(2.0, -3.0));
    EXPECT_EQ(v[2], Scalar(-0.25));
    std::istringstream bad("1.0 (2;3)\n");
    EXPECT_THROW(io::read_vector(bad), ParseError);
    std::istringstream empty("\n");
    EXPECT_THROW(io::read_vector(empty), ParseError);
}

TEST(Vectors, MatrixMarketColumnAccepted)
{
    const auto p = scratch("col.mtx");
    write_file(p, "%%MatrixMarket matrix array real general\n2 1\n4\n9\n");
    const RealVector v = io::read_real_vector(p.string());
    EXPECT_EQ(v[1], 9.0);
}

TEST(Vectors, RoundTripBitIdentical)
{
    testgen::Rng rng(503);
    const Vector v = rng.vector(7);
    std::stringstream buf;
    io::write_vector(buf, v);
    EXPECT_TRUE(io::read_vector(buf) == v);

    const std::vector<Vector> xs = testgen::random_sequence(rng, 5, 4);
    const auto p = scratch("seq.txt");
    io::write_sequence(p.string(), xs);
    const VectorSequence back = io::read_sequence(p.string());
    ASSERT_EQ(back.size(), 5);
    for (Index i = 0; i < 5; ++i)
    {
        EXPECT_TRUE(back[i] == xs[static_cast<std::size_t>(i)]);
    }
}

TEST(Vectors, SequenceDimensionMismatch)
{
    std::istringstream in("1 2\n3 4 5\n");
    EXPECT_THROW(io::read_sequence(in), DimensionMismatch);
    EXPECT_THROW(io::read_vector("/nonexistent/file.vec"), IoError);
}

TEST(Weights, Specs)
{
    EXPECT_EQ(io::parse_weight_spec("identity", 3).kind(), WeightOperator::Kind::identity);
    const auto d = scratch("w.txt");
    write_file(d, "4 9\n");
    const WeightOperator w = io::parse_weight_spec("diag:" + d.string(), 2);
    EXPECT_EQ(w.kind(), WeightOperator::Kind::diagonal);
    EXPECT_THROW(io::parse_weight_spec("diag:" + d.string(), 3), DimensionMismatch);
    const auto m = scratch("m.mtx");
    write_file(m, "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 2\n2 1 1\n2 2 2\n");
    EXPECT_EQ(io::parse_weight_spec("dense:" + m.string(), 2).kind(), WeightOperator::Kind::dense);
    EXPECT_THROW(io::parse_weight_spec("cholesky:x", 2), ParseError);
}

TEST(History, JsonRoundTrip)
{
    testgen::Rng rng(504);
    const WeightOperator w = testgen::random_diagonal_weight(rng, 6);
    const RunHistory h = run(testgen::random_sequence(rng, 6, 5), w, 4);
    const io::json j = io::history_to_json(h, "diag:w.txt");
    const io::LoadedHistory back = io::history_from_json(j, &w);
    EXPECT_EQ(back.weight_spec, "diag:w.txt");
    ASSERT_EQ(back.history.records.size(), h.records.size());
    for (std::size_t i = 0; i < h.records.size(); ++i)
    {
        const ExtrapolationRecord& a = h.records[i];
        const ExtrapolationRecord& b = back.history.records[i];
        EXPECT_EQ(a.k, b.k);
        EXPECT_EQ(a.mpe_exists, b.mpe_exists);
        EXPECT_TRUE(a.rre->s == b.rre->s);
        EXPECT_TRUE(a.rre->gamma == b.rre->gamma);
        EXPECT_EQ(a.rre->phi, b.rre->phi);
        EXPECT_TRUE(a.mpe->s == b.mpe->s);
    }
    EXPECT_EQ(io::dump(io::history_to_json(back.history, "diag:w.txt")), io::dump(j));
    EXPECT_TRUE(verify_relations(back.history, w, {}, PhiSource::stored).passed());
}

TEST(History, MalformedJson)
{
    EXPECT_THROW(io::history_from_json(io::json{{"format", "other"}}), ParseError);
    EXPECT_THROW(io::history_from_json(io::json{{"format", "wextrap-history"}}), ParseError);
}

TEST(History, CsvColumns)
{
    const RunHistory h = run(make_mpe_failure_sequence(3), WeightOperator::identity(3), 1);
    const std::string csv = io::history_csv(h);
    EXPECT_EQ(csv, "k,phi_mpe,phi_rre\n0,1,1\n1,,1\n");
}
