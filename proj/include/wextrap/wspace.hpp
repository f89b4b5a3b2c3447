///
/// \file wspace.hpp
///
/// Weighted inner product spaces on C^N.
///
/// A WeightOperator wraps a hermitian positive definite matrix M and provides
///   <y, z> = y^* M z,     |||z||| = sqrt(z^* M z).
/// Three representations share the interface: identity (plain Euclidean
/// product), diagonal (positive weights) and dense.
///

#ifndef WEXTRAP_WSPACE_HPP
#define WEXTRAP_WSPACE_HPP

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <wextrap/types.hpp>

namespace wextrap
{

class WeightOperator
{
public:
    enum class Kind
    {
        identity,
        diagonal,
        dense
    };

    /// Absolute tolerance on max |M - M^*| accepted for dense input.
    static constexpr double hermitian_tolerance = 1e-12;

    static WeightOperator identity(Index n)
    {
        if (n < 1)
        {
            throw DimensionMismatch("weight operator dimension must be >= 1");
        }
        WeightOperator w;
        w.m_kind = Kind::identity;
        w.m_dim = n;
        w.m_scale = 1.0;
        return w;
    }

    static WeightOperator diagonal(const RealVector& weights)
    {
        if (weights.size() < 1)
        {
            throw DimensionMismatch("weight operator dimension must be >= 1");
        }
        for (Index i = 0; i < weights.size(); ++i)
        {
            // Negated test so that NaN is rejected as well.
            if (!(weights[i] > 0.0))
            {
                throw NonpositiveWeight("diagonal weight " + std::to_string(i) +
                                        " is not strictly positive");
            }
        }
        WeightOperator w;
        w.m_kind = Kind::diagonal;
        w.m_dim = weights.size();
        w.m_weights = weights;
        w.m_scale = weights.maxCoeff();
        return w;
    }

    static WeightOperator dense(const Matrix& m)
    {
        if (m.rows() != m.cols() || m.rows() < 1)
        {
            throw DimensionMismatch("weight matrix must be square and non-empty");
        }
        const double deviation = (m - m.adjoint()).cwiseAbs().maxCoeff();
        if (!(deviation <= hermitian_tolerance))
        {
            throw NotHermitian("weight matrix is not hermitian (max |M - M^*| = " +
                               std::to_string(deviation) + ")");
        }
        WeightOperator w;
        w.m_kind = Kind::dense;
        w.m_dim = m.rows();
        // Store the exactly hermitian part so z^*Mz has no spurious
        // imaginary component beyond rounding.
        w.m_matrix = 0.5 * (m + m.adjoint());
        // LLT stops at the first pivot <= 0, which is exactly the strict
        // positivity test we want.
        Eigen::LLT<Matrix> llt(w.m_matrix);
        if (llt.info() != Eigen::Success)
        {
            throw NotPositiveDefinite(
                "weight matrix is not positive definite (Cholesky pivot <= 0)");
        }
        w.m_factor = llt.matrixL();
        w.m_scale = w.m_matrix.cwiseAbs().maxCoeff();
        return w;
    }

    Kind kind() const noexcept { return m_kind; }
    Index dimension() const noexcept { return m_dim; }

    /// Largest entry magnitude of M; used to scale rounding tolerances.
    double scale() const noexcept { return m_scale; }

    /// Positive weights (diagonal representation only).
    const RealVector& weights() const noexcept { return m_weights; }

    /// Lower triangular L with M = L L^*. Identity and diagonal
    /// representations build it on demand.
    Matrix cholesky_factor() const
    {
        switch (m_kind)
        {
        case Kind::identity:
            return Matrix::Identity(m_dim, m_dim);
        case Kind::diagonal:
            return m_weights.cwiseSqrt().cast<Scalar>().asDiagonal();
        case Kind::dense:
            break;
        }
        return m_factor;
    }

    /// Dense copy of M.
    Matrix matrix() const
    {
        switch (m_kind)
        {
        case Kind::identity:
            return Matrix::Identity(m_dim, m_dim);
        case Kind::diagonal:
            return m_weights.cast<Scalar>().asDiagonal();
        case Kind::dense:
            break;
        }
        return m_matrix;
    }

    /// M z
    Vector apply(const Vector& z) const
    {
        detail::require_dimension(m_dim, z.size(), "WeightOperator::apply");
        switch (m_kind)
        {
        case Kind::identity:
            return z;
        case Kind::diagonal:
            return m_weights.cast<Scalar>().cwiseProduct(z);
        case Kind::dense:
            break;
        }
        return m_matrix * z;
    }

    /// M A, column by column.
    Matrix apply(const Matrix& a) const
    {
        detail::require_dimension(m_dim, a.rows(), "WeightOperator::apply");
        switch (m_kind)
        {
        case Kind::identity:
            return a;
        case Kind::diagonal:
            return m_weights.cast<Scalar>().asDiagonal() * a;
        case Kind::dense:
            break;
        }
        return m_matrix * a;
    }

    /// <y, z> = y^* M z, conjugate-linear in y.
    Scalar inner(const Vector& y, const Vector& z) const
    {
        detail::require_dimension(m_dim, y.size(), "inner");
        detail::require_dimension(m_dim, z.size(), "inner");
        // Eigen's dot conjugates its left operand.
        return y.dot(apply(z));
    }

    double norm(const Vector& z) const
    {
        detail::require_dimension(m_dim, z.size(), "norm");
        switch (m_kind)
        {
        case Kind::identity:
            return z.norm();
        case Kind::diagonal:
            return std::sqrt(m_weights.dot(z.cwiseAbs2()));
        case Kind::dense:
            break;
        }
        const Scalar q = z.dot(m_matrix * z);
        const double rounding = z.squaredNorm() * m_scale;
        const double slack = std::max(1.0 + std::abs(q.real()), rounding);
        if (std::abs(q.imag()) > 1e-12 * slack)
        {
            throw NegativeQuadraticForm("z^*Mz has a non-negligible imaginary part");
        }
        if (q.real() < -1e-12 * rounding)
        {
            throw NegativeQuadraticForm("z^*Mz is negative");
        }
        return std::sqrt(std::max(q.real(), 0.0));
    }

private:
    WeightOperator() = default;

    Kind m_kind = Kind::identity;
    Index m_dim = 0;
    double m_scale = 1.0;
    RealVector m_weights;
    Matrix m_matrix;
    Matrix m_factor;
};

/// Validates a dense candidate weight matrix.
inline WeightOperator validate(const Matrix& m) { return WeightOperator::dense(m); }

/// Validates a list of diagonal weights.
inline WeightOperator validate(const RealVector& weights)
{
    return WeightOperator::diagonal(weights);
}

inline Scalar inner(const WeightOperator& w, const Vector& y, const Vector& z)
{
    return w.inner(y, z);
}

inline double norm(const WeightOperator& w, const Vector& z) { return w.norm(z); }

} // namespace wextrap

#endif // WEXTRAP_WSPACE_HPP
