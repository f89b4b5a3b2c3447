///
/// \file wqr.hpp
///
/// Weighted QR factorization A = QR with Q^* M Q = I and R upper triangular
/// with positive diagonal, computed by Gram-Schmidt under <.,.> = y^*Mz.
///
/// Modified Gram-Schmidt is the working path. The classical variant exists so
/// the two can be compared (they agree in exact arithmetic and the factors are
/// unique), and nothing downstream uses it.
///

#ifndef WEXTRAP_WQR_HPP
#define WEXTRAP_WQR_HPP

#include <vector>

#include <Eigen/Core>

#include <wextrap/types.hpp>
#include <wextrap/wspace.hpp>

namespace wextrap
{

struct QrOptions
{
    /// A column is dependent when its deflated norm is <= rank_tolerance
    /// times its own weighted norm.
    double rank_tolerance = 1e-13;
    /// Run the orthogonalization loop a second time on each new column.
    bool reorthogonalize = false;
};

/// Factors of the first columns() columns of a matrix. Grows by copy.
struct WQRFactors
{
    Matrix q;  ///< N x (k+1), columns q_0..q_k
    Matrix mq; ///< M q_i, cached so <q_i, a> = (M q_i)^* a costs one dot
    Matrix r;  ///< (k+1) x (k+1) upper triangular, real positive diagonal

    static WQRFactors empty(Index n)
    {
        return WQRFactors{Matrix(n, 0), Matrix(n, 0), Matrix(0, 0)};
    }

    Index dimension() const noexcept { return q.rows(); }
    Index columns() const noexcept { return q.cols(); }
    /// Index of the last factored column (-1 when empty).
    Index k() const noexcept { return q.cols() - 1; }

    double r_diag(Index i) const { return r(i, i).real(); }

    /// Leading j columns; equals the factorization of the first j columns.
    WQRFactors leading(Index j) const
    {
        return WQRFactors{q.leftCols(j), mq.leftCols(j), r.topLeftCorner(j, j)};
    }
};

/// Result of orthogonalizing one vector against an existing basis.
struct Projection
{
    Vector coefficients; ///< rho = Q^* M a (accumulated over passes)
    Vector residual;     ///< a - Q rho
    double residual_norm = 0.0;
    double input_norm = 0.0;
    bool dependent = false;
};

namespace detail
{

enum class GramSchmidt
{
    classical,
    modified
};

inline Projection orthogonalize(const Matrix& q, const Matrix& mq, const Vector& a,
                                const WeightOperator& w, const QrOptions& opts,
                                GramSchmidt variant = GramSchmidt::modified)
{
    detail::require_dimension(w.dimension(), a.size(), "orthogonalize");
    const Index m = q.cols();
    Projection p;
    p.coefficients = Vector::Zero(m);
    p.residual = a;
    if (variant == GramSchmidt::classical)
    {
        // r_ij = <q_i, a_j> against the original column.
        p.coefficients = mq.adjoint() * a;
        p.residual -= q * p.coefficients;
    }
    else
    {
        const int passes = opts.reorthogonalize ? 2 : 1;
        for (int pass = 0; pass < passes; ++pass)
        {
            for (Index i = 0; i < m; ++i)
            {
                const Scalar rij = mq.col(i).dot(p.residual);
                p.residual -= rij * q.col(i);
                p.coefficients[i] += rij;
            }
        }
    }
    p.input_norm = w.norm(a);
    p.residual_norm = w.norm(p.residual);
    // A basis of size N spans C^N, so any further column is dependent.
    p.dependent = m >= w.dimension() ||
                  p.residual_norm <= opts.rank_tolerance * p.input_norm;
    return p;
}

} // namespace detail

/// Orthogonalizes `a` against the columns of `f` without extending it.
inline Projection project(const WQRFactors& f, const Vector& a, const WeightOperator& w,
                          const QrOptions& opts = {})
{
    return detail::orthogonalize(f.q, f.mq, a, w, opts);
}

/// Appends the column described by `p` (which must come from project(f, ...)).
inline WQRFactors extend(const WQRFactors& f, const Projection& p, const WeightOperator& w)
{
    if (p.dependent)
    {
        throw RankDeficient(f.columns());
    }
    const Index n = f.dimension();
    const Index m = f.columns();
    WQRFactors g;
    g.q.resize(n, m + 1);
    g.mq.resize(n, m + 1);
    g.r = Matrix::Zero(m + 1, m + 1);
    g.q.leftCols(m) = f.q;
    g.mq.leftCols(m) = f.mq;
    g.r.topLeftCorner(m, m) = f.r;

    const Vector qk = p.residual / p.residual_norm;
    g.q.col(m) = qk;
    g.mq.col(m) = w.apply(qk);
    g.r.col(m).head(m) = p.coefficients;
    g.r(m, m) = Scalar(p.residual_norm, 0.0);
    return g;
}

/// Grows U_{k-1} = Q_{k-1}R_{k-1} into U_k = Q_k R_k.
/// Throws RankDeficient(k) when the new column depends on the others.
inline WQRFactors append_column(const WQRFactors& f, const Vector& a,
                                const WeightOperator& w, const QrOptions& opts = {})
{
    return extend(f, project(f, a, w, opts), w);
}

namespace detail
{

inline WQRFactors factorize(const Matrix& a, const WeightOperator& w,
                            const QrOptions& opts, GramSchmidt variant)
{
    detail::require_dimension(w.dimension(), a.rows(), "factorize");
    WQRFactors f = WQRFactors::empty(a.rows());
    for (Index j = 0; j < a.cols(); ++j)
    {
        f = extend(f, orthogonalize(f.q, f.mq, a.col(j), w, opts, variant), w);
    }
    return f;
}

inline Matrix as_columns(const std::vector<Vector>& cols)
{
    if (cols.empty())
    {
        return Matrix(0, 0);
    }
    Matrix a(cols.front().size(), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
    {
        detail::require_dimension(a.rows(), cols[j].size(), "column list");
        a.col(static_cast<Index>(j)) = cols[j];
    }
    return a;
}

} // namespace detail

/// Classical Gram-Schmidt. Kept for cross-checking only.
inline WQRFactors gs_factorize(const Matrix& a, const WeightOperator& w,
                               const QrOptions& opts = {})
{
    return detail::factorize(a, w, opts, detail::GramSchmidt::classical);
}

/// Modified Gram-Schmidt.
inline WQRFactors mgs_factorize(const Matrix& a, const WeightOperator& w,
                                const QrOptions& opts = {})
{
    return detail::factorize(a, w, opts, detail::GramSchmidt::modified);
}

inline WQRFactors gs_factorize(const std::vector<Vector>& a, const WeightOperator& w,
                               const QrOptions& opts = {})
{
    return gs_factorize(detail::as_columns(a), w, opts);
}

inline WQRFactors mgs_factorize(const std::vector<Vector>& a, const WeightOperator& w,
                                const QrOptions& opts = {})
{
    return mgs_factorize(detail::as_columns(a), w, opts);
}

/// max |(Q^*MQ - I)_ij|
inline double orthogonality_deviation(const WQRFactors& f)
{
    const Index m = f.columns();
    if (m == 0)
    {
        return 0.0;
    }
    return (f.q.adjoint() * f.mq - Matrix::Identity(m, m)).cwiseAbs().maxCoeff();
}

} // namespace wextrap

#endif // WEXTRAP_WQR_HPP
