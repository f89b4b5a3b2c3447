///
/// \file extrap.hpp
///
/// Minimal polynomial (MPE) and reduced rank (RRE) extrapolation under a
/// weighted inner product.
///
/// Both methods produce s_k = sum_i gamma_i x_i with sum_i gamma_i = 1 from
/// x_0..x_{k+1}. The coefficients come from one weighted QR factorization
/// U_k = Q_k R_k of the difference matrix U_k = [u_0 | ... | u_k],
/// u_i = x_{i+1} - x_i, which is grown one column per stage and shared by
/// the two methods:
///
///   MPE:  R_{k-1} c' = -rho_k,  c = [c'; 1],  gamma = c / sum(c)
///   RRE:  R_k^* y = 1,  R_k h = y,  lambda = 1 / sum(h),  gamma = lambda h
///
/// and s_k = x_0 + Q_{k-1} (R_{k-1} xi) with xi_j = sum_{i>j} gamma_i.
/// The residual-norm estimates |||U_k gamma_k||| come out in closed form:
/// r_kk |gamma_k| for MPE and sqrt(lambda) for RRE.
///

#ifndef WEXTRAP_EXTRAP_HPP
#define WEXTRAP_EXTRAP_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include <wextrap/sequence.hpp>
#include <wextrap/types.hpp>
#include <wextrap/wqr.hpp>
#include <wextrap/wspace.hpp>

namespace wextrap
{

enum class Method
{
    mpe,
    rre
};

inline const char* to_string(Method m) { return m == Method::mpe ? "MPE" : "RRE"; }

struct MethodSet
{
    bool mpe = true;
    bool rre = true;
};

struct ExtrapolationOptions
{
    /// MPE exists iff |sum(c)| > existence_tolerance * ||c||_1.
    double existence_tolerance = 1e-12;
    /// |||u_k||| at or below this ends the run with RunStatus::converged.
    /// Chosen so that r_kk^-2 in the RRE solve cannot overflow.
    double converged_norm = 1e-150;
    QrOptions qr;
};

/// Coefficients of one method at one stage.
struct CoefficientSolve
{
    Method method = Method::mpe;
    Index k = 0;
    // MPE
    Vector c_prime;
    Vector c;
    Scalar alpha{0.0, 0.0};
    // RRE
    Vector h;
    double lambda = 0.0;

    std::optional<Vector> gamma;
    bool exists = false;
};

/// Columns u_0..u_k of the difference matrix, and the stage at which the
/// last column was found dependent (if it was).
struct DifferenceMatrix
{
    std::vector<Vector> u;
    std::optional<Index> detected_k0;

    Matrix leading(Index cols) const { return detail::as_columns({u.begin(), u.begin() + cols}); }
};

namespace detail
{

/// gamma = c / sum(c), or nothing when sum(c) vanishes relative to ||c||_1.
inline std::optional<Vector> normalize_mpe(const Vector& c, double tolerance, Scalar* alpha_out = nullptr)
{
    const Scalar alpha = c.sum();
    if (alpha_out != nullptr)
    {
        *alpha_out = alpha;
    }
    if (!(std::abs(alpha) > tolerance * c.cwiseAbs().sum()))
    {
        return std::nullopt;
    }
    return Vector(c / alpha);
}

/// MPE coefficients from the leading block R_{k-1} (k x k) and rho_k.
inline CoefficientSolve mpe_from_blocks(const Matrix& r_lead, const Vector& rho, double tolerance)
{
    const Index k = rho.size();
    CoefficientSolve s;
    s.method = Method::mpe;
    s.k = k;
    s.c_prime = k == 0 ? Vector(0) : Vector(-r_lead.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(rho));
    s.c.resize(k + 1);
    s.c.head(k) = s.c_prime;
    s.c[k] = 1.0;
    s.gamma = normalize_mpe(s.c, tolerance, &s.alpha);
    s.exists = s.gamma.has_value();
    return s;
}

struct Assembly
{
    Vector xi;
    Vector eta;
    Vector s;
};

/// s_k = x_0 + Q_{k-1} (R_{k-1} xi_k), using the leading k columns of f.
inline Assembly assemble_parts(const Vector& x0, const WQRFactors& f, const Vector& gamma)
{
    const Index k = gamma.size() - 1;
    if (f.columns() < k)
    {
        throw DimensionMismatch("assemble: factors have fewer than k columns");
    }
    detail::require_dimension(f.dimension(), x0.size(), "assemble");
    Assembly a;
    a.xi.resize(k);
    if (k > 0)
    {
        a.xi[0] = Scalar(1.0) - gamma[0];
        for (Index j = 1; j < k; ++j)
        {
            a.xi[j] = a.xi[j - 1] - gamma[j];
        }
    }
    a.eta = k == 0 ? Vector(0) : Vector(f.r.topLeftCorner(k, k).triangularView<Eigen::Upper>() * a.xi);
    a.s = x0;
    if (k > 0)
    {
        a.s += f.q.leftCols(k) * a.eta;
    }
    return a;
}

} // namespace detail

/// MPE at stage k = f.k(). Nonexistence is reported in the result, not thrown.
inline CoefficientSolve mpe_coefficients(const WQRFactors& f, double existence_tolerance = 1e-12)
{
    const Index k = f.k();
    if (k < 0)
    {
        throw DimensionMismatch("mpe_coefficients: empty factorization");
    }
    return detail::mpe_from_blocks(f.r.topLeftCorner(k, k), f.r.col(k).head(k), existence_tolerance);
}

/// RRE at stage k = f.k() through two triangular solves.
inline CoefficientSolve rre_coefficients(const WQRFactors& f)
{
    const Index k = f.k();
    if (k < 0)
    {
        throw DimensionMismatch("rre_coefficients: empty factorization");
    }
    CoefficientSolve s;
    s.method = Method::rre;
    s.k = k;
    const Vector ones = Vector::Ones(k + 1);
    const Vector y = f.r.adjoint().triangularView<Eigen::Lower>().solve(ones);
    s.h = f.r.triangularView<Eigen::Upper>().solve(y);
    const Scalar lambda = Scalar(1.0) / s.h.sum();
    if (!(lambda.real() > 0.0) || std::abs(lambda.imag()) > 1e-10 * lambda.real())
    {
        throw LambdaNotPositive("RRE: lambda = 1/sum(h) is not real positive");
    }
    s.lambda = lambda.real();
    s.gamma = Vector(s.lambda * s.h);
    s.exists = true;
    return s;
}

/// s_k for a solved stage. f must contain at least k columns.
inline Vector assemble(const Vector& x0, const WQRFactors& f, const CoefficientSolve& solve)
{
    if (!solve.exists || !solve.gamma)
    {
        throw MpeNonexistent("s_" + std::to_string(solve.k) + "^MPE does not exist");
    }
    return detail::assemble_parts(x0, f, *solve.gamma).s;
}

/// |||U_k gamma_k||| without forming U_k gamma_k.
inline double residual_estimate(const WQRFactors& f, const CoefficientSolve& solve)
{
    if (!solve.exists || !solve.gamma)
    {
        throw MpeNonexistent("phi_" + std::to_string(solve.k) + "^MPE does not exist");
    }
    if (solve.method == Method::rre)
    {
        return std::sqrt(solve.lambda);
    }
    if (f.columns() <= solve.k)
    {
        throw DimensionMismatch("residual_estimate: factors do not reach stage k");
    }
    return f.r_diag(solve.k) * std::abs((*solve.gamma)[solve.k]);
}

/// One method's output at one stage.
struct MethodResult
{
    Vector gamma;
    Vector xi;
    Vector eta;
    Vector s;
    double phi = 0.0; ///< |||U_k gamma_k|||
};

struct ExtrapolationRecord
{
    Index k = 0;
    bool mpe_exists = false;
    /// Stage k0 where u_k depends on u_0..u_{k-1}; both methods coincide.
    bool at_k0 = false;
    Scalar alpha{1.0, 0.0};
    double lambda = 0.0;
    std::optional<MethodResult> mpe; ///< absent when not requested or nonexistent
    std::optional<MethodResult> rre; ///< absent when not requested
};

enum class RunStatus
{
    completed, ///< reached k_max
    dependent, ///< linear dependence of the u_i detected (k = k0)
    converged  ///< |||u_k||| underflow-small
};

inline const char* to_string(RunStatus s)
{
    switch (s)
    {
    case RunStatus::completed:
        return "completed";
    case RunStatus::dependent:
        return "dependent";
    case RunStatus::converged:
        return "converged";
    }
    return "unknown";
}

struct RunHistory
{
    std::vector<ExtrapolationRecord> records;
    RunStatus status = RunStatus::completed;
    std::optional<Index> k0;
    /// Factors of U_k for the last full-rank stage.
    WQRFactors factors;
    DifferenceMatrix differences;
    std::vector<Vector> x; ///< the iterates consumed, x_0..x_{k+1}
    MethodSet methods;
    ExtrapolationOptions options;
};

namespace detail
{

inline MethodResult make_result(const Vector& x0, const WQRFactors& f, const Vector& gamma, double phi)
{
    Assembly a = assemble_parts(x0, f, gamma);
    return MethodResult{gamma, std::move(a.xi), std::move(a.eta), std::move(a.s), phi};
}

} // namespace detail

/// Table-driven MPE/RRE over stages k = 0..k_max (or up to the detected k0).
inline RunHistory run(const std::vector<Vector>& x_seq, const WeightOperator& w, Index k_max,
                      MethodSet methods = {}, const ExtrapolationOptions& opts = {})
{
    if (k_max < 0)
    {
        throw InsufficientVectors("k_max must be >= 0");
    }
    if (static_cast<Index>(x_seq.size()) < k_max + 2)
    {
        throw InsufficientVectors("run: need " + std::to_string(k_max + 2) + " vectors, got " +
                                  std::to_string(x_seq.size()));
    }
    const Index n = w.dimension();
    for (const Vector& xi : x_seq)
    {
        detail::require_dimension(n, xi.size(), "run: sequence vector");
    }

    RunHistory hist;
    hist.methods = methods;
    hist.options = opts;
    hist.factors = WQRFactors::empty(n);
    const Vector& x0 = x_seq.front();
    hist.x.push_back(x0);

    for (Index k = 0; k <= k_max; ++k)
    {
        const Vector uk = x_seq[k + 1] - x_seq[k];
        hist.differences.u.push_back(uk);
        hist.x.push_back(x_seq[k + 1]);
        const Projection p = project(hist.factors, uk, w, opts.qr);

        const bool converged = !(p.input_norm > opts.converged_norm);
        if (converged || p.dependent)
        {
            hist.status = converged ? RunStatus::converged : RunStatus::dependent;
            hist.k0 = k;
            hist.differences.detected_k0 = k;

            // u_k is (numerically) a combination of the earlier columns, so the
            // MPE system is consistent; RRE coincides with MPE when it exists.
            CoefficientSolve mpe =
                detail::mpe_from_blocks(hist.factors.r, p.coefficients, opts.existence_tolerance);
            if (mpe.exists)
            {
                ExtrapolationRecord rec;
                rec.k = k;
                rec.at_k0 = true;
                rec.mpe_exists = true;
                rec.alpha = mpe.alpha;
                const double phi = p.residual_norm * std::abs((*mpe.gamma)[k]);
                rec.lambda = phi * phi;
                MethodResult res = detail::make_result(x0, hist.factors, *mpe.gamma, phi);
                if (methods.mpe)
                {
                    rec.mpe = res;
                }
                if (methods.rre)
                {
                    rec.rre = std::move(res);
                }
                hist.records.push_back(std::move(rec));
            }
            break;
        }

        hist.factors = extend(hist.factors, p, w);
        const WQRFactors& f = hist.factors;

        ExtrapolationRecord rec;
        rec.k = k;
        const CoefficientSolve mpe = mpe_coefficients(f, opts.existence_tolerance);
        rec.mpe_exists = mpe.exists;
        rec.alpha = mpe.alpha;
        if (methods.mpe && mpe.exists)
        {
            rec.mpe = detail::make_result(x0, f, *mpe.gamma, residual_estimate(f, mpe));
        }
        if (methods.rre)
        {
            const CoefficientSolve rre = rre_coefficients(f);
            rec.lambda = rre.lambda;
            rec.rre = detail::make_result(x0, f, *rre.gamma, residual_estimate(f, rre));
        }
        hist.records.push_back(std::move(rec));
    }
    return hist;
}

inline RunHistory run(const VectorSequence& x_seq, const WeightOperator& w, Index k_max,
                      MethodSet methods = {}, const ExtrapolationOptions& opts = {})
{
    return run(x_seq.vectors(), w, k_max, methods, opts);
}

} // namespace wextrap

#endif // WEXTRAP_EXTRAP_HPP
