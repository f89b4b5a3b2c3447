///
/// \file problem.hpp
///
/// Fixed-point problems x = f(x), the iterates x_{m+1} = f(x_m), residuals
/// r(x) = f(x) - x, and constructed sequences with known behavior.
///

#ifndef WEXTRAP_PROBLEM_HPP
#define WEXTRAP_PROBLEM_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <wextrap/sequence.hpp>
#include <wextrap/types.hpp>
#include <wextrap/wspace.hpp>

namespace wextrap
{

using SparseMatrix = Eigen::SparseMatrix<Scalar>;

/// f(x) = T x + d
struct LinearMap
{
    SparseMatrix t;
    Vector d;

    Index dimension() const noexcept { return d.size(); }
    Vector operator()(const Vector& x) const { return t * x + d; }
    /// (I - T) x, applied without forming I - T.
    Vector apply_system(const Vector& x) const { return x - t * x; }
};

using NonlinearMap = std::function<Vector(const Vector&)>;

struct FixedPointProblem
{
    std::variant<LinearMap, NonlinearMap> map;
    Vector x0;
    std::optional<Vector> known_solution;

    bool is_linear() const noexcept { return std::holds_alternative<LinearMap>(map); }
    Index dimension() const noexcept { return x0.size(); }

    const LinearMap& linear() const
    {
        if (const auto* lin = std::get_if<LinearMap>(&map))
        {
            return *lin;
        }
        throw WrongProblemKind("problem is not linear");
    }

    Vector operator()(const Vector& x) const
    {
        detail::require_dimension(dimension(), x.size(), "FixedPointProblem");
        return std::visit([&x](const auto& f) -> Vector { return f(x); }, map);
    }
};

/// Linear problem; solves (I - T) s = d for the known solution when I - T is
/// nonsingular.
inline FixedPointProblem make_linear_problem(SparseMatrix t, Vector d, Vector x0)
{
    if (t.rows() != t.cols())
    {
        throw DimensionMismatch("T must be square");
    }
    detail::require_dimension(t.rows(), d.size(), "d");
    detail::require_dimension(t.rows(), x0.size(), "x0");
    FixedPointProblem p;
    SparseMatrix eye(t.rows(), t.cols());
    eye.setIdentity();
    const SparseMatrix a = eye - t;
    p.map = LinearMap{std::move(t), std::move(d)};
    p.x0 = std::move(x0);

    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(a);
    if (lu.info() == Eigen::Success)
    {
        Vector s = lu.solve(std::get<LinearMap>(p.map).d);
        if (lu.info() == Eigen::Success && s.allFinite())
        {
            p.known_solution = std::move(s);
        }
    }
    return p;
}

inline FixedPointProblem make_linear_problem(const Matrix& t, Vector d, Vector x0)
{
    return make_linear_problem(SparseMatrix(t.sparseView()), std::move(d), std::move(x0));
}

inline FixedPointProblem make_nonlinear_problem(NonlinearMap f, Vector x0,
                                                std::optional<Vector> known_solution = std::nullopt)
{
    FixedPointProblem p;
    p.map = std::move(f);
    p.x0 = std::move(x0);
    p.known_solution = std::move(known_solution);
    return p;
}

/// x_0..x_m. Divergent sequences are fine as long as they stay finite.
inline VectorSequence iterate(const FixedPointProblem& p, Index m)
{
    if (m < 1)
    {
        throw InsufficientVectors("iterate: m must be >= 1");
    }
    std::vector<Vector> xs;
    xs.reserve(static_cast<std::size_t>(m) + 1);
    xs.push_back(p.x0);
    for (Index i = 1; i <= m; ++i)
    {
        Vector next = p(xs.back());
        if (!next.allFinite())
        {
            throw NonFiniteIterate(i);
        }
        xs.push_back(std::move(next));
    }
    return VectorSequence(std::move(xs));
}

/// r(x) = f(x) - x
inline Vector residual(const FixedPointProblem& p, const Vector& x)
{
    return p(x) - x;
}

//
// Built-in maps and fixtures
//

/// f(x)_i = cos(x_i); the fixed point has every entry equal to the Dottie
/// number 0.739085...
inline FixedPointProblem make_cosine_problem(Index n, Scalar start = 0.0)
{
    NonlinearMap f = [](const Vector& x) -> Vector {
        return x.unaryExpr([](const Scalar& v) { return std::cos(v); });
    };
    return make_nonlinear_problem(std::move(f), Vector::Constant(n, start));
}

/// f(x)_i = 0.25 (x_i^2 + x_{i+1}) + 0.2, indices mod n. A contraction near its
/// fixed point for moderate starting values.
inline FixedPointProblem make_quadratic_problem(Index n, Scalar start = 0.0)
{
    NonlinearMap f = [](const Vector& x) -> Vector {
        const Index n = x.size();
        Vector y(n);
        for (Index i = 0; i < n; ++i)
        {
            y[i] = 0.25 * (x[i] * x[i] + x[(i + 1) % n]) + 0.2;
        }
        return y;
    };
    return make_nonlinear_problem(std::move(f), Vector::Constant(n, start));
}

/// T = diag(0.5, 0.25), d = (0.5, 0.75), x_0 = 0; solution (1, 1).
inline FixedPointProblem make_linear_demo()
{
    Matrix t = Matrix::Zero(2, 2);
    t(0, 0) = 0.5;
    t(1, 1) = 0.25;
    Vector d(2);
    d << 0.5, 0.75;
    return make_linear_problem(t, d, Vector::Zero(2));
}

/// x_0 = 0, x_1 = u_0, x_2 = u_0 + u_1 with <u_0, u_1> = |||u_0|||^2, so the
/// MPE coefficient sum vanishes at k = 1. With the identity weight this is
/// u_0 = e_1, u_1 = e_1 + e_2.
inline VectorSequence make_mpe_failure_sequence(Index n, const WeightOperator& w)
{
    if (n < 3)
    {
        throw DimensionMismatch("make_mpe_failure_sequence: N must be >= 3");
    }
    detail::require_dimension(n, w.dimension(), "make_mpe_failure_sequence weight");
    const Vector e1 = Vector::Unit(n, 0);
    const Vector e2 = Vector::Unit(n, 1);
    // v = e_2 minus its <.,.>-projection on e_1, so <e_1, v> = 0.
    const Vector v = e2 - (w.inner(e1, e2) / w.inner(e1, e1)) * e1;
    const Vector u0 = e1;
    const Vector u1 = e1 + v;
    return VectorSequence({Vector::Zero(n), u0, Vector(u0 + u1)});
}

inline VectorSequence make_mpe_failure_sequence(Index n)
{
    return make_mpe_failure_sequence(n, WeightOperator::identity(n));
}

/// Linear problem whose iterates start like make_mpe_failure_sequence(n):
/// I - T maps e_j to -e_{j+1} (cyclically), d = e_1, x_0 = 0. Every
/// stage k < n is a stagnation stage for RRE/GMR (identity or diagonal
/// weights), and the solution is reached at k = n.
inline FixedPointProblem make_mpe_failure_problem(Index n)
{
    if (n < 3)
    {
        throw DimensionMismatch("make_mpe_failure_problem: N must be >= 3");
    }
    SparseMatrix t(n, n);
    std::vector<Eigen::Triplet<Scalar>> entries;
    for (Index j = 0; j < n; ++j)
    {
        entries.emplace_back(j, j, 1.0);
        entries.emplace_back((j + 1) % n, j, 1.0);
    }
    t.setFromTriplets(entries.begin(), entries.end());
    return make_linear_problem(std::move(t), Vector::Unit(n, 0), Vector::Zero(n));
}

/// Perturbation of make_mpe_failure_problem: I - T = delta I - P with P the
/// cyclic shift. Small delta gives near-stagnation (RRE plateau, MPE peak)
/// across the first n - 1 stages.
inline FixedPointProblem make_peak_plateau_problem(Index n, double delta)
{
    if (n < 3)
    {
        throw DimensionMismatch("make_peak_plateau_problem: N must be >= 3");
    }
    SparseMatrix t(n, n);
    std::vector<Eigen::Triplet<Scalar>> entries;
    for (Index j = 0; j < n; ++j)
    {
        entries.emplace_back(j, j, 1.0 - delta);
        entries.emplace_back((j + 1) % n, j, 1.0);
    }
    t.setFromTriplets(entries.begin(), entries.end());
    return make_linear_problem(std::move(t), Vector::Unit(n, 0), Vector::Zero(n));
}

} // namespace wextrap

#endif // WEXTRAP_PROBLEM_HPP
