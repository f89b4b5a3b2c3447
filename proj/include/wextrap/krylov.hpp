///
/// \file krylov.hpp
///
/// Weighted FOM and GMR for (I - T) x = d, built on an Arnoldi process that
/// orthonormalizes the Krylov basis under <.,.> with modified Gram-Schmidt.
///
/// With A = I - T, r_0 = d - A x_0 and K_k = span{r_0, A r_0, ..., A^{k-1} r_0},
/// both methods return w_k = x_0 + V_k y:
///   FOM:  <z, r(w_k)> = 0 for all z in K_k   ->  H_k y = beta e_1
///   GMR:  |||r(w_k)||| minimal over K_k        ->  min ||beta e_1 - Hbar_k y||
/// On the iterates x_{m+1} = T x_m + d these coincide with MPE and RRE.
///

#ifndef WEXTRAP_KRYLOV_HPP
#define WEXTRAP_KRYLOV_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include <wextrap/extrap.hpp>
#include <wextrap/problem.hpp>
#include <wextrap/relations.hpp>
#include <wextrap/types.hpp>
#include <wextrap/wqr.hpp>
#include <wextrap/wspace.hpp>

namespace wextrap
{

struct KrylovOptions
{
    /// The Krylov space is invariant once the new direction's deflated norm
    /// drops to this fraction of |||A v_k|||.
    double breakdown_tolerance = 1e-13;
    /// FOM is not defined when the cosine of the last Givens rotation is at
    /// or below this value (H_k numerically singular).
    double existence_tolerance = 1e-12;
    bool reorthogonalize = false;
};

struct KrylovState
{
    Matrix basis;  ///< N x m, v_0..v_{m-1}, <v_i, v_j> = delta_ij
    Matrix mbasis; ///< M v_i
    /// m x (m-1) while growing; m x m once the space became invariant.
    Matrix hessenberg;
    Vector x0;
    Vector r0;
    double beta = 0.0; ///< |||r_0|||
    /// Dimension at which A K_m is contained in K_m.
    std::optional<Index> breakdown;

    Index size() const noexcept { return basis.cols(); }
};

inline KrylovState krylov_start(const LinearMap& a, const Vector& x0, const WeightOperator& w)
{
    detail::require_dimension(a.dimension(), x0.size(), "krylov_start x0");
    detail::require_dimension(a.dimension(), w.dimension(), "krylov_start weight");
    KrylovState s;
    s.x0 = x0;
    s.r0 = a.d - a.apply_system(x0);
    s.beta = w.norm(s.r0);
    const Index n = x0.size();
    if (!(s.beta > 0.0))
    {
        s.basis = Matrix(n, 0);
        s.mbasis = Matrix(n, 0);
        s.hessenberg = Matrix(0, 0);
        s.breakdown = 0;
        return s;
    }
    s.basis = s.r0 / s.beta;
    s.mbasis = w.apply(Vector(s.basis.col(0)));
    s.hessenberg = Matrix(1, 0);
    return s;
}

/// Adds v_m and column m-1 of the Hessenberg matrix. When the new direction
/// lies in the current space the state is marked with its breakdown
/// dimension instead; stepping such a state throws Breakdown.
inline KrylovState arnoldi_step(const KrylovState& s, const LinearMap& a, const WeightOperator& w,
                                const KrylovOptions& opts = {})
{
    if (s.breakdown)
    {
        throw Breakdown(*s.breakdown);
    }
    const Index m = s.size();
    const Vector av = a.apply_system(s.basis.col(m - 1));
    QrOptions qr;
    qr.rank_tolerance = opts.breakdown_tolerance;
    qr.reorthogonalize = opts.reorthogonalize;
    const Projection p = detail::orthogonalize(s.basis, s.mbasis, av, w, qr);

    KrylovState next = s;
    if (p.dependent)
    {
        next.hessenberg = Matrix::Zero(m, m);
        next.hessenberg.leftCols(m - 1) = s.hessenberg;
        next.hessenberg.col(m - 1) = p.coefficients;
        next.breakdown = m;
        return next;
    }
    const Index n = s.basis.rows();
    next.basis.resize(n, m + 1);
    next.mbasis.resize(n, m + 1);
    next.basis.leftCols(m) = s.basis;
    next.mbasis.leftCols(m) = s.mbasis;
    const Vector v = p.residual / p.residual_norm;
    next.basis.col(m) = v;
    next.mbasis.col(m) = w.apply(v);
    next.hessenberg = Matrix::Zero(m + 1, m);
    next.hessenberg.topLeftCorner(m, m - 1) = s.hessenberg;
    next.hessenberg.col(m - 1).head(m) = p.coefficients;
    next.hessenberg(m, m - 1) = p.residual_norm;
    return next;
}

/// Runs Arnoldi until stage k is available (basis of size k + 1) or the
/// space becomes invariant.
inline KrylovState build_krylov(const LinearMap& a, const Vector& x0, const WeightOperator& w,
                                Index k, const KrylovOptions& opts = {})
{
    KrylovState s = krylov_start(a, x0, w);
    while (!s.breakdown && s.size() < k + 1)
    {
        s = arnoldi_step(s, a, w, opts);
    }
    return s;
}

/// True when w_k can be formed from `s`.
inline bool has_stage(const KrylovState& s, Index k)
{
    if (k == 0)
    {
        return true;
    }
    return s.size() >= k + 1 || (s.breakdown && k <= *s.breakdown);
}

/// Hbar_k ((k+1) x k). At the breakdown stage the missing subdiagonal entry is zero.
inline Matrix hessenberg_block(const KrylovState& s, Index k)
{
    if (!has_stage(s, k))
    {
        throw Breakdown(s.breakdown.value_or(s.size()));
    }
    Matrix h = Matrix::Zero(k + 1, k);
    const Index rows = std::min(k + 1, s.hessenberg.rows());
    h.topRows(rows) = s.hessenberg.topLeftCorner(rows, k);
    return h;
}

struct FomResult
{
    std::optional<Vector> w; ///< absent when FOM is not defined at stage k
    double cosine = 1.0;     ///< |c_k| of the last Givens rotation
    bool defined() const noexcept { return w.has_value(); }
};

struct GmrResult
{
    Vector w;
    double residual_norm = 0.0; ///< |||d - (I - T) w|||, from the least-squares residual
};

namespace detail
{

struct Givens
{
    double c = 1.0;
    Scalar s{0.0, 0.0};
};

// G = [c s; -conj(s) c] maps (a, b) to (r, 0) with |r| = sqrt(|a|^2 + |b|^2).
inline Givens make_givens(Scalar a, Scalar b)
{
    const double abs_a = std::abs(a);
    const double abs_b = std::abs(b);
    const double rr = std::hypot(abs_a, abs_b);
    if (rr == 0.0)
    {
        return {};
    }
    if (abs_a == 0.0)
    {
        return {0.0, std::conj(b) / abs_b};
    }
    return {abs_a / rr, (a / abs_a) * std::conj(b) / rr};
}

inline void apply_givens(const Givens& g, Scalar& x, Scalar& y)
{
    const Scalar tx = g.c * x + g.s * y;
    y = -std::conj(g.s) * x + g.c * y;
    x = tx;
}

} // namespace detail

inline FomResult fom_from_state(const KrylovState& s, Index k, const KrylovOptions& opts = {})
{
    FomResult out;
    if (k == 0)
    {
        out.w = s.x0;
        return out;
    }
    Matrix h = hessenberg_block(s, k);
    Vector g = Vector::Zero(k + 1);
    g[0] = s.beta;
    for (Index j = 0; j + 1 < k; ++j)
    {
        const detail::Givens rot = detail::make_givens(h(j, j), h(j + 1, j));
        for (Index col = j; col < k; ++col)
        {
            detail::apply_givens(rot, h(j, col), h(j + 1, col));
        }
        detail::apply_givens(rot, g[j], g[j + 1]);
    }
    const double diag = std::abs(h(k - 1, k - 1));
    const double sub = std::abs(h(k, k - 1));
    const double rr = std::hypot(diag, sub);
    out.cosine = rr > 0.0 ? diag / rr : 0.0;
    if (!(out.cosine > opts.existence_tolerance))
    {
        return out;
    }
    // The first k rows are upper triangular; h(k-1, k-1) is the entry before
    // the last rotation, which is what the square system H_k y = beta e_1 needs.
    const Vector y = h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    out.w = Vector(s.x0 + s.basis.leftCols(k) * y);
    return out;
}

inline GmrResult gmr_from_state(const KrylovState& s, Index k)
{
    GmrResult out;
    if (k == 0)
    {
        out.w = s.x0;
        out.residual_norm = s.beta;
        return out;
    }
    const Matrix h = hessenberg_block(s, k);
    // V_{k+1} is <.,.>-orthonormal, so |||r_0 - A V_k y||| = ||beta e_1 - Hbar_k y||
    // and the least-squares problem is an ordinary one: factor Hbar_k with the
    // identity weight.
    const WQRFactors f = mgs_factorize(h, WeightOperator::identity(k + 1));
    Vector rhs = Vector::Zero(k + 1);
    rhs[0] = s.beta;
    const Vector y = f.r.triangularView<Eigen::Upper>().solve(f.q.adjoint() * rhs);
    out.w = s.x0 + s.basis.leftCols(k) * y;
    out.residual_norm = (rhs - h * y).norm();
    return out;
}

inline FomResult fom_solve(const LinearMap& a, const Vector& x0, const WeightOperator& w, Index k,
                           const KrylovOptions& opts = {})
{
    return fom_from_state(build_krylov(a, x0, w, k, opts), k, opts);
}

inline GmrResult gmr_solve(const LinearMap& a, const Vector& x0, const WeightOperator& w, Index k,
                           const KrylovOptions& opts = {})
{
    return gmr_from_state(build_krylov(a, x0, w, k, opts), k);
}

/// Per-stage comparison of the Krylov solvers with MPE/RRE on the iterates
/// of the same linear problem, plus the residual identities evaluated with
/// exact residuals r(x) = T x + d - x.
struct EquivalenceEntry
{
    Index k = 0;
    bool mpe_exists = false;
    bool fom_defined = false;
    bool krylov_available = false;
    bool at_k0 = false;
    std::optional<double> fom_defect; ///< |||w^FOM - s^MPE|||
    std::optional<double> gmr_defect; ///< |||w^GMR - s^RRE|||
    /// |||r(s_k) - U_k gamma_k||| / |||U_k gamma_k|||
    std::optional<double> residual_mpe;
    std::optional<double> residual_rre;
    /// | |||r(w^GMR)||| - sqrt(lambda) | / sqrt(lambda)
    std::optional<double> gmr_vs_lambda;
    std::optional<double> inverse_square;
    std::optional<double> residual_combination;
    std::optional<double> extrapolant_combination;
    std::optional<double> mpe_from_ratio;
    std::optional<double> inverse_square_sum;
    bool strictly_decreasing = true;
};

struct EquivalenceReport
{
    std::vector<EquivalenceEntry> entries;
    RunHistory history;

    /// FOM undefined exactly where MPE does not exist.
    bool nonexistence_aligned() const
    {
        return std::all_of(entries.begin(), entries.end(), [](const EquivalenceEntry& e) {
            return !e.krylov_available || e.fom_defined == e.mpe_exists;
        });
    }

    double max_solution_defect() const
    {
        double m = 0.0;
        for (const EquivalenceEntry& e : entries)
        {
            m = std::max({m, e.fom_defect.value_or(0.0), e.gmr_defect.value_or(0.0)});
        }
        return m;
    }
};

inline EquivalenceReport equivalence_check(const FixedPointProblem& p, const WeightOperator& w,
                                           Index k_max, const KrylovOptions& kopts = {},
                                           const ExtrapolationOptions& eopts = {},
                                           const RelationOptions& ropts = {})
{
    const LinearMap& a = p.linear();
    EquivalenceReport rep;
    rep.history = run(iterate(p, k_max + 1), w, k_max, MethodSet{}, eopts);
    const KrylovState ks = build_krylov(a, p.x0, w, k_max, kopts);

    // Stage data with exact residuals in place of U_k gamma_k.
    std::vector<StageData> exact;
    for (const ExtrapolationRecord& rec : rep.history.records)
    {
        EquivalenceEntry e;
        e.k = rec.k;
        e.mpe_exists = rec.mpe_exists;
        e.at_k0 = rec.at_k0;
        e.krylov_available = has_stage(ks, rec.k);

        const Vector u_rre = detail::combine(rep.history.differences.u, rec.rre->gamma);
        const Vector r_rre = a(rec.rre->s) - rec.rre->s;
        StageData st;
        st.k = rec.k;
        st.mpe_exists = rec.mpe_exists;
        st.at_k0 = rec.at_k0;
        st.s_rre = rec.rre->s;
        st.gamma_rre = rec.rre->gamma;
        st.res_rre = r_rre;
        st.phi_rre = w.norm(r_rre);
        if (!rec.at_k0)
        {
            e.residual_rre = detail::relative(w.norm(r_rre - u_rre), w.norm(u_rre));
        }
        if (rec.mpe)
        {
            const Vector u_mpe = detail::combine(rep.history.differences.u, rec.mpe->gamma);
            const Vector r_mpe = a(rec.mpe->s) - rec.mpe->s;
            st.s_mpe = rec.mpe->s;
            st.gamma_mpe = rec.mpe->gamma;
            st.res_mpe = r_mpe;
            st.phi_mpe = w.norm(r_mpe);
            if (!rec.at_k0)
            {
                e.residual_mpe = detail::relative(w.norm(r_mpe - u_mpe), w.norm(u_mpe));
            }
        }
        exact.push_back(std::move(st));

        if (e.krylov_available)
        {
            const FomResult fom = fom_from_state(ks, rec.k, kopts);
            const GmrResult gmr = gmr_from_state(ks, rec.k);
            e.fom_defined = fom.defined();
            if (fom.w && rec.mpe)
            {
                e.fom_defect = w.norm(*fom.w - rec.mpe->s);
            }
            e.gmr_defect = w.norm(gmr.w - rec.rre->s);
            if (!rec.at_k0 && rec.lambda > 0.0)
            {
                const double root = std::sqrt(rec.lambda);
                e.gmr_vs_lambda = std::abs(w.norm(a(gmr.w) - gmr.w) - root) / root;
            }
        }
        rep.entries.push_back(std::move(e));
    }

    auto entry_for = [&rep](Index k) -> EquivalenceEntry& {
        for (EquivalenceEntry& e : rep.entries)
        {
            if (e.k == k)
            {
                return e;
            }
        }
        throw Error("missing equivalence entry");
    };
    for (const CouplingEntry& c : check_coupling(exact, w, ropts))
    {
        EquivalenceEntry& e = entry_for(c.k);
        e.inverse_square = c.inverse_square;
        e.residual_combination = c.residual_combination;
        e.extrapolant_combination = c.extrapolant_combination;
        e.strictly_decreasing = !e.mpe_exists || c.strictly_decreasing;
    }
    for (const CorollaryEntry& c : check_corollaries(exact, ropts))
    {
        EquivalenceEntry& e = entry_for(c.k);
        e.mpe_from_ratio = c.mpe_from_ratio;
        e.inverse_square_sum = c.inverse_square_sum;
    }
    return rep;
}

} // namespace wextrap

#endif // WEXTRAP_KRYLOV_HPP
