///
/// \file relations.hpp
///
/// Checks of the relations between MPE and RRE on a run history.
///
/// Writing phi_k = |||U_k gamma_k||| for either method:
///
///   * RRE stagnates (s_k^RRE = s_{k-1}^RRE) exactly when s_k^MPE does not
///     exist, and then gamma_k^RRE = [gamma_{k-1}^RRE; 0];
///   * when s_k^MPE exists,
///       1/phi_k^RRE^2       = 1/phi_{k-1}^RRE^2 + 1/phi_k^MPE^2
///       U_k g^RRE/phi^2     = U_{k-1} g_{k-1}^RRE/phi_{k-1}^2 + U_k g^MPE/phi^MPE^2
///       s_k^RRE/phi_k^2     = s_{k-1}^RRE/phi_{k-1}^2 + s_k^MPE/phi_k^MPE^2
///     and phi_k^RRE < phi_{k-1}^RRE;
///   * 1/phi_k^RRE^2 = sum over S_k = {i <= k : s_i^MPE exists} of 1/phi_i^MPE^2.
///
/// Every check reports a relative defect; nothing here asserts except the
/// stagnation biconditional, which throws TheoremViolation.
///

#ifndef WEXTRAP_RELATIONS_HPP
#define WEXTRAP_RELATIONS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <wextrap/extrap.hpp>
#include <wextrap/types.hpp>
#include <wextrap/wspace.hpp>

namespace wextrap
{

struct RelationOptions
{
    double stagnation_tolerance = 1e-10;
    /// phi_k^RRE / phi_{k-1}^RRE > 1 - plateau_tolerance marks a plateau.
    double plateau_tolerance = 1e-6;
    /// Pass/fail threshold applied to every reported defect.
    double defect_threshold = 1e-9;
    double monotone_slack = 1e-12;
};

/// Where the phi values come from.
enum class PhiSource
{
    recompute, ///< |||U_k gamma_k||| formed from the stored difference vectors
    stored     ///< the phi values carried by the records
};

/// What the identities relate at one stage.
struct StageData
{
    Index k = 0;
    bool mpe_exists = false;
    bool at_k0 = false;
    double phi_rre = 0.0;
    std::optional<double> phi_mpe;
    std::optional<Vector> res_rre; ///< U_k gamma_k^RRE (or a true residual)
    std::optional<Vector> res_mpe;
    Vector s_rre;
    std::optional<Vector> s_mpe;
    Vector gamma_rre;
    std::optional<Vector> gamma_mpe;
};

namespace detail
{

inline Vector combine(const std::vector<Vector>& u, const Vector& gamma)
{
    Vector out = Vector::Zero(u.front().size());
    for (Index i = 0; i < gamma.size(); ++i)
    {
        out += gamma[i] * u[static_cast<std::size_t>(i)];
    }
    return out;
}

inline double relative(double diff, double scale)
{
    return scale > 0.0 ? diff / scale : diff;
}

} // namespace detail

/// Stage data for every record that carries both methods' data (RRE always,
/// MPE where it exists).
inline std::vector<StageData> stage_data(const RunHistory& h, const WeightOperator& w,
                                         PhiSource source = PhiSource::recompute)
{
    std::vector<StageData> out;
    const bool have_u = !h.differences.u.empty();
    for (const ExtrapolationRecord& rec : h.records)
    {
        if (!rec.rre)
        {
            throw InsufficientVectors("relation checks need RRE data at every stage");
        }
        if (rec.mpe_exists && !rec.mpe)
        {
            throw InsufficientVectors("relation checks need MPE data where it exists");
        }
        StageData st;
        st.k = rec.k;
        st.mpe_exists = rec.mpe_exists;
        st.at_k0 = rec.at_k0;
        st.s_rre = rec.rre->s;
        st.gamma_rre = rec.rre->gamma;
        st.phi_rre = rec.rre->phi;
        if (rec.mpe)
        {
            st.s_mpe = rec.mpe->s;
            st.gamma_mpe = rec.mpe->gamma;
            st.phi_mpe = rec.mpe->phi;
        }
        if (have_u)
        {
            st.res_rre = detail::combine(h.differences.u, st.gamma_rre);
            if (st.gamma_mpe)
            {
                st.res_mpe = detail::combine(h.differences.u, *st.gamma_mpe);
            }
            if (source == PhiSource::recompute)
            {
                st.phi_rre = w.norm(*st.res_rre);
                if (st.res_mpe)
                {
                    st.phi_mpe = w.norm(*st.res_mpe);
                }
            }
        }
        out.push_back(std::move(st));
    }
    return out;
}

//
// Identity in the R-coordinate frame relating consecutive RRE stages:
//   R_k g_k / ||R_k g_k||^2 = [R_{k-1} g_{k-1}; 0] / ||R_{k-1} g_{k-1}||^2
//                             + conj(sum c) / r_kk e_k
// valid whether or not s_k^MPE exists.
//
inline std::vector<std::optional<double>> check_master_identity(const RunHistory& h)
{
    std::vector<std::optional<double>> out(h.records.size());
    const WQRFactors& f = h.factors;
    for (std::size_t i = 1; i < h.records.size(); ++i)
    {
        const ExtrapolationRecord& rec = h.records[i];
        const ExtrapolationRecord& prev = h.records[i - 1];
        const Index k = rec.k;
        if (rec.at_k0 || !rec.rre || !prev.rre || f.columns() < k + 1)
        {
            continue;
        }
        const Matrix rk = f.r.topLeftCorner(k + 1, k + 1);
        const Vector gk = rk.triangularView<Eigen::Upper>() * rec.rre->gamma;
        const Vector gp = f.r.topLeftCorner(k, k).triangularView<Eigen::Upper>() * prev.rre->gamma;
        const CoefficientSolve mpe = mpe_coefficients(f.leading(k + 1));

        const Vector lhs = gk / gk.squaredNorm();
        Vector rhs = Vector::Zero(k + 1);
        rhs.head(k) = gp / gp.squaredNorm();
        rhs[k] += std::conj(mpe.alpha) / f.r_diag(k);
        out[i] = (lhs - rhs).norm() / lhs.norm();
    }
    return out;
}

struct StagnationEntry
{
    Index k = 0;
    bool stagnates = false;
    bool mpe_exists = false;
    double step = 0.0;                      ///< |||s_k^RRE - s_{k-1}^RRE|||
    std::optional<double> embedding_defect; ///< ||gamma_k - [gamma_{k-1}; 0]|| when stagnating
};

/// Stagnation flags for k >= 1. Throws TheoremViolation when a stage
/// stagnates while MPE exists, or fails to stagnate while it does not.
inline std::vector<StagnationEntry> check_stagnation(const std::vector<StageData>& stages,
                                                     const WeightOperator& w,
                                                     const RelationOptions& opts = {})
{
    std::vector<StagnationEntry> out;
    for (std::size_t i = 1; i < stages.size(); ++i)
    {
        const StageData& cur = stages[i];
        const StageData& prev = stages[i - 1];
        if (cur.at_k0)
        {
            continue;
        }
        StagnationEntry e;
        e.k = cur.k;
        e.mpe_exists = cur.mpe_exists;
        e.step = w.norm(cur.s_rre - prev.s_rre);
        e.stagnates = e.step <= opts.stagnation_tolerance * (1.0 + w.norm(cur.s_rre));
        if (e.stagnates)
        {
            Vector embedded = Vector::Zero(cur.gamma_rre.size());
            embedded.head(prev.gamma_rre.size()) = prev.gamma_rre;
            e.embedding_defect = (cur.gamma_rre - embedded).norm();
        }
        out.push_back(e);
        if (e.stagnates == e.mpe_exists)
        {
            throw TheoremViolation("stage " + std::to_string(e.k) + ": RRE " +
                                   (e.stagnates ? "stagnates" : "does not stagnate") +
                                   " while MPE " + (e.mpe_exists ? "exists" : "does not exist"));
        }
    }
    return out;
}

struct CouplingEntry
{
    Index k = 0;
    std::optional<double> inverse_square; ///< 1/phi^2 identity
    std::optional<double> residual_combination; ///< residual-vector identity
    std::optional<double> extrapolant_combination; ///< extrapolant identity
    bool nonincreasing = true;   ///< phi_k^RRE <= phi_{k-1}^RRE (with slack)
    bool strictly_decreasing = false;
};

inline std::vector<CouplingEntry> check_coupling(const std::vector<StageData>& stages,
                                                 const WeightOperator& w,
                                                 const RelationOptions& opts = {})
{
    std::vector<CouplingEntry> out;
    for (std::size_t i = 1; i < stages.size(); ++i)
    {
        const StageData& cur = stages[i];
        const StageData& prev = stages[i - 1];
        if (cur.at_k0)
        {
            continue;
        }
        CouplingEntry e;
        e.k = cur.k;
        e.nonincreasing = cur.phi_rre <= prev.phi_rre * (1.0 + opts.monotone_slack);
        e.strictly_decreasing = cur.phi_rre < prev.phi_rre;
        out.push_back(e);
        if (!cur.mpe_exists || !cur.phi_mpe || cur.phi_rre <= 0.0 || prev.phi_rre <= 0.0 ||
            *cur.phi_mpe <= 0.0)
        {
            continue;
        }
        CouplingEntry& c = out.back();
        const double wr = 1.0 / (cur.phi_rre * cur.phi_rre);
        const double wp = 1.0 / (prev.phi_rre * prev.phi_rre);
        const double wm = 1.0 / (*cur.phi_mpe * *cur.phi_mpe);
        c.inverse_square = detail::relative(std::abs(wr - wp - wm), wr);

        if (cur.res_rre && prev.res_rre && cur.res_mpe)
        {
            const Vector a = wr * *cur.res_rre;
            const Vector b = wp * *prev.res_rre;
            const Vector m = wm * *cur.res_mpe;
            const double scale = std::max({w.norm(a), w.norm(b), w.norm(m)});
            c.residual_combination = detail::relative(w.norm(a - b - m), scale);
        }
        if (cur.s_mpe)
        {
            const Vector a = wr * cur.s_rre;
            const Vector b = wp * prev.s_rre;
            const Vector m = wm * *cur.s_mpe;
            const double scale = std::max({w.norm(a), w.norm(b), w.norm(m)});
            c.extrapolant_combination = detail::relative(w.norm(a - b - m), scale);
        }
    }
    return out;
}

struct CorollaryEntry
{
    Index k = 0;
    std::optional<double> mpe_from_ratio; ///< phi^MPE from the RRE ratio
    std::optional<double> inverse_square_sum; ///< 1/phi^RRE^2 as a sum over S_k
    std::vector<Index> s_k;     ///< stages i <= k where MPE exists
};

inline std::vector<CorollaryEntry> check_corollaries(const std::vector<StageData>& stages,
                                                     const RelationOptions& /*opts*/ = {})
{
    std::vector<CorollaryEntry> out;
    std::vector<Index> s_set;
    double inverse_sum = 0.0;
    for (std::size_t i = 0; i < stages.size(); ++i)
    {
        const StageData& cur = stages[i];
        if (cur.at_k0)
        {
            continue;
        }
        if (cur.mpe_exists && cur.phi_mpe && *cur.phi_mpe > 0.0)
        {
            s_set.push_back(cur.k);
            inverse_sum += 1.0 / (*cur.phi_mpe * *cur.phi_mpe);
        }
        CorollaryEntry e;
        e.k = cur.k;
        e.s_k = s_set;
        if (cur.phi_rre > 0.0)
        {
            const double target = 1.0 / (cur.phi_rre * cur.phi_rre);
            e.inverse_square_sum = detail::relative(std::abs(target - inverse_sum), target);
        }
        if (i > 0 && cur.mpe_exists && cur.phi_mpe && stages[i - 1].phi_rre > 0.0)
        {
            const double ratio = cur.phi_rre / stages[i - 1].phi_rre;
            const double denom = 1.0 - ratio * ratio;
            if (denom > 0.0)
            {
                const double predicted = cur.phi_rre / std::sqrt(denom);
                e.mpe_from_ratio = detail::relative(std::abs(*cur.phi_mpe - predicted), *cur.phi_mpe);
            }
            else
            {
                e.mpe_from_ratio = 1.0;
            }
        }
        out.push_back(std::move(e));
    }
    return out;
}

struct IndexRange
{
    Index first = 0;
    Index last = 0;
    bool operator==(const IndexRange&) const = default;
};

struct PeakPlateauReport
{
    /// Maximal runs of stages where phi^MPE grows (nonexistence counts as
    /// an infinite value).
    std::vector<IndexRange> peaks;
    /// Maximal runs of stages where phi_k^RRE / phi_{k-1}^RRE > 1 - tau.
    std::vector<IndexRange> plateaus;
    std::vector<IndexRange> overlaps;
    std::vector<double> rre_ratios; ///< ratio for k = 1..K
    double plateau_tolerance = 0.0;
};

namespace detail
{

inline std::vector<IndexRange> runs(const std::vector<std::pair<Index, bool>>& flags)
{
    std::vector<IndexRange> out;
    for (const auto& [k, on] : flags)
    {
        if (!on)
        {
            continue;
        }
        if (!out.empty() && out.back().last + 1 == k)
        {
            out.back().last = k;
        }
        else
        {
            out.push_back({k, k});
        }
    }
    return out;
}

} // namespace detail

inline PeakPlateauReport peak_plateau_report(const std::vector<StageData>& stages,
                                             const RelationOptions& opts = {})
{
    if (stages.size() < 2)
    {
        throw InsufficientVectors("peak/plateau report needs at least two stages");
    }
    PeakPlateauReport rep;
    rep.plateau_tolerance = opts.plateau_tolerance;
    std::vector<std::pair<Index, bool>> peak_flags;
    std::vector<std::pair<Index, bool>> plateau_flags;
    for (std::size_t i = 1; i < stages.size(); ++i)
    {
        const StageData& cur = stages[i];
        const StageData& prev = stages[i - 1];
        const bool rising = !cur.phi_mpe ||
                            (prev.phi_mpe && *cur.phi_mpe > *prev.phi_mpe);
        peak_flags.emplace_back(cur.k, rising);
        const double ratio = prev.phi_rre > 0.0 ? cur.phi_rre / prev.phi_rre : 0.0;
        rep.rre_ratios.push_back(ratio);
        plateau_flags.emplace_back(cur.k, ratio > 1.0 - opts.plateau_tolerance);
    }
    rep.peaks = detail::runs(peak_flags);
    rep.plateaus = detail::runs(plateau_flags);
    for (const IndexRange& p : rep.peaks)
    {
        for (const IndexRange& q : rep.plateaus)
        {
            const Index lo = std::max(p.first, q.first);
            const Index hi = std::min(p.last, q.last);
            if (lo <= hi)
            {
                rep.overlaps.push_back({lo, hi});
            }
        }
    }
    return rep;
}

/// Per-stage summary of every check.
struct RelationEntry
{
    Index k = 0;
    bool mpe_exists = false;
    bool stagnation_detected = false;
    std::optional<double> master_identity;
    std::optional<double> inverse_square;
    std::optional<double> residual_combination;
    std::optional<double> extrapolant_combination;
    std::optional<double> mpe_from_ratio;
    std::optional<double> inverse_square_sum;
    std::optional<double> phi_rre_consistency; ///< stored phi vs |||U_k gamma|||
    std::optional<double> phi_mpe_consistency;
    bool monotone = true;
    std::vector<Index> s_k;
};

struct Offender
{
    std::string name;
    Index k = 0;
    double value = 0.0;
};

struct RelationReport
{
    std::vector<RelationEntry> entries;
    std::optional<PeakPlateauReport> peak_plateau;
    std::vector<Offender> failures; ///< every check above threshold
    std::optional<std::string> theorem_violation;
    double threshold = 0.0;

    bool passed() const noexcept { return failures.empty() && !theorem_violation; }

    std::optional<Offender> worst() const
    {
        if (failures.empty())
        {
            return std::nullopt;
        }
        return *std::max_element(failures.begin(), failures.end(),
                                 [](const Offender& a, const Offender& b) { return a.value < b.value; });
    }
};

/// Runs every check over a history. With PhiSource::stored the identities use
/// the phi values carried by the records (as loaded from a file), and the
/// report also compares them with |||U_k gamma_k|||.
inline RelationReport verify_relations(const RunHistory& h, const WeightOperator& w,
                                       const RelationOptions& opts = {},
                                       PhiSource source = PhiSource::recompute)
{
    RelationReport rep;
    rep.threshold = opts.defect_threshold;
    const std::vector<StageData> stages = stage_data(h, w, source);

    for (const StageData& st : stages)
    {
        RelationEntry e;
        e.k = st.k;
        e.mpe_exists = st.mpe_exists;
        if (!st.at_k0 && st.res_rre)
        {
            const double direct = w.norm(*st.res_rre);
            e.phi_rre_consistency = detail::relative(std::abs(st.phi_rre - direct), direct);
            if (st.res_mpe && st.phi_mpe)
            {
                const double dm = w.norm(*st.res_mpe);
                e.phi_mpe_consistency = detail::relative(std::abs(*st.phi_mpe - dm), dm);
            }
        }
        rep.entries.push_back(std::move(e));
    }
    auto entry_for = [&rep](Index k) -> RelationEntry& {
        for (RelationEntry& e : rep.entries)
        {
            if (e.k == k)
            {
                return e;
            }
        }
        throw Error("missing relation entry");
    };

    if (h.factors.columns() > 0)
    {
        const auto master = check_master_identity(h);
        for (std::size_t i = 0; i < master.size(); ++i)
        {
            rep.entries[i].master_identity = master[i];
        }
    }
    try
    {
        for (const StagnationEntry& s : check_stagnation(stages, w, opts))
        {
            entry_for(s.k).stagnation_detected = s.stagnates;
        }
    }
    catch (const TheoremViolation& ex)
    {
        rep.theorem_violation = ex.what();
    }
    for (const CouplingEntry& c : check_coupling(stages, w, opts))
    {
        RelationEntry& e = entry_for(c.k);
        e.inverse_square = c.inverse_square;
        e.residual_combination = c.residual_combination;
        e.extrapolant_combination = c.extrapolant_combination;
        e.monotone = c.nonincreasing && (!e.mpe_exists || c.strictly_decreasing);
    }
    for (const CorollaryEntry& c : check_corollaries(stages, opts))
    {
        RelationEntry& e = entry_for(c.k);
        e.mpe_from_ratio = c.mpe_from_ratio;
        e.inverse_square_sum = c.inverse_square_sum;
        e.s_k = c.s_k;
    }
    if (stages.size() >= 2)
    {
        rep.peak_plateau = peak_plateau_report(stages, opts);
    }

    auto flag = [&rep, &opts](const char* name, Index k, const std::optional<double>& v) {
        if (v && !(*v <= opts.defect_threshold))
        {
            rep.failures.push_back({name, k, *v});
        }
    };
    for (const RelationEntry& e : rep.entries)
    {
        flag("master identity", e.k, e.master_identity);
        flag("inverse-square identity", e.k, e.inverse_square);
        flag("residual combination", e.k, e.residual_combination);
        flag("extrapolant combination", e.k, e.extrapolant_combination);
        flag("MPE-from-RRE ratio", e.k, e.mpe_from_ratio);
        flag("inverse-square sum", e.k, e.inverse_square_sum);
        flag("phi^RRE consistency", e.k, e.phi_rre_consistency);
        flag("phi^MPE consistency", e.k, e.phi_mpe_consistency);
        if (!e.monotone)
        {
            rep.failures.push_back({"RRE monotonicity", e.k, 1.0});
        }
    }
    return rep;
}

} // namespace wextrap

#endif // WEXTRAP_RELATIONS_HPP
