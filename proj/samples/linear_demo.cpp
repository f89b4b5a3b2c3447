// MPE and RRE on T = diag(0.5, 0.25), d = (0.5, 0.75), then the Krylov
// counterparts on the same problem.

#include <cstdio>

#include <wextrap.hpp>

using namespace wextrap;

int main()
{
    const FixedPointProblem p = make_linear_demo();
    const WeightOperator w = WeightOperator::identity(2);
    const RunHistory h = run(iterate(p, 3), w, 2);

    std::printf("status %s, k0 = %ld\n", to_string(h.status), static_cast<long>(h.k0.value_or(-1)));
    for (const ExtrapolationRecord& rec : h.records)
    {
        std::printf("k=%ld", static_cast<long>(rec.k));
        if (rec.mpe)
        {
            std::printf("  MPE s=(%.12f, %.12f) phi=%.3e", rec.mpe->s[0].real(), rec.mpe->s[1].real(), rec.mpe->phi);
        }
        std::printf("  RRE s=(%.12f, %.12f) phi=%.3e\n", rec.rre->s[0].real(), rec.rre->s[1].real(), rec.rre->phi);
    }

    const RelationReport rep = verify_relations(h, w);
    std::printf("relations: %s\n", rep.passed() ? "PASS" : "FAIL");

    const EquivalenceReport eq = equivalence_check(p, w, 1);
    std::printf("max |||w_k - s_k||| = %.2e\n", eq.max_solution_defect());
    return rep.passed() ? 0 : 1;
}
