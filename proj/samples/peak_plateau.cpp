// A nearly stagnating linear problem: the MPE residual peaks where the RRE
// residual plateaus. Usage: peak_plateau [n] [delta]

#include <cstdio>
#include <cstdlib>

#include <wextrap.hpp>

using namespace wextrap;

int main(int argc, char** argv)
{
    const Index n = argc > 1 ? std::atol(argv[1]) : 8;
    const double delta = argc > 2 ? std::atof(argv[2]) : 1e-2;
    const FixedPointProblem p = make_peak_plateau_problem(n, delta);
    const WeightOperator w = WeightOperator::identity(n);
    const RunHistory h = run(iterate(p, n), w, n - 1);

    std::printf("%3s %14s %14s\n", "k", "phi_MPE", "phi_RRE");
    for (const ExtrapolationRecord& rec : h.records)
    {
        if (rec.mpe)
        {
            std::printf("%3ld %14.6e %14.6e\n", static_cast<long>(rec.k), rec.mpe->phi, rec.rre->phi);
        }
        else
        {
            std::printf("%3ld %14s %14.6e\n", static_cast<long>(rec.k), "-", rec.rre->phi);
        }
    }

    const PeakPlateauReport r = peak_plateau_report(stage_data(h, w));
    for (const IndexRange& pk : r.peaks)
    {
        std::printf("MPE peak    k = %ld..%ld\n", static_cast<long>(pk.first), static_cast<long>(pk.last));
    }
    for (const IndexRange& pl : r.plateaus)
    {
        std::printf("RRE plateau k = %ld..%ld\n", static_cast<long>(pl.first), static_cast<long>(pl.last));
    }
    return 0;
}
