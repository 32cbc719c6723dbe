// Walk through the library on the Stokes corner: exact profile, sampled
// field, Weiss energy, frequency, blow-up classification and the corner
// system whose roots produce the catalog.

#include <cmath>
#include <cstdio>

#include "ehd/ehd.hpp"

using namespace ehd;

int main() {
    const double h = 1.0 / 128;
    const PiecewiseProfile a1 = a1_profile();

    std::printf("catalog\n");
    for (const auto& p : corner_catalog()) {
        double fb = 0;
        for (const auto& r : fb_residual(p)) fb = std::max(fb, std::abs(r.residual));
        std::printf("  %-4s density %.15f (%s)  max free boundary residual %.1e\n", p.name.c_str(),
                    density(p).value, to_string(density(p).kind), fb);
    }

    const ScalarField u = ScalarField::square(1.125, h, a1);
    const PhasedField pf(u);
    std::printf("\nWeiss energy of A1 on a %dx%d lattice (constant sqrt(3)/3 = %.6f)\n", u.nx(), u.ny(),
                std::sqrt(3.0) / 3);
    for (double r : {1.0, 0.5, 0.25, 0.125}) std::printf("  M(%.3f) = %.6f\n", r, weiss_M(pf, {0, 0}, r, 1.5));

    std::printf("\nfrequency of the negative phase (homogeneity 3/2)\n");
    for (double r : {1.0, 0.5}) std::printf("  D(%.2f) = %.5f\n", r, freq_D(pf, {0, 0}, r));

    const StagnationReport st = find_stagnation(u);
    std::printf("\n%zu stagnation candidate(s)\n", st.candidates.size());
    for (const auto& c : st.candidates) {
        const ClassificationResult cl = classify(u, c);
        std::printf("  at (%.4f, %.4f): %s\n", c.location.x, c.location.y, to_summary(cl).c_str());
    }

    std::printf("\ncorner systems\n");
    for (const auto& r : solve_unilateral())
        std::printf("  unilateral theta1 = %.12f  amplitude %.12f\n", r.theta1, r.amplitudes.at(0));
    for (const auto& r : solve(CornerSystem{CornerVariant::bilateral}).roots)
        std::printf("  bilateral  theta1 = %.12f  amplitudes %.12f %.12f %.12f\n", r.theta1, r.amplitudes.at(0),
                    r.amplitudes.at(1), r.amplitudes.at(2));
    return 0;
}
