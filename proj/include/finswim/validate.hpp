#ifndef FINSWIM_VALIDATE_HPP
#define FINSWIM_VALIDATE_HPP

#include <functional>
#include <vector>

#include "finswim/flow.hpp"
#include "finswim/metrics.hpp"

namespace finswim {

/**
 * One pitching-foil benchmark condition. Sr is the thickness-based reduced
 * frequency f·D/U and A_D the peak-to-peak trailing-edge excursion over the
 * thickness D = thickness_ratio·chord; the pitch amplitude about the leading
 * edge follows as asin(A_D·D/(2·chord)).
 */
struct FoilCase {
    int density = 96;  ///< grid cells per chord length
    double Sr = 0.3;
    double A_D = 2.0;
    double thickness_ratio = 0.16;
    double Re = 6000.0;
    int transient_periods = 2;
    int average_periods = 3;
};

struct FoilRunResult {
    Coefficients coeff;
    bool eta_defined = false;
    double eta = 0.0;
    int steps = 0;
};

/** Simulate one case and average the loads over the post-transient window.
 *  Optionally streams per-step force samples into *out_samples. */
FoilRunResult run_foil_case(const FoilCase& c,
                            std::vector<TrajectorySample>* out_samples = nullptr,
                            const std::function<void(int, double)>& progress = {});

struct ConvergenceRow {
    int density = 0;
    double C_T = 0.0, C_P = 0.0, eta = 0.0;
};

/** The benchmark condition across a ladder of grid densities. */
std::vector<ConvergenceRow> convergence_ladder(const FoilCase& base,
                                               const std::vector<int>& densities,
                                               const std::function<void(const ConvergenceRow&)>&
                                                   on_row = {});

struct TransitionResult {
    double Sr = 0.0;
    double A_D_star = 0.0;  ///< amplitude of zero net thrust
    int iterations = 0;
    bool ok = false;        ///< false when the bracket does not straddle zero
};

/** Bisect the flapping amplitude until the mean thrust changes sign. */
TransitionResult find_transition(const FoilCase& base, double A_lo, double A_hi, int iterations,
                                 const std::function<void(double, double)>& on_eval = {});

}  // namespace finswim

#endif
