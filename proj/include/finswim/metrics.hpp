#ifndef FINSWIM_METRICS_HPP
#define FINSWIM_METRICS_HPP

#include <optional>
#include <vector>

#include "finswim/common.hpp"
#include "finswim/fish.hpp"

namespace finswim {

/** Normalisation inputs for force and power coefficients. */
struct CoeffParams {
    double rho = 1.0;
    double U = 1.0;       ///< free-stream speed
    double width = 0.12;  ///< body width c used in the reference area
    double length = 3.0;  ///< characteristic length
};

/** Time-averaged thrust, lateral-force and power coefficients. */
struct Coefficients {
    double C_T = 0.0, C_L = 0.0, C_P = 0.0;
};

/**
 * dt-weighted averages of Fx, Fy and P over samples whose start time lies in
 * [t0, t1), each normalised by 1/2 rho U^2 c l (power by 1/2 rho U^3 c l).
 */
Coefficients coefficients(const std::vector<TrajectorySample>& traj, double t0, double t1,
                          const CoeffParams& p);

/** eta = C_T / C_P; only defined for positive power coefficient. */
double efficiency(double C_T, double C_P);

/** St = l / (T U): characteristic length over distance travelled per period. */
double strouhal(double period, double U, double length);

/** Start of the trailing stable-statistics window (last 60 % of the span). */
inline double stable_window_start(double t_begin, double t_end) {
    return t_begin + 0.4 * (t_end - t_begin);
}

/**
 * Dominant period of a sampled scalar series by autocorrelation: the series is
 * resampled uniformly, and the first autocorrelation peak at positive lag with
 * correlation >= 0.8 gives the period (parabolically refined). Returns nothing
 * for constant or aperiodic input.
 */
std::optional<double> detect_period(const std::vector<double>& t, const std::vector<double>& x);

/** Summary of one rollout. */
struct MetricsReport {
    Coefficients coeff;
    bool eta_defined = false;
    double eta = 0.0;
    bool period_defined = false;
    double period = 0.0;
    double St = 0.0;
    double t0 = 0.0, t1 = 0.0;  ///< averaging window
};

/**
 * Full report over a trajectory: coefficients on the trailing stable window,
 * period detection on the tail angle, Strouhal from the detected period.
 */
MetricsReport report_from_trajectory(const std::vector<TrajectorySample>& traj,
                                     const CoeffParams& p);

}  // namespace finswim

#endif
