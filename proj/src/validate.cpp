#include "finswim/validate.hpp"

#include <cmath>

#include "finswim/foil.hpp"

namespace finswim {

FoilRunResult run_foil_case(const FoilCase& c, std::vector<TrajectorySample>* out_samples,
                            const std::function<void(int, double)>& progress) {
    if (c.density < 8) throw ConfigError("run_foil_case: density too small");
    if (!(c.Sr > 0.0)) throw ConfigError("run_foil_case: Sr must be positive");
    if (c.A_D < 0.0) throw ConfigError("run_foil_case: amplitude must be non-negative");

    const double chord = 1.0;
    const double thick = c.thickness_ratio * chord;
    const double freq = c.Sr / thick;            // U = 1
    const double amp = std::asin(0.5 * c.A_D * thick / chord);
    const double T = 1.0 / freq;

    Grid g{8 * c.density, 4 * c.density, chord / c.density, {-2.0, -2.0}};
    SolverParams sp;
    sp.Re = c.Re;
    sp.char_length = chord;
    FlowSolver solver(g, sp);
    FlowField f(g, sp.U);
    PitchingFoil foil(chord, c.thickness_ratio, freq, amp, {0.0, 0.0});
    foil.set_time(0.0);

    const double t0 = c.transient_periods * T;
    const double t1 = (c.transient_periods + c.average_periods) * T;
    std::vector<TrajectorySample> local;
    std::vector<TrajectorySample>& samples = out_samples ? *out_samples : local;
    samples.clear();

    int steps = 0;
    while (f.t < t1 - 1e-12) {
        double dt = std::min(solver.compute_dt(f), t1 - f.t);
        foil.set_time(f.t + dt);
        solver.step(f, foil, dt);
        FoilLoads fl = foil_loads(f, foil, sp);
        TrajectorySample s{};
        s.t = f.t;
        s.dt = dt;
        s.Fx = fl.F.x;
        s.Fy = fl.F.y;
        s.P = fl.P;
        samples.push_back(s);
        steps++;
        if (progress && steps % 200 == 0) progress(steps, f.t);
    }

    CoeffParams cp;
    cp.width = 1.0;
    cp.length = chord;  // loads normalized by the chord alone
    FoilRunResult r;
    r.coeff = coefficients(samples, t0, t1, cp);
    r.steps = steps;
    if (r.coeff.C_P > 0.0) {
        r.eta_defined = true;
        r.eta = efficiency(r.coeff.C_T, r.coeff.C_P);
    }
    return r;
}

std::vector<ConvergenceRow> convergence_ladder(
    const FoilCase& base, const std::vector<int>& densities,
    const std::function<void(const ConvergenceRow&)>& on_row) {
    std::vector<ConvergenceRow> rows;
    for (int d : densities) {
        FoilCase c = base;
        c.density = d;
        FoilRunResult r = run_foil_case(c);
        ConvergenceRow row{d, r.coeff.C_T, r.coeff.C_P, r.eta_defined ? r.eta : 0.0};
        if (on_row) on_row(row);
        rows.push_back(row);
    }
    return rows;
}

TransitionResult find_transition(const FoilCase& base, double A_lo, double A_hi, int iterations,
                                 const std::function<void(double, double)>& on_eval) {
    auto thrust_at = [&](double A) {
        FoilCase c = base;
        c.A_D = A;
        double ct = run_foil_case(c).coeff.C_T;
        if (on_eval) on_eval(A, ct);
        return ct;
    };

    TransitionResult out;
    out.Sr = base.Sr;
    double f_lo = thrust_at(A_lo), f_hi = thrust_at(A_hi);
    if (!(f_lo < 0.0) || !(f_hi > 0.0)) {
        out.A_D_star = f_lo >= 0.0 ? A_lo : A_hi;
        return out;  // ok stays false: drag and thrust must bracket the root
    }
    double lo = A_lo, hi = A_hi;
    for (int k = 0; k < iterations; k++) {
        double mid = 0.5 * (lo + hi);
        if (thrust_at(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
        out.iterations++;
    }
    out.A_D_star = 0.5 * (lo + hi);
    out.ok = true;
    return out;
}

}  // namespace finswim
