#include "finswim/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace finswim {

Coefficients coefficients(const std::vector<TrajectorySample>& traj, double t0, double t1,
                          const CoeffParams& p) {
    if (!(p.rho > 0.0) || !(p.U > 0.0) || !(p.width > 0.0) || !(p.length > 0.0))
        throw ConfigError("coefficients: normalisation parameters must be positive");
    double wt = 0.0, fx = 0.0, fy = 0.0, pw = 0.0;
    for (const TrajectorySample& s : traj) {
        if (s.t < t0 || s.t >= t1) continue;
        wt += s.dt;
        fx += s.Fx * s.dt;
        fy += s.Fy * s.dt;
        pw += s.P * s.dt;
    }
    if (!(wt > 0.0)) throw ConfigError("coefficients: empty averaging window");
    double q = 0.5 * p.rho * p.U * p.U * p.width * p.length;
    Coefficients c;
    c.C_T = (fx / wt) / q;
    c.C_L = (fy / wt) / q;
    c.C_P = (pw / wt) / (q * p.U);
    return c;
}

double efficiency(double C_T, double C_P) {
    if (!(C_P > 0.0)) throw ConfigError("efficiency: C_P must be positive");
    return C_T / C_P;
}

double strouhal(double period, double U, double length) {
    if (!(period > 0.0) || !(U > 0.0)) throw ConfigError("strouhal: period and U must be positive");
    return length / (period * U);
}

std::optional<double> detect_period(const std::vector<double>& t, const std::vector<double>& x) {
    size_t n = std::min(t.size(), x.size());
    if (n < 8) return std::nullopt;

    // resample onto a uniform grid so lags map to time directly
    double t_begin = t.front(), t_end = t[n - 1];
    if (!(t_end > t_begin)) return std::nullopt;
    size_t m = n;
    double du = (t_end - t_begin) / double(m - 1);
    std::vector<double> u(m);
    size_t k = 0;
    for (size_t i = 0; i < m; i++) {
        double ti = t_begin + du * double(i);
        while (k + 2 < n && t[k + 1] <= ti) k++;
        double span = t[k + 1] - t[k];
        double a = span > 0.0 ? (ti - t[k]) / span : 0.0;
        u[i] = x[k] + a * (x[k + 1] - x[k]);
    }

    double mu = mean_of(u);
    double var = 0.0;
    for (double v : u) var += (v - mu) * (v - mu);
    if (var <= 1e-24 * double(m)) return std::nullopt;

    size_t max_lag = m / 2;
    std::vector<double> r(max_lag + 1, 0.0);
    for (size_t lag = 1; lag <= max_lag; lag++) {
        double num = 0.0, d1 = 0.0, d2 = 0.0;
        for (size_t i = 0; i + lag < m; i++) {
            double a = u[i] - mu, b = u[i + lag] - mu;
            num += a * b;
            d1 += a * a;
            d2 += b * b;
        }
        r[lag] = (d1 > 0.0 && d2 > 0.0) ? num / std::sqrt(d1 * d2) : 0.0;
    }

    // skip the trivial lag-0 neighbourhood: wait for the first dip, then take
    // the first local maximum that clears the confidence threshold
    size_t lag = 1;
    while (lag + 1 <= max_lag && !(r[lag] < 0.5 && r[lag] <= r[lag + 1])) lag++;
    for (; lag + 1 < max_lag; lag++) {
        if (r[lag] >= 0.8 && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) {
            double rm = r[lag - 1], r0 = r[lag], rp = r[lag + 1];
            double denom = rm - 2.0 * r0 + rp;
            double shift = std::fabs(denom) > 1e-300 ? 0.5 * (rm - rp) / denom : 0.0;
            shift = std::clamp(shift, -0.5, 0.5);
            return (double(lag) + shift) * du;
        }
    }
    return std::nullopt;
}

MetricsReport report_from_trajectory(const std::vector<TrajectorySample>& traj,
                                     const CoeffParams& p) {
    if (traj.empty()) throw ConfigError("report_from_trajectory: empty trajectory");
    MetricsReport rep;
    double t_begin = traj.front().t;
    double t_end = traj.back().t + traj.back().dt;
    rep.t0 = stable_window_start(t_begin, t_end);
    rep.t1 = t_end;
    rep.coeff = coefficients(traj, rep.t0, rep.t1, p);
    if (rep.coeff.C_P > 0.0) {
        rep.eta_defined = true;
        rep.eta = rep.coeff.C_T / rep.coeff.C_P;
    }
    std::vector<double> t(traj.size()), th3(traj.size());
    for (size_t i = 0; i < traj.size(); i++) {
        t[i] = traj[i].t;
        th3[i] = traj[i].theta[2];
    }
    if (auto T = detect_period(t, th3)) {
        rep.period_defined = true;
        rep.period = *T;
        rep.St = strouhal(*T, p.U, p.length);
    }
    return rep;
}

}  // namespace finswim
