#include "finswim/swim_env.hpp"

#include <algorithm>
#include <cmath>

namespace finswim {

double symlog(double x) {
    if (!std::isfinite(x)) throw ConfigError("symlog: non-finite input");
    return x >= 0.0 ? std::log(x + 1.0) : -std::log(-x + 1.0);
}

void EpisodeConfig::validate() const {
    if (max_steps <= 0) throw ConfigError("episode: max_steps must be positive");
    if (alpha < 0.0 || beta < 0.0) throw ConfigError("episode: reward weights must be >= 0");
    if (history_K < 1) throw ConfigError("episode: history_K must be >= 1");
    if (density < 16) throw ConfigError("episode: density must be >= 16");
    if (warmup_steps < 0) throw ConfigError("episode: warmup_steps must be >= 0");
}

Penalties penalties(const FishState& state, const std::array<double, 3>& accel,
                    bool early_stopped) {
    const double deg = 180.0 / M_PI;
    double t1 = std::fabs(state.theta[0]) * deg;
    double t2 = std::fabs(state.theta[1]) * deg;
    double t3 = std::fabs(state.theta[2]) * deg;
    Penalties xi;
    xi.xi_p = 75.0 - std::max(t1, 20.0) - std::max(t2, 20.0) - std::max(t3, 35.0);
    double asum = 0.0;
    for (double a : accel) asum += std::max(std::fabs(a), 0.05);
    xi.xi_a = 10.0 * (0.15 - asum);
    xi.xi_y = 5.0 - std::max(std::fabs(state.y), 5.0);
    xi.xi_e = early_stopped ? -100.0 : 0.0;
    return xi;
}

RewardBreakdown reward(double Ix, double W, const Penalties& xi, double alpha, double beta) {
    if (alpha < 0.0 || beta < 0.0) throw ConfigError("reward: weights must be >= 0");
    RewardBreakdown r;
    double ix = std::clamp(Ix, -150.0, 150.0);
    double w = std::clamp(W, -2000.0, 2000.0);
    r.impulse_term = alpha * 75.0 * symlog(ix / 75.0);
    r.energy_term = beta * 1000.0 * symlog(w / 1000.0);
    r.xi = xi;
    r.total = r.impulse_term - r.energy_term + xi.sum();
    return r;
}

StopCheck check_early_stop(const FishState& state, const FlowField& field, bool outline_simple,
                           double U, double y_limit) {
    const double deg = 180.0 / M_PI;
    StopCheck c;
    for (int i = 0; i < 3; i++) {
        double lim = i < 2 ? 45.0 : 60.0;
        if (!(std::fabs(state.theta[i]) * deg <= lim)) {
            c.stop = true;
            c.reason = "invalid position";
            return c;
        }
    }
    if (std::fabs(state.y) > y_limit) {
        c.stop = true;
        c.reason = "invalid position";
        return c;
    }
    for (int i = 0; i < 3; i++)
        if (!(std::fabs(state.omega[i]) <= 10.0)) {
            c.stop = true;
            c.reason = "invalid angular velocity";
            return c;
        }
    if (!outline_simple) {
        c.stop = true;
        c.reason = "invalid geometry";
        return c;
    }
    if (!field.u.all_finite() || !field.v.all_finite() || !field.p.all_finite() ||
        field.u.max_abs() > 10.0 * U || field.v.max_abs() > 10.0 * U) {
        c.stop = true;
        c.reason = "chaotic field";
        return c;
    }
    return c;
}

namespace {
SolverParams env_solver_params(const EpisodeConfig& cfg) {
    cfg.validate();
    SolverParams sp;
    sp.Re = cfg.Re;
    return sp;
}
}  // namespace

SwimEnv::SwimEnv(const EpisodeConfig& cfg)
    : cfg_(cfg),
      grid_{4 * cfg.density, 2 * cfg.density, 3.0 / cfg.density, {0.0, -3.0}},
      sp_(env_solver_params(cfg)),
      solver_(grid_, sp_),
      field_(grid_, sp_.U),
      warm_field_(field_) {
    // streamwise anchor: the leading joint sits 3 L downstream of the inlet,
    // putting the nose 2 L in and leaving 7 L of wake run-out
    ref_x_ = 3.0 * geom_.link_length;
    y_limit_ = 2.0 * geom_.link_length;
}

void SwimEnv::run_warmup() {
    field_ = FlowField(grid_, sp_.U);
    FishState straight;
    FishBody body(straight, geom_, ref_x_);
    for (int k = 0; k < cfg_.warmup_steps; k++) {
        double dt = solver_.compute_dt(field_);
        solver_.step(field_, body, dt);
    }
    warm_field_ = field_;
    warm_ready_ = true;
}

Observation SwimEnv::reset() { return reset(cfg_.seed); }

Observation SwimEnv::reset(uint64_t seed) {
    cfg_.seed = seed;
    st_ = FishState{};
    t_ = 0.0;
    step_count_ = 0;
    done_ = false;
    th_prev1_ = th_prev2_ = {0.0, 0.0, 0.0};
    dt_sum_ = 0.0;
    traj_.clear();
    if (!warm_ready_)
        run_warmup();  // the spun-up field is deterministic; later resets reuse it
    else
        field_ = warm_field_;
    return observe();
}

Observation SwimEnv::observe() const {
    Observation o;
    o.reserve(cfg_.obs_dim());
    for (int i = 0; i < 3; i++) o.push_back(st_.theta[i]);
    for (int i = 0; i < 3; i++) o.push_back(st_.omega[i]);
    o.push_back(st_.y);
    if (cfg_.use_pressure) {
        BodyOutline outline = build_outline(st_, geom_, ref_x_, grid_.h);
        std::vector<double> sp = probe_pressures(field_, outline, geom_.probe_count, sp_);
        o.insert(o.end(), sp.begin(), sp.end());
    }
    return o;
}

SwimEnv::StepResult SwimEnv::env_step(const ActionVector& action) {
    if (done_) throw UsageError("env_step: episode is finished; call reset");

    std::array<double, 3> th_n2 = th_prev2_, th_n1 = th_prev1_;
    for (int i = 0; i < 3; i++) th_prev2_[i] = th_prev1_[i], th_prev1_[i] = st_.theta[i];

    double dt = solver_.compute_dt(field_);
    ActionVector applied = apply_action(st_, action, dt);

    BodyOutline outline = build_outline(st_, geom_, ref_x_, grid_.h);
    FishBody body(st_, geom_, ref_x_);
    BodyFrame frame = body_frame(st_, geom_, ref_x_);
    solver_.step(field_, body, dt);
    t_ += dt;
    step_count_++;
    dt_sum_ += dt;

    LinkLoads loads = surface_loads(field_, outline, frame, sp_, geom_.link_length);
    double P = link_power(loads, frame);
    double Ix = loads.F_total.x * dt;
    double W = P * dt;

    // per-step angular second difference, rescaled when dt drifts off its mean
    std::array<double, 3> accel{0.0, 0.0, 0.0};
    if (step_count_ >= 2) {
        double dt_bar = dt_sum_ / step_count_;
        double scale = (dt_bar / dt) * (dt_bar / dt);
        for (int i = 0; i < 3; i++)
            accel[i] = (st_.theta[i] - 2.0 * th_n1[i] + th_n2[i]) * scale;
    }

    StopCheck stop = check_early_stop(st_, field_, outline.simple, sp_.U, y_limit_);
    Penalties xi = penalties(st_, accel, stop.stop);
    RewardBreakdown rb = reward(Ix, W, xi, cfg_.alpha, cfg_.beta);

    done_ = stop.stop || step_count_ >= cfg_.max_steps;

    StepResult out;
    out.reward = rb;
    out.done = done_;
    out.reason = stop.reason;
    TrajectorySample& s = out.sample;
    s.t = t_;
    s.dt = dt;
    for (int i = 0; i < 3; i++) s.theta[i] = st_.theta[i], s.omega[i] = st_.omega[i];
    s.y = st_.y;
    s.action = applied;
    s.Fx = loads.F_total.x;
    s.Fy = loads.F_total.y;
    for (int i = 0; i < 3; i++) s.M[i] = loads.M[i];
    s.P = P;
    traj_.push_back(s);
    out.energy = energy_decomposition(loads, frame, dt);

    out.obs = stop.reason == "chaotic field" ? Observation(cfg_.obs_dim(), 0.0) : observe();
    return out;
}

}  // namespace finswim
