#ifndef FINSWIM_SWIM_ENV_HPP
#define FINSWIM_SWIM_ENV_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "finswim/fish.hpp"
#include "finswim/flow.hpp"

namespace finswim {

/** Sign-preserving logarithmic squashing. Throws ConfigError on non-finite x. */
double symlog(double x);

using Observation = std::vector<double>;

struct EpisodeConfig {
    int max_steps = 400;
    double alpha = 1.0;       ///< impulse weight
    double beta = 1.0;        ///< energy weight
    int history_K = 16;       ///< observation-history window length
    uint64_t seed = 0;
    bool use_pressure = true; ///< 20-dim observation when true, 7-dim otherwise
    int density = 64;         ///< grid cells per body length unit L* = 3L
    double Re = 6000.0;
    int warmup_steps = 200;   ///< frozen-body solver steps before each episode

    int obs_dim() const { return use_pressure ? 20 : 7; }
    void validate() const;
};

struct Penalties {
    double xi_p = 0.0, xi_a = 0.0, xi_y = 0.0, xi_e = 0.0;
    double sum() const { return xi_p + xi_a + xi_y + xi_e; }
};

/** Posture / acceleration / track / early-stop penalties. Angles enter in
 *  radians and are converted to degrees internally; accel entries are
 *  per-step second differences of the link angles. */
Penalties penalties(const FishState& state, const std::array<double, 3>& accel,
                    bool early_stopped);

struct RewardBreakdown {
    double impulse_term = 0.0;  ///< alpha * 75 * symlog(Ix/75)
    double energy_term = 0.0;   ///< beta * 1000 * symlog(W/1000)
    Penalties xi;
    double total = 0.0;
};

/** Step reward from the x-impulse and energy expenditure, both soft-clipped. */
RewardBreakdown reward(double Ix, double W, const Penalties& xi, double alpha, double beta);

struct StopCheck {
    bool stop = false;
    std::string reason;
};

/** Posture, rate, and field-sanity limits that truncate an episode. */
StopCheck check_early_stop(const FishState& state, const FlowField& field, bool outline_simple,
                           double U, double y_limit);

/**
 * The swimming MDP: a three-link fish pinned streamwise at one third of the
 * domain length, free to pivot its links and shift laterally, in a uniform
 * oncoming stream. One control step advances the flow by one solver step.
 */
class SwimEnv {
  public:
    explicit SwimEnv(const EpisodeConfig& cfg);

    Observation reset();
    Observation reset(uint64_t seed);

    struct StepResult {
        Observation obs;
        RewardBreakdown reward;
        bool done = false;
        std::string reason;     ///< early-stop reason, empty otherwise
        TrajectorySample sample;
        EnergyStep energy;      ///< per-link in-plane work split over this step
    };
    StepResult env_step(const ActionVector& action);

    bool done() const { return done_; }
    int steps_done() const { return step_count_; }
    double episode_time() const { return t_; }
    const FishState& state() const { return st_; }
    const FlowField& field() const { return field_; }
    const EpisodeConfig& config() const { return cfg_; }
    const SolverParams& solver_params() const { return sp_; }
    const std::vector<TrajectorySample>& trajectory() const { return traj_; }
    const FishGeometry& geometry() const { return geom_; }
    double ref_x() const { return ref_x_; }

    /** Observation for the current state (also what reset/env_step return). */
    Observation observe() const;

  private:
    EpisodeConfig cfg_;
    FishGeometry geom_;
    Grid grid_;
    SolverParams sp_;
    FlowSolver solver_;
    FlowField field_, warm_field_;
    bool warm_ready_ = false;
    double ref_x_ = 0.0;
    double y_limit_ = 0.0;

    FishState st_;
    double t_ = 0.0;
    int step_count_ = 0;
    bool done_ = true;
    std::array<double, 3> th_prev1_{}, th_prev2_{};
    double dt_sum_ = 0.0;
    std::vector<TrajectorySample> traj_;

    void run_warmup();
};

}  // namespace finswim

#endif
