#ifndef FINSWIM_RL_HPP
#define FINSWIM_RL_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "finswim/gait.hpp"
#include "finswim/net.hpp"
#include "finswim/swim_env.hpp"

namespace finswim {

struct TrainConfig {
    double gamma = 0.99;
    double lam = 0.95;
    double clip_eps = 0.2;
    double lr = 3e-4;
    int epochs = 4;
    int minibatch = 64;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    double grad_clip = 0.5;
    int episodes = 100;
    uint64_t seed = 0;
    int checkpoint_every = 25;

    double bc_lr = 1e-3;
    int bc_epochs = 200;
    int bc_minibatch = 64;
    double bc_holdout = 0.2;

    void validate() const;
};

/** Stack the newest K observations into a K x obs_dim matrix, oldest row
 *  first, zero rows padding the top of a short history. */
Mat make_window(const std::deque<Observation>& hist, int K, int obs_dim);

struct ActionSample {
    ActionVector raw{};      ///< the Gaussian draw; log-probability refers to this
    ActionVector clamped{};  ///< what the environment receives
    double logprob = 0.0;
};

/** Draw from the policy's diagonal Gaussian (4 normal variates per call). */
ActionSample sample_action(const Net& policy, const Mat& window, Rng& rng);

/** Deterministic (mean) or seeded stochastic action, clamped to bounds. */
ActionVector act(const Net& policy, const Mat& window, bool stochastic, Rng& rng);

/** Diagonal-Gaussian log-density of a raw action. */
double gaussian_logprob(const Mat& mean, const Mat& log_std, const ActionVector& raw);

struct Transition {
    Mat window;
    ActionVector raw_action{};
    double logprob = 0.0;
    double reward = 0.0;  ///< scaled in place by the normalizer before GAE
    double value = 0.0;
    bool done = false;    ///< episode terminated at this step (no bootstrap)
};

struct RolloutBuffer {
    std::vector<Transition> steps;
    double bootstrap_value = 0.0;  ///< V of the state after the last step, 0 if done
    std::vector<double> advantages, returns;
};

/** Recursive generalized advantage estimation; returns (advantages, targets). */
void gae(const std::vector<double>& rewards, const std::vector<double>& values,
         const std::vector<uint8_t>& dones, double bootstrap, double gamma, double lam,
         std::vector<double>& adv_out, std::vector<double>& target_out);

/** Shift/scale to zero mean and unit variance (no-op on length < 2 or zero spread). */
void normalize_advantages(std::vector<double>& adv);

/**
 * Running standard deviation of the discounted return, used to scale rewards
 * before advantage estimation. Statistics persist across updates.
 */
class RewardNormalizer {
  public:
    explicit RewardNormalizer(double gamma) : gamma_(gamma) {}

    /** Update statistics over the sequence, then divide it by the running std. */
    void observe_and_scale(std::vector<double>& rewards, const std::vector<uint8_t>& dones);

    double stddev() const;
    long long count() const { return count_; }

  private:
    double gamma_;
    double running_return_ = 0.0;
    long long count_ = 0;
    double mean_ = 0.0, m2_ = 0.0;
};

struct LossReport {
    double actor = 0.0, critic = 0.0, entropy = 0.0;
    double grad_norm = 0.0;
    int minibatches = 0;
    bool aborted = false;  ///< non-finite loss: update abandoned
};

/** Clipped-surrogate PPO epoch loop over shuffled minibatches. Advantages
 *  must already be normalized. */
LossReport ppo_update(const RolloutBuffer& buf, Net& policy, Net& value, Adam& opt_policy,
                      Adam& opt_value, const TrainConfig& cfg, Rng& rng);

struct BcReport {
    std::vector<double> train_mse, holdout_mse;
    double final_train = 0.0, final_holdout = 0.0;
    int epochs_run = 0;
    bool diverged = false;  ///< training loss rose 5 epochs in a row
};

/** Regress the policy mean onto reference actions (MSE over pairs and DOFs). */
BcReport bc_pretrain(const ReferenceDataset& ds, Net& policy, const TrainConfig& cfg, Rng& rng);

struct EpisodeLog {
    int episode = 0;
    int steps = 0;
    double mean_reward = 0.0;  ///< raw (pre-normalization) per-step mean
    double total_impulse = 0.0;
    double C_T = 0.0, eta = 0.0;
    double actor_loss = 0.0, critic_loss = 0.0;
    int early_stop = 0;
    bool update_aborted = false;
};

/** Episode loop: collect with the stochastic policy, scale rewards, estimate
 *  advantages, update. One environment instance, one update per episode. */
std::vector<EpisodeLog> train_loop(
    SwimEnv& env, Net& policy, Net& value, const TrainConfig& cfg,
    const std::function<void(const EpisodeLog&)>& on_episode = {},
    const std::function<void(int)>& on_checkpoint = {});

}  // namespace finswim

#endif
