#include "finswim/rl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "finswim/common.hpp"
#include "finswim/metrics.hpp"

namespace finswim {

void TrainConfig::validate() const {
    if (gamma <= 0.0 || gamma > 1.0) throw ConfigError("gamma must be in (0, 1]");
    if (lam < 0.0 || lam > 1.0) throw ConfigError("lambda must be in [0, 1]");
    if (clip_eps <= 0.0 || clip_eps >= 1.0) throw ConfigError("clip_eps must be in (0, 1)");
    if (lr <= 0.0 || bc_lr <= 0.0) throw ConfigError("learning rates must be positive");
    if (epochs < 1 || bc_epochs < 1) throw ConfigError("epoch counts must be >= 1");
    if (minibatch < 1 || bc_minibatch < 1) throw ConfigError("minibatch sizes must be >= 1");
    if (entropy_coef < 0.0 || value_coef < 0.0)
        throw ConfigError("loss coefficients must be non-negative");
    if (grad_clip <= 0.0) throw ConfigError("grad_clip must be positive");
    if (episodes < 1) throw ConfigError("episodes must be >= 1");
    if (bc_holdout <= 0.0 || bc_holdout >= 1.0) throw ConfigError("bc_holdout must be in (0, 1)");
    if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
}

Mat make_window(const std::deque<Observation>& hist, int K, int obs_dim) {
    if (K < 1) throw ConfigError("window length must be >= 1");
    Mat w(K, obs_dim);
    const int n = int(hist.size());
    const int take = std::min(n, K);
    // newest observation occupies the last row; missing history stays zero
    for (int r = 0; r < take; r++) {
        const Observation& o = hist[n - take + r];
        if (int(o.size()) != obs_dim)
            throw ConfigError("observation length does not match window width");
        for (int c = 0; c < obs_dim; c++) w(K - take + r, c) = o[c];
    }
    return w;
}

double gaussian_logprob(const Mat& mean, const Mat& log_std, const ActionVector& raw) {
    const int d = mean.cols;
    double lp = 0.0;
    for (int j = 0; j < d; j++) {
        const double ls = log_std(0, j);
        const double z = (raw[j] - mean(0, j)) * std::exp(-ls);
        lp += -0.5 * z * z - ls;
    }
    return lp - 0.5 * d * std::log(2.0 * M_PI);
}

ActionSample sample_action(const Net& policy, const Mat& window, Rng& rng) {
    const Mat mean = policy.forward_value(window);
    const Mat& ls = policy.params()[policy.log_std_index()].value;
    ActionSample s;
    for (int j = 0; j < mean.cols; j++) {
        const double draw = mean(0, j) + std::exp(ls(0, j)) * rng.normal();
        s.raw[j] = draw;
        s.clamped[j] = std::clamp(draw, -kActionBound, kActionBound);
    }
    s.logprob = gaussian_logprob(mean, ls, s.raw);
    return s;
}

ActionVector act(const Net& policy, const Mat& window, bool stochastic, Rng& rng) {
    if (stochastic) return sample_action(policy, window, rng).clamped;
    const Mat mean = policy.forward_value(window);
    ActionVector a{};
    for (int j = 0; j < mean.cols; j++) a[j] = std::clamp(mean(0, j), -kActionBound, kActionBound);
    return a;
}

void gae(const std::vector<double>& rewards, const std::vector<double>& values,
         const std::vector<uint8_t>& dones, double bootstrap, double gamma, double lam,
         std::vector<double>& adv_out, std::vector<double>& target_out) {
    const size_t n = rewards.size();
    if (values.size() != n || dones.size() != n)
        throw ConfigError("advantage estimation requires equally long reward/value/done sequences");
    adv_out.assign(n, 0.0);
    target_out.assign(n, 0.0);
    double carry = 0.0;
    for (size_t i = n; i-- > 0;) {
        const double not_done = dones[i] ? 0.0 : 1.0;
        const double next_v = (i + 1 < n) ? values[i + 1] : bootstrap;
        const double delta = rewards[i] + gamma * next_v * not_done - values[i];
        carry = delta + gamma * lam * not_done * carry;
        adv_out[i] = carry;
        target_out[i] = carry + values[i];
    }
}

void normalize_advantages(std::vector<double>& adv) {
    const size_t n = adv.size();
    if (n < 2) return;
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean /= double(n);
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    var /= double(n);
    const double sd = std::sqrt(var);
    if (sd < 1e-12) {
        for (double& a : adv) a -= mean;
        return;
    }
    for (double& a : adv) a = (a - mean) / (sd + 1e-6);
}

void RewardNormalizer::observe_and_scale(std::vector<double>& rewards,
                                         const std::vector<uint8_t>& dones) {
    if (rewards.size() != dones.size())
        throw ConfigError("reward scaling requires matching reward/done lengths");
    for (size_t i = 0; i < rewards.size(); i++) {
        running_return_ = gamma_ * running_return_ + rewards[i];
        count_++;
        const double d = running_return_ - mean_;
        mean_ += d / double(count_);
        m2_ += d * (running_return_ - mean_);
        if (dones[i]) running_return_ = 0.0;
    }
    const double sd = stddev();
    if (count_ < 2 || sd < 1e-12) return;
    for (double& r : rewards) r /= (sd + 1e-8);
}

double RewardNormalizer::stddev() const {
    if (count_ < 2) return 0.0;
    return std::sqrt(m2_ / double(count_ - 1));
}

namespace {

// Scale both gradient sets so their joint L2 norm is at most max_norm;
// returns the pre-clip norm.
double clip_joint(std::vector<Mat>& gp, std::vector<Mat>& gv, double max_norm) {
    const double np = global_grad_norm(gp), nv = global_grad_norm(gv);
    const double total = std::sqrt(np * np + nv * nv);
    if (total > max_norm && total > 0.0) {
        const double s = max_norm / total;
        for (Mat& gmat : gp)
            for (double& x : gmat.a) x *= s;
        for (Mat& gmat : gv)
            for (double& x : gmat.a) x *= s;
    }
    return total;
}

std::vector<Mat> pull_grads(const Tape& tape, const std::vector<int>& ids) {
    std::vector<Mat> out(ids.size());
    for (size_t i = 0; i < ids.size(); i++) out[i] = tape.grad(ids[i]);
    return out;
}

}  // namespace

LossReport ppo_update(const RolloutBuffer& buf, Net& policy, Net& value, Adam& opt_policy,
                      Adam& opt_value, const TrainConfig& cfg, Rng& rng) {
    LossReport rep;
    const int N = int(buf.steps.size());
    if (N == 0) return rep;
    if (int(buf.advantages.size()) != N || int(buf.returns.size()) != N)
        throw ConfigError("rollout buffer missing advantage/target vectors");
    if (policy.log_std_index() < 0)
        throw ConfigError("policy network must carry an exploration spread");
    const int D = policy.config().out_dim;

    std::vector<int> order(N);
    std::iota(order.begin(), order.end(), 0);

    double actor_acc = 0.0, critic_acc = 0.0, entropy_acc = 0.0, gnorm_acc = 0.0;
    int mbs = 0;

    for (int epoch = 0; epoch < cfg.epochs; epoch++) {
        rng.shuffle(order);
        for (int start = 0; start < N; start += cfg.minibatch) {
            const int end = std::min(N, start + cfg.minibatch);
            const int B = end - start;
            Mat raw(B, D), adv(B, 1), ret(B, 1), lp_old(B, 1);
            for (int i = 0; i < B; i++) {
                const int k = order[start + i];
                for (int j = 0; j < D; j++) raw(i, j) = buf.steps[k].raw_action[j];
                adv(i, 0) = buf.advantages[k];
                ret(i, 0) = buf.returns[k];
                lp_old(i, 0) = buf.steps[k].logprob;
            }

            Tape tape;
            std::vector<int> pp = policy.lift(tape, true);
            std::vector<int> vp = value.lift(tape, true);
            const int ls = pp[policy.log_std_index()];  // 1 x D

            std::vector<int> mrows, vrows;
            mrows.reserve(B);
            vrows.reserve(B);
            for (int i = 0; i < B; i++) {
                const int win = tape.input(buf.steps[order[start + i]].window, false);
                mrows.push_back(policy.forward(tape, pp, win));
                vrows.push_back(value.forward(tape, vp, win));
            }
            const int mean_node = (B == 1) ? mrows[0] : tape.concat_rows(mrows);
            const int v_node = (B == 1) ? vrows[0] : tape.concat_rows(vrows);

            // log-density of the stored raw draws under the current Gaussian
            const int raw_node = tape.input(raw, false);
            const int inv_sd = tape.exp_(tape.scale(ls, -1.0));
            const int z = tape.mul_rowvec(tape.sub(raw_node, mean_node), inv_sd);
            const int inner = tape.add_rowvec(tape.scale(tape.square(z), -0.5),
                                              tape.scale(ls, -1.0));
            const int lp = tape.add_const(tape.row_sum(inner),
                                          -0.5 * D * std::log(2.0 * M_PI));

            const int ratio = tape.exp_(tape.sub(lp, tape.input(lp_old, false)));
            const int adv_node = tape.input(adv, false);
            const int surr1 = tape.mul(ratio, adv_node);
            const int clipped = tape.clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
            const int surr2 = tape.mul(clipped, adv_node);
            const int obj = tape.mean_all(tape.min_(surr1, surr2));

            const int critic = tape.mean_all(tape.square(tape.sub(v_node, tape.input(ret, false))));
            const int entropy = tape.add_const(tape.sum_all(ls),
                                               0.5 * D * std::log(2.0 * M_PI * M_E));

            int loss = tape.add(tape.scale(obj, -1.0), tape.scale(critic, cfg.value_coef));
            loss = tape.add(loss, tape.scale(entropy, -cfg.entropy_coef));

            if (!std::isfinite(tape.val(loss)(0, 0))) {
                rep.aborted = true;
                break;
            }

            tape.backward(loss);
            std::vector<Mat> gp = pull_grads(tape, pp);
            std::vector<Mat> gv = pull_grads(tape, vp);
            const double gn = clip_joint(gp, gv, cfg.grad_clip);
            opt_policy.step(policy.params(), gp, cfg.lr);
            opt_value.step(value.params(), gv, cfg.lr);

            actor_acc += -tape.val(obj)(0, 0);
            critic_acc += tape.val(critic)(0, 0);
            entropy_acc += tape.val(entropy)(0, 0);
            gnorm_acc += gn;
            mbs++;
        }
        if (rep.aborted) break;
    }

    rep.minibatches = mbs;
    if (mbs > 0) {
        rep.actor = actor_acc / mbs;
        rep.critic = critic_acc / mbs;
        rep.entropy = entropy_acc / mbs;
        rep.grad_norm = gnorm_acc / mbs;
    }
    return rep;
}

BcReport bc_pretrain(const ReferenceDataset& ds, Net& policy, const TrainConfig& cfg, Rng& rng) {
    cfg.validate();
    const int P = int(ds.pair_count());
    if (P < 4) throw ConfigError("behavior-cloning dataset too small");
    if (ds.K != policy.config().K || ds.obs_dim != policy.config().obs_dim ||
        ds.act_dim != policy.config().out_dim)
        throw ConfigError("dataset geometry does not match the policy network");
    auto window_mat = [&](int k) {
        Mat w(ds.K, ds.obs_dim);
        const float* p = ds.window(size_t(k));
        for (size_t i = 0; i < w.size(); i++) w.a[i] = p[i];
        return w;
    };

    std::vector<int> order(P);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const int holdout = std::max(1, int(std::lround(cfg.bc_holdout * P)));
    if (holdout >= P) throw ConfigError("holdout fraction leaves no training data");
    std::vector<int> test_idx(order.begin(), order.begin() + holdout);
    std::vector<int> train_idx(order.begin() + holdout, order.end());

    const int D = policy.config().out_dim;
    Adam opt;

    auto eval_mse = [&](const std::vector<int>& idx) {
        double acc = 0.0;
        for (int k : idx) {
            const Mat mean = policy.forward_value(window_mat(k));
            const float* a = ds.action(size_t(k));
            for (int j = 0; j < D; j++) {
                const double e = double(a[j]) - mean(0, j);
                acc += e * e;
            }
        }
        return acc / (double(idx.size()) * D);
    };

    BcReport rep;
    int rises = 0;
    double prev_train = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < cfg.bc_epochs; epoch++) {
        rng.shuffle(train_idx);
        for (size_t start = 0; start < train_idx.size(); start += size_t(cfg.bc_minibatch)) {
            const size_t end = std::min(train_idx.size(), start + size_t(cfg.bc_minibatch));
            const int B = int(end - start);
            Tape tape;
            std::vector<int> pp = policy.lift(tape, true);
            std::vector<int> rows;
            rows.reserve(B);
            Mat target(B, D);
            for (int i = 0; i < B; i++) {
                const int k = train_idx[start + i];
                rows.push_back(policy.forward(tape, pp, tape.input(window_mat(k), false)));
                const float* a = ds.action(size_t(k));
                for (int j = 0; j < D; j++) target(i, j) = double(a[j]);
            }
            const int pred = (B == 1) ? rows[0] : tape.concat_rows(rows);
            const int loss = tape.mean_all(tape.square(tape.sub(pred, tape.input(target, false))));
            if (!std::isfinite(tape.val(loss)(0, 0))) {
                rep.diverged = true;
                rep.epochs_run = epoch;
                return rep;
            }
            tape.backward(loss);
            std::vector<Mat> gp = pull_grads(tape, pp);
            clip_grad_norm(gp, 10.0);
            opt.step(policy.params(), gp, cfg.bc_lr);
        }
        rep.train_mse.push_back(eval_mse(train_idx));
        rep.holdout_mse.push_back(eval_mse(test_idx));
        rep.epochs_run = epoch + 1;
        const double tr = rep.train_mse.back();
        rises = (tr > prev_train) ? rises + 1 : 0;
        prev_train = tr;
        if (rises >= 5) {
            rep.diverged = true;
            break;
        }
    }
    if (!rep.train_mse.empty()) {
        rep.final_train = rep.train_mse.back();
        rep.final_holdout = rep.holdout_mse.back();
    }
    return rep;
}

std::vector<EpisodeLog> train_loop(SwimEnv& env, Net& policy, Net& value, const TrainConfig& cfg,
                                   const std::function<void(const EpisodeLog&)>& on_episode,
                                   const std::function<void(int)>& on_checkpoint) {
    cfg.validate();
    const int K = policy.config().K;
    const int obs_dim = policy.config().obs_dim;

    Rng update_rng(Rng::derive_seed(cfg.seed, 1));
    Rng action_rng(Rng::derive_seed(cfg.seed, 2));
    Adam opt_policy, opt_value;
    RewardNormalizer rnorm(cfg.gamma);

    std::vector<EpisodeLog> logs;
    logs.reserve(cfg.episodes);

    for (int ep = 0; ep < cfg.episodes; ep++) {
        std::deque<Observation> hist;
        hist.push_back(env.reset(Rng::derive_seed(cfg.seed, 100 + uint64_t(ep))));

        RolloutBuffer buf;
        double reward_sum = 0.0, impulse_sum = 0.0;
        bool early = false;
        for (;;) {
            Mat window = make_window(hist, K, obs_dim);
            const ActionSample as = sample_action(policy, window, action_rng);
            const double v = value.forward_value(window)(0, 0);

            SwimEnv::StepResult sr = env.env_step(as.clamped);
            reward_sum += sr.reward.total;
            impulse_sum += sr.sample.Fx * sr.sample.dt;

            const bool stopped = sr.done && !sr.reason.empty();
            Transition t;
            t.window = std::move(window);
            t.raw_action = as.raw;
            t.logprob = as.logprob;
            t.reward = sr.reward.total;
            t.value = v;
            t.done = stopped;  // truncation at the step limit still bootstraps
            buf.steps.push_back(std::move(t));

            hist.push_back(sr.obs);
            while (int(hist.size()) > K) hist.pop_front();

            if (sr.done) {
                early = stopped;
                buf.bootstrap_value =
                    early ? 0.0 : value.forward_value(make_window(hist, K, obs_dim))(0, 0);
                break;
            }
        }

        const int N = int(buf.steps.size());
        std::vector<double> rewards(N), values(N);
        std::vector<uint8_t> dones(N, 0);
        for (int i = 0; i < N; i++) {
            rewards[i] = buf.steps[i].reward;
            values[i] = buf.steps[i].value;
            dones[i] = buf.steps[i].done ? 1 : 0;
        }
        const double raw_mean = (N > 0) ? reward_sum / N : 0.0;

        rnorm.observe_and_scale(rewards, dones);
        gae(rewards, values, dones, buf.bootstrap_value, cfg.gamma, cfg.lam, buf.advantages,
            buf.returns);
        normalize_advantages(buf.advantages);
        for (int i = 0; i < N; i++) buf.steps[i].reward = rewards[i];

        const LossReport lr = ppo_update(buf, policy, value, opt_policy, opt_value, cfg, update_rng);

        EpisodeLog log;
        log.episode = ep;
        log.steps = N;
        log.mean_reward = raw_mean;
        log.total_impulse = impulse_sum;
        log.actor_loss = lr.actor;
        log.critic_loss = lr.critic;
        log.early_stop = early ? 1 : 0;
        log.update_aborted = lr.aborted;
        try {
            const MetricsReport mr = report_from_trajectory(env.trajectory(), CoeffParams{});
            log.C_T = mr.coeff.C_T;
            log.eta = mr.eta_defined ? mr.eta : 0.0;
        } catch (const ConfigError&) {
            // episode too short for a stable averaging window; leave zeros
        }
        logs.push_back(log);
        if (on_episode) on_episode(log);
        const bool at_checkpoint = (ep + 1) % cfg.checkpoint_every == 0 ||
                                   ep + 1 == cfg.episodes || log.update_aborted;
        if (on_checkpoint && at_checkpoint) on_checkpoint(ep);
        // a non-finite loss abandons the rest of the run; parameters are still
        // the last finite state, checkpointed just above
        if (log.update_aborted) break;
    }
    return logs;
}

}  // namespace finswim
