#ifndef FINSWIM_GAIT_HPP
#define FINSWIM_GAIT_HPP

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "finswim/metrics.hpp"
#include "finswim/swim_env.hpp"

namespace finswim {

/** Sinusoidal action generator a_i = A_i cos(w_i t + p_i). The three link
 *  frequencies are a single shared value; the lateral channel may differ. */
struct GaitParams {
    std::array<double, 4> A{};
    std::array<double, 4> omega{};
    std::array<double, 4> phase{};

    void validate() const;
    /** Lexicographic key (A, omega, phase), used for stable sweep ordering. */
    bool operator<(const GaitParams& o) const;
    bool operator==(const GaitParams& o) const;
};

ActionVector trig_action(const GaitParams& g, double t_n);

struct SweepResult {
    GaitParams params;
    MetricsReport report;
    bool valid = false;
};

/** Per-parameter value lists expanded to a cartesian product. Empty A4 ties
 *  the lateral amplitude to A1; the shared link frequency also drives the
 *  lateral channel. */
struct SweepGrid {
    std::vector<double> A1{0.01, 0.02, 0.03};
    std::vector<double> A2{0.01, 0.02, 0.03};
    std::vector<double> A3{0.01, 0.02, 0.03};
    std::vector<double> A4;
    std::vector<double> omega{0.5, 1.0, 1.5, 2.0};
    std::vector<double> p2{0.0, M_PI / 3.0, 2.0 * M_PI / 3.0, M_PI};
    std::vector<double> p3{0.0, M_PI / 3.0, 2.0 * M_PI / 3.0, M_PI};
    std::vector<double> p4{0.0};

    /** Deduplicated, sorted cartesian product. Throws ConfigError when any
     *  axis is empty or a value is out of range. */
    std::vector<GaitParams> expand() const;
};

/** Roll out one gait to episode end (or early stop) and evaluate it. */
SweepResult evaluate_gait(const GaitParams& g, SwimEnv& env);

/** One rollout per grid point. A rollout that fails numerically is marked
 *  invalid instead of aborting the sweep. */
std::vector<SweepResult> brute_force_search(
    const SweepGrid& grid, SwimEnv& env, size_t budget,
    const std::function<void(size_t, size_t, const SweepResult&)>& on_result = {});

/** All results not dominated in (C_T, eta). Invalid or eta-undefined entries
 *  are excluded; an all-excluded input yields an empty front. */
std::vector<SweepResult> pareto_front(const std::vector<SweepResult>& results);

/** Behaviour-cloning source data: observation-history windows paired with the
 *  generating gait's actions, stored as 32-bit floats. */
struct ReferenceDataset {
    int K = 0;
    int obs_dim = 0;
    int act_dim = 4;
    std::vector<GaitParams> sources;
    std::vector<float> data;  ///< per pair: K*obs_dim window floats + act_dim action floats

    size_t pair_count() const {
        size_t rec = size_t(K) * obs_dim + act_dim;
        return rec ? data.size() / rec : 0;
    }
    const float* window(size_t i) const { return data.data() + i * (size_t(K) * obs_dim + act_dim); }
    const float* action(size_t i) const { return window(i) + size_t(K) * obs_dim; }
};

/** Record rollouts of the given gaits. Only full K-length windows are kept:
 *  an N-step episode contributes N-K+1 pairs. */
ReferenceDataset collect_reference(const std::vector<GaitParams>& gaits, SwimEnv& env,
                                   int episodes_per_gait);

void save_dataset(const ReferenceDataset& ds, const std::string& path);
ReferenceDataset load_dataset(const std::string& path);

}  // namespace finswim

#endif
