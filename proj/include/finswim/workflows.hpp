#ifndef FINSWIM_WORKFLOWS_HPP
#define FINSWIM_WORKFLOWS_HPP

#include <optional>
#include <string>
#include <vector>

#include "finswim/gait.hpp"
#include "finswim/rl.hpp"
#include "finswim/swim_env.hpp"
#include "finswim/validate.hpp"

namespace finswim {

/** Ablation variants: sequence architecture x observation set x warm start. */
struct Scenario {
    std::string name;       ///< PTPPO-20, PTPPO-7, PMPPO or TPPO-20
    Arch arch = Arch::transformer;
    bool use_pressure = true;
    bool pretrained = true;
};
Scenario resolve_scenario(const std::string& name);

/** Everything one invocation needs, resolved from the JSON config plus CLI
 *  overrides. Serializes back to JSON losslessly for the output manifest. */
struct RunConfig {
    std::string workflow;
    std::string out_dir = "out";
    uint64_t seed = 0;
    int jobs = 1;

    EpisodeConfig env;
    TrainConfig train;
    std::string scenario = "PTPPO-20";
    std::string bc_checkpoint;       ///< train: warm-start weights (pretrained scenarios)

    // pretrain
    std::optional<GaitParams> pretrain_gait;   ///< explicit reference gait...
    std::string pretrain_pareto;               ///< ...or pick one from this pareto CSV
    std::string pretrain_pick = "top_eta";     ///< top_eta | top_ct
    int pretrain_episodes = 3;

    // sweep
    SweepGrid grid;
    bool sweep_static = true;        ///< also roll out the motionless body for reference

    // validate
    std::vector<int> val_densities{16, 32, 64, 96, 128};
    double val_Sr = 0.3;
    double val_AD = 2.0;
    int val_transient_periods = 2;
    int val_average_periods = 2;
    std::vector<double> transition_Sr{0.3, 0.45};
    int transition_density = 96;
    int transition_iterations = 6;
    double transition_A_lo = 0.2;
    double transition_A_hi = 2.5;
    std::string reference_table;     ///< CSV of (Sr, A_D) reference points

    // eval
    std::string eval_checkpoint;
    int eval_episodes = 1;
    bool eval_stochastic = false;
    std::vector<double> snapshot_times;
    bool eval_profiles = true;

    // export
    std::vector<std::string> export_inputs;  ///< .fld files to convert

    void validate_for_workflow() const;
};

/** Parse the JSON config text; `workflow` comes from the CLI argument. */
RunConfig parse_run_config(const std::string& json_text, const std::string& workflow);

/** Effective-config JSON (round-trips through parse_run_config). */
std::string run_config_json(const RunConfig& cfg);

/** Execute one workflow end to end; outputs land under cfg.out_dir together
 *  with a manifest of file hashes. */
void run_workflow(const RunConfig& cfg);

/** Networks for a scenario. The value head mirrors the policy body. */
NetConfig policy_net_config(const Scenario& sc, const EpisodeConfig& env);
NetConfig value_net_config(const Scenario& sc, const EpisodeConfig& env);

}  // namespace finswim

#endif
