#include "finswim/workflows.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "finswim/io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace finswim {

namespace {

/* ---------------------------------------------------------------- config */

// Typed access to one JSON object with typo protection: any key that was
// never consumed is a config error.
class Section {
  public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j.is_object()) throw ConfigError(strfmt("%s must be a JSON object", name_.c_str()));
    }

    template <class T>
    void get(const char* key, T& out) {
        auto it = j_.find(key);
        if (it == j_.end()) return;
        seen_.insert(key);
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw ConfigError(strfmt("%s.%s has the wrong type", name_.c_str(), key));
        }
    }

    bool has(const char* key) const { return j_.contains(key); }

    /** Child object, marked consumed; nullptr when absent. */
    const json* child(const char* key) {
        auto it = j_.find(key);
        if (it == j_.end()) return nullptr;
        seen_.insert(key);
        return &*it;
    }

    void finish() const {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key()))
                throw ConfigError(strfmt("unknown key %s.%s", name_.c_str(), item.key().c_str()));
    }

  private:
    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

GaitParams gait_from_json(const json& j, const std::string& name) {
    Section s(j, name);
    std::array<double, 4> A{}, omega{}, phase{};
    s.get("A", A);
    s.get("omega", omega);
    s.get("phase", phase);
    s.finish();
    GaitParams g;
    g.A = A;
    g.omega = omega;
    g.phase = phase;
    g.validate();
    return g;
}

json gait_to_json(const GaitParams& g) {
    return json{{"A", g.A}, {"omega", g.omega}, {"phase", g.phase}};
}

void require_file(const std::string& path, const char* what) {
    if (path.empty()) throw ConfigError(strfmt("%s path is required", what));
    if (!fs::exists(path)) throw ConfigError(strfmt("%s not found: %s", what, path.c_str()));
}

/* ------------------------------------------------------------- CSV input */

// Comment- and blank-line tolerant CSV reader used for the small tables the
// workflows consume (pareto picks, transition references, the sweep ledger).
std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError(strfmt("cannot open %s", path.c_str()));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        rows.push_back(std::move(cells));
    }
    return rows;
}

double cell_num(const std::vector<std::string>& row, size_t i, const char* what) {
    if (i >= row.size()) throw FormatError(strfmt("%s: missing column %zu", what, i));
    try {
        size_t pos = 0;
        double v = std::stod(row[i], &pos);
        if (pos != row[i].size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw FormatError(strfmt("%s: '%s' is not a number", what, row[i].c_str()));
    }
}

size_t column_index(const std::vector<std::string>& header, const std::string& name,
                    const char* what) {
    for (size_t i = 0; i < header.size(); i++)
        if (header[i] == name) return i;
    throw FormatError(strfmt("%s: missing column '%s'", what, name.c_str()));
}

/* ------------------------------------------------------------- manifest */

void write_manifest(const RunConfig& cfg, std::vector<std::string> outputs) {
    std::sort(outputs.begin(), outputs.end());
    outputs.erase(std::unique(outputs.begin(), outputs.end()), outputs.end());
    json m;
    m["workflow"] = cfg.workflow;
    m["config"] = json::parse(run_config_json(cfg));
    json files = json::array();
    for (const std::string& rel : outputs) {
        const std::string full = (fs::path(cfg.out_dir) / rel).string();
        files.push_back({{"path", rel}, {"sha256", sha256_file(full)}});
    }
    m["outputs"] = files;
    const std::string path = (fs::path(cfg.out_dir) / "manifest.json").string();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError(strfmt("cannot open %s for writing", path.c_str()));
    os << m.dump(2) << '\n';
    if (!os) throw IoError(strfmt("write failed for %s", path.c_str()));
}

std::string out_path(const RunConfig& cfg, const std::string& rel) {
    return (fs::path(cfg.out_dir) / rel).string();
}

/* ------------------------------------------------------ sweep row codecs */

const std::vector<std::string> kSweepHeader = {
    "idx", "A1", "A2", "A3", "A4", "om1", "om2", "om3", "om4", "p1", "p2", "p3", "p4",
    "valid", "C_T", "C_L", "C_P", "eta_defined", "eta", "period_defined", "period", "St",
    "t0", "t1"};

std::vector<double> sweep_row(size_t idx, const SweepResult& r) {
    const MetricsReport& m = r.report;
    std::vector<double> row{double(idx)};
    for (double v : r.params.A) row.push_back(v);
    for (double v : r.params.omega) row.push_back(v);
    for (double v : r.params.phase) row.push_back(v);
    row.insert(row.end(), {r.valid ? 1.0 : 0.0, m.coeff.C_T, m.coeff.C_L, m.coeff.C_P,
                           m.eta_defined ? 1.0 : 0.0, m.eta, m.period_defined ? 1.0 : 0.0,
                           m.period, m.St, m.t0, m.t1});
    return row;
}

SweepResult sweep_from_row(const std::vector<std::string>& row) {
    if (row.size() != kSweepHeader.size()) throw FormatError("sweep ledger: wrong column count");
    SweepResult r;
    auto num = [&](size_t i) { return cell_num(row, i, "sweep ledger"); };
    for (int k = 0; k < 4; k++) {
        r.params.A[k] = num(1 + k);
        r.params.omega[k] = num(5 + k);
        r.params.phase[k] = num(9 + k);
    }
    r.valid = num(13) != 0.0;
    r.report.coeff.C_T = num(14);
    r.report.coeff.C_L = num(15);
    r.report.coeff.C_P = num(16);
    r.report.eta_defined = num(17) != 0.0;
    r.report.eta = num(18);
    r.report.period_defined = num(19) != 0.0;
    r.report.period = num(20);
    r.report.St = num(21);
    r.report.t0 = num(22);
    r.report.t1 = num(23);
    return r;
}

json env_to_json(const EpisodeConfig& e) {
    return json{{"max_steps", e.max_steps}, {"alpha", e.alpha},     {"beta", e.beta},
                {"history_K", e.history_K}, {"seed", e.seed},       {"use_pressure", e.use_pressure},
                {"density", e.density},     {"Re", e.Re},           {"warmup_steps", e.warmup_steps}};
}

json grid_to_json(const SweepGrid& g) {
    return json{{"A1", g.A1}, {"A2", g.A2}, {"A3", g.A3}, {"A4", g.A4},
                {"omega", g.omega}, {"p2", g.p2}, {"p3", g.p3}, {"p4", g.p4}};
}

// The ledger only carries over to a run with the same rollout-determining
// inputs; anything else must start from an empty directory.
std::string sweep_scope_hash(const RunConfig& cfg) {
    json scope{{"env", env_to_json(cfg.env)}, {"seed", cfg.seed}, {"grid", grid_to_json(cfg.grid)}};
    const std::string text = scope.dump();
    return sha256_bytes(text.data(), text.size());
}

/* ------------------------------------------------------------ workflows */

void run_validation_wf(const RunConfig& cfg, std::vector<std::string>& outputs) {
    FoilCase base;
    base.Sr = cfg.val_Sr;
    base.A_D = cfg.val_AD;
    base.transient_periods = cfg.val_transient_periods;
    base.average_periods = cfg.val_average_periods;

    {
        CsvWriter conv(out_path(cfg, "convergence.csv"), {"density", "C_T", "C_P", "eta"});
        convergence_ladder(base, cfg.val_densities, [&](const ConvergenceRow& r) {
            conv.row({double(r.density), r.C_T, r.C_P, r.eta});
            std::printf("[validate] density %3d: C_T=%.5f C_P=%.5f eta=%.5f\n", r.density, r.C_T,
                        r.C_P, r.eta);
            std::fflush(stdout);
        });
        outputs.push_back("convergence.csv");
    }

    // optional digitized reference points (Sr, A_D) for the transition curve
    std::vector<std::pair<double, double>> ref;
    if (!cfg.reference_table.empty()) {
        auto rows = read_csv_rows(cfg.reference_table);
        if (rows.empty()) throw FormatError("reference table is empty");
        const size_t sr_col = column_index(rows[0], "Sr", "reference table");
        const size_t ad_col = column_index(rows[0], "A_D", "reference table");
        for (size_t i = 1; i < rows.size(); i++)
            ref.emplace_back(cell_num(rows[i], sr_col, "reference table"),
                             cell_num(rows[i], ad_col, "reference table"));
    }

    CsvWriter tr(out_path(cfg, "transition.csv"),
                 {"Sr", "ok", "A_D", "iterations", "ref_A_D", "rel_err"});
    for (double sr : cfg.transition_Sr) {
        FoilCase c = base;
        c.Sr = sr;
        c.density = cfg.transition_density;
        std::printf("[validate] transition search at Sr=%.4f (density %d)\n", sr, c.density);
        std::fflush(stdout);
        TransitionResult r =
            find_transition(c, cfg.transition_A_lo, cfg.transition_A_hi, cfg.transition_iterations,
                            [&](double ad, double ct) {
                                std::printf("[validate]   A_D=%.5f -> C_T=%+.6f\n", ad, ct);
                                std::fflush(stdout);
                            });
        double ref_ad = std::nan(""), rel = std::nan("");
        for (const auto& [rsr, rad] : ref)
            if (std::abs(rsr - sr) < 1e-9) ref_ad = rad;
        if (r.ok && std::isfinite(ref_ad) && ref_ad != 0.0)
            rel = std::abs(r.A_D_star - ref_ad) / std::abs(ref_ad);
        tr.row({sr, r.ok ? 1.0 : 0.0, r.A_D_star, double(r.iterations), ref_ad, rel});
    }
    outputs.push_back("transition.csv");
}

void run_sweep_wf(const RunConfig& cfg, std::vector<std::string>& outputs) {
    const std::vector<GaitParams> combos = cfg.grid.expand();
    const size_t total = combos.size();
    const std::string scope = sweep_scope_hash(cfg);
    const std::string ledger_path = out_path(cfg, "sweep_ledger.csv");

    std::vector<std::optional<SweepResult>> results(total);
    size_t resumed = 0;
    if (fs::exists(ledger_path)) {
        std::ifstream is(ledger_path);
        std::string first;
        std::getline(is, first);
        if (first != "# scope " + scope)
            throw ConfigError(
                "existing sweep ledger belongs to a different configuration; "
                "start in a clean output directory");
        auto rows = read_csv_rows(ledger_path);  // drops the scope comment
        for (size_t i = 1; i < rows.size(); i++) {
            const size_t idx = size_t(cell_num(rows[i], 0, "sweep ledger"));
            if (idx != i - 1 || idx >= total) throw FormatError("sweep ledger is corrupt");
            results[idx] = sweep_from_row(rows[i]);
            resumed = idx + 1;
        }
        if (resumed > 0)
            std::printf("[sweep] resuming: %zu of %zu rollouts already in the ledger\n", resumed,
                        total);
    }

    std::ofstream ledger;
    if (resumed == 0) {
        ledger.open(ledger_path, std::ios::out);
        if (!ledger) throw IoError(strfmt("cannot open %s for writing", ledger_path.c_str()));
        ledger << "# scope " << scope << '\n';
        for (size_t i = 0; i < kSweepHeader.size(); i++)
            ledger << (i ? "," : "") << kSweepHeader[i];
        ledger << '\n';
        ledger.flush();
    } else {
        ledger.open(ledger_path, std::ios::out | std::ios::app);
        if (!ledger) throw IoError(strfmt("cannot open %s for append", ledger_path.c_str()));
    }

    // Threaded rollouts with strictly ordered ledger appends: a finished row
    // is buffered until every earlier combination is written, so the ledger
    // is a clean prefix independent of scheduling.
    std::mutex mu;
    size_t write_cursor = resumed;
    std::atomic<size_t> next{resumed};
    std::exception_ptr first_error;

    auto append_row = [&](size_t idx, const SweepResult& r) {
        const std::vector<double> row = sweep_row(idx, r);
        for (size_t i = 0; i < row.size(); i++) ledger << (i ? "," : "") << fmt_g17(row[i]);
        ledger << '\n';
        ledger.flush();
    };

    auto worker = [&]() {
        try {
            SwimEnv env(cfg.env);
            for (;;) {
                const size_t i = next.fetch_add(1);
                if (i >= total) break;
                SweepResult r = evaluate_gait(combos[i], env);
                std::lock_guard<std::mutex> lk(mu);
                results[i] = std::move(r);
                while (write_cursor < total && results[write_cursor]) {
                    append_row(write_cursor, *results[write_cursor]);
                    write_cursor++;
                }
                std::printf("[sweep] %zu/%zu done\n", write_cursor, total);
                std::fflush(stdout);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lk(mu);
            if (!first_error) first_error = std::current_exception();
            next.store(total);  // drain remaining work
        }
    };

    const int n_threads = std::max(1, std::min<int>(cfg.jobs, int(total - std::min(total, resumed)) + 1));
    std::vector<std::thread> pool;
    for (int k = 0; k < n_threads; k++) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    ledger.close();
    outputs.push_back("sweep_ledger.csv");

    std::vector<SweepResult> all;
    all.reserve(total);
    for (size_t i = 0; i < total; i++) all.push_back(*results[i]);

    {
        CsvWriter res(out_path(cfg, "results.csv"), kSweepHeader);
        for (size_t i = 0; i < total; i++) res.row(sweep_row(i, all[i]));
        outputs.push_back("results.csv");
    }
    {
        const std::vector<SweepResult> front = pareto_front(all);
        CsvWriter par(out_path(cfg, "pareto.csv"), kSweepHeader);
        for (size_t i = 0; i < front.size(); i++) par.row(sweep_row(i, front[i]));
        outputs.push_back("pareto.csv");
        std::printf("[sweep] pareto front: %zu of %zu gaits\n", front.size(), total);
    }

    if (cfg.sweep_static) {
        SwimEnv env(cfg.env);
        const SweepResult st = evaluate_gait(GaitParams{}, env);
        CsvWriter sr(out_path(cfg, "static.csv"), kSweepHeader);
        sr.row(sweep_row(0, st));
        outputs.push_back("static.csv");
        std::printf("[sweep] static body: C_T=%.5f\n", st.report.coeff.C_T);
    }
}

GaitParams pick_from_pareto(const std::string& path, const std::string& pick) {
    auto rows = read_csv_rows(path);
    if (rows.size() < 2) throw FormatError("pareto table has no data rows");
    const auto& header = rows[0];
    const size_t valid_col = column_index(header, "valid", "pareto table");
    const size_t key_col = column_index(header, pick == "top_ct" ? "C_T" : "eta", "pareto table");
    const size_t eta_def_col = column_index(header, "eta_defined", "pareto table");

    size_t best = 0;
    double best_key = -std::numeric_limits<double>::infinity();
    for (size_t i = 1; i < rows.size(); i++) {
        if (cell_num(rows[i], valid_col, "pareto table") == 0.0) continue;
        if (cell_num(rows[i], eta_def_col, "pareto table") == 0.0) continue;
        const double key = cell_num(rows[i], key_col, "pareto table");
        if (key > best_key) {
            best_key = key;
            best = i;
        }
    }
    if (best == 0) throw ConfigError("pareto table has no valid gait to pick");

    GaitParams g;
    for (int k = 0; k < 4; k++) {
        g.A[k] = cell_num(rows[best], column_index(header, strfmt("A%d", k + 1), "pareto"), "pareto");
        g.omega[k] =
            cell_num(rows[best], column_index(header, strfmt("om%d", k + 1), "pareto"), "pareto");
        g.phase[k] =
            cell_num(rows[best], column_index(header, strfmt("p%d", k + 1), "pareto"), "pareto");
    }
    g.validate();
    return g;
}

void run_pretrain_wf(const RunConfig& cfg, std::vector<std::string>& outputs) {
    const GaitParams gait = cfg.pretrain_gait
                                ? *cfg.pretrain_gait
                                : pick_from_pareto(cfg.pretrain_pareto, cfg.pretrain_pick);

    SwimEnv env(cfg.env);
    std::printf("[pretrain] collecting %d reference episode(s)\n", cfg.pretrain_episodes);
    std::fflush(stdout);
    const ReferenceDataset ds = collect_reference({gait}, env, cfg.pretrain_episodes);
    if (ds.pair_count() == 0) throw SolverError("reference rollouts produced no training pairs");
    save_dataset(ds, out_path(cfg, "dataset.fsds"));
    outputs.push_back("dataset.fsds");

    const Scenario sc = resolve_scenario(cfg.scenario);
    Rng init_rng(Rng::derive_seed(cfg.seed, 10));
    Net policy(policy_net_config(sc, cfg.env), init_rng);
    Rng bc_rng(Rng::derive_seed(cfg.seed, 20));
    std::printf("[pretrain] cloning %zu pairs into the %s policy\n", ds.pair_count(),
                sc.arch == Arch::transformer ? "transformer" : "mlp");
    std::fflush(stdout);
    const BcReport rep = bc_pretrain(ds, policy, cfg.train, bc_rng);

    {
        CsvWriter loss(out_path(cfg, "bc_loss.csv"), {"epoch", "train_mse", "holdout_mse"});
        for (size_t e = 0; e < rep.train_mse.size(); e++)
            loss.row({double(e + 1), rep.train_mse[e], rep.holdout_mse[e]});
        outputs.push_back("bc_loss.csv");
    }

    Checkpoint ck;
    ck.episode = 0;
    ck.nets.push_back(snapshot_net("policy", policy));
    save_checkpoint(out_path(cfg, "bc_policy.ckpt"), ck);
    outputs.push_back("bc_policy.ckpt");

    // per-dimension action spread, the yardstick for the holdout error
    double var = 0.0;
    {
        const size_t P = ds.pair_count();
        std::array<double, 4> mean{};
        for (size_t i = 0; i < P; i++)
            for (int j = 0; j < 4; j++) mean[j] += double(ds.action(i)[j]);
        for (int j = 0; j < 4; j++) mean[j] /= double(P);
        for (size_t i = 0; i < P; i++)
            for (int j = 0; j < 4; j++) {
                const double d = double(ds.action(i)[j]) - mean[j];
                var += d * d;
            }
        var /= double(P * 4);
    }

    json summary{{"gait", gait_to_json(gait)},
                 {"pairs", ds.pair_count()},
                 {"epochs_run", rep.epochs_run},
                 {"final_train_mse", rep.final_train},
                 {"final_holdout_mse", rep.final_holdout},
                 {"action_variance", var},
                 {"diverged", rep.diverged}};
    {
        const std::string p = out_path(cfg, "pretrain_summary.json");
        std::ofstream os(p, std::ios::binary);
        if (!os) throw IoError(strfmt("cannot open %s for writing", p.c_str()));
        os << summary.dump(2) << '\n';
        outputs.push_back("pretrain_summary.json");
    }
    std::printf("[pretrain] holdout MSE %.3e over action variance %.3e (ratio %.3f)\n",
                rep.final_holdout, var, var > 0 ? rep.final_holdout / var : 0.0);
}

void run_train_wf(const RunConfig& cfg, std::vector<std::string>& outputs) {
    const Scenario sc = resolve_scenario(cfg.scenario);
    SwimEnv env(cfg.env);

    Rng prng(Rng::derive_seed(cfg.seed, 10));
    Rng vrng(Rng::derive_seed(cfg.seed, 11));
    Net policy(policy_net_config(sc, cfg.env), prng);
    Net value(value_net_config(sc, cfg.env), vrng);

    if (sc.pretrained) {
        const Checkpoint ck = load_checkpoint(cfg.bc_checkpoint);
        const NetSnapshot* snap = ck.find("policy");
        if (!snap) throw FormatError("warm-start checkpoint carries no policy weights");
        restore_net(policy, *snap);
        std::printf("[train] warm start from %s\n", cfg.bc_checkpoint.c_str());
    }

    CsvWriter log(out_path(cfg, "training_log.csv"),
                  {"episode", "steps", "mean_reward", "total_impulse", "C_T", "eta", "actor_loss",
                   "critic_loss", "early_stop", "update_aborted"});
    outputs.push_back("training_log.csv");

    auto on_episode = [&](const EpisodeLog& l) {
        log.row({double(l.episode), double(l.steps), l.mean_reward, l.total_impulse, l.C_T, l.eta,
                 l.actor_loss, l.critic_loss, double(l.early_stop), l.update_aborted ? 1.0 : 0.0});
        std::printf("[train] ep %3d  steps %3d  reward %+9.4f  impulse %+9.4f  C_T %+8.4f%s\n",
                    l.episode, l.steps, l.mean_reward, l.total_impulse, l.C_T,
                    l.update_aborted ? "  [update aborted]" : "");
        std::fflush(stdout);
    };
    auto on_checkpoint = [&](int ep) {
        Checkpoint ck;
        ck.episode = uint32_t(ep + 1);
        ck.nets.push_back(snapshot_net("policy", policy));
        ck.nets.push_back(snapshot_net("value", value));
        const std::string rel = strfmt("checkpoint_ep%04d.ckpt", ep + 1);
        save_checkpoint(out_path(cfg, rel), ck);
        outputs.push_back(rel);
    };

    const std::vector<EpisodeLog> logs = train_loop(env, policy, value, cfg.train, on_episode,
                                                    on_checkpoint);

    Checkpoint fin;
    fin.episode = logs.empty() ? 0 : uint32_t(logs.back().episode + 1);
    fin.nets.push_back(snapshot_net("policy", policy));
    fin.nets.push_back(snapshot_net("value", value));
    save_checkpoint(out_path(cfg, "checkpoint_final.ckpt"), fin);
    outputs.push_back("checkpoint_final.ckpt");

    if (!logs.empty() && logs.back().update_aborted)
        throw SolverError("training halted on a non-finite update; last good state checkpointed");
}

void run_eval_wf(const RunConfig& cfg, std::vector<std::string>& outputs) {
    const Checkpoint ck = load_checkpoint(cfg.eval_checkpoint);
    const NetSnapshot* snap = ck.find("policy");
    if (!snap) throw FormatError("checkpoint carries no policy weights");
    if (snap->cfg.obs_dim != cfg.env.obs_dim())
        throw ConfigError(strfmt("checkpoint expects %d-dim observations, environment provides %d",
                                 snap->cfg.obs_dim, cfg.env.obs_dim()));
    if (snap->cfg.K != cfg.env.history_K)
        throw ConfigError(strfmt("checkpoint window length %d != configured history %d",
                                 snap->cfg.K, cfg.env.history_K));
    Rng net_rng(0);
    Net policy(snap->cfg, net_rng);
    restore_net(policy, *snap);

    SwimEnv env(cfg.env);
    const int K = snap->cfg.K, obs_dim = snap->cfg.obs_dim;

    std::vector<double> pending = cfg.snapshot_times;
    std::sort(pending.begin(), pending.end());

    CsvWriter metrics(out_path(cfg, "metrics.csv"),
                      {"run_id", "C_T", "C_L", "C_P", "eta", "St", "T", "tau"});
    outputs.push_back("metrics.csv");

    for (int ep = 0; ep < cfg.eval_episodes; ep++) {
        std::deque<Observation> hist;
        hist.push_back(env.reset(Rng::derive_seed(cfg.seed, 500 + uint64_t(ep))));
        Rng act_rng(Rng::derive_seed(cfg.seed, 600 + uint64_t(ep)));

        const std::string traj_rel = strfmt("trajectory_ep%d.csv", ep);
        const std::string energy_rel = strfmt("energy_ep%d.csv", ep);
        CsvWriter traj(out_path(cfg, traj_rel),
                       {"t", "theta1", "theta2", "theta3", "omega1", "omega2", "omega3", "y", "a1",
                        "a2", "a3", "a4", "Fx", "Fy", "M1", "M2", "M3", "P"});
        CsvWriter energy(out_path(cfg, energy_rel),
                         {"t", "dWx1", "dWx2", "dWx3", "dWy1", "dWy2", "dWy3", "dWM1", "dWM2",
                          "dWM3"});
        outputs.push_back(traj_rel);
        outputs.push_back(energy_rel);

        size_t snap_idx = 0;
        std::string stop_reason;
        for (;;) {
            Mat window = make_window(hist, K, obs_dim);
            const ActionVector a = act(policy, window, cfg.eval_stochastic, act_rng);
            const SwimEnv::StepResult sr = env.env_step(a);

            const TrajectorySample& s = sr.sample;
            traj.row({s.t, s.theta[0], s.theta[1], s.theta[2], s.omega[0], s.omega[1], s.omega[2],
                      s.y, s.action[0], s.action[1], s.action[2], s.action[3], s.Fx, s.Fy, s.M[0],
                      s.M[1], s.M[2], s.P});
            const EnergyStep& e = sr.energy;
            energy.row({s.t, e.dW_x[0], e.dW_x[1], e.dW_x[2], e.dW_y[0], e.dW_y[1], e.dW_y[2],
                        e.dW_M[0], e.dW_M[1], e.dW_M[2]});

            if (ep == 0) {
                while (snap_idx < pending.size() && env.episode_time() >= pending[snap_idx]) {
                    const std::string rel = strfmt("snapshot_%02zu.fld", snap_idx);
                    write_field(out_path(cfg, rel), env.field());
                    outputs.push_back(rel);
                    snap_idx++;
                }
            }

            hist.push_back(sr.obs);
            while (int(hist.size()) > K) hist.pop_front();
            if (sr.done) {
                stop_reason = sr.reason;
                break;
            }
        }
        if (ep == 0 && snap_idx < pending.size())
            throw ConfigError(strfmt("snapshot time %g lies beyond the episode duration (%g)",
                                     pending[snap_idx], env.episode_time()));

        const double nan = std::nan("");
        try {
            const MetricsReport mr = report_from_trajectory(env.trajectory(), CoeffParams{});
            metrics.row({double(ep), mr.coeff.C_T, mr.coeff.C_L, mr.coeff.C_P,
                         mr.eta_defined ? mr.eta : nan, mr.period_defined ? mr.St : nan,
                         mr.period_defined ? mr.period : nan, mr.t1 - mr.t0});
        } catch (const ConfigError&) {
            metrics.row({double(ep), nan, nan, nan, nan, nan, nan, nan});
        }
        std::printf("[eval] episode %d: %d steps%s%s\n", ep, env.steps_done(),
                    stop_reason.empty() ? "" : ", early stop: ",
                    stop_reason.c_str());
        std::fflush(stdout);

        if (ep == 0 && cfg.eval_profiles) {
            const double x_tail = env.ref_x() + 3.0 * env.geometry().link_length;
            const int n = env.field().grid.ny;
            std::array<std::vector<double>, 3> prof;
            for (int k = 0; k < 3; k++)
                prof[k] = velocity_profile(env.field(), x_tail + (k + 1) * env.geometry().link_length,
                                           n);
            CsvWriter pw(out_path(cfg, "profiles.csv"), {"y", "u_1L", "u_2L", "u_3L"});
            const Grid& g = env.field().grid;
            for (int j = 0; j < n; j++)
                pw.row({g.origin.y + (j + 0.5) * g.height() / n, prof[0][j], prof[1][j],
                        prof[2][j]});
            outputs.push_back("profiles.csv");
        }
    }
}

void run_export_wf(const RunConfig& cfg, std::vector<std::string>& outputs) {
    for (const std::string& input : cfg.export_inputs) {
        const FlowField f = read_field(input);
        const Array2D vort = vorticity(f);
        const Grid& g = f.grid;
        const std::string rel = fs::path(input).stem().string() + "_cells.csv";
        CsvWriter cells(out_path(cfg, rel), {"x", "y", "u", "v", "p", "vorticity"});
        for (int j = 0; j < g.ny; j++)
            for (int i = 0; i < g.nx; i++) {
                const Vec2 c = g.cell_center(i, j);
                const double uc = 0.5 * (f.u(i, j) + f.u(i + 1, j));
                const double vc = 0.5 * (f.v(i, j) + f.v(i, j + 1));
                cells.row({c.x, c.y, uc, vc, f.p(i, j), vort(i, j)});
            }
        outputs.push_back(rel);
        std::printf("[export] %s -> %s\n", input.c_str(), rel.c_str());
    }
}

}  // namespace

/* -------------------------------------------------------------- public */

Scenario resolve_scenario(const std::string& name) {
    if (name == "PTPPO-20") return {name, Arch::transformer, true, true};
    if (name == "PTPPO-7") return {name, Arch::transformer, false, true};
    if (name == "PMPPO") return {name, Arch::mlp, true, true};
    if (name == "TPPO-20") return {name, Arch::transformer, true, false};
    throw ConfigError(strfmt(
        "unknown scenario '%s' (expected PTPPO-20, PTPPO-7, PMPPO or TPPO-20)", name.c_str()));
}

NetConfig policy_net_config(const Scenario& sc, const EpisodeConfig& env) {
    NetConfig c;
    c.arch = sc.arch;
    c.K = env.history_K;
    c.obs_dim = env.obs_dim();
    c.out_dim = 4;
    c.with_log_std = true;
    c.head_scale = 0.01;  // near-zero initial actions keep early episodes in bounds
    c.validate();
    return c;
}

NetConfig value_net_config(const Scenario& sc, const EpisodeConfig& env) {
    NetConfig c;
    c.arch = sc.arch;
    c.K = env.history_K;
    c.obs_dim = env.obs_dim();
    c.out_dim = 1;
    c.with_log_std = false;
    c.head_scale = 1.0;
    c.validate();
    return c;
}

RunConfig parse_run_config(const std::string& json_text, const std::string& workflow) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(strfmt("config is not valid JSON: %s", e.what()));
    }

    RunConfig c;
    c.workflow = workflow;
    Section top(j, "config");

    std::string wf_field;
    top.get("workflow", wf_field);
    if (!wf_field.empty() && wf_field != workflow)
        throw ConfigError(strfmt("config is for workflow '%s' but '%s' was requested",
                                 wf_field.c_str(), workflow.c_str()));
    top.get("out_dir", c.out_dir);
    top.get("seed", c.seed);
    top.get("jobs", c.jobs);
    top.get("scenario", c.scenario);
    top.get("bc_checkpoint", c.bc_checkpoint);

    bool env_seed_set = false, train_seed_set = false, pressure_set = false;
    if (const json* e = top.child("env")) {
        Section s(*e, "env");
        s.get("max_steps", c.env.max_steps);
        s.get("alpha", c.env.alpha);
        s.get("beta", c.env.beta);
        s.get("history_K", c.env.history_K);
        env_seed_set = s.has("seed");
        s.get("seed", c.env.seed);
        pressure_set = s.has("use_pressure");
        s.get("use_pressure", c.env.use_pressure);
        s.get("density", c.env.density);
        s.get("Re", c.env.Re);
        s.get("warmup_steps", c.env.warmup_steps);
        s.finish();
    }
    if (const json* t = top.child("train")) {
        Section s(*t, "train");
        s.get("gamma", c.train.gamma);
        s.get("lam", c.train.lam);
        s.get("clip_eps", c.train.clip_eps);
        s.get("lr", c.train.lr);
        s.get("epochs", c.train.epochs);
        s.get("minibatch", c.train.minibatch);
        s.get("entropy_coef", c.train.entropy_coef);
        s.get("value_coef", c.train.value_coef);
        s.get("grad_clip", c.train.grad_clip);
        s.get("episodes", c.train.episodes);
        train_seed_set = s.has("seed");
        s.get("seed", c.train.seed);
        s.get("checkpoint_every", c.train.checkpoint_every);
        s.get("bc_lr", c.train.bc_lr);
        s.get("bc_epochs", c.train.bc_epochs);
        s.get("bc_minibatch", c.train.bc_minibatch);
        s.get("bc_holdout", c.train.bc_holdout);
        s.finish();
    }
    if (const json* g = top.child("sweep")) {
        Section s(*g, "sweep");
        s.get("A1", c.grid.A1);
        s.get("A2", c.grid.A2);
        s.get("A3", c.grid.A3);
        s.get("A4", c.grid.A4);
        s.get("omega", c.grid.omega);
        s.get("p2", c.grid.p2);
        s.get("p3", c.grid.p3);
        s.get("p4", c.grid.p4);
        s.get("static", c.sweep_static);
        s.finish();
    }
    if (const json* p = top.child("pretrain")) {
        Section s(*p, "pretrain");
        if (const json* g = s.child("gait")) c.pretrain_gait = gait_from_json(*g, "pretrain.gait");
        s.get("pareto", c.pretrain_pareto);
        s.get("pick", c.pretrain_pick);
        s.get("episodes", c.pretrain_episodes);
        s.finish();
    }
    if (const json* v = top.child("validate")) {
        Section s(*v, "validate");
        s.get("densities", c.val_densities);
        s.get("Sr", c.val_Sr);
        s.get("A_D", c.val_AD);
        s.get("transient_periods", c.val_transient_periods);
        s.get("average_periods", c.val_average_periods);
        s.get("transition_Sr", c.transition_Sr);
        s.get("transition_density", c.transition_density);
        s.get("transition_iterations", c.transition_iterations);
        s.get("transition_A_lo", c.transition_A_lo);
        s.get("transition_A_hi", c.transition_A_hi);
        s.get("reference_table", c.reference_table);
        s.finish();
    }
    if (const json* ev = top.child("eval")) {
        Section s(*ev, "eval");
        s.get("checkpoint", c.eval_checkpoint);
        s.get("episodes", c.eval_episodes);
        s.get("stochastic", c.eval_stochastic);
        s.get("snapshot_times", c.snapshot_times);
        s.get("profiles", c.eval_profiles);
        s.finish();
    }
    if (const json* ex = top.child("export")) {
        Section s(*ex, "export");
        s.get("inputs", c.export_inputs);
        s.finish();
    }
    top.finish();

    if (!env_seed_set) c.env.seed = c.seed;
    if (!train_seed_set) c.train.seed = c.seed;

    // scenario fixes the observation set for the learning workflows
    if (workflow == "train" || workflow == "pretrain") {
        const Scenario sc = resolve_scenario(c.scenario);
        if (pressure_set && c.env.use_pressure != sc.use_pressure)
            throw ConfigError(strfmt("scenario %s requires use_pressure=%s",
                                     sc.name.c_str(), sc.use_pressure ? "true" : "false"));
        c.env.use_pressure = sc.use_pressure;
    }
    return c;
}

std::string run_config_json(const RunConfig& c) {
    json j;
    j["workflow"] = c.workflow;
    j["out_dir"] = c.out_dir;
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["scenario"] = c.scenario;
    j["bc_checkpoint"] = c.bc_checkpoint;
    j["env"] = env_to_json(c.env);
    j["train"] = json{{"gamma", c.train.gamma},
                      {"lam", c.train.lam},
                      {"clip_eps", c.train.clip_eps},
                      {"lr", c.train.lr},
                      {"epochs", c.train.epochs},
                      {"minibatch", c.train.minibatch},
                      {"entropy_coef", c.train.entropy_coef},
                      {"value_coef", c.train.value_coef},
                      {"grad_clip", c.train.grad_clip},
                      {"episodes", c.train.episodes},
                      {"seed", c.train.seed},
                      {"checkpoint_every", c.train.checkpoint_every},
                      {"bc_lr", c.train.bc_lr},
                      {"bc_epochs", c.train.bc_epochs},
                      {"bc_minibatch", c.train.bc_minibatch},
                      {"bc_holdout", c.train.bc_holdout}};
    json sweep = grid_to_json(c.grid);
    sweep["static"] = c.sweep_static;
    j["sweep"] = sweep;
    json pre;
    if (c.pretrain_gait) pre["gait"] = gait_to_json(*c.pretrain_gait);
    pre["pareto"] = c.pretrain_pareto;
    pre["pick"] = c.pretrain_pick;
    pre["episodes"] = c.pretrain_episodes;
    j["pretrain"] = pre;
    j["validate"] = json{{"densities", c.val_densities},
                         {"Sr", c.val_Sr},
                         {"A_D", c.val_AD},
                         {"transient_periods", c.val_transient_periods},
                         {"average_periods", c.val_average_periods},
                         {"transition_Sr", c.transition_Sr},
                         {"transition_density", c.transition_density},
                         {"transition_iterations", c.transition_iterations},
                         {"transition_A_lo", c.transition_A_lo},
                         {"transition_A_hi", c.transition_A_hi},
                         {"reference_table", c.reference_table}};
    j["eval"] = json{{"checkpoint", c.eval_checkpoint},
                     {"episodes", c.eval_episodes},
                     {"stochastic", c.eval_stochastic},
                     {"snapshot_times", c.snapshot_times},
                     {"profiles", c.eval_profiles}};
    j["export"] = json{{"inputs", c.export_inputs}};
    return j.dump(2);
}

void RunConfig::validate_for_workflow() const {
    if (out_dir.empty()) throw ConfigError("output directory must not be empty");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    env.validate();

    if (workflow == "validate") {
        if (val_densities.empty()) throw ConfigError("density list must not be empty");
        for (size_t i = 0; i + 1 < val_densities.size(); i++)
            if (val_densities[i] >= val_densities[i + 1])
                throw ConfigError("density list must be strictly ascending");
        for (int d : val_densities)
            if (d < 2) throw ConfigError("grid density must be at least 2 cells per length");
        if (!(val_Sr > 0.0)) throw ConfigError("Sr must be positive");
        if (val_AD < 0.0) throw ConfigError("A_D must be non-negative");
        if (val_transient_periods < 0 || val_average_periods < 1)
            throw ConfigError("averaging requires at least one period");
        for (double sr : transition_Sr)
            if (!(sr > 0.0)) throw ConfigError("transition Sr values must be positive");
        if (transition_iterations < 1) throw ConfigError("bisection needs at least one iteration");
        if (!(transition_A_lo >= 0.0 && transition_A_lo < transition_A_hi))
            throw ConfigError("bisection bracket must satisfy 0 <= lo < hi");
        if (!reference_table.empty()) require_file(reference_table, "reference table");
    } else if (workflow == "sweep") {
        // grid contents are validated by expand() at run time
    } else if (workflow == "pretrain") {
        if (bool(pretrain_gait) == !pretrain_pareto.empty())
            throw ConfigError("pretrain needs exactly one of an explicit gait or a pareto table");
        if (!pretrain_pareto.empty()) require_file(pretrain_pareto, "pareto table");
        if (pretrain_pick != "top_eta" && pretrain_pick != "top_ct")
            throw ConfigError("pretrain.pick must be top_eta or top_ct");
        if (pretrain_episodes < 1) throw ConfigError("pretrain.episodes must be >= 1");
        train.validate();
        resolve_scenario(scenario);
    } else if (workflow == "train") {
        train.validate();
        const Scenario sc = resolve_scenario(scenario);
        if (sc.pretrained) require_file(bc_checkpoint, "warm-start checkpoint");
    } else if (workflow == "eval") {
        require_file(eval_checkpoint, "checkpoint");
        if (eval_episodes < 1) throw ConfigError("eval.episodes must be >= 1");
        for (double t : snapshot_times)
            if (!(t > 0.0) || !std::isfinite(t))
                throw ConfigError("snapshot times must be positive and finite");
    } else if (workflow == "export") {
        if (export_inputs.empty()) throw ConfigError("export needs at least one input snapshot");
        for (const std::string& p : export_inputs) require_file(p, "snapshot");
    } else {
        throw UsageError(strfmt("unknown workflow '%s'", workflow.c_str()));
    }
}

void run_workflow(const RunConfig& cfg) {
    cfg.validate_for_workflow();
    fs::create_directories(cfg.out_dir);
    std::vector<std::string> outputs;

    if (cfg.workflow == "validate") run_validation_wf(cfg, outputs);
    else if (cfg.workflow == "sweep") run_sweep_wf(cfg, outputs);
    else if (cfg.workflow == "pretrain") run_pretrain_wf(cfg, outputs);
    else if (cfg.workflow == "train") run_train_wf(cfg, outputs);
    else if (cfg.workflow == "eval") run_eval_wf(cfg, outputs);
    else if (cfg.workflow == "export") run_export_wf(cfg, outputs);

    write_manifest(cfg, std::move(outputs));
}

}  // namespace finswim
