#include "finswim/gait.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <deque>

namespace finswim {

void GaitParams::validate() const {
    for (int i = 0; i < 4; i++) {
        if (A[i] < 0.0 || A[i] > kActionBound)
            throw ConfigError(strfmt("gait: amplitude A%d=%g outside [0, %g]", i + 1, A[i],
                                     kActionBound));
        if (phase[i] < 0.0 || phase[i] >= 2.0 * M_PI)
            throw ConfigError(strfmt("gait: phase p%d=%g outside [0, 2pi)", i + 1, phase[i]));
        if (!(omega[i] >= 0.0)) throw ConfigError("gait: frequencies must be non-negative");
    }
    if (omega[0] != omega[1] || omega[1] != omega[2])
        throw ConfigError("gait: the three link frequencies must be equal");
}

bool GaitParams::operator<(const GaitParams& o) const {
    for (int i = 0; i < 4; i++) {
        if (A[i] != o.A[i]) return A[i] < o.A[i];
        if (omega[i] != o.omega[i]) return omega[i] < o.omega[i];
        if (phase[i] != o.phase[i]) return phase[i] < o.phase[i];
    }
    return false;
}

bool GaitParams::operator==(const GaitParams& o) const {
    return A == o.A && omega == o.omega && phase == o.phase;
}

ActionVector trig_action(const GaitParams& g, double t_n) {
    if (t_n < 0.0) throw ConfigError("trig_action: time must be non-negative");
    ActionVector a;
    for (int i = 0; i < 4; i++) a[i] = g.A[i] * std::cos(g.omega[i] * t_n + g.phase[i]);
    return a;
}

std::vector<GaitParams> SweepGrid::expand() const {
    auto dedup = [](std::vector<double> v, const char* name) {
        if (v.empty()) throw ConfigError(strfmt("sweep grid: empty %s axis", name));
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    std::vector<double> a1 = dedup(A1, "A1"), a2 = dedup(A2, "A2"), a3 = dedup(A3, "A3");
    std::vector<double> om = dedup(omega, "omega");
    std::vector<double> q2 = dedup(p2, "p2"), q3 = dedup(p3, "p3"), q4 = dedup(p4, "p4");
    bool tied = A4.empty();
    std::vector<double> a4 = tied ? std::vector<double>{0.0} : dedup(A4, "A4");

    std::vector<GaitParams> out;
    for (double v1 : a1)
        for (double v2 : a2)
            for (double v3 : a3)
                for (double v4 : a4)
                    for (double w : om)
                        for (double f2 : q2)
                            for (double f3 : q3)
                                for (double f4 : q4) {
                                    GaitParams g;
                                    g.A = {v1, v2, v3, tied ? v1 : v4};
                                    g.omega = {w, w, w, w};
                                    g.phase = {0.0, f2, f3, f4};
                                    g.validate();
                                    out.push_back(g);
                                }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

SweepResult evaluate_gait(const GaitParams& g, SwimEnv& env) {
    g.validate();
    SweepResult r;
    r.params = g;
    env.reset();
    bool clean = true;
    try {
        while (!env.done()) {
            ActionVector a = trig_action(g, env.episode_time());
            SwimEnv::StepResult s = env.env_step(a);
            if (s.done && !s.reason.empty()) clean = false;
        }
    } catch (const SolverError&) {
        // a rollout that blows up numerically is an invalid sample, not a
        // reason to abort the whole sweep
        r.valid = false;
        return r;
    }
    CoeffParams cp;  // defaults: fish width and length scales
    try {
        r.report = report_from_trajectory(env.trajectory(), cp);
        r.valid = clean;
    } catch (const std::exception&) {
        r.valid = false;
    }
    return r;
}

std::vector<SweepResult> brute_force_search(
    const SweepGrid& grid, SwimEnv& env, size_t budget,
    const std::function<void(size_t, size_t, const SweepResult&)>& on_result) {
    std::vector<GaitParams> gaits = grid.expand();
    if (gaits.size() > budget)
        throw ConfigError(strfmt("sweep: %zu grid points exceed the budget of %zu rollouts",
                                 gaits.size(), budget));
    std::vector<SweepResult> out;
    out.reserve(gaits.size());
    for (size_t i = 0; i < gaits.size(); i++) {
        SweepResult r = evaluate_gait(gaits[i], env);
        if (on_result) on_result(i, gaits.size(), r);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<SweepResult> pareto_front(const std::vector<SweepResult>& results) {
    std::vector<const SweepResult*> pts;
    for (const SweepResult& r : results)
        if (r.valid && r.report.eta_defined) pts.push_back(&r);

    std::vector<SweepResult> front;
    for (const SweepResult* p : pts) {
        bool dominated = false;
        for (const SweepResult* q : pts) {
            if (q == p) continue;
            bool geq = q->report.coeff.C_T >= p->report.coeff.C_T && q->report.eta >= p->report.eta;
            bool gt = q->report.coeff.C_T > p->report.coeff.C_T || q->report.eta > p->report.eta;
            if (geq && gt) {
                dominated = true;
                break;
            }
        }
        if (!dominated) front.push_back(*p);
    }
    return front;
}

ReferenceDataset collect_reference(const std::vector<GaitParams>& gaits, SwimEnv& env,
                                   int episodes_per_gait) {
    if (gaits.empty()) throw ConfigError("collect_reference: no gaits given");
    if (episodes_per_gait < 1) throw ConfigError("collect_reference: episodes must be >= 1");

    ReferenceDataset ds;
    ds.K = env.config().history_K;
    ds.obs_dim = env.config().obs_dim();
    ds.sources = gaits;

    for (const GaitParams& g : gaits) {
        g.validate();
        for (int ep = 0; ep < episodes_per_gait; ep++) {
            Observation obs = env.reset();
            std::deque<Observation> hist{obs};
            while (!env.done()) {
                ActionVector a = trig_action(g, env.episode_time());
                if (int(hist.size()) == ds.K) {
                    for (const Observation& o : hist)
                        for (double v : o) ds.data.push_back(float(v));
                    for (double v : a) ds.data.push_back(float(v));
                }
                SwimEnv::StepResult s = env.env_step(a);
                hist.push_back(std::move(s.obs));
                if (int(hist.size()) > ds.K) hist.pop_front();
            }
        }
    }
    return ds;
}

static const char kDatasetMagic[4] = {'F', 'S', 'D', 'S'};

void save_dataset(const ReferenceDataset& ds, const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IoError("cannot write dataset file: " + path);
    uint32_t hdr[4] = {uint32_t(ds.K), uint32_t(ds.obs_dim), uint32_t(ds.act_dim),
                       uint32_t(ds.pair_count())};
    bool ok = std::fwrite(kDatasetMagic, 1, 4, fp) == 4 &&
              std::fwrite(hdr, sizeof(uint32_t), 4, fp) == 4 &&
              std::fwrite(ds.data.data(), sizeof(float), ds.data.size(), fp) == ds.data.size();
    if (std::fclose(fp) != 0 || !ok) throw IoError("short write on dataset file: " + path);
}

ReferenceDataset load_dataset(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw IoError("cannot open dataset file: " + path);
    char magic[4];
    uint32_t hdr[4];
    if (std::fread(magic, 1, 4, fp) != 4 || std::memcmp(magic, kDatasetMagic, 4) != 0 ||
        std::fread(hdr, sizeof(uint32_t), 4, fp) != 4) {
        std::fclose(fp);
        throw FormatError("not a reference dataset file: " + path);
    }
    ReferenceDataset ds;
    ds.K = int(hdr[0]);
    ds.obs_dim = int(hdr[1]);
    ds.act_dim = int(hdr[2]);
    if (ds.K < 1 || ds.obs_dim < 1 || ds.act_dim < 1) {
        std::fclose(fp);
        throw FormatError("corrupt dataset header: " + path);
    }
    size_t rec = size_t(ds.K) * ds.obs_dim + ds.act_dim;
    size_t n = size_t(hdr[3]) * rec;
    ds.data.resize(n);
    size_t got = std::fread(ds.data.data(), sizeof(float), n, fp);
    std::fclose(fp);
    if (got != n) throw FormatError("truncated dataset file: " + path);
    return ds;
}

}  // namespace finswim
