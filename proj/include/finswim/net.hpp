#ifndef FINSWIM_NET_HPP
#define FINSWIM_NET_HPP

#include <string>
#include <vector>

#include "finswim/autodiff.hpp"

namespace finswim {

enum class Arch { transformer, mlp };

struct NetConfig {
    Arch arch = Arch::transformer;
    int K = 16;         ///< history window length (rows of the input)
    int obs_dim = 20;
    int out_dim = 4;
    int d_model = 64;
    int heads = 4;
    int ffn = 128;
    int blocks = 2;
    int mlp_hidden = 128;
    bool with_log_std = false;    ///< policy nets carry learned exploration spread
    double log_std_init = -4.605170185988091;  ///< log(0.01)
    double head_scale = 1.0;      ///< extra shrink on the output head init

    void validate() const;
    bool operator==(const NetConfig& o) const;
};

struct NamedParam {
    std::string name;
    Mat value;
};

/**
 * Sequence model over the observation-history window: either a pre-norm
 * transformer encoder (attention over all K rows, sinusoidal positions, final
 * layer norm, last-row readout) or a two-hidden-layer MLP reading only the
 * newest observation. Parameters live in doubles; a fixed draw order at
 * construction makes initialization reproducible.
 */
class Net {
  public:
    Net(const NetConfig& cfg, Rng& rng);

    const NetConfig& config() const { return cfg_; }
    std::vector<NamedParam>& params() { return params_; }
    const std::vector<NamedParam>& params() const { return params_; }
    size_t scalar_count() const;
    int log_std_index() const { return log_std_index_; }

    /** Put every parameter on the tape; returns node ids parallel to params(). */
    std::vector<int> lift(Tape& t, bool needs_grad = true) const;

    /** Forward one window (K x obs_dim, oldest row first) to a 1 x out_dim node. */
    int forward(Tape& t, const std::vector<int>& ps, int window_node) const;

    /** Tape-free forward returning the output row. */
    Mat forward_value(const Mat& window) const;

  private:
    NetConfig cfg_;
    std::vector<NamedParam> params_;
    Mat pos_enc_;
    int log_std_index_ = -1;

    int add_param(const std::string& name, int rows, int cols, Rng& rng, double scale);
    int add_const_param(const std::string& name, int rows, int cols, double fill);
};

/** Adam optimizer over a parameter list; moment buffers match by position. */
class Adam {
  public:
    Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(std::vector<NamedParam>& params, const std::vector<Mat>& grads, double lr);
    void reset();

  private:
    double b1_, b2_, eps_;
    long long t_ = 0;
    std::vector<Mat> m_, v_;
};

/** L2 norm over a gradient set. */
double global_grad_norm(const std::vector<Mat>& grads);

/** Scale gradients in place so their global norm is at most max_norm. */
void clip_grad_norm(std::vector<Mat>& grads, double max_norm);

}  // namespace finswim

#endif
