#include "finswim/net.hpp"

#include <cmath>

namespace finswim {

void NetConfig::validate() const {
    if (K < 1 || obs_dim < 1 || out_dim < 1) throw ConfigError("net: bad input/output shape");
    if (arch == Arch::transformer) {
        if (d_model < 1 || heads < 1 || ffn < 1 || blocks < 1)
            throw ConfigError("net: bad encoder shape");
        if (d_model % heads != 0) throw ConfigError("net: width must divide into the heads");
    } else if (mlp_hidden < 1) {
        throw ConfigError("net: bad hidden width");
    }
}

bool NetConfig::operator==(const NetConfig& o) const {
    return arch == o.arch && K == o.K && obs_dim == o.obs_dim && out_dim == o.out_dim &&
           d_model == o.d_model && heads == o.heads && ffn == o.ffn && blocks == o.blocks &&
           mlp_hidden == o.mlp_hidden && with_log_std == o.with_log_std;
}

int Net::add_param(const std::string& name, int rows, int cols, Rng& rng, double scale) {
    Mat m(rows, cols);
    double a = scale * std::sqrt(6.0 / double(rows + cols));
    for (double& v : m.a) v = rng.uniform(-a, a);
    params_.push_back({name, std::move(m)});
    return int(params_.size()) - 1;
}

int Net::add_const_param(const std::string& name, int rows, int cols, double fill) {
    params_.push_back({name, Mat(rows, cols, fill)});
    return int(params_.size()) - 1;
}

Net::Net(const NetConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.arch == Arch::transformer) {
        add_param("embed.W", cfg_.obs_dim, cfg_.d_model, rng, 1.0);
        add_const_param("embed.b", 1, cfg_.d_model, 0.0);
        for (int b = 0; b < cfg_.blocks; b++) {
            std::string p = "block" + std::to_string(b) + ".";
            add_const_param(p + "ln1.g", 1, cfg_.d_model, 1.0);
            add_const_param(p + "ln1.b", 1, cfg_.d_model, 0.0);
            for (const char* nm : {"q", "k", "v", "o"}) {
                add_param(p + "attn.W" + nm, cfg_.d_model, cfg_.d_model, rng, 1.0);
                add_const_param(p + "attn.b" + nm, 1, cfg_.d_model, 0.0);
            }
            add_const_param(p + "ln2.g", 1, cfg_.d_model, 1.0);
            add_const_param(p + "ln2.b", 1, cfg_.d_model, 0.0);
            add_param(p + "ffn.W1", cfg_.d_model, cfg_.ffn, rng, 1.0);
            add_const_param(p + "ffn.b1", 1, cfg_.ffn, 0.0);
            add_param(p + "ffn.W2", cfg_.ffn, cfg_.d_model, rng, 1.0);
            add_const_param(p + "ffn.b2", 1, cfg_.d_model, 0.0);
        }
        add_const_param("final.ln.g", 1, cfg_.d_model, 1.0);
        add_const_param("final.ln.b", 1, cfg_.d_model, 0.0);
        add_param("head.W", cfg_.d_model, cfg_.out_dim, rng, cfg_.head_scale);
        add_const_param("head.b", 1, cfg_.out_dim, 0.0);

        // interleaved sin/cos position code added after the embedding
        pos_enc_ = Mat(cfg_.K, cfg_.d_model);
        for (int p = 0; p < cfg_.K; p++)
            for (int j = 0; j < cfg_.d_model; j++) {
                double rate = std::pow(10000.0, -double(2 * (j / 2)) / cfg_.d_model);
                pos_enc_(p, j) = j % 2 == 0 ? std::sin(p * rate) : std::cos(p * rate);
            }
    } else {
        add_param("mlp.W1", cfg_.obs_dim, cfg_.mlp_hidden, rng, 1.0);
        add_const_param("mlp.b1", 1, cfg_.mlp_hidden, 0.0);
        add_param("mlp.W2", cfg_.mlp_hidden, cfg_.mlp_hidden, rng, 1.0);
        add_const_param("mlp.b2", 1, cfg_.mlp_hidden, 0.0);
        add_param("head.W", cfg_.mlp_hidden, cfg_.out_dim, rng, cfg_.head_scale);
        add_const_param("head.b", 1, cfg_.out_dim, 0.0);
    }
    if (cfg_.with_log_std)
        log_std_index_ = add_const_param("log_std", 1, cfg_.out_dim, cfg_.log_std_init);
}

size_t Net::scalar_count() const {
    size_t n = 0;
    for (const NamedParam& p : params_) n += p.value.size();
    return n;
}

std::vector<int> Net::lift(Tape& t, bool needs_grad) const {
    std::vector<int> ids;
    ids.reserve(params_.size());
    for (const NamedParam& p : params_) ids.push_back(t.input(p.value, needs_grad));
    return ids;
}

int Net::forward(Tape& t, const std::vector<int>& ps, int window_node) const {
    const Mat& w = t.val(window_node);
    if (w.rows != cfg_.K || w.cols != cfg_.obs_dim)
        throw ConfigError(strfmt("net: window is %dx%d, expected %dx%d", w.rows, w.cols, cfg_.K,
                                 cfg_.obs_dim));
    int i = 0;
    auto next = [&] { return ps[i++]; };

    if (cfg_.arch == Arch::mlp) {
        int x = t.row(window_node, cfg_.K - 1);  // newest observation only
        int W1 = next(), b1 = next(), W2 = next(), b2 = next(), Wh = next(), bh = next();
        x = t.relu(t.add_rowvec(t.matmul(x, W1), b1));
        x = t.relu(t.add_rowvec(t.matmul(x, W2), b2));
        return t.add_rowvec(t.matmul(x, Wh), bh);
    }

    int embW = next(), embB = next();
    int x = t.add_rowvec(t.matmul(window_node, embW), embB);
    x = t.add(x, t.input(pos_enc_, false));
    const int dh = cfg_.d_model / cfg_.heads;
    for (int b = 0; b < cfg_.blocks; b++) {
        int g1 = next(), b1 = next();
        int Wq = next(), bq = next(), Wk = next(), bk = next();
        int Wv = next(), bv = next(), Wo = next(), bo = next();
        int g2 = next(), b2 = next();
        int F1 = next(), fb1 = next(), F2 = next(), fb2 = next();

        int xn = t.layer_norm_rows(x, g1, b1);
        int q = t.add_rowvec(t.matmul(xn, Wq), bq);
        int k = t.add_rowvec(t.matmul(xn, Wk), bk);
        int v = t.add_rowvec(t.matmul(xn, Wv), bv);
        std::vector<int> heads;
        for (int h = 0; h < cfg_.heads; h++) {
            int qh = t.slice_cols(q, h * dh, (h + 1) * dh);
            int kh = t.slice_cols(k, h * dh, (h + 1) * dh);
            int vh = t.slice_cols(v, h * dh, (h + 1) * dh);
            int s = t.scale(t.matmul_bt(qh, kh), 1.0 / std::sqrt(double(dh)));
            heads.push_back(t.matmul(t.softmax_rows(s), vh));
        }
        int att = t.add_rowvec(t.matmul(t.concat_cols(heads), Wo), bo);
        x = t.add(x, att);

        int xn2 = t.layer_norm_rows(x, g2, b2);
        int f = t.relu(t.add_rowvec(t.matmul(xn2, F1), fb1));
        f = t.add_rowvec(t.matmul(f, F2), fb2);
        x = t.add(x, f);
    }
    int gf = next(), bf = next(), Wh = next(), bh = next();
    int xf = t.layer_norm_rows(x, gf, bf);
    int last = t.row(xf, cfg_.K - 1);
    return t.add_rowvec(t.matmul(last, Wh), bh);
}

Mat Net::forward_value(const Mat& window) const {
    Tape t;
    std::vector<int> ps = lift(t, false);
    int out = forward(t, ps, t.input(window, false));
    return t.val(out);
}

Adam::Adam(double beta1, double beta2, double eps) : b1_(beta1), b2_(beta2), eps_(eps) {}

void Adam::reset() {
    t_ = 0;
    m_.clear();
    v_.clear();
}

void Adam::step(std::vector<NamedParam>& params, const std::vector<Mat>& grads, double lr) {
    if (params.size() != grads.size()) throw ConfigError("adam: gradient list mismatch");
    if (m_.empty()) {
        for (const NamedParam& p : params) {
            m_.push_back(Mat(p.value.rows, p.value.cols));
            v_.push_back(Mat(p.value.rows, p.value.cols));
        }
    }
    t_++;
    double c1 = 1.0 - std::pow(b1_, double(t_));
    double c2 = 1.0 - std::pow(b2_, double(t_));
    for (size_t k = 0; k < params.size(); k++) {
        Mat& p = params[k].value;
        const Mat& gmat = grads[k];
        if (gmat.size() == 0) continue;  // parameter untouched by this loss
        for (size_t j = 0; j < p.size(); j++) {
            double gv = gmat.a[j];
            m_[k].a[j] = b1_ * m_[k].a[j] + (1.0 - b1_) * gv;
            v_[k].a[j] = b2_ * v_[k].a[j] + (1.0 - b2_) * gv * gv;
            p.a[j] -= lr * (m_[k].a[j] / c1) / (std::sqrt(v_[k].a[j] / c2) + eps_);
        }
    }
}

double global_grad_norm(const std::vector<Mat>& grads) {
    double s = 0.0;
    for (const Mat& gmat : grads)
        for (double v : gmat.a) s += v * v;
    return std::sqrt(s);
}

void clip_grad_norm(std::vector<Mat>& grads, double max_norm) {
    double n = global_grad_norm(grads);
    if (n <= max_norm || n == 0.0) return;
    double s = max_norm / n;
    for (Mat& gmat : grads)
        for (double& v : gmat.a) v *= s;
}

}  // namespace finswim
