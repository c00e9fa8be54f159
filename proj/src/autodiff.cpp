#include "finswim/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace finswim {

namespace {

void check_shape(bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("autodiff: shape mismatch in ") + what);
}

}  // namespace

int Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return int(nodes_.size()) - 1;
}

int Tape::input(Mat value, bool needs_grad) {
    Node n;
    n.op = Op::input;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    return push(std::move(n));
}

int Tape::matmul(int a, int b) {
    const Mat &A = nodes_[a].value, &B = nodes_[b].value;
    check_shape(A.cols == B.rows, "matmul");
    Node n;
    n.op = Op::matmul;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = Mat(A.rows, B.cols);
    for (int i = 0; i < A.rows; i++)
        for (int k = 0; k < A.cols; k++) {
            double av = A(i, k);
            if (av == 0.0) continue;
            for (int j = 0; j < B.cols; j++) n.value(i, j) += av * B(k, j);
        }
    return push(std::move(n));
}

int Tape::matmul_bt(int a, int b) {
    const Mat &A = nodes_[a].value, &B = nodes_[b].value;
    check_shape(A.cols == B.cols, "matmul_bt");
    Node n;
    n.op = Op::matmul_bt;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = Mat(A.rows, B.rows);
    for (int i = 0; i < A.rows; i++)
        for (int j = 0; j < B.rows; j++) {
            double s = 0.0;
            for (int k = 0; k < A.cols; k++) s += A(i, k) * B(j, k);
            n.value(i, j) = s;
        }
    return push(std::move(n));
}

int Tape::add(int a, int b) {
    const Mat &A = nodes_[a].value, &B = nodes_[b].value;
    check_shape(A.same_shape(B), "add");
    Node n;
    n.op = Op::add;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = A;
    for (size_t i = 0; i < n.value.size(); i++) n.value.a[i] += B.a[i];
    return push(std::move(n));
}

int Tape::sub(int a, int b) {
    const Mat &A = nodes_[a].value, &B = nodes_[b].value;
    check_shape(A.same_shape(B), "sub");
    Node n;
    n.op = Op::sub;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = A;
    for (size_t i = 0; i < n.value.size(); i++) n.value.a[i] -= B.a[i];
    return push(std::move(n));
}

int Tape::add_rowvec(int a, int b) {
    const Mat &A = nodes_[a].value, &B = nodes_[b].value;
    check_shape(B.rows == 1 && B.cols == A.cols, "add_rowvec");
    Node n;
    n.op = Op::add_rowvec;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = A;
    for (int i = 0; i < A.rows; i++)
        for (int j = 0; j < A.cols; j++) n.value(i, j) += B(0, j);
    return push(std::move(n));
}

int Tape::mul_rowvec(int a, int b) {
    const Mat &A = nodes_[a].value, &B = nodes_[b].value;
    check_shape(B.rows == 1 && B.cols == A.cols, "mul_rowvec");
    Node n;
    n.op = Op::mul_rowvec;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = A;
    for (int i = 0; i < A.rows; i++)
        for (int j = 0; j < A.cols; j++) n.value(i, j) *= B(0, j);
    return push(std::move(n));
}

int Tape::mul(int a, int b) {
    const Mat &A = nodes_[a].value, &B = nodes_[b].value;
    check_shape(A.same_shape(B), "mul");
    Node n;
    n.op = Op::mul;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = A;
    for (size_t i = 0; i < n.value.size(); i++) n.value.a[i] *= B.a[i];
    return push(std::move(n));
}

int Tape::scale(int a, double s) {
    Node n;
    n.op = Op::scale;
    n.a = a;
    n.s0 = s;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = nodes_[a].value;
    for (double& v : n.value.a) v *= s;
    return push(std::move(n));
}

int Tape::add_const(int a, double c) {
    Node n;
    n.op = Op::add_const;
    n.a = a;
    n.s0 = c;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = nodes_[a].value;
    for (double& v : n.value.a) v += c;
    return push(std::move(n));
}

int Tape::relu(int a) {
    Node n;
    n.op = Op::relu;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = nodes_[a].value;
    for (double& v : n.value.a) v = std::max(v, 0.0);
    return push(std::move(n));
}

int Tape::exp_(int a) {
    Node n;
    n.op = Op::exp_op;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = nodes_[a].value;
    for (double& v : n.value.a) v = std::exp(v);
    return push(std::move(n));
}

int Tape::square(int a) {
    Node n;
    n.op = Op::square;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = nodes_[a].value;
    for (double& v : n.value.a) v *= v;
    return push(std::move(n));
}

int Tape::softmax_rows(int a) {
    Node n;
    n.op = Op::softmax_rows;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = nodes_[a].value;
    for (int i = 0; i < n.value.rows; i++) {
        double m = -1e300;
        for (int j = 0; j < n.value.cols; j++) m = std::max(m, n.value(i, j));
        double s = 0.0;
        for (int j = 0; j < n.value.cols; j++) {
            double e = std::exp(n.value(i, j) - m);
            n.value(i, j) = e;
            s += e;
        }
        for (int j = 0; j < n.value.cols; j++) n.value(i, j) /= s;
    }
    return push(std::move(n));
}

int Tape::layer_norm_rows(int a, int gamma, int beta) {
    const Mat &A = nodes_[a].value, &G = nodes_[gamma].value, &B = nodes_[beta].value;
    check_shape(G.rows == 1 && G.cols == A.cols && B.rows == 1 && B.cols == A.cols,
                "layer_norm_rows");
    Node n;
    n.op = Op::layer_norm;
    n.a = a;
    n.b = gamma;
    n.c = beta;
    n.s0 = 1e-5;  // variance floor
    n.needs_grad = nodes_[a].needs_grad || nodes_[gamma].needs_grad || nodes_[beta].needs_grad;
    n.value = Mat(A.rows, A.cols);
    for (int i = 0; i < A.rows; i++) {
        double mu = 0.0;
        for (int j = 0; j < A.cols; j++) mu += A(i, j);
        mu /= A.cols;
        double var = 0.0;
        for (int j = 0; j < A.cols; j++) {
            double d = A(i, j) - mu;
            var += d * d;
        }
        var /= A.cols;
        double inv = 1.0 / std::sqrt(var + n.s0);
        for (int j = 0; j < A.cols; j++)
            n.value(i, j) = G(0, j) * (A(i, j) - mu) * inv + B(0, j);
    }
    return push(std::move(n));
}

int Tape::slice_cols(int a, int c0, int c1) {
    const Mat& A = nodes_[a].value;
    check_shape(0 <= c0 && c0 < c1 && c1 <= A.cols, "slice_cols");
    Node n;
    n.op = Op::slice_cols;
    n.a = a;
    n.s0 = c0;
    n.s1 = c1;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = Mat(A.rows, c1 - c0);
    for (int i = 0; i < A.rows; i++)
        for (int j = c0; j < c1; j++) n.value(i, j - c0) = A(i, j);
    return push(std::move(n));
}

int Tape::row(int a, int r) {
    const Mat& A = nodes_[a].value;
    check_shape(0 <= r && r < A.rows, "row");
    Node n;
    n.op = Op::row;
    n.a = a;
    n.s0 = r;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = Mat(1, A.cols);
    for (int j = 0; j < A.cols; j++) n.value(0, j) = A(r, j);
    return push(std::move(n));
}

int Tape::concat_cols(const std::vector<int>& parts) {
    check_shape(!parts.empty(), "concat_cols");
    int rows = nodes_[parts[0]].value.rows, cols = 0;
    bool ng = false;
    for (int p : parts) {
        check_shape(nodes_[p].value.rows == rows, "concat_cols");
        cols += nodes_[p].value.cols;
        ng = ng || nodes_[p].needs_grad;
    }
    Node n;
    n.op = Op::concat_cols;
    n.many = parts;
    n.needs_grad = ng;
    n.value = Mat(rows, cols);
    int off = 0;
    for (int p : parts) {
        const Mat& P = nodes_[p].value;
        for (int i = 0; i < rows; i++)
            for (int j = 0; j < P.cols; j++) n.value(i, off + j) = P(i, j);
        off += P.cols;
    }
    return push(std::move(n));
}

int Tape::concat_rows(const std::vector<int>& parts) {
    check_shape(!parts.empty(), "concat_rows");
    int cols = nodes_[parts[0]].value.cols, rows = 0;
    bool ng = false;
    for (int p : parts) {
        check_shape(nodes_[p].value.cols == cols, "concat_rows");
        rows += nodes_[p].value.rows;
        ng = ng || nodes_[p].needs_grad;
    }
    Node n;
    n.op = Op::concat_rows;
    n.many = parts;
    n.needs_grad = ng;
    n.value = Mat(rows, cols);
    int off = 0;
    for (int p : parts) {
        const Mat& P = nodes_[p].value;
        for (int i = 0; i < P.rows; i++)
            for (int j = 0; j < cols; j++) n.value(off + i, j) = P(i, j);
        off += P.rows;
    }
    return push(std::move(n));
}

int Tape::row_sum(int a) {
    const Mat& A = nodes_[a].value;
    Node n;
    n.op = Op::row_sum;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = Mat(A.rows, 1);
    for (int i = 0; i < A.rows; i++)
        for (int j = 0; j < A.cols; j++) n.value(i, 0) += A(i, j);
    return push(std::move(n));
}

int Tape::sum_all(int a) {
    Node n;
    n.op = Op::sum_all;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = Mat(1, 1);
    for (double v : nodes_[a].value.a) n.value(0, 0) += v;
    return push(std::move(n));
}

int Tape::mean_all(int a) {
    Node n;
    n.op = Op::mean_all;
    n.a = a;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = Mat(1, 1);
    for (double v : nodes_[a].value.a) n.value(0, 0) += v;
    n.value(0, 0) /= double(nodes_[a].value.size());
    return push(std::move(n));
}

int Tape::clip(int a, double lo, double hi) {
    Node n;
    n.op = Op::clip;
    n.a = a;
    n.s0 = lo;
    n.s1 = hi;
    n.needs_grad = nodes_[a].needs_grad;
    n.value = nodes_[a].value;
    for (double& v : n.value.a) v = std::clamp(v, lo, hi);
    return push(std::move(n));
}

int Tape::min_(int a, int b) {
    const Mat &A = nodes_[a].value, &B = nodes_[b].value;
    check_shape(A.same_shape(B), "min");
    Node n;
    n.op = Op::min_op;
    n.a = a;
    n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    n.value = A;
    for (size_t i = 0; i < n.value.size(); i++) n.value.a[i] = std::min(A.a[i], B.a[i]);
    return push(std::move(n));
}

void Tape::backward(int node) {
    check_shape(nodes_[node].value.rows == 1 && nodes_[node].value.cols == 1,
                "backward (target must be scalar)");
    for (Node& n : nodes_) n.grad = Mat();
    auto g = [&](int id) -> Mat& {
        Node& n = nodes_[id];
        if (n.grad.size() == 0) n.grad = Mat(n.value.rows, n.value.cols);
        return n.grad;
    };
    g(node)(0, 0) = 1.0;

    for (int id = node; id >= 0; id--) {
        Node& n = nodes_[id];
        if (!n.needs_grad || n.grad.size() == 0) continue;
        const Mat& gy = n.grad;
        switch (n.op) {
            case Op::input:
                break;
            case Op::matmul: {
                const Mat &A = nodes_[n.a].value, &B = nodes_[n.b].value;
                if (nodes_[n.a].needs_grad) {
                    Mat& ga = g(n.a);  // dA += gy B^T
                    for (int i = 0; i < A.rows; i++)
                        for (int k = 0; k < A.cols; k++) {
                            double s = 0.0;
                            for (int j = 0; j < B.cols; j++) s += gy(i, j) * B(k, j);
                            ga(i, k) += s;
                        }
                }
                if (nodes_[n.b].needs_grad) {
                    Mat& gb = g(n.b);  // dB += A^T gy
                    for (int k = 0; k < A.cols; k++)
                        for (int i = 0; i < A.rows; i++) {
                            double av = A(i, k);
                            if (av == 0.0) continue;
                            for (int j = 0; j < B.cols; j++) gb(k, j) += av * gy(i, j);
                        }
                }
                break;
            }
            case Op::matmul_bt: {
                const Mat &A = nodes_[n.a].value, &B = nodes_[n.b].value;
                if (nodes_[n.a].needs_grad) {
                    Mat& ga = g(n.a);  // dA += gy B
                    for (int i = 0; i < A.rows; i++)
                        for (int j = 0; j < B.rows; j++) {
                            double gv = gy(i, j);
                            if (gv == 0.0) continue;
                            for (int k = 0; k < A.cols; k++) ga(i, k) += gv * B(j, k);
                        }
                }
                if (nodes_[n.b].needs_grad) {
                    Mat& gb = g(n.b);  // dB += gy^T A
                    for (int j = 0; j < B.rows; j++)
                        for (int i = 0; i < A.rows; i++) {
                            double gv = gy(i, j);
                            if (gv == 0.0) continue;
                            for (int k = 0; k < A.cols; k++) gb(j, k) += gv * A(i, k);
                        }
                }
                break;
            }
            case Op::add:
                if (nodes_[n.a].needs_grad) {
                    Mat& ga = g(n.a);
                    for (size_t i = 0; i < gy.size(); i++) ga.a[i] += gy.a[i];
                }
                if (nodes_[n.b].needs_grad) {
                    Mat& gb = g(n.b);
                    for (size_t i = 0; i < gy.size(); i++) gb.a[i] += gy.a[i];
                }
                break;
            case Op::sub:
                if (nodes_[n.a].needs_grad) {
                    Mat& ga = g(n.a);
                    for (size_t i = 0; i < gy.size(); i++) ga.a[i] += gy.a[i];
                }
                if (nodes_[n.b].needs_grad) {
                    Mat& gb = g(n.b);
                    for (size_t i = 0; i < gy.size(); i++) gb.a[i] -= gy.a[i];
                }
                break;
            case Op::add_rowvec:
                if (nodes_[n.a].needs_grad) {
                    Mat& ga = g(n.a);
                    for (size_t i = 0; i < gy.size(); i++) ga.a[i] += gy.a[i];
                }
                if (nodes_[n.b].needs_grad) {
                    Mat& gb = g(n.b);
                    for (int i = 0; i < gy.rows; i++)
                        for (int j = 0; j < gy.cols; j++) gb(0, j) += gy(i, j);
                }
                break;
            case Op::mul_rowvec: {
                const Mat &A = nodes_[n.a].value, &B = nodes_[n.b].value;
                if (nodes_[n.a].needs_grad) {
                    Mat& ga = g(n.a);
                    for (int i = 0; i < gy.rows; i++)
                        for (int j = 0; j < gy.cols; j++) ga(i, j) += gy(i, j) * B(0, j);
                }
                if (nodes_[n.b].needs_grad) {
                    Mat& gb = g(n.b);
                    for (int i = 0; i < gy.rows; i++)
                        for (int j = 0; j < gy.cols; j++) gb(0, j) += gy(i, j) * A(i, j);
                }
                break;
            }
            case Op::mul: {
                const Mat &A = nodes_[n.a].value, &B = nodes_[n.b].value;
                if (nodes_[n.a].needs_grad) {
                    Mat& ga = g(n.a);
                    for (size_t i = 0; i < gy.size(); i++) ga.a[i] += gy.a[i] * B.a[i];
                }
                if (nodes_[n.b].needs_grad) {
                    Mat& gb = g(n.b);
                    for (size_t i = 0; i < gy.size(); i++) gb.a[i] += gy.a[i] * A.a[i];
                }
                break;
            }
            case Op::scale: {
                Mat& ga = g(n.a);
                for (size_t i = 0; i < gy.size(); i++) ga.a[i] += gy.a[i] * n.s0;
                break;
            }
            case Op::add_const: {
                Mat& ga = g(n.a);
                for (size_t i = 0; i < gy.size(); i++) ga.a[i] += gy.a[i];
                break;
            }
            case Op::relu: {
                const Mat& A = nodes_[n.a].value;
                Mat& ga = g(n.a);
                for (size_t i = 0; i < gy.size(); i++)
                    if (A.a[i] > 0.0) ga.a[i] += gy.a[i];
                break;
            }
            case Op::exp_op: {
                Mat& ga = g(n.a);
                for (size_t i = 0; i < gy.size(); i++) ga.a[i] += gy.a[i] * n.value.a[i];
                break;
            }
            case Op::square: {
                const Mat& A = nodes_[n.a].value;
                Mat& ga = g(n.a);
                for (size_t i = 0; i < gy.size(); i++) ga.a[i] += 2.0 * A.a[i] * gy.a[i];
                break;
            }
            case Op::softmax_rows: {
                Mat& ga = g(n.a);
                for (int i = 0; i < n.value.rows; i++) {
                    double dot = 0.0;
                    for (int j = 0; j < n.value.cols; j++) dot += gy(i, j) * n.value(i, j);
                    for (int j = 0; j < n.value.cols; j++)
                        ga(i, j) += (gy(i, j) - dot) * n.value(i, j);
                }
                break;
            }
            case Op::layer_norm: {
                const Mat &A = nodes_[n.a].value, &G = nodes_[n.b].value;
                int cols = A.cols;
                for (int i = 0; i < A.rows; i++) {
                    double mu = 0.0;
                    for (int j = 0; j < cols; j++) mu += A(i, j);
                    mu /= cols;
                    double var = 0.0;
                    for (int j = 0; j < cols; j++) {
                        double d = A(i, j) - mu;
                        var += d * d;
                    }
                    var /= cols;
                    double inv = 1.0 / std::sqrt(var + n.s0);
                    double m1 = 0.0, m2 = 0.0;  // means of g*gy and g*gy*xhat
                    for (int j = 0; j < cols; j++) {
                        double xh = (A(i, j) - mu) * inv;
                        double t = G(0, j) * gy(i, j);
                        m1 += t;
                        m2 += t * xh;
                    }
                    m1 /= cols;
                    m2 /= cols;
                    if (nodes_[n.a].needs_grad) {
                        Mat& ga = g(n.a);
                        for (int j = 0; j < cols; j++) {
                            double xh = (A(i, j) - mu) * inv;
                            ga(i, j) += (G(0, j) * gy(i, j) - m1 - xh * m2) * inv;
                        }
                    }
                    if (nodes_[n.b].needs_grad) {
                        Mat& gg = g(n.b);
                        for (int j = 0; j < cols; j++)
                            gg(0, j) += gy(i, j) * (A(i, j) - mu) * inv;
                    }
                    if (nodes_[n.c].needs_grad) {
                        Mat& gb = g(n.c);
                        for (int j = 0; j < cols; j++) gb(0, j) += gy(i, j);
                    }
                }
                break;
            }
            case Op::slice_cols: {
                Mat& ga = g(n.a);
                int c0 = int(n.s0);
                for (int i = 0; i < gy.rows; i++)
                    for (int j = 0; j < gy.cols; j++) ga(i, c0 + j) += gy(i, j);
                break;
            }
            case Op::row: {
                Mat& ga = g(n.a);
                int r = int(n.s0);
                for (int j = 0; j < gy.cols; j++) ga(r, j) += gy(0, j);
                break;
            }
            case Op::concat_cols: {
                int off = 0;
                for (int p : n.many) {
                    const Mat& P = nodes_[p].value;
                    if (nodes_[p].needs_grad) {
                        Mat& gp = g(p);
                        for (int i = 0; i < gy.rows; i++)
                            for (int j = 0; j < P.cols; j++) gp(i, j) += gy(i, off + j);
                    }
                    off += P.cols;
                }
                break;
            }
            case Op::concat_rows: {
                int off = 0;
                for (int p : n.many) {
                    const Mat& P = nodes_[p].value;
                    if (nodes_[p].needs_grad) {
                        Mat& gp = g(p);
                        for (int i = 0; i < P.rows; i++)
                            for (int j = 0; j < gy.cols; j++) gp(i, j) += gy(off + i, j);
                    }
                    off += P.rows;
                }
                break;
            }
            case Op::row_sum: {
                Mat& ga = g(n.a);
                for (int i = 0; i < ga.rows; i++)
                    for (int j = 0; j < ga.cols; j++) ga(i, j) += gy(i, 0);
                break;
            }
            case Op::sum_all: {
                Mat& ga = g(n.a);
                for (double& v : ga.a) v += gy(0, 0);
                break;
            }
            case Op::mean_all: {
                Mat& ga = g(n.a);
                double s = gy(0, 0) / double(ga.size());
                for (double& v : ga.a) v += s;
                break;
            }
            case Op::clip: {
                const Mat& A = nodes_[n.a].value;
                Mat& ga = g(n.a);
                for (size_t i = 0; i < gy.size(); i++)
                    if (A.a[i] > n.s0 && A.a[i] < n.s1) ga.a[i] += gy.a[i];
                break;
            }
            case Op::min_op: {
                const Mat &A = nodes_[n.a].value, &B = nodes_[n.b].value;
                for (size_t i = 0; i < gy.size(); i++) {
                    int src = A.a[i] <= B.a[i] ? n.a : n.b;
                    if (nodes_[src].needs_grad) g(src).a[i] += gy.a[i];
                }
                break;
            }
        }
    }
}

}  // namespace finswim
