#ifndef FINSWIM_AUTODIFF_HPP
#define FINSWIM_AUTODIFF_HPP

#include <vector>

#include "finswim/common.hpp"

namespace finswim {

/** Dense row-major matrix of doubles. */
struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), a(size_t(r) * c, fill) {}

    double& operator()(int i, int j) { return a[size_t(i) * cols + j]; }
    double operator()(int i, int j) const { return a[size_t(i) * cols + j]; }
    size_t size() const { return a.size(); }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

/**
 * Reverse-mode tape over matrix operations. Build a scalar expression with
 * the op methods (each returns a node id), then call backward on it; gradients
 * of every node marked differentiable are accumulated on the tape.
 */
class Tape {
  public:
    /** Register an input; differentiable inputs receive gradients. */
    int input(Mat value, bool needs_grad = false);

    int matmul(int a, int b);     ///< A(m,k) B(k,n)
    int matmul_bt(int a, int b);  ///< A(m,k) B(n,k)^T
    int add(int a, int b);        ///< same shape
    int sub(int a, int b);
    int add_rowvec(int a, int b); ///< A(m,n) + broadcast b(1,n)
    int mul_rowvec(int a, int b); ///< A(m,n) * broadcast b(1,n)
    int mul(int a, int b);        ///< elementwise
    int scale(int a, double s);
    int add_const(int a, double c);
    int relu(int a);
    int exp_(int a);
    int square(int a);
    int softmax_rows(int a);
    int layer_norm_rows(int a, int gamma, int beta);  ///< gamma, beta are 1 x n
    int slice_cols(int a, int c0, int c1);
    int row(int a, int r);        ///< one row as 1 x n
    int concat_cols(const std::vector<int>& parts);
    int concat_rows(const std::vector<int>& parts);
    int row_sum(int a);           ///< m x 1, each row summed
    int sum_all(int a);           ///< 1 x 1
    int mean_all(int a);
    int clip(int a, double lo, double hi);  ///< zero gradient outside (lo, hi)
    int min_(int a, int b);       ///< elementwise; ties route the gradient to a

    /** Reverse sweep from a scalar (1 x 1) node. */
    void backward(int node);

    const Mat& val(int id) const { return nodes_[id].value; }
    /** Gradient of the last backward target w.r.t. node id (zero if none). */
    const Mat& grad(int id) const { return nodes_[id].grad; }
    size_t node_count() const { return nodes_.size(); }

  private:
    enum class Op {
        input, matmul, matmul_bt, add, sub, add_rowvec, mul_rowvec, mul, scale, add_const,
        relu, exp_op, square, softmax_rows, layer_norm, slice_cols, row, concat_cols,
        concat_rows, row_sum, sum_all, mean_all, clip, min_op
    };
    struct Node {
        Op op;
        int a = -1, b = -1, c = -1;
        std::vector<int> many;
        double s0 = 0.0, s1 = 0.0;
        Mat value, grad;
        bool needs_grad = false;
    };
    std::vector<Node> nodes_;

    int push(Node n);
};

}  // namespace finswim

#endif
