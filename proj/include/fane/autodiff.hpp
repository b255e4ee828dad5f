#pragma once

#include <functional>
#include <vector>

#include "fane/mat.hpp"

namespace fane::ad {

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape over Mat values. Scalars are 1x1 matrices. Every op
// records a backward closure; backward() runs them in reverse order.
class Tape {
public:
    Var input(Mat value);     // leaf whose gradient is wanted
    Var constant(Mat value);  // leaf, gradient ignored by callers

    const Mat& value(Var v) const { return nodes_[v.id].value; }
    const Mat& grad(Var v) const { return nodes_[v.id].grad; }
    double scalar(Var v) const { return nodes_[v.id].value(0, 0); }

    // Seeds d(out)/d(out) = 1 for a 1x1 output and propagates.
    void backward(Var out);

    Var matmul(Var a, Var b);
    Var matmul_nt(Var a, Var b);  // a * b^T
    Var transpose(Var a);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);  // elementwise
    Var scale(Var a, double c);
    Var add_row_broadcast(Var m, Var row);     // row added to every row of m
    Var add_scalar_broadcast(Var m, Var s);    // 1x1 s added to every entry
    Var mul_const(Var a, Mat c);               // elementwise by constant
    Var broadcast_row(Var row, int n);         // 1xC -> nxC
    Var concat_cols(Var a, Var b);
    Var stack_rows(const std::vector<Var>& rows);  // each 1xC -> NxC
    Var tanh(Var a);
    Var sigmoid(Var a);
    Var softplus(Var a);  // log(1 + e^x), stable form
    Var softmax_rows(Var a);
    Var logsumexp_rows(Var a);  // NxC -> Nx1
    Var l2_normalize_rows(Var a);
    Var layer_norm_rows(Var x, Var gain, Var bias);
    Var sum(Var a);    // 1x1
    Var trace(Var a);  // 1x1

    size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Mat value;
        Mat grad;
        std::function<void(Tape&)> back;  // empty for leaves
    };

    Var push(Mat value, std::function<void(Tape&)> back);
    Mat& grad_mut(Var v) { return nodes_[v.id].grad; }

    std::vector<Node> nodes_;
};

}  // namespace fane::ad
