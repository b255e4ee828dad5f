#include "fane/autodiff.hpp"

#include <cmath>
#include <utility>

namespace fane::ad {

Var Tape::push(Mat value, std::function<void(Tape&)> back) {
    Node n;
    n.grad = Mat(value.rows, value.cols, 0.0);
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Mat value) { return push(std::move(value), nullptr); }
Var Tape::constant(Mat value) { return push(std::move(value), nullptr); }

void Tape::backward(Var out) {
    if (value(out).size() != 1) throw DimMismatch("backward: output must be scalar");
    grad_mut(out)(0, 0) = 1.0;
    for (int i = out.id; i >= 0; --i)
        if (nodes_[i].back) nodes_[i].back(*this);
}

namespace {
void accumulate(Mat& dst, const Mat& src) {
    for (int k = 0; k < dst.size(); ++k) dst.data[k] += src.data[k];
}
}  // namespace

Var Tape::matmul(Var a, Var b) {
    Mat out = fane::matmul(value(a), value(b));
    return push(std::move(out), [a, b, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Mat& g = t.grad(self);
        accumulate(t.grad_mut(a), fane::matmul_nt(g, t.value(b)));
        accumulate(t.grad_mut(b), fane::matmul(fane::transpose(t.value(a)), g));
    });
}

Var Tape::matmul_nt(Var a, Var b) {
    Mat out = fane::matmul_nt(value(a), value(b));
    return push(std::move(out), [a, b, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Mat& g = t.grad(self);
        accumulate(t.grad_mut(a), fane::matmul(g, t.value(b)));
        accumulate(t.grad_mut(b), fane::matmul(fane::transpose(g), t.value(a)));
    });
}

Var Tape::transpose(Var a) {
    return push(fane::transpose(value(a)), [a, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        accumulate(t.grad_mut(a), fane::transpose(t.grad(self)));
    });
}

Var Tape::add(Var a, Var b) {
    return push(fane::add(value(a), value(b)), [a, b, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        accumulate(t.grad_mut(a), t.grad(self));
        accumulate(t.grad_mut(b), t.grad(self));
    });
}

Var Tape::sub(Var a, Var b) {
    return push(fane::sub(value(a), value(b)), [a, b, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        accumulate(t.grad_mut(a), t.grad(self));
        accumulate(t.grad_mut(b), fane::scale(t.grad(self), -1.0));
    });
}

Var Tape::mul(Var a, Var b) {
    return push(fane::hadamard(value(a), value(b)), [a, b, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        accumulate(t.grad_mut(a), fane::hadamard(t.grad(self), t.value(b)));
        accumulate(t.grad_mut(b), fane::hadamard(t.grad(self), t.value(a)));
    });
}

Var Tape::scale(Var a, double c) {
    return push(fane::scale(value(a), c), [a, c, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        accumulate(t.grad_mut(a), fane::scale(t.grad(self), c));
    });
}

Var Tape::add_row_broadcast(Var m, Var row) {
    const Mat& mv = value(m);
    const Mat& rv = value(row);
    if (rv.rows != 1 || rv.cols != mv.cols) throw DimMismatch("add_row_broadcast: bad row shape");
    Mat out = mv;
    for (int i = 0; i < out.rows; ++i)
        for (int j = 0; j < out.cols; ++j) out(i, j) += rv(0, j);
    return push(std::move(out), [m, row, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Mat& g = t.grad(self);
        accumulate(t.grad_mut(m), g);
        Mat& dr = t.grad_mut(row);
        for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) dr(0, j) += g(i, j);
    });
}

Var Tape::add_scalar_broadcast(Var m, Var s) {
    if (value(s).size() != 1) throw DimMismatch("add_scalar_broadcast: s must be 1x1");
    Mat out = value(m);
    const double sv = value(s)(0, 0);
    for (double& v : out.data) v += sv;
    return push(std::move(out), [m, s, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Mat& g = t.grad(self);
        accumulate(t.grad_mut(m), g);
        double acc = 0.0;
        for (double v : g.data) acc += v;
        t.grad_mut(s)(0, 0) += acc;
    });
}

Var Tape::mul_const(Var a, Mat c) {
    Mat out = fane::hadamard(value(a), c);
    return push(std::move(out), [a, c = std::move(c), self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        accumulate(t.grad_mut(a), fane::hadamard(t.grad(self), c));
    });
}

Var Tape::broadcast_row(Var row, int n) {
    const Mat& rv = value(row);
    if (rv.rows != 1) throw DimMismatch("broadcast_row: expects a row vector");
    Mat out(n, rv.cols);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < rv.cols; ++j) out(i, j) = rv(0, j);
    return push(std::move(out), [row, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Mat& g = t.grad(self);
        Mat& dr = t.grad_mut(row);
        for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) dr(0, j) += g(i, j);
    });
}

Var Tape::concat_cols(Var a, Var b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    if (av.rows != bv.rows) throw DimMismatch("concat_cols: row count mismatch");
    Mat out(av.rows, av.cols + bv.cols);
    for (int i = 0; i < av.rows; ++i) {
        for (int j = 0; j < av.cols; ++j) out(i, j) = av(i, j);
        for (int j = 0; j < bv.cols; ++j) out(i, av.cols + j) = bv(i, j);
    }
    const int split = av.cols;
    return push(std::move(out), [a, b, split, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Mat& g = t.grad(self);
        Mat& da = t.grad_mut(a);
        Mat& db = t.grad_mut(b);
        for (int i = 0; i < g.rows; ++i) {
            for (int j = 0; j < split; ++j) da(i, j) += g(i, j);
            for (int j = split; j < g.cols; ++j) db(i, j - split) += g(i, j);
        }
    });
}

Var Tape::stack_rows(const std::vector<Var>& rows) {
    if (rows.empty()) throw DimMismatch("stack_rows: empty input");
    const int c = value(rows[0]).cols;
    Mat out(static_cast<int>(rows.size()), c);
    for (size_t i = 0; i < rows.size(); ++i) {
        const Mat& rv = value(rows[i]);
        if (rv.rows != 1 || rv.cols != c) throw DimMismatch("stack_rows: all rows must be 1xC");
        for (int j = 0; j < c; ++j) out(static_cast<int>(i), j) = rv(0, j);
    }
    return push(std::move(out), [rows, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Mat& g = t.grad(self);
        for (size_t i = 0; i < rows.size(); ++i) {
            Mat& dr = t.grad_mut(rows[i]);
            for (int j = 0; j < g.cols; ++j) dr(0, j) += g(static_cast<int>(i), j);
        }
    });
}

Var Tape::tanh(Var a) {
    Mat out = value(a);
    for (double& v : out.data) v = std::tanh(v);
    return push(std::move(out), [a, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Mat& g = t.grad(self);
        const Mat& y = t.value(self);
        Mat& da = t.grad_mut(a);
        for (int k = 0; k < g.size(); ++k) da.data[k] += g.data[k] * (1.0 - y.data[k] * y.data[k]);
    });
}

Var Tape::sigmoid(Var a) {
    Mat out = value(a);
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    return push(std::move(out), [a, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Mat& g = t.grad(self);
        const Mat& y = t.value(self);
        Mat& da = t.grad_mut(a);
        for (int k = 0; k < g.size(); ++k) da.data[k] += g.data[k] * y.data[k] * (1.0 - y.data[k]);
    });
}

Var Tape::softplus(Var a) {
    Mat out = value(a);
    for (double& v : out.data) v = std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
    return push(std::move(out), [a, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Mat& g = t.grad(self);
        const Mat& x = t.value(a);
        Mat& da = t.grad_mut(a);
        for (int k = 0; k < g.size(); ++k) da.data[k] += g.data[k] / (1.0 + std::exp(-x.data[k]));
    });
}

Var Tape::softmax_rows(Var a) {
    Mat out = value(a);
    for (int i = 0; i < out.rows; ++i) {
        double mx = out(i, 0);
        for (int j = 1; j < out.cols; ++j) mx = std::max(mx, out(i, j));
        double z = 0.0;
        for (int j = 0; j < out.cols; ++j) {
            out(i, j) = std::exp(out(i, j) - mx);
            z += out(i, j);
        }
        for (int j = 0; j < out.cols; ++j) out(i, j) /= z;
    }
    return push(std::move(out), [a, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Mat& g = t.grad(self);
        const Mat& y = t.value(self);
        Mat& da = t.grad_mut(a);
        for (int i = 0; i < g.rows; ++i) {
            double gy = 0.0;
            for (int j = 0; j < g.cols; ++j) gy += g(i, j) * y(i, j);
            for (int j = 0; j < g.cols; ++j) da(i, j) += y(i, j) * (g(i, j) - gy);
        }
    });
}

Var Tape::logsumexp_rows(Var a) {
    const Mat& x = value(a);
    Mat out(x.rows, 1);
    for (int i = 0; i < x.rows; ++i) {
        double mx = x(i, 0);
        for (int j = 1; j < x.cols; ++j) mx = std::max(mx, x(i, j));
        double z = 0.0;
        for (int j = 0; j < x.cols; ++j) z += std::exp(x(i, j) - mx);
        out(i, 0) = mx + std::log(z);
    }
    return push(std::move(out), [a, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Mat& g = t.grad(self);
        const Mat& x = t.value(a);
        const Mat& y = t.value(self);
        Mat& da = t.grad_mut(a);
        for (int i = 0; i < x.rows; ++i)
            for (int j = 0; j < x.cols; ++j) da(i, j) += g(i, 0) * std::exp(x(i, j) - y(i, 0));
    });
}

Var Tape::l2_normalize_rows(Var a) {
    Mat out = fane::l2_normalize_rows(value(a));
    return push(std::move(out), [a, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Mat& g = t.grad(self);
        const Mat& x = t.value(a);
        const Mat& y = t.value(self);
        Mat& da = t.grad_mut(a);
        for (int i = 0; i < x.rows; ++i) {
            const double n = fane::row_norm(x, i);
            double gy = 0.0;
            for (int j = 0; j < x.cols; ++j) gy += g(i, j) * y(i, j);
            for (int j = 0; j < x.cols; ++j) da(i, j) += (g(i, j) - y(i, j) * gy) / n;
        }
    });
}

Var Tape::layer_norm_rows(Var xv, Var gain, Var bias) {
    const Mat& x = value(xv);
    const Mat& gn = value(gain);
    const Mat& bs = value(bias);
    if (gn.rows != 1 || bs.rows != 1 || gn.cols != x.cols || bs.cols != x.cols)
        throw LengthMismatch("layer_norm_rows: gain/bias shape mismatch");
    const int d = x.cols;
    Mat out(x.rows, d);
    Mat xhat(x.rows, d);
    std::vector<double> inv_std(x.rows);
    for (int i = 0; i < x.rows; ++i) {
        double mean = 0.0;
        for (int j = 0; j < d; ++j) mean += x(i, j);
        mean /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double c = x(i, j) - mean;
            var += c * c;
        }
        var /= d;
        inv_std[i] = 1.0 / std::sqrt(var + kLayerNormEps);
        for (int j = 0; j < d; ++j) {
            xhat(i, j) = (x(i, j) - mean) * inv_std[i];
            out(i, j) = xhat(i, j) * gn(0, j) + bs(0, j);
        }
    }
    return push(std::move(out), [xv, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std),
                                 self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const Mat& g = t.grad(self);
        const Mat& gn = t.value(gain);
        Mat& dx = t.grad_mut(xv);
        Mat& dg = t.grad_mut(gain);
        Mat& db = t.grad_mut(bias);
        const int d = g.cols;
        for (int i = 0; i < g.rows; ++i) {
            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
            for (int j = 0; j < d; ++j) {
                dg(0, j) += g(i, j) * xhat(i, j);
                db(0, j) += g(i, j);
                const double dxh = g(i, j) * gn(0, j);
                sum_dxhat += dxh;
                sum_dxhat_xhat += dxh * xhat(i, j);
            }
            for (int j = 0; j < d; ++j) {
                const double dxh = g(i, j) * gn(0, j);
                dx(i, j) += inv_std[i] * (dxh - sum_dxhat / d - xhat(i, j) * sum_dxhat_xhat / d);
            }
        }
    });
}

Var Tape::sum(Var a) {
    double s = 0.0;
    for (double v : value(a).data) s += v;
    Mat out(1, 1, s);
    return push(std::move(out), [a, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const double g = t.grad(self)(0, 0);
        Mat& da = t.grad_mut(a);
        for (double& v : da.data) v += g;
    });
}

Var Tape::trace(Var a) {
    const Mat& x = value(a);
    if (x.rows != x.cols) throw DimMismatch("trace: matrix must be square");
    double s = 0.0;
    for (int i = 0; i < x.rows; ++i) s += x(i, i);
    return push(Mat(1, 1, s), [a, self = Var{static_cast<int>(nodes_.size())}](Tape& t) {
        const double g = t.grad(self)(0, 0);
        Mat& da = t.grad_mut(a);
        for (int i = 0; i < da.rows; ++i) da(i, i) += g;
    });
}

}  // namespace fane::ad
