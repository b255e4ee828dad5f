#include "fane/mat.hpp"

#include <cmath>
#include <string>

namespace fane {

Mat::Mat(int r, int c, double fill) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

Mat Mat::row_vec(std::initializer_list<double> vals) {
    Mat m(1, static_cast<int>(vals.size()));
    int j = 0;
    for (double v : vals) m(0, j++) = v;
    return m;
}

Mat Mat::from_rows(int r, int c, std::initializer_list<double> vals) {
    if (static_cast<int>(vals.size()) != r * c)
        throw DimMismatch("from_rows: value count does not match shape");
    Mat m(r, c);
    int k = 0;
    for (double v : vals) m.data[k++] = v;
    return m;
}

bool Mat::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void ensure_finite(const Mat& m, const char* what) {
    if (!m.all_finite()) throw NonFiniteValue(std::string("non-finite entries in ") + what);
}

Mat add(const Mat& a, const Mat& b) {
    if (!a.same_shape(b)) throw DimMismatch("add: shape mismatch");
    Mat out = a;
    for (int k = 0; k < out.size(); ++k) out.data[k] += b.data[k];
    return out;
}

Mat sub(const Mat& a, const Mat& b) {
    if (!a.same_shape(b)) throw DimMismatch("sub: shape mismatch");
    Mat out = a;
    for (int k = 0; k < out.size(); ++k) out.data[k] -= b.data[k];
    return out;
}

Mat hadamard(const Mat& a, const Mat& b) {
    if (!a.same_shape(b)) throw DimMismatch("hadamard: shape mismatch");
    Mat out = a;
    for (int k = 0; k < out.size(); ++k) out.data[k] *= b.data[k];
    return out;
}

Mat scale(const Mat& a, double c) {
    Mat out = a;
    for (double& v : out.data) v *= c;
    return out;
}

Mat matmul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) throw DimMismatch("matmul: inner dimensions differ");
    Mat out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
    if (a.cols != b.cols) throw DimMismatch("matmul_nt: inner dimensions differ");
    Mat out(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.rows; ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += a(i, k) * b(j, k);
            out(i, j) = s;
        }
    return out;
}

Mat transpose(const Mat& a) {
    Mat out(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

double row_norm(const Mat& m, int i) {
    double s = 0.0;
    for (int j = 0; j < m.cols; ++j) s += m(i, j) * m(i, j);
    return std::sqrt(s);
}

double dot_rows(const Mat& a, int i, const Mat& b, int j) {
    if (a.cols != b.cols) throw DimMismatch("dot_rows: width mismatch");
    double s = 0.0;
    for (int k = 0; k < a.cols; ++k) s += a(i, k) * b(j, k);
    return s;
}

Mat l2_normalize_rows(const Mat& m) {
    Mat out = m;
    for (int i = 0; i < m.rows; ++i) {
        const double n = row_norm(m, i);
        if (n < 1e-12) throw ZeroRowNorm("l2_normalize_rows: row " + std::to_string(i) + " has zero norm");
        for (int j = 0; j < m.cols; ++j) out(i, j) = m(i, j) / n;
    }
    ensure_finite(out, "l2_normalize_rows");
    return out;
}

Mat cosine_sim_matrix(const Mat& a, const Mat& b) {
    if (a.cols != b.cols) throw DimMismatch("cosine_sim_matrix: width mismatch");
    const Mat an = l2_normalize_rows(a);
    const Mat bn = l2_normalize_rows(b);
    Mat out = matmul_nt(an, bn);
    ensure_finite(out, "cosine_sim_matrix");
    return out;
}

Mat layer_norm(const Mat& v, const Mat& gain, const Mat& bias) {
    if (v.rows != 1 || gain.rows != 1 || bias.rows != 1 || v.cols != gain.cols || v.cols != bias.cols)
        throw LengthMismatch("layer_norm: inputs must be equal-length row vectors");
    if (v.cols < 2) throw LengthMismatch("layer_norm: length must be >= 2");
    const int d = v.cols;
    double mean = 0.0;
    for (int j = 0; j < d; ++j) mean += v(0, j);
    mean /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
        const double c = v(0, j) - mean;
        var += c * c;
    }
    var /= d;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    Mat out(1, d);
    for (int j = 0; j < d; ++j) out(0, j) = (v(0, j) - mean) * inv * gain(0, j) + bias(0, j);
    ensure_finite(out, "layer_norm");
    return out;
}

}  // namespace fane
