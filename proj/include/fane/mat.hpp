#pragma once

#include <initializer_list>
#include <vector>

#include "fane/errors.hpp"

namespace fane {

// Dense row-major matrix of doubles. Vectors are 1xN matrices.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0);
    static Mat row_vec(std::initializer_list<double> vals);
    static Mat from_rows(int r, int c, std::initializer_list<double> vals);

    double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

    int size() const { return rows * cols; }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
    bool all_finite() const;
};

Mat add(const Mat& a, const Mat& b);
Mat sub(const Mat& a, const Mat& b);
Mat hadamard(const Mat& a, const Mat& b);
Mat scale(const Mat& a, double c);
Mat matmul(const Mat& a, const Mat& b);
Mat matmul_nt(const Mat& a, const Mat& b);  // a * b^T
Mat transpose(const Mat& a);

double row_norm(const Mat& m, int i);
double dot_rows(const Mat& a, int i, const Mat& b, int j);

// Unit-normalizes each row; throws ZeroRowNorm if a row norm is below 1e-12.
Mat l2_normalize_rows(const Mat& m);

// out[i][j] = <a_i, b_j> / (|a_i| |b_j|)
Mat cosine_sim_matrix(const Mat& a, const Mat& b);

// LayerNorm with biased (1/D) variance and 1e-5 stabilizer under the root.
Mat layer_norm(const Mat& v, const Mat& gain, const Mat& bias);

inline constexpr double kLayerNormEps = 1e-5;

void ensure_finite(const Mat& m, const char* what);

}  // namespace fane
