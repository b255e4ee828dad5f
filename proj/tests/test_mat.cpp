#include <doctest.h>

#include <cmath>

#include "fane/mat.hpp"
#include "fane/rng.hpp"

using namespace fane;

TEST_CASE("l2_normalize_rows: 3-4-5 triangle") {
    const Mat m = Mat::row_vec({3.0, 4.0});
    const Mat n = l2_normalize_rows(m);
    CHECK(n(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(n(0, 1) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("l2_normalize_rows: idempotent on unit rows") {
    Rng rng(3);
    Mat m = l2_normalize_rows(rng.normal_mat(4, 6, 1.0));
    const Mat again = l2_normalize_rows(m);
    for (int k = 0; k < m.size(); ++k) CHECK(std::abs(m.data[k] - again.data[k]) < 1e-7);
}

TEST_CASE("l2_normalize_rows: random matrix has unit row norms") {
    Rng rng(11);
    const Mat n = l2_normalize_rows(rng.normal_mat(5, 8, 2.0));
    for (int i = 0; i < n.rows; ++i) CHECK(row_norm(n, i) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("l2_normalize_rows: zero row throws") {
    Mat m(2, 3);
    m(0, 0) = 1.0;
    CHECK_THROWS_AS(l2_normalize_rows(m), ZeroRowNorm);
}

TEST_CASE("cosine_sim_matrix: identity rows") {
    Mat m(3, 3);
    for (int i = 0; i < 3; ++i) m(i, i) = 1.0;
    const Mat s = cosine_sim_matrix(m, m);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(s(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
}

TEST_CASE("cosine_sim_matrix: antipodal rows give -1") {
    const Mat a = Mat::row_vec({1.0, 2.0, -0.5});
    const Mat b = scale(a, -3.0);
    const Mat s = cosine_sim_matrix(a, b);
    CHECK(s(0, 0) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("cosine_sim_matrix: matches naive per-pair loop") {
    Rng rng(5);
    const Mat a = rng.normal_mat(4, 6, 1.0);
    const Mat b = rng.normal_mat(3, 6, 1.0);
    const Mat s = cosine_sim_matrix(a, b);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.rows; ++j) {
            double dot = 0, na = 0, nb = 0;
            for (int k = 0; k < a.cols; ++k) {
                dot += a(i, k) * b(j, k);
                na += a(i, k) * a(i, k);
                nb += b(j, k) * b(j, k);
            }
            CHECK(std::abs(s(i, j) - dot / std::sqrt(na * nb)) < 1e-9);
        }
}

TEST_CASE("cosine_sim_matrix: self similarity symmetric, unit diagonal") {
    Rng rng(9);
    const Mat a = rng.normal_mat(5, 4, 1.0);
    const Mat s = cosine_sim_matrix(a, a);
    for (int i = 0; i < 5; ++i) {
        CHECK(std::abs(s(i, i) - 1.0) < 1e-9);
        for (int j = 0; j < 5; ++j) CHECK(std::abs(s(i, j) - s(j, i)) < 1e-9);
    }
}

TEST_CASE("cosine_sim_matrix: dimension mismatch throws") {
    CHECK_THROWS_AS(cosine_sim_matrix(Mat(2, 3, 1.0), Mat(2, 4, 1.0)), DimMismatch);
}

TEST_CASE("layer_norm: [1,2,3] normalizes to mean 0 var 1") {
    const Mat v = Mat::row_vec({1.0, 2.0, 3.0});
    const Mat out = layer_norm(v, Mat(1, 3, 1.0), Mat(1, 3, 0.0));
    double mean = 0;
    for (int j = 0; j < 3; ++j) mean += out(0, j);
    mean /= 3;
    CHECK(std::abs(mean) < 1e-6);
    double var = 0;
    for (int j = 0; j < 3; ++j) var += (out(0, j) - mean) * (out(0, j) - mean);
    var /= 3;
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));  // stabilizer shrinks it slightly
}

TEST_CASE("layer_norm: constant vector maps to zeros pre-affine") {
    const Mat out = layer_norm(Mat(1, 5, 4.2), Mat(1, 5, 1.0), Mat(1, 5, 0.0));
    for (double v : out.data) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("layer_norm: matches scalar reference on random input") {
    Rng rng(17);
    const Mat v = rng.normal_mat(1, 8, 1.3);
    const Mat g = rng.normal_mat(1, 8, 0.5);
    const Mat b = rng.normal_mat(1, 8, 0.5);
    const Mat out = layer_norm(v, g, b);
    double mean = 0;
    for (int j = 0; j < 8; ++j) mean += v(0, j);
    mean /= 8;
    double var = 0;
    for (int j = 0; j < 8; ++j) var += (v(0, j) - mean) * (v(0, j) - mean);
    var /= 8;
    for (int j = 0; j < 8; ++j) {
        const double ref = (v(0, j) - mean) / std::sqrt(var + 1e-5) * g(0, j) + b(0, j);
        CHECK(std::abs(out(0, j) - ref) < 1e-6);
    }
}

TEST_CASE("layer_norm: length mismatch throws") {
    CHECK_THROWS_AS(layer_norm(Mat(1, 4, 1.0), Mat(1, 3, 1.0), Mat(1, 4, 0.0)), LengthMismatch);
}

TEST_CASE("matmul determinism") {
    Rng rng(2);
    const Mat a = rng.normal_mat(3, 5, 1.0);
    const Mat b = rng.normal_mat(5, 2, 1.0);
    const Mat c1 = matmul(a, b);
    const Mat c2 = matmul(a, b);
    CHECK(c1.data == c2.data);
}
