#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fane/hard_negative.hpp"
#include "fane/rng.hpp"

using namespace fane;

TEST_CASE("negative_indicator: complement with zero diagonal") {
    const Mat H = Mat::from_rows(3, 3, {1, 1, 0, 1, 1, 0, 0, 0, 1});
    const Mat y = negative_indicator(H);
    CHECK(y(0, 0) == 0.0);
    CHECK(y(0, 1) == 0.0);
    CHECK(y(0, 2) == 1.0);
    CHECK(y(2, 0) == 1.0);
    CHECK(y(2, 2) == 0.0);
    CHECK_THROWS_AS(negative_indicator(Mat(2, 2, 0.3)), BadEntry);
}

TEST_CASE("hard_weights: single negative gets weight 1") {
    Mat sims(3, 3, 0.2);
    Mat y(3, 3);
    y(0, 2) = 1.0;
    const HardWeights hw = hard_weights(sims, y, 0.07);
    CHECK(hw.weights(0, 2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hw.weights(0, 0) == 0.0);
    CHECK(hw.weights(0, 1) == 0.0);
}

TEST_CASE("hard_weights: 0.2 and 0.6 similarities split 0.25 / 0.75") {
    Mat sims(3, 3);
    sims(0, 1) = 0.2;
    sims(0, 2) = 0.6;
    Mat y(3, 3);
    y(0, 1) = 1.0;
    y(0, 2) = 1.0;
    const HardWeights hw = hard_weights(sims, y, 0.07);
    CHECK(hw.weights(0, 1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(hw.weights(0, 2) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("hard_weights: rows sum to 1 over negatives on random input") {
    Rng rng(3);
    const int B = 7;
    Mat g = l2_normalize_rows(rng.normal_mat(B, 5, 1.0));
    Mat sims = cosine_sim_matrix(g, g);
    for (double& v : sims.data) v = std::abs(v);  // keep hardness positive
    Mat y(B, B);
    for (int i = 0; i < B; ++i)
        for (int j = 0; j < B; ++j) y(i, j) = (i != j && (i + j) % 2 == 0) ? 1.0 : 0.0;
    const HardWeights hw = hard_weights(sims, y, 0.07);
    for (int i = 0; i < B; ++i) {
        double total = 0;
        bool any = false;
        for (int j = 0; j < B; ++j) {
            total += hw.weights(i, j);
            if (y(i, j) != 0.0) any = true;
            if (y(i, j) == 0.0) CHECK(hw.weights(i, j) == 0.0);
        }
        if (any) CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("hard_weights: harder negatives get larger weights") {
    Mat sims(4, 4);
    sims(0, 1) = 0.1;
    sims(0, 2) = 0.5;
    sims(0, 3) = 0.9;
    Mat y(4, 4);
    y(0, 1) = y(0, 2) = y(0, 3) = 1.0;
    const HardWeights hw = hard_weights(sims, y, 0.07);
    CHECK(hw.weights(0, 1) < hw.weights(0, 2));
    CHECK(hw.weights(0, 2) < hw.weights(0, 3));
}

TEST_CASE("hard_weights: degenerate rows fall back to uniform") {
    // negatives with cancelling similarities -> tiny denominator
    Mat sims(3, 3);
    sims(0, 1) = 0.4;
    sims(0, 2) = -0.4;
    Mat y(3, 3);
    y(0, 1) = 1.0;
    y(0, 2) = 1.0;
    const HardWeights hw = hard_weights(sims, y, 0.07);
    CHECK(hw.weights(0, 1) == doctest::Approx(0.5));
    CHECK(hw.weights(0, 2) == doctest::Approx(0.5));
    REQUIRE(!hw.fallback_rows.empty());
    CHECK(hw.fallback_rows[0] == 0);
}

TEST_CASE("hard_weights: negative similarity forces uniform fallback") {
    Mat sims(3, 3);
    sims(0, 1) = 0.8;
    sims(0, 2) = -0.2;  // would produce a negative weight
    Mat y(3, 3);
    y(0, 1) = 1.0;
    y(0, 2) = 1.0;
    const HardWeights hw = hard_weights(sims, y, 0.07);
    CHECK(hw.weights(0, 1) == doctest::Approx(0.5));
    CHECK(hw.weights(0, 2) == doctest::Approx(0.5));
    // rows 1 and 2 have no negatives at all, so they are flagged as well
    CHECK(hw.fallback_rows == std::vector<int>({0, 1, 2}));
}

TEST_CASE("hard_weights: rows without negatives are flagged and zero") {
    Mat sims(2, 2, 0.5);
    Mat y(2, 2);  // all zero
    const HardWeights hw = hard_weights(sims, y, 0.07);
    for (double v : hw.weights.data) CHECK(v == 0.0);
    CHECK(hw.fallback_rows == std::vector<int>({0, 1}));
}

TEST_CASE("intra_modal_loss: no negatives anywhere gives log B") {
    Rng rng(4);
    const int B = 5;
    const Mat g0 = l2_normalize_rows(rng.normal_mat(B, 6, 1.0));
    ad::Tape tape;
    const ad::Var g = tape.input(g0);
    const ad::Var l = intra_modal_loss(tape, g, Mat(B, B, 0.0), Mat(B, B, 0.0), 0.07);
    CHECK(tape.scalar(l) == doctest::Approx(std::log(static_cast<double>(B))).epsilon(1e-12));
}

TEST_CASE("intra_modal_loss: B=2 with one mutual negative, closed form") {
    const double tau3 = 0.07;
    Mat g0(2, 2);
    g0(0, 0) = 1.0;
    g0(1, 0) = std::cos(0.4);
    g0(1, 1) = std::sin(0.4);
    const double s = g0(1, 0);
    Mat y(2, 2);
    y(0, 1) = 1.0;
    y(1, 0) = 1.0;
    Mat w(2, 2);
    w(0, 1) = 1.0;
    w(1, 0) = 1.0;
    ad::Tape tape;
    const ad::Var l = intra_modal_loss(tape, tape.input(g0), y, w, tau3);
    const double ref = std::log1p(std::exp(s / tau3));  // both rows identical by symmetry
    CHECK(tape.scalar(l) == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("intra_modal_loss: matches naive exponent oracle") {
    Rng rng(6);
    const int B = 6;
    const Mat g0 = l2_normalize_rows(rng.normal_mat(B, 7, 1.0));
    Mat sims = cosine_sim_matrix(g0, g0);
    for (double& v : sims.data) v = std::abs(v);
    Mat y(B, B);
    for (int i = 0; i < B; ++i)
        for (int j = 0; j < B; ++j) y(i, j) = (i != j && rng.uniform() < 0.5) ? 1.0 : 0.0;
    const double tau3 = 0.07;
    const HardWeights hw = hard_weights(sims, y, tau3);

    ad::Tape tape;
    const ad::Var l = intra_modal_loss(tape, tape.input(g0), y, hw.weights, tau3);

    const Mat real_sims = cosine_sim_matrix(g0, g0);
    double ref = 0;
    for (int i = 0; i < B; ++i) {
        double acc = 0;
        for (int j = 0; j < B; ++j)
            acc += std::exp(y(i, j) * hw.weights(i, j) * real_sims(i, j) / tau3);
        ref += std::log(acc);
    }
    ref /= B;
    CHECK(tape.scalar(l) == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("intra_modal_loss: rejects non-unit rows") {
    ad::Tape tape;
    const ad::Var g = tape.input(Mat(2, 3, 0.9));
    CHECK_THROWS_AS(intra_modal_loss(tape, g, Mat(2, 2, 0.0), Mat(2, 2, 0.0), 0.07), NonUnitRows);
}
