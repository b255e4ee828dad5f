#include <doctest.h>

#include <cmath>

#include "fane/rng.hpp"
#include "fane/semantic_division.hpp"

using namespace fane;

TEST_CASE("batch_prototype: single row is its own normalized self") {
    const Mat t = Mat::row_vec({3.0, 4.0});
    const Mat p = batch_prototype(t);
    CHECK(p(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(p(0, 1) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("batch_prototype: matches naive mean of normalized rows") {
    Rng rng(4);
    const Mat t = rng.normal_mat(6, 5, 1.0);
    const Mat norm = l2_normalize_rows(t);
    const Mat p = batch_prototype(t);
    for (int j = 0; j < 5; ++j) {
        double mean = 0;
        for (int i = 0; i < 6; ++i) mean += norm(i, j);
        CHECK(p(0, j) == doctest::Approx(mean / 6).epsilon(1e-12));
    }
}

TEST_CASE("base_similarity: identical rows give 1") {
    Mat t(4, 3);
    for (int i = 0; i < 4; ++i) t(i, 0) = 2.0;
    const Mat p = batch_prototype(t);
    CHECK(base_similarity(t, p) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("base_similarity: antipodal pair cancels the prototype") {
    Mat t(2, 2);
    t(0, 0) = 1.0;
    t(1, 0) = -1.0;
    CHECK_THROWS_AS(batch_prototype(t), ZeroPrototype);
}

TEST_CASE("base_similarity: naive loop oracle on random batch") {
    Rng rng(8);
    const Mat t = rng.normal_mat(5, 7, 1.0);
    const Mat p = batch_prototype(t);
    const Mat norm = l2_normalize_rows(t);
    const Mat pn = l2_normalize_rows(p);
    double mean = 0;
    for (int i = 0; i < 5; ++i) mean += dot_rows(norm, i, pn, 0);
    mean /= 5;
    CHECK(base_similarity(t, p) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("ema_update: worked example") {
    // prev smoothed 0.5, new raw 0.7, alpha 0.05 -> 0.51
    CHECK(ema_update(0.5, 0.7, 0.05) == doctest::Approx(0.51).epsilon(1e-12));
}

TEST_CASE("ema_update: alpha 1 tracks raw, alpha 0 freezes") {
    CHECK(ema_update(0.2, 0.9, 1.0) == doctest::Approx(0.9));
    CHECK(ema_update(0.2, 0.9, 0.0) == doctest::Approx(0.2));
}

TEST_CASE("normalize_similarity: worked example at o*=0.8") {
    const Mat S = Mat::from_rows(2, 2, {1.0, 0.9, 0.9, 1.0});
    const Mat St = normalize_similarity(S, 0.8, 1e-8);
    CHECK(St(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(St(0, 1) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(St(1, 0) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("normalize_similarity: entries at o* map to zero") {
    const Mat S(3, 3, 0.4);
    const Mat St = normalize_similarity(S, 0.4, 1e-8);
    for (double v : St.data) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("class_matrix: strict threshold, forced diagonal") {
    const Mat St = Mat::from_rows(2, 2, {0.3, 0.95, 0.96, 0.2});
    const Mat H = class_matrix(St, 0.95);
    CHECK(H(0, 0) == 1.0);  // diagonal forced despite 0.3
    CHECK(H(0, 1) == 0.0);  // equality is not enough
    CHECK(H(1, 0) == 1.0);
    CHECK(H(1, 1) == 1.0);
}

TEST_CASE("class_matrix: kappa below -1 marks everything positive") {
    Rng rng(2);
    const Mat St = rng.normal_mat(4, 4, 0.3);
    const Mat H = class_matrix(St, -2.0);
    for (double v : H.data) CHECK(v == 1.0);
}

TEST_CASE("class_matrix: positives shrink monotonically in kappa") {
    Rng rng(6);
    Mat t = rng.normal_mat(8, 5, 1.0);
    for (int i = 0; i < 8; ++i) t(i, 0) += 2.0;  // shared direction keeps the prototype away from zero
    double ema = 0;
    double prev_count = 1e9;
    for (double kappa : {0.0, 0.3, 0.6, 0.9}) {
        DivisionParams p;
        p.kappa = kappa;
        ema = 0;
        const SimilarityState st = divide(t, p, ema, 0);
        double count = 0;
        for (double v : st.H.data) count += v;
        CHECK(count <= prev_count);
        prev_count = count;
    }
}

TEST_CASE("divide: step 0 seeds the EMA with the raw value") {
    Rng rng(3);
    Mat t = rng.normal_mat(5, 6, 1.0);
    for (int i = 0; i < 5; ++i) t(i, 1) += 1.5;
    DivisionParams p;
    double ema = 123.0;  // stale value must be ignored at step 0
    const SimilarityState st = divide(t, p, ema, 0);
    CHECK(st.base_sim_ema == doctest::Approx(st.base_sim_raw).epsilon(1e-12));
    CHECK(ema == doctest::Approx(st.base_sim_raw).epsilon(1e-12));
}

TEST_CASE("divide: later steps blend via the EMA recurrence") {
    Rng rng(3);
    Mat t = rng.normal_mat(5, 6, 1.0);
    for (int i = 0; i < 5; ++i) t(i, 1) += 1.5;
    DivisionParams p;
    double ema = 0;
    divide(t, p, ema, 0);
    const double seeded = ema;
    const SimilarityState st = divide(t, p, ema, 1);
    CHECK(st.base_sim_ema ==
          doctest::Approx(p.ema_alpha * st.base_sim_raw + (1 - p.ema_alpha) * seeded).epsilon(1e-12));
}

TEST_CASE("divide: S and S_tilde match the scalar pipeline") {
    Rng rng(10);
    Mat t = rng.normal_mat(6, 8, 1.0);
    for (int i = 0; i < 6; ++i) t(i, 0) += 2.0;
    DivisionParams p;
    double ema = 0;
    const SimilarityState st = divide(t, p, ema, 0);
    const Mat S_ref = cosine_sim_matrix(t, t);
    for (int k = 0; k < S_ref.size(); ++k) CHECK(st.S.data[k] == doctest::Approx(S_ref.data[k]).epsilon(1e-12));
    for (int k = 0; k < S_ref.size(); ++k) {
        const double ref = (S_ref.data[k] - st.base_sim_ema) / (1.0 - st.base_sim_ema + p.epsilon);
        CHECK(st.S_tilde.data[k] == doctest::Approx(ref).epsilon(1e-10));
    }
    for (int i = 0; i < 6; ++i) CHECK(st.H(i, i) == 1.0);
}
