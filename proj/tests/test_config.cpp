#include <doctest.h>

#include "fane/config.hpp"

using namespace fane;

TEST_CASE("config: empty object yields documented defaults") {
    const Config cfg = parse_config_json("{}");
    CHECK(cfg.corpus.n_samples == 240);
    CHECK(cfg.corpus.n_concepts == 12);
    CHECK(cfg.corpus.patches == 36);
    CHECK(cfg.corpus.grid_side == 6);
    CHECK(cfg.corpus.duplicate_group_count == 20);
    CHECK(cfg.corpus.noise_sigma == 0.0);
    CHECK(cfg.corpus.seed == 7);
    CHECK(cfg.hp.tau1 == 0.1);
    CHECK(cfg.hp.tau2 == 0.07);
    CHECK(cfg.hp.tau3 == 0.07);
    CHECK(cfg.hp.kappa == 0.95);
    CHECK(cfg.hp.ema_alpha == 0.05);
    CHECK(cfg.hp.lambda1 == 1.0);
    CHECK(cfg.hp.lambda2 == 1.0);
    CHECK(cfg.hp.lambda3 == 1.0);
    CHECK(cfg.hp.b_init == -10.0);
    CHECK(cfg.hp.lr_init == 4e-4);
    CHECK(cfg.hp.batch == 12);
    CHECK(cfg.hp.embed_dim == 128);
    CHECK(cfg.hp.holdout == 60);
    CHECK(cfg.hp.eq6_literal == false);
    CHECK(cfg.hp.pool_norm == PoolNormalizer::Sigmoid);
    CHECK(cfg.hp.seed == cfg.corpus.seed);
}

TEST_CASE("config: overrides are applied") {
    const Config cfg = parse_config_json(R"({"kappa": 0.8, "batch": 6, "noise_sigma": 0.1,
        "pool_normalizer": "softmax", "eq6_literal": true, "seed": 42})");
    CHECK(cfg.hp.kappa == 0.8);
    CHECK(cfg.hp.batch == 6);
    CHECK(cfg.corpus.noise_sigma == 0.1);
    CHECK(cfg.hp.pool_norm == PoolNormalizer::Softmax);
    CHECK(cfg.hp.eq6_literal == true);
    CHECK(cfg.corpus.seed == 42);
    CHECK(cfg.hp.seed == 42);
}

TEST_CASE("config: unknown keys are rejected by name") {
    try {
        parse_config_json(R"({"kapa": 0.8})");
        FAIL("expected InvalidSpec");
    } catch (const InvalidSpec& e) {
        CHECK(std::string(e.what()).find("kapa") != std::string::npos);
    }
}

TEST_CASE("config: malformed JSON and wrong top-level type are rejected") {
    CHECK_THROWS_AS(parse_config_json("{"), InvalidSpec);
    CHECK_THROWS_AS(parse_config_json("[1,2]"), InvalidSpec);
}

TEST_CASE("config: invalid values are rejected") {
    CHECK_THROWS_AS(parse_config_json(R"({"tau1": 0})"), InvalidSpec);
    CHECK_THROWS_AS(parse_config_json(R"({"tau3": -0.1})"), InvalidSpec);
    CHECK_THROWS_AS(parse_config_json(R"({"lambda2": -1})"), InvalidSpec);
    CHECK_THROWS_AS(parse_config_json(R"({"pool_normalizer": "max"})"), InvalidSpec);
}

TEST_CASE("config: serialization round trips") {
    Config cfg = parse_config_json(R"({"kappa": 0.9, "epochs": 5, "pool_normalizer": "softmax"})");
    const Config back = parse_config_json(config_to_json(cfg));
    CHECK(back.hp.kappa == 0.9);
    CHECK(back.hp.epochs == 5);
    CHECK(back.hp.pool_norm == PoolNormalizer::Softmax);
    CHECK(back.corpus.n_samples == cfg.corpus.n_samples);
}
