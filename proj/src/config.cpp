#include "fane/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace fane {

using nlohmann::json;

namespace {
const std::set<std::string> kKnownKeys = {
    // corpus
    "n_samples", "n_concepts", "sentences_min", "sentences_max", "patches", "token_dim", "grid_side",
    "duplicate_group_count", "noise_sigma", "seed",
    // objective / training
    "tau1", "tau2", "tau3", "kappa", "ema_alpha", "epsilon", "lambda1", "lambda2", "lambda3", "b_init",
    "lr_init", "weight_decay", "epochs", "batch", "embed_dim", "mask_hidden", "holdout", "eq6_literal",
    "pool_normalizer"};

template <class T>
void take(const json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}
}  // namespace

Config parse_config_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidSpec(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw InvalidSpec("config must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!kKnownKeys.count(key)) throw InvalidSpec("unknown config key: " + key);

    Config cfg;
    take(j, "n_samples", cfg.corpus.n_samples);
    take(j, "n_concepts", cfg.corpus.n_concepts);
    take(j, "sentences_min", cfg.corpus.sentences_min);
    take(j, "sentences_max", cfg.corpus.sentences_max);
    take(j, "patches", cfg.corpus.patches);
    take(j, "token_dim", cfg.corpus.token_dim);
    take(j, "grid_side", cfg.corpus.grid_side);
    take(j, "duplicate_group_count", cfg.corpus.duplicate_group_count);
    take(j, "noise_sigma", cfg.corpus.noise_sigma);
    take(j, "seed", cfg.corpus.seed);
    cfg.hp.seed = cfg.corpus.seed;
    take(j, "tau1", cfg.hp.tau1);
    take(j, "tau2", cfg.hp.tau2);
    take(j, "tau3", cfg.hp.tau3);
    take(j, "kappa", cfg.hp.kappa);
    take(j, "ema_alpha", cfg.hp.ema_alpha);
    take(j, "epsilon", cfg.hp.epsilon);
    take(j, "lambda1", cfg.hp.lambda1);
    take(j, "lambda2", cfg.hp.lambda2);
    take(j, "lambda3", cfg.hp.lambda3);
    take(j, "b_init", cfg.hp.b_init);
    take(j, "lr_init", cfg.hp.lr_init);
    take(j, "weight_decay", cfg.hp.weight_decay);
    take(j, "epochs", cfg.hp.epochs);
    take(j, "batch", cfg.hp.batch);
    take(j, "embed_dim", cfg.hp.embed_dim);
    take(j, "mask_hidden", cfg.hp.mask_hidden);
    take(j, "holdout", cfg.hp.holdout);
    take(j, "eq6_literal", cfg.hp.eq6_literal);
    if (j.contains("pool_normalizer")) {
        const std::string v = j.at("pool_normalizer").get<std::string>();
        if (v == "sigmoid")
            cfg.hp.pool_norm = PoolNormalizer::Sigmoid;
        else if (v == "softmax")
            cfg.hp.pool_norm = PoolNormalizer::Softmax;
        else
            throw InvalidSpec("pool_normalizer must be 'sigmoid' or 'softmax'");
    }
    if (cfg.hp.tau1 <= 0 || cfg.hp.tau2 <= 0 || cfg.hp.tau3 <= 0)
        throw InvalidSpec("temperatures must be > 0");
    if (cfg.hp.lambda1 < 0 || cfg.hp.lambda2 < 0 || cfg.hp.lambda3 < 0)
        throw InvalidSpec("lambdas must be >= 0");
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidSpec("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return parse_config_json(text);
}

std::string config_to_json(const Config& cfg) {
    json j{{"n_samples", cfg.corpus.n_samples},
           {"n_concepts", cfg.corpus.n_concepts},
           {"sentences_min", cfg.corpus.sentences_min},
           {"sentences_max", cfg.corpus.sentences_max},
           {"patches", cfg.corpus.patches},
           {"token_dim", cfg.corpus.token_dim},
           {"grid_side", cfg.corpus.grid_side},
           {"duplicate_group_count", cfg.corpus.duplicate_group_count},
           {"noise_sigma", cfg.corpus.noise_sigma},
           {"seed", cfg.corpus.seed},
           {"tau1", cfg.hp.tau1},
           {"tau2", cfg.hp.tau2},
           {"tau3", cfg.hp.tau3},
           {"kappa", cfg.hp.kappa},
           {"ema_alpha", cfg.hp.ema_alpha},
           {"epsilon", cfg.hp.epsilon},
           {"lambda1", cfg.hp.lambda1},
           {"lambda2", cfg.hp.lambda2},
           {"lambda3", cfg.hp.lambda3},
           {"b_init", cfg.hp.b_init},
           {"lr_init", cfg.hp.lr_init},
           {"weight_decay", cfg.hp.weight_decay},
           {"epochs", cfg.hp.epochs},
           {"batch", cfg.hp.batch},
           {"embed_dim", cfg.hp.embed_dim},
           {"mask_hidden", cfg.hp.mask_hidden},
           {"holdout", cfg.hp.holdout},
           {"eq6_literal", cfg.hp.eq6_literal},
           {"pool_normalizer", cfg.hp.pool_norm == PoolNormalizer::Sigmoid ? "sigmoid" : "softmax"}};
    return j.dump(2);
}

}  // namespace fane
