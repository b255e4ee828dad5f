#pragma once

#include <string>

#include "fane/corpus.hpp"
#include "fane/trainer.hpp"

namespace fane {

struct Config {
    CorpusSpec corpus;
    HyperParams hp;
};

// Single flat JSON document; unknown keys are rejected, missing keys take the
// documented defaults. Throws InvalidSpec naming the offending key.
Config parse_config_json(const std::string& text);
Config load_config(const std::string& path);

std::string config_to_json(const Config& cfg);

}  // namespace fane
