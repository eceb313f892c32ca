#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hst/evaluate.hpp"
#include "hst/models.hpp"
#include "hst/synthetic.hpp"

namespace hst::cli {

// Parsed run-config document (one JSON file describing one training run).
struct RunConfig {
    model::ModelKind kind = model::ModelKind::LinkedDnn;
    std::uint64_t seed = 0;
    std::string cache_dir;   // dataset cache from prepare-data / synth
    std::string output_dir;

    bool sae_enabled = true;
    model::SaeConfig sae;         // input_width filled from the dataset at train time
    model::StageHyper sae_hyper;  // pretraining loop settings

    model::DnnConfig dnn;
    model::CnnConfig cnn;
    std::vector<model::StageHyper> stages;  // num_stages(kind) entries

    eval::ErrorModelConfig error_model;
};

// Parse + validate; every problem found is listed in one ConfigError.
RunConfig parse_run_config(const std::string& path);

// Synthetic-site generator settings (for the synth command).
data::SyntheticConfig parse_synthetic_config(const std::string& path);

eval::ErrorModelConfig parse_error_model_name(const std::string& name,
                                              eval::ErrorModelConfig base);

}  // namespace hst::cli
