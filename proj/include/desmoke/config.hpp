#pragma once
// Declarative run configuration: one JSON document with a flat section per
// module. Every field is validated up front and unknown keys are rejected.

#include <cstdint>
#include <string>
#include <vector>

#include "desmoke/policy_opt.hpp"
#include "desmoke/synth.hpp"

namespace desmoke {

struct SynthSection {
    int n = 200;
    int height = 16;
    int width = 16;
    double density = 1.0;
    double smoothness = 6.0;
    int modes = 6;
    double airlight[3] = {0.95, 0.95, 0.98};
    double train_frac = 0.8;
};

struct DiffusionSection {
    int timesteps = 100;
    double beta_min = 1e-3;  // Ho-style linear schedule scaled for T = 100
    double beta_max = 0.2;
    int hidden = 32;
    int time_embed_dim = 8;
    int concept_dim = 0;
};

struct PretrainSection {
    int steps = 3000;
    double lr = 0.05;
};

struct ConceptsSection {
    int dim = 64;
    double tau = 0.07;
    int steps = 200;
    double lr = 0.5;
};

struct RewardsSection {
    double w_pg = 1.0;
    double w_rf = 1.0;
    double w_vc = 1.0;
    std::vector<std::string> scorers = {"ceiq"};
    std::string external_scores_csv;
    double scorer_scale = 1.0;
    double scorer_offset = 0.0;
};

struct RpoSection {
    int group_size = 4;
    double clip_eps = 0.2;
    double lambda_kl = 0.01;
    double lr = 0.02;
    int iterations = 200;
    int inner_epochs = 1;
    double advantage_eps = 1e-8;
    int ratio_stride = 1;
    bool per_step_ratio = false;
    double max_grad_norm = 10.0;
};

struct RunConfig {
    std::uint64_t seed = 7;
    SynthSection synth;
    DiffusionSection diffusion;
    PretrainSection pretrain;
    ConceptsSection concepts;
    RewardsSection rewards;
    RpoSection rpo;
};

// Parses and validates; throws ConfigError on unknown keys, type errors or
// out-of-range values.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// Canonical serialized form (sorted keys); hash is FNV-1a over it.
std::string config_to_json(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);

SmokeConfig smoke_config_from(const RunConfig& cfg);
RpoConfig rpo_config_from(const RunConfig& cfg);

}  // namespace desmoke
