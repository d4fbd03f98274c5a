#pragma once
// Physics-guided reward: inter-channel P95 color priors plus intra-channel
// stability deltas between the input and the restored image.

#include <cstdint>
#include <string>
#include <vector>

#include "desmoke/image.hpp"

namespace desmoke {

// 95th-percentile absolute channel-mean differences over a reference corpus.
struct PriorReference {
    double mrg = 0.0;
    double mrb = 0.0;
    double mgb = 0.0;
    std::uint64_t corpus_hash = 0;
    double percentile = 95.0;
};

// For each corpus image takes |mu_R-mu_G|, |mu_R-mu_B|, |mu_G-mu_B| and the
// P95 of each list. Corpus must be non-empty.
PriorReference build_prior_reference(const std::vector<Image>& corpus,
                                     std::uint64_t corpus_hash_value = 0);

std::string prior_to_json(const PriorReference& ref);
PriorReference prior_from_json(const std::string& text);
void save_prior(const PriorReference& ref, const std::string& path);
PriorReference load_prior(const std::string& path);

struct InterChannelResult {
    double l_rg = 0.0;  // max(0, MRG - |mu_R - mu_G|)
    double l_rb = 0.0;  // max(0, MRB - |mu_R - mu_B|)
    double l_gb = 0.0;  // max(0, |mu_G - mu_B| - MGB)
    double r_a = 0.0;   // -(l_rg + l_rb + l_gb)
};

InterChannelResult reward_inter(const Image& pred, const PriorReference& ref);

struct IntraChannelResult {
    double delta_mu[3] = {0, 0, 0};
    double delta_sigma[3] = {0, 0, 0};
    double delta_grad[3] = {0, 0, 0};
    // (dG+dB)/2 - dR summed over the mu, sigma and grad deltas
    double r_b = 0.0;
};

IntraChannelResult reward_intra(const Image& input, const Image& pred);

struct PhysicsRewardBreakdown {
    InterChannelResult inter;
    IntraChannelResult intra;
    double r_pg = 0.0;  // inter.r_a + intra.r_b
};

PhysicsRewardBreakdown reward_physics(const Image& input, const Image& pred,
                                      const PriorReference& ref);

}  // namespace desmoke
