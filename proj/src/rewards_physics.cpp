#include "desmoke/rewards_physics.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace desmoke {

PriorReference build_prior_reference(const std::vector<Image>& corpus,
                                     std::uint64_t corpus_hash_value) {
    if (corpus.empty()) throw std::invalid_argument("prior reference needs a non-empty corpus");
    std::vector<double> drg, drb, dgb;
    drg.reserve(corpus.size());
    drb.reserve(corpus.size());
    dgb.reserve(corpus.size());
    for (const auto& img : corpus) {
        const ChannelStats s = channel_stats(img);
        drg.push_back(std::abs(s.mu[0] - s.mu[1]));
        drb.push_back(std::abs(s.mu[0] - s.mu[2]));
        dgb.push_back(std::abs(s.mu[1] - s.mu[2]));
    }
    PriorReference ref;
    ref.mrg = percentile(drg, 95.0);
    ref.mrb = percentile(drb, 95.0);
    ref.mgb = percentile(dgb, 95.0);
    ref.corpus_hash = corpus_hash_value;
    return ref;
}

std::string prior_to_json(const PriorReference& ref) {
    json j;
    j["mrg"] = ref.mrg;
    j["mrb"] = ref.mrb;
    j["mgb"] = ref.mgb;
    j["corpus_hash"] = ref.corpus_hash;
    j["percentile"] = ref.percentile;
    return j.dump(2);
}

PriorReference prior_from_json(const std::string& text) {
    const json j = json::parse(text);
    PriorReference ref;
    ref.mrg = j.at("mrg").get<double>();
    ref.mrb = j.at("mrb").get<double>();
    ref.mgb = j.at("mgb").get<double>();
    ref.corpus_hash = j.at("corpus_hash").get<std::uint64_t>();
    ref.percentile = j.at("percentile").get<double>();
    return ref;
}

void save_prior(const PriorReference& ref, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write prior reference: " + path);
    out << prior_to_json(ref) << "\n";
}

PriorReference load_prior(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read prior reference: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return prior_from_json(text);
}

InterChannelResult reward_inter(const Image& pred, const PriorReference& ref) {
    const ChannelStats s = channel_stats(pred);
    InterChannelResult r;
    r.l_rg = std::max(0.0, ref.mrg - std::abs(s.mu[0] - s.mu[1]));
    r.l_rb = std::max(0.0, ref.mrb - std::abs(s.mu[0] - s.mu[2]));
    r.l_gb = std::max(0.0, std::abs(s.mu[1] - s.mu[2]) - ref.mgb);
    r.r_a = -(r.l_rg + r.l_rb + r.l_gb);
    return r;
}

IntraChannelResult reward_intra(const Image& input, const Image& pred) {
    if (input.height != pred.height || input.width != pred.width)
        throw std::invalid_argument("reward_intra: dimension mismatch");
    const ChannelStats si = channel_stats(input);
    const ChannelStats sp = channel_stats(pred);
    IntraChannelResult r;
    for (int c = 0; c < 3; ++c) {
        r.delta_mu[c] = std::abs(sp.mu[c] - si.mu[c]);
        r.delta_sigma[c] = std::abs(sp.sigma[c] - si.sigma[c]);
        r.delta_grad[c] = std::abs(sp.grad[c] - si.grad[c]);
    }
    r.r_b = 0.5 * (r.delta_mu[1] + r.delta_mu[2]) - r.delta_mu[0] +
            0.5 * (r.delta_sigma[1] + r.delta_sigma[2]) - r.delta_sigma[0] +
            0.5 * (r.delta_grad[1] + r.delta_grad[2]) - r.delta_grad[0];
    return r;
}

PhysicsRewardBreakdown reward_physics(const Image& input, const Image& pred,
                                      const PriorReference& ref) {
    PhysicsRewardBreakdown b;
    b.inter = reward_inter(pred, ref);
    b.intra = reward_intra(input, pred);
    b.r_pg = b.inter.r_a + b.intra.r_b;
    return b;
}

}  // namespace desmoke
