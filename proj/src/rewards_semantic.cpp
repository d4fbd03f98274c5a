#include "desmoke/rewards_semantic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "desmoke/errors.hpp"
#include "desmoke/rng.hpp"

using nlohmann::json;

namespace desmoke {
namespace {

void normalize_unit(std::vector<double>& v) {
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    const double n = std::sqrt(n2);
    if (n < 1e-12) throw std::invalid_argument("cannot normalize zero vector");
    for (double& x : v) x /= n;
}

}  // namespace

HistogramFeaturizer::HistogramFeaturizer(int dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
    if (dim < 1) throw std::invalid_argument("embedding dim must be >= 1");
    Rng rng = Rng(seed).derive(0x70726f6a);  // "proj"
    projection_.resize(static_cast<std::size_t>(dim_) * kRawDim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim_));
    for (auto& w : projection_) w = scale * rng.normal();
}

std::string HistogramFeaturizer::id() const {
    return "hist-rp-v1:" + std::to_string(dim_) + ":" + std::to_string(seed_);
}

std::vector<double> HistogramFeaturizer::embed(const Image& img) const {
    check_image(img);
    std::vector<double> raw(kRawDim, 0.0);
    const double n = static_cast<double>(img.pixel_count());

    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double v = std::clamp(img.at(y, x, c), 0.0, 1.0);
                int bin = static_cast<int>(v * kIntensityBins);
                bin = std::min(bin, kIntensityBins - 1);
                raw[c * kIntensityBins + bin] += 1.0 / n;
            }
        }
    }

    // gradient-orientation histogram on luminance, magnitude weighted
    double wsum = 0.0;
    std::vector<double> orient(kOrientationBins, 0.0);
    auto luma = [&img](int y, int x) {
        return 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
    };
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double l = luma(y, x);
            const double dx = (x + 1 < img.width) ? luma(y, x + 1) - l : 0.0;
            const double dy = (y + 1 < img.height) ? luma(y + 1, x) - l : 0.0;
            const double mag = std::sqrt(dx * dx + dy * dy);
            if (mag <= 0.0) continue;
            const double ang = std::atan2(dy, dx);  // [-pi, pi]
            int bin = static_cast<int>((ang + 3.14159265358979323846) /
                                       (2.0 * 3.14159265358979323846) * kOrientationBins);
            bin = std::clamp(bin, 0, kOrientationBins - 1);
            orient[bin] += mag;
            wsum += mag;
        }
    }
    if (wsum > 0.0)
        for (int b = 0; b < kOrientationBins; ++b) raw[3 * kIntensityBins + b] = orient[b] / wsum;

    std::vector<double> out(dim_, 0.0);
    for (int r = 0; r < dim_; ++r) {
        const double* row = projection_.data() + static_cast<std::size_t>(r) * kRawDim;
        double acc = 0.0;
        for (int i = 0; i < kRawDim; ++i) acc += row[i] * raw[i];
        out[r] = acc;
    }
    normalize_unit(out);
    return out;
}

PrecomputedEmbeddings::PrecomputedEmbeddings(int dim, std::string id)
    : dim_(dim), id_(std::move(id)) {}

void PrecomputedEmbeddings::put(std::uint64_t key, std::vector<double> embedding) {
    if (static_cast<int>(embedding.size()) != dim_)
        throw std::invalid_argument("embedding dim mismatch");
    normalize_unit(embedding);
    table_.emplace_back(key, std::move(embedding));
}

std::vector<double> PrecomputedEmbeddings::embed(const Image& img) const {
    const std::uint64_t key = image_hash(img);
    for (const auto& [k, v] : table_)
        if (k == key) return v;
    throw MissingPrerequisiteError("no precomputed embedding for image (provider " + id_ + ")");
}

std::string concepts_to_json(const ConceptPair& c) {
    json j;
    j["dim"] = c.v_pos.size();
    j["v_pos"] = c.v_pos;
    j["v_neg"] = c.v_neg;
    j["tau"] = c.tau;
    j["provider_id"] = c.provider_id;
    j["corpus_hash"] = c.corpus_hash;
    j["final_loss"] = c.final_loss;
    return j.dump(2);
}

ConceptPair concepts_from_json(const std::string& text) {
    const json j = json::parse(text);
    ConceptPair c;
    c.v_pos = j.at("v_pos").get<std::vector<double>>();
    c.v_neg = j.at("v_neg").get<std::vector<double>>();
    c.tau = j.at("tau").get<double>();
    c.provider_id = j.at("provider_id").get<std::string>();
    c.corpus_hash = j.at("corpus_hash").get<std::uint64_t>();
    c.final_loss = j.value("final_loss", 0.0);
    if (c.v_pos.size() != j.at("dim").get<std::size_t>() || c.v_pos.size() != c.v_neg.size())
        throw std::runtime_error("concept vector dim mismatch");
    return c;
}

void save_concepts(const ConceptPair& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write concepts: " + path);
    out << concepts_to_json(c) << "\n";
}

ConceptPair load_concepts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read concepts: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return concepts_from_json(text);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine: dim mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na < 1e-24 || nb < 1e-24) throw std::invalid_argument("cosine of zero-norm vector");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double match_loss(const ConceptPair& concepts, const std::vector<double>& lq_emb,
                  const std::vector<double>& hq_emb) {
    return -(cosine(concepts.v_neg, lq_emb) + cosine(concepts.v_pos, hq_emb));
}

ConceptTrainResult train_concepts(const EmbeddingProvider& provider,
                                  const std::vector<Image>& lq_images,
                                  const std::vector<Image>& hq_images,
                                  const ConceptTrainOptions& opt) {
    if (lq_images.empty() || lq_images.size() != hq_images.size())
        throw std::invalid_argument("concept training needs matched non-empty corpora");
    if (opt.tau <= 0.0) throw std::invalid_argument("tau must be > 0");
    if (opt.steps < 0) throw std::invalid_argument("steps must be >= 0");

    const std::size_t n = lq_images.size();
    std::vector<std::vector<double>> lq(n), hq(n);
    for (std::size_t i = 0; i < n; ++i) {
        lq[i] = provider.embed(lq_images[i]);
        hq[i] = provider.embed(hq_images[i]);
    }

    const int d = provider.dim();
    ConceptPair c;
    c.tau = opt.tau;
    c.provider_id = provider.id();
    Rng rng = Rng(opt.seed).derive(0x636f6e63);  // "conc"
    c.v_pos = rng.normal_vec(d);
    c.v_neg = rng.normal_vec(d);
    normalize_unit(c.v_pos);
    normalize_unit(c.v_neg);

    const auto mean_of = [n, d](const std::vector<std::vector<double>>& embs) {
        std::vector<double> m(d, 0.0);
        for (const auto& e : embs)
            for (int i = 0; i < d; ++i) m[i] += e[i];
        for (double& x : m) x /= static_cast<double>(n);
        return m;
    };
    const std::vector<double> hq_mean = mean_of(hq);
    const std::vector<double> lq_mean = mean_of(lq);

    const auto mean_loss = [&]() {
        double L = 0.0;
        for (std::size_t i = 0; i < n; ++i) L += match_loss(c, lq[i], hq[i]);
        return L / static_cast<double>(n);
    };

    // Riemannian step toward the mean embedding: project the Euclidean
    // gradient onto the tangent plane, step, re-normalize.
    const auto sphere_step = [d](std::vector<double>& v, const std::vector<double>& target,
                                 double lr) {
        double dot = 0.0;
        for (int i = 0; i < d; ++i) dot += v[i] * target[i];
        for (int i = 0; i < d; ++i) v[i] += lr * (target[i] - dot * v[i]);
        normalize_unit(v);
    };

    ConceptTrainResult result;
    result.loss_trace.reserve(opt.steps + 1);
    result.loss_trace.push_back(mean_loss());
    for (int s = 0; s < opt.steps; ++s) {
        sphere_step(c.v_pos, hq_mean, opt.lr);
        sphere_step(c.v_neg, lq_mean, opt.lr);
        const double L = mean_loss();
        if (!std::isfinite(L)) throw NumericError("non-finite concept training loss");
        result.loss_trace.push_back(L);
    }
    c.final_loss = result.loss_trace.back();
    result.concepts = std::move(c);
    return result;
}

double reward_concept_from_cosines(double cos_pos, double cos_neg, double tau) {
    if (tau <= 0.0) throw std::invalid_argument("tau must be > 0");
    // log sigmoid((cos_pos - cos_neg)/tau), stable in both tails
    const double z = (cos_pos - cos_neg) / tau;
    if (z >= 0.0) return -std::log1p(std::exp(-z));
    return z - std::log1p(std::exp(z));
}

double reward_concept(const ConceptPair& concepts, const std::vector<double>& img_emb) {
    const double cp = cosine(img_emb, concepts.v_pos);
    const double cn = cosine(img_emb, concepts.v_neg);
    return reward_concept_from_cosines(cp, cn, concepts.tau);
}

}  // namespace desmoke
