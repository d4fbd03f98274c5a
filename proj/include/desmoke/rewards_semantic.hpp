#pragma once
// Concept-embedding semantic reward: a positive ("clear") and negative
// ("smoky") vector learned contrastively over an embedding provider, scored
// as the softmax log-probability toward the clear concept.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "desmoke/image.hpp"

namespace desmoke {

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    // Unit-normalized, deterministic for a given implementation.
    virtual std::vector<double> embed(const Image& img) const = 0;
    virtual int dim() const = 0;
    virtual std::string id() const = 0;
};

// Default desk-scale featurizer: 32-bin per-channel intensity histograms plus
// a 16-bin gradient-orientation histogram, random-projected to `dim` with a
// fixed seeded Gaussian matrix, then unit-normalized. Smoke compresses the
// histograms toward the airlight color, which is what the reward needs to see.
class HistogramFeaturizer final : public EmbeddingProvider {
public:
    explicit HistogramFeaturizer(int dim = 64, std::uint64_t seed = 0x64657465);

    std::vector<double> embed(const Image& img) const override;
    int dim() const override { return dim_; }
    std::string id() const override;

    static constexpr int kIntensityBins = 32;
    static constexpr int kOrientationBins = 16;
    static constexpr int kRawDim = 3 * kIntensityBins + kOrientationBins;

private:
    int dim_;
    std::uint64_t seed_;
    std::vector<double> projection_;  // dim_ x kRawDim, row-major
};

// Provider backed by precomputed embeddings keyed by an external id; the
// plug-in slot for encoders that cannot run in-process.
class PrecomputedEmbeddings final : public EmbeddingProvider {
public:
    PrecomputedEmbeddings(int dim, std::string id);
    void put(std::uint64_t image_hash_key, std::vector<double> embedding);

    std::vector<double> embed(const Image& img) const override;
    int dim() const override { return dim_; }
    std::string id() const override { return id_; }

private:
    int dim_;
    std::string id_;
    std::vector<std::pair<std::uint64_t, std::vector<double>>> table_;
};

struct ConceptPair {
    std::vector<double> v_pos;  // "clear"
    std::vector<double> v_neg;  // "smoky"
    double tau = 0.07;
    std::string provider_id;
    std::uint64_t corpus_hash = 0;
    double final_loss = 0.0;  // training metadata
};

std::string concepts_to_json(const ConceptPair& c);
ConceptPair concepts_from_json(const std::string& text);
void save_concepts(const ConceptPair& c, const std::string& path);
ConceptPair load_concepts(const std::string& path);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

// L_match = -(cos(v_neg, lq_emb) + cos(v_pos, hq_emb)); lower is better.
double match_loss(const ConceptPair& concepts, const std::vector<double>& lq_emb,
                  const std::vector<double>& hq_emb);

struct ConceptTrainOptions {
    int steps = 200;
    double lr = 0.5;
    std::uint64_t seed = 1;
    double tau = 0.07;
};

// Riemannian gradient descent on the mean match loss, re-normalizing both
// vectors after every step. Returns the concepts plus the per-step loss trace.
struct ConceptTrainResult {
    ConceptPair concepts;
    std::vector<double> loss_trace;
};

ConceptTrainResult train_concepts(const EmbeddingProvider& provider,
                                  const std::vector<Image>& lq_images,
                                  const std::vector<Image>& hq_images,
                                  const ConceptTrainOptions& opt);

// R_VC = log softmax toward the clear concept, evaluated in the stable
// log-sum-exp form; always negative.
double reward_concept(const ConceptPair& concepts, const std::vector<double>& img_emb);

// Same reward expressed on raw cosines; reward_concept delegates here.
double reward_concept_from_cosines(double cos_pos, double cos_neg, double tau);

}  // namespace desmoke
