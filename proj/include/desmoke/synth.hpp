#pragma once
// Synthetic corpus generation: scattering-model smoke over procedural
// tissue-like textures. Paired samples drive the supervised cold start,
// the smoky halves double as unpaired refinement data.

#include <cstdint>
#include <string>
#include <vector>

#include "desmoke/image.hpp"
#include "desmoke/rng.hpp"

namespace desmoke {

struct SmokeConfig {
    double airlight[3] = {0.95, 0.95, 0.98};  // smoke color, near-white
    double density = 1.0;                     // >= 0
    double smoothness = 6.0;                  // correlation length, pixels, >= 1
    int modes = 6;                            // cosine modes in the random field
    std::uint64_t seed = 0;
};

void check_smoke_config(const SmokeConfig& cfg);

// Single-channel H x W map with values in (0,1].
struct TransmissionMap {
    int height = 0;
    int width = 0;
    std::vector<double> t;

    double at(int y, int x) const { return t[static_cast<std::size_t>(y) * width + x]; }
};

// One low-frequency cosine mode of the optical-depth field.
// Contribution at pixel (x,y): amplitude * (1 + cos(2*pi*(fx*x + fy*y) + phase)) / 2.
struct CosineMode {
    double amplitude;
    double fx;  // cycles per pixel
    double fy;
    double phase;
};

// The seed-deterministic mode draw behind synth_transmission, exposed so the
// field evaluation can be re-checked independently.
std::vector<CosineMode> transmission_modes(const SmokeConfig& cfg);

// t(x,y) = exp(-density * f(x,y)) with f the mode sum normalized to unit
// pixel-mean expectation (sum of mode terms divided by sum(amplitude)/2).
TransmissionMap synth_transmission(const SmokeConfig& cfg, int h, int w);

// Atmospheric scattering: I = J*t + A*(1-t), clamped to [0,1].
Image apply_smoke(const Image& clean, const TransmissionMap& t, const double airlight[3]);

// Procedural clean patch: smooth red-dominant color field with a few
// vessel-like dark curves. Deterministic in (seed, h, w).
Image tissue_texture(std::uint64_t seed, int h, int w);

struct PairedSample {
    Image clean;
    Image smoky;
    TransmissionMap transmission;
};

// n paired samples; sample i draws its RNG stream from (cfg.seed, i).
std::vector<PairedSample> make_corpus(const SmokeConfig& cfg, int n, int h, int w);

// Combined hash over all clean and smoky images, order-sensitive.
std::uint64_t corpus_hash(const std::vector<PairedSample>& samples);

// Directory layout: clean/NNNN.ppm, smoky/NNNN.ppm, manifest.json.
// The manifest records seed, config, dimensions, the train/val split
// (first floor(n*train_frac) indices train, rest val) and the corpus hash.
void write_corpus(const std::string& dir, const SmokeConfig& cfg,
                  const std::vector<PairedSample>& samples, double train_frac);

struct CorpusManifest {
    SmokeConfig cfg;
    int n = 0;
    int height = 0;
    int width = 0;
    double train_frac = 0.8;
    std::vector<int> train_ids;
    std::vector<int> val_ids;
    std::uint64_t hash = 0;
};

CorpusManifest read_manifest(const std::string& dir);

// Loads clean/smoky images for the given ids from a corpus directory.
std::vector<Image> load_images(const std::string& dir, const std::string& sub,
                               const std::vector<int>& ids);

}  // namespace desmoke
