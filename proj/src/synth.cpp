#include "desmoke/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace desmoke {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::string pad4(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", i);
    return buf;
}

}  // namespace

void check_smoke_config(const SmokeConfig& cfg) {
    for (double a : cfg.airlight)
        if (a < 0.0 || a > 1.0) throw std::invalid_argument("airlight component out of [0,1]");
    if (cfg.density < 0.0) throw std::invalid_argument("density must be >= 0");
    if (cfg.smoothness < 1.0) throw std::invalid_argument("smoothness must be >= 1");
    if (cfg.modes < 1) throw std::invalid_argument("modes must be >= 1");
}

std::vector<CosineMode> transmission_modes(const SmokeConfig& cfg) {
    check_smoke_config(cfg);
    Rng rng = Rng(cfg.seed).derive(0x74726e73);  // "trns"
    std::vector<CosineMode> modes(cfg.modes);
    const double fmax = 1.0 / cfg.smoothness;
    for (auto& m : modes) {
        m.amplitude = rng.uniform(0.5, 1.5);
        m.fx = rng.uniform(-fmax, fmax);
        m.fy = rng.uniform(-fmax, fmax);
        m.phase = rng.uniform(0.0, kTwoPi);
    }
    return modes;
}

TransmissionMap synth_transmission(const SmokeConfig& cfg, int h, int w) {
    if (h < 2 || w < 2) throw std::invalid_argument("transmission map must be at least 2x2");
    const auto modes = transmission_modes(cfg);
    double amp_sum = 0.0;
    for (const auto& m : modes) amp_sum += m.amplitude;

    TransmissionMap map;
    map.height = h;
    map.width = w;
    map.t.resize(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double f = 0.0;
            for (const auto& m : modes)
                f += m.amplitude * (1.0 + std::cos(kTwoPi * (m.fx * x + m.fy * y) + m.phase)) * 0.5;
            f /= amp_sum * 0.5;  // unit pixel-mean expectation
            map.t[static_cast<std::size_t>(y) * w + x] = std::exp(-cfg.density * f);
        }
    }
    return map;
}

Image apply_smoke(const Image& clean, const TransmissionMap& t, const double airlight[3]) {
    check_image(clean);
    if (clean.height != t.height || clean.width != t.width)
        throw std::invalid_argument("apply_smoke: dimension mismatch");
    Image out(clean.height, clean.width);
    for (int y = 0; y < clean.height; ++y) {
        for (int x = 0; x < clean.width; ++x) {
            const double tv = t.at(y, x);
            for (int c = 0; c < 3; ++c)
                out.at(y, x, c) = clean.at(y, x, c) * tv + airlight[c] * (1.0 - tv);
        }
    }
    out.clamp01();
    return out;
}

Image tissue_texture(std::uint64_t seed, int h, int w) {
    if (h < 2 || w < 2) throw std::invalid_argument("texture must be at least 2x2");
    Rng rng = Rng(seed).derive(0x74697373);  // "tiss"

    // red-dominant base tones with room for per-channel structure
    const double base[3] = {rng.uniform(0.55, 0.80), rng.uniform(0.25, 0.50),
                            rng.uniform(0.18, 0.42)};
    const double amp[3] = {rng.uniform(0.08, 0.18), rng.uniform(0.10, 0.22),
                           rng.uniform(0.10, 0.22)};

    // independent smooth fields per channel
    struct Mode {
        double a, fx, fy, ph;
    };
    const int kModes = 5;
    Mode modes[3][kModes];
    for (int c = 0; c < 3; ++c) {
        for (int k = 0; k < kModes; ++k) {
            modes[c][k].a = rng.uniform(0.4, 1.0);
            modes[c][k].fx = rng.uniform(-0.25, 0.25);
            modes[c][k].fy = rng.uniform(-0.25, 0.25);
            modes[c][k].ph = rng.uniform(0.0, kTwoPi);
        }
    }

    Image img(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                double f = 0.0, asum = 0.0;
                for (int k = 0; k < kModes; ++k) {
                    const Mode& m = modes[c][k];
                    f += m.a * std::cos(kTwoPi * (m.fx * x + m.fy * y) + m.ph);
                    asum += m.a;
                }
                img.at(y, x, c) = base[c] + amp[c] * f / asum;
            }
        }
    }

    // vessel-like dark curves: random walks with Gaussian cross-section
    const int n_vessels = 1 + static_cast<int>(rng.index(3));
    for (int v = 0; v < n_vessels; ++v) {
        double px = rng.uniform(0.0, w - 1.0);
        double py = rng.uniform(0.0, h - 1.0);
        double angle = rng.uniform(0.0, kTwoPi);
        const double depth = rng.uniform(0.35, 0.60);
        const double radius = rng.uniform(0.7, 1.3);
        const int steps = static_cast<int>(1.5 * std::max(h, w));
        for (int s = 0; s < steps; ++s) {
            angle += rng.uniform(-0.35, 0.35);
            px += std::cos(angle);
            py += std::sin(angle);
            if (px < 0 || px >= w || py < 0 || py >= h) break;
            const int x0 = std::max(0, static_cast<int>(px - 3 * radius));
            const int x1 = std::min(w - 1, static_cast<int>(px + 3 * radius));
            const int y0 = std::max(0, static_cast<int>(py - 3 * radius));
            const int y1 = std::min(h - 1, static_cast<int>(py + 3 * radius));
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    const double d2 = (x - px) * (x - px) + (y - py) * (y - py);
                    const double fall = depth * std::exp(-d2 / (2.0 * radius * radius));
                    // vessels stay reddish: green/blue attenuate harder
                    img.at(y, x, 0) = std::min(img.at(y, x, 0), img.at(y, x, 0) * (1.0 - 0.5 * fall));
                    img.at(y, x, 1) = std::min(img.at(y, x, 1), img.at(y, x, 1) * (1.0 - fall));
                    img.at(y, x, 2) = std::min(img.at(y, x, 2), img.at(y, x, 2) * (1.0 - fall));
                }
            }
        }
    }

    img.clamp01();
    return img;
}

std::vector<PairedSample> make_corpus(const SmokeConfig& cfg, int n, int h, int w) {
    if (n < 1) throw std::invalid_argument("corpus size must be >= 1");
    check_smoke_config(cfg);
    std::vector<PairedSample> samples(n);
    const Rng master(cfg.seed);
    for (int i = 0; i < n; ++i) {
        const Rng sub = master.derive(static_cast<std::uint64_t>(i));
        PairedSample& s = samples[i];
        s.clean = tissue_texture(sub.seed(), h, w);
        SmokeConfig per = cfg;
        per.seed = sub.derive(1).seed();
        s.transmission = synth_transmission(per, h, w);
        s.smoky = apply_smoke(s.clean, s.transmission, cfg.airlight);
    }
    return samples;
}

std::uint64_t corpus_hash(const std::vector<PairedSample>& samples) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& s : samples) {
        const std::uint64_t hc = image_hash(s.clean);
        const std::uint64_t hs = image_hash(s.smoky);
        h = fnv1a64(&hc, sizeof hc, h);
        h = fnv1a64(&hs, sizeof hs, h);
    }
    return h;
}

void write_corpus(const std::string& dir, const SmokeConfig& cfg,
                  const std::vector<PairedSample>& samples, double train_frac) {
    if (samples.empty()) throw std::invalid_argument("empty corpus");
    if (train_frac <= 0.0 || train_frac > 1.0)
        throw std::invalid_argument("train_frac out of (0,1]");
    fs::create_directories(fs::path(dir) / "clean");
    fs::create_directories(fs::path(dir) / "smoky");

    const int n = static_cast<int>(samples.size());
    for (int i = 0; i < n; ++i) {
        write_ppm(samples[i].clean, (fs::path(dir) / "clean" / (pad4(i) + ".ppm")).string());
        write_ppm(samples[i].smoky, (fs::path(dir) / "smoky" / (pad4(i) + ".ppm")).string());
    }

    const int n_train = std::max(1, static_cast<int>(n * train_frac));
    json manifest;
    manifest["seed"] = cfg.seed;
    manifest["density"] = cfg.density;
    manifest["smoothness"] = cfg.smoothness;
    manifest["modes"] = cfg.modes;
    manifest["airlight"] = {cfg.airlight[0], cfg.airlight[1], cfg.airlight[2]};
    manifest["n"] = n;
    manifest["height"] = samples[0].clean.height;
    manifest["width"] = samples[0].clean.width;
    manifest["train_frac"] = train_frac;
    json train = json::array(), val = json::array();
    for (int i = 0; i < n; ++i) (i < n_train ? train : val).push_back(i);
    manifest["train"] = train;
    manifest["val"] = val;
    manifest["corpus_hash"] = corpus_hash(samples);

    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

CorpusManifest read_manifest(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) throw std::runtime_error("missing manifest.json in " + dir);
    json j;
    in >> j;
    CorpusManifest m;
    m.cfg.seed = j.at("seed").get<std::uint64_t>();
    m.cfg.density = j.at("density").get<double>();
    m.cfg.smoothness = j.at("smoothness").get<double>();
    m.cfg.modes = j.at("modes").get<int>();
    for (int c = 0; c < 3; ++c) m.cfg.airlight[c] = j.at("airlight")[c].get<double>();
    m.n = j.at("n").get<int>();
    m.height = j.at("height").get<int>();
    m.width = j.at("width").get<int>();
    m.train_frac = j.at("train_frac").get<double>();
    m.train_ids = j.at("train").get<std::vector<int>>();
    m.val_ids = j.at("val").get<std::vector<int>>();
    m.hash = j.at("corpus_hash").get<std::uint64_t>();
    return m;
}

std::vector<Image> load_images(const std::string& dir, const std::string& sub,
                               const std::vector<int>& ids) {
    std::vector<Image> out;
    out.reserve(ids.size());
    for (int id : ids)
        out.push_back(read_ppm((fs::path(dir) / sub / (pad4(id) + ".ppm")).string()));
    return out;
}

}  // namespace desmoke
