#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "desmoke/synth.hpp"
#include "test_helpers.hpp"

using namespace desmoke;

TEST_CASE("zero density means full transmission") {
    SmokeConfig cfg;
    cfg.density = 0.0;
    cfg.seed = 13;
    const TransmissionMap t = synth_transmission(cfg, 8, 8);
    for (double v : t.t) CHECK(v == 1.0);
}

TEST_CASE("transmission is deterministic in the seed") {
    SmokeConfig cfg;
    cfg.seed = 99;
    const TransmissionMap a = synth_transmission(cfg, 12, 10);
    const TransmissionMap b = synth_transmission(cfg, 12, 10);
    REQUIRE(a.t.size() == b.t.size());
    for (std::size_t i = 0; i < a.t.size(); ++i) CHECK(a.t[i] == b.t[i]);
}

TEST_CASE("transmission matches an independent mode-sum evaluation") {
    SmokeConfig cfg;
    cfg.density = 2.0;
    cfg.seed = 21;
    const int h = 9, w = 7;
    const TransmissionMap got = synth_transmission(cfg, h, w);
    const auto modes = transmission_modes(cfg);
    double amp = 0.0;
    for (const auto& m : modes) amp += m.amplitude;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double f = 0.0;
            for (const auto& m : modes)
                f += m.amplitude *
                     (1.0 + std::cos(2.0 * M_PI * (m.fx * x + m.fy * y) + m.phase)) / 2.0;
            f /= amp / 2.0;
            CHECK(got.at(y, x) == doctest::Approx(std::exp(-2.0 * f)).epsilon(1e-12));
            CHECK(got.at(y, x) > 0.0);
            CHECK(got.at(y, x) <= 1.0);
        }
    }
}

TEST_CASE("apply_smoke limit cases") {
    Rng rng(4);
    const Image clean = testutil::random_image(rng, 6, 6);
    const double airlight[3] = {1.0, 1.0, 1.0};

    TransmissionMap full{6, 6, std::vector<double>(36, 1.0)};
    const Image same = apply_smoke(clean, full, airlight);
    for (std::size_t i = 0; i < clean.data.size(); ++i) CHECK(same.data[i] == clean.data[i]);

    TransmissionMap none{6, 6, std::vector<double>(36, 1e-300)};
    none.t.assign(36, 0.0);  // total occlusion
    const Image white = apply_smoke(clean, none, airlight);
    for (double v : white.data) CHECK(v == 1.0);

    TransmissionMap half{6, 6, std::vector<double>(36, 0.5)};
    const Image gray = apply_smoke(testutil::constant_image(0.2, 6, 6), half, airlight);
    for (double v : gray.data) CHECK(v == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("smoke blends convexly, so clamping never fires") {
    Rng rng(17);
    const Image clean = testutil::random_image(rng, 8, 8);
    SmokeConfig cfg;
    cfg.seed = 31;
    cfg.density = 1.3;
    const TransmissionMap t = synth_transmission(cfg, 8, 8);
    const Image smoky = apply_smoke(clean, t, cfg.airlight);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            for (int c = 0; c < 3; ++c) {
                const double lo = std::min(clean.at(y, x, c), cfg.airlight[c]);
                const double hi = std::max(clean.at(y, x, c), cfg.airlight[c]);
                CHECK(smoky.at(y, x, c) >= lo - 1e-15);
                CHECK(smoky.at(y, x, c) <= hi + 1e-15);
            }
}

TEST_CASE("apply_smoke dimension mismatch") {
    const Image clean = testutil::constant_image(0.3, 4, 4);
    TransmissionMap t{5, 4, std::vector<double>(20, 1.0)};
    const double airlight[3] = {1.0, 1.0, 1.0};
    CHECK_THROWS_AS(apply_smoke(clean, t, airlight), std::invalid_argument);
}

TEST_CASE("corpus generation is deterministic and splits consistently") {
    SmokeConfig cfg;
    cfg.seed = 1234;
    const auto a = make_corpus(cfg, 6, 8, 8);
    const auto b = make_corpus(cfg, 6, 8, 8);
    CHECK(corpus_hash(a) == corpus_hash(b));

    cfg.seed = 1235;
    const auto c = make_corpus(cfg, 6, 8, 8);
    CHECK(corpus_hash(a) != corpus_hash(c));

    const auto dir = std::filesystem::temp_directory_path() / "desmoke_corpus_test";
    std::filesystem::remove_all(dir);
    write_corpus(dir.string(), cfg, c, 0.8);
    const CorpusManifest m = read_manifest(dir.string());
    CHECK(m.n == 6);
    CHECK(m.train_ids.size() == 4);
    CHECK(m.val_ids.size() == 2);
    CHECK(m.hash == corpus_hash(c));
    const auto cleans = load_images(dir.string(), "clean", m.train_ids);
    CHECK(cleans.size() == 4);
    std::filesystem::remove_all(dir);
}

TEST_CASE("single-pair corpus manifest") {
    SmokeConfig cfg;
    cfg.seed = 5;
    const auto samples = make_corpus(cfg, 1, 8, 8);
    const auto dir = std::filesystem::temp_directory_path() / "desmoke_corpus_one";
    std::filesystem::remove_all(dir);
    write_corpus(dir.string(), cfg, samples, 0.8);
    const CorpusManifest m = read_manifest(dir.string());
    CHECK(m.n == 1);
    CHECK(m.cfg.seed == 5);
    CHECK(m.train_ids.size() == 1);
    std::filesystem::remove_all(dir);
}

TEST_CASE("mean transmission decreases with density") {
    double prev_mean = 1.1;
    for (double density : {0.5, 1.0, 2.0}) {
        SmokeConfig cfg;
        cfg.seed = 77;
        cfg.density = density;
        double mean = 0.0;
        const int n = 100;
        const Rng master(cfg.seed);
        for (int i = 0; i < n; ++i) {
            SmokeConfig per = cfg;
            per.seed = master.derive(i).seed();
            const TransmissionMap t = synth_transmission(per, 8, 8);
            for (double v : t.t) mean += v;
        }
        mean /= n * 64.0;
        CHECK(mean < prev_mean);
        prev_mean = mean;
    }
}

TEST_CASE("tissue textures are multi-hue and in range") {
    const Image img = tissue_texture(2024, 16, 16);
    const ChannelStats s = channel_stats(img);
    for (double v : img.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    // red-dominant hue with genuine channel separation
    CHECK(s.mu[0] > s.mu[1]);
    CHECK(s.mu[0] > s.mu[2]);
    CHECK(s.sigma[0] > 0.0);
    const Image other = tissue_texture(2025, 16, 16);
    CHECK(image_hash(other) != image_hash(img));
}
