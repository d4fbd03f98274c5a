#include <doctest.h>

#include <cmath>

#include "desmoke/errors.hpp"
#include "desmoke/rewards_semantic.hpp"
#include "desmoke/synth.hpp"
#include "test_helpers.hpp"

using namespace desmoke;

namespace {

std::vector<double> unit(std::vector<double> v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (double& x : v) x /= n;
    return v;
}

}  // namespace

TEST_CASE("match_loss extremes") {
    const auto hq = unit({1.0, 0.0, 0.0});
    const auto lq = unit({0.0, 1.0, 0.0});
    ConceptPair aligned;
    aligned.v_pos = hq;
    aligned.v_neg = lq;
    CHECK(match_loss(aligned, lq, hq) == doctest::Approx(-2.0).epsilon(1e-15));

    ConceptPair orthogonal;
    orthogonal.v_pos = unit({0.0, 0.0, 1.0});
    orthogonal.v_neg = unit({0.0, 0.0, 1.0});
    CHECK(match_loss(orthogonal, lq, hq) == doctest::Approx(0.0).epsilon(1e-15));

    ConceptPair zero;
    zero.v_pos = {0.0, 0.0, 0.0};
    zero.v_neg = hq;
    CHECK_THROWS_AS(match_loss(zero, lq, hq), std::invalid_argument);
}

TEST_CASE("match_loss equals a dot-product oracle on random unit vectors") {
    Rng rng(211);
    for (int rep = 0; rep < 50; ++rep) {
        const auto a = unit(rng.normal_vec(16));
        const auto b = unit(rng.normal_vec(16));
        const auto c = unit(rng.normal_vec(16));
        const auto d = unit(rng.normal_vec(16));
        ConceptPair pair;
        pair.v_pos = a;
        pair.v_neg = b;
        double dot_neg = 0.0, dot_pos = 0.0;
        for (int i = 0; i < 16; ++i) {
            dot_neg += b[i] * c[i];
            dot_pos += a[i] * d[i];
        }
        CHECK(match_loss(pair, c, d) == doctest::Approx(-(dot_neg + dot_pos)).epsilon(1e-12));
    }
}

TEST_CASE("featurizer embeddings are unit, deterministic and smoke-sensitive") {
    const HistogramFeaturizer feat(64);
    const Image clean = tissue_texture(404, 16, 16);
    const auto e1 = feat.embed(clean);
    const auto e2 = feat.embed(clean);
    CHECK(e1 == e2);
    double n = 0.0;
    for (double x : e1) n += x * x;
    CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-9);

    SmokeConfig cfg;
    cfg.seed = 11;
    cfg.density = 1.5;
    const Image smoky = apply_smoke(clean, synth_transmission(cfg, 16, 16), cfg.airlight);
    const auto es = feat.embed(smoky);
    CHECK(cosine(e1, es) < 0.999);  // smoke visibly moves the embedding
}

TEST_CASE("concept training converges to the embedding directions") {
    const HistogramFeaturizer feat(64);
    SmokeConfig cfg;
    cfg.seed = 42;
    cfg.density = 1.2;
    const auto samples = make_corpus(cfg, 1, 16, 16);
    const std::vector<Image> lq = {samples[0].smoky};
    const std::vector<Image> hq = {samples[0].clean};

    ConceptTrainOptions opt;
    opt.steps = 400;
    opt.lr = 0.3;
    const ConceptTrainResult res = train_concepts(feat, lq, hq, opt);
    CHECK(cosine(res.concepts.v_pos, feat.embed(hq[0])) > 0.99);
    CHECK(cosine(res.concepts.v_neg, feat.embed(lq[0])) > 0.99);
    CHECK(res.concepts.final_loss == doctest::Approx(res.loss_trace.back()));

    // zero steps returns the seeded initialization untouched
    ConceptTrainOptions none = opt;
    none.steps = 0;
    const ConceptTrainResult init = train_concepts(feat, lq, hq, none);
    CHECK(init.loss_trace.size() == 1);
    const ConceptTrainResult init2 = train_concepts(feat, lq, hq, none);
    CHECK(init.concepts.v_pos == init2.concepts.v_pos);
    CHECK(init.concepts.v_neg == init2.concepts.v_neg);
}

TEST_CASE("concept training loss is non-increasing for small lr") {
    const HistogramFeaturizer feat(32);
    SmokeConfig cfg;
    cfg.seed = 88;
    const auto samples = make_corpus(cfg, 5, 16, 16);
    std::vector<Image> lq, hq;
    for (const auto& s : samples) {
        lq.push_back(s.smoky);
        hq.push_back(s.clean);
    }
    ConceptTrainOptions opt;
    opt.steps = 100;
    opt.lr = 0.05;
    const ConceptTrainResult res = train_concepts(feat, lq, hq, opt);
    for (std::size_t i = 1; i < res.loss_trace.size(); ++i)
        CHECK(res.loss_trace[i] <= res.loss_trace[i - 1] + 1e-12);
}

TEST_CASE("swapping LQ and HQ corpora swaps the learned roles") {
    const HistogramFeaturizer feat(32);
    SmokeConfig cfg;
    cfg.seed = 123;
    cfg.density = 1.5;
    const auto samples = make_corpus(cfg, 5, 16, 16);
    std::vector<Image> lq, hq;
    for (const auto& s : samples) {
        lq.push_back(s.smoky);
        hq.push_back(s.clean);
    }
    ConceptTrainOptions opt;
    opt.steps = 500;
    opt.lr = 0.3;
    const auto fwd = train_concepts(feat, lq, hq, opt);
    const auto swp = train_concepts(feat, hq, lq, opt);
    CHECK(cosine(fwd.concepts.v_pos, swp.concepts.v_neg) > 0.999);
    CHECK(cosine(fwd.concepts.v_neg, swp.concepts.v_pos) > 0.999);
}

TEST_CASE("concept reward symmetry and tails") {
    CHECK(reward_concept_from_cosines(0.37, 0.37, 0.07) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-12));
    // hand-evaluated stable form at cos+=1, cos-=-1, tau=0.1
    CHECK(reward_concept_from_cosines(1.0, -1.0, 0.1) ==
          doctest::Approx(-std::log1p(std::exp(-20.0))).epsilon(1e-9));
    CHECK_THROWS_AS(reward_concept_from_cosines(0.5, 0.2, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(reward_concept_from_cosines(0.5, 0.2, -1.0), std::invalid_argument);
}

TEST_CASE("concept reward is strictly monotone in cos+ and always negative") {
    double prev = -1e300;
    for (int i = 0; i <= 100; ++i) {
        const double cp = -1.0 + 2.0 * i / 100.0;
        const double r = reward_concept_from_cosines(cp, 0.1, 0.07);
        CHECK(r < 0.0);
        CHECK(r > prev);
        prev = r;
    }
}

TEST_CASE("concept reward depends only on the cosine difference") {
    Rng rng(223);
    for (int rep = 0; rep < 100; ++rep) {
        const double cp = rng.uniform(-1.0, 1.0);
        const double cn = rng.uniform(-1.0, 1.0);
        const double shift = rng.uniform(-0.5, 0.5);
        const double a = reward_concept_from_cosines(cp, cn, 0.07);
        const double b = reward_concept_from_cosines(cp + shift, cn + shift, 0.07);
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
}

TEST_CASE("precomputed embeddings plug in by image identity") {
    const Image a = tissue_texture(1, 8, 8);
    const Image b = tissue_texture(2, 8, 8);
    PrecomputedEmbeddings pre(3, "external-encoder");
    pre.put(image_hash(a), {1.0, 0.0, 0.0});
    const auto e = pre.embed(a);
    CHECK(e == std::vector<double>{1.0, 0.0, 0.0});
    CHECK_THROWS_AS(pre.embed(b), desmoke::MissingPrerequisiteError);
    CHECK_THROWS_AS(pre.put(image_hash(b), {1.0, 0.0}), std::invalid_argument);
}

TEST_CASE("concept pair JSON round trip") {
    ConceptPair c;
    c.v_pos = unit({1.0, 2.0, 3.0});
    c.v_neg = unit({-1.0, 0.5, 0.25});
    c.tau = 0.07;
    c.provider_id = "hist-rp-v1:3:0";
    c.corpus_hash = 12345;
    c.final_loss = -1.5;
    const ConceptPair back = concepts_from_json(concepts_to_json(c));
    CHECK(back.v_pos == c.v_pos);
    CHECK(back.v_neg == c.v_neg);
    CHECK(back.tau == c.tau);
    CHECK(back.provider_id == c.provider_id);
    CHECK(back.corpus_hash == c.corpus_hash);
}
