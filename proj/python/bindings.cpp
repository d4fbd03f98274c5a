// Python bindings for the core operations: image statistics, smoke
// synthesis, schedules, rewards, advantages and checkpoint-driven
// restoration. Images cross the boundary as (H, W, 3) float64 arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "desmoke/diffusion.hpp"
#include "desmoke/image.hpp"
#include "desmoke/policy_opt.hpp"
#include "desmoke/rewards_physics.hpp"
#include "desmoke/rewards_quality.hpp"
#include "desmoke/rewards_semantic.hpp"
#include "desmoke/synth.hpp"

namespace py = pybind11;
using namespace desmoke;

namespace {

Image image_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 3 || arr.shape(2) != 3)
        throw std::invalid_argument("expected an (H, W, 3) array");
    Image img(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
    std::copy(arr.data(), arr.data() + arr.size(), img.data.begin());
    return img;
}

py::array_t<double> image_to_array(const Image& img) {
    py::array_t<double> arr({img.height, img.width, 3});
    std::copy(img.data.begin(), img.data.end(), arr.mutable_data());
    return arr;
}

py::dict stats_to_dict(const ChannelStats& s) {
    py::dict d;
    d["mu"] = py::make_tuple(s.mu[0], s.mu[1], s.mu[2]);
    d["sigma"] = py::make_tuple(s.sigma[0], s.sigma[1], s.sigma[2]);
    d["grad"] = py::make_tuple(s.grad[0], s.grad[1], s.grad[2]);
    return d;
}

PriorReference prior_from_dict(const py::dict& d) {
    PriorReference ref;
    ref.mrg = d["mrg"].cast<double>();
    ref.mrb = d["mrb"].cast<double>();
    ref.mgb = d["mgb"].cast<double>();
    return ref;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "smoke-removal diffusion policy: core numeric operations";

    m.def(
        "channel_stats",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& img) {
            return stats_to_dict(channel_stats(image_from_array(img)));
        },
        py::arg("image"), "Per-channel mean, population std and mean gradient magnitude.");

    m.def(
        "percentile",
        [](std::vector<double> values, double p) { return percentile(std::move(values), p); },
        py::arg("values"), py::arg("p"));

    m.def(
        "psnr",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
            return psnr(image_from_array(a), image_from_array(b));
        },
        py::arg("a"), py::arg("b"), "Peak-1.0 PSNR in dB, capped at 99 for identical inputs.");

    m.def(
        "read_ppm", [](const std::string& path) { return image_to_array(read_ppm(path)); },
        py::arg("path"));
    m.def(
        "write_ppm",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& img,
           const std::string& path) { write_ppm(image_from_array(img), path); },
        py::arg("image"), py::arg("path"));

    m.def(
        "tissue_texture",
        [](std::uint64_t seed, int h, int w) { return image_to_array(tissue_texture(seed, h, w)); },
        py::arg("seed"), py::arg("height"), py::arg("width"));

    m.def(
        "synth_transmission",
        [](double density, double smoothness, int modes, std::uint64_t seed, int h, int w) {
            SmokeConfig cfg;
            cfg.density = density;
            cfg.smoothness = smoothness;
            cfg.modes = modes;
            cfg.seed = seed;
            const TransmissionMap t = synth_transmission(cfg, h, w);
            py::array_t<double> arr({h, w});
            std::copy(t.t.begin(), t.t.end(), arr.mutable_data());
            return arr;
        },
        py::arg("density"), py::arg("smoothness"), py::arg("modes"), py::arg("seed"),
        py::arg("height"), py::arg("width"));

    m.def(
        "apply_smoke",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& clean,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& transmission,
           std::tuple<double, double, double> airlight) {
            const Image img = image_from_array(clean);
            if (transmission.ndim() != 2)
                throw std::invalid_argument("transmission must be an (H, W) array");
            TransmissionMap t;
            t.height = static_cast<int>(transmission.shape(0));
            t.width = static_cast<int>(transmission.shape(1));
            t.t.assign(transmission.data(), transmission.data() + transmission.size());
            const double a[3] = {std::get<0>(airlight), std::get<1>(airlight),
                                 std::get<2>(airlight)};
            return image_to_array(apply_smoke(img, t, a));
        },
        py::arg("clean"), py::arg("transmission"), py::arg("airlight"));

    py::class_<NoiseSchedule>(m, "NoiseSchedule")
        .def_readonly("timesteps", &NoiseSchedule::timesteps)
        .def_readonly("betas", &NoiseSchedule::betas)
        .def_readonly("alpha_bars", &NoiseSchedule::alpha_bars)
        .def_readonly("sigmas", &NoiseSchedule::sigmas);
    m.def("make_schedule", &make_schedule, py::arg("timesteps"), py::arg("beta_min"),
          py::arg("beta_max"));

    m.def(
        "build_prior_reference",
        [](const std::vector<py::array_t<double, py::array::c_style | py::array::forcecast>>&
               corpus) {
            std::vector<Image> images;
            images.reserve(corpus.size());
            for (const auto& a : corpus) images.push_back(image_from_array(a));
            const PriorReference ref = build_prior_reference(images);
            py::dict d;
            d["mrg"] = ref.mrg;
            d["mrb"] = ref.mrb;
            d["mgb"] = ref.mgb;
            return d;
        },
        py::arg("corpus"), "P95 absolute channel-mean differences over a corpus.");

    m.def(
        "reward_physics",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& input,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& pred,
           const py::dict& priors) {
            const PhysicsRewardBreakdown b =
                reward_physics(image_from_array(input), image_from_array(pred),
                               prior_from_dict(priors));
            py::dict d;
            d["l_rg"] = b.inter.l_rg;
            d["l_rb"] = b.inter.l_rb;
            d["l_gb"] = b.inter.l_gb;
            d["r_a"] = b.inter.r_a;
            d["r_b"] = b.intra.r_b;
            d["r_pg"] = b.r_pg;
            return d;
        },
        py::arg("input"), py::arg("pred"), py::arg("priors"));

    m.def(
        "ceiq_proxy",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& img) {
            return ceiq_proxy(image_from_array(img));
        },
        py::arg("image"), "Analytic contrast/entropy quality proxy in [0, 1].");

    py::class_<HistogramFeaturizer>(m, "HistogramFeaturizer")
        .def(py::init<int, std::uint64_t>(), py::arg("dim") = 64,
             py::arg("seed") = 0x64657465ULL)
        .def_property_readonly("dim", &HistogramFeaturizer::dim)
        .def_property_readonly("id", &HistogramFeaturizer::id)
        .def(
            "embed",
            [](const HistogramFeaturizer& f,
               const py::array_t<double, py::array::c_style | py::array::forcecast>& img) {
                return f.embed(image_from_array(img));
            },
            py::arg("image"));

    m.def("cosine", &cosine, py::arg("a"), py::arg("b"));
    m.def("reward_concept", &reward_concept_from_cosines, py::arg("cos_pos"), py::arg("cos_neg"),
          py::arg("tau"), "Log-probability toward the clear concept; always negative.");
    m.def(
        "match_loss",
        [](const std::vector<double>& v_pos, const std::vector<double>& v_neg,
           const std::vector<double>& lq_emb, const std::vector<double>& hq_emb) {
            ConceptPair c;
            c.v_pos = v_pos;
            c.v_neg = v_neg;
            return match_loss(c, lq_emb, hq_emb);
        },
        py::arg("v_pos"), py::arg("v_neg"), py::arg("lq_emb"), py::arg("hq_emb"));

    m.def("group_advantages", &group_advantages, py::arg("rewards"),
          py::arg("advantage_eps") = 1e-8);
    m.def("clipped_surrogate", &clipped_surrogate, py::arg("ratios"), py::arg("advantages"),
          py::arg("clip_eps"));
    m.def(
        "total_reward",
        [](double r_pg, double r_rf, double r_vc, double w_pg, double w_rf, double w_vc) {
            return total_reward(r_pg, r_rf, r_vc, RewardWeights{w_pg, w_rf, w_vc});
        },
        py::arg("r_pg"), py::arg("r_rf"), py::arg("r_vc"), py::arg("w_pg") = 1.0,
        py::arg("w_rf") = 1.0, py::arg("w_vc") = 1.0);

    m.def(
        "restore",
        [](const std::string& checkpoint_path,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& smoky,
           std::uint64_t seed, bool stochastic) {
            const Checkpoint ck = load_checkpoint(checkpoint_path);
            DenoiserModel model;
            model.cfg = ck.cfg;
            model.theta = ck.theta;
            const NoiseSchedule sched = make_schedule(ck.timesteps, ck.beta_min, ck.beta_max);
            const Image cond = image_from_array(smoky);
            if (3 * cond.height * cond.width != ck.cfg.state_dim)
                throw std::invalid_argument("image does not match checkpoint patch size");
            std::vector<double> concept_vec(ck.cfg.concept_dim, 0.0);
            const Trajectory traj =
                rollout(model, sched, cond, concept_vec, Rng(seed), nullptr, !stochastic);
            return image_to_array(traj.final_image);
        },
        py::arg("checkpoint_path"), py::arg("smoky"), py::arg("seed") = 0,
        py::arg("stochastic") = false,
        "Run the reverse process from a checkpoint over one smoky patch.");
}
