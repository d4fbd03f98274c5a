// desmoke: corpus synthesis, concept/prior building, cold-start pretraining,
// reward-guided refinement, scoring and restoration for the smoke-removal
// diffusion policy.
//
// Exit codes: 0 success, 2 config error, 3 missing prerequisite, 4 numeric
// failure, 1 anything else.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "desmoke/config.hpp"
#include "desmoke/diffusion.hpp"
#include "desmoke/errors.hpp"
#include "desmoke/image.hpp"
#include "desmoke/policy_opt.hpp"
#include "desmoke/rewards_physics.hpp"
#include "desmoke/rewards_quality.hpp"
#include "desmoke/rewards_semantic.hpp"
#include "desmoke/synth.hpp"

namespace fs = std::filesystem;
using namespace desmoke;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out;
    bool force = false;
    bool seed_given = false;
    std::uint64_t seed = 0;
};

RunConfig effective_config(const GlobalArgs& g) {
    RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
    if (g.seed_given) cfg.seed = g.seed;
    return cfg;
}

void write_effective_config(const RunConfig& cfg, const fs::path& dir) {
    fs::create_directories(dir);
    std::ofstream out(dir / "effective_config.json");
    out << config_to_json(cfg) << "\n";
    std::ofstream h(dir / "config_hash.txt");
    h << std::hex << config_hash(cfg) << "\n";
}

void require_file(const std::string& path, const std::string& what) {
    if (path.empty() || !fs::exists(path))
        throw MissingPrerequisiteError("missing " + what + ": " + path);
}

std::vector<std::string> list_ppm(const std::string& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".ppm")
            names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw MissingPrerequisiteError("no .ppm images in " + dir);
    return names;
}

NoiseSchedule schedule_from(const RunConfig& cfg) {
    return make_schedule(cfg.diffusion.timesteps, cfg.diffusion.beta_min, cfg.diffusion.beta_max);
}

DenoiserConfig denoiser_config_from(const RunConfig& cfg) {
    DenoiserConfig d;
    d.state_dim = 3 * cfg.synth.height * cfg.synth.width;
    d.hidden = cfg.diffusion.hidden;
    d.time_embed_dim = cfg.diffusion.time_embed_dim;
    d.concept_dim = cfg.diffusion.concept_dim;
    return d;
}

// shared reward assembly for rpo/score; scorer objects owned here
struct RewardAssembly {
    PriorReference priors;
    ConceptPair concepts;
    HistogramFeaturizer provider;
    CeiqProxyScorer ceiq;
    std::unique_ptr<ExternalCsvScorer> external;
    RewardContext ctx;

    RewardAssembly(const RunConfig& cfg, const std::string& priors_path,
                   const std::string& concepts_path)
        : provider(cfg.concepts.dim) {
        require_file(priors_path, "prior reference (run 'desmoke priors' first)");
        require_file(concepts_path, "concept pair (run 'desmoke concepts' first)");
        priors = load_prior(priors_path);
        concepts = load_concepts(concepts_path);
        ctx.priors = &priors;
        ctx.concepts = &concepts;
        ctx.provider = &provider;
        for (const auto& s : cfg.rewards.scorers) {
            if (s == "ceiq") {
                ctx.scorers.push_back(&ceiq);
            } else if (s == "external") {
                require_file(cfg.rewards.external_scores_csv, "external score sidecar CSV");
                external = std::make_unique<ExternalCsvScorer>(cfg.rewards.external_scores_csv);
                ctx.scorers.push_back(external.get());
            }
        }
        ctx.norms.assign(ctx.scorers.size(),
                         ScorerNorm{cfg.rewards.scorer_scale, cfg.rewards.scorer_offset});
        ctx.weights = RewardWeights{cfg.rewards.w_pg, cfg.rewards.w_rf, cfg.rewards.w_vc};
    }
};

int cmd_synth(const GlobalArgs& g) {
    const RunConfig cfg = effective_config(g);
    if (g.out.empty()) throw ConfigError("synth needs --out DIR");
    const fs::path manifest = fs::path(g.out) / "manifest.json";
    if (fs::exists(manifest) && !g.force) {
        std::cout << "corpus already present at " << g.out << " (use --force to regenerate)\n";
        return 0;
    }
    const auto samples =
        make_corpus(smoke_config_from(cfg), cfg.synth.n, cfg.synth.height, cfg.synth.width);
    write_corpus(g.out, smoke_config_from(cfg), samples, cfg.synth.train_frac);
    write_effective_config(cfg, g.out);
    std::cout << "wrote " << cfg.synth.n << " pairs to " << g.out << "\n";
    return 0;
}

int cmd_priors(const GlobalArgs& g, const std::string& corpus_dir) {
    const RunConfig cfg = effective_config(g);
    if (g.out.empty()) throw ConfigError("priors needs --out FILE");
    require_file((fs::path(corpus_dir) / "manifest.json").string(),
                 "corpus manifest (run 'desmoke synth' first)");
    const CorpusManifest m = read_manifest(corpus_dir);
    const auto cleans = load_images(corpus_dir, "clean", m.train_ids);
    const PriorReference ref = build_prior_reference(cleans, m.hash);
    save_prior(ref, g.out);
    const fs::path parent = fs::path(g.out).parent_path();
    write_effective_config(cfg, parent.empty() ? fs::path(".") : parent);
    std::cout << "priors: mrg=" << ref.mrg << " mrb=" << ref.mrb << " mgb=" << ref.mgb << "\n";
    return 0;
}

int cmd_concepts(const GlobalArgs& g, const std::string& corpus_dir) {
    const RunConfig cfg = effective_config(g);
    if (g.out.empty()) throw ConfigError("concepts needs --out FILE");
    require_file((fs::path(corpus_dir) / "manifest.json").string(),
                 "corpus manifest (run 'desmoke synth' first)");
    const CorpusManifest m = read_manifest(corpus_dir);
    const auto cleans = load_images(corpus_dir, "clean", m.train_ids);
    const auto smokys = load_images(corpus_dir, "smoky", m.train_ids);

    const HistogramFeaturizer provider(cfg.concepts.dim);
    ConceptTrainOptions opt;
    opt.steps = cfg.concepts.steps;
    opt.lr = cfg.concepts.lr;
    opt.tau = cfg.concepts.tau;
    opt.seed = cfg.seed;
    ConceptTrainResult res = train_concepts(provider, smokys, cleans, opt);
    res.concepts.corpus_hash = m.hash;
    save_concepts(res.concepts, g.out);
    const fs::path parent = fs::path(g.out).parent_path();
    write_effective_config(cfg, parent.empty() ? fs::path(".") : parent);
    std::cout << "concepts trained: final loss " << res.concepts.final_loss << "\n";
    return 0;
}

int cmd_pretrain(const GlobalArgs& g, const std::string& corpus_dir, bool resume) {
    const RunConfig cfg = effective_config(g);
    if (g.out.empty()) throw ConfigError("pretrain needs --out DIR");
    require_file((fs::path(corpus_dir) / "manifest.json").string(),
                 "corpus manifest (run 'desmoke synth' first)");
    const CorpusManifest m = read_manifest(corpus_dir);
    if (m.height != cfg.synth.height || m.width != cfg.synth.width)
        throw ConfigError("corpus patch size does not match config synth section");

    const auto cleans = load_images(corpus_dir, "clean", m.train_ids);
    const auto smokys = load_images(corpus_dir, "smoky", m.train_ids);
    std::vector<PairedSample> pairs(cleans.size());
    for (std::size_t i = 0; i < cleans.size(); ++i) {
        pairs[i].clean = cleans[i];
        pairs[i].smoky = smokys[i];
    }

    const NoiseSchedule sched = schedule_from(cfg);
    const fs::path ckpt_path = fs::path(g.out) / "pretrain.ckpt";
    const fs::path loss_path = fs::path(g.out) / "pretrain_loss.csv";

    DenoiserModel model;
    int start_step = 0;
    if (resume) {
        require_file(ckpt_path.string(), "checkpoint to resume from");
        const Checkpoint ck = load_checkpoint(ckpt_path.string());
        model.cfg = ck.cfg;
        model.theta = ck.theta;
        std::ifstream in(loss_path);
        std::string line;
        while (std::getline(in, line))
            if (!line.empty() && line[0] != '#' && line.find("step") != 0) ++start_step;
    } else {
        model = make_denoiser(denoiser_config_from(cfg), cfg.seed);
    }

    const auto losses = pretrain_run(model, pairs, sched, cfg.pretrain.steps, cfg.pretrain.lr,
                                     cfg.seed, start_step);

    fs::create_directories(g.out);
    std::ofstream loss_out(loss_path, resume ? std::ios::app : std::ios::out);
    loss_out.precision(17);
    if (!resume) loss_out << "step,loss\n";
    for (std::size_t i = 0; i < losses.size(); ++i)
        loss_out << start_step + static_cast<int>(i) << ',' << losses[i] << "\n";

    Checkpoint ck;
    ck.cfg = model.cfg;
    ck.patch_h = cfg.synth.height;
    ck.patch_w = cfg.synth.width;
    ck.timesteps = cfg.diffusion.timesteps;
    ck.beta_min = cfg.diffusion.beta_min;
    ck.beta_max = cfg.diffusion.beta_max;
    ck.theta = model.theta;
    save_checkpoint(ckpt_path.string(), ck);
    write_effective_config(cfg, g.out);
    std::cout << "pretrained " << losses.size() << " steps, final loss "
              << (losses.empty() ? 0.0 : losses.back()) << "\n";
    return 0;
}

int cmd_rpo(const GlobalArgs& g, const std::string& corpus_dir, const std::string& ckpt_path,
            const std::string& priors_path, const std::string& concepts_path, bool no_vc,
            bool no_pg, bool no_rf) {
    RunConfig cfg = effective_config(g);
    if (no_vc) cfg.rewards.w_vc = 0.0;
    if (no_pg) cfg.rewards.w_pg = 0.0;
    if (no_rf) cfg.rewards.w_rf = 0.0;
    if (g.out.empty()) throw ConfigError("rpo needs --out DIR");
    require_file(ckpt_path, "pretrain checkpoint (run 'desmoke pretrain' first)");
    require_file((fs::path(corpus_dir) / "manifest.json").string(), "corpus manifest");

    const Checkpoint ck = load_checkpoint(ckpt_path);
    DenoiserModel model;
    model.cfg = ck.cfg;
    model.theta = ck.theta;
    const NoiseSchedule sched = make_schedule(ck.timesteps, ck.beta_min, ck.beta_max);

    const CorpusManifest m = read_manifest(corpus_dir);
    const auto smoky = load_images(corpus_dir, "smoky", m.train_ids);

    const RewardAssembly rig(cfg, priors_path, concepts_path);
    const RpoConfig rcfg = rpo_config_from(cfg);
    const auto metrics = rpo_train(model, sched, smoky, rig.ctx, rcfg);

    fs::create_directories(g.out);
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    const std::vector<std::string> header = {
        std::string("config_hash: ") + hash_hex,
        "weights: w_pg=" + std::to_string(cfg.rewards.w_pg) +
            " w_rf=" + std::to_string(cfg.rewards.w_rf) +
            " w_vc=" + std::to_string(cfg.rewards.w_vc),
        std::string("ablation: ") + (no_pg ? "no-pg " : "") + (no_rf ? "no-rf " : "") +
            (no_vc ? "no-vc" : ""),
        "ratio_stride: " + std::to_string(cfg.rpo.ratio_stride),
        std::string("ratio_mode: ") + (cfg.rpo.per_step_ratio ? "step" : "trajectory"),
    };
    write_metrics_csv((fs::path(g.out) / "rpo_metrics.csv").string(), header, metrics);

    Checkpoint out_ck = ck;
    out_ck.theta = model.theta;
    save_checkpoint((fs::path(g.out) / "rpo.ckpt").string(), out_ck);
    write_effective_config(cfg, g.out);
    std::cout << "rpo finished: " << metrics.size() << " iterations\n";
    return 0;
}

int cmd_score(const GlobalArgs& g, const std::string& images_dir, const std::string& inputs_dir,
              const std::string& priors_path, const std::string& concepts_path) {
    const RunConfig cfg = effective_config(g);
    if (g.out.empty()) throw ConfigError("score needs --out FILE");
    require_file(images_dir, "image directory");
    const RewardAssembly rig(cfg, priors_path, concepts_path);

    std::ofstream out(g.out);
    if (!out) throw ConfigError("cannot write " + g.out);
    out.precision(17);
    out << "path,l_rg,l_rb,l_gb,r_a,r_b,r_pg,r_vc,r_rf,total\n";
    for (const auto& name : list_ppm(images_dir)) {
        const std::string rel = (fs::path(images_dir) / name).string();
        const Image img = read_ppm(rel);
        // without paired inputs the intra term compares the image to itself
        const Image input =
            inputs_dir.empty() ? img : read_ppm((fs::path(inputs_dir) / name).string());
        const PhysicsRewardBreakdown pb = reward_physics(input, img, rig.priors);
        const double r_vc = reward_concept(rig.concepts, rig.provider.embed(img));
        const double r_rf = reward_quality(img, rel, rig.ctx.scorers, rig.ctx.norms).r_rf;
        const double total = total_reward(pb.r_pg, r_rf, r_vc, rig.ctx.weights);
        out << name << ',' << pb.inter.l_rg << ',' << pb.inter.l_rb << ',' << pb.inter.l_gb << ','
            << pb.inter.r_a << ',' << pb.intra.r_b << ',' << pb.r_pg << ',' << r_vc << ',' << r_rf
            << ',' << total << "\n";
    }
    std::cout << "scored " << images_dir << " -> " << g.out << "\n";
    return 0;
}

int cmd_restore(const GlobalArgs& g, const std::string& smoky_dir, const std::string& ckpt_path,
                const std::string& concepts_path, bool stochastic) {
    const RunConfig cfg = effective_config(g);
    if (g.out.empty()) throw ConfigError("restore needs --out DIR");
    require_file(ckpt_path, "checkpoint");
    require_file(smoky_dir, "smoky image directory");

    const Checkpoint ck = load_checkpoint(ckpt_path);
    DenoiserModel model;
    model.cfg = ck.cfg;
    model.theta = ck.theta;
    const NoiseSchedule sched = make_schedule(ck.timesteps, ck.beta_min, ck.beta_max);

    std::vector<double> concept_vec;
    if (ck.cfg.concept_dim > 0) {
        require_file(concepts_path, "concept pair (model was built with concept conditioning)");
        concept_vec = load_concepts(concepts_path).v_pos;
        if (static_cast<int>(concept_vec.size()) != ck.cfg.concept_dim)
            throw ConfigError("concept dim does not match checkpoint");
    }

    // PSNR against clean references when a sibling clean/ directory exists
    const fs::path clean_dir = fs::path(smoky_dir).parent_path() / "clean";
    const bool have_clean = fs::is_directory(clean_dir);

    fs::create_directories(g.out);
    std::ofstream report(fs::path(g.out) / "report.csv");
    report.precision(17);
    report << (have_clean ? "path,psnr_smoky,psnr_restored\n" : "path\n");

    const auto names = list_ppm(smoky_dir);
    const Rng master(cfg.seed);
    for (std::size_t i = 0; i < names.size(); ++i) {
        const Image smoky = read_ppm((fs::path(smoky_dir) / names[i]).string());
        if (3 * smoky.height * smoky.width != ck.cfg.state_dim)
            throw ConfigError("image " + names[i] + " does not match checkpoint patch size");
        const Trajectory traj =
            rollout(model, sched, smoky, concept_vec, master.derive(i), nullptr, !stochastic);
        write_ppm(traj.final_image, (fs::path(g.out) / names[i]).string());
        if (have_clean) {
            const Image clean = read_ppm((clean_dir / names[i]).string());
            report << names[i] << ',' << psnr(clean, smoky) << ','
                   << psnr(clean, traj.final_image) << "\n";
        } else {
            report << names[i] << "\n";
        }
    }
    write_effective_config(cfg, g.out);
    std::cout << "restored " << names.size() << " images -> " << g.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"smoke-removal diffusion policy trainer"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path, "JSON run configuration");
    app.add_option("--out", g.out, "output directory or file");
    app.add_flag("--force", g.force, "overwrite existing outputs");
    auto* seed_opt = app.add_option("--seed", g.seed, "override config seed");

    auto* synth = app.add_subcommand("synth", "generate a paired smoky/clean corpus");
    auto* priors = app.add_subcommand("priors", "build P95 inter-channel priors");
    auto* concepts = app.add_subcommand("concepts", "train clear/smoky concept vectors");
    auto* pretrain = app.add_subcommand("pretrain", "supervised cold start");
    auto* rpo = app.add_subcommand("rpo", "reward-guided policy refinement");
    auto* score = app.add_subcommand("score", "per-image reward breakdown CSV");
    auto* restore = app.add_subcommand("restore", "run the restorer over a directory");

    std::string corpus_dir, ckpt_path, priors_path, concepts_path, images_dir, inputs_dir,
        smoky_dir;
    bool resume = false, no_vc = false, no_pg = false, no_rf = false, stochastic = false;

    priors->add_option("--corpus", corpus_dir, "corpus directory")->required();
    concepts->add_option("--corpus", corpus_dir, "corpus directory")->required();
    pretrain->add_option("--corpus", corpus_dir, "corpus directory")->required();
    pretrain->add_flag("--resume", resume, "continue from the checkpoint in --out");
    rpo->add_option("--corpus", corpus_dir, "corpus directory")->required();
    rpo->add_option("--checkpoint", ckpt_path, "pretrain checkpoint")->required();
    rpo->add_option("--priors", priors_path, "prior reference JSON")->required();
    rpo->add_option("--concepts", concepts_path, "concept pair JSON")->required();
    rpo->add_flag("--no-vc", no_vc, "zero the concept reward weight");
    rpo->add_flag("--no-pg", no_pg, "zero the physics reward weight");
    rpo->add_flag("--no-rf", no_rf, "zero the quality reward weight");
    score->add_option("--images", images_dir, "directory of images to score")->required();
    score->add_option("--inputs", inputs_dir, "paired input directory for the intra term");
    score->add_option("--priors", priors_path, "prior reference JSON")->required();
    score->add_option("--concepts", concepts_path, "concept pair JSON")->required();
    restore->add_option("--smoky", smoky_dir, "directory of smoky inputs")->required();
    restore->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
    restore->add_option("--concepts", concepts_path, "concept pair JSON");
    restore->add_flag("--stochastic", stochastic, "sample with per-step noise");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    g.seed_given = seed_opt->count() > 0;

    try {
        if (synth->parsed()) return cmd_synth(g);
        if (priors->parsed()) return cmd_priors(g, corpus_dir);
        if (concepts->parsed()) return cmd_concepts(g, corpus_dir);
        if (pretrain->parsed()) return cmd_pretrain(g, corpus_dir, resume);
        if (rpo->parsed())
            return cmd_rpo(g, corpus_dir, ckpt_path, priors_path, concepts_path, no_vc, no_pg,
                           no_rf);
        if (score->parsed())
            return cmd_score(g, images_dir, inputs_dir, priors_path, concepts_path);
        if (restore->parsed())
            return cmd_restore(g, smoky_dir, ckpt_path, concepts_path, stochastic);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const MissingPrerequisiteError& e) {
        std::cerr << "missing prerequisite: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
