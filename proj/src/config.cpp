#include "desmoke/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "desmoke/errors.hpp"

using nlohmann::json;

namespace desmoke {
namespace {

void reject_unknown(const json& j, const std::string& section,
                    const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError("section '" + section + "' must be an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + key + "' in section '" + section + "'");
}

template <typename T>
T field(const json& j, const std::string& section, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad type for '" + section + "." + key + "'");
    }
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(j, "<root>",
                   {"seed", "synth", "diffusion", "pretrain", "concepts", "rewards", "rpo"});

    RunConfig cfg;
    cfg.seed = field<std::uint64_t>(j, "<root>", "seed", cfg.seed);

    if (j.contains("synth")) {
        const json& s = j["synth"];
        reject_unknown(s, "synth",
                       {"n", "height", "width", "density", "smoothness", "modes", "airlight",
                        "train_frac"});
        auto& c = cfg.synth;
        c.n = field(s, "synth", "n", c.n);
        c.height = field(s, "synth", "height", c.height);
        c.width = field(s, "synth", "width", c.width);
        c.density = field(s, "synth", "density", c.density);
        c.smoothness = field(s, "synth", "smoothness", c.smoothness);
        c.modes = field(s, "synth", "modes", c.modes);
        if (s.contains("airlight")) {
            const auto a = field<std::vector<double>>(s, "synth", "airlight", {});
            require(a.size() == 3, "synth.airlight must have 3 components");
            for (int i = 0; i < 3; ++i) c.airlight[i] = a[i];
        }
        c.train_frac = field(s, "synth", "train_frac", c.train_frac);
    }
    if (j.contains("diffusion")) {
        const json& s = j["diffusion"];
        reject_unknown(s, "diffusion",
                       {"timesteps", "beta_min", "beta_max", "hidden", "time_embed_dim",
                        "concept_dim"});
        auto& c = cfg.diffusion;
        c.timesteps = field(s, "diffusion", "timesteps", c.timesteps);
        c.beta_min = field(s, "diffusion", "beta_min", c.beta_min);
        c.beta_max = field(s, "diffusion", "beta_max", c.beta_max);
        c.hidden = field(s, "diffusion", "hidden", c.hidden);
        c.time_embed_dim = field(s, "diffusion", "time_embed_dim", c.time_embed_dim);
        c.concept_dim = field(s, "diffusion", "concept_dim", c.concept_dim);
    }
    if (j.contains("pretrain")) {
        const json& s = j["pretrain"];
        reject_unknown(s, "pretrain", {"steps", "lr"});
        cfg.pretrain.steps = field(s, "pretrain", "steps", cfg.pretrain.steps);
        cfg.pretrain.lr = field(s, "pretrain", "lr", cfg.pretrain.lr);
    }
    if (j.contains("concepts")) {
        const json& s = j["concepts"];
        reject_unknown(s, "concepts", {"dim", "tau", "steps", "lr"});
        auto& c = cfg.concepts;
        c.dim = field(s, "concepts", "dim", c.dim);
        c.tau = field(s, "concepts", "tau", c.tau);
        c.steps = field(s, "concepts", "steps", c.steps);
        c.lr = field(s, "concepts", "lr", c.lr);
    }
    if (j.contains("rewards")) {
        const json& s = j["rewards"];
        reject_unknown(s, "rewards",
                       {"w_pg", "w_rf", "w_vc", "scorers", "external_scores_csv", "scorer_scale",
                        "scorer_offset"});
        auto& c = cfg.rewards;
        c.w_pg = field(s, "rewards", "w_pg", c.w_pg);
        c.w_rf = field(s, "rewards", "w_rf", c.w_rf);
        c.w_vc = field(s, "rewards", "w_vc", c.w_vc);
        c.scorers = field(s, "rewards", "scorers", c.scorers);
        c.external_scores_csv = field(s, "rewards", "external_scores_csv", c.external_scores_csv);
        c.scorer_scale = field(s, "rewards", "scorer_scale", c.scorer_scale);
        c.scorer_offset = field(s, "rewards", "scorer_offset", c.scorer_offset);
    }
    if (j.contains("rpo")) {
        const json& s = j["rpo"];
        reject_unknown(s, "rpo",
                       {"group_size", "clip_eps", "lambda_kl", "lr", "iterations", "inner_epochs",
                        "advantage_eps", "ratio_stride", "per_step_ratio", "max_grad_norm"});
        auto& c = cfg.rpo;
        c.group_size = field(s, "rpo", "group_size", c.group_size);
        c.clip_eps = field(s, "rpo", "clip_eps", c.clip_eps);
        c.lambda_kl = field(s, "rpo", "lambda_kl", c.lambda_kl);
        c.lr = field(s, "rpo", "lr", c.lr);
        c.iterations = field(s, "rpo", "iterations", c.iterations);
        c.inner_epochs = field(s, "rpo", "inner_epochs", c.inner_epochs);
        c.advantage_eps = field(s, "rpo", "advantage_eps", c.advantage_eps);
        c.ratio_stride = field(s, "rpo", "ratio_stride", c.ratio_stride);
        c.per_step_ratio = field(s, "rpo", "per_step_ratio", c.per_step_ratio);
        c.max_grad_norm = field(s, "rpo", "max_grad_norm", c.max_grad_norm);
    }

    // range validation, all before any work starts
    require(cfg.synth.n >= 1, "synth.n >= 1");
    require(cfg.synth.height >= 2 && cfg.synth.width >= 2, "synth patch at least 2x2");
    require(cfg.synth.density >= 0.0, "synth.density >= 0");
    require(cfg.synth.smoothness >= 1.0, "synth.smoothness >= 1");
    require(cfg.synth.modes >= 1, "synth.modes >= 1");
    for (double a : cfg.synth.airlight) require(a >= 0.0 && a <= 1.0, "airlight in [0,1]");
    require(cfg.synth.train_frac > 0.0 && cfg.synth.train_frac <= 1.0, "train_frac in (0,1]");
    require(cfg.diffusion.timesteps >= 1, "diffusion.timesteps >= 1");
    require(cfg.diffusion.beta_min > 0.0 && cfg.diffusion.beta_max < 1.0 &&
                cfg.diffusion.beta_min <= cfg.diffusion.beta_max,
            "0 < beta_min <= beta_max < 1");
    require(cfg.diffusion.hidden >= 1, "diffusion.hidden >= 1");
    require(cfg.diffusion.time_embed_dim >= 2 && cfg.diffusion.time_embed_dim % 2 == 0,
            "diffusion.time_embed_dim even and >= 2");
    require(cfg.diffusion.concept_dim >= 0, "diffusion.concept_dim >= 0");
    require(cfg.pretrain.steps >= 0, "pretrain.steps >= 0");
    require(cfg.pretrain.lr > 0.0, "pretrain.lr > 0");
    require(cfg.concepts.dim >= 1, "concepts.dim >= 1");
    require(cfg.concepts.tau > 0.0, "concepts.tau > 0");
    require(cfg.concepts.steps >= 0, "concepts.steps >= 0");
    require(cfg.concepts.lr > 0.0, "concepts.lr > 0");
    require(!cfg.rewards.scorers.empty(), "rewards.scorers non-empty");
    for (const auto& s : cfg.rewards.scorers)
        require(s == "ceiq" || s == "external", "scorer must be 'ceiq' or 'external'");
    require(cfg.rpo.group_size >= 2, "rpo.group_size >= 2");
    require(cfg.rpo.clip_eps > 0.0 && cfg.rpo.clip_eps < 1.0, "rpo.clip_eps in (0,1)");
    require(cfg.rpo.lambda_kl >= 0.0, "rpo.lambda_kl >= 0");
    require(cfg.rpo.lr > 0.0, "rpo.lr > 0");
    require(cfg.rpo.iterations >= 0, "rpo.iterations >= 0");
    require(cfg.rpo.inner_epochs >= 1, "rpo.inner_epochs >= 1");
    require(cfg.rpo.advantage_eps > 0.0, "rpo.advantage_eps > 0");
    require(cfg.rpo.ratio_stride >= 1, "rpo.ratio_stride >= 1");
    require(cfg.rpo.max_grad_norm >= 0.0, "rpo.max_grad_norm >= 0");
    if (cfg.diffusion.concept_dim > 0)
        require(cfg.diffusion.concept_dim == cfg.concepts.dim,
                "diffusion.concept_dim must equal concepts.dim when nonzero");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

std::string config_to_json(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["synth"] = {{"n", cfg.synth.n},
                  {"height", cfg.synth.height},
                  {"width", cfg.synth.width},
                  {"density", cfg.synth.density},
                  {"smoothness", cfg.synth.smoothness},
                  {"modes", cfg.synth.modes},
                  {"airlight", {cfg.synth.airlight[0], cfg.synth.airlight[1], cfg.synth.airlight[2]}},
                  {"train_frac", cfg.synth.train_frac}};
    j["diffusion"] = {{"timesteps", cfg.diffusion.timesteps},
                      {"beta_min", cfg.diffusion.beta_min},
                      {"beta_max", cfg.diffusion.beta_max},
                      {"hidden", cfg.diffusion.hidden},
                      {"time_embed_dim", cfg.diffusion.time_embed_dim},
                      {"concept_dim", cfg.diffusion.concept_dim}};
    j["pretrain"] = {{"steps", cfg.pretrain.steps}, {"lr", cfg.pretrain.lr}};
    j["concepts"] = {{"dim", cfg.concepts.dim},
                     {"tau", cfg.concepts.tau},
                     {"steps", cfg.concepts.steps},
                     {"lr", cfg.concepts.lr}};
    j["rewards"] = {{"w_pg", cfg.rewards.w_pg},
                    {"w_rf", cfg.rewards.w_rf},
                    {"w_vc", cfg.rewards.w_vc},
                    {"scorers", cfg.rewards.scorers},
                    {"external_scores_csv", cfg.rewards.external_scores_csv},
                    {"scorer_scale", cfg.rewards.scorer_scale},
                    {"scorer_offset", cfg.rewards.scorer_offset}};
    j["rpo"] = {{"group_size", cfg.rpo.group_size},
                {"clip_eps", cfg.rpo.clip_eps},
                {"lambda_kl", cfg.rpo.lambda_kl},
                {"lr", cfg.rpo.lr},
                {"iterations", cfg.rpo.iterations},
                {"inner_epochs", cfg.rpo.inner_epochs},
                {"advantage_eps", cfg.rpo.advantage_eps},
                {"ratio_stride", cfg.rpo.ratio_stride},
                {"per_step_ratio", cfg.rpo.per_step_ratio},
                {"max_grad_norm", cfg.rpo.max_grad_norm}};
    return j.dump(2);
}

std::uint64_t config_hash(const RunConfig& cfg) { return fnv1a64(config_to_json(cfg)); }

SmokeConfig smoke_config_from(const RunConfig& cfg) {
    SmokeConfig s;
    for (int i = 0; i < 3; ++i) s.airlight[i] = cfg.synth.airlight[i];
    s.density = cfg.synth.density;
    s.smoothness = cfg.synth.smoothness;
    s.modes = cfg.synth.modes;
    s.seed = cfg.seed;
    return s;
}

RpoConfig rpo_config_from(const RunConfig& cfg) {
    RpoConfig r;
    r.group_size = cfg.rpo.group_size;
    r.clip_eps = cfg.rpo.clip_eps;
    r.lambda_kl = cfg.rpo.lambda_kl;
    r.lr = cfg.rpo.lr;
    r.iterations = cfg.rpo.iterations;
    r.inner_epochs = cfg.rpo.inner_epochs;
    r.advantage_eps = cfg.rpo.advantage_eps;
    r.ratio_stride = cfg.rpo.ratio_stride;
    r.per_step_ratio = cfg.rpo.per_step_ratio;
    r.max_grad_norm = cfg.rpo.max_grad_norm;
    r.seed = cfg.seed;
    r.weights.w_pg = cfg.rewards.w_pg;
    r.weights.w_rf = cfg.rewards.w_rf;
    r.weights.w_vc = cfg.rewards.w_vc;
    return r;
}

}  // namespace desmoke
