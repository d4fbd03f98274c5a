#include "desmoke/policy_opt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "desmoke/errors.hpp"

namespace desmoke {
namespace {

double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

std::vector<double> concept_vector_for(const DenoiserModel& model, const RewardContext& ctx) {
    if (model.cfg.concept_dim == 0) return {};
    if (!ctx.concepts)
        throw MissingPrerequisiteError("model expects concept conditioning but no concepts given");
    if (static_cast<int>(ctx.concepts->v_pos.size()) != model.cfg.concept_dim)
        throw std::invalid_argument("concept dim does not match model conditioning dim");
    return ctx.concepts->v_pos;
}

}  // namespace

void check_rpo_config(const RpoConfig& cfg) {
    if (cfg.group_size < 2) throw std::invalid_argument("group_size must be >= 2");
    if (!(cfg.clip_eps > 0.0 && cfg.clip_eps < 1.0))
        throw std::invalid_argument("clip_eps must lie in (0,1)");
    if (cfg.lambda_kl < 0.0) throw std::invalid_argument("lambda_kl must be >= 0");
    if (cfg.lr <= 0.0) throw std::invalid_argument("lr must be > 0");
    if (cfg.iterations < 0) throw std::invalid_argument("iterations must be >= 0");
    if (cfg.inner_epochs < 1) throw std::invalid_argument("inner_epochs must be >= 1");
    if (!(cfg.advantage_eps > 0.0)) throw std::invalid_argument("advantage_eps must be > 0");
    if (cfg.ratio_stride < 1) throw std::invalid_argument("ratio_stride must be >= 1");
    if (cfg.max_grad_norm < 0.0) throw std::invalid_argument("max_grad_norm must be >= 0");
}

double total_reward(double r_pg, double r_rf, double r_vc, const RewardWeights& w) {
    if (!std::isfinite(r_pg) || !std::isfinite(r_rf) || !std::isfinite(r_vc))
        throw NumericError("non-finite reward term");
    return w.w_pg * r_pg + w.w_rf * r_rf + w.w_vc * r_vc;
}

std::vector<double> group_advantages(const std::vector<double>& rewards, double advantage_eps) {
    if (rewards.size() < 2) throw std::invalid_argument("group needs at least 2 rewards");
    if (!(advantage_eps > 0.0)) throw std::invalid_argument("advantage_eps must be > 0");
    const double n = static_cast<double>(rewards.size());
    const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= n;
    const double denom = std::max(std::sqrt(var), advantage_eps);
    std::vector<double> adv(rewards.size());
    for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / denom;
    return adv;
}

std::vector<double> step_log_ratios(const DenoiserModel& current, const DenoiserModel& old_model,
                                    const Trajectory& traj, int stride) {
    if (stride < 1) throw std::invalid_argument("stride must be >= 1");
    std::vector<double> logs;
    for (std::size_t k = 0; k < traj.step_t.size(); k += stride) {
        const double sigma = traj.step_sigmas[k];
        if (sigma <= 0.0) continue;
        const auto mu_new = replay_mean(current, traj, k);
        const auto mu_old = replay_mean(old_model, traj, k);
        const double num = squared_distance(traj.states[k + 1], mu_new);
        const double den = squared_distance(traj.states[k + 1], mu_old);
        logs.push_back(-(num - den) / (2.0 * sigma * sigma));
    }
    return logs;
}

double trajectory_ratio(const DenoiserModel& current, const DenoiserModel& old_model,
                        const Trajectory& traj, int stride) {
    const auto logs = step_log_ratios(current, old_model, traj, stride);
    return std::exp(std::accumulate(logs.begin(), logs.end(), 0.0));
}

double clipped_surrogate(const std::vector<double>& ratios, const std::vector<double>& advantages,
                         double clip_eps) {
    if (ratios.size() != advantages.size())
        throw std::invalid_argument("ratio/advantage length mismatch");
    if (ratios.empty()) throw std::invalid_argument("empty group");
    if (!(clip_eps > 0.0 && clip_eps < 1.0))
        throw std::invalid_argument("clip_eps must lie in (0,1)");
    double sum = 0.0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        const double unclipped = ratios[i] * advantages[i];
        const double clipped = clip(ratios[i], 1.0 - clip_eps, 1.0 + clip_eps) * advantages[i];
        sum += std::min(unclipped, clipped);
    }
    return sum / static_cast<double>(ratios.size());
}

double kl_penalty(const DenoiserModel& current, const DenoiserModel& reference,
                  const std::vector<Trajectory>& trajs) {
    if (trajs.empty()) throw std::invalid_argument("kl_penalty needs trajectories");
    double total = 0.0;
    for (const auto& traj : trajs) {
        for (std::size_t k = 0; k < traj.step_t.size(); ++k) {
            const double sigma = traj.step_sigmas[k];
            if (sigma <= 0.0) continue;
            const auto mu = replay_mean(current, traj, k);
            const auto mu_ref = replay_mean(reference, traj, k);
            total += squared_distance(mu, mu_ref) / (2.0 * sigma * sigma);
        }
    }
    return total / static_cast<double>(trajs.size());
}

RewardTerms score_restoration(const Image& input, const Image& restored, const RewardContext& ctx) {
    if (!ctx.priors) throw MissingPrerequisiteError("reward context missing prior reference");
    if (!ctx.concepts) throw MissingPrerequisiteError("reward context missing concept pair");
    if (!ctx.provider) throw MissingPrerequisiteError("reward context missing embedding provider");
    if (ctx.scorers.empty()) throw MissingPrerequisiteError("reward context missing quality scorers");
    RewardTerms t;
    t.r_pg = reward_physics(input, restored, *ctx.priors).r_pg;
    t.r_rf = reward_quality(restored, "", ctx.scorers, ctx.norms).r_rf;
    t.r_vc = reward_concept(*ctx.concepts, ctx.provider->embed(restored));
    return t;
}

namespace {

// Shared evaluation core: per-trajectory ratios at the current parameters
// with the recorded step means as the old policy.
struct SurrogateEval {
    std::vector<double> ratios;
    double surrogate = 0.0;
};

double recorded_log_ratio(const DenoiserModel& model, const Trajectory& traj, int stride) {
    double sum = 0.0;
    for (std::size_t k = 0; k < traj.step_t.size(); k += stride) {
        const double sigma = traj.step_sigmas[k];
        if (sigma <= 0.0) continue;
        const auto mu = replay_mean(model, traj, k);
        const double num = squared_distance(traj.states[k + 1], mu);
        const double den = squared_distance(traj.states[k + 1], traj.step_means[k]);
        sum -= (num - den) / (2.0 * sigma * sigma);
    }
    return sum;
}

std::vector<double> recorded_step_log_ratios(const DenoiserModel& model, const Trajectory& traj,
                                             int stride) {
    std::vector<double> logs;
    for (std::size_t k = 0; k < traj.step_t.size(); k += stride) {
        const double sigma = traj.step_sigmas[k];
        if (sigma <= 0.0) continue;
        const auto mu = replay_mean(model, traj, k);
        const double num = squared_distance(traj.states[k + 1], mu);
        const double den = squared_distance(traj.states[k + 1], traj.step_means[k]);
        logs.push_back(-(num - den) / (2.0 * sigma * sigma));
    }
    return logs;
}

SurrogateEval eval_surrogate(const DenoiserModel& model, const GroupBatch& batch,
                             const RpoConfig& cfg) {
    SurrogateEval ev;
    ev.ratios.reserve(batch.trajectories.size());
    if (!cfg.per_step_ratio) {
        for (const auto& traj : batch.trajectories)
            ev.ratios.push_back(std::exp(recorded_log_ratio(model, traj, cfg.ratio_stride)));
        ev.surrogate = clipped_surrogate(ev.ratios, batch.advantages, cfg.clip_eps);
        return ev;
    }
    // per-step variant: clip every step's ratio, average per trajectory
    double total = 0.0;
    for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
        const auto logs =
            recorded_step_log_ratios(model, batch.trajectories[i], cfg.ratio_stride);
        const double adv = batch.advantages[i];
        double term = 0.0, log_sum = 0.0;
        for (double l : logs) {
            const double rho = std::exp(l);
            term += std::min(rho * adv, clip(rho, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv);
            log_sum += l;
        }
        if (!logs.empty()) term /= static_cast<double>(logs.size());
        total += term;
        ev.ratios.push_back(std::exp(log_sum));  // product, for diagnostics
    }
    ev.surrogate = total / static_cast<double>(batch.trajectories.size());
    return ev;
}

}  // namespace

double rpo_objective(const DenoiserModel& model, const DenoiserModel& theta_ref,
                     const GroupBatch& batch, const RpoConfig& cfg) {
    const SurrogateEval ev = eval_surrogate(model, batch, cfg);
    double obj = ev.surrogate;
    if (cfg.lambda_kl > 0.0)
        obj -= cfg.lambda_kl * kl_penalty(model, theta_ref, batch.trajectories);
    return obj;
}

std::vector<double> rpo_gradient(const DenoiserModel& model, const DenoiserModel& theta_ref,
                                 const GroupBatch& batch, const RpoConfig& cfg) {
    check_rpo_config(cfg);
    const std::size_t g = batch.trajectories.size();
    if (g != batch.advantages.size()) throw std::invalid_argument("batch advantage count mismatch");

    std::vector<double> grad(model.cfg.param_count(), 0.0);
    const double inv_g = 1.0 / static_cast<double>(g);

    for (std::size_t i = 0; i < g; ++i) {
        const Trajectory& traj = batch.trajectories[i];
        const double adv = batch.advantages[i];
        if (!cfg.per_step_ratio) {
            const double rho = std::exp(recorded_log_ratio(model, traj, cfg.ratio_stride));
            const double unclipped = rho * adv;
            const double clipped = clip(rho, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv;
            // min gate: gradient flows only through the unclipped branch
            if (unclipped > clipped) continue;
            const double scale = inv_g * adv * rho;
            if (scale == 0.0) continue;
            for (std::size_t k = 0; k < traj.step_t.size();
                 k += static_cast<std::size_t>(cfg.ratio_stride)) {
                const double sigma = traj.step_sigmas[k];
                if (sigma <= 0.0) continue;
                ForwardCache cache;
                const auto mu = replay_mean(model, traj, k, &cache);
                // d/dtheta of -||x_prev - mu||^2/(2 sigma^2); c0 chains through
                // the mean parameterization
                const double c0 = traj.step_coeffs[k].c0;
                std::vector<double> cot(mu.size());
                for (std::size_t j = 0; j < mu.size(); ++j)
                    cot[j] = scale * c0 * (traj.states[k + 1][j] - mu[j]) / (sigma * sigma);
                denoiser_backward(model, cache, cot, grad);
            }
            continue;
        }
        // per-step variant: each step carries its own clip gate
        std::size_t n_steps = 0;
        for (std::size_t k = 0; k < traj.step_t.size();
             k += static_cast<std::size_t>(cfg.ratio_stride))
            if (traj.step_sigmas[k] > 0.0) ++n_steps;
        if (n_steps == 0 || adv == 0.0) continue;
        for (std::size_t k = 0; k < traj.step_t.size();
             k += static_cast<std::size_t>(cfg.ratio_stride)) {
            const double sigma = traj.step_sigmas[k];
            if (sigma <= 0.0) continue;
            ForwardCache cache;
            const auto mu = replay_mean(model, traj, k, &cache);
            const double num = squared_distance(traj.states[k + 1], mu);
            const double den = squared_distance(traj.states[k + 1], traj.step_means[k]);
            const double rho = std::exp(-(num - den) / (2.0 * sigma * sigma));
            if (rho * adv > clip(rho, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv) continue;
            const double scale = inv_g * adv * rho / static_cast<double>(n_steps);
            const double c0 = traj.step_coeffs[k].c0;
            std::vector<double> cot(mu.size());
            for (std::size_t j = 0; j < mu.size(); ++j)
                cot[j] = scale * c0 * (traj.states[k + 1][j] - mu[j]) / (sigma * sigma);
            denoiser_backward(model, cache, cot, grad);
        }
    }

    if (cfg.lambda_kl > 0.0) {
        const double coef = -cfg.lambda_kl * inv_g;
        for (const auto& traj : batch.trajectories) {
            for (std::size_t k = 0; k < traj.step_t.size(); ++k) {
                const double sigma = traj.step_sigmas[k];
                if (sigma <= 0.0) continue;
                ForwardCache cache;
                const auto mu = replay_mean(model, traj, k, &cache);
                const auto mu_ref = replay_mean(theta_ref, traj, k);
                const double c0 = traj.step_coeffs[k].c0;
                std::vector<double> cot(mu.size());
                for (std::size_t j = 0; j < mu.size(); ++j)
                    cot[j] = coef * c0 * (mu[j] - mu_ref[j]) / (sigma * sigma);
                denoiser_backward(model, cache, cot, grad);
            }
        }
    }

    for (double gv : grad)
        if (!std::isfinite(gv)) throw NumericError("non-finite policy gradient");
    return grad;
}

RpoStepDiagnostics rpo_step(DenoiserModel& model, const DenoiserModel& theta_ref,
                            const GroupBatch& batch, const RpoConfig& cfg) {
    check_rpo_config(cfg);
    RpoStepDiagnostics diag;

    const SurrogateEval ev = eval_surrogate(model, batch, cfg);
    diag.surrogate = ev.surrogate;
    const double g = static_cast<double>(batch.rewards.size());
    if (!batch.rewards.empty()) {
        const double mean =
            std::accumulate(batch.rewards.begin(), batch.rewards.end(), 0.0) / g;
        double var = 0.0;
        for (double r : batch.rewards) var += (r - mean) * (r - mean);
        diag.mean_reward = mean;
        diag.reward_std = std::sqrt(var / g);
    }
    diag.mean_ratio =
        std::accumulate(ev.ratios.begin(), ev.ratios.end(), 0.0) / static_cast<double>(ev.ratios.size());
    int outside = 0;
    for (double r : ev.ratios)
        if (r < 1.0 - cfg.clip_eps || r > 1.0 + cfg.clip_eps) ++outside;
    diag.clip_fraction = static_cast<double>(outside) / static_cast<double>(ev.ratios.size());
    diag.kl = kl_penalty(model, theta_ref, batch.trajectories);

    std::vector<double> grad = rpo_gradient(model, theta_ref, batch, cfg);
    if (cfg.max_grad_norm > 0.0) {
        double norm2 = 0.0;
        for (double gv : grad) norm2 += gv * gv;
        const double norm = std::sqrt(norm2);
        if (norm > cfg.max_grad_norm)
            for (double& gv : grad) gv *= cfg.max_grad_norm / norm;
    }
    for (std::size_t i = 0; i < grad.size(); ++i) model.theta[i] += cfg.lr * grad[i];
    return diag;
}

PretrainSample make_pretrain_sample(const PairedSample& pair, const NoiseSchedule& sched,
                                    Rng& rng) {
    PretrainSample s;
    s.x0 = image_to_state(pair.clean);
    s.cond = image_to_state(pair.smoky);
    s.t = static_cast<int>(rng.index(sched.timesteps)) + 1;
    const auto eps = rng.normal_vec(s.x0.size());
    s.x_t = forward_noise(s.x0, s.t, eps, sched);
    s.target_mu = true_posterior_mean(sched, s.x0, s.x_t, s.t);
    s.mc = mean_coeffs(sched, s.t);
    return s;
}

double pretrain_loss(const DenoiserModel& model, const PretrainSample& sample,
                     const std::vector<double>& concept_vec) {
    const auto mu = predict_mean(model, sample.x_t, sample.cond, sample.t, sample.mc, concept_vec);
    return squared_distance(mu, sample.target_mu) / static_cast<double>(mu.size());
}

std::vector<double> pretrain_gradient(const DenoiserModel& model, const PretrainSample& sample,
                                      const std::vector<double>& concept_vec) {
    ForwardCache cache;
    const auto mu =
        predict_mean(model, sample.x_t, sample.cond, sample.t, sample.mc, concept_vec, &cache);
    const double inv_d = 1.0 / static_cast<double>(mu.size());
    std::vector<double> cot(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i)
        cot[i] = 2.0 * sample.mc.c0 * (mu[i] - sample.target_mu[i]) * inv_d;
    std::vector<double> grad(model.cfg.param_count(), 0.0);
    denoiser_backward(model, cache, cot, grad);
    return grad;
}

double pretrain_step(DenoiserModel& model, const PairedSample& pair, const NoiseSchedule& sched,
                     Rng& rng, double lr) {
    if (lr <= 0.0) throw std::invalid_argument("lr must be > 0");
    const std::vector<double> concept_vec(model.cfg.concept_dim, 0.0);
    const PretrainSample sample = make_pretrain_sample(pair, sched, rng);
    const double loss = pretrain_loss(model, sample, concept_vec);
    if (!std::isfinite(loss)) throw NumericError("non-finite pretraining loss");
    const auto grad = pretrain_gradient(model, sample, concept_vec);
    for (std::size_t i = 0; i < grad.size(); ++i) model.theta[i] -= lr * grad[i];
    return loss;
}

std::vector<double> pretrain_run(DenoiserModel& model, const std::vector<PairedSample>& pairs,
                                 const NoiseSchedule& sched, int steps, double lr,
                                 std::uint64_t seed, int start_step) {
    if (pairs.empty()) throw std::invalid_argument("pretraining needs a non-empty corpus");
    if (start_step < 0) throw std::invalid_argument("start_step must be >= 0");
    const Rng master = Rng(seed).derive(0x70726574);  // "pret"
    std::vector<double> losses;
    losses.reserve(steps);
    for (int s = 0; s < steps; ++s) {
        Rng rng = master.derive(static_cast<std::uint64_t>(start_step + s));
        const auto& pair = pairs[rng.index(pairs.size())];
        losses.push_back(pretrain_step(model, pair, sched, rng, lr));
    }
    return losses;
}

std::vector<RpoIterationMetrics> rpo_train(DenoiserModel& model, const NoiseSchedule& sched,
                                           const std::vector<Image>& smoky,
                                           const RewardContext& ctx, const RpoConfig& cfg) {
    check_rpo_config(cfg);
    if (smoky.empty()) throw MissingPrerequisiteError("rpo_train needs an unpaired smoky corpus");
    const std::vector<double> concept_vec = concept_vector_for(model, ctx);
    const DenoiserModel theta_ref = model;  // frozen reference
    Rng master = Rng(cfg.seed).derive(0x72706f00);  // "rpo"

    std::vector<RpoIterationMetrics> metrics;
    metrics.reserve(cfg.iterations);
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng iter_rng = master.derive(static_cast<std::uint64_t>(iter));
        const Image& cond = smoky[iter_rng.index(smoky.size())];

        GroupBatch batch;
        batch.trajectories =
            sample_group(model, sched, cond, cfg.group_size, concept_vec, iter_rng.derive(1));
        batch.terms.reserve(cfg.group_size);
        batch.rewards.reserve(cfg.group_size);
        for (const auto& traj : batch.trajectories) {
            const RewardTerms t = score_restoration(cond, traj.final_image, ctx);
            batch.terms.push_back(t);
            batch.rewards.push_back(total_reward(t.r_pg, t.r_rf, t.r_vc, cfg.weights));
        }
        batch.advantages = group_advantages(batch.rewards, cfg.advantage_eps);

        RpoStepDiagnostics diag{};
        for (int e = 0; e < cfg.inner_epochs; ++e) diag = rpo_step(model, theta_ref, batch, cfg);

        RpoIterationMetrics row;
        row.iteration = iter;
        row.mean_reward = diag.mean_reward;
        row.reward_var = diag.reward_std * diag.reward_std;
        const double g = static_cast<double>(cfg.group_size);
        for (const auto& t : batch.terms) {
            row.r_pg_mean += t.r_pg / g;
            row.r_vc_mean += t.r_vc / g;
            row.r_rf_mean += t.r_rf / g;
        }
        row.kl = diag.kl;
        row.clip_fraction = diag.clip_fraction;
        row.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        metrics.push_back(row);
    }
    return metrics;
}

void write_metrics_csv(const std::string& path, const std::vector<std::string>& header_lines,
                       const std::vector<RpoIterationMetrics>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write metrics CSV: " + path);
    out.precision(17);
    for (const auto& h : header_lines) out << "# " << h << "\n";
    out << "iteration,mean_reward,reward_var,r_pg_mean,r_vc_mean,r_rf_mean,kl,clip_fraction,"
           "wall_ms\n";
    for (const auto& r : rows) {
        out << r.iteration << ',' << r.mean_reward << ',' << r.reward_var << ',' << r.r_pg_mean
            << ',' << r.r_vc_mean << ',' << r.r_rf_mean << ',' << r.kl << ',' << r.clip_fraction
            << ',' << r.wall_ms << "\n";
    }
}

}  // namespace desmoke
