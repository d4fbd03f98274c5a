#pragma once
// Group-relative policy optimization over recorded diffusion trajectories:
// normalized group advantages, clipped importance-ratio surrogate, KL anchor
// to a frozen reference, composite reward plumbing, the refinement loop and
// the supervised cold start.

#include <cstdint>
#include <string>
#include <vector>

#include "desmoke/diffusion.hpp"
#include "desmoke/image.hpp"
#include "desmoke/rewards_physics.hpp"
#include "desmoke/rewards_quality.hpp"
#include "desmoke/rewards_semantic.hpp"
#include "desmoke/rng.hpp"
#include "desmoke/synth.hpp"

namespace desmoke {

struct RewardWeights {
    double w_pg = 1.0;
    double w_rf = 1.0;
    double w_vc = 1.0;
};

struct RpoConfig {
    int group_size = 4;
    double clip_eps = 0.2;
    double lambda_kl = 0.01;
    double lr = 0.01;
    int iterations = 200;
    int inner_epochs = 1;
    double advantage_eps = 1e-8;  // variance floor for degenerate groups
    int ratio_stride = 1;         // 1 = evaluate the ratio on every step
    bool per_step_ratio = false;  // clip each step's ratio instead of the product
    double max_grad_norm = 10.0;  // update-step norm clip; 0 disables
    std::uint64_t seed = 0;
    RewardWeights weights;
};

void check_rpo_config(const RpoConfig& cfg);

// Weighted sum of the three reward terms; throws NumericError on non-finite
// input.
double total_reward(double r_pg, double r_rf, double r_vc, const RewardWeights& w = {});

// A_i = (r_i - mean) / max(population std, advantage_eps). Needs >= 2 rewards.
std::vector<double> group_advantages(const std::vector<double>& rewards, double advantage_eps);

// Per-step log ratio log pi_theta / pi_theta_old at the recorded states, for
// steps with sigma > 0 taken at the given stride. Both means re-evaluated.
std::vector<double> step_log_ratios(const DenoiserModel& current, const DenoiserModel& old_model,
                                    const Trajectory& traj, int stride = 1);

// Product over included steps, computed in log space.
double trajectory_ratio(const DenoiserModel& current, const DenoiserModel& old_model,
                        const Trajectory& traj, int stride = 1);

// (1/G) * sum_i min(rho_i*A_i, clip(rho_i, 1-eps, 1+eps)*A_i).
// This is an objective to MAXIMIZE.
double clipped_surrogate(const std::vector<double>& ratios, const std::vector<double>& advantages,
                         double clip_eps);

// Closed-form KL between equal-variance Gaussian step policies, evaluated at
// the recorded states and averaged over trajectories:
// mean_traj sum_{t: sigma>0} ||mu_theta - mu_ref||^2 / (2 sigma_t^2).
double kl_penalty(const DenoiserModel& current, const DenoiserModel& reference,
                  const std::vector<Trajectory>& trajs);

struct RewardTerms {
    double r_pg = 0.0;
    double r_rf = 0.0;
    double r_vc = 0.0;
};

// Everything needed to score a restoration candidate.
struct RewardContext {
    const PriorReference* priors = nullptr;
    const ConceptPair* concepts = nullptr;
    const EmbeddingProvider* provider = nullptr;
    std::vector<const QualityScorer*> scorers;
    std::vector<ScorerNorm> norms;
    RewardWeights weights;
};

RewardTerms score_restoration(const Image& input, const Image& restored, const RewardContext& ctx);

struct GroupBatch {
    std::vector<Trajectory> trajectories;
    std::vector<RewardTerms> terms;
    std::vector<double> rewards;  // weighted totals
    std::vector<double> advantages;
};

struct RpoStepDiagnostics {
    double mean_reward = 0.0;
    double reward_std = 0.0;
    double mean_ratio = 0.0;
    double clip_fraction = 0.0;  // fraction of trajectories outside the clip band
    double kl = 0.0;
    double surrogate = 0.0;
};

// Surrogate minus lambda_kl * KL at the given parameters, with the old-policy
// means taken from the recorded trajectories (the batch was sampled under
// theta_old). This is the exact function rpo_step ascends; kept callable so
// gradients can be checked against finite differences.
double rpo_objective(const DenoiserModel& model, const DenoiserModel& theta_ref,
                     const GroupBatch& batch, const RpoConfig& cfg);

// Analytic ascent gradient of rpo_objective w.r.t. model.theta. Advantages
// and old-policy quantities are constants; the clip's min gates gradient flow
// per trajectory.
std::vector<double> rpo_gradient(const DenoiserModel& model, const DenoiserModel& theta_ref,
                                 const GroupBatch& batch, const RpoConfig& cfg);

// One gradient-ascent step on the objective; updates model.theta in place.
// The applied update is the analytic gradient, norm-clipped to
// cfg.max_grad_norm when that is positive.
RpoStepDiagnostics rpo_step(DenoiserModel& model, const DenoiserModel& theta_ref,
                            const GroupBatch& batch, const RpoConfig& cfg);

// --- supervised cold start ---------------------------------------------

// One fixed draw of the pretraining objective: predict the true posterior
// mean of q(x_{t-1} | x_t, x0) from (x_t, smoky condition, t).
struct PretrainSample {
    std::vector<double> x0;
    std::vector<double> cond;
    std::vector<double> x_t;
    std::vector<double> target_mu;
    int t = 0;
    MeanCoeffs mc;  // posterior coefficients at t
};

PretrainSample make_pretrain_sample(const PairedSample& pair, const NoiseSchedule& sched,
                                    Rng& rng);

// Mean squared error between predicted and true posterior mean.
double pretrain_loss(const DenoiserModel& model, const PretrainSample& sample,
                     const std::vector<double>& concept_vec);
std::vector<double> pretrain_gradient(const DenoiserModel& model, const PretrainSample& sample,
                                      const std::vector<double>& concept_vec);

// Draws a sample, applies one descent step, returns the loss at the draw.
double pretrain_step(DenoiserModel& model, const PairedSample& pair, const NoiseSchedule& sched,
                     Rng& rng, double lr);

// steps of pretrain_step over pairs chosen uniformly from the corpus. Each
// global step index derives its own RNG stream from the seed, so a run split
// across resumes (via start_step) reproduces the single-run loss curve.
std::vector<double> pretrain_run(DenoiserModel& model, const std::vector<PairedSample>& pairs,
                                 const NoiseSchedule& sched, int steps, double lr,
                                 std::uint64_t seed, int start_step = 0);

// --- refinement loop ----------------------------------------------------

struct RpoIterationMetrics {
    int iteration = 0;
    double mean_reward = 0.0;
    double reward_var = 0.0;
    double r_pg_mean = 0.0;
    double r_vc_mean = 0.0;
    double r_rf_mean = 0.0;
    double kl = 0.0;
    double clip_fraction = 0.0;
    double wall_ms = 0.0;
};

// Snapshot / sample group / score / advantages / inner update epochs, once per
// iteration; the condition image is drawn uniformly per iteration from the
// unpaired smoky corpus. The reference policy is frozen at entry. Fully
// deterministic given cfg.seed except for wall_ms.
std::vector<RpoIterationMetrics> rpo_train(DenoiserModel& model, const NoiseSchedule& sched,
                                           const std::vector<Image>& smoky,
                                           const RewardContext& ctx, const RpoConfig& cfg);

// CSV with `# key: value` header lines followed by the fixed column set.
void write_metrics_csv(const std::string& path, const std::vector<std::string>& header_lines,
                       const std::vector<RpoIterationMetrics>& rows);

}  // namespace desmoke
