#pragma once
// Conditional diffusion restorer treated as a stochastic policy: noise
// schedule, a small analytic-gradient denoiser, stochastic reverse steps and
// group rollouts with complete trajectory records for likelihood evaluation.

#include <cstdint>
#include <string>
#include <vector>

#include "desmoke/image.hpp"
#include "desmoke/rng.hpp"

namespace desmoke {

struct NoiseSchedule {
    int timesteps = 0;               // T
    double beta_min = 0.0;
    double beta_max = 0.0;
    std::vector<double> betas;       // beta_t at index t-1
    std::vector<double> alpha_bars;  // prod_{s<=t}(1-beta_s) at index t-1
    std::vector<double> sigmas;      // sqrt(beta_t) at index t-1

    double beta(int t) const { return betas[t - 1]; }
    // alpha_bar(0) = 1 by convention
    double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bars[t - 1]; }
    double sigma(int t) const { return sigmas[t - 1]; }
};

// Linear beta interpolation; sigma_t = sqrt(beta_t) (fixed-variance rule).
NoiseSchedule make_schedule(int timesteps, double beta_min, double beta_max);

// x_t = sqrt(alpha_bar_t)*x0 + sqrt(1-alpha_bar_t)*eps. t in [0,T]; t = 0
// returns x0 exactly.
std::vector<double> forward_noise(const std::vector<double>& x0, int t,
                                  const std::vector<double>& eps, const NoiseSchedule& sched);

// Mean of q(x_{t-1} | x_t, x0); the supervised pretraining target.
std::vector<double> true_posterior_mean(const NoiseSchedule& sched,
                                        const std::vector<double>& x0,
                                        const std::vector<double>& x_t, int t);

// Two-layer denoiser over [x_t, cond, time_embedding(t), concept]:
//   net(in) = W2 * tanh(W1*in + b1) + b2     (the clean-image estimate)
//   mu_theta(x_t, t) = ct(t)*x_t + c0(t)*net(in)
// with c0/ct the exact posterior-mean coefficients of the schedule, so the
// network predicts the posterior mean through its clean-image estimate.
// Parameters are a flat vector: W1 row-major (hidden x input_dim), b1,
// W2 row-major (state_dim x hidden), b2.
struct DenoiserConfig {
    int state_dim = 0;       // 3*h*w
    int hidden = 32;
    int time_embed_dim = 8;  // even
    int concept_dim = 0;     // 0 disables concept conditioning

    int input_dim() const { return 2 * state_dim + time_embed_dim + concept_dim; }
    std::size_t param_count() const {
        return static_cast<std::size_t>(hidden) * input_dim() + hidden +
               static_cast<std::size_t>(state_dim) * hidden + state_dim;
    }
    bool operator==(const DenoiserConfig&) const = default;
};

struct DenoiserModel {
    DenoiserConfig cfg;
    std::vector<double> theta;
};

void check_denoiser_config(const DenoiserConfig& cfg);

// Weights ~ N(0, 0.02^2), biases zero; deterministic in seed.
DenoiserModel make_denoiser(const DenoiserConfig& cfg, std::uint64_t seed);

std::vector<double> time_embedding(int t, int dim);

// Intermediates needed by the backward pass.
struct ForwardCache {
    std::vector<double> input;
    std::vector<double> hidden;
};

// Raw network output (the clean-image estimate). concept must have size
// cfg.concept_dim (empty when 0).
std::vector<double> denoiser_forward(const DenoiserModel& model, const std::vector<double>& x_t,
                                     const std::vector<double>& cond, int t,
                                     const std::vector<double>& concept_vec,
                                     ForwardCache* cache = nullptr);

// Posterior-mean combination coefficients: mu = ct*x_t + c0*net. At t=1 this
// is (c0, ct) = (1, 0), so the final step emits the clean estimate directly.
struct MeanCoeffs {
    double c0 = 1.0;
    double ct = 0.0;
};

MeanCoeffs mean_coeffs(const NoiseSchedule& sched, int t);

// mu_theta = mc.ct*x_t + mc.c0*denoiser_forward(...). Throws NumericError on
// non-finite output. Gradients w.r.t. parameters flow through the network
// with cotangent scaled by mc.c0.
std::vector<double> predict_mean(const DenoiserModel& model, const std::vector<double>& x_t,
                                 const std::vector<double>& cond, int t, const MeanCoeffs& mc,
                                 const std::vector<double>& concept_vec,
                                 ForwardCache* cache = nullptr);

// Accumulates d(sum_o cot_out[o]*out[o])/dtheta into grad. grad must have
// param_count() entries. Exact for the declared architecture.
void denoiser_backward(const DenoiserModel& model, const ForwardCache& cache,
                       const std::vector<double>& cot_out, std::vector<double>& grad);

// One stochastic reverse rollout, every draw recorded. Step k covers
// t = T-k: states[k] = x_t, states[k+1] = x_{t-1}, and
// x_{t-1} = step_means[k] + step_sigmas[k]*step_noises[k].
// Stochastic rollouts perturb every step. Steps recorded with sigma = 0
// (deterministic mode, or a schedule with zeroed sigmas) are excluded from
// density sums.
struct Trajectory {
    std::vector<double> cond;          // flattened smoky condition
    std::vector<double> concept_vec;   // conditioning vector (may be empty)
    std::vector<double> init_noise;    // eps^(g); equals states[0] = x_T
    std::vector<std::vector<double>> states;       // x_T .. x_0, T+1 entries
    std::vector<std::vector<double>> step_means;   // mu_theta(x_t, t)
    std::vector<std::vector<double>> step_noises;  // eps per step
    std::vector<double> step_sigmas;   // effective sigma per step (0 => excluded)
    std::vector<int> step_t;           // t = T .. 1
    std::vector<MeanCoeffs> step_coeffs;  // posterior-mean coefficients per step
    Image final_image;                 // clamp(x_0)
};

// mu under `model` at recorded step k of the trajectory; the trajectory is
// self-contained for likelihood evaluation.
std::vector<double> replay_mean(const DenoiserModel& model, const Trajectory& traj, std::size_t k,
                                ForwardCache* cache = nullptr);

// x_{t-1} = mu_theta(x_t, t) + sigma_t*eps; no clamping (that happens only
// when x_0 becomes the final image).
std::vector<double> reverse_step(const DenoiserModel& model, const NoiseSchedule& sched,
                                 const std::vector<double>& x_t, const std::vector<double>& cond,
                                 int t, const std::vector<double>& eps,
                                 const std::vector<double>& concept_vec);

Trajectory rollout(const DenoiserModel& model, const NoiseSchedule& sched, const Image& cond,
                   const std::vector<double>& concept_vec, Rng rng,
                   const std::vector<double>* fixed_init = nullptr, bool deterministic = false);

// G independent rollouts with distinct initial and per-step noises, streams
// derived from rng per group member. G >= 2.
std::vector<Trajectory> sample_group(const DenoiserModel& model, const NoiseSchedule& sched,
                                     const Image& cond, int group_size,
                                     const std::vector<double>& concept_vec, Rng rng);

// sum over steps with sigma>0 of -||x_{t-1} - mu_theta(x_t,t)||^2/(2 sigma_t^2),
// re-running the model at the recorded states. Additive constants independent
// of parameters are dropped.
double trajectory_log_density(const DenoiserModel& model, const Trajectory& traj,
                              int step_stride = 1);

// Analytic gradient of trajectory_log_density w.r.t. model.theta.
std::vector<double> trajectory_log_density_gradient(const DenoiserModel& model,
                                                    const Trajectory& traj, int step_stride = 1);

// Flattening between images and state vectors.
std::vector<double> image_to_state(const Image& img);
Image state_to_image(const std::vector<double>& state, int h, int w);

// Versioned binary checkpoint: magic, config block, little-endian float64
// parameters, FNV-1a checksum.
struct Checkpoint {
    DenoiserConfig cfg;
    int patch_h = 0;
    int patch_w = 0;
    int timesteps = 0;
    double beta_min = 0.0;
    double beta_max = 0.0;
    std::vector<double> theta;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace desmoke
