#include "desmoke/diffusion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "desmoke/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace desmoke {

NoiseSchedule make_schedule(int timesteps, double beta_min, double beta_max) {
    if (timesteps < 1) throw std::invalid_argument("timesteps must be >= 1");
    if (!(beta_min > 0.0) || !(beta_max < 1.0) || beta_min > beta_max)
        throw std::invalid_argument("require 0 < beta_min <= beta_max < 1");
    NoiseSchedule s;
    s.timesteps = timesteps;
    s.beta_min = beta_min;
    s.beta_max = beta_max;
    s.betas.resize(timesteps);
    s.alpha_bars.resize(timesteps);
    s.sigmas.resize(timesteps);
    double prod = 1.0;
    for (int t = 1; t <= timesteps; ++t) {
        const double frac = timesteps == 1 ? 0.0 : static_cast<double>(t - 1) / (timesteps - 1);
        const double beta = beta_min + (beta_max - beta_min) * frac;
        prod *= 1.0 - beta;
        s.betas[t - 1] = beta;
        s.alpha_bars[t - 1] = prod;
        s.sigmas[t - 1] = std::sqrt(beta);
    }
    return s;
}

std::vector<double> forward_noise(const std::vector<double>& x0, int t,
                                  const std::vector<double>& eps, const NoiseSchedule& sched) {
    if (t < 0 || t > sched.timesteps) throw std::invalid_argument("forward_noise: t out of [0,T]");
    if (x0.size() != eps.size()) throw std::invalid_argument("forward_noise: shape mismatch");
    if (t == 0) return x0;
    const double ab = sched.alpha_bar(t);
    const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    std::vector<double> out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + b * eps[i];
    return out;
}

std::vector<double> true_posterior_mean(const NoiseSchedule& sched, const std::vector<double>& x0,
                                        const std::vector<double>& x_t, int t) {
    if (t < 1 || t > sched.timesteps)
        throw std::invalid_argument("true_posterior_mean: t out of [1,T]");
    if (x0.size() != x_t.size()) throw std::invalid_argument("true_posterior_mean: shape mismatch");
    const double ab_t = sched.alpha_bar(t);
    const double ab_prev = sched.alpha_bar(t - 1);
    const double beta = sched.beta(t);
    const double alpha = 1.0 - beta;
    const double c0 = std::sqrt(ab_prev) * beta / (1.0 - ab_t);
    const double ct = std::sqrt(alpha) * (1.0 - ab_prev) / (1.0 - ab_t);
    std::vector<double> out(x0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = c0 * x0[i] + ct * x_t[i];
    return out;
}

void check_denoiser_config(const DenoiserConfig& cfg) {
    if (cfg.state_dim < 1) throw std::invalid_argument("state_dim must be >= 1");
    if (cfg.hidden < 1) throw std::invalid_argument("hidden must be >= 1");
    if (cfg.time_embed_dim < 2 || cfg.time_embed_dim % 2 != 0)
        throw std::invalid_argument("time_embed_dim must be even and >= 2");
    if (cfg.concept_dim < 0) throw std::invalid_argument("concept_dim must be >= 0");
}

DenoiserModel make_denoiser(const DenoiserConfig& cfg, std::uint64_t seed) {
    check_denoiser_config(cfg);
    DenoiserModel m;
    m.cfg = cfg;
    m.theta.assign(cfg.param_count(), 0.0);
    Rng rng = Rng(seed).derive(0x696e6974);  // "init"
    const std::size_t w1 = static_cast<std::size_t>(cfg.hidden) * cfg.input_dim();
    for (std::size_t i = 0; i < w1; ++i) m.theta[i] = 0.02 * rng.normal();
    const std::size_t w2_off = w1 + cfg.hidden;
    const std::size_t w2 = static_cast<std::size_t>(cfg.state_dim) * cfg.hidden;
    for (std::size_t i = 0; i < w2; ++i) m.theta[w2_off + i] = 0.02 * rng.normal();
    return m;
}

std::vector<double> time_embedding(int t, int dim) {
    std::vector<double> e(dim);
    const int half = dim / 2;
    for (int k = 0; k < half; ++k) {
        const double freq = std::pow(10000.0, -static_cast<double>(k) / half);
        e[2 * k] = std::sin(t * freq);
        e[2 * k + 1] = std::cos(t * freq);
    }
    return e;
}

std::vector<double> denoiser_forward(const DenoiserModel& model, const std::vector<double>& x_t,
                                     const std::vector<double>& cond, int t,
                                     const std::vector<double>& concept_vec, ForwardCache* cache) {
    const DenoiserConfig& cfg = model.cfg;
    const int d = cfg.state_dim, H = cfg.hidden, n_in = cfg.input_dim();
    if (static_cast<int>(x_t.size()) != d || static_cast<int>(cond.size()) != d)
        throw std::invalid_argument("denoiser_forward: state/cond size mismatch");
    if (static_cast<int>(concept_vec.size()) != cfg.concept_dim)
        throw std::invalid_argument("denoiser_forward: concept_vec size mismatch");

    std::vector<double> in(n_in);
    std::copy(x_t.begin(), x_t.end(), in.begin());
    std::copy(cond.begin(), cond.end(), in.begin() + d);
    const auto temb = time_embedding(t, cfg.time_embed_dim);
    std::copy(temb.begin(), temb.end(), in.begin() + 2 * d);
    std::copy(concept_vec.begin(), concept_vec.end(), in.begin() + 2 * d + cfg.time_embed_dim);

    const double* th = model.theta.data();
    const double* W1 = th;
    const double* b1 = th + static_cast<std::size_t>(H) * n_in;
    const double* W2 = b1 + H;
    const double* b2 = W2 + static_cast<std::size_t>(d) * H;

    std::vector<double> hid(H);
    for (int j = 0; j < H; ++j) {
        const double* row = W1 + static_cast<std::size_t>(j) * n_in;
        double z = b1[j];
        for (int i = 0; i < n_in; ++i) z += row[i] * in[i];
        hid[j] = std::tanh(z);
    }
    std::vector<double> out(d);
    for (int o = 0; o < d; ++o) {
        const double* row = W2 + static_cast<std::size_t>(o) * H;
        double z = b2[o];
        for (int j = 0; j < H; ++j) z += row[j] * hid[j];
        out[o] = z;
    }
    if (cache) {
        cache->input = std::move(in);
        cache->hidden = std::move(hid);
    }
    return out;
}

MeanCoeffs mean_coeffs(const NoiseSchedule& sched, int t) {
    if (t < 1 || t > sched.timesteps) throw std::invalid_argument("mean_coeffs: t out of [1,T]");
    const double ab_t = sched.alpha_bar(t);
    const double ab_prev = sched.alpha_bar(t - 1);
    const double beta = sched.beta(t);
    MeanCoeffs mc;
    mc.c0 = std::sqrt(ab_prev) * beta / (1.0 - ab_t);
    mc.ct = std::sqrt(1.0 - beta) * (1.0 - ab_prev) / (1.0 - ab_t);
    return mc;
}

std::vector<double> predict_mean(const DenoiserModel& model, const std::vector<double>& x_t,
                                 const std::vector<double>& cond, int t, const MeanCoeffs& mc,
                                 const std::vector<double>& concept_vec, ForwardCache* cache) {
    std::vector<double> mu = denoiser_forward(model, x_t, cond, t, concept_vec, cache);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        mu[i] = mc.ct * x_t[i] + mc.c0 * mu[i];
        if (!std::isfinite(mu[i])) throw NumericError("non-finite denoiser output");
    }
    return mu;
}

void denoiser_backward(const DenoiserModel& model, const ForwardCache& cache,
                       const std::vector<double>& cot_out, std::vector<double>& grad) {
    const DenoiserConfig& cfg = model.cfg;
    const int d = cfg.state_dim, H = cfg.hidden, n_in = cfg.input_dim();
    if (grad.size() != cfg.param_count())
        throw std::invalid_argument("denoiser_backward: grad size mismatch");
    if (static_cast<int>(cot_out.size()) != d)
        throw std::invalid_argument("denoiser_backward: cotangent size mismatch");

    const double* th = model.theta.data();
    const std::size_t w1_n = static_cast<std::size_t>(H) * n_in;
    const double* W2 = th + w1_n + H;

    double* gW1 = grad.data();
    double* gb1 = grad.data() + w1_n;
    double* gW2 = gb1 + H;
    double* gb2 = gW2 + static_cast<std::size_t>(d) * H;

    // output layer
    std::vector<double> cot_hidden(H, 0.0);
    for (int o = 0; o < d; ++o) {
        const double co = cot_out[o];
        if (co == 0.0) continue;
        gb2[o] += co;
        double* grow = gW2 + static_cast<std::size_t>(o) * H;
        const double* wrow = W2 + static_cast<std::size_t>(o) * H;
        for (int j = 0; j < H; ++j) {
            grow[j] += co * cache.hidden[j];
            cot_hidden[j] += co * wrow[j];
        }
    }
    // hidden layer through tanh
    for (int j = 0; j < H; ++j) {
        const double hj = cache.hidden[j];
        const double cz = cot_hidden[j] * (1.0 - hj * hj);
        if (cz == 0.0) continue;
        gb1[j] += cz;
        double* grow = gW1 + static_cast<std::size_t>(j) * n_in;
        for (int i = 0; i < n_in; ++i) grow[i] += cz * cache.input[i];
    }
}

std::vector<double> reverse_step(const DenoiserModel& model, const NoiseSchedule& sched,
                                 const std::vector<double>& x_t, const std::vector<double>& cond,
                                 int t, const std::vector<double>& eps,
                                 const std::vector<double>& concept_vec) {
    if (t < 1 || t > sched.timesteps) throw std::invalid_argument("reverse_step: t out of [1,T]");
    std::vector<double> x = predict_mean(model, x_t, cond, t, mean_coeffs(sched, t), concept_vec);
    const double sigma = sched.sigma(t);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += sigma * eps[i];
    return x;
}

Trajectory rollout(const DenoiserModel& model, const NoiseSchedule& sched, const Image& cond,
                   const std::vector<double>& concept_vec, Rng rng,
                   const std::vector<double>* fixed_init, bool deterministic) {
    check_image(cond);
    const int d = model.cfg.state_dim;
    if (static_cast<int>(cond.data.size()) != d)
        throw std::invalid_argument("rollout: condition size does not match state_dim");
    const int T = sched.timesteps;

    Trajectory traj;
    traj.cond = cond.data;
    traj.concept_vec = concept_vec;
    traj.init_noise = fixed_init ? *fixed_init : rng.normal_vec(d);
    traj.states.reserve(T + 1);
    traj.states.push_back(traj.init_noise);
    traj.step_means.reserve(T);
    traj.step_noises.reserve(T);
    traj.step_sigmas.reserve(T);
    traj.step_t.reserve(T);
    traj.step_coeffs.reserve(T);

    for (int t = T; t >= 1; --t) {
        const std::vector<double>& x_t = traj.states.back();
        const MeanCoeffs mc = mean_coeffs(sched, t);
        std::vector<double> mu = predict_mean(model, x_t, traj.cond, t, mc, concept_vec);
        // noise is injected at every step of a stochastic rollout; a sigma of
        // 0 (deterministic mode, or a forced schedule) excludes the step from
        // density sums
        const double sigma = deterministic ? 0.0 : sched.sigma(t);
        const bool stochastic = sigma > 0.0;
        std::vector<double> eps =
            stochastic ? rng.normal_vec(d) : std::vector<double>(d, 0.0);
        std::vector<double> x_prev(d);
        for (int i = 0; i < d; ++i) x_prev[i] = mu[i] + sigma * eps[i];
        traj.step_means.push_back(std::move(mu));
        traj.step_noises.push_back(std::move(eps));
        traj.step_sigmas.push_back(sigma);
        traj.step_t.push_back(t);
        traj.step_coeffs.push_back(mc);
        traj.states.push_back(std::move(x_prev));
    }
    traj.final_image = state_to_image(traj.states.back(), cond.height, cond.width);
    return traj;
}

std::vector<Trajectory> sample_group(const DenoiserModel& model, const NoiseSchedule& sched,
                                     const Image& cond, int group_size,
                                     const std::vector<double>& concept_vec, Rng rng) {
    if (group_size < 2) throw std::invalid_argument("group size must be >= 2");
    std::vector<Trajectory> group;
    group.reserve(group_size);
    for (int g = 0; g < group_size; ++g)
        group.push_back(rollout(model, sched, cond, concept_vec, rng.derive(g)));
    return group;
}

std::vector<double> replay_mean(const DenoiserModel& model, const Trajectory& traj, std::size_t k,
                                ForwardCache* cache) {
    return predict_mean(model, traj.states[k], traj.cond, traj.step_t[k], traj.step_coeffs[k],
                        traj.concept_vec, cache);
}

double trajectory_log_density(const DenoiserModel& model, const Trajectory& traj,
                              int step_stride) {
    if (step_stride < 1) throw std::invalid_argument("step_stride must be >= 1");
    const std::size_t n_steps = traj.step_t.size();
    double sum = 0.0;
    for (std::size_t k = 0; k < n_steps; k += step_stride) {
        const double sigma = traj.step_sigmas[k];
        if (sigma <= 0.0) continue;
        const std::vector<double> mu = replay_mean(model, traj, k);
        const std::vector<double>& x_prev = traj.states[k + 1];
        double sq = 0.0;
        for (std::size_t i = 0; i < mu.size(); ++i) {
            const double dlt = x_prev[i] - mu[i];
            sq += dlt * dlt;
        }
        sum -= sq / (2.0 * sigma * sigma);
    }
    return sum;
}

std::vector<double> trajectory_log_density_gradient(const DenoiserModel& model,
                                                    const Trajectory& traj, int step_stride) {
    if (step_stride < 1) throw std::invalid_argument("step_stride must be >= 1");
    std::vector<double> grad(model.cfg.param_count(), 0.0);
    for (std::size_t k = 0; k < traj.step_t.size(); k += step_stride) {
        const double sigma = traj.step_sigmas[k];
        if (sigma <= 0.0) continue;
        ForwardCache cache;
        const std::vector<double> mu = replay_mean(model, traj, k, &cache);
        const std::vector<double>& x_prev = traj.states[k + 1];
        const double c0 = traj.step_coeffs[k].c0;
        std::vector<double> cot(mu.size());
        for (std::size_t i = 0; i < mu.size(); ++i)
            cot[i] = c0 * (x_prev[i] - mu[i]) / (sigma * sigma);
        denoiser_backward(model, cache, cot, grad);
    }
    return grad;
}

std::vector<double> image_to_state(const Image& img) { return img.data; }

Image state_to_image(const std::vector<double>& state, int h, int w) {
    if (state.size() != static_cast<std::size_t>(h) * w * 3)
        throw std::invalid_argument("state_to_image: size mismatch");
    Image img(h, w);
    img.data = state;
    img.clamp01();
    return img;
}

namespace {

constexpr char kMagic[8] = {'D', 'S', 'M', 'K', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& buf, const T& v) {
    buf.append(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(const std::string& buf, std::size_t& off) {
    if (off + sizeof(T) > buf.size()) throw std::runtime_error("truncated checkpoint");
    T v;
    std::memcpy(&v, buf.data() + off, sizeof v);
    off += sizeof v;
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    if (ckpt.theta.size() != ckpt.cfg.param_count())
        throw std::invalid_argument("checkpoint parameter count mismatch");
    std::string buf;
    buf.append(kMagic, sizeof kMagic);
    put(buf, kVersion);
    put(buf, static_cast<std::int32_t>(ckpt.cfg.state_dim));
    put(buf, static_cast<std::int32_t>(ckpt.cfg.hidden));
    put(buf, static_cast<std::int32_t>(ckpt.cfg.time_embed_dim));
    put(buf, static_cast<std::int32_t>(ckpt.cfg.concept_dim));
    put(buf, static_cast<std::int32_t>(ckpt.patch_h));
    put(buf, static_cast<std::int32_t>(ckpt.patch_w));
    put(buf, static_cast<std::int32_t>(ckpt.timesteps));
    put(buf, ckpt.beta_min);
    put(buf, ckpt.beta_max);
    put(buf, static_cast<std::uint64_t>(ckpt.theta.size()));
    buf.append(reinterpret_cast<const char*>(ckpt.theta.data()),
               ckpt.theta.size() * sizeof(double));
    const std::uint64_t checksum = fnv1a64(buf.data(), buf.size());
    put(buf, checksum);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for write: " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < sizeof kMagic + sizeof kVersion + sizeof(std::uint64_t))
        throw std::runtime_error("checkpoint too small: " + path);
    if (std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0)
        throw std::runtime_error("bad checkpoint magic: " + path);

    const std::uint64_t stored_sum =
        *reinterpret_cast<const std::uint64_t*>(buf.data() + buf.size() - sizeof(std::uint64_t));
    const std::uint64_t computed = fnv1a64(buf.data(), buf.size() - sizeof(std::uint64_t));
    if (stored_sum != computed) throw std::runtime_error("checkpoint checksum mismatch: " + path);

    std::size_t off = sizeof kMagic;
    const auto version = take<std::uint32_t>(buf, off);
    if (version != kVersion) throw std::runtime_error("unsupported checkpoint version");
    Checkpoint ckpt;
    ckpt.cfg.state_dim = take<std::int32_t>(buf, off);
    ckpt.cfg.hidden = take<std::int32_t>(buf, off);
    ckpt.cfg.time_embed_dim = take<std::int32_t>(buf, off);
    ckpt.cfg.concept_dim = take<std::int32_t>(buf, off);
    ckpt.patch_h = take<std::int32_t>(buf, off);
    ckpt.patch_w = take<std::int32_t>(buf, off);
    ckpt.timesteps = take<std::int32_t>(buf, off);
    ckpt.beta_min = take<double>(buf, off);
    ckpt.beta_max = take<double>(buf, off);
    const auto n = take<std::uint64_t>(buf, off);
    if (n != ckpt.cfg.param_count()) throw std::runtime_error("checkpoint parameter count mismatch");
    if (off + n * sizeof(double) + sizeof(std::uint64_t) != buf.size())
        throw std::runtime_error("checkpoint size mismatch");
    ckpt.theta.resize(n);
    std::memcpy(ckpt.theta.data(), buf.data() + off, n * sizeof(double));
    return ckpt;
}

}  // namespace desmoke
