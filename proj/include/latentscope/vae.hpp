#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "latentscope/common.hpp"
#include "latentscope/mixture.hpp"
#include "latentscope/nn.hpp"
#include "latentscope/rng.hpp"

namespace latentscope::vae {

struct ModelConfig {
    std::size_t input_len = 256;
    std::size_t latent_dim = 16;
    std::size_t conv_channels = 8;
    std::size_t conv_kernel = 5;
    std::size_t pool = 2;
    std::size_t hidden = 64;
    double dropout = 0.1;
    double zlogvar_clamp = 10.0;
    // Fixed input scaling applied before the encoder so strain-scale signals
    // produce O(1) activations; not learned.
    double input_gain = 20.0;

    void validate() const {
        require_config(input_len >= 4, "[model] input_len must be >= 4");
        require_config(latent_dim >= 1, "[model] latent_dim must be >= 1");
        require_config(conv_channels >= 1, "[model] conv_channels must be >= 1");
        require_config(conv_kernel >= 1 && conv_kernel <= input_len,
                       "[model] conv_kernel must be in 1..input_len");
        require_config(pool >= 1, "[model] pool must be >= 1");
        require_config(pool <= conv_length(), "[model] pool window exceeds the conv output");
        require_config(hidden >= 1, "[model] hidden must be >= 1");
        require_config(dropout >= 0.0 && dropout < 1.0, "[model] dropout must be in [0, 1)");
        require_config(zlogvar_clamp > 0.0, "[model] zlogvar_clamp must be > 0");
        require_config(input_gain > 0.0, "[model] input_gain must be > 0");
    }

    std::size_t conv_length() const { return input_len - conv_kernel + 1; }
    std::size_t pool_length() const { return conv_length() / pool; }
    std::size_t flat_length() const { return conv_channels * pool_length(); }
    std::size_t decoder_channels() const { return std::max<std::size_t>(conv_channels / 2, 1); }
    // Second transposed conv closes the gap left by pooling remainder so the
    // reconstruction is exactly input_len long.
    std::size_t decoder_kernel2() const { return input_len - pool_length() * pool + 1; }
};

// The MoG prior is fixed rather than learned: two symmetric unit-variance
// components, shared across latent dimensions.
inline mixture::MixtureModel default_prior() {
    return mixture::MixtureModel{{0.5, 0.5}, {-1.0, 1.0}, {1.0, 1.0}};
}

struct LatentCode {
    std::vector<double> z_mean;
    std::vector<double> z_log_var;
    std::vector<double> z;
};

inline std::vector<double> reparameterize(const std::vector<double>& z_mean,
                                          const std::vector<double>& z_log_var,
                                          const std::vector<double>& eps) {
    require_config(z_mean.size() == z_log_var.size() && z_mean.size() == eps.size(),
                   "reparameterize vector length mismatch");
    std::vector<double> z(z_mean.size());
    for (std::size_t d = 0; d < z.size(); ++d)
        z[d] = z_mean[d] + std::exp(0.5 * z_log_var[d]) * eps[d];
    return z;
}

// Single-sample Monte-Carlo KL estimate log q(z | mean, var) - log p(z) under
// the per-dimension mixture prior, evaluated at the given z.
inline double kl_term(const LatentCode& code, const mixture::MixtureModel& prior) {
    require_config(code.z.size() == code.z_mean.size() &&
                       code.z.size() == code.z_log_var.size(),
                   "latent code vector length mismatch");
    double log_q = 0.0;
    double log_p = 0.0;
    for (std::size_t d = 0; d < code.z.size(); ++d) {
        log_q += mixture::gaussian_logpdf(code.z[d], code.z_mean[d],
                                          std::exp(code.z_log_var[d]));
        log_p += mixture::log_density(prior, code.z[d]);
    }
    const double kl = log_q - log_p;
    require_numeric(std::isfinite(kl), "non-finite KL estimate");
    return kl;
}

struct BetaSchedule {
    double beta_min = 0.0;
    double beta_max = 0.002;
    std::size_t warmup_epochs = 32;

    void validate() const {
        require_config(beta_min >= 0.0 && beta_max >= beta_min,
                       "[train] beta schedule must satisfy 0 <= beta_min <= beta_max");
    }
};

// Linear ramp over the warmup, constant afterwards.
inline double beta_at(std::size_t epoch, const BetaSchedule& schedule) {
    if (schedule.warmup_epochs == 0 || epoch >= schedule.warmup_epochs)
        return schedule.beta_max;
    const double frac = static_cast<double>(epoch) / static_cast<double>(schedule.warmup_epochs);
    return schedule.beta_min + (schedule.beta_max - schedule.beta_min) * frac;
}

struct VaeModel {
    ModelConfig cfg;
    nn::Conv1d enc_conv;
    nn::MaxPool1d enc_pool;
    nn::Dense enc_fc;
    nn::Dense enc_mean;
    nn::Dense enc_logvar;
    nn::Dense dec_fc1;
    nn::Dense dec_fc2;
    nn::ConvTranspose1d dec_convt1;
    nn::ConvTranspose1d dec_convt2;
    mixture::MixtureModel prior = default_prior();
    std::uint64_t seed = 0;

    static VaeModel init(const ModelConfig& cfg, std::uint64_t seed) {
        cfg.validate();
        VaeModel m;
        m.cfg = cfg;
        m.seed = seed;
        m.enc_conv = nn::Conv1d(1, cfg.conv_channels, cfg.conv_kernel);
        m.enc_pool = nn::MaxPool1d{cfg.pool};
        m.enc_fc = nn::Dense(cfg.flat_length(), cfg.hidden);
        m.enc_mean = nn::Dense(cfg.hidden, cfg.latent_dim);
        m.enc_logvar = nn::Dense(cfg.hidden, cfg.latent_dim);
        m.dec_fc1 = nn::Dense(cfg.latent_dim, cfg.hidden);
        m.dec_fc2 = nn::Dense(cfg.hidden, cfg.flat_length());
        m.dec_convt1 = nn::ConvTranspose1d(cfg.conv_channels, cfg.decoder_channels(),
                                           cfg.pool, cfg.pool);
        m.dec_convt2 = nn::ConvTranspose1d(cfg.decoder_channels(), 1, cfg.decoder_kernel2(), 1);

        Rng rng(derive_seed(seed, streams::init));
        nn::init_uniform(m.enc_conv.w, cfg.conv_kernel, cfg.conv_channels * cfg.conv_kernel, rng);
        nn::init_uniform(m.enc_fc.w, m.enc_fc.in_dim, m.enc_fc.out_dim, rng);
        nn::init_uniform(m.enc_mean.w, m.enc_mean.in_dim, m.enc_mean.out_dim, rng);
        nn::init_uniform(m.enc_logvar.w, m.enc_logvar.in_dim, m.enc_logvar.out_dim, rng);
        nn::init_uniform(m.dec_fc1.w, m.dec_fc1.in_dim, m.dec_fc1.out_dim, rng);
        nn::init_uniform(m.dec_fc2.w, m.dec_fc2.in_dim, m.dec_fc2.out_dim, rng);
        nn::init_uniform(m.dec_convt1.w, cfg.conv_channels * cfg.pool,
                         cfg.decoder_channels() * cfg.pool, rng);
        nn::init_uniform(m.dec_convt2.w, cfg.decoder_channels() * cfg.decoder_kernel2(),
                         cfg.decoder_kernel2(), rng);
        // Start near-deterministic: a unit-variance latent at init drowns the
        // encoder signal and stalls the short desk-scale training budget.
        std::fill(m.enc_logvar.b.begin(), m.enc_logvar.b.end(), -6.0);
        return m;
    }

    double clamp_logvar(double v) const {
        return std::clamp(v, -cfg.zlogvar_clamp, cfg.zlogvar_clamp);
    }

    // Deterministic inference-mode pass; dropout is identity here.
    std::pair<std::vector<double>, std::vector<double>> encode(
        std::span<const double> x) const {
        require_config(x.size() == cfg.input_len, "encode input length mismatch");
        nn::Mat input(1, cfg.input_len);
        for (std::size_t i = 0; i < x.size(); ++i) input.v[i] = cfg.input_gain * x[i];
        nn::Mat a0 = enc_conv.forward(input);
        nn::relu_inplace(a0.v);
        std::vector<std::size_t> argmax;
        nn::Mat pooled = enc_pool.forward(a0, argmax);
        std::vector<double> hidden = enc_fc.forward(pooled.v);
        nn::relu_inplace(hidden);
        std::vector<double> z_mean = enc_mean.forward(hidden);
        std::vector<double> z_log_var = enc_logvar.forward(hidden);
        for (auto& v : z_log_var) v = clamp_logvar(v);
        return {std::move(z_mean), std::move(z_log_var)};
    }

    std::vector<double> decode(const std::vector<double>& z) const {
        require_config(z.size() == cfg.latent_dim, "decode latent length mismatch");
        std::vector<double> h = dec_fc1.forward(z);
        nn::relu_inplace(h);
        std::vector<double> flat = dec_fc2.forward(h);
        nn::relu_inplace(flat);
        nn::Mat grid(cfg.conv_channels, cfg.pool_length());
        grid.v = std::move(flat);
        nn::Mat t1 = dec_convt1.forward(grid);
        nn::relu_inplace(t1.v);
        nn::Mat out = dec_convt2.forward(t1);
        require_numeric(out.length == cfg.input_len, "decoder produced a wrong length");
        return out.v;
    }

    std::vector<std::span<double>> param_spans() {
        return {std::span(enc_conv.w),   std::span(enc_conv.b),   std::span(enc_fc.w),
                std::span(enc_fc.b),     std::span(enc_mean.w),   std::span(enc_mean.b),
                std::span(enc_logvar.w), std::span(enc_logvar.b), std::span(dec_fc1.w),
                std::span(dec_fc1.b),    std::span(dec_fc2.w),    std::span(dec_fc2.b),
                std::span(dec_convt1.w), std::span(dec_convt1.b), std::span(dec_convt2.w),
                std::span(dec_convt2.b)};
    }

    static const std::vector<std::string>& param_names() {
        static const std::vector<std::string> names = {
            "enc.conv.w",   "enc.conv.b",   "enc.fc.w",     "enc.fc.b",
            "enc.mean.w",   "enc.mean.b",   "enc.logvar.w", "enc.logvar.b",
            "dec.fc1.w",    "dec.fc1.b",    "dec.fc2.w",    "dec.fc2.b",
            "dec.convt1.w", "dec.convt1.b", "dec.convt2.w", "dec.convt2.b"};
        return names;
    }
};

struct ModelGrads {
    nn::Conv1d::Grad enc_conv;
    nn::Dense::Grad enc_fc, enc_mean, enc_logvar, dec_fc1, dec_fc2;
    nn::ConvTranspose1d::Grad dec_convt1, dec_convt2;

    void resize_like(VaeModel& m) {
        enc_conv.w.assign(m.enc_conv.w.size(), 0.0);
        enc_conv.b.assign(m.enc_conv.b.size(), 0.0);
        enc_fc.w.assign(m.enc_fc.w.size(), 0.0);
        enc_fc.b.assign(m.enc_fc.b.size(), 0.0);
        enc_mean.w.assign(m.enc_mean.w.size(), 0.0);
        enc_mean.b.assign(m.enc_mean.b.size(), 0.0);
        enc_logvar.w.assign(m.enc_logvar.w.size(), 0.0);
        enc_logvar.b.assign(m.enc_logvar.b.size(), 0.0);
        dec_fc1.w.assign(m.dec_fc1.w.size(), 0.0);
        dec_fc1.b.assign(m.dec_fc1.b.size(), 0.0);
        dec_fc2.w.assign(m.dec_fc2.w.size(), 0.0);
        dec_fc2.b.assign(m.dec_fc2.b.size(), 0.0);
        dec_convt1.w.assign(m.dec_convt1.w.size(), 0.0);
        dec_convt1.b.assign(m.dec_convt1.b.size(), 0.0);
        dec_convt2.w.assign(m.dec_convt2.w.size(), 0.0);
        dec_convt2.b.assign(m.dec_convt2.b.size(), 0.0);
    }

    std::vector<std::span<const double>> spans() const {
        return {std::span<const double>(enc_conv.w),   std::span<const double>(enc_conv.b),
                std::span<const double>(enc_fc.w),     std::span<const double>(enc_fc.b),
                std::span<const double>(enc_mean.w),   std::span<const double>(enc_mean.b),
                std::span<const double>(enc_logvar.w), std::span<const double>(enc_logvar.b),
                std::span<const double>(dec_fc1.w),    std::span<const double>(dec_fc1.b),
                std::span<const double>(dec_fc2.w),    std::span<const double>(dec_fc2.b),
                std::span<const double>(dec_convt1.w), std::span<const double>(dec_convt1.b),
                std::span<const double>(dec_convt2.w), std::span<const double>(dec_convt2.b)};
    }

    void scale(double s) {
        for (auto* v : {&enc_conv.w, &enc_conv.b, &enc_fc.w, &enc_fc.b, &enc_mean.w,
                        &enc_mean.b, &enc_logvar.w, &enc_logvar.b, &dec_fc1.w, &dec_fc1.b,
                        &dec_fc2.w, &dec_fc2.b, &dec_convt1.w, &dec_convt1.b, &dec_convt2.w,
                        &dec_convt2.b})
            for (auto& x : *v) x *= s;
    }
};

// Per-sample stochastic draws; fixing these makes the loss a deterministic,
// finite-difference-checkable function of the parameters.
struct SampleDraws {
    std::vector<double> eps;           // latent_dim standard normals
    std::vector<double> dropout_mask;  // flat_length entries of 0 or 1/(1-rate)
};

inline SampleDraws make_draws(const VaeModel& model, Rng& rng) {
    SampleDraws d;
    d.eps = rng.normal_vector(model.cfg.latent_dim);
    d.dropout_mask = nn::dropout_mask(model.cfg.flat_length(), model.cfg.dropout, rng);
    return d;
}

struct LossParts {
    double recon = 0.0;
    double kl = 0.0;
    double total = 0.0;
};

// Denoising objective for one pair: encode the noisy signal, decode the
// sampled latent, score the reconstruction against the clean target.
//   loss = sum_t (x_hat - clean)^2 + beta * (log q(z) - log p_prior(z))
// Per-signal terms are summed over time and averaged over the batch by the
// caller. When `grads` is non-null the exact parameter gradient of this
// expression (at the fixed draws) accumulates into it.
inline LossParts loss_and_grad(const VaeModel& model, std::span<const double> noisy,
                               std::span<const double> clean, double beta,
                               const SampleDraws& draws, ModelGrads* grads) {
    const auto& cfg = model.cfg;
    require_config(noisy.size() == cfg.input_len && clean.size() == cfg.input_len,
                   "training pair length mismatch");

    // ---- forward, keeping every pre-activation the backward pass needs ----
    nn::Mat input(1, cfg.input_len);
    for (std::size_t i = 0; i < noisy.size(); ++i) input.v[i] = cfg.input_gain * noisy[i];
    nn::Mat conv_pre = model.enc_conv.forward(input);
    nn::Mat conv_act = conv_pre;
    nn::relu_inplace(conv_act.v);
    std::vector<std::size_t> argmax;
    nn::Mat pooled = model.enc_pool.forward(conv_act, argmax);
    std::vector<double> dropped = pooled.v;
    for (std::size_t i = 0; i < dropped.size(); ++i) dropped[i] *= draws.dropout_mask[i];
    std::vector<double> fc_pre = model.enc_fc.forward(dropped);
    std::vector<double> fc_act = fc_pre;
    nn::relu_inplace(fc_act);
    std::vector<double> z_mean = model.enc_mean.forward(fc_act);
    std::vector<double> logvar_pre = model.enc_logvar.forward(fc_act);
    std::vector<double> z_log_var = logvar_pre;
    for (auto& v : z_log_var) v = model.clamp_logvar(v);
    std::vector<double> z = reparameterize(z_mean, z_log_var, draws.eps);

    std::vector<double> d1_pre = model.dec_fc1.forward(z);
    std::vector<double> d1_act = d1_pre;
    nn::relu_inplace(d1_act);
    std::vector<double> d2_pre = model.dec_fc2.forward(d1_act);
    std::vector<double> d2_act = d2_pre;
    nn::relu_inplace(d2_act);
    nn::Mat grid(cfg.conv_channels, cfg.pool_length());
    grid.v = d2_act;
    nn::Mat t1_pre = model.dec_convt1.forward(grid);
    nn::Mat t1_act = t1_pre;
    nn::relu_inplace(t1_act.v);
    nn::Mat xhat = model.dec_convt2.forward(t1_act);

    LossParts parts;
    for (std::size_t t = 0; t < cfg.input_len; ++t) {
        const double e = xhat.v[t] - clean[t];
        parts.recon += e * e;
    }
    parts.kl = kl_term({z_mean, z_log_var, z}, model.prior);
    parts.total = parts.recon + beta * parts.kl;
    require_numeric(std::isfinite(parts.total), "non-finite training loss");
    if (!grads) return parts;

    // ---- backward ----
    nn::Mat g_xhat(1, cfg.input_len);
    for (std::size_t t = 0; t < cfg.input_len; ++t)
        g_xhat.v[t] = 2.0 * (xhat.v[t] - clean[t]);
    nn::Mat g_t1 = model.dec_convt2.backward(t1_act, g_xhat, grads->dec_convt2);
    nn::relu_backward_inplace(t1_pre.v, g_t1.v);
    nn::Mat g_grid = model.dec_convt1.backward(grid, g_t1, grads->dec_convt1);
    std::vector<double> g_d2 = std::move(g_grid.v);
    nn::relu_backward_inplace(d2_pre, g_d2);
    std::vector<double> g_d1 = model.dec_fc2.backward(d1_act, g_d2, grads->dec_fc2);
    nn::relu_backward_inplace(d1_pre, g_d1);
    std::vector<double> g_z = model.dec_fc1.backward(z, g_d1, grads->dec_fc1);

    // KL contribution through z: d(-log p)/dz = -score(z). The log q term's
    // pathwise and direct z dependencies cancel, leaving -1/2 per log-variance.
    for (std::size_t d = 0; d < cfg.latent_dim; ++d)
        g_z[d] += beta * (-mixture::grad_log_density_analytic(model.prior, z[d]));

    std::vector<double> g_mean = g_z;  // dz/dmean = 1
    std::vector<double> g_logvar(cfg.latent_dim);
    for (std::size_t d = 0; d < cfg.latent_dim; ++d) {
        g_logvar[d] = g_z[d] * 0.5 * std::exp(0.5 * z_log_var[d]) * draws.eps[d] - beta * 0.5;
        // Clamp is flat outside its range.
        if (logvar_pre[d] < -cfg.zlogvar_clamp || logvar_pre[d] > cfg.zlogvar_clamp)
            g_logvar[d] = 0.0;
    }

    std::vector<double> g_fc_act = model.enc_mean.backward(fc_act, g_mean, grads->enc_mean);
    std::vector<double> g_fc_act2 =
        model.enc_logvar.backward(fc_act, g_logvar, grads->enc_logvar);
    for (std::size_t i = 0; i < g_fc_act.size(); ++i) g_fc_act[i] += g_fc_act2[i];
    nn::relu_backward_inplace(fc_pre, g_fc_act);
    std::vector<double> g_dropped = model.enc_fc.backward(dropped, g_fc_act, grads->enc_fc);
    for (std::size_t i = 0; i < g_dropped.size(); ++i) g_dropped[i] *= draws.dropout_mask[i];
    nn::Mat g_pooled(pooled.channels, pooled.length);
    g_pooled.v = std::move(g_dropped);
    nn::Mat g_conv_act =
        model.enc_pool.backward(conv_act.channels, conv_act.length, argmax, g_pooled);
    nn::relu_backward_inplace(conv_pre.v, g_conv_act.v);
    model.enc_conv.backward(input, g_conv_act, grads->enc_conv);
    return parts;
}

struct TrainConfig {
    std::size_t epochs = 64;
    std::size_t batch_size = 32;
    nn::OptimizerConfig optimizer;
    BetaSchedule beta;
    double val_fraction = 0.1;
    std::uint64_t seed = 0;

    void validate() const {
        require_config(epochs >= 1, "[train] epochs must be >= 1");
        require_config(batch_size >= 1, "[train] batch_size must be >= 1");
        require_config(val_fraction >= 0.0 && val_fraction < 1.0,
                       "[train] val_fraction must be in [0, 1)");
        optimizer.validate();
        beta.validate();
    }
};

struct EpochStats {
    double recon = 0.0;
    double kl = 0.0;
    double beta = 0.0;
    double total = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
};

inline std::size_t val_fraction_count(std::size_t n, double fraction) {
    auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
    if (count >= n) count = n - 1;
    return count;
}

// Mini-batch SGD over shuffled clean/noisy pairs. All randomness (row split,
// shuffles, eps, dropout) derives from cfg.seed, so a rerun is bit-identical.
inline TrainReport train(VaeModel& model, const std::vector<std::vector<double>>& noisy,
                         const std::vector<std::vector<double>>& clean,
                         const TrainConfig& cfg) {
    cfg.validate();
    require_config(!noisy.empty() && noisy.size() == clean.size(),
                   "training set must be non-empty with paired rows");
    for (std::size_t i = 0; i < noisy.size(); ++i)
        require_config(noisy[i].size() == model.cfg.input_len &&
                           clean[i].size() == model.cfg.input_len,
                       "training rows must match the model input length");

    std::vector<std::size_t> rows(noisy.size());
    std::iota(rows.begin(), rows.end(), 0);
    Rng split_rng(derive_seed(cfg.seed, streams::split));
    split_rng.shuffle(rows);
    const auto val_count = static_cast<std::size_t>(
        val_fraction_count(noisy.size(), cfg.val_fraction));
    std::vector<std::size_t> train_rows(rows.begin(),
                                        rows.end() - static_cast<std::ptrdiff_t>(val_count));
    require_config(!train_rows.empty(), "validation split leaves no training rows");

    TrainReport report;
    ModelGrads grads;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double beta = beta_at(epoch, cfg.beta);
        Rng epoch_rng(derive_seed(cfg.seed, streams::train, epoch));
        epoch_rng.shuffle(train_rows);
        EpochStats stats;
        stats.beta = beta;
        for (std::size_t start = 0; start < train_rows.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(train_rows.size(), start + cfg.batch_size);
            grads.resize_like(model);
            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t r = train_rows[b];
                const SampleDraws draws = make_draws(model, epoch_rng);
                const LossParts parts =
                    loss_and_grad(model, noisy[r], clean[r], beta, draws, &grads);
                stats.recon += parts.recon;
                stats.kl += parts.kl;
                stats.total += parts.total;
            }
            grads.scale(1.0 / static_cast<double>(stop - start));
            auto params = model.param_spans();
            auto gspans = grads.spans();
            nn::sgd_step(params, gspans, cfg.optimizer);
        }
        const double inv = 1.0 / static_cast<double>(train_rows.size());
        stats.recon *= inv;
        stats.kl *= inv;
        stats.total *= inv;
        report.epochs.push_back(stats);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Parameter persistence through the LSNN tensor file.

inline std::vector<nn::NamedTensor> to_tensors(const VaeModel& m) {
    const auto& c = m.cfg;
    std::vector<nn::NamedTensor> out;
    out.push_back({"arch",
                   {10},
                   {static_cast<double>(c.input_len), static_cast<double>(c.latent_dim),
                    static_cast<double>(c.conv_channels), static_cast<double>(c.conv_kernel),
                    static_cast<double>(c.pool), static_cast<double>(c.hidden), c.dropout,
                    c.zlogvar_clamp, c.input_gain, static_cast<double>(m.seed)}});
    out.push_back({"enc.conv.w", {c.conv_channels, 1, c.conv_kernel}, m.enc_conv.w});
    out.push_back({"enc.conv.b", {c.conv_channels}, m.enc_conv.b});
    out.push_back({"enc.fc.w", {c.hidden, c.flat_length()}, m.enc_fc.w});
    out.push_back({"enc.fc.b", {c.hidden}, m.enc_fc.b});
    out.push_back({"enc.mean.w", {c.latent_dim, c.hidden}, m.enc_mean.w});
    out.push_back({"enc.mean.b", {c.latent_dim}, m.enc_mean.b});
    out.push_back({"enc.logvar.w", {c.latent_dim, c.hidden}, m.enc_logvar.w});
    out.push_back({"enc.logvar.b", {c.latent_dim}, m.enc_logvar.b});
    out.push_back({"dec.fc1.w", {c.hidden, c.latent_dim}, m.dec_fc1.w});
    out.push_back({"dec.fc1.b", {c.hidden}, m.dec_fc1.b});
    out.push_back({"dec.fc2.w", {c.flat_length(), c.hidden}, m.dec_fc2.w});
    out.push_back({"dec.fc2.b", {c.flat_length()}, m.dec_fc2.b});
    out.push_back({"dec.convt1.w", {c.conv_channels, c.decoder_channels(), c.pool},
                   m.dec_convt1.w});
    out.push_back({"dec.convt1.b", {c.decoder_channels()}, m.dec_convt1.b});
    out.push_back({"dec.convt2.w", {c.decoder_channels(), 1, c.decoder_kernel2()},
                   m.dec_convt2.w});
    out.push_back({"dec.convt2.b", {1}, m.dec_convt2.b});
    out.push_back({"prior.weights", {m.prior.weights.size()}, m.prior.weights});
    out.push_back({"prior.means", {m.prior.means.size()}, m.prior.means});
    out.push_back({"prior.variances", {m.prior.variances.size()}, m.prior.variances});
    return out;
}

inline VaeModel from_tensors(const std::vector<nn::NamedTensor>& tensors) {
    std::map<std::string, const nn::NamedTensor*> by_name;
    for (const auto& t : tensors) by_name[t.name] = &t;
    auto need = [&](const std::string& name) -> const nn::NamedTensor& {
        auto it = by_name.find(name);
        require_config(it != by_name.end(), "parameter file is missing tensor " + name);
        return *it->second;
    };
    const auto& arch = need("arch");
    require_config(arch.data.size() == 10, "parameter file has a malformed arch tensor");
    ModelConfig cfg;
    cfg.input_len = static_cast<std::size_t>(arch.data[0]);
    cfg.latent_dim = static_cast<std::size_t>(arch.data[1]);
    cfg.conv_channels = static_cast<std::size_t>(arch.data[2]);
    cfg.conv_kernel = static_cast<std::size_t>(arch.data[3]);
    cfg.pool = static_cast<std::size_t>(arch.data[4]);
    cfg.hidden = static_cast<std::size_t>(arch.data[5]);
    cfg.dropout = arch.data[6];
    cfg.zlogvar_clamp = arch.data[7];
    cfg.input_gain = arch.data[8];
    VaeModel m = VaeModel::init(cfg, static_cast<std::uint64_t>(arch.data[9]));
    auto load = [&](const std::string& name, std::vector<double>& dst) {
        const auto& t = need(name);
        require_config(t.data.size() == dst.size(), "tensor shape mismatch for " + name);
        dst = t.data;
    };
    load("enc.conv.w", m.enc_conv.w);
    load("enc.conv.b", m.enc_conv.b);
    load("enc.fc.w", m.enc_fc.w);
    load("enc.fc.b", m.enc_fc.b);
    load("enc.mean.w", m.enc_mean.w);
    load("enc.mean.b", m.enc_mean.b);
    load("enc.logvar.w", m.enc_logvar.w);
    load("enc.logvar.b", m.enc_logvar.b);
    load("dec.fc1.w", m.dec_fc1.w);
    load("dec.fc1.b", m.dec_fc1.b);
    load("dec.fc2.w", m.dec_fc2.w);
    load("dec.fc2.b", m.dec_fc2.b);
    load("dec.convt1.w", m.dec_convt1.w);
    load("dec.convt1.b", m.dec_convt1.b);
    load("dec.convt2.w", m.dec_convt2.w);
    load("dec.convt2.b", m.dec_convt2.b);
    const auto& pw = need("prior.weights");
    const auto& pm = need("prior.means");
    const auto& pv = need("prior.variances");
    m.prior = mixture::MixtureModel{pw.data, pm.data, pv.data};
    m.prior.validate();
    return m;
}

}  // namespace latentscope::vae
