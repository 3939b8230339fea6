#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "latentscope/common.hpp"
#include "latentscope/mixture.hpp"
#include "latentscope/rng.hpp"

namespace latentscope::hmc {

struct HmcConfig {
    double step_size = 0.05;
    std::size_t n_leapfrog = 20;
    std::size_t n_samples = 1500;  // total budget, burn-in included
    std::size_t burn_in = 500;
    double fd_step = 1e-4;
    std::uint64_t seed = 0;
    bool analytic_grad = false;  // default follows the finite-difference score

    void validate() const {
        require_config(step_size > 0.0, "[hmc] step_size must be > 0");
        require_config(n_leapfrog >= 1, "[hmc] n_leapfrog must be >= 1");
        require_config(n_samples >= 1, "[hmc] n_samples must be >= 1");
        require_config(burn_in < n_samples, "[hmc] burn_in must be below n_samples");
        require_config(fd_step > 0.0, "[hmc] fd_step must be > 0");
    }
};

struct PhasePoint {
    double q = 0.0;
    double p = 0.0;
};

// Kick-drift-kick leapfrog for H(q, p) = -log pi(q) + p^2/2 (unit mass).
// `score` is d log pi / dq.
template <typename Score>
PhasePoint leapfrog(PhasePoint start, Score&& score, double step_size, std::size_t n_steps) {
    double q = start.q;
    double p = start.p + 0.5 * step_size * score(start.q);
    for (std::size_t l = 0; l < n_steps; ++l) {
        q += step_size * p;
        if (l + 1 < n_steps) p += step_size * score(q);
    }
    p += 0.5 * step_size * score(q);
    return {q, p};
}

struct StepResult {
    double q = 0.0;
    bool accepted = false;
};

// One Metropolis-adjusted trajectory: fresh momentum, leapfrog, accept with
// probability min(1, exp(-dH)). Non-finite trajectories count as rejections.
template <typename LogDensity, typename Score>
StepResult hmc_step(double q, LogDensity&& log_density, Score&& score,
                    const HmcConfig& cfg, Rng& rng) {
    const double p0 = rng.normal();
    const double h0 = -log_density(q) + 0.5 * p0 * p0;
    const PhasePoint end = leapfrog({q, p0}, score, cfg.step_size, cfg.n_leapfrog);
    const double u = rng.uniform_pos();
    if (!std::isfinite(end.q) || !std::isfinite(end.p)) return {q, false};
    const double h1 = -log_density(end.q) + 0.5 * end.p * end.p;
    if (!std::isfinite(h1)) return {q, false};
    if (std::log(u) < h0 - h1) return {end.q, true};
    return {q, false};
}

struct HmcChain {
    std::vector<double> positions;  // post burn-in, rejections repeat the previous value
    std::vector<bool> accepts;      // per post-burn-in proposal
    double acceptance_rate = 0.0;   // exactly accepted / proposed
    std::size_t n_proposals = 0;
    std::size_t dimension = 0;
};

inline std::function<double(double)> make_score(const mixture::MixtureModel& model,
                                                const HmcConfig& cfg) {
    if (cfg.analytic_grad)
        return [&model](double x) { return mixture::grad_log_density_analytic(model, x); };
    const double h = cfg.fd_step;
    return [&model, h](double x) { return mixture::grad_log_density_fd(model, x, h); };
}

// Runs a single chain on the mixture target. The first burn_in of the
// n_samples total steps are discarded.
inline HmcChain run_chain(double init, const mixture::MixtureModel& model,
                          const HmcConfig& cfg) {
    cfg.validate();
    require_config(std::isfinite(init), "chain init must be finite");
    const auto log_density = [&model](double x) { return mixture::log_density(model, x); };
    const auto score = make_score(model, cfg);
    Rng rng(cfg.seed);
    HmcChain chain;
    chain.positions.reserve(cfg.n_samples - cfg.burn_in);
    double q = init;
    std::size_t accepted = 0;
    for (std::size_t step = 0; step < cfg.n_samples; ++step) {
        const StepResult r = hmc_step(q, log_density, score, cfg, rng);
        q = r.q;
        if (step >= cfg.burn_in) {
            chain.positions.push_back(q);
            chain.accepts.push_back(r.accepted);
            if (r.accepted) ++accepted;
        }
    }
    chain.n_proposals = chain.accepts.size();
    chain.acceptance_rate =
        static_cast<double>(accepted) / static_cast<double>(chain.n_proposals);
    return chain;
}

struct DimensionSamples {
    std::vector<double> positions;  // all chains concatenated, post burn-in
    double acceptance_rate = 0.0;
    std::size_t n_proposals = 0;
    std::size_t dimension = 0;
};

// Independent univariate chains per latent dimension, one chain per init row,
// each with its own (seed, dimension, chain) stream. Dimensions and chains
// may run in parallel; outputs are identical to serial execution.
inline std::vector<DimensionSamples> run_all_dimensions(
    const std::vector<std::vector<double>>& z_init,
    const std::vector<mixture::MixtureModel>& models, const HmcConfig& cfg) {
    cfg.validate();
    require_config(!z_init.empty(), "run_all_dimensions needs at least one init row");
    const std::size_t dims = z_init.front().size();
    require_config(dims >= 1, "run_all_dimensions needs at least one dimension");
    for (const auto& row : z_init)
        require_config(row.size() == dims, "ragged init matrix");
    require_config(models.size() == dims,
                   "one mixture model per latent dimension is required");

    const std::size_t chains = z_init.size();
    const std::size_t kept = cfg.n_samples - cfg.burn_in;
    std::vector<DimensionSamples> out(dims);
    for (std::size_t d = 0; d < dims; ++d) {
        out[d].dimension = d;
        out[d].positions.resize(chains * kept);
    }
    std::vector<std::size_t> accepted(dims * chains, 0);
    parallel_for(dims * chains, [&](std::size_t idx) {
        const std::size_t d = idx / chains;
        const std::size_t c = idx % chains;
        HmcConfig chain_cfg = cfg;
        chain_cfg.seed = derive_seed(cfg.seed, streams::hmc, d, c);
        const HmcChain chain = run_chain(z_init[c][d], models[d], chain_cfg);
        std::copy(chain.positions.begin(), chain.positions.end(),
                  out[d].positions.begin() + static_cast<std::ptrdiff_t>(c * kept));
        std::size_t acc = 0;
        for (bool a : chain.accepts) acc += a ? 1 : 0;
        accepted[idx] = acc;
    });
    for (std::size_t d = 0; d < dims; ++d) {
        std::size_t acc = 0;
        for (std::size_t c = 0; c < chains; ++c) acc += accepted[d * chains + c];
        out[d].n_proposals = chains * kept;
        out[d].acceptance_rate =
            static_cast<double>(acc) / static_cast<double>(out[d].n_proposals);
    }
    return out;
}

}  // namespace latentscope::hmc
