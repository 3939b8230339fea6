#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "latentscope/common.hpp"
#include "latentscope/rng.hpp"

namespace latentscope::mixture {

inline constexpr double kLogTwoPi = 1.8378770664093453;
inline constexpr double kVarianceFloor = 1e-12;
inline constexpr double kPruneWeight = 1e-3;

struct MixtureModel {
    std::vector<double> weights;    // simplex, length K <= 10
    std::vector<double> means;
    std::vector<double> variances;  // all > 0

    std::size_t size() const { return weights.size(); }

    void validate() const {
        require_config(!weights.empty() && weights.size() == means.size() &&
                           weights.size() == variances.size(),
                       "mixture component vectors must be non-empty and equal length");
        require_config(weights.size() <= 10, "mixture capped at 10 components");
        double sum = 0.0;
        for (double w : weights) {
            require_config(w > 0.0, "mixture weights must be positive");
            sum += w;
        }
        require_config(std::abs(sum - 1.0) <= 1e-12, "mixture weights must sum to 1");
        for (double v : variances)
            require_config(v > 0.0, "mixture variances must be positive");
    }
};

struct FitConfig {
    std::size_t max_components = 10;
    // Fraction of the sample count subtracted from each component's
    // responsibility mass in the weight update; components driven to zero are
    // annihilated. Must lie in (0, 1).
    double concentration = 0.01;
    std::size_t max_iters = 500;
    double tol = 1e-10;
    std::uint64_t seed = 0;

    void validate() const {
        require_config(max_components >= 1 && max_components <= 10,
                       "[prior] max_components must be in 1..10");
        require_config(concentration > 0.0 && concentration < 1.0,
                       "[prior] concentration must be in (0, 1)");
        require_config(max_iters >= 1, "[prior] max_iters must be >= 1");
        require_config(tol > 0.0, "[prior] tol must be > 0");
    }
};

struct FitTrace {
    std::vector<double> objective;        // penalized log-likelihood per sweep
    std::vector<std::size_t> components;  // live component count per sweep
};

inline double gaussian_logpdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (kLogTwoPi + std::log(var) + d * d / var);
}

inline double log_density(const MixtureModel& model, double x) {
    double best = -std::numeric_limits<double>::infinity();
    const std::size_t k = model.size();
    require_config(k >= 1 && k <= 10, "mixture component count out of range");
    double terms[10];
    for (std::size_t j = 0; j < k; ++j) {
        terms[j] = std::log(model.weights[j]) +
                   gaussian_logpdf(x, model.means[j], model.variances[j]);
        best = std::max(best, terms[j]);
    }
    if (!std::isfinite(best)) return best;
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += std::exp(terms[j] - best);
    return best + std::log(acc);
}

// Central difference of the log-density; this is the gradient the sampler
// uses by default.
inline double grad_log_density_fd(const MixtureModel& model, double x, double h) {
    require_config(h > 0.0, "finite-difference step must be > 0");
    return (log_density(model, x + h) - log_density(model, x - h)) / (2.0 * h);
}

// Exact mixture score via responsibilities.
inline double grad_log_density_analytic(const MixtureModel& model, double x) {
    const std::size_t k = model.size();
    require_config(k >= 1 && k <= 10, "mixture component count out of range");
    double terms[10];
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
        terms[j] = std::log(model.weights[j]) +
                   gaussian_logpdf(x, model.means[j], model.variances[j]);
        best = std::max(best, terms[j]);
    }
    double norm = 0.0;
    for (std::size_t j = 0; j < k; ++j) norm += std::exp(terms[j] - best);
    double score = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        const double r = std::exp(terms[j] - best) / norm;
        score += r * (model.means[j] - x) / model.variances[j];
    }
    return score;
}

// Ancestral sampling: categorical component, then the component's Gaussian.
inline std::vector<double> sample(const MixtureModel& model, std::size_t n,
                                  std::uint64_t seed) {
    model.validate();
    require_config(n >= 1, "sample count must be >= 1");
    Rng rng(seed);
    std::vector<double> out(n);
    for (auto& x : out) {
        const double u = rng.uniform();
        double cum = 0.0;
        std::size_t pick = model.size() - 1;
        for (std::size_t k = 0; k < model.size(); ++k) {
            cum += model.weights[k];
            if (u < cum) {
                pick = k;
                break;
            }
        }
        x = model.means[pick] + std::sqrt(model.variances[pick]) * rng.normal();
    }
    return out;
}

struct Histogram {
    std::vector<double> edges;    // n_bins + 1
    std::vector<double> heights;  // integrate to 1
};

inline Histogram histogram_pdf(std::span<const double> samples, std::size_t n_bins) {
    require_config(n_bins >= 1, "histogram needs at least one bin");
    require_config(!samples.empty(), "histogram needs samples");
    double lo = samples[0], hi = samples[0];
    for (double x : samples) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    Histogram h;
    h.edges.resize(n_bins + 1);
    const double width = (hi - lo) / static_cast<double>(n_bins);
    for (std::size_t i = 0; i <= n_bins; ++i)
        h.edges[i] = lo + width * static_cast<double>(i);
    std::vector<std::size_t> counts(n_bins, 0);
    for (double x : samples) {
        auto bin = static_cast<std::size_t>((x - lo) / width);
        if (bin >= n_bins) bin = n_bins - 1;
        ++counts[bin];
    }
    h.heights.resize(n_bins);
    const double norm = 1.0 / (static_cast<double>(samples.size()) * width);
    for (std::size_t i = 0; i < n_bins; ++i)
        h.heights[i] = static_cast<double>(counts[i]) * norm;
    return h;
}

namespace detail {

// k-means++-style seeding: first mean uniform, the rest by squared-distance
// weighted draws.
inline std::vector<double> seed_means(std::span<const double> xs, std::size_t k, Rng& rng) {
    std::vector<double> means;
    means.reserve(k);
    means.push_back(xs[rng.uniform_index(xs.size())]);
    std::vector<double> d2(xs.size());
    while (means.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (double m : means) best = std::min(best, (xs[i] - m) * (xs[i] - m));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            means.push_back(xs[rng.uniform_index(xs.size())]);
            continue;
        }
        double u = rng.uniform() * total;
        std::size_t pick = xs.size() - 1;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            u -= d2[i];
            if (u <= 0.0) {
                pick = i;
                break;
            }
        }
        means.push_back(xs[pick]);
    }
    return means;
}

}  // namespace detail

// EM with a sparsity prior on the weights: each component's responsibility
// mass is discounted by concentration*n in the weight update, components
// whose discounted mass reaches zero are removed on the spot, and surviving
// weights renormalize. Components are swept one at a time with fresh
// responsibilities, which lets redundant components collapse instead of
// lingering. The penalized log-likelihood is asserted non-decreasing between
// sweeps that keep the component set fixed; annihilation resets the baseline.
// Ends with a weight < 1e-3 prune and renormalization.
inline MixtureModel fit(std::span<const double> xs, const FitConfig& cfg,
                        FitTrace* trace = nullptr) {
    cfg.validate();
    const std::size_t n = xs.size();
    require_config(n >= 2 * cfg.max_components,
                   "mixture fit needs at least 2*max_components samples");

    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n);
    require_numeric(var >= kVarianceFloor,
                    "degenerate sample variance; cannot fit a mixture");

    Rng rng(cfg.seed);
    std::vector<double> means = detail::seed_means(xs, cfg.max_components, rng);
    std::vector<double> vars(cfg.max_components, var);
    std::vector<double> weights(cfg.max_components, 1.0 / static_cast<double>(cfg.max_components));
    const double kappa = cfg.concentration * static_cast<double>(n);

    std::vector<double> resp;  // [n][K] row-major
    std::vector<double> mass;
    double prev_objective = 0.0;
    bool have_prev = false;

    auto compute_resp = [&]() {
        const std::size_t k = weights.size();
        resp.resize(n * k);
        mass.assign(k, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < k; ++j) {
                const double t = std::log(weights[j]) + gaussian_logpdf(xs[i], means[j], vars[j]);
                resp[i * k + j] = t;
                best = std::max(best, t);
            }
            double norm = 0.0;
            for (std::size_t j = 0; j < k; ++j) norm += std::exp(resp[i * k + j] - best);
            for (std::size_t j = 0; j < k; ++j) {
                const double r = std::exp(resp[i * k + j] - best) / norm;
                resp[i * k + j] = r;
                mass[j] += r;
            }
        }
    };

    auto objective = [&]() {
        double ll = 0.0;
        MixtureModel m{weights, means, vars};
        for (double x : xs) ll += log_density(m, x);
        double pen = 0.0;
        for (double w : weights) pen += std::log(w);
        return ll - kappa * pen;
    };

    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        bool annihilated = false;
        std::size_t k_idx = 0;
        while (k_idx < weights.size()) {
            compute_resp();
            const std::size_t k = weights.size();
            if (mass[k_idx] - kappa <= 0.0 && k > 1) {
                weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(k_idx));
                means.erase(means.begin() + static_cast<std::ptrdiff_t>(k_idx));
                vars.erase(vars.begin() + static_cast<std::ptrdiff_t>(k_idx));
                double sum = 0.0;
                for (double w : weights) sum += w;
                for (double& w : weights) w /= sum;
                annihilated = true;
                continue;
            }
            double mu = 0.0;
            for (std::size_t i = 0; i < n; ++i) mu += resp[i * k + k_idx] * xs[i];
            mu /= mass[k_idx];
            double v = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                v += resp[i * k + k_idx] * (xs[i] - mu) * (xs[i] - mu);
            v /= mass[k_idx];
            means[k_idx] = mu;
            vars[k_idx] = std::max(v, kVarianceFloor);
            double total = 0.0;
            for (std::size_t j = 0; j < k; ++j) total += std::max(mass[j] - kappa, 0.0);
            if (total > 0.0) {
                for (std::size_t j = 0; j < k; ++j)
                    weights[j] = std::max(mass[j] - kappa, 0.0) / total;
            }
            ++k_idx;
        }
        // Weights zeroed by the shared renormalization above get removed
        // before the objective is evaluated.
        for (std::size_t j = weights.size(); j-- > 0;) {
            if (weights[j] <= 0.0 && weights.size() > 1) {
                weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(j));
                means.erase(means.begin() + static_cast<std::ptrdiff_t>(j));
                vars.erase(vars.begin() + static_cast<std::ptrdiff_t>(j));
                annihilated = true;
            }
        }
        if (annihilated) {
            double sum = 0.0;
            for (double w : weights) sum += w;
            for (double& w : weights) w /= sum;
        }

        const double obj = objective();
        if (trace) {
            trace->objective.push_back(obj);
            trace->components.push_back(weights.size());
        }
        if (annihilated) {
            have_prev = false;
            continue;
        }
        if (have_prev) {
            require_numeric(obj >= prev_objective - 1e-8 * (std::abs(prev_objective) + 1.0),
                            "penalized log-likelihood decreased during EM");
            if (std::abs(obj - prev_objective) < cfg.tol * (std::abs(obj) + 1.0)) break;
        }
        prev_objective = obj;
        have_prev = true;
    }

    // Final prune at the reporting threshold.
    MixtureModel model;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        if (weights[j] >= kPruneWeight) {
            model.weights.push_back(weights[j]);
            model.means.push_back(means[j]);
            model.variances.push_back(vars[j]);
        }
    }
    if (model.weights.empty()) {
        const auto dominant = static_cast<std::size_t>(
            std::max_element(weights.begin(), weights.end()) - weights.begin());
        model.weights.push_back(1.0);
        model.means.push_back(means[dominant]);
        model.variances.push_back(vars[dominant]);
    }
    double sum = 0.0;
    for (double w : model.weights) sum += w;
    for (double& w : model.weights) w /= sum;
    model.validate();
    return model;
}

}  // namespace latentscope::mixture
