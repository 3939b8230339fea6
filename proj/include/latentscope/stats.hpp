#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "latentscope/common.hpp"

namespace latentscope::stats {

struct KsResult {
    double statistic = 0.0;  // in [0, 1]
    double p_value = 1.0;    // in [0, 1]
    std::size_t n1 = 0;
    std::size_t n2 = 0;
};

// Survival function of the Kolmogorov distribution, Q(lambda) = P(K > lambda).
// Small and large arguments use the two classic theta-function expansions.
inline double kolmogorov_survival(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.18) {
        const double t = std::exp(-std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda));
        const double cdf = std::sqrt(2.0 * std::numbers::pi) / lambda *
                           (t + std::pow(t, 9.0) + std::pow(t, 25.0) + std::pow(t, 49.0));
        return std::clamp(1.0 - cdf, 0.0, 1.0);
    }
    double q = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        q += sign * term;
        sign = -sign;
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * q, 0.0, 1.0);
}

// Exact two-sample statistic via a merged sweep over the pooled sorted values;
// ties are consumed from both samples before the ECDF gap is evaluated. The
// p-value uses the asymptotic Kolmogorov distribution at effective size
// n1*n2/(n1+n2).
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    require_config(!a.empty() && !b.empty(), "ks_two_sample needs non-empty samples");
    std::vector<double> sa(a.begin(), a.end());
    std::vector<double> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const double n1 = static_cast<double>(sa.size());
    const double n2 = static_cast<double>(sb.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < sa.size() || j < sb.size()) {
        double v;
        if (i < sa.size() && j < sb.size())
            v = std::min(sa[i], sb[j]);
        else if (i < sa.size())
            v = sa[i];
        else
            v = sb[j];
        while (i < sa.size() && sa[i] == v) ++i;
        while (j < sb.size() && sb[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
    }
    KsResult r;
    r.statistic = d;
    r.n1 = sa.size();
    r.n2 = sb.size();
    const double n_eff = n1 * n2 / (n1 + n2);
    r.p_value = kolmogorov_survival(std::sqrt(n_eff) * d);
    return r;
}

struct CorrMatrix {
    std::vector<std::vector<double>> coeff;    // [D][D], symmetric, unit diagonal
    std::vector<std::size_t> degenerate_dims;  // zero-variance columns, reported as 0
};

// Pearson coefficients between the columns of Z ([n][D]). Zero-variance
// columns contribute 0 off-diagonal (flagged) rather than failing the report.
inline CorrMatrix pearson_matrix(const std::vector<std::vector<double>>& z) {
    require_config(z.size() >= 2, "pearson_matrix needs at least two rows");
    const std::size_t n = z.size();
    const std::size_t dims = z.front().size();
    for (const auto& row : z)
        require_config(row.size() == dims, "ragged matrix in pearson_matrix");

    std::vector<double> mean(dims, 0.0);
    for (const auto& row : z)
        for (std::size_t d = 0; d < dims; ++d) mean[d] += row[d];
    for (auto& m : mean) m /= static_cast<double>(n);
    std::vector<double> sd(dims, 0.0);
    for (const auto& row : z)
        for (std::size_t d = 0; d < dims; ++d) {
            const double c = row[d] - mean[d];
            sd[d] += c * c;
        }
    CorrMatrix out;
    for (std::size_t d = 0; d < dims; ++d) {
        sd[d] = std::sqrt(sd[d]);
        if (sd[d] == 0.0) out.degenerate_dims.push_back(d);
    }
    out.coeff.assign(dims, std::vector<double>(dims, 0.0));
    for (std::size_t a = 0; a < dims; ++a) {
        out.coeff[a][a] = 1.0;
        for (std::size_t b = a + 1; b < dims; ++b) {
            double r = 0.0;
            if (sd[a] > 0.0 && sd[b] > 0.0) {
                double cov = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    cov += (z[i][a] - mean[a]) * (z[i][b] - mean[b]);
                r = std::clamp(cov / (sd[a] * sd[b]), -1.0, 1.0);
            }
            out.coeff[a][b] = r;
            out.coeff[b][a] = r;
        }
    }
    return out;
}

// One KS test per latent dimension comparing encoder latents against HMC
// posterior samples, in dimension order.
inline std::vector<KsResult> ks_report(const std::vector<std::vector<double>>& z_noisy,
                                       const std::vector<std::vector<double>>& posterior) {
    require_config(!z_noisy.empty() && !posterior.empty(), "ks_report needs non-empty inputs");
    const std::size_t dims = z_noisy.front().size();
    require_config(posterior.front().size() == dims,
                   "ks_report dimension count mismatch between inputs");
    std::vector<KsResult> out(dims);
    parallel_for(dims, [&](std::size_t d) {
        std::vector<double> a(z_noisy.size());
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = z_noisy[i][d];
        std::vector<double> b(posterior.size());
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = posterior[i][d];
        out[d] = ks_two_sample(a, b);
    });
    return out;
}

}  // namespace latentscope::stats
