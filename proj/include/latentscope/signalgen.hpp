#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "latentscope/common.hpp"
#include "latentscope/fft.hpp"
#include "latentscope/rng.hpp"

namespace latentscope::signalgen {

// GM_sun / c^3 in seconds; converts solar masses to geometric time units.
inline constexpr double kSolarMassSeconds = 4.925490947e-6;

struct ChirpParams {
    double m1 = 30.0;        // solar masses, m1 >= m2
    double m2 = 30.0;        // solar masses
    double f_min = 35.0;     // Hz, starting gravitational-wave frequency
    double sample_rate = 1024.0;
    double amplitude = 1.0;  // envelope scale at f_min

    void validate() const {
        require_config(m2 > 0.0 && m1 >= m2, "chirp masses must satisfy m1 >= m2 > 0");
        require_config(f_min > 0.0, "f_min must be > 0");
        require_config(sample_rate > 0.0, "sample_rate must be > 0");
        require_config(f_min < sample_rate / 2.0,
                       "f_min must be below the Nyquist frequency sample_rate/2");
        require_config(amplitude > 0.0, "amplitude must be > 0");
    }
};

struct SignalMeta {
    double m1 = 0.0;
    double m2 = 0.0;
    std::string detector;
};

struct Signal {
    std::vector<double> samples;
    double sample_rate = 0.0;
    SignalMeta meta;
};

struct DetectorProfile {
    std::string id;       // H1 / L1 / V1
    double gain = 1.0;    // > 0
    std::size_t delay = 0;  // whole samples, < signal length

    void validate() const {
        require_config(!id.empty(), "detector id must not be empty");
        require_config(gain > 0.0, "detector gain must be > 0");
    }
};

struct NoiseSpec {
    double psd_slope = -1.0;  // power-law exponent below the knee
    double psd_scale = 0.0;   // strain^2/Hz plateau above the knee
    double f_knee = 64.0;     // Hz
    std::uint64_t seed = 0;

    void validate() const {
        require_config(psd_scale >= 0.0, "psd_scale must be >= 0");
        require_config(f_knee > 0.0, "f_knee must be > 0");
    }
};

inline double chirp_mass(double m1, double m2) {
    return std::pow(m1 * m2, 0.6) / std::pow(m1 + m2, 0.2);
}

// Newtonian time to coalescence from gravitational-wave frequency f.
inline double time_to_coalescence(double mc_solar, double f) {
    const double mc = mc_solar * kSolarMassSeconds;
    return (5.0 / 256.0) * std::pow(mc, -5.0 / 3.0) *
           std::pow(std::numbers::pi * f, -8.0 / 3.0);
}

// Quadrupole chirp h(t) = A(t) cos(phi(t)) starting at f_min and sweeping up
// under the Newtonian phase law. Generation stops at `duration`, at
// coalescence, or when the instantaneous frequency reaches Nyquist,
// whichever comes first.
inline Signal make_chirp(const ChirpParams& params, double duration) {
    params.validate();
    require_config(duration > 0.0, "chirp duration must be > 0");

    const double mc = chirp_mass(params.m1, params.m2) * kSolarMassSeconds;
    const double t_coal = time_to_coalescence(chirp_mass(params.m1, params.m2), params.f_min);
    const double dt = 1.0 / params.sample_rate;
    require_config(t_coal >= dt,
                   "coalescence time shorter than one sample; raise sample_rate or lower f_min");

    const double nyquist = params.sample_rate / 2.0;
    const double phase_at_coalescence = 2.0 * std::pow(t_coal / (5.0 * mc), 5.0 / 8.0);
    const auto max_samples = static_cast<std::size_t>(duration * params.sample_rate);

    Signal out;
    out.sample_rate = params.sample_rate;
    out.meta = {params.m1, params.m2, ""};
    out.samples.reserve(max_samples);
    for (std::size_t k = 0; k < max_samples; ++k) {
        const double t = static_cast<double>(k) * dt;
        const double tau = t_coal - t;
        if (tau <= 0.0) break;
        const double freq = std::pow(5.0 / (256.0 * tau), 3.0 / 8.0) *
                            std::pow(mc, -5.0 / 8.0) / std::numbers::pi;
        if (freq >= nyquist) break;
        const double phase =
            phase_at_coalescence - 2.0 * std::pow(tau / (5.0 * mc), 5.0 / 8.0);
        const double envelope = params.amplitude * std::pow(freq / params.f_min, 2.0 / 3.0);
        out.samples.push_back(envelope * std::cos(phase));
    }
    require_config(!out.samples.empty(), "chirp truncated before the first sample");
    for (double v : out.samples)
        require_numeric(std::isfinite(v), "non-finite chirp sample; check mass parameters");
    return out;
}

// Gain-scaled, delay-shifted copy; the head is zero-filled and the tail
// truncated so the length is preserved.
inline Signal project_detector(const Signal& signal, const DetectorProfile& profile) {
    profile.validate();
    require_config(profile.delay < signal.samples.size(),
                   "detector delay must be smaller than the signal length");
    Signal out = signal;
    out.meta.detector = profile.id;
    const std::size_t n = signal.samples.size();
    for (std::size_t i = n; i-- > 0;) {
        out.samples[i] =
            i >= profile.delay ? profile.gain * signal.samples[i - profile.delay] : 0.0;
    }
    return out;
}

// Appends zeros; the leading samples (and therefore the initial timing) are
// untouched.
inline Signal zero_pad(const Signal& signal, std::size_t target_len) {
    require_config(target_len >= signal.samples.size(),
                   "zero_pad target length is shorter than the signal");
    Signal out = signal;
    out.samples.resize(target_len, 0.0);
    return out;
}

// One-sided PSD of the noise model: flat at psd_scale above f_knee, power law
// (f/f_knee)^psd_slope below it.
inline double noise_psd(const NoiseSpec& spec, double f) {
    if (f >= spec.f_knee) return spec.psd_scale;
    return spec.psd_scale * std::pow(f / spec.f_knee, spec.psd_slope);
}

// Stationary Gaussian noise with the spec's PSD, by Hermitian frequency-domain
// synthesis over the next power-of-two length. Bin amplitudes are scaled so the
// time-domain variance equals the integral of the one-sided PSD up to Nyquist.
// The DC bin is zeroed, making the noise exactly zero-mean over the block.
inline std::vector<double> colored_noise(std::size_t n, double sample_rate,
                                         const NoiseSpec& spec) {
    spec.validate();
    require_config(n >= 1, "noise length must be >= 1");
    if (spec.psd_scale == 0.0) return std::vector<double>(n, 0.0);

    const std::size_t nfft = next_pow2(std::max<std::size_t>(n, 2));
    std::vector<std::complex<double>> spectrum(nfft, {0.0, 0.0});
    Rng rng(spec.seed);
    const double df = sample_rate / static_cast<double>(nfft);
    for (std::size_t j = 1; j <= nfft / 2; ++j) {
        const double f = static_cast<double>(j) * df;
        const double amp =
            std::sqrt(noise_psd(spec, f) * sample_rate * static_cast<double>(nfft) / 2.0);
        if (j == nfft / 2) {
            spectrum[j] = {amp * rng.normal(), 0.0};
        } else {
            const double a = rng.normal();
            const double b = rng.normal();
            spectrum[j] = {amp * a / std::numbers::sqrt2, amp * b / std::numbers::sqrt2};
            spectrum[nfft - j] = std::conj(spectrum[j]);
        }
    }
    fft(spectrum, true);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = spectrum[i].real();
    return out;
}

// signal + colored Gaussian noise; deterministic for a fixed spec.seed.
inline Signal add_noise(const Signal& signal, const NoiseSpec& spec) {
    const auto noise = colored_noise(signal.samples.size(), signal.sample_rate, spec);
    Signal out = signal;
    for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] += noise[i];
    return out;
}

struct MassGrid {
    double m_min = 25.0;
    double m_max = 33.0;
    double step = 0.5;

    std::vector<double> values() const {
        require_config(step > 0.0, "[data] mass_step must be > 0");
        require_config(m_min > 0.0, "[data] m_min must be > 0");
        require_config(m_max >= m_min,
                       "[data] m_min..m_max is an empty mass range (m_max < m_min)");
        std::vector<double> out;
        for (double m = m_min; m <= m_max + 1e-9; m += step) out.push_back(m);
        return out;
    }
};

struct RowMeta {
    std::size_t row = 0;
    double m1 = 0.0;
    double m2 = 0.0;
    std::string detector;
};

struct Dataset {
    std::vector<std::vector<double>> noisy;   // [n_signals][target_len]
    std::vector<std::vector<double>> clean;
    std::vector<RowMeta> meta;
    double sample_rate = 0.0;
};

// One clean/noisy pair per (m1 >= m2, detector). Every row derives its noise
// stream from (seed, row index), so parallel generation matches serial output.
inline Dataset build_dataset(const MassGrid& grid,
                             const std::vector<DetectorProfile>& detectors,
                             const ChirpParams& base, double duration,
                             const NoiseSpec& noise, std::size_t target_len,
                             std::uint64_t seed) {
    const auto masses = grid.values();
    require_config(!masses.empty(), "[data] mass grid is empty");
    require_config(!detectors.empty(), "[data] detectors must not be empty");
    for (const auto& d : detectors) d.validate();

    struct RowSpec {
        double m1, m2;
        std::size_t det;
    };
    std::vector<RowSpec> rows;
    for (std::size_t i = 0; i < masses.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j)
            for (std::size_t d = 0; d < detectors.size(); ++d)
                rows.push_back({masses[i], masses[j], d});

    Dataset out;
    out.sample_rate = base.sample_rate;
    out.noisy.resize(rows.size());
    out.clean.resize(rows.size());
    out.meta.resize(rows.size());
    parallel_for(rows.size(), [&](std::size_t r) {
        ChirpParams p = base;
        p.m1 = rows[r].m1;
        p.m2 = rows[r].m2;
        Signal clean = zero_pad(project_detector(make_chirp(p, duration), detectors[rows[r].det]),
                                target_len);
        NoiseSpec row_noise = noise;
        row_noise.seed = derive_seed(seed, streams::noise, r);
        Signal noisy = add_noise(clean, row_noise);
        out.meta[r] = {r, p.m1, p.m2, detectors[rows[r].det].id};
        out.clean[r] = std::move(clean.samples);
        out.noisy[r] = std::move(noisy.samples);
    });
    return out;
}

}  // namespace latentscope::signalgen
