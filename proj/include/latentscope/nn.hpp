#pragma once

#include <cmath>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "latentscope/common.hpp"
#include "latentscope/rng.hpp"

namespace latentscope::nn {

// Channels-by-length buffer for 1-D feature maps.
struct Mat {
    std::size_t channels = 0;
    std::size_t length = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(std::size_t ch, std::size_t len) : channels(ch), length(len), v(ch * len, 0.0) {}

    double& at(std::size_t c, std::size_t t) { return v[c * length + t]; }
    double at(std::size_t c, std::size_t t) const { return v[c * length + t]; }
};

inline void relu_inplace(std::vector<double>& v) {
    for (auto& x : v)
        if (x < 0.0) x = 0.0;
}

// grad is masked by the sign of the pre-activation.
inline void relu_backward_inplace(const std::vector<double>& pre, std::vector<double>& grad) {
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (pre[i] <= 0.0) grad[i] = 0.0;
}

// Valid cross-correlation, weights [out][in][kernel].
struct Conv1d {
    std::size_t in_channels = 1, out_channels = 1, kernel = 1, stride = 1;
    std::vector<double> w;
    std::vector<double> b;

    struct Grad {
        std::vector<double> w, b;
    };

    Conv1d() = default;
    Conv1d(std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t s = 1)
        : in_channels(in_ch), out_channels(out_ch), kernel(k), stride(s),
          w(in_ch * out_ch * k, 0.0), b(out_ch, 0.0) {
        require_config(k >= 1 && s >= 1, "conv kernel and stride must be >= 1");
    }

    double& wt(std::size_t o, std::size_t i, std::size_t k) {
        return w[(o * in_channels + i) * kernel + k];
    }
    double wt(std::size_t o, std::size_t i, std::size_t k) const {
        return w[(o * in_channels + i) * kernel + k];
    }

    std::size_t out_length(std::size_t in_len) const {
        require_config(kernel <= in_len, "conv kernel is longer than the input");
        return (in_len - kernel) / stride + 1;
    }

    Mat forward(const Mat& x) const {
        require_config(x.channels == in_channels, "conv input channel mismatch");
        Mat y(out_channels, out_length(x.length));
        for (std::size_t o = 0; o < out_channels; ++o) {
            for (std::size_t t = 0; t < y.length; ++t) {
                double acc = b[o];
                for (std::size_t i = 0; i < in_channels; ++i)
                    for (std::size_t k = 0; k < kernel; ++k)
                        acc += wt(o, i, k) * x.at(i, t * stride + k);
                y.at(o, t) = acc;
            }
        }
        return y;
    }

    Mat backward(const Mat& x, const Mat& grad_out, Grad& g) const {
        require_config(grad_out.channels == out_channels &&
                           grad_out.length == out_length(x.length),
                       "conv backward shape mismatch");
        if (g.w.empty()) g.w.assign(w.size(), 0.0);
        if (g.b.empty()) g.b.assign(b.size(), 0.0);
        Mat gx(x.channels, x.length);
        for (std::size_t o = 0; o < out_channels; ++o) {
            for (std::size_t t = 0; t < grad_out.length; ++t) {
                const double go = grad_out.at(o, t);
                g.b[o] += go;
                for (std::size_t i = 0; i < in_channels; ++i) {
                    for (std::size_t k = 0; k < kernel; ++k) {
                        g.w[(o * in_channels + i) * kernel + k] += go * x.at(i, t * stride + k);
                        gx.at(i, t * stride + k) += go * wt(o, i, k);
                    }
                }
            }
        }
        return gx;
    }
};

// Adjoint of Conv1d with weights [in][out][kernel]; sharing the flat weight
// buffer of a Conv1d whose in/out channel counts are swapped gives
// <conv(x), y> == <x, conv_transpose(y)> exactly (biases aside).
struct ConvTranspose1d {
    std::size_t in_channels = 1, out_channels = 1, kernel = 1, stride = 1;
    std::vector<double> w;
    std::vector<double> b;

    struct Grad {
        std::vector<double> w, b;
    };

    ConvTranspose1d() = default;
    ConvTranspose1d(std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t s = 1)
        : in_channels(in_ch), out_channels(out_ch), kernel(k), stride(s),
          w(in_ch * out_ch * k, 0.0), b(out_ch, 0.0) {
        require_config(k >= 1 && s >= 1, "conv_transpose kernel and stride must be >= 1");
    }

    double& wt(std::size_t i, std::size_t o, std::size_t k) {
        return w[(i * out_channels + o) * kernel + k];
    }
    double wt(std::size_t i, std::size_t o, std::size_t k) const {
        return w[(i * out_channels + o) * kernel + k];
    }

    std::size_t out_length(std::size_t in_len) const {
        require_config(in_len >= 1, "conv_transpose needs a non-empty input");
        return (in_len - 1) * stride + kernel;
    }

    Mat forward(const Mat& x) const {
        require_config(x.channels == in_channels, "conv_transpose input channel mismatch");
        Mat y(out_channels, out_length(x.length));
        for (std::size_t o = 0; o < out_channels; ++o)
            for (std::size_t j = 0; j < y.length; ++j) y.at(o, j) = b[o];
        for (std::size_t i = 0; i < in_channels; ++i) {
            for (std::size_t t = 0; t < x.length; ++t) {
                const double xv = x.at(i, t);
                for (std::size_t o = 0; o < out_channels; ++o)
                    for (std::size_t k = 0; k < kernel; ++k)
                        y.at(o, t * stride + k) += xv * wt(i, o, k);
            }
        }
        return y;
    }

    Mat backward(const Mat& x, const Mat& grad_out, Grad& g) const {
        require_config(grad_out.channels == out_channels &&
                           grad_out.length == out_length(x.length),
                       "conv_transpose backward shape mismatch");
        if (g.w.empty()) g.w.assign(w.size(), 0.0);
        if (g.b.empty()) g.b.assign(b.size(), 0.0);
        Mat gx(x.channels, x.length);
        for (std::size_t o = 0; o < out_channels; ++o)
            for (std::size_t j = 0; j < grad_out.length; ++j) g.b[o] += grad_out.at(o, j);
        for (std::size_t i = 0; i < in_channels; ++i) {
            for (std::size_t t = 0; t < x.length; ++t) {
                double acc = 0.0;
                for (std::size_t o = 0; o < out_channels; ++o) {
                    for (std::size_t k = 0; k < kernel; ++k) {
                        const double go = grad_out.at(o, t * stride + k);
                        g.w[(i * out_channels + o) * kernel + k] += x.at(i, t) * go;
                        acc += wt(i, o, k) * go;
                    }
                }
                gx.at(i, t) += acc;
            }
        }
        return gx;
    }
};

// Non-overlapping window maxima; ties resolve to the lowest index. Trailing
// samples that do not fill a window are dropped.
struct MaxPool1d {
    std::size_t window = 2;

    std::size_t out_length(std::size_t in_len) const {
        require_config(window >= 1, "pool window must be >= 1");
        require_config(window <= in_len, "pool window is longer than the input");
        return in_len / window;
    }

    Mat forward(const Mat& x, std::vector<std::size_t>& argmax) const {
        Mat y(x.channels, out_length(x.length));
        argmax.assign(x.channels * y.length, 0);
        for (std::size_t c = 0; c < x.channels; ++c) {
            for (std::size_t t = 0; t < y.length; ++t) {
                std::size_t best = t * window;
                double best_v = x.at(c, best);
                for (std::size_t k = 1; k < window; ++k) {
                    const double v = x.at(c, t * window + k);
                    if (v > best_v) {
                        best_v = v;
                        best = t * window + k;
                    }
                }
                y.at(c, t) = best_v;
                argmax[c * y.length + t] = best;
            }
        }
        return y;
    }

    // Routes each output gradient to its recorded argmax position.
    Mat backward(std::size_t in_channels, std::size_t in_length,
                 const std::vector<std::size_t>& argmax, const Mat& grad_out) const {
        Mat gx(in_channels, in_length);
        for (std::size_t c = 0; c < grad_out.channels; ++c)
            for (std::size_t t = 0; t < grad_out.length; ++t)
                gx.at(c, argmax[c * grad_out.length + t]) += grad_out.at(c, t);
        return gx;
    }
};

// Affine map y = W x + b with W stored [out][in].
struct Dense {
    std::size_t in_dim = 1, out_dim = 1;
    std::vector<double> w;
    std::vector<double> b;

    struct Grad {
        std::vector<double> w, b;
    };

    Dense() = default;
    Dense(std::size_t in, std::size_t out)
        : in_dim(in), out_dim(out), w(in * out, 0.0), b(out, 0.0) {}

    std::vector<double> forward(const std::vector<double>& x) const {
        require_config(x.size() == in_dim, "dense input size mismatch");
        std::vector<double> y(out_dim);
        for (std::size_t o = 0; o < out_dim; ++o) {
            double acc = b[o];
            const double* row = &w[o * in_dim];
            for (std::size_t i = 0; i < in_dim; ++i) acc += row[i] * x[i];
            y[o] = acc;
        }
        return y;
    }

    std::vector<double> backward(const std::vector<double>& x,
                                 const std::vector<double>& grad_out, Grad& g) const {
        require_config(grad_out.size() == out_dim, "dense backward size mismatch");
        if (g.w.empty()) g.w.assign(w.size(), 0.0);
        if (g.b.empty()) g.b.assign(b.size(), 0.0);
        std::vector<double> gx(in_dim, 0.0);
        for (std::size_t o = 0; o < out_dim; ++o) {
            const double go = grad_out[o];
            g.b[o] += go;
            double* grow = &g.w[o * in_dim];
            const double* row = &w[o * in_dim];
            for (std::size_t i = 0; i < in_dim; ++i) {
                grow[i] += go * x[i];
                gx[i] += row[i] * go;
            }
        }
        return gx;
    }
};

enum class DropoutMode { training, inference };

// Inverted-dropout mask: 0 with probability rate, 1/(1-rate) otherwise.
inline std::vector<double> dropout_mask(std::size_t n, double rate, Rng& rng) {
    require_config(rate >= 0.0 && rate < 1.0, "dropout rate must be in [0, 1)");
    std::vector<double> mask(n, 1.0);
    if (rate == 0.0) return mask;
    const double keep_scale = 1.0 / (1.0 - rate);
    for (auto& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
    return mask;
}

inline std::vector<double> dropout(const std::vector<double>& input, double rate,
                                   DropoutMode mode, Rng& rng) {
    require_config(rate >= 0.0 && rate < 1.0, "dropout rate must be in [0, 1)");
    if (mode == DropoutMode::inference || rate == 0.0) return input;
    auto out = input;
    const auto mask = dropout_mask(input.size(), rate, rng);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
    return out;
}

struct OptimizerConfig {
    double learning_rate = 0.001;
    double clip_norm = 1.0;

    void validate() const {
        require_config(learning_rate > 0.0, "learning_rate must be > 0");
        require_config(clip_norm > 0.0, "clip_norm must be > 0");
    }
};

// Per-tensor norm clipping (the usual `clipnorm` convention), then a plain
// SGD update. Each parameter tensor's gradient is rescaled to clip_norm when
// its own L2 norm exceeds it. Non-finite gradients abort training.
inline void sgd_step(std::span<std::span<double>> params,
                     std::span<const std::span<const double>> grads,
                     const OptimizerConfig& cfg) {
    cfg.validate();
    require_config(params.size() == grads.size(), "sgd_step parameter/gradient count mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i) {
        require_config(params[i].size() == grads[i].size(), "sgd_step shape mismatch");
        double sq = 0.0;
        for (double gv : grads[i]) sq += gv * gv;
        require_numeric(std::isfinite(sq), "non-finite gradient; aborting training");
        const double norm = std::sqrt(sq);
        const double scale = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
        const double step = cfg.learning_rate * scale;
        for (std::size_t j = 0; j < params[i].size(); ++j)
            params[i][j] -= step * grads[i][j];
    }
}

// Uniform fan-based init, limit sqrt(6 / (fan_in + fan_out)).
inline void init_uniform(std::span<double> w, std::size_t fan_in, std::size_t fan_out,
                         Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& x : w) x = (2.0 * rng.uniform() - 1.0) * limit;
}

// ---------------------------------------------------------------------------
// Parameter file: "LSNN", u32 version, then per tensor
// (u32 name length, name, u32 rank, u64 dims..., f64 data), all little-endian.

struct NamedTensor {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<double> data;
};

namespace detail {

inline void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ofstream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64(std::ofstream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

inline std::uint32_t get_u32(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    require_config(in.good(), "truncated parameter file: " + path);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline std::uint64_t get_u64(std::ifstream& in, const std::string& path) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    require_config(in.good(), "truncated parameter file: " + path);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double get_f64(std::ifstream& in, const std::string& path) {
    const std::uint64_t bits = get_u64(in, path);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace detail

inline constexpr std::uint32_t kWeightsVersion = 1;

inline void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::ofstream out(path, std::ios::binary);
    require_config(out.good(), "cannot open for writing: " + path);
    out.write("LSNN", 4);
    detail::put_u32(out, kWeightsVersion);
    for (const auto& t : tensors) {
        std::size_t expect = 1;
        for (auto d : t.dims) expect *= d;
        require_config(expect == t.data.size(), "tensor dims do not match data: " + t.name);
        detail::put_u32(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        detail::put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
        for (auto d : t.dims) detail::put_u64(out, d);
        for (double v : t.data) detail::put_f64(out, v);
    }
    require_config(out.good(), "write failed: " + path);
}

inline std::vector<NamedTensor> load_tensors(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require_config(in.good(), "cannot open parameter file: " + path);
    char magic[4];
    in.read(magic, 4);
    require_config(in.good() && std::memcmp(magic, "LSNN", 4) == 0,
                   "bad magic in parameter file: " + path);
    const auto version = detail::get_u32(in, path);
    require_config(version == kWeightsVersion, "unsupported parameter file version in " + path);
    std::vector<NamedTensor> tensors;
    while (true) {
        in.peek();
        if (in.eof()) break;
        NamedTensor t;
        const auto name_len = detail::get_u32(in, path);
        t.name.resize(name_len);
        in.read(t.name.data(), name_len);
        require_config(in.good(), "truncated parameter file: " + path);
        const auto rank = detail::get_u32(in, path);
        t.dims.resize(rank);
        std::size_t count = 1;
        for (auto& d : t.dims) {
            d = detail::get_u64(in, path);
            count *= d;
        }
        t.data.resize(count);
        for (auto& v : t.data) v = detail::get_f64(in, path);
        tensors.push_back(std::move(t));
    }
    return tensors;
}

}  // namespace latentscope::nn
