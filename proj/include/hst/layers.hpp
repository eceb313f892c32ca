#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "hst/rng.hpp"
#include "hst/tensor.hpp"

namespace hst::nn {

enum class Act { Elu, Tanh, Sigmoid, Softmax, Linear };

inline const char* act_name(Act a) {
    switch (a) {
        case Act::Elu: return "elu";
        case Act::Tanh: return "tanh";
        case Act::Sigmoid: return "sigmoid";
        case Act::Softmax: return "softmax";
        case Act::Linear: return "linear";
    }
    return "?";
}

struct DenseSpec {
    std::size_t in = 0, out = 0;
};

// stride 1, no padding
struct Conv1dSpec {
    std::size_t in_channels = 0, out_channels = 0, kernel_len = 0;
};

struct ActivationSpec {
    Act fn = Act::Linear;
};

// (batch, C, L) -> (batch, C*L)
struct FlattenSpec {};

// (batch, F) -> (batch, channels, F/channels); feeds dense output into a conv stack
struct Reshape1dSpec {
    std::size_t channels = 1;
};

using LayerSpec = std::variant<DenseSpec, Conv1dSpec, ActivationSpec, FlattenSpec, Reshape1dSpec>;

inline bool has_params(const LayerSpec& spec) {
    return std::holds_alternative<DenseSpec>(spec) || std::holds_alternative<Conv1dSpec>(spec);
}

// Shape of the layer output given the input shape (batch extent first).
// Throws ShapeError naming `layer_index` on any mismatch.
inline std::vector<std::size_t> output_shape(const LayerSpec& spec,
                                             const std::vector<std::size_t>& in,
                                             std::size_t layer_index) {
    if (in.empty()) throw ShapeError(layer_index, "empty input shape");
    if (const auto* d = std::get_if<DenseSpec>(&spec)) {
        if (in.size() != 2 || in[1] != d->in) {
            throw ShapeError(layer_index, "dense expects (batch," + std::to_string(d->in) +
                                              "), got " + shape_str(in));
        }
        return {in[0], d->out};
    }
    if (const auto* c = std::get_if<Conv1dSpec>(&spec)) {
        if (in.size() != 3 || in[1] != c->in_channels) {
            throw ShapeError(layer_index, "conv1d expects (batch," + std::to_string(c->in_channels) +
                                              ",len), got " + shape_str(in));
        }
        if (c->kernel_len > in[2]) {
            throw ShapeError(layer_index, "kernel length " + std::to_string(c->kernel_len) +
                                              " exceeds sequence length " + std::to_string(in[2]));
        }
        return {in[0], c->out_channels, in[2] - c->kernel_len + 1};
    }
    if (std::holds_alternative<ActivationSpec>(spec)) {
        return in;
    }
    if (std::holds_alternative<FlattenSpec>(spec)) {
        std::size_t flat = 1;
        for (std::size_t i = 1; i < in.size(); ++i) flat *= in[i];
        return {in[0], flat};
    }
    const auto& r = std::get<Reshape1dSpec>(spec);
    if (in.size() != 2 || r.channels == 0 || in[1] % r.channels != 0) {
        throw ShapeError(layer_index, "cannot reshape " + shape_str(in) + " into " +
                                          std::to_string(r.channels) + " channels");
    }
    return {in[0], r.channels, in[1] / r.channels};
}

inline std::size_t param_count(const LayerSpec& spec) {
    if (const auto* d = std::get_if<DenseSpec>(&spec)) return d->in * d->out + d->out;
    if (const auto* c = std::get_if<Conv1dSpec>(&spec))
        return c->out_channels * c->in_channels * c->kernel_len + c->out_channels;
    return 0;
}

// Seeded uniform Glorot-style init: W ~ U(-sqrt(6/(fan_in+fan_out)), +),
// biases zero. Deterministic given (spec, seed).
template <typename T>
std::vector<Tensor<T>> init_params(const LayerSpec& spec, std::uint64_t seed) {
    std::vector<Tensor<T>> out;
    if (const auto* d = std::get_if<DenseSpec>(&spec)) {
        if (d->in == 0 || d->out == 0) throw ShapeError("dense layer with zero extent");
        Rng rng(seed);
        const double limit = std::sqrt(6.0 / static_cast<double>(d->in + d->out));
        Tensor<T> w({d->in, d->out});
        for (T& v : w.data) v = static_cast<T>(rng.uniform(-limit, limit));
        out.push_back(std::move(w));
        out.push_back(Tensor<T>({d->out}));
    } else if (const auto* c = std::get_if<Conv1dSpec>(&spec)) {
        if (c->in_channels == 0 || c->out_channels == 0 || c->kernel_len == 0) {
            throw ShapeError("conv1d layer with zero extent");
        }
        Rng rng(seed);
        const std::size_t fan_in = c->in_channels * c->kernel_len;
        const std::size_t fan_out = c->out_channels * c->kernel_len;
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Tensor<T> w({c->out_channels, c->in_channels, c->kernel_len});
        for (T& v : w.data) v = static_cast<T>(rng.uniform(-limit, limit));
        out.push_back(std::move(w));
        out.push_back(Tensor<T>({c->out_channels}));
    }
    return out;
}

namespace detail {

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// im2col for 1-D convolution: (B, C, L) -> (B*L_out, C*K)
template <typename T>
Tensor<T> im2col(const Tensor<T>& in, std::size_t kernel) {
    const std::size_t b = in.shape[0], c = in.shape[1], l = in.shape[2];
    const std::size_t lo = l - kernel + 1;
    Tensor<T> col({b * lo, c * kernel});
    for (std::size_t bi = 0; bi < b; ++bi) {
        for (std::size_t t = 0; t < lo; ++t) {
            T* dst = col.data.data() + (bi * lo + t) * c * kernel;
            for (std::size_t ci = 0; ci < c; ++ci) {
                const T* src = in.data.data() + (bi * c + ci) * l + t;
                std::copy(src, src + kernel, dst + ci * kernel);
            }
        }
    }
    return col;
}

// transpose of im2col: scatter-add (B*L_out, C*K) back to (B, C, L)
template <typename T>
void col2im_add(const Tensor<T>& col, std::size_t kernel, Tensor<T>& out) {
    const std::size_t b = out.shape[0], c = out.shape[1], l = out.shape[2];
    const std::size_t lo = l - kernel + 1;
    for (std::size_t bi = 0; bi < b; ++bi) {
        for (std::size_t t = 0; t < lo; ++t) {
            const T* src = col.data.data() + (bi * lo + t) * c * kernel;
            for (std::size_t ci = 0; ci < c; ++ci) {
                T* dst = out.data.data() + (bi * c + ci) * l + t;
                for (std::size_t k = 0; k < kernel; ++k) dst[k] += src[ci * kernel + k];
            }
        }
    }
}

}  // namespace detail

template <typename T>
Tensor<T> dense_forward(const DenseSpec& spec, const Tensor<T>& w, const Tensor<T>& b,
                        const Tensor<T>& in) {
    const std::size_t batch = in.shape[0];
    Tensor<T> out({batch, spec.out});
    detail::ConstMatMap<T> im(in.data.data(), batch, spec.in);
    detail::ConstMatMap<T> wm(w.data.data(), spec.in, spec.out);
    detail::MatMap<T> om(out.data.data(), batch, spec.out);
    om.noalias() = im * wm;
    for (std::size_t r = 0; r < batch; ++r) {
        T* row = out.data.data() + r * spec.out;
        for (std::size_t j = 0; j < spec.out; ++j) row[j] += b.data[j];
    }
    return out;
}

template <typename T>
void dense_backward(const DenseSpec& spec, const Tensor<T>& w, const Tensor<T>& in,
                    const Tensor<T>& grad_out, Tensor<T>& grad_in, Tensor<T>& grad_w,
                    Tensor<T>& grad_b) {
    const std::size_t batch = in.shape[0];
    grad_in = Tensor<T>({batch, spec.in});
    grad_w = Tensor<T>({spec.in, spec.out});
    grad_b = Tensor<T>({spec.out});
    detail::ConstMatMap<T> gom(grad_out.data.data(), batch, spec.out);
    detail::ConstMatMap<T> wm(w.data.data(), spec.in, spec.out);
    detail::ConstMatMap<T> im(in.data.data(), batch, spec.in);
    detail::MatMap<T> gim(grad_in.data.data(), batch, spec.in);
    detail::MatMap<T> gwm(grad_w.data.data(), spec.in, spec.out);
    gim.noalias() = gom * wm.transpose();
    gwm.noalias() = im.transpose() * gom;
    for (std::size_t r = 0; r < batch; ++r) {
        const T* row = grad_out.data.data() + r * spec.out;
        for (std::size_t j = 0; j < spec.out; ++j) grad_b.data[j] += row[j];
    }
}

template <typename T>
Tensor<T> conv1d_forward(const Conv1dSpec& spec, const Tensor<T>& w, const Tensor<T>& b,
                         const Tensor<T>& in) {
    const std::size_t batch = in.shape[0];
    const std::size_t lo = in.shape[2] - spec.kernel_len + 1;
    const std::size_t ck = spec.in_channels * spec.kernel_len;
    const Tensor<T> col = detail::im2col(in, spec.kernel_len);
    // (B*L_out, C*K) x (C*K, C_out)
    Tensor<T> prod({batch * lo, spec.out_channels});
    detail::ConstMatMap<T> cm(col.data.data(), batch * lo, ck);
    detail::ConstMatMap<T> wm(w.data.data(), spec.out_channels, ck);
    detail::MatMap<T> pm(prod.data.data(), batch * lo, spec.out_channels);
    pm.noalias() = cm * wm.transpose();
    Tensor<T> out({batch, spec.out_channels, lo});
    for (std::size_t bi = 0; bi < batch; ++bi) {
        for (std::size_t t = 0; t < lo; ++t) {
            const T* src = prod.data.data() + (bi * lo + t) * spec.out_channels;
            for (std::size_t o = 0; o < spec.out_channels; ++o) {
                out(bi, o, t) = src[o] + b.data[o];
            }
        }
    }
    return out;
}

template <typename T>
void conv1d_backward(const Conv1dSpec& spec, const Tensor<T>& w, const Tensor<T>& in,
                     const Tensor<T>& grad_out, Tensor<T>& grad_in, Tensor<T>& grad_w,
                     Tensor<T>& grad_b) {
    const std::size_t batch = in.shape[0];
    const std::size_t lo = grad_out.shape[2];
    const std::size_t ck = spec.in_channels * spec.kernel_len;
    grad_b = Tensor<T>({spec.out_channels});
    Tensor<T> gom({batch * lo, spec.out_channels});
    for (std::size_t bi = 0; bi < batch; ++bi) {
        for (std::size_t t = 0; t < lo; ++t) {
            T* dst = gom.data.data() + (bi * lo + t) * spec.out_channels;
            for (std::size_t o = 0; o < spec.out_channels; ++o) {
                const T g = grad_out(bi, o, t);
                dst[o] = g;
                grad_b.data[o] += g;
            }
        }
    }
    const Tensor<T> col = detail::im2col(in, spec.kernel_len);
    grad_w = Tensor<T>({spec.out_channels, spec.in_channels, spec.kernel_len});
    Tensor<T> gcol({batch * lo, ck});
    detail::ConstMatMap<T> gm(gom.data.data(), batch * lo, spec.out_channels);
    detail::ConstMatMap<T> cm(col.data.data(), batch * lo, ck);
    detail::ConstMatMap<T> wm(w.data.data(), spec.out_channels, ck);
    detail::MatMap<T> gwm(grad_w.data.data(), spec.out_channels, ck);
    detail::MatMap<T> gcm(gcol.data.data(), batch * lo, ck);
    gwm.noalias() = gm.transpose() * cm;
    gcm.noalias() = gm * wm;
    grad_in = Tensor<T>({batch, spec.in_channels, in.shape[2]});
    detail::col2im_add(gcol, spec.kernel_len, grad_in);
}

template <typename T>
Tensor<T> activation_forward(Act fn, const Tensor<T>& in) {
    Tensor<T> out = in;
    switch (fn) {
        case Act::Linear:
            break;
        case Act::Elu:
            for (T& v : out.data) v = v > T(0) ? v : static_cast<T>(std::expm1(static_cast<double>(v)));
            break;
        case Act::Tanh:
            for (T& v : out.data) v = std::tanh(v);
            break;
        case Act::Sigmoid:
            for (T& v : out.data)
                v = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
            break;
        case Act::Softmax: {
            // row-wise over the last dimension
            const std::size_t w = out.shape.back();
            const std::size_t rows = out.size() / w;
            for (std::size_t r = 0; r < rows; ++r) {
                T* row = out.data.data() + r * w;
                T mx = row[0];
                for (std::size_t j = 1; j < w; ++j) mx = std::max(mx, row[j]);
                double sum = 0.0;
                for (std::size_t j = 0; j < w; ++j) {
                    row[j] = static_cast<T>(std::exp(static_cast<double>(row[j] - mx)));
                    sum += row[j];
                }
                for (std::size_t j = 0; j < w; ++j) row[j] = static_cast<T>(row[j] / sum);
            }
            break;
        }
    }
    return out;
}

// Activation gradients are expressed through the layer output where that is
// cheaper (sigmoid, tanh, softmax, elu).
template <typename T>
Tensor<T> activation_backward(Act fn, const Tensor<T>& out, const Tensor<T>& grad_out) {
    Tensor<T> grad_in = grad_out;
    switch (fn) {
        case Act::Linear:
            break;
        case Act::Elu:
            for (std::size_t i = 0; i < grad_in.size(); ++i) {
                const T y = out.data[i];
                grad_in.data[i] *= y > T(0) ? T(1) : y + T(1);  // exp(x) = elu(x)+1 for x<0
            }
            break;
        case Act::Tanh:
            for (std::size_t i = 0; i < grad_in.size(); ++i) {
                const T y = out.data[i];
                grad_in.data[i] *= T(1) - y * y;
            }
            break;
        case Act::Sigmoid:
            for (std::size_t i = 0; i < grad_in.size(); ++i) {
                const T y = out.data[i];
                grad_in.data[i] *= y * (T(1) - y);
            }
            break;
        case Act::Softmax: {
            const std::size_t w = out.shape.back();
            const std::size_t rows = out.size() / w;
            for (std::size_t r = 0; r < rows; ++r) {
                const T* y = out.data.data() + r * w;
                const T* g = grad_out.data.data() + r * w;
                double dot = 0.0;
                for (std::size_t j = 0; j < w; ++j) dot += static_cast<double>(y[j]) * g[j];
                T* gi = grad_in.data.data() + r * w;
                for (std::size_t j = 0; j < w; ++j) {
                    gi[j] = static_cast<T>(y[j] * (static_cast<double>(g[j]) - dot));
                }
            }
            break;
        }
    }
    return grad_in;
}

}  // namespace hst::nn
