#pragma once

#include <cmath>
#include <string>

#include "hst/tensor.hpp"

namespace hst::nn {

enum class LossKind { Mse, Bce, Ce };

inline const char* loss_name(LossKind k) {
    switch (k) {
        case LossKind::Mse: return "mse";
        case LossKind::Bce: return "bce";
        case LossKind::Ce: return "ce";
    }
    return "?";
}

template <typename T>
struct LossResult {
    double value = 0.0;
    Tensor<T> grad;  // w.r.t. the prediction, same shape
};

// BCE/CE probability clamp; keeps log() finite without measurably moving the
// loss. Gradients are zero where the clamp is active so they stay consistent
// with the clamped objective.
inline constexpr double kProbEps = 1e-7;

// Mean-reduced losses.
//   Mse: mean over all elements of (p-t)^2.
//   Bce: mean over all elements of -(t log p + (1-t) log(1-p)); p clamped.
//   Ce:  mean over rows of -sum_j t_j log p_j; rows are the last dimension.
template <typename T>
LossResult<T> loss_eval(LossKind kind, const Tensor<T>& pred, const Tensor<T>& target) {
    if (pred.shape != target.shape) {
        throw ShapeError("loss: prediction " + shape_str(pred.shape) + " vs target " +
                         shape_str(target.shape));
    }
    if (pred.size() == 0) throw ShapeError("loss on empty tensors");
    LossResult<T> res;
    res.grad = Tensor<T>(pred.shape);
    const std::size_t n = pred.size();
    double acc = 0.0;
    switch (kind) {
        case LossKind::Mse: {
            const double inv = 1.0 / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double d = static_cast<double>(pred.data[i]) - target.data[i];
                acc += d * d;
                res.grad.data[i] = static_cast<T>(2.0 * d * inv);
            }
            res.value = acc * inv;
            break;
        }
        case LossKind::Bce: {
            const double inv = 1.0 / static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double t = target.data[i];
                if (t != 0.0 && t != 1.0) {
                    throw Error("bce target " + std::to_string(t) + " is not 0/1");
                }
                const double raw = pred.data[i];
                const double p = std::min(1.0 - kProbEps, std::max(kProbEps, raw));
                acc -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
                const bool clamped = raw < kProbEps || raw > 1.0 - kProbEps;
                res.grad.data[i] =
                    clamped ? T(0) : static_cast<T>((p - t) / (p * (1.0 - p)) * inv);
            }
            res.value = acc * inv;
            break;
        }
        case LossKind::Ce: {
            const std::size_t w = pred.shape.back();
            const std::size_t rows = n / w;
            const double inv = 1.0 / static_cast<double>(rows);
            for (std::size_t r = 0; r < rows; ++r) {
                double row_sum = 0.0;
                for (std::size_t j = 0; j < w; ++j) {
                    const std::size_t i = r * w + j;
                    const double t = target.data[i];
                    row_sum += t;
                    if (t == 0.0) {
                        res.grad.data[i] = T(0);
                        continue;
                    }
                    const double raw = pred.data[i];
                    const double p = std::min(1.0 - kProbEps, std::max(kProbEps, raw));
                    acc -= t * std::log(p);
                    const bool clamped = raw < kProbEps || raw > 1.0 - kProbEps;
                    res.grad.data[i] = clamped ? T(0) : static_cast<T>(-t / p * inv);
                }
                if (std::abs(row_sum - 1.0) > 1e-6) {
                    throw Error("ce target row " + std::to_string(r) + " sums to " +
                                std::to_string(row_sum));
                }
            }
            res.value = acc * inv;
            break;
        }
    }
    return res;
}

}  // namespace hst::nn
