#pragma once

// Shared test utilities: finite-difference gradient checking, scratch
// directories and small synthetic datasets.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "hst/losses.hpp"
#include "hst/network.hpp"
#include "hst/rng.hpp"
#include "hst/synthetic.hpp"

namespace testutil {

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
}

// Largest relative error between analytic and central-difference gradients
// over every parameter and every input element. 64-bit throughout.
inline double max_grad_rel_err(hst::nn::Network<double>& net, hst::nn::LossKind kind,
                               hst::nn::Tensor<double> X, const hst::nn::Tensor<double>& Y,
                               double h = 1e-5) {
    using namespace hst::nn;
    const auto loss_of = [&] { return loss_eval(kind, forward(net, X).back(), Y).value; };

    const std::vector<Tensor<double>> acts = forward(net, X);
    const LossResult<double> lr = loss_eval(kind, acts.back(), Y);
    Tensor<double> grad_input;
    const Gradients<double> grads = backward(net, acts, lr.grad, &grad_input);

    double worst = 0.0;
    for (std::size_t li = 0; li < net.params.size(); ++li) {
        for (std::size_t pi = 0; pi < net.params[li].size(); ++pi) {
            for (std::size_t i = 0; i < net.params[li][pi].size(); ++i) {
                double& x = net.params[li][pi].data[i];
                const double orig = x;
                x = orig + h;
                const double fp = loss_of();
                x = orig - h;
                const double fm = loss_of();
                x = orig;
                const double numeric = (fp - fm) / (2.0 * h);
                worst = std::max(worst, rel_err(grads.per_layer[li][pi].data[i], numeric));
            }
        }
    }
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double orig = X.data[i];
        X.data[i] = orig + h;
        const double fp = loss_of();
        X.data[i] = orig - h;
        const double fm = loss_of();
        X.data[i] = orig;
        const double numeric = (fp - fm) / (2.0 * h);
        worst = std::max(worst, rel_err(grad_input.data[i], numeric));
    }
    return worst;
}

inline hst::nn::Tensor<double> random_tensor(std::vector<std::size_t> shape, std::uint64_t seed,
                                             double lo = -1.0, double hi = 1.0) {
    hst::nn::Tensor<double> t(std::move(shape));
    hst::Rng rng(seed);
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// One-hot rows over `width` classes.
inline hst::nn::Tensor<double> one_hot_rows(std::size_t rows, std::size_t width,
                                            std::uint64_t seed) {
    hst::nn::Tensor<double> t({rows, width});
    hst::Rng rng(seed);
    for (std::size_t r = 0; r < rows; ++r) t(r, rng.index(width)) = 1.0;
    return t;
}

// Self-deleting scratch directory under the system temp dir.
class TempDir {
public:
    explicit TempDir(const std::string& stem) {
        auto base = std::filesystem::temp_directory_path() / (stem + ".XXXXXX");
        std::string tmpl = base.string();
        if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str(const std::string& rel = "") const {
        return rel.empty() ? path_.string() : (path_ / rel).string();
    }

private:
    std::filesystem::path path_;
};

// Small 1-building site for fast training-loop tests.
inline hst::data::SyntheticConfig tiny_site_config() {
    hst::data::SyntheticConfig cfg;
    cfg.plan = {1, {2}, 12};
    cfg.train_records = 120;
    cfg.test_records = 24;
    return cfg;
}

inline hst::data::SyntheticSite tiny_site(std::uint64_t seed = 11) {
    return hst::data::generate_synthetic(tiny_site_config(), seed);
}

}  // namespace testutil
