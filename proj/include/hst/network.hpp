#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hst/layers.hpp"

namespace hst::nn {

// Named contiguous range of layers whose parameters move together
// (initialized, transferred between stages, frozen as a unit).
struct BlockDef {
    std::string symbol;
    std::size_t first_layer = 0;   // inclusive
    std::size_t last_layer = 0;    // inclusive
};

template <typename T>
struct Gradients {
    std::vector<std::vector<Tensor<T>>> per_layer;  // parallel to Network::layers
};

// Feedforward graph: an ordered layer chain with materialized parameters and
// a block partition. Input shape excludes the batch extent.
template <typename T>
struct Network {
    std::vector<LayerSpec> layers;
    std::vector<std::vector<Tensor<T>>> params;  // parallel to layers; empty for param-free layers
    std::vector<BlockDef> blocks;
    std::vector<std::size_t> input_shape;

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& spec : layers) n += nn::param_count(spec);
        return n;
    }

    std::vector<std::size_t> output_width() const {
        std::vector<std::size_t> s = input_shape;
        s.insert(s.begin(), 1);
        for (std::size_t i = 0; i < layers.size(); ++i) s = nn::output_shape(layers[i], s, i);
        s.erase(s.begin());
        return s;
    }

    const BlockDef& block(const std::string& symbol) const {
        for (const auto& b : blocks) {
            if (b.symbol == symbol) return b;
        }
        throw Error("no block named " + symbol);
    }

    bool has_block(const std::string& symbol) const {
        for (const auto& b : blocks) {
            if (b.symbol == symbol) return true;
        }
        return false;
    }

    // Parameter tensors of a block, layer order.
    std::vector<Tensor<T>> block_tensors(const std::string& symbol) const {
        const BlockDef& b = block(symbol);
        std::vector<Tensor<T>> out;
        for (std::size_t i = b.first_layer; i <= b.last_layer; ++i) {
            for (const auto& t : params[i]) out.push_back(t);
        }
        return out;
    }

    // Ordered shape list of a block's tensors; linked blocks must agree on this.
    std::vector<std::vector<std::size_t>> block_shapes(const std::string& symbol) const {
        std::vector<std::vector<std::size_t>> out;
        for (const auto& t : block_tensors(symbol)) out.push_back(t.shape);
        return out;
    }

    void set_block_tensors(const std::string& symbol, const std::vector<Tensor<T>>& tensors) {
        const BlockDef& b = block(symbol);
        std::size_t k = 0;
        for (std::size_t i = b.first_layer; i <= b.last_layer; ++i) {
            for (auto& t : params[i]) {
                if (k >= tensors.size()) {
                    throw ShapeError(i, "block " + symbol + ": expected more than " +
                                            std::to_string(tensors.size()) + " tensors");
                }
                if (t.shape != tensors[k].shape) {
                    throw ShapeError(i, "block " + symbol + ": tensor shape " +
                                            shape_str(tensors[k].shape) + " does not match " +
                                            shape_str(t.shape));
                }
                t = tensors[k++];
            }
        }
        if (k != tensors.size()) {
            throw ShapeError("block " + symbol + ": " + std::to_string(tensors.size()) +
                             " tensors given, " + std::to_string(k) + " expected");
        }
    }

    // Re-initialize one block's parameters from a seed (per-layer substreams).
    void reinit_block(const std::string& symbol, std::uint64_t seed) {
        const BlockDef& b = block(symbol);
        for (std::size_t i = b.first_layer; i <= b.last_layer; ++i) {
            if (has_params(layers[i])) {
                params[i] = init_params<T>(layers[i], derive_seed(seed, i));
            }
        }
    }

    // Layer-index range -> owning block symbol, for gradient masking.
    std::vector<bool> layer_mask(const std::vector<std::string>& trainable_blocks) const {
        std::vector<bool> mask(layers.size(), false);
        for (const auto& sym : trainable_blocks) {
            const BlockDef& b = block(sym);
            for (std::size_t i = b.first_layer; i <= b.last_layer; ++i) mask[i] = true;
        }
        return mask;
    }
};

// Structural checks: contiguous block cover of all layers and a consistent
// shape chain. Throws on violation.
template <typename T>
void validate(const Network<T>& net) {
    if (net.layers.size() != net.params.size()) {
        throw ShapeError("params list does not parallel layers list");
    }
    std::vector<std::size_t> s = net.input_shape;
    s.insert(s.begin(), 1);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        s = output_shape(net.layers[i], s, i);
        const bool want = has_params(net.layers[i]);
        if (want != (net.params[i].size() == 2)) {
            throw ShapeError(i, "materialized parameters do not match layer kind");
        }
    }
    std::size_t next = 0;
    for (const auto& b : net.blocks) {
        if (b.first_layer != next || b.last_layer < b.first_layer ||
            b.last_layer >= net.layers.size()) {
            throw ShapeError("block " + b.symbol + " does not continue the partition");
        }
        next = b.last_layer + 1;
    }
    if (next != net.layers.size()) {
        throw ShapeError("block partition does not cover all layers");
    }
}

// Activations of every layer on `batch`; [0] is the input itself, back() the
// network output. Pure: parameters are not touched.
template <typename T>
std::vector<Tensor<T>> forward(const Network<T>& net, const Tensor<T>& batch) {
    {
        std::vector<std::size_t> want = net.input_shape;
        want.insert(want.begin(), batch.shape.empty() ? 0 : batch.shape[0]);
        if (batch.shape != want) {
            throw ShapeError(0, "batch shape " + shape_str(batch.shape) + " does not match input " +
                                    shape_str(want));
        }
    }
    std::vector<Tensor<T>> acts;
    acts.reserve(net.layers.size() + 1);
    acts.push_back(batch);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& spec = net.layers[i];
        const Tensor<T>& in = acts.back();
        if (const auto* d = std::get_if<DenseSpec>(&spec)) {
            output_shape(spec, in.shape, i);  // shape check with layer index
            acts.push_back(dense_forward(*d, net.params[i][0], net.params[i][1], in));
        } else if (const auto* c = std::get_if<Conv1dSpec>(&spec)) {
            output_shape(spec, in.shape, i);
            acts.push_back(conv1d_forward(*c, net.params[i][0], net.params[i][1], in));
        } else if (const auto* a = std::get_if<ActivationSpec>(&spec)) {
            acts.push_back(activation_forward(a->fn, in));
        } else {
            Tensor<T> r = in;
            r.shape = output_shape(spec, in.shape, i);
            acts.push_back(std::move(r));
        }
    }
    return acts;
}

// Backpropagate `loss_grad` (gradient of the loss w.r.t. the network output)
// through activations produced by a matching forward() call. Returns
// per-parameter gradients for every layer; masking by block is applied by
// the caller. `grad_input`, when given, receives dL/d(batch).
template <typename T>
Gradients<T> backward(const Network<T>& net, const std::vector<Tensor<T>>& acts,
                      const Tensor<T>& loss_grad, Tensor<T>* grad_input = nullptr) {
    if (acts.size() != net.layers.size() + 1) {
        throw ShapeError("activation list does not match network depth");
    }
    Gradients<T> grads;
    grads.per_layer.resize(net.layers.size());
    Tensor<T> g = loss_grad;
    if (g.shape != acts.back().shape) {
        throw ShapeError(net.layers.size() - 1, "loss gradient shape " + shape_str(g.shape) +
                                                    " does not match output " +
                                                    shape_str(acts.back().shape));
    }
    for (std::size_t ri = net.layers.size(); ri-- > 0;) {
        const LayerSpec& spec = net.layers[ri];
        const Tensor<T>& in = acts[ri];
        const Tensor<T>& out = acts[ri + 1];
        if (const auto* d = std::get_if<DenseSpec>(&spec)) {
            Tensor<T> gi, gw, gb;
            dense_backward(*d, net.params[ri][0], in, g, gi, gw, gb);
            grads.per_layer[ri] = {std::move(gw), std::move(gb)};
            g = std::move(gi);
        } else if (const auto* c = std::get_if<Conv1dSpec>(&spec)) {
            Tensor<T> gi, gw, gb;
            conv1d_backward(*c, net.params[ri][0], in, g, gi, gw, gb);
            grads.per_layer[ri] = {std::move(gw), std::move(gb)};
            g = std::move(gi);
        } else if (const auto* a = std::get_if<ActivationSpec>(&spec)) {
            g = activation_backward(a->fn, out, g);
        } else {
            g.shape = in.shape;  // flatten / reshape: gradient passes through
        }
    }
    if (grad_input) *grad_input = std::move(g);
    return grads;
}

// Incremental builder used by the model zoo.
template <typename T>
class NetworkBuilder {
public:
    NetworkBuilder(std::vector<std::size_t> input_shape, std::uint64_t seed)
        : seed_(seed) {
        net_.input_shape = std::move(input_shape);
        shape_ = net_.input_shape;
        shape_.insert(shape_.begin(), 1);
    }

    NetworkBuilder& begin_block(const std::string& symbol) {
        close_block();
        open_.symbol = symbol;
        open_.first_layer = net_.layers.size();
        block_open_ = true;
        return *this;
    }

    NetworkBuilder& dense(std::size_t out) {
        if (shape_.size() != 2) throw ShapeError("dense after non-flat shape " + shape_str(shape_));
        return add(DenseSpec{shape_[1], out});
    }

    NetworkBuilder& conv1d(std::size_t out_channels, std::size_t kernel_len) {
        if (shape_.size() != 3) throw ShapeError("conv1d needs (batch,ch,len) input");
        return add(Conv1dSpec{shape_[1], out_channels, kernel_len});
    }

    NetworkBuilder& activation(Act fn) { return add(ActivationSpec{fn}); }
    NetworkBuilder& flatten() { return add(FlattenSpec{}); }
    NetworkBuilder& reshape1d(std::size_t channels) { return add(Reshape1dSpec{channels}); }

    Network<T> finish() {
        close_block();
        validate(net_);
        return std::move(net_);
    }

private:
    NetworkBuilder& add(LayerSpec spec) {
        const std::size_t idx = net_.layers.size();
        shape_ = output_shape(spec, shape_, idx);
        net_.params.push_back(has_params(spec) ? init_params<T>(spec, derive_seed(seed_, idx))
                                               : std::vector<Tensor<T>>{});
        net_.layers.push_back(std::move(spec));
        return *this;
    }

    void close_block() {
        if (!block_open_) return;
        if (net_.layers.size() == open_.first_layer) throw Error("empty block " + open_.symbol);
        open_.last_layer = net_.layers.size() - 1;
        net_.blocks.push_back(open_);
        block_open_ = false;
    }

    Network<T> net_;
    std::vector<std::size_t> shape_;
    BlockDef open_;
    bool block_open_ = false;
    std::uint64_t seed_;
};

}  // namespace hst::nn
