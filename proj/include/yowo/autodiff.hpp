#pragma once

// Reverse-mode recorder over the numeric ops. Every op appends a node holding
// its value and a closure that pushes the node's gradient to its parents.
// Nodes are created in topological order, so backward() is a reverse sweep.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "yowo/numeric.hpp"

namespace yowo::autodiff {

using numeric::ConvLayer;
using numeric::FeatureMap;
using numeric::Matrix;

using Value = std::variant<FeatureMap, Matrix>;

struct Var {
    std::uint64_t tape = 0;
    std::size_t index = 0;
};

struct ConvLayerGrad {
    std::vector<double> weights;
    std::vector<double> bias;
    std::vector<double> scale;
    std::vector<double> shift;

    explicit ConvLayerGrad(const ConvLayer& layer);
    ConvLayerGrad() = default;
};

struct Seed {
    Var var;
    Value gradient;
};

class Tape {
public:
    Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) = default;
    Tape& operator=(Tape&&) = default;

    Var input(FeatureMap value);
    Var input(Matrix value);

    Var conv2d(Var x, const ConvLayer& layer);
    Var add(Var a, Var b);
    Var upsample_nearest(Var x, int factor);
    Var concat_channels(Var a, Var b);
    Var to_channel_matrix(Var x);
    Var from_channel_matrix(Var m, int height, int width);
    Var transpose(Var m);
    Var matmul(Var a, Var b);
    Var softmax_rows(Var m);

    [[nodiscard]] const FeatureMap& map(Var v) const;
    [[nodiscard]] const Matrix& matrix(Var v) const;
    [[nodiscard]] const Value& value(Var v) const;

    /// Accumulates d(sum_i <seed_i, output_i>) into every node and every conv
    /// layer touched by the graph. May be called once per recording.
    void backward(std::span<const Seed> seeds);

    /// Gradient of an input or intermediate node (zeros if unreached).
    [[nodiscard]] Value gradient(Var v) const;
    [[nodiscard]] const ConvLayerGrad& layer_gradient(const ConvLayer& layer) const;
    [[nodiscard]] bool has_layer_gradient(const ConvLayer& layer) const;

    [[nodiscard]] std::size_t size() const { return nodes_.size(); }

    /// Sign of every leaky-relu pre-activation recorded so far, in op order.
    /// Two recordings of one graph share a pattern iff no kink was crossed.
    [[nodiscard]] const std::vector<bool>& kink_pattern() const { return kink_signs_; }

private:
    struct Node {
        Value value;
        std::optional<Value> grad;
        std::function<void(Tape&, const Value& grad)> backward;
    };

    std::size_t check(Var v) const;
    Var push(Value value, std::function<void(Tape&, const Value&)> backward);
    void accumulate(std::size_t index, const Value& delta);
    ConvLayerGrad& layer_slot(const ConvLayer& layer);

    std::uint64_t id_;
    bool backward_done_ = false;
    std::vector<Node> nodes_;
    std::map<const ConvLayer*, ConvLayerGrad> layer_grads_;
    std::vector<bool> kink_signs_;
};

}  // namespace yowo::autodiff
