#include "yowo/autodiff.hpp"

#include <atomic>
#include <optional>

namespace yowo::autodiff {

namespace {

std::atomic<std::uint64_t> next_tape_id{1};

Value zeros_like(const Value& v) {
    if (const auto* m = std::get_if<FeatureMap>(&v)) return FeatureMap(m->height, m->width, m->channels);
    const auto& mat = std::get<Matrix>(v);
    return Matrix(mat.rows, mat.cols);
}

std::vector<double>& raw(Value& v) {
    if (auto* m = std::get_if<FeatureMap>(&v)) return m->data;
    return std::get<Matrix>(v).data;
}

const std::vector<double>& raw(const Value& v) {
    if (const auto* m = std::get_if<FeatureMap>(&v)) return m->data;
    return std::get<Matrix>(v).data;
}

bool same_shape(const Value& a, const Value& b) {
    if (a.index() != b.index()) return false;
    if (const auto* m = std::get_if<FeatureMap>(&a)) return m->same_shape(std::get<FeatureMap>(b));
    const auto& x = std::get<Matrix>(a);
    const auto& y = std::get<Matrix>(b);
    return x.rows == y.rows && x.cols == y.cols;
}

}  // namespace

ConvLayerGrad::ConvLayerGrad(const ConvLayer& layer)
    : weights(layer.weights.size(), 0.0),
      bias(layer.bias.size(), 0.0),
      scale(layer.scale.size(), 0.0),
      shift(layer.shift.size(), 0.0) {}

Tape::Tape() : id_(next_tape_id.fetch_add(1)) {}

std::size_t Tape::check(Var v) const {
    require(v.tape == id_ && v.index < nodes_.size(), "autodiff: variable was not recorded on this tape");
    return v.index;
}

Var Tape::push(Value value, std::function<void(Tape&, const Value&)> backward) {
    require(!backward_done_, "autodiff: cannot record after backward()");
    nodes_.push_back(Node{std::move(value), std::nullopt, std::move(backward)});
    return Var{id_, nodes_.size() - 1};
}

void Tape::accumulate(std::size_t index, const Value& delta) {
    auto& node = nodes_[index];
    if (!node.grad) {
        node.grad = delta;
        return;
    }
    auto& dst = raw(*node.grad);
    const auto& src = raw(delta);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

ConvLayerGrad& Tape::layer_slot(const ConvLayer& layer) {
    auto it = layer_grads_.find(&layer);
    if (it == layer_grads_.end()) it = layer_grads_.emplace(&layer, ConvLayerGrad(layer)).first;
    return it->second;
}

const FeatureMap& Tape::map(Var v) const {
    const auto* m = std::get_if<FeatureMap>(&nodes_[check(v)].value);
    require(m != nullptr, "autodiff: variable is not a feature map");
    return *m;
}

const Matrix& Tape::matrix(Var v) const {
    const auto* m = std::get_if<Matrix>(&nodes_[check(v)].value);
    require(m != nullptr, "autodiff: variable is not a matrix");
    return *m;
}

const Value& Tape::value(Var v) const { return nodes_[check(v)].value; }

Var Tape::input(FeatureMap value) { return push(std::move(value), nullptr); }
Var Tape::input(Matrix value) { return push(std::move(value), nullptr); }

Var Tape::conv2d(Var x, const ConvLayer& layer) {
    const std::size_t xi = check(x);
    auto trace = numeric::conv2d_traced(map(x), layer);
    FeatureMap output = trace.output;
    if (layer.post == numeric::PostOp::leaky_relu)
        for (double v : trace.normalized.data) kink_signs_.push_back(v >= 0.0);
    const ConvLayer* lp = &layer;
    auto backward = [xi, lp, tr = std::move(trace)](Tape& tape, const Value& g) {
        const ConvLayer& L = *lp;
        const auto& dy = std::get<FeatureMap>(g);
        const FeatureMap& input = std::get<FeatureMap>(tape.nodes_[xi].value);
        ConvLayerGrad& lg = tape.layer_slot(L);
        const int cout = L.out_channels;
        const int cin = L.in_channels;

        // Through the post-op and the affine to the pre-bias accumulator.
        std::vector<double> du(dy.data.size());
        for (std::size_t i = 0; i < du.size(); ++i) {
            const std::size_t c = i % cout;
            double dz = dy.data[i] * numeric::post_op_derivative(L.post, tr.normalized.data[i], tr.output.data[i]);
            if (L.affine) {
                lg.scale[c] += dz * tr.linear.data[i];
                lg.shift[c] += dz;
                dz *= L.scale[c];
            }
            du[i] = dz;
            lg.bias[c] += dz;
        }

        FeatureMap dx(input.height, input.width, input.channels);
        const int k = L.kernel;
        const int pad = L.padding();
        for (int oy = 0; oy < tr.linear.height; ++oy) {
            for (int ox = 0; ox < tr.linear.width; ++ox) {
                const double* g_out = &du[tr.linear.offset(oy, ox, 0)];
                for (int ky = 0; ky < k; ++ky) {
                    const int iy = oy * L.stride + ky - pad;
                    if (iy < 0 || iy >= input.height) continue;
                    for (int kx = 0; kx < k; ++kx) {
                        const int ix = ox * L.stride + kx - pad;
                        if (ix < 0 || ix >= input.width) continue;
                        const double* in = &input.data[input.offset(iy, ix, 0)];
                        double* din = &dx.data[dx.offset(iy, ix, 0)];
                        const std::size_t base = L.weight_index(ky, kx, 0, 0);
                        for (int ci = 0; ci < cin; ++ci) {
                            const double* wrow = &L.weights[base + static_cast<std::size_t>(ci) * cout];
                            double* dwrow = &lg.weights[base + static_cast<std::size_t>(ci) * cout];
                            const double v = in[ci];
                            double acc = 0.0;
                            for (int co = 0; co < cout; ++co) {
                                acc += wrow[co] * g_out[co];
                                dwrow[co] += v * g_out[co];
                            }
                            din[ci] += acc;
                        }
                    }
                }
            }
        }
        tape.accumulate(xi, dx);
    };
    return push(std::move(output), std::move(backward));
}

Var Tape::add(Var a, Var b) {
    const std::size_t ai = check(a);
    const std::size_t bi = check(b);
    return push(numeric::add(map(a), map(b)), [ai, bi](Tape& tape, const Value& g) {
        tape.accumulate(ai, g);
        tape.accumulate(bi, g);
    });
}

Var Tape::upsample_nearest(Var x, int factor) {
    const std::size_t xi = check(x);
    return push(numeric::upsample_nearest(map(x), factor), [xi, factor](Tape& tape, const Value& g) {
        const auto& dy = std::get<FeatureMap>(g);
        FeatureMap dx(dy.height / factor, dy.width / factor, dy.channels);
        for (int y = 0; y < dy.height; ++y)
            for (int x = 0; x < dy.width; ++x)
                for (int c = 0; c < dy.channels; ++c) dx.at(y / factor, x / factor, c) += dy.at(y, x, c);
        tape.accumulate(xi, dx);
    });
}

Var Tape::concat_channels(Var a, Var b) {
    const std::size_t ai = check(a);
    const std::size_t bi = check(b);
    const int ca = map(a).channels;
    const int cb = map(b).channels;
    return push(numeric::concat_channels(map(a), map(b)), [ai, bi, ca, cb](Tape& tape, const Value& g) {
        const auto& dy = std::get<FeatureMap>(g);
        FeatureMap da(dy.height, dy.width, ca);
        FeatureMap db(dy.height, dy.width, cb);
        for (int y = 0; y < dy.height; ++y) {
            for (int x = 0; x < dy.width; ++x) {
                for (int c = 0; c < ca; ++c) da.at(y, x, c) = dy.at(y, x, c);
                for (int c = 0; c < cb; ++c) db.at(y, x, c) = dy.at(y, x, ca + c);
            }
        }
        tape.accumulate(ai, da);
        tape.accumulate(bi, db);
    });
}

Var Tape::to_channel_matrix(Var x) {
    const std::size_t xi = check(x);
    const int h = map(x).height;
    const int w = map(x).width;
    return push(numeric::to_channel_matrix(map(x)), [xi, h, w](Tape& tape, const Value& g) {
        tape.accumulate(xi, numeric::from_channel_matrix(std::get<Matrix>(g), h, w));
    });
}

Var Tape::from_channel_matrix(Var m, int height, int width) {
    const std::size_t mi = check(m);
    return push(numeric::from_channel_matrix(matrix(m), height, width), [mi](Tape& tape, const Value& g) {
        tape.accumulate(mi, numeric::to_channel_matrix(std::get<FeatureMap>(g)));
    });
}

Var Tape::transpose(Var m) {
    const std::size_t mi = check(m);
    return push(numeric::transpose(matrix(m)), [mi](Tape& tape, const Value& g) {
        tape.accumulate(mi, numeric::transpose(std::get<Matrix>(g)));
    });
}

Var Tape::matmul(Var a, Var b) {
    const std::size_t ai = check(a);
    const std::size_t bi = check(b);
    return push(numeric::matmul(matrix(a), matrix(b)), [ai, bi](Tape& tape, const Value& g) {
        const auto& dy = std::get<Matrix>(g);
        const auto& av = std::get<Matrix>(tape.nodes_[ai].value);
        const auto& bv = std::get<Matrix>(tape.nodes_[bi].value);
        tape.accumulate(ai, numeric::matmul(dy, numeric::transpose(bv)));
        tape.accumulate(bi, numeric::matmul(numeric::transpose(av), dy));
    });
}

Var Tape::softmax_rows(Var m) {
    const std::size_t mi = check(m);
    Matrix out = numeric::softmax_rows(matrix(m));
    Matrix probs = out;
    return push(std::move(out), [mi, p = std::move(probs)](Tape& tape, const Value& g) {
        const auto& dy = std::get<Matrix>(g);
        Matrix dx(p.rows, p.cols);
        for (int i = 0; i < p.rows; ++i) {
            double dot = 0.0;
            for (int j = 0; j < p.cols; ++j) dot += dy.at(i, j) * p.at(i, j);
            for (int j = 0; j < p.cols; ++j) dx.at(i, j) = p.at(i, j) * (dy.at(i, j) - dot);
        }
        tape.accumulate(mi, dx);
    });
}

void Tape::backward(std::span<const Seed> seeds) {
    require(!backward_done_, "autodiff: backward() already ran on this tape");
    for (const auto& seed : seeds) {
        const std::size_t i = check(seed.var);
        require(same_shape(nodes_[i].value, seed.gradient), "autodiff: seed gradient shape mismatch");
        accumulate(i, seed.gradient);
    }
    backward_done_ = true;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        auto& node = nodes_[i];
        if (node.grad && node.backward) node.backward(*this, *node.grad);
    }
}

Value Tape::gradient(Var v) const {
    const auto& node = nodes_[check(v)];
    return node.grad ? *node.grad : zeros_like(node.value);
}

const ConvLayerGrad& Tape::layer_gradient(const ConvLayer& layer) const {
    auto it = layer_grads_.find(&layer);
    require(it != layer_grads_.end(), "autodiff: layer was not used on this tape");
    return it->second;
}

bool Tape::has_layer_gradient(const ConvLayer& layer) const { return layer_grads_.count(&layer) > 0; }

}  // namespace yowo::autodiff
