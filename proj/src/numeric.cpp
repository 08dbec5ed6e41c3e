#include "yowo/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace yowo::numeric {

FeatureMap::FeatureMap(int h, int w, int c, double fill) : height(h), width(w), channels(c) {
    require(h >= 0 && w >= 0 && c >= 0, "FeatureMap: negative dimension");
    data.assign(static_cast<std::size_t>(h) * w * c, fill);
}

FeatureMap::FeatureMap(int h, int w, int c, std::vector<double> values)
    : height(h), width(w), channels(c), data(std::move(values)) {
    require(h >= 0 && w >= 0 && c >= 0, "FeatureMap: negative dimension");
    require(data.size() == static_cast<std::size_t>(h) * w * c, "FeatureMap: data length != h*w*c");
}

Matrix::Matrix(int r, int c, double fill) : rows(r), cols(c) {
    require(r >= 0 && c >= 0, "Matrix: negative dimension");
    data.assign(static_cast<std::size_t>(r) * c, fill);
}

Matrix::Matrix(int r, int c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
    require(data.size() == static_cast<std::size_t>(r) * c, "Matrix: data length != rows*cols");
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

ConvLayer::ConvLayer(int k, int in, int out, PostOp p, bool with_affine, int s)
    : kernel(k), in_channels(in), out_channels(out), stride(s), post(p), affine(with_affine) {
    require(k == 1 || k == 3, "ConvLayer: kernel must be 1 or 3");
    require(in > 0 && out > 0, "ConvLayer: channel counts must be positive");
    require(s == 1 || s == 2, "ConvLayer: stride must be 1 or 2");
    weights.assign(static_cast<std::size_t>(k) * k * in * out, 0.0);
    bias.assign(out, 0.0);
    if (affine) {
        scale.assign(out, 1.0);
        shift.assign(out, 0.0);
    }
}

void ConvLayer::validate() const {
    require(kernel == 1 || kernel == 3, "ConvLayer: kernel must be 1 or 3");
    require(weights.size() == static_cast<std::size_t>(kernel) * kernel * in_channels * out_channels,
            "ConvLayer: weight count != k*k*in*out");
    require(bias.size() == static_cast<std::size_t>(out_channels), "ConvLayer: bias size != out channels");
    if (affine) {
        require(scale.size() == bias.size() && shift.size() == bias.size(),
                "ConvLayer: affine parameters must have one entry per output channel");
    }
}

ConvLayer identity_conv(int channels) {
    ConvLayer layer(1, channels, channels);
    for (int c = 0; c < channels; ++c) layer.weights[layer.weight_index(0, 0, c, c)] = 1.0;
    return layer;
}

double sigmoid(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double apply_post_op(PostOp op, double z) {
    switch (op) {
        case PostOp::none: return z;
        case PostOp::leaky_relu: return z >= 0 ? z : kLeakySlope * z;
        case PostOp::silu: return z * sigmoid(z);
        case PostOp::sigmoid: return sigmoid(z);
    }
    return z;
}

double post_op_derivative(PostOp op, double z, double y) {
    switch (op) {
        case PostOp::none: return 1.0;
        case PostOp::leaky_relu: return z >= 0 ? 1.0 : kLeakySlope;
        case PostOp::silu: {
            const double s = sigmoid(z);
            return s * (1.0 + z * (1.0 - s));
        }
        case PostOp::sigmoid: return y * (1.0 - y);
    }
    return 1.0;
}

ConvTrace conv2d_traced(const FeatureMap& input, const ConvLayer& layer) {
    layer.validate();
    require(input.channels == layer.in_channels,
            "conv2d: input has " + std::to_string(input.channels) + " channels, layer expects " +
                std::to_string(layer.in_channels));
    const int k = layer.kernel;
    const int pad = layer.padding();
    const int out_h = layer.output_extent(input.height);
    const int out_w = layer.output_extent(input.width);
    const int cin = layer.in_channels;
    const int cout = layer.out_channels;

    ConvTrace trace;
    trace.linear = FeatureMap(out_h, out_w, cout);
    for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
            double* acc = &trace.linear.data[trace.linear.offset(oy, ox, 0)];
            std::copy(layer.bias.begin(), layer.bias.end(), acc);
            for (int ky = 0; ky < k; ++ky) {
                const int iy = oy * layer.stride + ky - pad;
                if (iy < 0 || iy >= input.height) continue;
                for (int kx = 0; kx < k; ++kx) {
                    const int ix = ox * layer.stride + kx - pad;
                    if (ix < 0 || ix >= input.width) continue;
                    const double* in = &input.data[input.offset(iy, ix, 0)];
                    const double* w = &layer.weights[layer.weight_index(ky, kx, 0, 0)];
                    for (int ci = 0; ci < cin; ++ci) {
                        const double v = in[ci];
                        const double* wrow = w + static_cast<std::size_t>(ci) * cout;
                        for (int co = 0; co < cout; ++co) acc[co] += v * wrow[co];
                    }
                }
            }
        }
    }

    trace.normalized = trace.linear;
    if (layer.affine) {
        for (std::size_t i = 0; i < trace.normalized.data.size(); ++i) {
            const std::size_t c = i % cout;
            trace.normalized.data[i] = trace.linear.data[i] * layer.scale[c] + layer.shift[c];
        }
    }
    trace.output = trace.normalized;
    if (layer.post != PostOp::none) {
        for (double& v : trace.output.data) v = apply_post_op(layer.post, v);
    }
    return trace;
}

FeatureMap conv2d(const FeatureMap& input, const ConvLayer& layer) {
    return conv2d_traced(input, layer).output;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols == b.rows, "matmul: inner dimensions differ");
    Matrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        double* orow = &out.data[static_cast<std::size_t>(i) * b.cols];
        for (int k = 0; k < a.cols; ++k) {
            const double v = a.at(i, k);
            const double* brow = &b.data[static_cast<std::size_t>(k) * b.cols];
            for (int j = 0; j < b.cols; ++j) orow[j] += v * brow[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) out.at(j, i) = m.at(i, j);
    return out;
}

Matrix softmax_rows(const Matrix& m) {
    require(m.rows > 0 && m.cols > 0, "softmax_rows: empty matrix");
    Matrix out(m.rows, m.cols);
    for (int i = 0; i < m.rows; ++i) {
        double row_max = m.at(i, 0);
        for (int j = 1; j < m.cols; ++j) row_max = std::max(row_max, m.at(i, j));
        double total = 0.0;
        for (int j = 0; j < m.cols; ++j) {
            out.at(i, j) = std::exp(m.at(i, j) - row_max);
            total += out.at(i, j);
        }
        for (int j = 0; j < m.cols; ++j) out.at(i, j) /= total;
    }
    return out;
}

FeatureMap upsample_nearest(const FeatureMap& input, int factor) {
    require(factor == 1 || factor == 2 || factor == 4, "upsample_nearest: factor must be 1, 2 or 4");
    if (factor == 1) return input;
    FeatureMap out(input.height * factor, input.width * factor, input.channels);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < out.channels; ++c) out.at(y, x, c) = input.at(y / factor, x / factor, c);
    return out;
}

FeatureMap average_pool(const FeatureMap& input, int factor) {
    require(factor >= 1 && input.height % factor == 0 && input.width % factor == 0,
            "average_pool: extent not divisible by factor");
    FeatureMap out(input.height / factor, input.width / factor, input.channels);
    const double norm = 1.0 / (factor * factor);
    for (int y = 0; y < input.height; ++y)
        for (int x = 0; x < input.width; ++x)
            for (int c = 0; c < input.channels; ++c) out.at(y / factor, x / factor, c) += input.at(y, x, c) * norm;
    return out;
}

FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b) {
    require(a.height == b.height && a.width == b.width, "concat_channels: spatial sizes differ");
    FeatureMap out(a.height, a.width, a.channels + b.channels);
    for (int y = 0; y < a.height; ++y) {
        for (int x = 0; x < a.width; ++x) {
            double* dst = &out.data[out.offset(y, x, 0)];
            const auto* pa = a.data.data() + a.offset(y, x, 0);
            const auto* pb = b.data.data() + b.offset(y, x, 0);
            std::copy(pa, pa + a.channels, dst);
            std::copy(pb, pb + b.channels, dst + a.channels);
        }
    }
    return out;
}

FeatureMap add(const FeatureMap& a, const FeatureMap& b) {
    require(a.same_shape(b), "add: shapes differ");
    FeatureMap out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

FeatureMap mean_of(std::span<const FeatureMap> maps) {
    require(!maps.empty(), "mean_of: no maps");
    FeatureMap out(maps.front().height, maps.front().width, maps.front().channels);
    for (const auto& m : maps) {
        require(m.same_shape(out), "mean_of: shapes differ");
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += m.data[i];
    }
    const double norm = 1.0 / static_cast<double>(maps.size());
    for (double& v : out.data) v *= norm;
    return out;
}

Matrix to_channel_matrix(const FeatureMap& map) {
    const int hw = map.height * map.width;
    Matrix out(map.channels, hw);
    for (int p = 0; p < hw; ++p)
        for (int c = 0; c < map.channels; ++c) out.at(c, p) = map.data[static_cast<std::size_t>(p) * map.channels + c];
    return out;
}

FeatureMap from_channel_matrix(const Matrix& m, int height, int width) {
    require(m.cols == height * width, "from_channel_matrix: column count != height*width");
    FeatureMap out(height, width, m.rows);
    for (int p = 0; p < m.cols; ++p)
        for (int c = 0; c < m.rows; ++c) out.data[static_cast<std::size_t>(p) * m.rows + c] = m.at(c, p);
    return out;
}

bool all_finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace yowo::numeric
