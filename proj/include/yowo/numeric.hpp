#pragma once

// Dense-array engine used by the detector: just the tensor shapes and
// operations the network needs, all in double precision.

#include <cstddef>
#include <span>
#include <vector>

#include "yowo/error.hpp"

namespace yowo::numeric {

/// Rank-3 array stored row-major in (height, width, channels) order.
struct FeatureMap {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    FeatureMap() = default;
    FeatureMap(int h, int w, int c, double fill = 0.0);
    FeatureMap(int h, int w, int c, std::vector<double> values);

    [[nodiscard]] std::size_t size() const { return data.size(); }
    [[nodiscard]] std::size_t offset(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + c;
    }
    double& at(int y, int x, int c) { return data[offset(y, x, c)]; }
    [[nodiscard]] double at(int y, int x, int c) const { return data[offset(y, x, c)]; }

    [[nodiscard]] bool same_shape(const FeatureMap& other) const {
        return height == other.height && width == other.width && channels == other.channels;
    }
    bool operator==(const FeatureMap&) const = default;
};

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0);
    Matrix(int r, int c, std::vector<double> values);

    static Matrix identity(int n);

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    [[nodiscard]] double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    bool operator==(const Matrix&) const = default;
};

enum class PostOp { none, leaky_relu, silu, sigmoid };

inline constexpr double kLeakySlope = 0.1;

/// Convolution with "same" padding, optional per-channel affine and a
/// pointwise activation. Weights are laid out [ky][kx][in][out].
struct ConvLayer {
    int kernel = 1;
    int in_channels = 0;
    int out_channels = 0;
    int stride = 1;
    PostOp post = PostOp::none;
    bool affine = false;
    std::vector<double> weights;
    std::vector<double> bias;
    std::vector<double> scale;  // empty unless affine
    std::vector<double> shift;  // empty unless affine

    ConvLayer() = default;
    ConvLayer(int kernel, int in, int out, PostOp post = PostOp::none, bool affine = false, int stride = 1);

    [[nodiscard]] int padding() const { return (kernel - 1) / 2; }
    [[nodiscard]] std::size_t weight_index(int ky, int kx, int ci, int co) const {
        return ((static_cast<std::size_t>(ky) * kernel + kx) * in_channels + ci) * out_channels + co;
    }
    [[nodiscard]] int output_extent(int input_extent) const {
        return (input_extent + 2 * padding() - kernel) / stride + 1;
    }
    void validate() const;
    bool operator==(const ConvLayer&) const = default;
};

/// 1x1 identity convolution on `channels` channels.
ConvLayer identity_conv(int channels);

double apply_post_op(PostOp op, double z);
double post_op_derivative(PostOp op, double z, double y);
double sigmoid(double z);

/// Intermediate values of a convolution, kept for the backward pass.
struct ConvTrace {
    FeatureMap linear;      // conv + bias
    FeatureMap normalized;  // after the affine (equals linear when not affine)
    FeatureMap output;      // after the post-op
};

FeatureMap conv2d(const FeatureMap& input, const ConvLayer& layer);
ConvTrace conv2d_traced(const FeatureMap& input, const ConvLayer& layer);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix softmax_rows(const Matrix& m);

FeatureMap upsample_nearest(const FeatureMap& input, int factor);
FeatureMap average_pool(const FeatureMap& input, int factor);
FeatureMap concat_channels(const FeatureMap& a, const FeatureMap& b);
FeatureMap add(const FeatureMap& a, const FeatureMap& b);
FeatureMap mean_of(std::span<const FeatureMap> maps);

/// (H, W, C) -> C x (H*W); row c holds channel c in raster order.
Matrix to_channel_matrix(const FeatureMap& map);
FeatureMap from_channel_matrix(const Matrix& m, int height, int width);

bool all_finite(std::span<const double> values);

}  // namespace yowo::numeric
