#pragma once

// Toy-scale YOWOv2 graph. The 2D and 3D backbones are small stand-ins that
// keep the real shape contract (strides 8/16/32, C_o1 / C_o2 channels); the
// fusion head, channel encoder and prediction branches follow the detector.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "yowo/autodiff.hpp"
#include "yowo/predictions.hpp"
#include "yowo/rng.hpp"

namespace yowo::model {

using autodiff::Tape;
using autodiff::Var;
using numeric::ConvLayer;
using numeric::FeatureMap;

enum class HeadVariant { decoupled, coupled };

std::string to_string(HeadVariant v);
HeadVariant head_variant_from_string(const std::string& s);

/// he_uniform: weights U(+-sqrt(6 / fan_in)), zero biases.
/// fan_in_uniform: weights and biases U(+-1 / sqrt(fan_in)).
enum class InitScheme { he_uniform, fan_in_uniform };

std::string to_string(InitScheme v);
InitScheme init_scheme_from_string(const std::string& s);

struct ModelConfig {
    int c_o1 = 256;  // 2D level channels
    int c_o2 = 64;   // 3D feature channels
    int c_o3 = 256;  // fused channels
    int num_classes = 24;
    int clip_length = 16;
    HeadVariant head = HeadVariant::decoupled;
    int backbone_width = 16;  // stage widths are w, 2w, 4w
    InitScheme init = InitScheme::he_uniform;

    /// Desk-scale widths: C_o1 = C_o3 = 32.
    static ModelConfig toy();
    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

/// K frames of H x W x 3; the last frame is the key frame.
struct ClipInput {
    std::vector<FeatureMap> frames;

    [[nodiscard]] const FeatureMap& key_frame() const { return frames.back(); }
    [[nodiscard]] int height() const { return frames.back().height; }
    [[nodiscard]] int width() const { return frames.back().width; }
    void validate() const;
};

struct LevelFeatures {
    std::array<FeatureMap, 3> cls;
    std::array<FeatureMap, 3> reg;
};

struct FusedLevels {
    std::array<FeatureMap, 3> cls;
    std::array<FeatureMap, 3> reg;
};

struct Backbone2dLayers {
    ConvLayer stem1, stem2, stage1, stage2, stage3;
    std::array<ConvLayer, 3> lateral;
    std::array<ConvLayer, 3> compress;
};

struct Backbone3dLayers {
    ConvLayer stem1, stem2, stage1, stage2, stage3, out;
};

struct BranchLayers {
    ConvLayer cls1, cls2, reg1, reg2;
};

struct EncoderLayers {
    ConvLayer fuse1;  // 1x1 on the concatenation
    ConvLayer fuse2;  // 3x3
    ConvLayer out;    // 1x1 after the channel attention
};

struct HeadLayers {
    ConvLayer cls1, cls2, cls_pred;
    ConvLayer reg1, reg2, reg_pred, conf_pred;
};

/// Layers of one pyramid level. The coupled variant uses only `cls_encoder`
/// and has no `branches`.
struct LevelLayers {
    BranchLayers branches;
    EncoderLayers cls_encoder;
    EncoderLayers reg_encoder;
    HeadLayers head;
};

Backbone2dLayers make_backbone_2d(const ModelConfig& cfg);
Backbone3dLayers make_backbone_3d(const ModelConfig& cfg);
BranchLayers make_branches(int channels);
EncoderLayers make_encoder(int c_spatial, int c_temporal, int c_fused);
HeadLayers make_head(int channels, int num_classes);

/// Prediction biases of cls and conf are overwritten afterwards by the model.
void init_layer(ConvLayer& layer, Rng& rng, InitScheme scheme);

// ---- Graph building blocks (recorded on a tape) ----

std::array<Var, 3> backbone_2d(Tape& tape, Var key_frame, const Backbone2dLayers& layers);
Var backbone_3d(Tape& tape, const ClipInput& clip, const Backbone3dLayers& layers);
std::pair<Var, Var> decoupled_branches(Tape& tape, Var spatial, const BranchLayers& layers);
std::array<Var, 3> align_3d(Tape& tape, Var spatio_temporal);
/// Returns (attention output, attention matrix).
std::pair<Var, Var> channel_attention(Tape& tape, Var fused);
Var channel_encoder(Tape& tape, Var spatial, Var spatio_temporal, const EncoderLayers& layers);

struct LevelVars {
    Var cls, reg, conf;
};
LevelVars predict_level(Tape& tape, Var fused_cls, Var fused_reg, const HeadLayers& layers);

// ---- Value-level wrappers of the blocks above ----

std::array<FeatureMap, 3> toy_backbone_2d(const FeatureMap& key_frame, const Backbone2dLayers& layers);
FeatureMap toy_backbone_3d(const ClipInput& clip, const Backbone3dLayers& layers);
std::pair<FeatureMap, FeatureMap> decoupled_branches(const FeatureMap& spatial, const BranchLayers& layers);
std::array<FeatureMap, 3> align_3d(const FeatureMap& spatio_temporal);

struct AttentionResult {
    numeric::Matrix attention;  // softmax_rows(F F^T), C x C
    numeric::Matrix output;     // attention * F, C x HW
};
AttentionResult channel_attention(const numeric::Matrix& fused);
FeatureMap channel_encoder(const FeatureMap& spatial, const FeatureMap& spatio_temporal, const EncoderLayers& layers);

/// Decoupled: each level fuses cls and reg streams with their own encoder.
/// Coupled: `levels.cls[i]` is the un-split F_S_i; one encoder per level and
/// its output feeds both prediction branches.
FusedLevels fusion_head(const LevelFeatures& levels, const std::array<FeatureMap, 3>& aligned,
                        const std::array<LevelLayers, 3>& layers, HeadVariant variant);

PredictionSet predict(const FusedLevels& fused, const std::array<LevelLayers, 3>& layers, int num_classes,
                      geometry::FrameSize frame);

struct ForwardTrace {
    PredictionSet predictions;
    std::array<LevelVars, 3> outputs;
};

class YowoModel {
public:
    YowoModel(ModelConfig cfg, std::uint64_t seed);

    [[nodiscard]] const ModelConfig& config() const { return config_; }

    ForwardTrace forward(Tape& tape, const ClipInput& clip) const;
    [[nodiscard]] PredictionSet predict(const ClipInput& clip) const;

    using LayerVisitor = std::function<void(const std::string& name, ConvLayer& layer)>;
    using ConstLayerVisitor = std::function<void(const std::string& name, const ConvLayer& layer)>;
    /// Visits every trainable layer of the configured variant in a fixed order.
    void visit_layers(const LayerVisitor& fn);
    void for_each_layer(const ConstLayerVisitor& fn) const;
    [[nodiscard]] std::size_t parameter_count() const;

    Backbone2dLayers backbone2d;
    Backbone3dLayers backbone3d;
    std::array<LevelLayers, 3> levels;

private:
    ModelConfig config_;
};

/// Grid extent of a level for a frame extent (extent / stride).
int level_extent(int frame_extent, int level);

}  // namespace yowo::model
