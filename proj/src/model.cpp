#include "yowo/model.hpp"

#include <cmath>

namespace yowo::model {

using numeric::PostOp;

namespace {

constexpr double kPriorBias = -4.6;  // sigmoid(-4.6) ~ 0.01

ConvLayer conv3(int in, int out, PostOp post, int stride = 1) { return ConvLayer(3, in, out, post, true, stride); }

}  // namespace

std::string to_string(HeadVariant v) { return v == HeadVariant::decoupled ? "decoupled" : "coupled"; }

HeadVariant head_variant_from_string(const std::string& s) {
    if (s == "decoupled") return HeadVariant::decoupled;
    if (s == "coupled") return HeadVariant::coupled;
    throw ContractViolation("unknown head variant '" + s + "' (expected decoupled or coupled)");
}

std::string to_string(InitScheme v) { return v == InitScheme::he_uniform ? "he_uniform" : "fan_in_uniform"; }

InitScheme init_scheme_from_string(const std::string& s) {
    if (s == "he_uniform") return InitScheme::he_uniform;
    if (s == "fan_in_uniform") return InitScheme::fan_in_uniform;
    throw ContractViolation("unknown init scheme '" + s + "' (expected he_uniform or fan_in_uniform)");
}

ModelConfig ModelConfig::toy() {
    ModelConfig cfg;
    cfg.c_o1 = 32;
    cfg.c_o3 = 32;
    return cfg;
}

void ModelConfig::validate() const {
    require(c_o1 > 0 && c_o2 > 0 && c_o3 > 0, "ModelConfig: channel counts must be positive");
    require(num_classes > 0, "ModelConfig: num_classes must be positive");
    require(clip_length >= 1, "ModelConfig: clip_length must be >= 1");
    require(backbone_width > 0, "ModelConfig: backbone_width must be positive");
}

void ClipInput::validate() const {
    require(!frames.empty(), "ClipInput: no frames");
    const auto& key = frames.back();
    require(key.channels == 3, "ClipInput: frames must have 3 channels");
    require(key.height > 0 && key.width > 0 && key.height % 32 == 0 && key.width % 32 == 0,
            "ClipInput: frame height and width must be positive multiples of 32");
    for (const auto& f : frames) require(f.same_shape(key), "ClipInput: frames differ in shape");
}

int level_extent(int frame_extent, int level) { return frame_extent / geometry::kStrides.at(level); }

Backbone2dLayers make_backbone_2d(const ModelConfig& cfg) {
    const int w = cfg.backbone_width;
    Backbone2dLayers b;
    b.stem1 = conv3(3, w, PostOp::silu, 2);
    b.stem2 = conv3(w, w, PostOp::silu, 2);
    b.stage1 = conv3(w, w, PostOp::silu, 2);
    b.stage2 = conv3(w, 2 * w, PostOp::silu, 2);
    b.stage3 = conv3(2 * w, 4 * w, PostOp::silu, 2);
    const std::array<int, 3> widths{w, 2 * w, 4 * w};
    for (int i = 0; i < 3; ++i) {
        b.lateral[i] = ConvLayer(1, widths[i], cfg.c_o1);
        b.compress[i] = ConvLayer(1, cfg.c_o1, cfg.c_o1, PostOp::silu, true);
    }
    return b;
}

Backbone3dLayers make_backbone_3d(const ModelConfig& cfg) {
    const int w = cfg.backbone_width;
    Backbone3dLayers b;
    b.stem1 = conv3(3, w, PostOp::silu, 2);
    b.stem2 = conv3(w, w, PostOp::silu, 2);
    b.stage1 = conv3(w, w, PostOp::silu, 2);
    b.stage2 = conv3(w, 2 * w, PostOp::silu, 2);
    b.stage3 = conv3(2 * w, 4 * w, PostOp::silu, 2);
    b.out = ConvLayer(1, 4 * w, cfg.c_o2, PostOp::silu, true);
    return b;
}

BranchLayers make_branches(int channels) {
    return BranchLayers{conv3(channels, channels, PostOp::silu), conv3(channels, channels, PostOp::silu),
                        conv3(channels, channels, PostOp::silu), conv3(channels, channels, PostOp::silu)};
}

EncoderLayers make_encoder(int c_spatial, int c_temporal, int c_fused) {
    return EncoderLayers{ConvLayer(1, c_spatial + c_temporal, c_fused, PostOp::leaky_relu, true),
                         conv3(c_fused, c_fused, PostOp::leaky_relu),
                         ConvLayer(1, c_fused, c_fused, PostOp::leaky_relu, true)};
}

HeadLayers make_head(int channels, int num_classes) {
    HeadLayers h;
    h.cls1 = conv3(channels, channels, PostOp::silu);
    h.cls2 = conv3(channels, channels, PostOp::silu);
    h.cls_pred = ConvLayer(1, channels, num_classes, PostOp::sigmoid);
    h.reg1 = conv3(channels, channels, PostOp::silu);
    h.reg2 = conv3(channels, channels, PostOp::silu);
    h.reg_pred = ConvLayer(1, channels, 4, PostOp::none);
    h.conf_pred = ConvLayer(1, channels, 1, PostOp::sigmoid);
    return h;
}

void init_layer(ConvLayer& layer, Rng& rng, InitScheme scheme) {
    const double fan_in = static_cast<double>(layer.kernel * layer.kernel * layer.in_channels);
    if (scheme == InitScheme::he_uniform) {
        const double bound = std::sqrt(6.0 / fan_in);
        for (double& w : layer.weights) w = rng.uniform(-bound, bound);
        for (double& b : layer.bias) b = 0.0;
        return;
    }
    const double bound = 1.0 / std::sqrt(fan_in);
    for (double& w : layer.weights) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias) b = rng.uniform(-bound, bound);
}

// ---------------------------------------------------------------------------

std::array<Var, 3> backbone_2d(Tape& tape, Var key_frame, const Backbone2dLayers& layers) {
    const auto& frame = tape.map(key_frame);
    require(frame.height % 32 == 0 && frame.width % 32 == 0 && frame.height > 0 && frame.width > 0,
            "backbone_2d: frame height and width must be positive multiples of 32");
    const Var s = tape.conv2d(tape.conv2d(key_frame, layers.stem1), layers.stem2);
    const Var c3 = tape.conv2d(s, layers.stage1);
    const Var c4 = tape.conv2d(c3, layers.stage2);
    const Var c5 = tape.conv2d(c4, layers.stage3);

    // Top-down pyramid with 1x1 laterals, then the per-level compression conv.
    const Var p5 = tape.conv2d(c5, layers.lateral[2]);
    const Var p4 = tape.add(tape.conv2d(c4, layers.lateral[1]), tape.upsample_nearest(p5, 2));
    const Var p3 = tape.add(tape.conv2d(c3, layers.lateral[0]), tape.upsample_nearest(p4, 2));
    return {tape.conv2d(p3, layers.compress[0]), tape.conv2d(p4, layers.compress[1]),
            tape.conv2d(p5, layers.compress[2])};
}

Var backbone_3d(Tape& tape, const ClipInput& clip, const Backbone3dLayers& layers) {
    clip.validate();
    Var x = tape.input(numeric::mean_of(clip.frames));
    for (const ConvLayer* l : {&layers.stem1, &layers.stem2, &layers.stage1, &layers.stage2, &layers.stage3, &layers.out})
        x = tape.conv2d(x, *l);
    return x;
}

std::pair<Var, Var> decoupled_branches(Tape& tape, Var spatial, const BranchLayers& layers) {
    const Var cls = tape.conv2d(tape.conv2d(spatial, layers.cls1), layers.cls2);
    const Var reg = tape.conv2d(tape.conv2d(spatial, layers.reg1), layers.reg2);
    return {cls, reg};
}

std::array<Var, 3> align_3d(Tape& tape, Var spatio_temporal) {
    return {tape.upsample_nearest(spatio_temporal, 4), tape.upsample_nearest(spatio_temporal, 2), spatio_temporal};
}

std::pair<Var, Var> channel_attention(Tape& tape, Var fused) {
    const auto& shape = tape.map(fused);
    const int h = shape.height;
    const int w = shape.width;
    const Var f2 = tape.to_channel_matrix(fused);
    const Var attention = tape.softmax_rows(tape.matmul(f2, tape.transpose(f2)));
    const Var f3 = tape.matmul(attention, f2);
    return {tape.from_channel_matrix(f3, h, w), attention};
}

Var channel_encoder(Tape& tape, Var spatial, Var spatio_temporal, const EncoderLayers& layers) {
    const auto& a = tape.map(spatial);
    const auto& b = tape.map(spatio_temporal);
    require(a.height == b.height && a.width == b.width, "channel_encoder: spatial sizes differ");
    const Var fused = tape.conv2d(tape.conv2d(tape.concat_channels(spatial, spatio_temporal), layers.fuse1), layers.fuse2);
    return tape.conv2d(channel_attention(tape, fused).first, layers.out);
}

LevelVars predict_level(Tape& tape, Var fused_cls, Var fused_reg, const HeadLayers& layers) {
    const Var cls_feat = tape.conv2d(tape.conv2d(fused_cls, layers.cls1), layers.cls2);
    const Var reg_feat = tape.conv2d(tape.conv2d(fused_reg, layers.reg1), layers.reg2);
    return LevelVars{tape.conv2d(cls_feat, layers.cls_pred), tape.conv2d(reg_feat, layers.reg_pred),
                     tape.conv2d(reg_feat, layers.conf_pred)};
}

// ---------------------------------------------------------------------------

std::array<FeatureMap, 3> toy_backbone_2d(const FeatureMap& key_frame, const Backbone2dLayers& layers) {
    Tape tape;
    const auto out = backbone_2d(tape, tape.input(key_frame), layers);
    return {tape.map(out[0]), tape.map(out[1]), tape.map(out[2])};
}

FeatureMap toy_backbone_3d(const ClipInput& clip, const Backbone3dLayers& layers) {
    Tape tape;
    return tape.map(backbone_3d(tape, clip, layers));
}

std::pair<FeatureMap, FeatureMap> decoupled_branches(const FeatureMap& spatial, const BranchLayers& layers) {
    Tape tape;
    const auto [cls, reg] = decoupled_branches(tape, tape.input(spatial), layers);
    return {tape.map(cls), tape.map(reg)};
}

std::array<FeatureMap, 3> align_3d(const FeatureMap& spatio_temporal) {
    return {numeric::upsample_nearest(spatio_temporal, 4), numeric::upsample_nearest(spatio_temporal, 2),
            spatio_temporal};
}

AttentionResult channel_attention(const numeric::Matrix& fused) {
    AttentionResult r;
    r.attention = numeric::softmax_rows(numeric::matmul(fused, numeric::transpose(fused)));
    r.output = numeric::matmul(r.attention, fused);
    return r;
}

FeatureMap channel_encoder(const FeatureMap& spatial, const FeatureMap& spatio_temporal, const EncoderLayers& layers) {
    Tape tape;
    return tape.map(channel_encoder(tape, tape.input(spatial), tape.input(spatio_temporal), layers));
}

FusedLevels fusion_head(const LevelFeatures& levels, const std::array<FeatureMap, 3>& aligned,
                        const std::array<LevelLayers, 3>& layers, HeadVariant variant) {
    FusedLevels fused;
    for (int i = 0; i < 3; ++i) {
        fused.cls[i] = channel_encoder(levels.cls[i], aligned[i], layers[i].cls_encoder);
        fused.reg[i] = variant == HeadVariant::decoupled
                           ? channel_encoder(levels.reg[i], aligned[i], layers[i].reg_encoder)
                           : fused.cls[i];
    }
    return fused;
}

PredictionSet predict(const FusedLevels& fused, const std::array<LevelLayers, 3>& layers, int num_classes,
                      geometry::FrameSize frame) {
    PredictionSet preds;
    preds.frame = frame;
    preds.num_classes = num_classes;
    for (int i = 0; i < 3; ++i) {
        Tape tape;
        const auto out = predict_level(tape, tape.input(fused.cls[i]), tape.input(fused.reg[i]), layers[i].head);
        preds.levels[i] = LevelPrediction{geometry::kStrides[i], tape.map(out.cls), tape.map(out.reg), tape.map(out.conf)};
    }
    return preds;
}

// ---------------------------------------------------------------------------

YowoModel::YowoModel(ModelConfig cfg, std::uint64_t seed) : config_(cfg) {
    config_.validate();
    backbone2d = make_backbone_2d(config_);
    backbone3d = make_backbone_3d(config_);
    for (auto& level : levels) {
        level.branches = make_branches(config_.c_o1);
        level.cls_encoder = make_encoder(config_.c_o1, config_.c_o2, config_.c_o3);
        level.reg_encoder = make_encoder(config_.c_o1, config_.c_o2, config_.c_o3);
        level.head = make_head(config_.c_o3, config_.num_classes);
    }
    Rng rng(seed);
    visit_layers([&](const std::string&, ConvLayer& layer) { init_layer(layer, rng, config_.init); });
    for (auto& level : levels) {
        for (double& b : level.head.cls_pred.bias) b = kPriorBias;
        for (double& b : level.head.conf_pred.bias) b = kPriorBias;
    }
}

ForwardTrace YowoModel::forward(Tape& tape, const ClipInput& clip) const {
    clip.validate();
    const auto spatial = backbone_2d(tape, tape.input(clip.key_frame()), backbone2d);
    const auto aligned = align_3d(tape, backbone_3d(tape, clip, backbone3d));

    ForwardTrace trace;
    trace.predictions.frame = {static_cast<double>(clip.width()), static_cast<double>(clip.height())};
    trace.predictions.num_classes = config_.num_classes;
    for (int i = 0; i < 3; ++i) {
        const auto& L = levels[i];
        Var fused_cls;
        Var fused_reg;
        if (config_.head == HeadVariant::decoupled) {
            const auto [cls, reg] = decoupled_branches(tape, spatial[i], L.branches);
            fused_cls = channel_encoder(tape, cls, aligned[i], L.cls_encoder);
            fused_reg = channel_encoder(tape, reg, aligned[i], L.reg_encoder);
        } else {
            fused_cls = channel_encoder(tape, spatial[i], aligned[i], L.cls_encoder);
            fused_reg = fused_cls;
        }
        trace.outputs[i] = predict_level(tape, fused_cls, fused_reg, L.head);
        trace.predictions.levels[i] = LevelPrediction{geometry::kStrides[i], tape.map(trace.outputs[i].cls),
                                                      tape.map(trace.outputs[i].reg), tape.map(trace.outputs[i].conf)};
    }
    return trace;
}

PredictionSet YowoModel::predict(const ClipInput& clip) const {
    Tape tape;
    return forward(tape, clip).predictions;
}

namespace {

template <typename Model, typename Fn>
void visit_all(Model& m, const Fn& fn) {
    fn("backbone2d.stem1", m.backbone2d.stem1);
    fn("backbone2d.stem2", m.backbone2d.stem2);
    fn("backbone2d.stage1", m.backbone2d.stage1);
    fn("backbone2d.stage2", m.backbone2d.stage2);
    fn("backbone2d.stage3", m.backbone2d.stage3);
    for (int i = 0; i < 3; ++i) fn("backbone2d.lateral" + std::to_string(i + 1), m.backbone2d.lateral[i]);
    for (int i = 0; i < 3; ++i) fn("backbone2d.compress" + std::to_string(i + 1), m.backbone2d.compress[i]);
    fn("backbone3d.stem1", m.backbone3d.stem1);
    fn("backbone3d.stem2", m.backbone3d.stem2);
    fn("backbone3d.stage1", m.backbone3d.stage1);
    fn("backbone3d.stage2", m.backbone3d.stage2);
    fn("backbone3d.stage3", m.backbone3d.stage3);
    fn("backbone3d.out", m.backbone3d.out);
    const bool decoupled = m.config().head == HeadVariant::decoupled;
    for (int i = 0; i < 3; ++i) {
        auto& L = m.levels[i];
        const std::string p = "level" + std::to_string(i + 1) + ".";
        auto encoder = [&](const std::string& name, auto& e) {
            fn(p + name + ".fuse1", e.fuse1);
            fn(p + name + ".fuse2", e.fuse2);
            fn(p + name + ".out", e.out);
        };
        if (decoupled) {
            fn(p + "branch.cls1", L.branches.cls1);
            fn(p + "branch.cls2", L.branches.cls2);
            fn(p + "branch.reg1", L.branches.reg1);
            fn(p + "branch.reg2", L.branches.reg2);
            encoder("cls_encoder", L.cls_encoder);
            encoder("reg_encoder", L.reg_encoder);
        } else {
            encoder("encoder", L.cls_encoder);
        }
        fn(p + "head.cls1", L.head.cls1);
        fn(p + "head.cls2", L.head.cls2);
        fn(p + "head.cls_pred", L.head.cls_pred);
        fn(p + "head.reg1", L.head.reg1);
        fn(p + "head.reg2", L.head.reg2);
        fn(p + "head.reg_pred", L.head.reg_pred);
        fn(p + "head.conf_pred", L.head.conf_pred);
    }
}

}  // namespace

void YowoModel::visit_layers(const LayerVisitor& fn) { visit_all(*this, fn); }
void YowoModel::for_each_layer(const ConstLayerVisitor& fn) const { visit_all(*this, fn); }

std::size_t YowoModel::parameter_count() const {
    std::size_t n = 0;
    for_each_layer([&n](const std::string&, const ConvLayer& l) {
        n += l.weights.size() + l.bias.size() + l.scale.size() + l.shift.size();
    });
    return n;
}

}  // namespace yowo::model
