#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "yowo/geometry.hpp"
#include "yowo/predictions.hpp"

namespace yowo {

struct Detection {
    Box box;
    int class_id = 0;
    double score = 0.0;       // fused score used for ranking
    double confidence = 0.0;  // actionness confidence of the position
    std::string video;
    int frame = 0;
    int level = 0;
    bool operator==(const Detection&) const = default;
};

namespace postprocess {

enum class ScoreFusion { product, geometric_mean };

struct PostprocessConfig {
    double conf_threshold = 0.1;
    double nms_iou = 0.5;
    int topk_per_level = 100;
    ScoreFusion fusion = ScoreFusion::product;
    bool operator==(const PostprocessConfig&) const = default;
};

double fuse_score(double confidence, double class_probability, ScoreFusion fusion);

/// Every (position, class) whose fused score exceeds the threshold, capped at
/// `topk_per_level` per level by score. Boxes are clamped to the frame.
std::vector<Detection> decode_predictions(const PredictionSet& preds, double conf_threshold, int topk_per_level,
                                          ScoreFusion fusion = ScoreFusion::product, const std::string& video = "",
                                          int frame = 0);

/// Greedy class-aware NMS. Equal scores keep input order.
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold);

std::vector<Detection> postprocess(const PredictionSet& preds, const PostprocessConfig& config,
                                   const std::string& video = "", int frame = 0);

}  // namespace postprocess
}  // namespace yowo
