#include "yowo/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "yowo/error.hpp"

namespace yowo::postprocess {

double fuse_score(double confidence, double class_probability, ScoreFusion fusion) {
    const double product = confidence * class_probability;
    return fusion == ScoreFusion::product ? product : std::sqrt(product);
}

std::vector<Detection> decode_predictions(const PredictionSet& preds, double conf_threshold, int topk_per_level,
                                          ScoreFusion fusion, const std::string& video, int frame) {
    require(conf_threshold >= 0.0 && conf_threshold < 1.0, "decode_predictions: threshold must lie in [0, 1)");
    require(topk_per_level > 0, "decode_predictions: topk must be positive");
    std::vector<Detection> out;
    std::size_t position = 0;
    for (int l = 0; l < 3; ++l) {
        const auto& lv = preds.levels[l];
        std::vector<Detection> level_dets;
        for (int y = 0; y < lv.conf.height; ++y) {
            for (int x = 0; x < lv.conf.width; ++x, ++position) {
                const double conf = lv.conf.at(y, x, 0);
                for (int k = 0; k < preds.num_classes; ++k) {
                    const double score = fuse_score(conf, lv.cls.at(y, x, k), fusion);
                    if (!(score > conf_threshold)) continue;
                    Detection d;
                    d.box = geometry::decode_offsets(preds.cell_of(position), preds.raw_offsets(position), preds.frame);
                    d.class_id = k;
                    d.score = score;
                    d.confidence = conf;
                    d.video = video;
                    d.frame = frame;
                    d.level = l;
                    level_dets.push_back(std::move(d));
                }
            }
        }
        std::stable_sort(level_dets.begin(), level_dets.end(),
                         [](const Detection& a, const Detection& b) { return a.score > b.score; });
        if (level_dets.size() > static_cast<std::size_t>(topk_per_level)) level_dets.resize(topk_per_level);
        out.insert(out.end(), level_dets.begin(), level_dets.end());
    }
    return out;
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold) {
    require(iou_threshold > 0.0 && iou_threshold <= 1.0, "nms: IoU threshold must lie in (0, 1]");
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
    std::vector<Detection> kept;
    for (std::size_t i : order) {
        const auto& d = dets[i];
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
            return k.class_id == d.class_id && geometry::iou(k.box, d.box) > iou_threshold;
        });
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

std::vector<Detection> postprocess(const PredictionSet& preds, const PostprocessConfig& config,
                                   const std::string& video, int frame) {
    return nms(decode_predictions(preds, config.conf_threshold, config.topk_per_level, config.fusion, video, frame),
               config.nms_iou);
}

}  // namespace yowo::postprocess
