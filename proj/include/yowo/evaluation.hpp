#pragma once

// Frame mAP and video mAP with greedy score-ordered matching.
// AP is the area under the all-point interpolated precision/recall curve.
// Classes without ground truth are left out of the mean.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "yowo/assignment.hpp"
#include "yowo/geometry.hpp"
#include "yowo/postprocess.hpp"

namespace yowo::evaluation {

struct LedgerEntry {
    double score = 0.0;
    bool true_positive = false;
};

/// Per-class detections in descending score order with their TP/FP flag.
struct MatchLedger {
    std::vector<LedgerEntry> entries;
    std::size_t num_gt = 0;
};

double average_precision(const MatchLedger& ledger);

struct ClassAp {
    int class_id = 0;
    double ap = 0.0;
    std::size_t num_gt = 0;
    std::size_t num_detections = 0;
    std::size_t true_positives = 0;
    bool flagged = false;  // detections present but no ground truth
};

struct MapReport {
    std::string metric;  // "frame_map" or "video_map"
    double iou_threshold = 0.5;
    std::vector<ClassAp> classes;  // ascending class id
    std::optional<double> mean;    // nullopt when no class has ground truth
};

struct FrameMapOptions {
    double iou_threshold = 0.5;
    /// Drop detections on frames that carry no annotation (sparse keyframe
    /// protocols such as 1 Hz labels).
    bool keyframes_only = false;
};

MatchLedger frame_ledger(const std::vector<Detection>& dets, const std::vector<GroundTruthInstance>& gts, int class_id,
                         double iou_threshold);

MapReport frame_map(const std::vector<Detection>& dets, const std::vector<GroundTruthInstance>& gts,
                    const FrameMapOptions& options = {});

MatchLedger video_ledger(const std::vector<ActionTube>& tubes, const std::vector<ActionTube>& gt_tubes, int class_id,
                         double iou_threshold);

MapReport video_map(const std::vector<ActionTube>& tubes, const std::vector<ActionTube>& gt_tubes,
                    double iou_threshold = 0.5);

}  // namespace yowo::evaluation
