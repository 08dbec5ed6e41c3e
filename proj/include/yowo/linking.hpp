#pragma once

// Frame-by-frame tube building. At every frame the live tubes of a class are
// matched to that frame's detections by the matching that maximizes the total
// link score  s(prev, d) = score(prev) + score(d) + beta * IoU(prev, d),
// with pairs of zero IoU not allowed. Unmatched detections open new tubes;
// a tube not extended for more than `patience` frames is closed.

#include <vector>

#include "yowo/geometry.hpp"
#include "yowo/postprocess.hpp"

namespace yowo::linking {

struct FrameDetections {
    int frame = 0;
    std::vector<Detection> detections;
};

struct LinkConfig {
    double beta = 1.0;
    int patience = 2;
    bool operator==(const LinkConfig&) const = default;
};

double link_score(const TubeMember& prev, const Detection& det, double beta);

/// Tubes of one class. `frames` must be in strictly increasing frame order;
/// detections of other classes are ignored.
std::vector<ActionTube> link(const std::vector<FrameDetections>& frames, int class_id, const LinkConfig& config = {});

/// Links every class present, tubes ordered by class then creation.
std::vector<ActionTube> link_all(const std::vector<FrameDetections>& frames, const LinkConfig& config = {});

/// Groups a flat detection list of one video into FrameDetections by frame.
std::vector<FrameDetections> group_by_frame(const std::vector<Detection>& dets);

/// Rectangular assignment maximizing the total weight over allowed pairs.
/// Returns for each row the matched column or -1.
std::vector<int> max_weight_matching(const std::vector<std::vector<double>>& weight,
                                     const std::vector<std::vector<bool>>& allowed);

}  // namespace yowo::linking
