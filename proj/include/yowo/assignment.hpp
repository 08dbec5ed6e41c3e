#pragma once

// SimOTA dynamic label assignment over all prediction positions of a frame.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "yowo/geometry.hpp"
#include "yowo/predictions.hpp"

namespace yowo {

/// Ground-truth box for one frame with its (possibly multi-label) classes.
struct GroundTruthInstance {
    Box box;
    std::vector<int> labels;
    std::string video;
    int frame = 0;
    int track_id = -1;
    bool operator==(const GroundTruthInstance&) const = default;
};

namespace assignment {

struct Candidate {
    std::size_t index = 0;  // position index within the PredictionSet
    geometry::GridCell cell;
    Box box;
    std::vector<double> scores;  // class probability times confidence
};

struct CandidateSet {
    std::vector<Candidate> candidates;
    int num_classes = 0;
};

/// One candidate per position, scores = cls * conf, boxes decoded unclamped.
CandidateSet build_candidates(const PredictionSet& preds);

struct AssignmentConfig {
    double gamma = 3.0;       // regression cost weight
    int top_q = 10;           // IoU pool size for dynamic k
    double center_radius = 2.5;  // eligibility radius in strides
    bool operator==(const AssignmentConfig&) const = default;
};

struct PositionTarget {
    bool positive = false;
    std::optional<std::size_t> gt;  // index into the GT list
    std::vector<double> class_target;  // multi-hot, empty for negatives
    Box box_target;
    double conf_target = 0.0;
    double cost = 0.0;
};

struct AssignmentResult {
    std::vector<PositionTarget> positions;  // aligned with CandidateSet order
    std::size_t num_positive = 0;
    std::vector<std::size_t> skipped_gts;  // GTs without any eligible candidate
};

inline constexpr double kProbabilityClamp = 1e-7;

/// Sum over classes of BCE(score, target) plus gamma * (1 - GIoU).
double pair_cost(const Candidate& candidate, const GroundTruthInstance& gt, int num_classes, double gamma);

std::vector<double> multi_hot(const std::vector<int>& labels, int num_classes);

/// clamp(round(sum of the top-q IoUs), 1, ious.size()); nullopt when empty.
std::optional<int> dynamic_k(const std::vector<double>& ious, int q);

/// Cell center strictly inside the GT box, or within `radius` strides of the
/// GT center on both axes.
bool is_eligible(const geometry::GridCell& cell, const Box& gt, double radius);

AssignmentResult simota_assign(const CandidateSet& preds, const std::vector<GroundTruthInstance>& gts,
                               const AssignmentConfig& config = {});

}  // namespace assignment
}  // namespace yowo
