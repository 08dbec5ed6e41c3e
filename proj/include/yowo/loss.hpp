#pragma once

#include <cstddef>

#include "yowo/assignment.hpp"
#include "yowo/predictions.hpp"

namespace yowo::loss {

/// Binary cross-entropy with p clamped to [1e-7, 1 - 1e-7].
double bce(double p, double t);
/// d bce / d p; zero where the clamp is active.
double bce_derivative(double p, double t);

struct LossBreakdown {
    double conf = 0.0;
    double cls = 0.0;
    double reg = 0.0;  // unweighted; total adds lambda * reg
    double total = 0.0;
    std::size_t num_positive = 0;
    double lambda = 5.0;
    bool no_positives = false;  // conf normalized by 1, cls and reg forced to 0
};

struct LossEvaluation {
    LossBreakdown breakdown;
    PredictionGradient gradient;
};

/// Detection objective over one frame:
///   conf = sum over every position of BCE(predicted conf, target conf) / N_pos
///   cls  = sum over positives of sum_c BCE(predicted class prob, multi-hot target) / N_pos
///   reg  = sum over positives of (1 - GIoU(decoded predicted box, target box)) / N_pos
///   total = conf + cls + lambda * reg
/// Predictions are the model outputs, targets come from the assignment.
LossBreakdown total_loss(const PredictionSet& preds, const assignment::AssignmentResult& assign, double lambda = 5.0);

/// Same breakdown plus the gradient of `total` with respect to every
/// prediction entry (assignment held fixed).
LossEvaluation total_loss_with_gradient(const PredictionSet& preds, const assignment::AssignmentResult& assign,
                                        double lambda = 5.0);

}  // namespace yowo::loss
