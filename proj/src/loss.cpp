#include "yowo/loss.hpp"

#include <algorithm>
#include <cmath>

#include "yowo/error.hpp"

namespace yowo::loss {

using assignment::kProbabilityClamp;

double bce(double p, double t) {
    p = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
    return -t * std::log(p) - (1.0 - t) * std::log(1.0 - p);
}

double bce_derivative(double p, double t) {
    if (p < kProbabilityClamp || p > 1.0 - kProbabilityClamp) return 0.0;
    return -t / p + (1.0 - t) / (1.0 - p);
}

namespace {

LossEvaluation evaluate(const PredictionSet& preds, const assignment::AssignmentResult& assign, double lambda,
                        bool with_gradient) {
    const std::size_t n = preds.position_count();
    require(assign.positions.size() == n, "total_loss: assignment does not cover every prediction position");
    LossEvaluation out;
    if (with_gradient) out.gradient = PredictionGradient::zeros_like(preds);
    auto& b = out.breakdown;
    b.lambda = lambda;
    b.num_positive = assign.num_positive;
    b.no_positives = assign.num_positive == 0;
    const double norm = b.no_positives ? 1.0 : 1.0 / static_cast<double>(assign.num_positive);

    for (std::size_t i = 0; i < n; ++i) {
        const auto cell = preds.cell_of(i);
        const auto& lv = preds.levels[cell.level];
        const auto& target = assign.positions[i];

        const double conf = lv.conf.at(cell.y, cell.x, 0);
        b.conf += bce(conf, target.conf_target);
        if (with_gradient)
            out.gradient.conf[cell.level].at(cell.y, cell.x, 0) = bce_derivative(conf, target.conf_target) * norm;

        if (!target.positive || b.no_positives) continue;

        for (int k = 0; k < preds.num_classes; ++k) {
            const double p = lv.cls.at(cell.y, cell.x, k);
            b.cls += bce(p, target.class_target[k]);
            if (with_gradient)
                out.gradient.cls[cell.level].at(cell.y, cell.x, k) = bce_derivative(p, target.class_target[k]) * norm;
        }

        const auto raw = preds.raw_offsets(i);
        const Box box = geometry::decode_offsets(cell, raw);
        b.reg += 1.0 - geometry::giou(box, target.box_target);
        if (with_gradient) {
            const auto dg = geometry::giou_gradient(box, target.box_target);
            const auto jac = geometry::decode_jacobian(cell, raw);
            for (int k = 0; k < 4; ++k)
                out.gradient.reg[cell.level].at(cell.y, cell.x, k) = -dg[k] * jac[k] * lambda * norm;
        }
    }
    b.conf *= norm;
    b.cls *= norm;
    b.reg *= norm;
    b.total = b.conf + b.cls + lambda * b.reg;
    return out;
}

}  // namespace

LossBreakdown total_loss(const PredictionSet& preds, const assignment::AssignmentResult& assign, double lambda) {
    return evaluate(preds, assign, lambda, false).breakdown;
}

LossEvaluation total_loss_with_gradient(const PredictionSet& preds, const assignment::AssignmentResult& assign,
                                        double lambda) {
    return evaluate(preds, assign, lambda, true);
}

}  // namespace yowo::loss
