#include "yowo/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "yowo/error.hpp"

namespace yowo::assignment {

namespace {

double clamped_bce(double p, double t) {
    p = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
    return -t * std::log(p) - (1.0 - t) * std::log(1.0 - p);
}

}  // namespace

CandidateSet build_candidates(const PredictionSet& preds) {
    CandidateSet set;
    set.num_classes = preds.num_classes;
    const std::size_t n = preds.position_count();
    set.candidates.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Candidate c;
        c.index = i;
        c.cell = preds.cell_of(i);
        c.box = preds.box(i);
        const double conf = preds.confidence(i);
        c.scores.resize(preds.num_classes);
        for (int k = 0; k < preds.num_classes; ++k) c.scores[k] = preds.class_probability(i, k) * conf;
        set.candidates.push_back(std::move(c));
    }
    return set;
}

std::vector<double> multi_hot(const std::vector<int>& labels, int num_classes) {
    std::vector<double> t(num_classes, 0.0);
    for (int l : labels) {
        require(l >= 0 && l < num_classes, "multi_hot: label outside class universe");
        t[l] = 1.0;
    }
    return t;
}

double pair_cost(const Candidate& candidate, const GroundTruthInstance& gt, int num_classes, double gamma) {
    require(gamma > 0.0, "pair_cost: gamma must be positive");
    require(static_cast<int>(candidate.scores.size()) == num_classes, "pair_cost: score vector size != num_classes");
    const auto target = multi_hot(gt.labels, num_classes);
    double cls = 0.0;
    for (int k = 0; k < num_classes; ++k) cls += clamped_bce(candidate.scores[k], target[k]);
    return cls + gamma * (1.0 - geometry::giou(candidate.box, gt.box));
}

std::optional<int> dynamic_k(const std::vector<double>& ious, int q) {
    require(q >= 1, "dynamic_k: q must be >= 1");
    if (ious.empty()) return std::nullopt;
    std::vector<double> sorted = ious;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::size_t take = std::min<std::size_t>(q, sorted.size());
    const double total = std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(take), 0.0);
    const long k = std::lround(total);
    return static_cast<int>(std::clamp<long>(k, 1, static_cast<long>(ious.size())));
}

bool is_eligible(const geometry::GridCell& cell, const Box& gt, double radius) {
    const double cx = cell.center_x();
    const double cy = cell.center_y();
    const bool in_box = gt.x1 < cx && cx < gt.x2 && gt.y1 < cy && cy < gt.y2;
    const double r = radius * cell.stride();
    const bool in_center = std::abs(cx - gt.center_x()) < r && std::abs(cy - gt.center_y()) < r;
    return in_box || in_center;
}

AssignmentResult simota_assign(const CandidateSet& preds, const std::vector<GroundTruthInstance>& gts,
                               const AssignmentConfig& config) {
    const std::size_t n = preds.candidates.size();
    AssignmentResult result;
    result.positions.resize(n);

    // claims[i] = (cost, gt) pairs of every GT that selected candidate i.
    std::vector<std::vector<std::pair<double, std::size_t>>> claims(n);
    for (std::size_t g = 0; g < gts.size(); ++g) {
        const auto& gt = gts[g];
        std::vector<std::size_t> eligible;
        for (std::size_t i = 0; i < n; ++i)
            if (is_eligible(preds.candidates[i].cell, gt.box, config.center_radius)) eligible.push_back(i);
        if (eligible.empty()) {
            result.skipped_gts.push_back(g);
            continue;
        }
        std::vector<double> ious;
        std::vector<double> costs;
        ious.reserve(eligible.size());
        costs.reserve(eligible.size());
        for (std::size_t i : eligible) {
            ious.push_back(geometry::iou(preds.candidates[i].box, gt.box));
            costs.push_back(pair_cost(preds.candidates[i], gt, preds.num_classes, config.gamma));
        }
        const int k = *dynamic_k(ious, config.top_q);

        std::vector<std::size_t> order(eligible.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (costs[a] != costs[b]) return costs[a] < costs[b];
            return eligible[a] < eligible[b];
        });
        for (int j = 0; j < k; ++j) claims[eligible[order[j]]].emplace_back(costs[order[j]], g);
    }

    for (std::size_t i = 0; i < n; ++i) {
        auto& target = result.positions[i];
        if (claims[i].empty()) continue;
        const auto best = *std::min_element(claims[i].begin(), claims[i].end());  // cost, then lower GT index
        const auto& gt = gts[best.second];
        target.positive = true;
        target.gt = best.second;
        target.class_target = multi_hot(gt.labels, preds.num_classes);
        target.box_target = gt.box;
        target.conf_target = 1.0;
        target.cost = best.first;
        ++result.num_positive;
    }
    return result;
}

}  // namespace yowo::assignment
