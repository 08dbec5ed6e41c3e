#include "yowo/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <utility>

#include "yowo/error.hpp"

namespace yowo::evaluation {

double average_precision(const MatchLedger& ledger) {
    if (ledger.num_gt == 0 || ledger.entries.empty()) return 0.0;
    for (std::size_t i = 1; i < ledger.entries.size(); ++i)
        require(ledger.entries[i - 1].score >= ledger.entries[i].score,
                "average_precision: ledger must be sorted by descending score");

    const std::size_t n = ledger.entries.size();
    std::vector<double> precision(n), recall(n);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (ledger.entries[i].true_positive) ++tp;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
        recall[i] = static_cast<double>(tp) / static_cast<double>(ledger.num_gt);
    }
    for (std::size_t i = n - 1; i-- > 0;) precision[i] = std::max(precision[i], precision[i + 1]);

    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ap += (recall[i] - prev_recall) * precision[i];
        prev_recall = recall[i];
    }
    return ap;
}

namespace {

bool has_label(const GroundTruthInstance& gt, int c) {
    return std::find(gt.labels.begin(), gt.labels.end(), c) != gt.labels.end();
}

template <typename Item>
std::vector<std::size_t> by_descending_score(const std::vector<Item>& items, auto score_of) {
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return score_of(items[a]) > score_of(items[b]); });
    return order;
}

ClassAp summarize(int class_id, const MatchLedger& ledger) {
    ClassAp r;
    r.class_id = class_id;
    r.num_gt = ledger.num_gt;
    r.num_detections = ledger.entries.size();
    r.true_positives = static_cast<std::size_t>(std::count_if(
        ledger.entries.begin(), ledger.entries.end(), [](const LedgerEntry& e) { return e.true_positive; }));
    r.ap = average_precision(ledger);
    r.flagged = ledger.num_gt == 0 && !ledger.entries.empty();
    return r;
}

std::optional<double> mean_over_annotated(const std::vector<ClassAp>& classes) {
    double total = 0.0;
    std::size_t counted = 0;
    for (const auto& c : classes) {
        if (c.num_gt == 0) continue;
        total += c.ap;
        ++counted;
    }
    if (counted == 0) return std::nullopt;
    return total / static_cast<double>(counted);
}

}  // namespace

MatchLedger frame_ledger(const std::vector<Detection>& dets, const std::vector<GroundTruthInstance>& gts, int class_id,
                         double iou_threshold) {
    MatchLedger ledger;
    std::vector<std::size_t> gt_index;
    for (std::size_t g = 0; g < gts.size(); ++g)
        if (has_label(gts[g], class_id)) gt_index.push_back(g);
    ledger.num_gt = gt_index.size();
    std::vector<bool> matched(gts.size(), false);

    std::vector<Detection> own;
    for (const auto& d : dets)
        if (d.class_id == class_id) own.push_back(d);
    for (std::size_t i : by_descending_score(own, [](const Detection& d) { return d.score; })) {
        const auto& d = own[i];
        double best = -1.0;
        std::size_t best_gt = 0;
        for (std::size_t g : gt_index) {
            const auto& gt = gts[g];
            if (matched[g] || gt.video != d.video || gt.frame != d.frame) continue;
            const double overlap = geometry::iou(d.box, gt.box);
            if (overlap >= iou_threshold && overlap > best) {
                best = overlap;
                best_gt = g;
            }
        }
        const bool tp = best >= 0.0;
        if (tp) matched[best_gt] = true;
        ledger.entries.push_back(LedgerEntry{d.score, tp});
    }
    return ledger;
}

MapReport frame_map(const std::vector<Detection>& dets, const std::vector<GroundTruthInstance>& gts,
                    const FrameMapOptions& options) {
    std::vector<Detection> kept;
    if (options.keyframes_only) {
        std::set<std::pair<std::string, int>> annotated;
        for (const auto& gt : gts) annotated.emplace(gt.video, gt.frame);
        for (const auto& d : dets)
            if (annotated.count({d.video, d.frame})) kept.push_back(d);
    } else {
        kept = dets;
    }

    std::set<int> classes;
    for (const auto& d : kept) classes.insert(d.class_id);
    for (const auto& gt : gts) classes.insert(gt.labels.begin(), gt.labels.end());

    MapReport report;
    report.metric = "frame_map";
    report.iou_threshold = options.iou_threshold;
    for (int c : classes) report.classes.push_back(summarize(c, frame_ledger(kept, gts, c, options.iou_threshold)));
    report.mean = mean_over_annotated(report.classes);
    return report;
}

MatchLedger video_ledger(const std::vector<ActionTube>& tubes, const std::vector<ActionTube>& gt_tubes, int class_id,
                         double iou_threshold) {
    MatchLedger ledger;
    std::vector<std::size_t> gt_index;
    for (std::size_t g = 0; g < gt_tubes.size(); ++g)
        if (gt_tubes[g].class_id == class_id) gt_index.push_back(g);
    ledger.num_gt = gt_index.size();
    std::vector<bool> matched(gt_tubes.size(), false);

    std::vector<ActionTube> own;
    for (const auto& t : tubes)
        if (t.class_id == class_id && !t.members.empty()) own.push_back(t);
    for (std::size_t i : by_descending_score(own, [](const ActionTube& t) { return t.score(); })) {
        const auto& t = own[i];
        double best = -1.0;
        std::size_t best_gt = 0;
        for (std::size_t g : gt_index) {
            if (matched[g] || gt_tubes[g].video != t.video) continue;
            const double overlap = geometry::tube_iou(t, gt_tubes[g]);
            if (overlap >= iou_threshold && overlap > best) {
                best = overlap;
                best_gt = g;
            }
        }
        const bool tp = best >= 0.0;
        if (tp) matched[best_gt] = true;
        ledger.entries.push_back(LedgerEntry{t.score(), tp});
    }
    return ledger;
}

MapReport video_map(const std::vector<ActionTube>& tubes, const std::vector<ActionTube>& gt_tubes,
                    double iou_threshold) {
    std::set<int> classes;
    for (const auto& t : tubes) classes.insert(t.class_id);
    for (const auto& t : gt_tubes) classes.insert(t.class_id);
    MapReport report;
    report.metric = "video_map";
    report.iou_threshold = iou_threshold;
    for (int c : classes) report.classes.push_back(summarize(c, video_ledger(tubes, gt_tubes, c, iou_threshold)));
    report.mean = mean_over_annotated(report.classes);
    return report;
}

}  // namespace yowo::evaluation
