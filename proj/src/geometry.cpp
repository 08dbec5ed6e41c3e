#include "yowo/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "yowo/error.hpp"

namespace yowo {

double Box::area() const { return std::max(0.0, x2 - x1) * std::max(0.0, y2 - y1); }

double ActionTube::score() const {
    if (members.empty()) return 0.0;
    double total = 0.0;
    for (const auto& m : members) total += m.score;
    return total / static_cast<double>(members.size());
}

const TubeMember* ActionTube::find(int frame) const {
    auto it = std::lower_bound(members.begin(), members.end(), frame,
                               [](const TubeMember& m, int f) { return m.frame < f; });
    return (it != members.end() && it->frame == frame) ? &*it : nullptr;
}

namespace geometry {

namespace {

double intersection_area(const Box& a, const Box& b) {
    const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    return (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
}

}  // namespace

double iou(const Box& a, const Box& b) {
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

double giou(const Box& a, const Box& b) {
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    const double enclosing = (std::max(a.x2, b.x2) - std::min(a.x1, b.x1)) *
                             (std::max(a.y2, b.y2) - std::min(a.y1, b.y1));
    if (enclosing <= 0.0) return 0.0;
    const double overlap = uni > 0.0 ? inter / uni : 0.0;
    // The enclosing box covers the union; rounding can put it a hair below.
    return overlap - std::max(0.0, enclosing - uni) / enclosing;
}

std::array<double, 4> giou_gradient(const Box& p, const Box& t) {
    std::array<double, 4> grad{0.0, 0.0, 0.0, 0.0};
    const double pw = p.x2 - p.x1;
    const double ph = p.y2 - p.y1;
    const double iw = std::min(p.x2, t.x2) - std::max(p.x1, t.x1);
    const double ih = std::min(p.y2, t.y2) - std::max(p.y1, t.y1);
    const bool overlapping = iw > 0.0 && ih > 0.0;
    const double inter = overlapping ? iw * ih : 0.0;
    const double uni = p.area() + t.area() - inter;
    const double cw = std::max(p.x2, t.x2) - std::min(p.x1, t.x1);
    const double ch = std::max(p.y2, t.y2) - std::min(p.y1, t.y1);
    const double enclosing = cw * ch;
    if (enclosing <= 0.0 || uni <= 0.0) return grad;

    // d area(pred), d intersection, d enclosing with respect to (x1, y1, x2, y2).
    const std::array<double, 4> d_area{-ph, -pw, ph, pw};
    std::array<double, 4> d_inter{0.0, 0.0, 0.0, 0.0};
    if (overlapping) {
        if (p.x1 > t.x1) d_inter[0] = -ih;
        if (p.y1 > t.y1) d_inter[1] = -iw;
        if (p.x2 < t.x2) d_inter[2] = ih;
        if (p.y2 < t.y2) d_inter[3] = iw;
    }
    std::array<double, 4> d_enc{0.0, 0.0, 0.0, 0.0};
    if (p.x1 < t.x1) d_enc[0] = -ch;
    if (p.y1 < t.y1) d_enc[1] = -cw;
    if (p.x2 > t.x2) d_enc[2] = ch;
    if (p.y2 > t.y2) d_enc[3] = cw;

    // giou = I/U - 1 + U/C
    for (int k = 0; k < 4; ++k) {
        const double d_uni = d_area[k] - d_inter[k];
        const double d_iou = (d_inter[k] * uni - inter * d_uni) / (uni * uni);
        grad[k] = d_iou + d_uni / enclosing - uni * d_enc[k] / (enclosing * enclosing);
    }
    return grad;
}

Box clamp_to_frame(const Box& box, FrameSize frame) {
    auto clamp = [](double v, double hi) { return std::clamp(v, 0.0, hi); };
    return Box{clamp(box.x1, frame.width), clamp(box.y1, frame.height), clamp(box.x2, frame.width),
               clamp(box.y2, frame.height)};
}

Box decode_offsets(const GridCell& cell, const std::array<double, 4>& raw, std::optional<FrameSize> frame) {
    const double s = cell.stride();
    auto dist = [s](double r) { return std::exp(std::min(r, kMaxLogDistance)) * s; };
    Box box{cell.center_x() - dist(raw[0]), cell.center_y() - dist(raw[1]), cell.center_x() + dist(raw[2]),
            cell.center_y() + dist(raw[3])};
    return frame ? clamp_to_frame(box, *frame) : box;
}

std::array<double, 4> decode_jacobian(const GridCell& cell, const std::array<double, 4>& raw) {
    const double s = cell.stride();
    auto d = [s](double r) { return r > kMaxLogDistance ? 0.0 : std::exp(r) * s; };
    return {-d(raw[0]), -d(raw[1]), d(raw[2]), d(raw[3])};
}

std::array<double, 4> encode_offsets(const GridCell& cell, const Box& box) {
    const double s = cell.stride();
    const double cx = cell.center_x();
    const double cy = cell.center_y();
    require(box.x1 < cx && cx < box.x2 && box.y1 < cy && cy < box.y2,
            "encode_offsets: cell center must lie strictly inside the box");
    return {std::log((cx - box.x1) / s), std::log((cy - box.y1) / s), std::log((box.x2 - cx) / s),
            std::log((box.y2 - cy) / s)};
}

double tube_iou(const ActionTube& a, const ActionTube& b) {
    if (a.members.empty() || b.members.empty()) return 0.0;
    const int start = std::max(a.first_frame(), b.first_frame());
    const int end = std::min(a.last_frame(), b.last_frame());
    if (start > end) return 0.0;
    const int union_span = std::max(a.last_frame(), b.last_frame()) - std::min(a.first_frame(), b.first_frame()) + 1;
    const int inter_span = end - start + 1;
    const double temporal = static_cast<double>(inter_span) / union_span;

    double spatial = 0.0;
    for (int f = start; f <= end; ++f) {
        const auto* ma = a.find(f);
        const auto* mb = b.find(f);
        if (ma && mb) spatial += iou(ma->box, mb->box);
    }
    return temporal * spatial / inter_span;
}

}  // namespace geometry
}  // namespace yowo
