#include "yowo/linking.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include "yowo/error.hpp"

namespace yowo::linking {

double link_score(const TubeMember& prev, const Detection& det, double beta) {
    return prev.score + det.score + beta * geometry::iou(prev.box, det.box);
}

std::vector<int> max_weight_matching(const std::vector<std::vector<double>>& weight,
                                     const std::vector<std::vector<bool>>& allowed) {
    const int rows = static_cast<int>(weight.size());
    const int cols = rows == 0 ? 0 : static_cast<int>(weight.front().size());
    std::vector<int> result(rows, -1);
    if (rows == 0 || cols == 0) return result;

    // Hungarian algorithm (potentials), square cost matrix; a disallowed or
    // padded pair costs 0, i.e. the same as leaving it unmatched.
    const int n = std::max(rows, cols);
    auto cost = [&](int r, int c) {
        if (r >= rows || c >= cols || !allowed[r][c]) return 0.0;
        return -weight[r][c];
    };
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    for (int j = 1; j <= n; ++j) {
        const int r = p[j] - 1;
        const int c = j - 1;
        if (r < rows && c < cols && allowed[r][c]) result[r] = c;
    }
    return result;
}

namespace {

// Content-only ordering so results do not depend on input order.
bool canonical_less(const Detection& a, const Detection& b) {
    return std::tie(b.score, a.box.x1, a.box.y1, a.box.x2, a.box.y2) <
           std::tie(a.score, b.box.x1, b.box.y1, b.box.x2, b.box.y2);
}

}  // namespace

std::vector<ActionTube> link(const std::vector<FrameDetections>& frames, int class_id, const LinkConfig& config) {
    require(config.beta >= 0.0, "link: beta must be >= 0");
    require(config.patience >= 0, "link: patience must be >= 0");
    for (std::size_t i = 1; i < frames.size(); ++i)
        require(frames[i - 1].frame < frames[i].frame, "link: frames must be strictly increasing");

    std::vector<ActionTube> tubes;
    for (const auto& fd : frames) {
        std::vector<Detection> dets;
        for (const auto& d : fd.detections)
            if (d.class_id == class_id) dets.push_back(d);
        std::stable_sort(dets.begin(), dets.end(), canonical_less);

        std::vector<std::size_t> live;
        for (std::size_t t = 0; t < tubes.size(); ++t)
            if (fd.frame - tubes[t].last_frame() - 1 <= config.patience) live.push_back(t);

        std::vector<std::vector<double>> weight(live.size(), std::vector<double>(dets.size(), 0.0));
        std::vector<std::vector<bool>> allowed(live.size(), std::vector<bool>(dets.size(), false));
        for (std::size_t r = 0; r < live.size(); ++r) {
            const auto& prev = tubes[live[r]].members.back();
            for (std::size_t c = 0; c < dets.size(); ++c) {
                allowed[r][c] = geometry::iou(prev.box, dets[c].box) > 0.0;
                weight[r][c] = link_score(prev, dets[c], config.beta);
            }
        }
        const auto match = max_weight_matching(weight, allowed);

        std::vector<bool> claimed(dets.size(), false);
        for (std::size_t r = 0; r < live.size(); ++r) {
            if (match[r] < 0) continue;
            const auto& d = dets[match[r]];
            tubes[live[r]].members.push_back(TubeMember{fd.frame, d.box, d.score});
            claimed[match[r]] = true;
        }
        for (std::size_t c = 0; c < dets.size(); ++c) {
            if (claimed[c]) continue;
            ActionTube tube;
            tube.video = dets[c].video;
            tube.class_id = class_id;
            tube.members.push_back(TubeMember{fd.frame, dets[c].box, dets[c].score});
            tubes.push_back(std::move(tube));
        }
    }
    return tubes;
}

std::vector<ActionTube> link_all(const std::vector<FrameDetections>& frames, const LinkConfig& config) {
    std::set<int> classes;
    for (const auto& fd : frames)
        for (const auto& d : fd.detections) classes.insert(d.class_id);
    std::vector<ActionTube> out;
    for (int c : classes) {
        auto tubes = link(frames, c, config);
        out.insert(out.end(), std::make_move_iterator(tubes.begin()), std::make_move_iterator(tubes.end()));
    }
    return out;
}

std::vector<FrameDetections> group_by_frame(const std::vector<Detection>& dets) {
    std::map<int, std::vector<Detection>> by_frame;
    for (const auto& d : dets) by_frame[d.frame].push_back(d);
    std::vector<FrameDetections> out;
    for (auto& [frame, list] : by_frame) out.push_back(FrameDetections{frame, std::move(list)});
    return out;
}

}  // namespace yowo::linking
