#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace yowo {

/// Axis-aligned box in pixels, (x1, y1) top-left and (x2, y2) bottom-right.
struct Box {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    [[nodiscard]] double width() const { return x2 - x1; }
    [[nodiscard]] double height() const { return y2 - y1; }
    [[nodiscard]] double area() const;
    [[nodiscard]] bool valid() const { return x1 <= x2 && y1 <= y2; }
    [[nodiscard]] double center_x() const { return 0.5 * (x1 + x2); }
    [[nodiscard]] double center_y() const { return 0.5 * (y1 + y2); }
    bool operator==(const Box&) const = default;
};

struct TubeMember {
    int frame = 0;
    Box box;
    double score = 0.0;
    bool operator==(const TubeMember&) const = default;
};

/// Per-class chain of boxes over strictly increasing frames.
struct ActionTube {
    std::string video;
    int class_id = 0;
    std::vector<TubeMember> members;

    /// Mean of member scores.
    [[nodiscard]] double score() const;
    [[nodiscard]] int first_frame() const { return members.front().frame; }
    [[nodiscard]] int last_frame() const { return members.back().frame; }
    [[nodiscard]] const TubeMember* find(int frame) const;
    bool operator==(const ActionTube&) const = default;
};

namespace geometry {

inline constexpr std::array<int, 3> kStrides = {8, 16, 32};

/// A prediction position on pyramid level `level` (0-based: strides 8, 16, 32).
struct GridCell {
    int level = 0;
    int x = 0;
    int y = 0;

    [[nodiscard]] int stride() const { return kStrides.at(level); }
    [[nodiscard]] double center_x() const { return (x + 0.5) * stride(); }
    [[nodiscard]] double center_y() const { return (y + 0.5) * stride(); }
};

struct FrameSize {
    double width = 0.0;
    double height = 0.0;
};

double iou(const Box& a, const Box& b);
double giou(const Box& a, const Box& b);

/// d giou(pred, target) / d(pred.x1, pred.y1, pred.x2, pred.y2).
std::array<double, 4> giou_gradient(const Box& pred, const Box& target);

/// Raw offsets are log-distances (left, top, right, bottom) in stride units
/// measured from the cell center. Exponents are capped at kMaxLogDistance.
inline constexpr double kMaxLogDistance = 20.0;
Box decode_offsets(const GridCell& cell, const std::array<double, 4>& raw,
                   std::optional<FrameSize> frame = std::nullopt);

/// d(x1, y1, x2, y2) / d raw; the Jacobian is diagonal.
std::array<double, 4> decode_jacobian(const GridCell& cell, const std::array<double, 4>& raw);

/// Inverse of decode_offsets; the cell center must lie strictly inside `box`.
std::array<double, 4> encode_offsets(const GridCell& cell, const Box& box);

Box clamp_to_frame(const Box& box, FrameSize frame);

/// Temporal IoU of the frame spans times the mean per-frame box IoU over the
/// span intersection (a frame missing from either tube contributes 0).
double tube_iou(const ActionTube& a, const ActionTube& b);

}  // namespace geometry
}  // namespace yowo
