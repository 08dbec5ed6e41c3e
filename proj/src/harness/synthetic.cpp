#include "yowo/harness/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "yowo/error.hpp"
#include "yowo/rng.hpp"

namespace yowo::harness {

namespace {

constexpr int kPlanHorizon = 32;

struct ObjectPath {
    int class_id;
    int w, h;
    double x0, y0, vx, vy;

    [[nodiscard]] Box box_at(int t) const {
        const double x = std::round(x0 + vx * t);
        const double y = std::round(y0 + vy * t);
        return Box{x, y, x + w, y + h};
    }
};

bool touches(const Box& a, const Box& b) {
    return a.x1 <= b.x2 && b.x1 <= a.x2 && a.y1 <= b.y2 && b.y1 <= a.y2;
}

// Start interval keeping [x0 + v t, x0 + v t + size] inside [0, extent] for t < frames.
std::pair<double, double> start_range(double v, int frames, int size, int extent) {
    const double travel = v * (frames - 1);
    const double range = extent - size;
    return {std::max(0.0, -travel), std::min(range, range - travel)};
}

}  // namespace

std::array<double, 3> class_color(int class_id) {
    static constexpr std::array<std::array<double, 3>, 8> palette{{{0.95, 0.1, 0.1},
                                                                   {0.1, 0.95, 0.1},
                                                                   {0.1, 0.1, 0.95},
                                                                   {0.95, 0.95, 0.1},
                                                                   {0.95, 0.1, 0.95},
                                                                   {0.1, 0.95, 0.95},
                                                                   {0.95, 0.6, 0.1},
                                                                   {0.95, 0.95, 0.95}}};
    if (class_id < static_cast<int>(palette.size())) return palette[class_id];
    // Further classes: distinct hues on a bright ring.
    const double hue = std::fmod(class_id * 0.618033988749895, 1.0) * 2.0 * M_PI;
    return {0.75 + 0.2 * std::cos(hue), 0.75 + 0.2 * std::cos(hue + 2.0944), 0.75 + 0.2 * std::cos(hue + 4.1888)};
}

model::ClipInput SyntheticVideo::clip(int key_frame, int clip_length) const {
    require(key_frame >= 0 && key_frame < static_cast<int>(frames.size()), "SyntheticVideo::clip: key frame out of range");
    model::ClipInput c;
    for (int t = key_frame - clip_length + 1; t <= key_frame; ++t) c.frames.push_back(frames[std::max(t, 0)]);
    return c;
}

SyntheticVideo make_synthetic_video(std::uint64_t seed, const SyntheticSpec& spec, int num_frames, int height,
                                    int width, int num_classes) {
    require(num_frames >= 1 && num_classes >= 1, "make_synthetic_video: need at least one frame and one class");
    require(spec.min_objects >= 0 && spec.min_objects <= spec.max_objects, "make_synthetic_video: bad object count range");
    require(spec.min_size >= 2 && spec.min_size <= spec.max_size, "make_synthetic_video: bad object size range");
    require(spec.max_size <= std::min(height, width), "make_synthetic_video: objects larger than the frame");
    require(spec.noise >= 0.0 && spec.noise < 0.5, "make_synthetic_video: noise must lie in [0, 0.5)");
    require(spec.max_speed >= 0.0, "make_synthetic_video: max_speed must be >= 0");

    // Paths are planned over a fixed horizon so that videos of different
    // lengths from one seed share their first frames.
    const int horizon = std::max(num_frames, kPlanHorizon);
    Rng rng(seed);
    const int count = rng.integer(spec.min_objects, spec.max_objects);
    std::vector<ObjectPath> paths;
    for (int o = 0; o < count; ++o) {
        bool placed = false;
        for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
            ObjectPath p;
            p.class_id = rng.integer(0, num_classes - 1);
            p.w = rng.integer(spec.min_size, spec.max_size);
            p.h = rng.integer(spec.min_size, spec.max_size);
            p.vx = rng.uniform(-spec.max_speed, spec.max_speed);
            p.vy = rng.uniform(-spec.max_speed, spec.max_speed);
            auto [xl, xh] = start_range(p.vx, horizon, p.w, width);
            auto [yl, yh] = start_range(p.vy, horizon, p.h, height);
            if (xl > xh || yl > yh) continue;
            p.x0 = rng.uniform(xl, xh);
            p.y0 = rng.uniform(yl, yh);
            bool clash = false;
            for (const auto& other : paths)
                for (int t = 0; t < horizon && !clash; ++t) clash = touches(p.box_at(t), other.box_at(t));
            if (clash) continue;
            paths.push_back(p);
            placed = true;
        }
        if (!placed) throw ContractViolation("make_synthetic_video: infeasible spec (cannot place objects without overlap)");
    }

    SyntheticVideo video;
    video.video = "synthetic_" + std::to_string(seed);
    for (std::size_t o = 0; o < paths.size(); ++o) {
        ActionTube tube;
        tube.video = video.video;
        tube.class_id = paths[o].class_id;
        video.gt_tubes.push_back(std::move(tube));
    }
    for (int t = 0; t < num_frames; ++t) {
        Rng noise(mix_seed(seed, static_cast<std::uint64_t>(t)));
        numeric::FeatureMap frame(height, width, 3);
        for (double& v : frame.data) v = noise.uniform(0.0, spec.noise);
        std::vector<GroundTruthInstance> gts;
        for (std::size_t o = 0; o < paths.size(); ++o) {
            const auto& p = paths[o];
            const Box box = p.box_at(t);
            const auto color = class_color(p.class_id);
            for (int y = static_cast<int>(box.y1); y < static_cast<int>(box.y2); ++y)
                for (int x = static_cast<int>(box.x1); x < static_cast<int>(box.x2); ++x)
                    for (int c = 0; c < 3; ++c) frame.at(y, x, c) = color[c];
            gts.push_back(GroundTruthInstance{box, {p.class_id}, video.video, t, static_cast<int>(o)});
            video.gt_tubes[o].members.push_back(TubeMember{t, box, 1.0});
        }
        video.frames.push_back(std::move(frame));
        video.frame_gts.push_back(std::move(gts));
    }
    return video;
}

SyntheticClip make_synthetic_clip(std::uint64_t seed, const SyntheticSpec& spec, int clip_length, int height, int width,
                                  int num_classes) {
    auto video = make_synthetic_video(seed, spec, clip_length, height, width, num_classes);
    SyntheticClip clip;
    clip.clip.frames = std::move(video.frames);
    clip.gts = std::move(video.frame_gts.back());
    clip.video = video.video;
    clip.frame = clip_length - 1;
    return clip;
}

std::vector<SyntheticClip> make_dataset(const RunConfig& config) {
    std::vector<SyntheticClip> clips;
    const int size = config.data.frame_size;
    for (int i = 0; i < config.data.num_clips; ++i)
        clips.push_back(make_synthetic_clip(config.data.seed + static_cast<std::uint64_t>(i), config.data.synthetic,
                                            config.model.clip_length, size, size, config.model.num_classes));
    return clips;
}

std::vector<SyntheticVideo> make_videos(const RunConfig& config) {
    std::vector<SyntheticVideo> videos;
    const int size = config.data.frame_size;
    const int length = std::max(config.data.video_length, config.model.clip_length);
    for (int i = 0; i < config.data.num_clips; ++i)
        videos.push_back(make_synthetic_video(config.data.seed + static_cast<std::uint64_t>(i), config.data.synthetic,
                                              length, size, size, config.model.num_classes));
    return videos;
}

}  // namespace yowo::harness
