#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "yowo/assignment.hpp"
#include "yowo/harness/config.hpp"
#include "yowo/model.hpp"

namespace yowo::harness {

/// Colored rectangles moving linearly over a noise background. Object pixels
/// carry the exact class color; background values stay below 0.5 in every
/// channel, so each box is recoverable from the pixels.
struct SyntheticVideo {
    std::string video;
    std::vector<numeric::FeatureMap> frames;
    std::vector<std::vector<GroundTruthInstance>> frame_gts;  // per frame
    std::vector<ActionTube> gt_tubes;

    /// The K frames ending at `key_frame`.
    [[nodiscard]] model::ClipInput clip(int key_frame, int clip_length) const;
};

std::array<double, 3> class_color(int class_id);

/// Deterministic per seed; frame t depends only on (seed, t) and the object
/// paths, so a longer video extends a shorter one with the same seed.
SyntheticVideo make_synthetic_video(std::uint64_t seed, const SyntheticSpec& spec, int num_frames, int height,
                                    int width, int num_classes);

struct SyntheticClip {
    model::ClipInput clip;
    std::vector<GroundTruthInstance> gts;  // key frame ground truth
    std::string video;
    int frame = 0;
};

SyntheticClip make_synthetic_clip(std::uint64_t seed, const SyntheticSpec& spec, int clip_length, int height, int width,
                                  int num_classes);

/// Training clips for `config.data` (clip i uses seed data.seed + i).
std::vector<SyntheticClip> make_dataset(const RunConfig& config);
/// Evaluation videos extending the training clips to data.video_length frames.
std::vector<SyntheticVideo> make_videos(const RunConfig& config);

}  // namespace yowo::harness
