#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "yowo/assignment.hpp"
#include "yowo/linking.hpp"
#include "yowo/model.hpp"
#include "yowo/postprocess.hpp"

namespace yowo::harness {

struct OptimizerConfig {
    double learning_rate = 1e-4;
    double weight_decay = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 2;
    /// Halve the learning rate four times, every steps/4 steps.
    bool step_decay = true;
    bool operator==(const OptimizerConfig&) const = default;
};

struct SyntheticSpec {
    int min_objects = 1;
    int max_objects = 2;
    int min_size = 12;  // pixels
    int max_size = 28;
    double max_speed = 1.0;  // pixels per frame on each axis
    double noise = 0.25;     // background amplitude
    bool operator==(const SyntheticSpec&) const = default;
};

struct DataConfig {
    int frame_size = 224;  // square frames
    int num_clips = 8;
    std::uint64_t seed = 1;
    int video_length = 0;  // frames per evaluation video; 0 means clip_length
    SyntheticSpec synthetic;
    bool operator==(const DataConfig&) const = default;
};

struct RunConfig {
    model::ModelConfig model;
    assignment::AssignmentConfig assign;
    double lambda = 5.0;
    postprocess::PostprocessConfig post;
    linking::LinkConfig link;
    double eval_iou = 0.5;
    bool keyframes_only = false;
    OptimizerConfig optim;
    DataConfig data;
    int steps = 500;
    std::uint64_t seed = 0;  // weight initialization
    std::string output_dir = "runs/toy";

    /// Desk-scale overfit preset: 64x64 frames, K = 4, two classes, narrow layers.
    static RunConfig toy();
    /// Tiny variant used by the gradient check (32x32, K = 4).
    static RunConfig gradcheck();
    void validate() const;
    bool operator==(const RunConfig&) const = default;
};

/// TOML-style text: `[section]` headers, `key = value` lines, `#` comments.
/// Unknown keys are rejected so typos do not pass silently.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& config);
void save_config(const RunConfig& config, const std::string& path);

}  // namespace yowo::harness
