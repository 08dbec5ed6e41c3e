#pragma once

// End-to-end runs built from the modules: detect -> link -> evaluate, the
// overfit experiment and the two ablation harnesses.

#include <optional>
#include <string>
#include <vector>

#include "yowo/evaluation.hpp"
#include "yowo/harness/training.hpp"

namespace yowo::harness {

std::vector<Detection> detect_clip(const model::YowoModel& model, const model::ClipInput& clip,
                                   const postprocess::PostprocessConfig& post, const std::string& video, int frame);

/// Key-frame detections of every clip, in dataset order.
std::vector<Detection> detect_dataset(const model::YowoModel& model, const std::vector<SyntheticClip>& dataset,
                                      const postprocess::PostprocessConfig& post);

std::vector<GroundTruthInstance> dataset_ground_truth(const std::vector<SyntheticClip>& dataset);

struct VideoEvaluation {
    std::vector<Detection> detections;  // every frame of every video
    std::vector<ActionTube> tubes;
    evaluation::MapReport frame_report;
    evaluation::MapReport video_report;
};

/// Detects on every frame (clip = K frames ending there), links per video and
/// scores both protocols against the rendered ground truth.
VideoEvaluation evaluate_videos(const model::YowoModel& model, const std::vector<SyntheticVideo>& videos,
                                const RunConfig& config);

struct OverfitResult {
    TrainResult training;
    evaluation::MapReport train_frame_report;  // key frames of the training clips
    VideoEvaluation videos;
    double first_window = 0.0;  // mean total loss over the first 10 steps
    double last_window = 0.0;   // and over the last 10
    double seconds = 0.0;
};

/// Trains on make_dataset(config) for config.steps and evaluates.
OverfitResult run_overfit(const RunConfig& config);

struct LambdaRow {
    double lambda = 0.0;
    double reg = 0.0;           // unweighted regression term at the probe point
    double weighted_reg = 0.0;  // lambda * reg as it enters the total
    double total = 0.0;
    double trained_final_loss = 0.0;
    std::optional<double> frame_map;
    std::optional<double> video_map;
};

struct LambdaSweep {
    std::vector<LambdaRow> rows;
    bool linear = false;  // weighted_reg == lambda * reg at one fixed probe, for every row
};

/// For each lambda: the loss breakdown at a fixed probe (initial weights,
/// first clip, fixed assignment) and, when `train_steps` > 0, a short
/// training run with its metrics.
LambdaSweep sweep_lambda(const RunConfig& config, const std::vector<double>& lambdas, int train_steps);

struct HeadAblationRow {
    model::HeadVariant head = model::HeadVariant::decoupled;
    std::size_t parameters = 0;
    double first_window = 0.0;
    double last_window = 0.0;
    evaluation::MapReport train_frame_report;
    evaluation::MapReport frame_report;
    evaluation::MapReport video_report;
};

std::vector<HeadAblationRow> ablate_head(const RunConfig& config);

std::string lambda_sweep_to_csv(const LambdaSweep& sweep);
std::string head_ablation_to_json(const std::vector<HeadAblationRow>& rows);

}  // namespace yowo::harness
