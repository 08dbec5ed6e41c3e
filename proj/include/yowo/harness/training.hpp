#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "yowo/autodiff.hpp"
#include "yowo/harness/config.hpp"
#include "yowo/harness/io.hpp"
#include "yowo/harness/synthetic.hpp"
#include "yowo/model.hpp"

namespace yowo::harness {

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-layer gradient buffers keyed by layer name.
using ModelGradient = std::map<std::string, autodiff::ConvLayerGrad>;

struct SampleLoss {
    loss::LossBreakdown breakdown;
    assignment::AssignmentResult assignment;
};

/// Forward, SimOTA, loss and backward for one clip; adds d total / d params
/// (times `weight`) into `grad`.
SampleLoss accumulate_sample_gradient(const model::YowoModel& model, const SyntheticClip& sample,
                                      const RunConfig& config, ModelGradient& grad, double weight);

/// Loss of one clip under a fixed assignment (no gradient).
loss::LossBreakdown sample_loss(const model::YowoModel& model, const SyntheticClip& sample,
                                const assignment::AssignmentResult& assign, double lambda);

/// AdamW with decoupled weight decay on conv weights (not on bias/affine).
class AdamW {
public:
    explicit AdamW(OptimizerConfig config) : config_(config) {}
    void step(model::YowoModel& model, const ModelGradient& grad, double learning_rate);

private:
    struct Moments {
        std::vector<double> m, v;
    };
    OptimizerConfig config_;
    int t_ = 0;
    std::map<std::string, std::array<Moments, 4>> state_;
};

/// Learning rate at `step`: base rate halved every total_steps/4 steps (four times at most).
double scheduled_learning_rate(const OptimizerConfig& config, int step, int total_steps);

struct TrainResult {
    model::YowoModel model;
    std::vector<LossLogRow> log;
};

/// Runs `steps` optimizer steps over `dataset` in a fixed round-robin order,
/// batch_size clips per step. Throws TrainingDiverged when the total loss
/// exceeds 1e4 or becomes non-finite.
TrainResult train_toy(const RunConfig& config, const std::vector<SyntheticClip>& dataset, int steps);
TrainResult train_toy(const RunConfig& config, const std::vector<SyntheticClip>& dataset, int steps,
                      model::YowoModel initial);

/// Mean total loss over the first / last `window` steps of a log.
double windowed_mean(const std::vector<LossLogRow>& log, std::size_t window, bool from_end);

struct TensorCheck {
    std::string name;  // "layer.tensor"
    std::size_t count = 0;
    std::size_t kink_skipped = 0;  // entries whose +-h evaluations crossed a leaky-relu kink
    double analytic_norm = 0.0;
    double numeric_norm = 0.0;
    double relative_error = 0.0;  // ||a - n|| / max(||a||, ||n||, norm_floor), kink entries excluded
    double max_abs_error = 0.0;
};

struct GradCheckOptions {
    double step = 1e-4;
    /// Norms below this are under finite-difference resolution at step 1e-4
    /// (rounding noise is about 1e-16 * |loss| / step per entry).
    double norm_floor = 1e-6;
};

struct GradCheckReport {
    std::vector<TensorCheck> tensors;
    std::size_t parameters = 0;
    std::size_t kink_skipped = 0;
    double max_relative_error = 0.0;
    std::string worst_tensor;
    std::size_t num_positive = 0;
    double loss = 0.0;
};

/// Central finite differences for every trainable parameter of a freshly
/// initialized model on one synthetic clip, assignment held fixed.
GradCheckReport gradient_check(const RunConfig& config, std::uint64_t seed, const GradCheckOptions& options = {});

}  // namespace yowo::harness
