#include "yowo/harness/training.hpp"

#include <cmath>
#include <numeric>

#include "yowo/error.hpp"
#include "yowo/loss.hpp"
#include "yowo/rng.hpp"

namespace yowo::harness {

namespace {

std::vector<autodiff::Seed> prediction_seeds(const model::ForwardTrace& trace, const PredictionGradient& grad) {
    std::vector<autodiff::Seed> seeds;
    for (int i = 0; i < 3; ++i) {
        seeds.push_back({trace.outputs[i].cls, grad.cls[i]});
        seeds.push_back({trace.outputs[i].reg, grad.reg[i]});
        seeds.push_back({trace.outputs[i].conf, grad.conf[i]});
    }
    return seeds;
}

void add_scaled(std::vector<double>& dst, const std::vector<double>& src, double weight) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += weight * src[i];
}

std::array<std::vector<double>*, 4> tensors_of(numeric::ConvLayer& layer) {
    return {&layer.weights, &layer.bias, &layer.scale, &layer.shift};
}

std::array<const std::vector<double>*, 4> tensors_of(const autodiff::ConvLayerGrad& grad) {
    return {&grad.weights, &grad.bias, &grad.scale, &grad.shift};
}

constexpr std::array<const char*, 4> kTensorNames{"weights", "bias", "scale", "shift"};

double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

SampleLoss accumulate_sample_gradient(const model::YowoModel& model, const SyntheticClip& sample,
                                      const RunConfig& config, ModelGradient& grad, double weight) {
    autodiff::Tape tape;
    const auto trace = model.forward(tape, sample.clip);
    const auto candidates = assignment::build_candidates(trace.predictions);
    auto assign = assignment::simota_assign(candidates, sample.gts, config.assign);
    const auto eval = loss::total_loss_with_gradient(trace.predictions, assign, config.lambda);
    const auto seeds = prediction_seeds(trace, eval.gradient);
    tape.backward(seeds);
    model.for_each_layer([&](const std::string& name, const numeric::ConvLayer& layer) {
        if (!tape.has_layer_gradient(layer)) return;
        auto it = grad.find(name);
        if (it == grad.end()) it = grad.emplace(name, autodiff::ConvLayerGrad(layer)).first;
        const auto& g = tape.layer_gradient(layer);
        add_scaled(it->second.weights, g.weights, weight);
        add_scaled(it->second.bias, g.bias, weight);
        add_scaled(it->second.scale, g.scale, weight);
        add_scaled(it->second.shift, g.shift, weight);
    });
    return {eval.breakdown, std::move(assign)};
}

loss::LossBreakdown sample_loss(const model::YowoModel& model, const SyntheticClip& sample,
                                const assignment::AssignmentResult& assign, double lambda) {
    return loss::total_loss(model.predict(sample.clip), assign, lambda);
}

void AdamW::step(model::YowoModel& model, const ModelGradient& grad, double learning_rate) {
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, t_);
    const double c2 = 1.0 - std::pow(config_.beta2, t_);
    model.visit_layers([&](const std::string& name, numeric::ConvLayer& layer) {
        const auto it = grad.find(name);
        if (it == grad.end()) return;
        auto& state = state_[name];
        const auto params = tensors_of(layer);
        const auto grads = tensors_of(it->second);
        for (int k = 0; k < 4; ++k) {
            auto& p = *params[k];
            const auto& g = *grads[k];
            auto& s = state[k];
            if (s.m.empty()) {
                s.m.assign(p.size(), 0.0);
                s.v.assign(p.size(), 0.0);
            }
            const bool decay = k == 0;
            for (std::size_t i = 0; i < p.size(); ++i) {
                s.m[i] = config_.beta1 * s.m[i] + (1.0 - config_.beta1) * g[i];
                s.v[i] = config_.beta2 * s.v[i] + (1.0 - config_.beta2) * g[i] * g[i];
                const double update = (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + config_.epsilon);
                if (decay) p[i] -= learning_rate * config_.weight_decay * p[i];
                p[i] -= learning_rate * update;
            }
        }
    });
}

double scheduled_learning_rate(const OptimizerConfig& config, int step, int total_steps) {
    if (!config.step_decay || total_steps < 4) return config.learning_rate;
    const int period = total_steps / 4;
    const int halvings = std::min(step / period, 4);
    return config.learning_rate * std::ldexp(1.0, -halvings);
}

TrainResult train_toy(const RunConfig& config, const std::vector<SyntheticClip>& dataset, int steps) {
    return train_toy(config, dataset, steps, model::YowoModel(config.model, config.seed));
}

TrainResult train_toy(const RunConfig& config, const std::vector<SyntheticClip>& dataset, int steps,
                      model::YowoModel initial) {
    require(!dataset.empty(), "train_toy: empty dataset");
    require(steps >= 0, "train_toy: steps must be >= 0");
    config.validate();
    TrainResult result{std::move(initial), {}};
    AdamW optimizer(config.optim);
    const int batch = config.optim.batch_size;
    const double weight = 1.0 / batch;
    for (int step = 0; step < steps; ++step) {
        ModelGradient grad;
        loss::LossBreakdown mean;
        mean.lambda = config.lambda;
        mean.no_positives = true;
        for (int j = 0; j < batch; ++j) {
            const auto& sample = dataset[(static_cast<std::size_t>(step) * batch + j) % dataset.size()];
            const auto s = accumulate_sample_gradient(result.model, sample, config, grad, weight);
            mean.conf += weight * s.breakdown.conf;
            mean.cls += weight * s.breakdown.cls;
            mean.reg += weight * s.breakdown.reg;
            mean.total += weight * s.breakdown.total;
            mean.num_positive += s.breakdown.num_positive;
            mean.no_positives = mean.no_positives && s.breakdown.no_positives;
        }
        if (!std::isfinite(mean.total) || mean.total > 1e4)
            throw TrainingDiverged("training diverged at step " + std::to_string(step) +
                                   " (total loss " + std::to_string(mean.total) + ")");
        optimizer.step(result.model, grad, scheduled_learning_rate(config.optim, step, steps));
        result.log.push_back({step, mean});
    }
    return result;
}

double windowed_mean(const std::vector<LossLogRow>& log, std::size_t window, bool from_end) {
    require(window >= 1 && log.size() >= window, "windowed_mean: log shorter than the window");
    double s = 0.0;
    const std::size_t start = from_end ? log.size() - window : 0;
    for (std::size_t i = start; i < start + window; ++i) s += log[i].loss.total;
    return s / static_cast<double>(window);
}

GradCheckReport gradient_check(const RunConfig& config, std::uint64_t seed, const GradCheckOptions& options) {
    const double h = options.step;
    require(h > 0.0 && options.norm_floor >= 0.0, "gradient_check: step must be positive, floor non-negative");
    model::YowoModel model(config.model, seed);
    const int size = config.data.frame_size;
    const auto sample = make_synthetic_clip(mix_seed(seed, 0x6772616463686bULL), config.data.synthetic,
                                            config.model.clip_length, size, size, config.model.num_classes);

    // Analytic pass; its assignment is then held fixed for the perturbed losses.
    ModelGradient analytic;
    const auto base = accumulate_sample_gradient(model, sample, config, analytic, 1.0);
    const auto& assign = base.assignment;
    std::vector<bool> base_kinks;
    {
        autodiff::Tape tape;
        model.forward(tape, sample.clip);
        base_kinks = tape.kink_pattern();
    }
    const auto probe = [&](bool& crossed) {
        autodiff::Tape tape;
        const auto trace = model.forward(tape, sample.clip);
        crossed = crossed || tape.kink_pattern() != base_kinks;
        return loss::total_loss(trace.predictions, assign, config.lambda).total;
    };

    GradCheckReport report;
    report.num_positive = assign.num_positive;
    report.loss = base.breakdown.total;
    model.visit_layers([&](const std::string& name, numeric::ConvLayer& layer) {
        const auto params = tensors_of(layer);
        const auto it = analytic.find(name);
        for (int k = 0; k < 4; ++k) {
            auto& p = *params[k];
            if (p.empty()) continue;
            const std::vector<double> zeros(p.size(), 0.0);
            const auto& a = it == analytic.end() ? zeros : *tensors_of(it->second)[k];
            TensorCheck check;
            check.name = name + "." + kTensorNames[k];
            check.count = p.size();
            std::vector<double> kept_a, kept_n, diff;
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double saved = p[i];
                bool crossed = false;
                p[i] = saved + h;
                const double up = probe(crossed);
                p[i] = saved - h;
                const double down = probe(crossed);
                p[i] = saved;
                if (crossed) {
                    ++check.kink_skipped;
                    continue;
                }
                const double n = (up - down) / (2.0 * h);
                kept_a.push_back(a[i]);
                kept_n.push_back(n);
                diff.push_back(a[i] - n);
                check.max_abs_error = std::max(check.max_abs_error, std::abs(a[i] - n));
            }
            check.analytic_norm = norm(kept_a);
            check.numeric_norm = norm(kept_n);
            const double scale = std::max({check.analytic_norm, check.numeric_norm, options.norm_floor});
            check.relative_error = scale > 0.0 ? norm(diff) / scale : 0.0;
            report.parameters += p.size();
            report.kink_skipped += check.kink_skipped;
            if (check.relative_error >= report.max_relative_error) {
                report.max_relative_error = check.relative_error;
                report.worst_tensor = check.name;
            }
            report.tensors.push_back(std::move(check));
        }
    });
    return report;
}

}  // namespace yowo::harness
