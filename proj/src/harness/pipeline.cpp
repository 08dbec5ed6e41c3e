#include "yowo/harness/pipeline.hpp"

#include <chrono>
#include <sstream>

#include "json.hpp"
#include "yowo/error.hpp"
#include "yowo/harness/io.hpp"
#include "yowo/linking.hpp"

namespace yowo::harness {

std::vector<Detection> detect_clip(const model::YowoModel& model, const model::ClipInput& clip,
                                   const postprocess::PostprocessConfig& post, const std::string& video, int frame) {
    return postprocess::postprocess(model.predict(clip), post, video, frame);
}

std::vector<Detection> detect_dataset(const model::YowoModel& model, const std::vector<SyntheticClip>& dataset,
                                      const postprocess::PostprocessConfig& post) {
    std::vector<Detection> out;
    for (const auto& s : dataset) {
        auto dets = detect_clip(model, s.clip, post, s.video, s.frame);
        out.insert(out.end(), dets.begin(), dets.end());
    }
    return out;
}

std::vector<GroundTruthInstance> dataset_ground_truth(const std::vector<SyntheticClip>& dataset) {
    std::vector<GroundTruthInstance> gts;
    for (const auto& s : dataset) gts.insert(gts.end(), s.gts.begin(), s.gts.end());
    return gts;
}

VideoEvaluation evaluate_videos(const model::YowoModel& model, const std::vector<SyntheticVideo>& videos,
                                const RunConfig& config) {
    VideoEvaluation eval;
    std::vector<GroundTruthInstance> gts;
    std::vector<ActionTube> gt_tubes;
    const int k = config.model.clip_length;
    for (const auto& v : videos) {
        std::vector<Detection> video_dets;
        for (int t = 0; t < static_cast<int>(v.frames.size()); ++t) {
            auto dets = detect_clip(model, v.clip(t, k), config.post, v.video, t);
            video_dets.insert(video_dets.end(), dets.begin(), dets.end());
            gts.insert(gts.end(), v.frame_gts[t].begin(), v.frame_gts[t].end());
        }
        auto tubes = linking::link_all(linking::group_by_frame(video_dets), config.link);
        for (auto& tube : tubes) tube.video = v.video;
        eval.tubes.insert(eval.tubes.end(), tubes.begin(), tubes.end());
        eval.detections.insert(eval.detections.end(), video_dets.begin(), video_dets.end());
        gt_tubes.insert(gt_tubes.end(), v.gt_tubes.begin(), v.gt_tubes.end());
    }
    eval.frame_report = evaluation::frame_map(eval.detections, gts, {config.eval_iou, config.keyframes_only});
    eval.video_report = evaluation::video_map(eval.tubes, gt_tubes, config.eval_iou);
    return eval;
}

OverfitResult run_overfit(const RunConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    const auto dataset = make_dataset(config);
    OverfitResult r{train_toy(config, dataset, config.steps), {}, {}, 0.0, 0.0, 0.0};
    const std::size_t window = std::min<std::size_t>(10, r.training.log.size());
    if (window > 0) {
        r.first_window = windowed_mean(r.training.log, window, false);
        r.last_window = windowed_mean(r.training.log, window, true);
    }
    r.train_frame_report = evaluation::frame_map(detect_dataset(r.training.model, dataset, config.post),
                                                 dataset_ground_truth(dataset), {config.eval_iou, false});
    r.videos = evaluate_videos(r.training.model, make_videos(config), config);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

LambdaSweep sweep_lambda(const RunConfig& config, const std::vector<double>& lambdas, int train_steps) {
    require(!lambdas.empty(), "sweep_lambda: no lambda values");
    const auto dataset = make_dataset(config);
    const model::YowoModel probe_model(config.model, config.seed);
    // One assignment for every row, so only lambda varies at the probe.
    const auto preds = probe_model.predict(dataset.front().clip);
    const auto assign =
        assignment::simota_assign(assignment::build_candidates(preds), dataset.front().gts, config.assign);

    LambdaSweep sweep;
    sweep.linear = true;
    std::vector<double> probe_terms;
    for (double lambda : lambdas) {
        require(lambda >= 0.0, "sweep_lambda: lambda must be >= 0");
        LambdaRow row;
        row.lambda = lambda;
        const auto b = loss::total_loss(preds, assign, lambda);
        row.reg = b.reg;
        row.weighted_reg = lambda * b.reg;
        row.total = b.total;
        // Exact: the unweighted terms may not move with lambda at all.
        const bool unchanged = probe_terms.empty() || (probe_terms[0] == b.conf && probe_terms[1] == b.cls &&
                                                       probe_terms[2] == b.reg);
        if (probe_terms.empty()) probe_terms = {b.conf, b.cls, b.reg};
        sweep.linear = sweep.linear && unchanged && b.total == b.conf + b.cls + lambda * b.reg;
        if (train_steps > 0) {
            RunConfig run = config;
            run.lambda = lambda;
            const auto trained = train_toy(run, dataset, train_steps);
            row.trained_final_loss = trained.log.back().loss.total;
            const auto eval = evaluate_videos(trained.model, make_videos(run), run);
            row.frame_map = eval.frame_report.mean;
            row.video_map = eval.video_report.mean;
        }
        sweep.rows.push_back(row);
    }
    return sweep;
}

std::vector<HeadAblationRow> ablate_head(const RunConfig& config) {
    std::vector<HeadAblationRow> rows;
    for (auto head : {model::HeadVariant::decoupled, model::HeadVariant::coupled}) {
        RunConfig run = config;
        run.model.head = head;
        const auto r = run_overfit(run);
        HeadAblationRow row;
        row.head = head;
        row.parameters = r.training.model.parameter_count();
        row.first_window = r.first_window;
        row.last_window = r.last_window;
        row.train_frame_report = r.train_frame_report;
        row.frame_report = r.videos.frame_report;
        row.video_report = r.videos.video_report;
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::string optional_number(const std::optional<double>& v) {
    if (!v) return "undefined";
    std::ostringstream s;
    s.precision(17);
    s << *v;
    return s.str();
}

}  // namespace

std::string lambda_sweep_to_csv(const LambdaSweep& sweep) {
    std::ostringstream out;
    out.precision(17);
    out << "lambda,reg,weighted_reg,total,trained_final_loss,frame_map,video_map\n";
    for (const auto& r : sweep.rows)
        out << r.lambda << ',' << r.reg << ',' << r.weighted_reg << ',' << r.total << ',' << r.trained_final_loss << ','
            << optional_number(r.frame_map) << ',' << optional_number(r.video_map) << '\n';
    return out.str();
}

std::string head_ablation_to_json(const std::vector<HeadAblationRow>& rows) {
    auto arr = nlohmann::json::array();
    for (const auto& r : rows) {
        arr.push_back({{"head", model::to_string(r.head)},
                       {"parameters", r.parameters},
                       {"first_window_loss", r.first_window},
                       {"last_window_loss", r.last_window},
                       {"train_frame_map", nlohmann::json::parse(report_to_json(r.train_frame_report))},
                       {"frame_map", nlohmann::json::parse(report_to_json(r.frame_report))},
                       {"video_map", nlohmann::json::parse(report_to_json(r.video_report))}});
    }
    return arr.dump(2);
}

}  // namespace yowo::harness
