#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "selftest.hpp"
#include "yowo/error.hpp"
#include "yowo/harness/checkpoint.hpp"
#include "yowo/harness/config.hpp"
#include "yowo/harness/io.hpp"
#include "yowo/harness/pipeline.hpp"
#include "yowo/harness/synthetic.hpp"
#include "yowo/harness/training.hpp"

namespace yowo::cli {

namespace {

namespace fs = std::filesystem;
using harness::RunConfig;
using json = nlohmann::json;

// A failed check or rejected input, as opposed to a malformed command line.
struct ValidationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string mean_text(const std::optional<double>& v) {
    if (!v) return "undefined";
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << *v;
    return s.str();
}

void print_map_report(std::ostream& out, const evaluation::MapReport& r) {
    out << r.metric << " @ IoU " << r.iou_threshold << '\n';
    out << "  class        AP   num_gt  dets    tp\n";
    for (const auto& c : r.classes) {
        out << "  " << std::setw(5) << c.class_id << "  " << std::fixed << std::setprecision(4) << std::setw(8) << c.ap
            << std::defaultfloat << "  " << std::setw(6) << c.num_gt << "  " << std::setw(4) << c.num_detections << "  "
            << std::setw(4) << c.true_positives << (c.flagged ? "  (no ground truth)" : "") << '\n';
    }
    out << "  mean " << mean_text(r.mean) << '\n';
}

void write_report_files(const evaluation::MapReport& r, const std::string& json_path, const std::string& csv_path) {
    if (!json_path.empty()) harness::write_file(json_path, harness::report_to_json(r));
    if (!csv_path.empty()) harness::write_file(csv_path, harness::report_to_csv(r));
}

/// Loaded config file (or the toy preset) with command-line overrides applied.
struct ConfigArgs {
    std::string path;
    std::optional<std::uint64_t> seed;
    std::optional<int> steps;
    std::optional<std::string> head;

    void add(CLI::App* cmd, bool with_steps = true) {
        cmd->add_option("--config", path, "Run config file (TOML-style); defaults to the toy preset")
            ->check(CLI::ExistingFile);
        cmd->add_option("--seed", seed, "Weight-initialization seed");
        if (with_steps) cmd->add_option("--steps", steps, "Optimizer steps")->check(CLI::NonNegativeNumber);
        cmd->add_option("--head", head, "Fusion head variant")->check(CLI::IsMember({"decoupled", "coupled"}));
    }

    [[nodiscard]] RunConfig resolve(RunConfig fallback = RunConfig::toy()) const {
        RunConfig c = path.empty() ? fallback : harness::load_config(path);
        if (seed) c.seed = *seed;
        if (steps) c.steps = *steps;
        if (head) c.model.head = model::head_variant_from_string(*head);
        c.validate();
        return c;
    }
};

std::vector<Detection> read_detections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationFailure("cannot open " + path);
    return harness::read_detections_jsonl(in);
}

void emit(std::ostream& out, const std::string& path, const std::string& text) {
    if (path.empty() || path == "-")
        out << text;
    else
        harness::write_file(path, text);
}

// ---- subcommands ----

struct ForwardDemo {
    int size = 224;
    int classes = 24;
    int clip_length = 16;
    std::string head = "decoupled";
    std::uint64_t seed = 0;

    void add(CLI::App& app, std::function<int()>& action, std::ostream& out) {
        auto* cmd = app.add_subcommand("forward-demo", "Run one forward pass and print the per-level output shapes");
        cmd->add_option("--size", size, "Square frame size (multiple of 32)")->check(CLI::PositiveNumber);
        cmd->add_option("--classes", classes, "Number of action classes")->check(CLI::PositiveNumber);
        cmd->add_option("--clip-length", clip_length, "Frames per clip")->check(CLI::PositiveNumber);
        cmd->add_option("--head", head, "Fusion head variant")->check(CLI::IsMember({"decoupled", "coupled"}));
        cmd->add_option("--seed", seed, "Input and weight seed");
        cmd->callback([this, &action, &out] { action = [this, &out] { return run(out); }; });
    }

    int run(std::ostream& out) const {
        model::ModelConfig mc = model::ModelConfig::toy();
        mc.num_classes = classes;
        mc.clip_length = clip_length;
        mc.head = model::head_variant_from_string(head);
        const model::YowoModel net(mc, seed);
        const auto clip = harness::make_synthetic_clip(seed, harness::SyntheticSpec{}, clip_length, size, size, classes);
        const auto start = std::chrono::steady_clock::now();
        const auto preds = net.predict(clip.clip);
        const double elapsed = seconds_since(start);

        bool ok = true;
        out << "input " << size << "x" << size << "x3, K = " << clip_length << ", classes = " << classes << ", head "
            << head << '\n';
        out << "level  stride  grid     cls           reg          conf\n";
        const auto dims = [](const numeric::FeatureMap& m) {
            return std::to_string(m.height) + "x" + std::to_string(m.width) + "x" + std::to_string(m.channels);
        };
        for (int l = 0; l < 3; ++l) {
            const auto& lv = preds.levels[l];
            const int expect = size / geometry::kStrides[l];
            ok = ok && lv.stride == geometry::kStrides[l] && lv.cls.height == expect && lv.cls.width == expect &&
                 lv.cls.channels == classes && lv.reg.height == expect && lv.reg.channels == 4 &&
                 lv.conf.height == expect && lv.conf.channels == 1;
            out << std::left << std::setw(7) << l << std::setw(8) << lv.stride << std::setw(9)
                << (std::to_string(lv.cls.height) + "x" + std::to_string(lv.cls.width)) << std::setw(14)
                << dims(lv.cls) << std::setw(13) << dims(lv.reg) << dims(lv.conf) << std::right << '\n';
        }
        out << "positions " << preds.position_count() << ", parameters " << net.parameter_count() << ", forward "
            << std::fixed << std::setprecision(3) << elapsed << " s" << std::defaultfloat << '\n';
        if (!ok) throw ValidationFailure("output shapes do not match size / stride");
        return kExitOk;
    }
};

struct GradCheck {
    ConfigArgs config;
    int seeds = 5;
    std::uint64_t first_seed = 0;
    double step = 1e-4;
    double tolerance = 1e-3;
    bool verbose = false;

    void add(CLI::App& app, std::function<int()>& action, std::ostream& out) {
        auto* cmd = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients of the toy model");
        config.add(cmd, false);
        cmd->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
        cmd->add_option("--first-seed", first_seed, "First seed");
        cmd->add_option("--step", step, "Central-difference step")->check(CLI::PositiveNumber);
        cmd->add_option("--tolerance", tolerance, "Maximum relative error")->check(CLI::PositiveNumber);
        cmd->add_flag("--verbose,-v", verbose, "Print every tensor");
        cmd->callback([this, &action, &out] { action = [this, &out] { return run(out); }; });
    }

    int run(std::ostream& out) const {
        const RunConfig cfg = config.resolve(RunConfig::gradcheck());
        double worst = 0.0;
        for (int i = 0; i < seeds; ++i) {
            const auto s = first_seed + static_cast<std::uint64_t>(i);
            const auto start = std::chrono::steady_clock::now();
            const auto r = harness::gradient_check(cfg, s, {step, 1e-6});
            worst = std::max(worst, r.max_relative_error);
            out << "seed " << s << "  parameters " << r.parameters << "  positives " << r.num_positive
                << "  max rel error " << std::scientific << std::setprecision(3) << r.max_relative_error
                << std::defaultfloat << " (" << r.worst_tensor << ")  kink-skipped " << r.kink_skipped << "  "
                << std::fixed << std::setprecision(1) << seconds_since(start) << " s" << std::defaultfloat << '\n';
            if (verbose)
                for (const auto& t : r.tensors)
                    out << "    " << std::left << std::setw(36) << t.name << std::right << std::setw(7) << t.count
                        << "  " << std::scientific << std::setprecision(3) << t.relative_error << "  |g| "
                        << t.analytic_norm << std::defaultfloat << '\n';
        }
        out << (worst < tolerance ? "PASS" : "FAIL") << " max relative error " << std::scientific
            << std::setprecision(3) << worst << " (tolerance " << tolerance << ")" << std::defaultfloat << '\n';
        return worst < tolerance ? kExitOk : kExitValidation;
    }
};

struct Assign {
    ConfigArgs config;
    std::string checkpoint;
    int clip = 0;
    std::string output;

    void add(CLI::App& app, std::function<int()>& action, std::ostream& out) {
        auto* cmd = app.add_subcommand("assign", "Dump the SimOTA assignment of one training clip as JSON");
        config.add(cmd, false);
        cmd->add_option("--checkpoint", checkpoint, "Model checkpoint (default: fresh initialization)")
            ->check(CLI::ExistingFile);
        cmd->add_option("--clip", clip, "Training clip index")->check(CLI::NonNegativeNumber);
        cmd->add_option("--output,-o", output, "Output file (default stdout)");
        cmd->callback([this, &action, &out] { action = [this, &out] { return run(out); }; });
    }

    int run(std::ostream& out) const {
        RunConfig cfg = config.resolve();
        std::optional<model::YowoModel> net;
        if (!checkpoint.empty()) {
            net.emplace(harness::load_checkpoint(checkpoint));
            cfg.model = net->config();
        } else {
            net.emplace(cfg.model, cfg.seed);
        }
        const auto dataset = harness::make_dataset(cfg);
        if (clip >= static_cast<int>(dataset.size()))
            throw ValidationFailure("clip index " + std::to_string(clip) + " outside the dataset");
        const auto& sample = dataset[static_cast<std::size_t>(clip)];
        const auto preds = net->predict(sample.clip);
        const auto result = assignment::simota_assign(assignment::build_candidates(preds), sample.gts, cfg.assign);

        json doc{{"video", sample.video}, {"frame", sample.frame}, {"num_positive", result.num_positive},
                 {"skipped_gts", result.skipped_gts}};
        auto gts = json::array();
        for (const auto& g : sample.gts) gts.push_back({{"box", {g.box.x1, g.box.y1, g.box.x2, g.box.y2}}, {"labels", g.labels}});
        doc["gts"] = gts;
        auto positives = json::array();
        for (std::size_t p = 0; p < result.positions.size(); ++p) {
            const auto& t = result.positions[p];
            if (!t.positive) continue;
            const auto cell = preds.cell_of(p);
            positives.push_back({{"position", p},
                                 {"level", cell.level},
                                 {"x", cell.x},
                                 {"y", cell.y},
                                 {"gt", *t.gt},
                                 {"cost", t.cost},
                                 {"iou", geometry::iou(preds.box(p), t.box_target)}});
        }
        doc["positives"] = positives;
        emit(out, output, doc.dump(2) + "\n");
        return kExitOk;
    }
};

struct TrainToy {
    ConfigArgs config;
    std::string output_dir;

    void add(CLI::App& app, std::function<int()>& action, std::ostream& out) {
        auto* cmd = app.add_subcommand("train-toy", "Train on synthetic clips and write checkpoint, loss log and reports");
        config.add(cmd);
        cmd->add_option("--output-dir,-o", output_dir, "Run directory (default: config output_dir)");
        cmd->callback([this, &action, &out] { action = [this, &out] { return run(out); }; });
    }

    int run(std::ostream& out) const {
        const RunConfig cfg = config.resolve();
        const fs::path dir = output_dir.empty() ? fs::path(cfg.output_dir) : fs::path(output_dir);
        fs::create_directories(dir);
        spdlog::info("training {} steps on {} clips, head {}", cfg.steps, cfg.data.num_clips, model::to_string(cfg.model.head));
        const auto r = harness::run_overfit(cfg);  // divergence surfaces as exit 1
        harness::save_config(cfg, (dir / "config.toml").string());
        harness::save_checkpoint(r.training.model, (dir / "checkpoint.json").string());
        {
            std::ofstream log(dir / "loss_log.csv");
            harness::write_loss_log_csv(log, r.training.log);
        }
        write_report_files(r.train_frame_report, (dir / "train_frame_map.json").string(), "");
        write_report_files(r.videos.frame_report, (dir / "frame_map.json").string(), (dir / "frame_map.csv").string());
        write_report_files(r.videos.video_report, (dir / "video_map.json").string(), (dir / "video_map.csv").string());
        harness::write_file((dir / "tubes.json").string(), harness::tubes_to_json(r.videos.tubes));

        out << "steps " << r.training.log.size() << ", parameters " << r.training.model.parameter_count() << '\n';
        out << "loss first-10 mean " << r.first_window << ", last-10 mean " << r.last_window << " (ratio "
            << (r.first_window > 0 ? r.last_window / r.first_window : 0.0) << ")\n";
        out << "train-clip frame mAP " << mean_text(r.train_frame_report.mean) << '\n';
        out << "video frame mAP " << mean_text(r.videos.frame_report.mean) << ", video mAP "
            << mean_text(r.videos.video_report.mean) << '\n';
        out << "wrote " << dir.string() << " in " << std::fixed << std::setprecision(1) << r.seconds << " s"
            << std::defaultfloat << '\n';
        return kExitOk;
    }
};

struct Detect {
    ConfigArgs config;
    std::string checkpoint;
    std::string source = "videos";
    std::string output;

    void add(CLI::App& app, std::function<int()>& action, std::ostream& out) {
        auto* cmd = app.add_subcommand("detect", "Run a checkpoint over synthetic clips and write detection JSON lines");
        config.add(cmd, false);
        cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
        cmd->add_option("--source", source, "Key frames of the training clips, or every frame of the videos")
            ->check(CLI::IsMember({"clips", "videos"}));
        cmd->add_option("--output,-o", output, "Output file (default stdout)");
        cmd->callback([this, &action, &out] { action = [this, &out] { return run(out); }; });
    }

    int run(std::ostream& out) const {
        RunConfig cfg = config.resolve();
        const auto net = harness::load_checkpoint(checkpoint);
        cfg.model = net.config();
        std::vector<Detection> dets;
        if (source == "clips") {
            dets = harness::detect_dataset(net, harness::make_dataset(cfg), cfg.post);
        } else {
            for (const auto& v : harness::make_videos(cfg))
                for (int t = 0; t < static_cast<int>(v.frames.size()); ++t) {
                    auto d = harness::detect_clip(net, v.clip(t, cfg.model.clip_length), cfg.post, v.video, t);
                    dets.insert(dets.end(), d.begin(), d.end());
                }
        }
        std::ostringstream text;
        harness::write_detections_jsonl(text, dets);
        emit(out, output, text.str());
        spdlog::info("{} detections", dets.size());
        return kExitOk;
    }
};

struct Link {
    std::string detections;
    std::string output;
    linking::LinkConfig config;

    void add(CLI::App& app, std::function<int()>& action, std::ostream& out) {
        auto* cmd = app.add_subcommand("link", "Link per-frame detections into action tubes");
        cmd->add_option("--detections,-d", detections, "Detection JSON lines")->required()->check(CLI::ExistingFile);
        cmd->add_option("--output,-o", output, "Tube JSON file (default stdout)");
        cmd->add_option("--beta", config.beta, "IoU weight in the link score")->check(CLI::NonNegativeNumber);
        cmd->add_option("--patience", config.patience, "Frames a tube may go unmatched")->check(CLI::NonNegativeNumber);
        cmd->callback([this, &action, &out] { action = [this, &out] { return run(out); }; });
    }

    int run(std::ostream& out) const {
        std::map<std::string, std::vector<Detection>> by_video;
        for (auto& d : read_detections(detections)) by_video[d.video].push_back(std::move(d));
        std::vector<ActionTube> tubes;
        for (const auto& [video, dets] : by_video) {
            auto t = linking::link_all(linking::group_by_frame(dets), config);
            for (auto& tube : t) tube.video = video;
            tubes.insert(tubes.end(), t.begin(), t.end());
        }
        emit(out, output, harness::tubes_to_json(tubes) + "\n");
        spdlog::info("{} tubes from {} videos", tubes.size(), by_video.size());
        return kExitOk;
    }
};

struct EvalFrame {
    std::string detections;
    std::string gt;
    std::string gt_format = "tube-json";
    double width = 0.0;
    double height = 0.0;
    int num_classes = 0;
    evaluation::FrameMapOptions options;
    std::string output;
    std::string csv;

    void add(CLI::App& app, std::function<int()>& action, std::ostream& out) {
        auto* cmd = app.add_subcommand("eval-frame", "Frame mAP of detections against annotations");
        cmd->add_option("--detections,-d", detections, "Detection JSON lines")->required()->check(CLI::ExistingFile);
        cmd->add_option("--gt,-g", gt, "Ground-truth annotations")->required()->check(CLI::ExistingFile);
        cmd->add_option("--gt-format", gt_format, "Annotation format")->check(CLI::IsMember({"tube-json", "ava-csv"}));
        cmd->add_option("--width", width, "Frame width in pixels (ava-csv)")->check(CLI::PositiveNumber);
        cmd->add_option("--height", height, "Frame height in pixels (ava-csv)")->check(CLI::PositiveNumber);
        cmd->add_option("--num-classes", num_classes, "Class universe for ava-csv validation")->check(CLI::PositiveNumber);
        cmd->add_option("--iou", options.iou_threshold, "Match IoU threshold")->check(CLI::Range(0.0, 1.0));
        cmd->add_flag("--keyframes-only", options.keyframes_only, "Ignore detections on unannotated frames");
        cmd->add_option("--output,-o", output, "Report JSON file");
        cmd->add_option("--csv", csv, "Report CSV file");
        cmd->callback([this, &action, &out] { action = [this, &out] { return run(out); }; });
    }

    int run(std::ostream& out) const {
        const auto format = harness::annotation_format_from_string(gt_format);
        if (format == harness::AnnotationFormat::ava_csv && (width <= 0 || height <= 0))
            throw CLI::RequiredError("--width and --height (ava-csv boxes are normalized)");
        const auto set = harness::load_annotations(
            gt, format, num_classes > 0 ? std::optional<int>(num_classes) : std::nullopt);
        for (const auto& w : set.warnings) spdlog::warn("{}", w);
        if (!set.errors.empty()) {
            for (const auto& e : set.errors) spdlog::error("{}:{}: {}", gt, e.line, e.message);
            throw ValidationFailure(std::to_string(set.errors.size()) + " malformed annotation rows in " + gt);
        }
        const auto gts =
            format == harness::AnnotationFormat::ava_csv ? harness::to_ground_truth(set.records, width, height) : set.frame_gts;
        const auto report = evaluation::frame_map(read_detections(detections), gts, options);
        print_map_report(out, report);
        write_report_files(report, output, csv);
        return kExitOk;
    }
};

struct EvalVideo {
    std::string tubes;
    std::string gt;
    double iou = 0.5;
    std::string output;
    std::string csv;

    void add(CLI::App& app, std::function<int()>& action, std::ostream& out) {
        auto* cmd = app.add_subcommand("eval-video", "Video mAP of linked tubes against ground-truth tubes");
        cmd->add_option("--tubes,-t", tubes, "Predicted tube JSON")->required()->check(CLI::ExistingFile);
        cmd->add_option("--gt,-g", gt, "Ground-truth tube JSON")->required()->check(CLI::ExistingFile);
        cmd->add_option("--iou", iou, "Tube IoU threshold")->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--output,-o", output, "Report JSON file");
        cmd->add_option("--csv", csv, "Report CSV file");
        cmd->callback([this, &action, &out] { action = [this, &out] { return run(out); }; });
    }

    int run(std::ostream& out) const {
        const auto pred = harness::tubes_from_json(harness::read_file(tubes));
        const auto set = harness::parse_tube_json(harness::read_file(gt));
        if (!set.errors.empty()) throw ValidationFailure(set.errors.front().message);
        const auto report = evaluation::video_map(pred, set.tubes, iou);
        print_map_report(out, report);
        write_report_files(report, output, csv);
        return kExitOk;
    }
};

struct Selftest {
    bool skip_model = false;

    void add(CLI::App& app, std::function<int()>& action, std::ostream& out) {
        auto* cmd = app.add_subcommand("selftest", "Compare every module against its reference implementation");
        cmd->add_flag("--skip-model", skip_model, "Leave out the end-to-end gradient check");
        cmd->callback([this, &action, &out] { action = [this, &out] { return run(out); }; });
    }

    int run(std::ostream& out) const {
        const auto report = oracle::run_selftest(!skip_model);
        oracle::print_report(out, report);
        return report.failed() == 0 ? kExitOk : kExitValidation;
    }
};

struct SweepLambda {
    ConfigArgs config;
    std::vector<double> lambdas{1, 2, 3, 4, 5, 6, 7};
    int train_steps = 0;
    std::string output;

    void add(CLI::App& app, std::function<int()>& action, std::ostream& out) {
        auto* cmd = app.add_subcommand("sweep-lambda", "Loss terms (and optionally trained metrics) across lambda values");
        config.add(cmd, false);
        cmd->add_option("--lambdas", lambdas, "Regression weights")->delimiter(',');
        cmd->add_option("--train-steps", train_steps, "Also train and evaluate per lambda")
            ->check(CLI::NonNegativeNumber);
        cmd->add_option("--output,-o", output, "CSV report");
        cmd->callback([this, &action, &out] { action = [this, &out] { return run(out); }; });
    }

    int run(std::ostream& out) const {
        const auto sweep = harness::sweep_lambda(config.resolve(), lambdas, train_steps);
        out << "lambda       reg   lambda*reg       total";
        if (train_steps > 0) out << "   final loss  frame mAP  video mAP";
        out << '\n';
        for (const auto& r : sweep.rows) {
            out << std::fixed << std::setprecision(4) << std::setw(6) << r.lambda << std::setw(10) << r.reg
                << std::setw(13) << r.weighted_reg << std::setw(12) << r.total;
            if (train_steps > 0)
                out << std::setw(13) << r.trained_final_loss << std::setw(11) << mean_text(r.frame_map) << std::setw(11)
                    << mean_text(r.video_map);
            out << std::defaultfloat << '\n';
        }
        out << "reg term linear in lambda: " << (sweep.linear ? "yes" : "no") << '\n';
        if (!output.empty()) harness::write_file(output, harness::lambda_sweep_to_csv(sweep));
        return sweep.linear && sweep.rows.size() == lambdas.size() ? kExitOk : kExitValidation;
    }
};

struct AblateHead {
    ConfigArgs config;
    std::string output;

    void add(CLI::App& app, std::function<int()>& action, std::ostream& out) {
        auto* cmd = app.add_subcommand("ablate-head", "Train the decoupled and coupled heads on the same task");
        config.add(cmd);
        cmd->add_option("--output,-o", output, "JSON report");
        cmd->callback([this, &action, &out] { action = [this, &out] { return run(out); }; });
    }

    int run(std::ostream& out) const {
        const auto rows = harness::ablate_head(config.resolve());
        out << "head        params  loss first-10  loss last-10  train fmAP  frame mAP  video mAP\n";
        for (const auto& r : rows)
            out << std::left << std::setw(10) << model::to_string(r.head) << std::right << std::setw(8) << r.parameters
                << std::fixed << std::setprecision(4) << std::setw(15) << r.first_window << std::setw(14)
                << r.last_window << std::setw(12) << mean_text(r.train_frame_report.mean) << std::setw(11)
                << mean_text(r.frame_report.mean) << std::setw(11) << mean_text(r.video_report.mean)
                << std::defaultfloat << '\n';
        if (!output.empty()) harness::write_file(output, harness::head_ablation_to_json(rows));
        return kExitOk;
    }
};

void setup_logging(const std::string& level) {
    if (!spdlog::get("yowo")) {
        auto logger = spdlog::stderr_color_mt("yowo");
        logger->set_pattern("[%l] %v");
        spdlog::set_default_logger(logger);
    }
    spdlog::set_level(spdlog::level::warn);
    spdlog::cfg::load_env_levels();  // SPDLOG_LEVEL
    if (!level.empty()) spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Desk-scale spatio-temporal action detection toolkit", "yowo"};
    app.require_subcommand(1);
    std::string log_level;
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error (overrides SPDLOG_LEVEL)")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

    std::function<int()> action;
    ForwardDemo forward_demo;
    GradCheck gradcheck;
    Assign assign;
    TrainToy train_toy;
    Detect detect;
    Link link;
    EvalFrame eval_frame;
    EvalVideo eval_video;
    Selftest selftest;
    SweepLambda sweep_lambda;
    AblateHead ablate_head;
    forward_demo.add(app, action, out);
    gradcheck.add(app, action, out);
    assign.add(app, action, out);
    train_toy.add(app, action, out);
    detect.add(app, action, out);
    link.add(app, action, out);
    eval_frame.add(app, action, out);
    eval_video.add(app, action, out);
    selftest.add(app, action, out);
    sweep_lambda.add(app, action, out);
    ablate_head.add(app, action, out);

    const auto usage = [&](const std::string& message) {
        const auto parsed = app.get_subcommands();
        if (!message.empty()) err << "error: " << message << "\n\n";
        err << (parsed.empty() ? app.help() : parsed.back()->help());
        return kExitUsage;
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        const auto parsed = app.get_subcommands();
        out << (parsed.empty() ? app.help() : parsed.back()->help());
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        return usage(e.what());
    }

    setup_logging(log_level);
    try {
        return action ? action() : usage("no subcommand");
    } catch (const CLI::ParseError& e) {
        return usage(e.what());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }
}

}  // namespace yowo::cli
