// One line per acceptance criterion: PASS/FAIL, the measured quantities and
// the wall time. Exit status is non-zero if any criterion fails.

#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "oracles.hpp"
#include "selftest.hpp"
#include "yowo/harness/io.hpp"
#include "yowo/harness/pipeline.hpp"
#include "yowo/harness/synthetic.hpp"
#include "yowo/harness/training.hpp"

using namespace yowo;
using harness::RunConfig;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v, int precision = 6) {
    std::ostringstream s;
    s << std::setprecision(precision) << v;
    return s.str();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

double max_abs(const std::vector<double>& a, const std::vector<double>& b) {
    double m = a.size() == b.size() ? 0.0 : INFINITY;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double class_ap(const evaluation::MapReport& r, int cls) {
    for (const auto& c : r.classes)
        if (c.class_id == cls) return c.ap;
    return NAN;
}

// ---- criteria ----

Outcome shape_suite(double& seconds) {
    auto mc = model::ModelConfig::toy();
    mc.num_classes = 24;
    mc.clip_length = 16;
    const model::YowoModel net(mc, 0);
    const auto clip = harness::make_synthetic_clip(0, harness::SyntheticSpec{}, 16, 224, 224, 24);
    const auto start = std::chrono::steady_clock::now();
    const auto p = net.predict(clip.clip);
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const int sizes[3] = {28, 14, 7};
    bool ok = true;
    std::string grids;
    for (int l = 0; l < 3; ++l) {
        const auto& lv = p.levels[l];
        const int n = sizes[l];
        ok = ok && lv.stride == geometry::kStrides[l] && lv.cls.height == n && lv.cls.width == n &&
             lv.cls.channels == 24 && lv.reg.height == n && lv.reg.width == n && lv.reg.channels == 4 &&
             lv.conf.height == n && lv.conf.width == n && lv.conf.channels == 1;
        grids += (l ? ", " : "") + std::to_string(lv.cls.height) + "^2x" + std::to_string(lv.cls.channels) + "/s" +
                 std::to_string(lv.stride);
    }
    return {ok && seconds < 1.0, "cls " + grids + "; forward " + num(seconds, 3) + " s (limit 1 s)"};
}

Outcome gradient_suite(double& seconds) {
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::string where;
    std::size_t skipped = 0, params = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto r = harness::gradient_check(RunConfig::gradcheck(), seed, {1e-4, 1e-6});
        if (r.max_relative_error >= worst) {
            worst = r.max_relative_error;
            where = r.worst_tensor + " seed " + std::to_string(seed);
        }
        skipped += r.kink_skipped;
        params = r.parameters;
    }
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {worst < 1e-3 && seconds < 120.0,
            "5 seeds x " + std::to_string(params) + " params, max rel error " + num(worst, 3) + " (" + where +
                "), kink-crossing entries excluded " + std::to_string(skipped)};
}

Outcome simota_suite(double&) {
    Rng rng(2024);
    const assignment::AssignmentConfig cfg{3.0, 10, 2.5};
    int equal = 0, positives = 0;
    for (int i = 0; i < 200; ++i) {
        const auto inst = oracle::random_assignment_instance(rng, 8, 3, 3);
        const auto got = assignment::simota_assign(inst.candidates, inst.gts, cfg);
        const auto want = oracle::simota_brute_force(inst.candidates, inst.gts, cfg);
        bool same = got.num_positive == want.num_positive && got.skipped_gts == want.skipped_gts &&
                    got.positions.size() == want.positions.size();
        for (std::size_t p = 0; same && p < got.positions.size(); ++p) {
            const auto& a = got.positions[p];
            const auto& b = want.positions[p];
            same = a.positive == b.positive && a.gt == b.gt && a.class_target == b.class_target &&
                   a.box_target == b.box_target && a.conf_target == b.conf_target;
        }
        equal += same ? 1 : 0;
        positives += static_cast<int>(got.num_positive);
    }
    return {equal == 200, std::to_string(equal) + "/200 equal, " + std::to_string(positives) + " positives total"};
}

Outcome geometry_suite(double&) {
    Rng rng(7);
    const double identity = geometry::giou({2, 3, 9, 7}, {2, 3, 9, 7});
    const double disjoint = geometry::giou({0, 0, 1, 1}, {2, 2, 3, 3});
    int ordered = 0;
    for (int i = 0; i < 1000; ++i) {
        const Box a = oracle::random_box(rng, 50, 0.5), b = oracle::random_box(rng, 50, 0.5);
        ordered += geometry::giou(a, b) <= geometry::iou(a, b) ? 1 : 0;
    }
    double trip = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const geometry::GridCell cell{rng.integer(0, 2), rng.integer(0, 6), rng.integer(0, 6)};
        const double s = cell.stride();
        const Box b{cell.center_x() - rng.uniform(0.05, 5) * s, cell.center_y() - rng.uniform(0.05, 5) * s,
                    cell.center_x() + rng.uniform(0.05, 5) * s, cell.center_y() + rng.uniform(0.05, 5) * s};
        const Box r = geometry::decode_offsets(cell, geometry::encode_offsets(cell, b));
        trip = std::max({trip, std::abs(r.x1 - b.x1), std::abs(r.y1 - b.y1), std::abs(r.x2 - b.x2), std::abs(r.y2 - b.y2)});
    }
    const bool ok = std::abs(identity - 1.0) <= 1e-12 && std::abs(disjoint + 7.0 / 9.0) <= 1e-9 && ordered == 1000 &&
                    trip <= 1e-9;
    return {ok, "giou(A,A) " + num(identity) + ", disjoint " + num(disjoint, 12) + ", giou<=iou " +
                    std::to_string(ordered) + "/1000, round trip max err " + num(trip, 3)};
}

Outcome attention_suite(double&) {
    Rng rng(11);
    double row = 0.0;
    for (int t = 0; t < 50; ++t) {
        const auto r = model::channel_attention(oracle::random_matrix(rng, 1 + t % 8, 1 + t % 5, 4.0));
        for (int i = 0; i < r.attention.rows; ++i) {
            double s = 0.0;
            for (int j = 0; j < r.attention.cols; ++j) s += r.attention.at(i, j);
            row = std::max(row, std::abs(s - 1.0));
        }
    }
    const numeric::Matrix single = oracle::random_matrix(rng, 1, 6);
    const auto one = model::channel_attention(single);
    const double ident = one.attention.data == std::vector<double>{1.0} ? max_abs(one.output.data, single.data) : INFINITY;
    const numeric::Matrix f(2, 2, {0.5, -1.0, 1.5, 0.25});
    const auto staged = oracle::attention_staged(f);
    const auto got = model::channel_attention(f);
    const double fix = std::max(max_abs(got.attention.data, staged.attention.data), max_abs(got.output.data, staged.output.data));
    return {row <= 1e-9 && ident <= 1e-12 && fix <= 1e-9,
            "row-sum err " + num(row, 3) + ", single-channel err " + num(ident, 3) + ", staged fixture err " + num(fix, 3)};
}

Outcome evaluator_suite(double&) {
    const std::string dir = YOWO_FIXTURES;
    double worst = 0.0;
    const auto compare = [&](const evaluation::MapReport& r, const nlohmann::json& expected) {
        for (const auto& [cls, ap] : expected["classes"].items())
            worst = std::max(worst, std::abs(class_ap(r, std::stoi(cls)) - ap.get<double>()));
        worst = std::max(worst, std::abs(r.mean.value_or(NAN) - expected["mean"].get<double>()));
    };
    const auto read_dets = [](const std::string& path) {
        std::ifstream in(path);
        return harness::read_detections_jsonl(in);
    };

    const evaluation::MatchLedger ledger{{{0.9, true}, {0.8, false}, {0.7, true}}, 2};
    const double five_sixths = evaluation::average_precision(ledger);
    worst = std::max(worst, std::abs(five_sixths - 5.0 / 6.0));

    const auto frame_gt = harness::parse_tube_json(slurp(dir + "/eval/frame_gt_tubes.json"));
    const auto frame_dets = read_dets(dir + "/eval/frame_detections.jsonl");
    const auto frame = evaluation::frame_map(frame_dets, frame_gt.frame_gts);
    compare(frame, nlohmann::json::parse(slurp(dir + "/eval/frame_expected.json")));
    for (const auto& [cls, ap] : oracle::frame_aps(frame_dets, frame_gt.frame_gts, 0.5))
        worst = std::max(worst, std::abs(class_ap(frame, cls) - ap));
    const auto perfect = evaluation::frame_map(read_dets(dir + "/eval/perfect_detections.jsonl"), frame_gt.frame_gts);
    worst = std::max(worst, std::abs(perfect.mean.value_or(NAN) - 1.0));

    std::ifstream ava(dir + "/annotations/sample_ava.csv");
    const auto ava_set = harness::parse_ava_csv(ava, 80);
    const auto ava_expected = nlohmann::json::parse(slurp(dir + "/annotations/ava_expected.json"));
    const auto ava_gts = harness::to_ground_truth(ava_set.records, ava_expected["frame_width"].get<double>(),
                                                  ava_expected["frame_height"].get<double>());
    compare(evaluation::frame_map(read_dets(dir + "/annotations/ava_detections.jsonl"), ava_gts), ava_expected);

    const auto video_gt = harness::parse_tube_json(slurp(dir + "/eval/video_gt_tubes.json"));
    const auto video_pred = harness::tubes_from_json(slurp(dir + "/eval/video_pred_tubes.json"));
    const auto video = evaluation::video_map(video_pred, video_gt.tubes);
    compare(video, nlohmann::json::parse(slurp(dir + "/eval/video_expected.json")));
    for (const auto& [cls, ap] : oracle::video_aps(video_pred, video_gt.tubes, 0.5))
        worst = std::max(worst, std::abs(class_ap(video, cls) - ap));

    return {worst <= 1e-9 && ava_set.errors.empty(),
            "AP(TP,FP,TP | 2 GT) " + num(five_sixths, 12) + ", frame mAP " + num(frame.mean.value_or(NAN), 12) +
                ", video mAP " + num(video.mean.value_or(NAN), 12) + ", max err " + num(worst, 3)};
}

bool report_complete(const evaluation::MapReport& r) { return r.mean.has_value() && !r.classes.empty(); }

std::optional<harness::OverfitResult> decoupled_run;

Outcome overfit_suite(double& seconds) {
    decoupled_run = harness::run_overfit(RunConfig::toy());
    const auto& r = *decoupled_run;
    seconds = r.seconds;
    const double ratio = r.last_window / r.first_window;
    const double map = r.train_frame_report.mean.value_or(0.0);
    return {map == 1.0 && ratio < 0.2 && seconds < 300.0,
            "8 clips, 2 classes, " + std::to_string(r.training.log.size()) + " steps: train frame mAP " + num(map) +
                ", loss last-10/first-10 " + num(r.last_window, 4) + "/" + num(r.first_window, 4) + " = " +
                num(ratio, 4) + " (limit 0.2)"};
}

Outcome ablation_suite(double& seconds) {
    RunConfig cfg = RunConfig::toy();
    cfg.model.head = model::HeadVariant::coupled;
    const auto coupled = harness::run_overfit(cfg);
    if (!decoupled_run) decoupled_run = harness::run_overfit(RunConfig::toy());
    seconds = coupled.seconds;
    std::string detail;
    bool ok = true;
    const std::array<const harness::OverfitResult*, 2> runs{&*decoupled_run, &coupled};
    for (const auto* r : runs) {
        const bool trained = std::isfinite(r->last_window) && r->last_window < r->first_window;
        const bool reported = report_complete(r->train_frame_report) && report_complete(r->videos.frame_report) &&
                              report_complete(r->videos.video_report);
        ok = ok && trained && reported;
        detail += (detail.empty() ? "" : "; ") + model::to_string(r->training.model.config().head) + " " +
                  std::to_string(r->training.model.parameter_count()) + " params, loss " + num(r->first_window, 4) +
                  "->" + num(r->last_window, 4) + ", train/frame/video mAP " +
                  num(r->train_frame_report.mean.value_or(NAN), 4) + "/" +
                  num(r->videos.frame_report.mean.value_or(NAN), 4) + "/" +
                  num(r->videos.video_report.mean.value_or(NAN), 4);
    }
    return {ok, detail};
}

Outcome lambda_suite(double&) {
    const auto sweep = harness::sweep_lambda(RunConfig::toy(), {1, 2, 3, 4, 5, 6, 7}, 0);
    bool exact = sweep.rows.size() == 7;
    for (const auto& r : sweep.rows) exact = exact && r.weighted_reg == r.lambda * sweep.rows.front().reg;
    return {exact && sweep.linear, std::to_string(sweep.rows.size()) + " rows, reg " + num(sweep.rows.front().reg) +
                                       ", total " + num(sweep.rows.front().total) + " .. " +
                                       num(sweep.rows.back().total) + ", exactly linear: " +
                                       (sweep.linear && exact ? "yes" : "no")};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome(double&)>>> criteria{
        {"shape-suite", shape_suite},       {"gradient-suite", gradient_suite},   {"simota-oracle", simota_suite},
        {"geometry-suite", geometry_suite}, {"channel-attention", attention_suite}, {"evaluator-oracle", evaluator_suite},
        {"overfit", overfit_suite},         {"head-ablation", ablation_suite},    {"lambda-sweep", lambda_suite}};
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        double measured = -1.0;
        Outcome o;
        try {
            o = fn(measured);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS " : "FAIL ") << std::left << std::setw(18) << name << std::right << ' ' << o.detail
                  << " [" << std::fixed << std::setprecision(2) << wall << " s]" << std::defaultfloat << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
