#include <fstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "yowo/evaluation.hpp"
#include "yowo/geometry.hpp"
#include "yowo/harness/io.hpp"
#include "yowo/harness/synthetic.hpp"
#include "yowo/harness/training.hpp"
#include "yowo/model.hpp"

namespace py = pybind11;
using namespace yowo;

namespace {

using BoxTuple = std::tuple<double, double, double, double>;

Box to_box(const BoxTuple& t) { return {std::get<0>(t), std::get<1>(t), std::get<2>(t), std::get<3>(t)}; }

py::dict report_dict(const evaluation::MapReport& r) {
    py::dict d;
    d["metric"] = r.metric;
    d["iou_threshold"] = r.iou_threshold;
    d["mean"] = r.mean ? py::cast(*r.mean) : py::none();
    py::dict classes;
    for (const auto& c : r.classes) classes[py::int_(c.class_id)] = c.ap;
    d["classes"] = classes;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Desk-scale spatio-temporal action detector: geometry, forward shapes, evaluation";

    py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);

    m.def("iou", [](const BoxTuple& a, const BoxTuple& b) { return geometry::iou(to_box(a), to_box(b)); });
    m.def("giou", [](const BoxTuple& a, const BoxTuple& b) { return geometry::giou(to_box(a), to_box(b)); });
    m.def("level_extent", &model::level_extent, py::arg("frame_extent"), py::arg("level"));

    m.def(
        "forward_shapes",
        [](int size, int num_classes, int clip_length, const std::string& head, std::uint64_t seed) {
            auto mc = model::ModelConfig::toy();
            mc.num_classes = num_classes;
            mc.clip_length = clip_length;
            mc.head = model::head_variant_from_string(head);
            const model::YowoModel net(mc, seed);
            const auto clip = harness::make_synthetic_clip(seed, harness::SyntheticSpec{}, clip_length, size, size, num_classes);
            PredictionSet p;
            {
                py::gil_scoped_release release;
                p = net.predict(clip.clip);
            }
            py::list out;
            for (const auto& lv : p.levels) {
                py::dict d;
                d["stride"] = lv.stride;
                d["cls"] = py::make_tuple(lv.cls.height, lv.cls.width, lv.cls.channels);
                d["reg"] = py::make_tuple(lv.reg.height, lv.reg.width, lv.reg.channels);
                d["conf"] = py::make_tuple(lv.conf.height, lv.conf.width, lv.conf.channels);
                out.append(d);
            }
            return out;
        },
        py::arg("size") = 224, py::arg("num_classes") = 24, py::arg("clip_length") = 16, py::arg("head") = "decoupled",
        py::arg("seed") = 0, "Run one forward pass and return per-level output shapes (height, width, channels).");

    m.def(
        "average_precision",
        [](const std::vector<std::pair<double, bool>>& ranked, std::size_t num_gt) {
            evaluation::MatchLedger l;
            for (const auto& [score, tp] : ranked) l.entries.push_back({score, tp});
            l.num_gt = num_gt;
            return evaluation::average_precision(l);
        },
        py::arg("ranked"), py::arg("num_gt"), "All-point AP of (score, is_true_positive) pairs in descending score order.");

    m.def(
        "eval_frame",
        [](const std::string& detections, const std::string& gt_tubes, double iou) {
            std::ifstream in(detections);
            if (!in) throw std::runtime_error("cannot open " + detections);
            const auto dets = harness::read_detections_jsonl(in);
            const auto gt = harness::parse_tube_json(harness::read_file(gt_tubes));
            return report_dict(evaluation::frame_map(dets, gt.frame_gts, {iou, false}));
        },
        py::arg("detections"), py::arg("gt_tubes"), py::arg("iou") = 0.5);

    m.def(
        "eval_video",
        [](const std::string& tubes, const std::string& gt_tubes, double iou) {
            const auto pred = harness::tubes_from_json(harness::read_file(tubes));
            const auto gt = harness::parse_tube_json(harness::read_file(gt_tubes));
            return report_dict(evaluation::video_map(pred, gt.tubes, iou));
        },
        py::arg("tubes"), py::arg("gt_tubes"), py::arg("iou") = 0.5);

    m.def(
        "gradient_check",
        [](std::uint64_t seed) {
            harness::GradCheckReport r;
            {
                py::gil_scoped_release release;
                r = harness::gradient_check(harness::RunConfig::gradcheck(), seed);
            }
            py::dict d;
            d["parameters"] = r.parameters;
            d["max_relative_error"] = r.max_relative_error;
            d["worst_tensor"] = r.worst_tensor;
            d["kink_skipped"] = r.kink_skipped;
            return d;
        },
        py::arg("seed") = 0, "Finite-difference check of the 32x32 toy model.");
}
