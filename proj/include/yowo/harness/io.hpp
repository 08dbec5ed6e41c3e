#pragma once

// File formats:
//   detections  JSON lines  {"video", "frame", "class", "score", "box": [x1, y1, x2, y2]}
//   tubes       JSON array  [{"video", "class", "score", "frames": [{"frame", "box", "score"}]}]
//   reports     JSON object {"metric", "iou_threshold", "mean", "classes": [...]} and CSV
//   predictions JSON object {"frame": [w, h], "num_classes", "levels": [{"stride", "height", "width",
//                           "cls", "reg", "conf"}]}, maps flattened row-major (y, x, channel)
//   loss logs   CSV         step,conf,cls,reg,total,n_pos
//   annotations ava-csv     video_id,timestamp,x1,y1,x2,y2,action_id,person_id (normalized boxes)
//               tube-json   same schema as tubes, boxes in pixels ("score" optional)

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "yowo/assignment.hpp"
#include "yowo/evaluation.hpp"
#include "yowo/loss.hpp"
#include "yowo/postprocess.hpp"

namespace yowo::harness {

void write_detections_jsonl(std::ostream& out, const std::vector<Detection>& dets);
std::vector<Detection> read_detections_jsonl(std::istream& in);

std::string tubes_to_json(const std::vector<ActionTube>& tubes);
std::vector<ActionTube> tubes_from_json(const std::string& text);

std::string prediction_set_to_json(const PredictionSet& preds);
PredictionSet prediction_set_from_json(const std::string& text);

std::string report_to_json(const evaluation::MapReport& report);
std::string report_to_csv(const evaluation::MapReport& report);

struct LossLogRow {
    int step = 0;
    loss::LossBreakdown loss;
};
void write_loss_log_csv(std::ostream& out, const std::vector<LossLogRow>& rows);

struct AnnotationRecord {
    std::string video;
    int timestamp = 0;
    Box box;  // normalized to [0, 1]
    int class_id = 0;
    int person_id = -1;
    bool operator==(const AnnotationRecord&) const = default;
};

struct RowError {
    int line = 0;
    std::string message;
};

enum class AnnotationFormat { ava_csv, tube_json };
AnnotationFormat annotation_format_from_string(const std::string& s);

struct AnnotationSet {
    std::vector<AnnotationRecord> records;     // ava-csv only
    std::vector<ActionTube> tubes;             // tube-json only
    std::vector<GroundTruthInstance> frame_gts;  // tube-json: one per tube member
    std::vector<RowError> errors;
    std::vector<std::string> warnings;
};

AnnotationSet parse_ava_csv(std::istream& in, std::optional<int> num_classes = std::nullopt);
void write_ava_csv(std::ostream& out, const std::vector<AnnotationRecord>& records);
AnnotationSet parse_tube_json(const std::string& text);
AnnotationSet load_annotations(const std::string& path, AnnotationFormat format,
                               std::optional<int> num_classes = std::nullopt);

/// Scales normalized records to pixels; rows sharing (video, timestamp,
/// person, box) merge into one multi-label instance.
std::vector<GroundTruthInstance> to_ground_truth(const std::vector<AnnotationRecord>& records, double width,
                                                 double height);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace yowo::harness
