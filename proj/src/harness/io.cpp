#include "yowo/harness/io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "json.hpp"
#include "yowo/error.hpp"

namespace yowo::harness {

using nlohmann::json;

namespace {

json box_json(const Box& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

Box box_from(const json& j) {
    if (!j.is_array() || j.size() != 4) throw std::runtime_error("box must be an array [x1, y1, x2, y2]");
    Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    if (!b.valid()) throw std::runtime_error("box must satisfy x1 <= x2 and y1 <= y2");
    return b;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
bool parse_field(const std::string& text, T& out) {
    const auto t = trim(text);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    return ec == std::errc() && ptr == t.data() + t.size() && !t.empty();
}

std::string csv_double(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

}  // namespace

void write_detections_jsonl(std::ostream& out, const std::vector<Detection>& dets) {
    for (const auto& d : dets) {
        json j{{"video", d.video}, {"frame", d.frame}, {"class", d.class_id}, {"score", d.score}, {"box", box_json(d.box)}};
        out << j.dump() << '\n';
    }
}

std::vector<Detection> read_detections_jsonl(std::istream& in) {
    std::vector<Detection> dets;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const auto j = json::parse(line);
            Detection d;
            d.video = j.at("video").get<std::string>();
            d.frame = j.at("frame").get<int>();
            d.class_id = j.at("class").get<int>();
            d.score = j.at("score").get<double>();
            d.box = box_from(j.at("box"));
            dets.push_back(std::move(d));
        } catch (const std::exception& e) {
            throw std::runtime_error("detections line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return dets;
}

std::string tubes_to_json(const std::vector<ActionTube>& tubes) {
    json arr = json::array();
    for (const auto& t : tubes) {
        json frames = json::array();
        for (const auto& m : t.members) frames.push_back({{"frame", m.frame}, {"box", box_json(m.box)}, {"score", m.score}});
        arr.push_back({{"video", t.video}, {"class", t.class_id}, {"score", t.score()}, {"frames", frames}});
    }
    return arr.dump(1);
}

std::vector<ActionTube> tubes_from_json(const std::string& text) {
    const auto arr = json::parse(text);
    if (!arr.is_array()) throw std::runtime_error("tube file must hold a JSON array");
    std::vector<ActionTube> tubes;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& j = arr[i];
        try {
            ActionTube t;
            t.video = j.at("video").get<std::string>();
            t.class_id = j.at("class").get<int>();
            for (const auto& f : j.at("frames")) {
                TubeMember m;
                m.frame = f.at("frame").get<int>();
                m.box = box_from(f.at("box"));
                m.score = f.contains("score") ? f.at("score").get<double>() : 1.0;
                if (!t.members.empty() && m.frame <= t.members.back().frame)
                    throw std::runtime_error("tube frames must be strictly increasing");
                t.members.push_back(m);
            }
            if (t.members.empty()) throw std::runtime_error("tube has no frames");
            tubes.push_back(std::move(t));
        } catch (const std::exception& e) {
            throw std::runtime_error("tube " + std::to_string(i) + ": " + e.what());
        }
    }
    return tubes;
}

std::string prediction_set_to_json(const PredictionSet& preds) {
    json levels = json::array();
    for (const auto& lv : preds.levels)
        levels.push_back({{"stride", lv.stride},
                          {"height", lv.cls.height},
                          {"width", lv.cls.width},
                          {"cls", lv.cls.data},
                          {"reg", lv.reg.data},
                          {"conf", lv.conf.data}});
    return json{{"frame", {preds.frame.width, preds.frame.height}}, {"num_classes", preds.num_classes}, {"levels", levels}}
        .dump();
}

PredictionSet prediction_set_from_json(const std::string& text) {
    const json j = json::parse(text);
    PredictionSet p;
    p.frame = {j.at("frame").at(0).get<double>(), j.at("frame").at(1).get<double>()};
    p.num_classes = j.at("num_classes").get<int>();
    require(p.num_classes > 0, "prediction set: num_classes must be positive");
    const auto& levels = j.at("levels");
    require(levels.is_array() && levels.size() == 3, "prediction set: expected three levels");
    for (int l = 0; l < 3; ++l) {
        const auto& lj = levels[l];
        auto& lv = p.levels[l];
        lv.stride = lj.at("stride").get<int>();
        require(lv.stride == geometry::kStrides[l], "prediction set: level strides must be 8, 16, 32");
        const int h = lj.at("height").get<int>();
        const int w = lj.at("width").get<int>();
        const auto map = [&](const char* key, int channels) {
            auto values = lj.at(key).get<std::vector<double>>();
            require(values.size() == static_cast<std::size_t>(h) * w * channels,
                    std::string("prediction set: wrong element count in ") + key);
            return numeric::FeatureMap(h, w, channels, std::move(values));
        };
        lv.cls = map("cls", p.num_classes);
        lv.reg = map("reg", 4);
        lv.conf = map("conf", 1);
    }
    return p;
}

std::string report_to_json(const evaluation::MapReport& report) {
    json classes = json::array();
    for (const auto& c : report.classes)
        classes.push_back({{"class", c.class_id},
                           {"ap", c.ap},
                           {"num_gt", c.num_gt},
                           {"num_detections", c.num_detections},
                           {"true_positives", c.true_positives},
                           {"flagged", c.flagged}});
    json j{{"metric", report.metric}, {"iou_threshold", report.iou_threshold}, {"classes", classes}};
    j["mean"] = report.mean ? json(*report.mean) : json(nullptr);
    return j.dump(2);
}

std::string report_to_csv(const evaluation::MapReport& report) {
    std::ostringstream out;
    out << "class,ap,num_gt,num_detections,true_positives,flagged\n";
    for (const auto& c : report.classes)
        out << c.class_id << ',' << csv_double(c.ap) << ',' << c.num_gt << ',' << c.num_detections << ','
            << c.true_positives << ',' << (c.flagged ? 1 : 0) << '\n';
    out << "mean," << (report.mean ? csv_double(*report.mean) : "undefined") << ",,,,\n";
    return out.str();
}

void write_loss_log_csv(std::ostream& out, const std::vector<LossLogRow>& rows) {
    out << "step,conf,cls,reg,total,n_pos\n";
    for (const auto& r : rows)
        out << r.step << ',' << csv_double(r.loss.conf) << ',' << csv_double(r.loss.cls) << ',' << csv_double(r.loss.reg)
            << ',' << csv_double(r.loss.total) << ',' << r.loss.num_positive << '\n';
}

AnnotationFormat annotation_format_from_string(const std::string& s) {
    if (s == "ava-csv") return AnnotationFormat::ava_csv;
    if (s == "tube-json") return AnnotationFormat::tube_json;
    throw ContractViolation("unknown annotation format '" + s + "' (expected ava-csv or tube-json)");
}

AnnotationSet parse_ava_csv(std::istream& in, std::optional<int> num_classes) {
    AnnotationSet set;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(trim(field));
        if (fields.size() != 7 && fields.size() != 8) {
            set.errors.push_back({line_no, "expected 7 or 8 comma-separated fields, got " + std::to_string(fields.size())});
            continue;
        }
        AnnotationRecord r;
        r.video = fields[0];
        bool ok = !r.video.empty() && parse_field(fields[1], r.timestamp) && parse_field(fields[2], r.box.x1) &&
                  parse_field(fields[3], r.box.y1) && parse_field(fields[4], r.box.x2) &&
                  parse_field(fields[5], r.box.y2) && parse_field(fields[6], r.class_id);
        if (ok && fields.size() == 8) ok = parse_field(fields[7], r.person_id);
        if (!ok) {
            set.errors.push_back({line_no, "unparseable field"});
            continue;
        }
        const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!in_unit(r.box.x1) || !in_unit(r.box.y1) || !in_unit(r.box.x2) || !in_unit(r.box.y2)) {
            set.errors.push_back({line_no, "box coordinates must lie in [0, 1]"});
            continue;
        }
        if (!r.box.valid()) {
            set.errors.push_back({line_no, "box must satisfy x1 <= x2 and y1 <= y2"});
            continue;
        }
        if (r.class_id < 0 || (num_classes && r.class_id >= *num_classes)) {
            set.errors.push_back({line_no, "class id " + std::to_string(r.class_id) + " outside the class universe"});
            continue;
        }
        set.records.push_back(std::move(r));
    }
    if (line_no == 0) set.warnings.push_back("annotation file is empty");
    return set;
}

void write_ava_csv(std::ostream& out, const std::vector<AnnotationRecord>& records) {
    for (const auto& r : records)
        out << r.video << ',' << r.timestamp << ',' << csv_double(r.box.x1) << ',' << csv_double(r.box.y1) << ','
            << csv_double(r.box.x2) << ',' << csv_double(r.box.y2) << ',' << r.class_id << ',' << r.person_id << '\n';
}

AnnotationSet parse_tube_json(const std::string& text) {
    AnnotationSet set;
    if (trim(text).empty()) {
        set.warnings.push_back("annotation file is empty");
        return set;
    }
    set.tubes = tubes_from_json(text);
    for (std::size_t t = 0; t < set.tubes.size(); ++t)
        for (const auto& m : set.tubes[t].members)
            set.frame_gts.push_back(
                GroundTruthInstance{m.box, {set.tubes[t].class_id}, set.tubes[t].video, m.frame, static_cast<int>(t)});
    if (set.tubes.empty()) set.warnings.push_back("annotation file holds no tubes");
    return set;
}

AnnotationSet load_annotations(const std::string& path, AnnotationFormat format, std::optional<int> num_classes) {
    if (format == AnnotationFormat::ava_csv) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open annotation file '" + path + "'");
        return parse_ava_csv(in, num_classes);
    }
    return parse_tube_json(read_file(path));
}

std::vector<GroundTruthInstance> to_ground_truth(const std::vector<AnnotationRecord>& records, double width,
                                                 double height) {
    std::vector<GroundTruthInstance> out;
    std::map<std::tuple<std::string, int, int, double, double, double, double>, std::size_t> index;
    for (const auto& r : records) {
        const auto key = std::make_tuple(r.video, r.timestamp, r.person_id, r.box.x1, r.box.y1, r.box.x2, r.box.y2);
        auto it = index.find(key);
        if (it != index.end()) {
            auto& labels = out[it->second].labels;
            if (std::find(labels.begin(), labels.end(), r.class_id) == labels.end()) labels.push_back(r.class_id);
            continue;
        }
        index.emplace(key, out.size());
        out.push_back(GroundTruthInstance{
            Box{r.box.x1 * width, r.box.y1 * height, r.box.x2 * width, r.box.y2 * height}, {r.class_id}, r.video,
            r.timestamp, r.person_id});
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

}  // namespace yowo::harness
