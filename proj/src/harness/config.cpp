#include "yowo/harness/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace yowo::harness {

RunConfig RunConfig::toy() {
    RunConfig c;
    c.model.c_o1 = 16;
    c.model.c_o2 = 16;
    c.model.c_o3 = 16;
    c.model.num_classes = 2;
    c.model.clip_length = 4;
    c.model.backbone_width = 8;
    c.data.frame_size = 64;
    c.data.num_clips = 8;
    c.data.video_length = 8;
    c.data.synthetic = SyntheticSpec{1, 2, 14, 30, 1.0, 0.25};
    c.optim.learning_rate = 3e-3;
    c.steps = 500;
    return c;
}

RunConfig RunConfig::gradcheck() {
    RunConfig c = toy();
    c.model.c_o1 = 4;
    c.model.c_o2 = 4;
    c.model.c_o3 = 4;
    c.model.backbone_width = 4;
    c.data.frame_size = 32;
    c.data.num_clips = 1;
    c.data.synthetic = SyntheticSpec{1, 2, 8, 18, 1.0, 0.25};
    return c;
}

void RunConfig::validate() const {
    model.validate();
    require(assign.gamma > 0.0, "config: assignment.gamma must be positive");
    require(assign.top_q >= 1, "config: assignment.top_q must be >= 1");
    require(lambda >= 0.0, "config: loss.lambda must be >= 0");
    require(post.conf_threshold >= 0.0 && post.conf_threshold < 1.0, "config: conf_threshold must lie in [0, 1)");
    require(post.nms_iou > 0.0 && post.nms_iou <= 1.0, "config: nms_iou must lie in (0, 1]");
    require(post.topk_per_level > 0, "config: topk_per_level must be positive");
    require(link.beta >= 0.0 && link.patience >= 0, "config: linking beta and patience must be >= 0");
    require(eval_iou > 0.0 && eval_iou <= 1.0, "config: evaluation.iou must lie in (0, 1]");
    require(optim.batch_size >= 1, "config: optimizer.batch_size must be >= 1");
    require(data.frame_size > 0 && data.frame_size % 32 == 0, "config: data.frame_size must be a multiple of 32");
    require(data.num_clips >= 1, "config: data.num_clips must be >= 1");
    require(steps >= 0, "config: run.steps must be >= 0");
}

namespace {

template <typename Fn>
void visit_fields(RunConfig& c, Fn&& fn) {
    fn("model", "c_o1", c.model.c_o1);
    fn("model", "c_o2", c.model.c_o2);
    fn("model", "c_o3", c.model.c_o3);
    fn("model", "num_classes", c.model.num_classes);
    fn("model", "clip_length", c.model.clip_length);
    fn("model", "head", c.model.head);
    fn("model", "backbone_width", c.model.backbone_width);
    fn("model", "init", c.model.init);
    fn("assignment", "gamma", c.assign.gamma);
    fn("assignment", "top_q", c.assign.top_q);
    fn("assignment", "center_radius", c.assign.center_radius);
    fn("loss", "lambda", c.lambda);
    fn("postprocess", "conf_threshold", c.post.conf_threshold);
    fn("postprocess", "nms_iou", c.post.nms_iou);
    fn("postprocess", "topk_per_level", c.post.topk_per_level);
    fn("postprocess", "score_fusion", c.post.fusion);
    fn("linking", "beta", c.link.beta);
    fn("linking", "patience", c.link.patience);
    fn("evaluation", "iou", c.eval_iou);
    fn("evaluation", "keyframes_only", c.keyframes_only);
    fn("optimizer", "learning_rate", c.optim.learning_rate);
    fn("optimizer", "weight_decay", c.optim.weight_decay);
    fn("optimizer", "beta1", c.optim.beta1);
    fn("optimizer", "beta2", c.optim.beta2);
    fn("optimizer", "epsilon", c.optim.epsilon);
    fn("optimizer", "batch_size", c.optim.batch_size);
    fn("optimizer", "step_decay", c.optim.step_decay);
    fn("data", "frame_size", c.data.frame_size);
    fn("data", "num_clips", c.data.num_clips);
    fn("data", "seed", c.data.seed);
    fn("data", "video_length", c.data.video_length);
    fn("data", "min_objects", c.data.synthetic.min_objects);
    fn("data", "max_objects", c.data.synthetic.max_objects);
    fn("data", "min_size", c.data.synthetic.min_size);
    fn("data", "max_size", c.data.synthetic.max_size);
    fn("data", "max_speed", c.data.synthetic.max_speed);
    fn("data", "noise", c.data.synthetic.noise);
    fn("run", "steps", c.steps);
    fn("run", "seed", c.seed);
    fn("run", "output_dir", c.output_dir);
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, end);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

struct Writer {
    std::string current;
    std::ostringstream out;

    void header(const char* section) {
        if (current == section) return;
        if (!current.empty()) out << '\n';
        out << '[' << section << "]\n";
        current = section;
    }
    void operator()(const char* s, const char* k, const int& v) { header(s), out << k << " = " << v << '\n'; }
    void operator()(const char* s, const char* k, const std::uint64_t& v) { header(s), out << k << " = " << v << '\n'; }
    void operator()(const char* s, const char* k, const double& v) { header(s), out << k << " = " << format_double(v) << '\n'; }
    void operator()(const char* s, const char* k, const bool& v) { header(s), out << k << " = " << (v ? "true" : "false") << '\n'; }
    void operator()(const char* s, const char* k, const std::string& v) { header(s), out << k << " = \"" << v << "\"\n"; }
    void operator()(const char* s, const char* k, const model::HeadVariant& v) {
        header(s), out << k << " = \"" << model::to_string(v) << "\"\n";
    }
    void operator()(const char* s, const char* k, const model::InitScheme& v) {
        header(s), out << k << " = \"" << model::to_string(v) << "\"\n";
    }
    void operator()(const char* s, const char* k, const postprocess::ScoreFusion& v) {
        header(s), out << k << " = \"" << (v == postprocess::ScoreFusion::product ? "product" : "geometric_mean") << "\"\n";
    }
};

std::string unquote(const std::string& raw, const std::string& key) {
    if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"')
        throw std::runtime_error("config: value of '" + key + "' must be a quoted string");
    return raw.substr(1, raw.size() - 2);
}

template <typename T>
T parse_number(const std::string& raw, const std::string& key) {
    T v{};
    auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec != std::errc() || ptr != raw.data() + raw.size())
        throw std::runtime_error("config: cannot parse value '" + raw + "' of '" + key + "'");
    return v;
}

struct Reader {
    std::map<std::string, std::string> values;
    std::set<std::string> used;

    const std::string* find(const char* s, const char* k) {
        const std::string key = std::string(s) + "." + k;
        auto it = values.find(key);
        if (it == values.end()) return nullptr;
        used.insert(key);
        return &it->second;
    }
    static std::string name(const char* s, const char* k) { return std::string(s) + "." + k; }

    void operator()(const char* s, const char* k, int& v) {
        if (auto* r = find(s, k)) v = parse_number<int>(*r, name(s, k));
    }
    void operator()(const char* s, const char* k, std::uint64_t& v) {
        if (auto* r = find(s, k)) v = parse_number<std::uint64_t>(*r, name(s, k));
    }
    void operator()(const char* s, const char* k, double& v) {
        if (auto* r = find(s, k)) v = parse_number<double>(*r, name(s, k));
    }
    void operator()(const char* s, const char* k, bool& v) {
        if (auto* r = find(s, k)) {
            if (*r != "true" && *r != "false") throw std::runtime_error("config: '" + name(s, k) + "' must be true or false");
            v = *r == "true";
        }
    }
    void operator()(const char* s, const char* k, std::string& v) {
        if (auto* r = find(s, k)) v = unquote(*r, name(s, k));
    }
    void operator()(const char* s, const char* k, model::HeadVariant& v) {
        if (auto* r = find(s, k)) v = model::head_variant_from_string(unquote(*r, name(s, k)));
    }
    void operator()(const char* s, const char* k, model::InitScheme& v) {
        if (auto* r = find(s, k)) v = model::init_scheme_from_string(unquote(*r, name(s, k)));
    }
    void operator()(const char* s, const char* k, postprocess::ScoreFusion& v) {
        if (auto* r = find(s, k)) {
            const auto text = unquote(*r, name(s, k));
            if (text == "product") v = postprocess::ScoreFusion::product;
            else if (text == "geometric_mean") v = postprocess::ScoreFusion::geometric_mean;
            else throw std::runtime_error("config: unknown score_fusion '" + text + "'");
        }
    }
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    Reader reader;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // Strip comments outside quotes.
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw std::runtime_error("config line " + std::to_string(line_no) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        reader.values[section.empty() ? key : section + "." + key] = value;
    }

    RunConfig config;
    visit_fields(config, reader);
    for (const auto& [key, value] : reader.values)
        if (!reader.used.count(key)) throw std::runtime_error("config: unknown key '" + key + "'");
    config.validate();
    return config;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& config) {
    RunConfig copy = config;
    Writer writer;
    visit_fields(copy, writer);
    return writer.out.str();
}

void save_config(const RunConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot write '" + path + "'");
    out << serialize_config(config);
}

}  // namespace yowo::harness
