#include "selftest.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "yowo/harness/io.hpp"
#include "yowo/harness/synthetic.hpp"
#include "yowo/harness/training.hpp"
#include "yowo/loss.hpp"
#include "yowo/model.hpp"

namespace yowo::oracle {

using autodiff::Tape;
using autodiff::Value;
using autodiff::Var;
using numeric::FeatureMap;
using numeric::Matrix;
using numeric::PostOp;

int SelftestReport::passed() const {
    int n = 0;
    for (const auto& c : checks) n += c.passed ? 1 : 0;
    return n;
}

int SelftestReport::failed() const { return static_cast<int>(checks.size()) - passed(); }

void print_report(std::ostream& out, const SelftestReport& report) {
    for (const auto& c : report.checks)
        out << (c.passed ? "PASS " : "FAIL ") << std::left << std::setw(34) << c.name << ' ' << c.detail << '\n';
    out << report.passed() << " passed, " << report.failed() << " failed\n";
}

// ---------------------------------------------------------------------------

Box random_box(Rng& rng, double extent, double min_size) {
    const double w = rng.uniform(min_size, extent / 2);
    const double h = rng.uniform(min_size, extent / 2);
    const double x = rng.uniform(0.0, extent - w);
    const double y = rng.uniform(0.0, extent - h);
    return Box{x, y, x + w, y + h};
}

FeatureMap random_map(Rng& rng, int h, int w, int c, double scale) {
    FeatureMap m(h, w, c);
    for (double& v : m.data) v = scale * rng.uniform(-1.0, 1.0);
    return m;
}

Matrix random_matrix(Rng& rng, int r, int c, double scale) {
    Matrix m(r, c);
    for (double& v : m.data) v = scale * rng.uniform(-1.0, 1.0);
    return m;
}

numeric::ConvLayer random_conv(Rng& rng, int kernel, int in, int out, PostOp post, bool affine, int stride) {
    numeric::ConvLayer L(kernel, in, out, post, affine, stride);
    for (double& v : L.weights) v = rng.uniform(-0.7, 0.7);
    for (double& v : L.bias) v = rng.uniform(-0.3, 0.3);
    for (double& v : L.scale) v = rng.uniform(0.5, 1.5);
    for (double& v : L.shift) v = rng.uniform(-0.3, 0.3);
    return L;
}

AssignmentInstance random_assignment_instance(Rng& rng, int max_candidates, int max_gts, int num_classes) {
    AssignmentInstance inst;
    inst.candidates.num_classes = num_classes;
    const int n = rng.integer(1, max_candidates);
    for (int i = 0; i < n; ++i) {
        assignment::Candidate c;
        c.index = static_cast<std::size_t>(i);
        c.cell.level = rng.integer(0, 2);
        const int cells = 64 / geometry::kStrides[c.cell.level];
        c.cell.x = rng.integer(0, cells - 1);
        c.cell.y = rng.integer(0, cells - 1);
        const double cx = c.cell.center_x();
        const double cy = c.cell.center_y();
        const double s = c.cell.stride();
        c.box = Box{cx - s * rng.uniform(0.2, 2.0), cy - s * rng.uniform(0.2, 2.0), cx + s * rng.uniform(0.2, 2.0),
                    cy + s * rng.uniform(0.2, 2.0)};
        for (int k = 0; k < num_classes; ++k) c.scores.push_back(rng.uniform(0.0, 1.0));
        inst.candidates.candidates.push_back(std::move(c));
    }
    const int g = rng.integer(0, max_gts);
    for (int j = 0; j < g; ++j) {
        GroundTruthInstance gt;
        gt.box = random_box(rng, 64.0, 4.0);
        gt.labels.push_back(rng.integer(0, num_classes - 1));
        if (num_classes > 1 && rng.uniform() < 0.3) {
            const int extra = rng.integer(0, num_classes - 1);
            if (extra != gt.labels[0]) gt.labels.push_back(extra);
        }
        inst.gts.push_back(std::move(gt));
    }
    return inst;
}

namespace {

std::vector<double>& data_of(Value& v) {
    return std::visit([](auto& x) -> std::vector<double>& { return x.data; }, v);
}

const std::vector<double>& data_of(const Value& v) {
    return std::visit([](const auto& x) -> const std::vector<double>& { return x.data; }, v);
}

double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double relative_error(const std::vector<double>& a, const std::vector<double>& n) {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - n[i];
    const double scale = std::max(norm(a), norm(n));
    return scale > 0.0 ? norm(d) / scale : 0.0;
}

}  // namespace

double tape_gradient_error(const std::vector<Value>& inputs,
                           const std::function<Var(Tape&, const std::vector<Var>&)>& op,
                           std::vector<numeric::ConvLayer*> layers, Rng& rng, double h) {
    std::vector<Value> values = inputs;
    const auto record = [&](Tape& tape) {
        std::vector<Var> vars;
        for (const auto& v : values)
            vars.push_back(std::visit([&](const auto& x) { return tape.input(x); }, v));
        return std::make_pair(vars, op(tape, vars));
    };

    Tape tape;
    const auto [vars, out] = record(tape);
    Value seed = tape.value(out);
    for (double& v : data_of(seed)) v = rng.uniform(-1.0, 1.0);
    const std::vector<autodiff::Seed> seeds{{out, seed}};
    tape.backward(seeds);

    const auto objective = [&]() {
        Tape t;
        const auto [vs, o] = record(t);
        const auto& sd = data_of(seed);
        const auto& got = data_of(t.value(o));
        double total = 0.0;
        for (std::size_t i = 0; i < sd.size(); ++i) total += sd[i] * got[i];
        return total;
    };

    double worst = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto analytic = data_of(tape.gradient(vars[i]));
        auto& x = data_of(values[i]);
        std::vector<double> numeric_grad(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) numeric_grad[k] = central_difference(objective, x[k], h);
        worst = std::max(worst, relative_error(analytic, numeric_grad));
    }
    for (auto* L : layers) {
        const auto& g = tape.layer_gradient(*L);
        const std::array<std::pair<std::vector<double>*, const std::vector<double>*>, 4> pairs{
            {{&L->weights, &g.weights}, {&L->bias, &g.bias}, {&L->scale, &g.scale}, {&L->shift, &g.shift}}};
        for (auto [param, grad] : pairs) {
            std::vector<double> numeric_grad(param->size());
            for (std::size_t k = 0; k < param->size(); ++k)
                numeric_grad[k] = central_difference(objective, (*param)[k], h);
            worst = std::max(worst, relative_error(*grad, numeric_grad));
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
}

CheckResult check(std::string name, bool ok, std::string detail) { return {std::move(name), ok, std::move(detail)}; }

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return INFINITY;
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

PredictionSet random_predictions(Rng& rng, int size, int num_classes, double sparsity) {
    PredictionSet p;
    p.frame = {static_cast<double>(size), static_cast<double>(size)};
    p.num_classes = num_classes;
    for (int l = 0; l < 3; ++l) {
        const int n = size / geometry::kStrides[l];
        auto& lv = p.levels[l];
        lv.stride = geometry::kStrides[l];
        lv.cls = FeatureMap(n, n, num_classes);
        lv.reg = FeatureMap(n, n, 4);
        lv.conf = FeatureMap(n, n, 1);
        for (double& v : lv.cls.data) v = rng.uniform(0.0, 1.0);
        for (double& v : lv.reg.data) v = rng.uniform(-1.5, 1.0);
        for (double& v : lv.conf.data) v = rng.uniform() < sparsity ? rng.uniform(0.0, 1.0) : 0.01;
    }
    return p;
}

bool same_detection(const Detection& a, const Detection& b) {
    const auto close = [](double x, double y) { return std::abs(x - y) <= 1e-9; };
    return a.class_id == b.class_id && a.level == b.level && close(a.score, b.score) && close(a.box.x1, b.box.x1) &&
           close(a.box.y1, b.box.y1) && close(a.box.x2, b.box.x2) && close(a.box.y2, b.box.y2);
}

bool same_multiset(std::vector<Detection> a, std::vector<Detection> b) {
    if (a.size() != b.size()) return false;
    std::vector<bool> used(b.size(), false);
    for (const auto& d : a) {
        bool found = false;
        for (std::size_t j = 0; j < b.size() && !found; ++j)
            if (!used[j] && same_detection(d, b[j])) used[j] = found = true;
        if (!found) return false;
    }
    return true;
}

bool same_assignment(const assignment::AssignmentResult& a, const assignment::AssignmentResult& b) {
    if (a.num_positive != b.num_positive || a.skipped_gts != b.skipped_gts || a.positions.size() != b.positions.size())
        return false;
    for (std::size_t i = 0; i < a.positions.size(); ++i) {
        const auto& x = a.positions[i];
        const auto& y = b.positions[i];
        if (x.positive != y.positive || x.gt != y.gt || x.class_target != y.class_target || !(x.box_target == y.box_target) ||
            x.conf_target != y.conf_target || std::abs(x.cost - y.cost) > 1e-9)
            return false;
    }
    return true;
}

bool same_tubes(const std::vector<ActionTube>& a, const std::vector<ActionTube>& b) { return a == b; }

std::vector<linking::FrameDetections> random_link_frames(Rng& rng, int frames, int max_dets, bool gaps) {
    std::vector<linking::FrameDetections> out;
    int frame = 0;
    std::vector<Box> anchors;
    for (int k = 0; k < 3; ++k) anchors.push_back(random_box(rng, 40.0, 6.0));
    for (int f = 0; f < frames; ++f) {
        linking::FrameDetections fd;
        fd.frame = frame;
        frame += gaps ? rng.integer(1, 3) : 1;
        const int n = rng.integer(0, max_dets);
        for (int i = 0; i < n; ++i) {
            Detection d;
            const Box& a = anchors[rng.integer(0, 2)];
            const double dx = rng.uniform(-6.0, 6.0);
            const double dy = rng.uniform(-6.0, 6.0);
            d.box = Box{a.x1 + dx, a.y1 + dy, a.x2 + dx, a.y2 + dy};
            d.class_id = rng.integer(0, 1);
            d.score = rng.uniform(0.05, 1.0);
            d.frame = fd.frame;
            d.video = "v";
            fd.detections.push_back(d);
        }
        out.push_back(std::move(fd));
    }
    return out;
}

Detection det(int frame, int cls, double score, Box box, const std::string& video = "v") {
    Detection d;
    d.box = box;
    d.class_id = cls;
    d.score = score;
    d.frame = frame;
    d.video = video;
    return d;
}

// ---- individual checks ----

CheckResult conv_direct() {
    double worst = 0.0;
    const PostOp posts[] = {PostOp::none, PostOp::leaky_relu, PostOp::silu, PostOp::sigmoid};
    for (int seed = 0; seed < 10; ++seed) {
        Rng rng(mix_seed(11, seed));
        for (int kernel : {1, 3})
            for (int stride : {1, 2})
                for (PostOp post : posts)
                    for (bool affine : {false, true}) {
                        const auto x = random_map(rng, 4 + seed % 3, 5, 2);
                        const auto L = random_conv(rng, kernel, 2, 3, post, affine, stride);
                        worst = std::max(worst, max_abs_diff(numeric::conv2d(x, L).data, conv2d_direct(x, L).data));
                    }
    }
    return check("numeric.conv2d_nested_loop", worst <= 1e-9, "max |diff| " + fmt(worst));
}

CheckResult matmul_hand() {
    const auto p = numeric::matmul(Matrix(2, 2, {1, 2, 3, 4}), Matrix(2, 1, {5, 6}));
    return check("numeric.matmul_hand", p.rows == 2 && p.cols == 1 && p.data == std::vector<double>{17, 39},
                 "[[17],[39]]");
}

CheckResult softmax_hand() {
    const auto s = numeric::softmax_rows(Matrix(1, 2, {std::log(2.0), 0.0}));
    const double err = std::max(std::abs(s.data[0] - 2.0 / 3.0), std::abs(s.data[1] - 1.0 / 3.0));
    return check("numeric.softmax_hand", err <= 1e-9, "|diff| " + fmt(err));
}

CheckResult op_gradients() {
    double worst = 0.0;
    for (int seed = 0; seed < 10; ++seed) {
        Rng rng(mix_seed(12, seed));
        auto conv_a = random_conv(rng, 3, 2, 3, PostOp::leaky_relu, true, 1);
        auto conv_b = random_conv(rng, 3, 2, 2, PostOp::silu, true, 2);
        auto conv_c = random_conv(rng, 1, 2, 2, PostOp::sigmoid, false, 1);
        const Value x = random_map(rng, 4, 4, 2);
        const Value y = random_map(rng, 4, 4, 2);
        const Value m = random_matrix(rng, 3, 4);
        const Value n = random_matrix(rng, 4, 2);
        worst = std::max(worst, tape_gradient_error({x}, [&](Tape& t, const std::vector<Var>& v) { return t.conv2d(v[0], conv_a); }, {&conv_a}, rng));
        worst = std::max(worst, tape_gradient_error({x}, [&](Tape& t, const std::vector<Var>& v) { return t.conv2d(v[0], conv_b); }, {&conv_b}, rng));
        worst = std::max(worst, tape_gradient_error({x}, [&](Tape& t, const std::vector<Var>& v) { return t.conv2d(v[0], conv_c); }, {&conv_c}, rng));
        worst = std::max(worst, tape_gradient_error({x, y}, [](Tape& t, const std::vector<Var>& v) { return t.add(v[0], v[1]); }, {}, rng));
        worst = std::max(worst, tape_gradient_error({x}, [](Tape& t, const std::vector<Var>& v) { return t.upsample_nearest(v[0], 2); }, {}, rng));
        worst = std::max(worst, tape_gradient_error({x, y}, [](Tape& t, const std::vector<Var>& v) { return t.concat_channels(v[0], v[1]); }, {}, rng));
        worst = std::max(worst, tape_gradient_error({x}, [](Tape& t, const std::vector<Var>& v) {
            return t.from_channel_matrix(t.transpose(t.transpose(t.to_channel_matrix(v[0]))), 4, 4); }, {}, rng));
        worst = std::max(worst, tape_gradient_error({m, n}, [](Tape& t, const std::vector<Var>& v) { return t.matmul(v[0], v[1]); }, {}, rng));
        worst = std::max(worst, tape_gradient_error({m}, [](Tape& t, const std::vector<Var>& v) { return t.softmax_rows(v[0]); }, {}, rng));
        worst = std::max(worst, tape_gradient_error({x}, [](Tape& t, const std::vector<Var>& v) {
            return model::channel_attention(t, v[0]).first; }, {}, rng));
    }
    return check("autodiff.op_gradients", worst < 1e-3, "max rel error " + fmt(worst) + " over 10 seeds");
}

CheckResult zero_weight_conv() {
    Rng rng(13);
    numeric::ConvLayer L(3, 2, 2, PostOp::none);
    const FeatureMap x = random_map(rng, 3, 3, 2);
    Tape tape;
    const Var out = tape.conv2d(tape.input(x), L);
    const std::vector<autodiff::Seed> seeds{{out, FeatureMap(3, 3, 2, 1.0)}};
    tape.backward(seeds);
    const auto& g = tape.layer_gradient(L);
    double worst = 0.0;
    for (std::size_t k = 0; k < L.weights.size(); ++k) {
        const auto f = [&]() {
            double s = 0.0;
            for (double v : numeric::conv2d(x, L).data) s += v;
            return s;
        };
        worst = std::max(worst, std::abs(central_difference(f, L.weights[k], 1e-4) - g.weights[k]));
    }
    return check("autodiff.zero_weight_conv", worst <= 1e-8, "max |diff| " + fmt(worst));
}

CheckResult geometry_hand() {
    const double a = geometry::iou({0, 0, 2, 2}, {1, 1, 3, 3});
    const double b = geometry::giou({0, 0, 1, 1}, {2, 2, 3, 3});
    const double c = geometry::giou({1, 2, 4, 6}, {1, 2, 4, 6});
    const bool ok = std::abs(a - 1.0 / 7.0) <= 1e-9 && std::abs(b + 7.0 / 9.0) <= 1e-9 && std::abs(c - 1.0) <= 1e-12;
    return check("geometry.hand_cases", ok, "iou " + fmt(a) + ", giou " + fmt(b) + ", giou(A,A) " + fmt(c));
}

CheckResult geometry_random() {
    Rng rng(14);
    double worst = 0.0;
    bool ordered = true;
    for (int i = 0; i < 1000; ++i) {
        const Box p = random_box(rng, 50, 0.5), q = random_box(rng, 50, 0.5);
        worst = std::max({worst, std::abs(geometry::iou(p, q) - iou_ref(p, q)), std::abs(geometry::giou(p, q) - giou_ref(p, q))});
        ordered = ordered && geometry::giou(p, q) <= geometry::iou(p, q) + 1e-15;
    }
    return check("geometry.random_pairs", worst <= 1e-12 && ordered, "max |diff| vs formula " + fmt(worst));
}

CheckResult round_trip() {
    Rng rng(15);
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
        geometry::GridCell cell{rng.integer(0, 2), rng.integer(0, 3), rng.integer(0, 3)};
        const double s = cell.stride();
        const Box b{cell.center_x() - rng.uniform(0.1, 3) * s, cell.center_y() - rng.uniform(0.1, 3) * s,
                    cell.center_x() + rng.uniform(0.1, 3) * s, cell.center_y() + rng.uniform(0.1, 3) * s};
        const Box r = geometry::decode_offsets(cell, geometry::encode_offsets(cell, b));
        worst = std::max({worst, std::abs(r.x1 - b.x1), std::abs(r.y1 - b.y1), std::abs(r.x2 - b.x2), std::abs(r.y2 - b.y2)});
    }
    return check("geometry.decode_encode_round_trip", worst <= 1e-9, "max |diff| " + fmt(worst));
}

CheckResult tube_iou_hand() {
    const ActionTube a{"v", 0, {{0, {0, 0, 2, 2}, 1}, {1, {0, 0, 2, 2}, 1}}};
    const ActionTube b{"v", 0, {{0, {1, 1, 3, 3}, 1}, {1, {0, 0, 2, 2}, 1}}};
    const double v = geometry::tube_iou(a, b);
    return check("geometry.tube_iou_hand", std::abs(v - 4.0 / 7.0) <= 1e-9 && std::abs(tube_iou_ref(a, b) - v) <= 1e-12,
                 "tube_iou " + fmt(v));
}

CheckResult attention_staged_fixture() {
    const Matrix f(2, 2, {0.5, -1.0, 1.5, 0.25});  // 2 channels, 1x2 spatial
    const auto got = model::channel_attention(f);
    const auto want = attention_staged(f);
    const double err = std::max(max_abs_diff(got.attention.data, want.attention.data), max_abs_diff(got.output.data, want.output.data));
    double row_err = 0.0;
    Rng rng(16);
    const auto r = model::channel_attention(random_matrix(rng, 6, 9, 2.0));
    for (int i = 0; i < 6; ++i) {
        double s = 0.0;
        for (int j = 0; j < 6; ++j) s += r.attention.at(i, j);
        row_err = std::max(row_err, std::abs(s - 1.0));
    }
    const auto one = model::channel_attention(random_matrix(rng, 1, 7));
    const bool identity = one.attention.data == std::vector<double>{1.0} && max_abs_diff(one.output.data, model::channel_attention(one.output).output.data) <= 1e-15;
    return check("model.channel_attention_staged", err <= 1e-9 && row_err <= 1e-9 && identity,
                 "staged |diff| " + fmt(err) + ", row-sum |diff| " + fmt(row_err));
}

CheckResult branches_composition() {
    Rng rng(17);
    auto b = model::make_branches(3);
    for (auto* L : {&b.cls1, &b.cls2, &b.reg1, &b.reg2}) *L = random_conv(rng, 3, 3, 3, PostOp::silu, true, 1);
    const FeatureMap x = random_map(rng, 4, 4, 3);
    const auto [cls, reg] = model::decoupled_branches(x, b);
    const double err = std::max(max_abs_diff(cls.data, conv2d_direct(conv2d_direct(x, b.cls1), b.cls2).data),
                                max_abs_diff(reg.data, conv2d_direct(conv2d_direct(x, b.reg1), b.reg2).data));
    return check("model.branches_composition", err <= 1e-9, "max |diff| " + fmt(err));
}

CheckResult position_count() {
    int total = 0;
    for (int l = 0; l < 3; ++l) total += model::level_extent(224, l) * model::level_extent(224, l);
    return check("model.position_count_224", total == 1029, std::to_string(total) + " positions");
}

CheckResult assignment_hand() {
    assignment::Candidate c;
    c.cell = {0, 0, 0};
    c.box = {0, 0, 8, 8};
    c.scores = {0.5, 0.5};
    GroundTruthInstance gt{{0, 0, 8, 8}, {0}, "v", 0, -1};
    const double cost = assignment::pair_cost(c, gt, 2, 3.0);
    const auto k = assignment::dynamic_k({0.9, 0.8, 0.7}, 10);
    const bool ok = std::abs(cost - 2.0 * std::log(2.0)) <= 1e-9 && k && *k == 2;
    return check("assignment.hand_cases", ok, "cost " + fmt(cost) + ", k " + std::to_string(k.value_or(-1)));
}

CheckResult assignment_brute_force() {
    Rng rng(18);
    int agree = 0;
    for (int i = 0; i < 200; ++i) {
        const auto inst = random_assignment_instance(rng, 8, 3, 3);
        const assignment::AssignmentConfig cfg{3.0, 10, 2.5};
        agree += same_assignment(assignment::simota_assign(inst.candidates, inst.gts, cfg),
                                 simota_brute_force(inst.candidates, inst.gts, cfg)) ? 1 : 0;
    }
    return check("assignment.simota_brute_force", agree == 200, std::to_string(agree) + "/200 instances equal");
}

CheckResult loss_hand() {
    const double b = loss::bce(0.5, 1.0);
    PredictionSet p;
    p.frame = {32, 32};
    p.num_classes = 1;
    for (int l = 0; l < 3; ++l) {
        const int n = 32 / geometry::kStrides[l];
        p.levels[l] = {geometry::kStrides[l], FeatureMap(n, n, 1, 0.5), FeatureMap(n, n, 4), FeatureMap(n, n, 1, 0.0)};
    }
    const geometry::GridCell cell{0, 1, 1};
    const Box target{4, 6, 20, 22};
    const auto raw = geometry::encode_offsets(cell, target);
    for (int j = 0; j < 4; ++j) p.levels[0].reg.at(1, 1, j) = raw[j];
    p.levels[0].conf.at(1, 1, 0) = 1.0;
    assignment::AssignmentResult a;
    a.positions.resize(p.position_count());
    auto& t = a.positions[p.position_of(cell)];
    t.positive = true;
    t.gt = 0;
    t.class_target = {1.0};
    t.box_target = target;
    t.conf_target = 1.0;
    a.num_positive = 1;
    const auto br = loss::total_loss(p, a, 5.0);
    const bool ok = std::abs(b - std::log(2.0)) <= 1e-12 && std::abs(br.cls - std::log(2.0)) <= 1e-9 && std::abs(br.reg) <= 1e-9;
    return check("loss.hand_cases", ok, "cls " + fmt(br.cls) + ", reg " + fmt(br.reg));
}

CheckResult decode_enumeration() {
    Rng rng(19);
    bool ok = true;
    for (int i = 0; i < 20; ++i) {
        const auto p = random_predictions(rng, 64, 3, 0.4);
        const int topk = i % 2 == 0 ? 100 : 5;
        ok = ok && same_multiset(postprocess::decode_predictions(p, 0.1, topk), decode_enumerate(p, 0.1, topk));
    }
    return check("postprocess.decode_enumeration", ok, "20 random prediction sets");
}

CheckResult nms_cases() {
    const auto A = det(0, 0, 0.9, {0, 0, 10, 10});
    const auto B = det(0, 0, 0.8, {3, 0, 13, 10});
    const auto C = det(0, 0, 0.7, {6, 0, 16, 10});
    const auto kept = postprocess::nms({C, A, B}, 0.4);
    bool ok = kept.size() == 2 && kept[0] == A && kept[1] == C;
    Rng rng(20);
    for (int i = 0; i < 50; ++i) {
        std::vector<Detection> dets;
        const int n = rng.integer(0, 12);
        for (int j = 0; j < n; ++j) dets.push_back(det(0, rng.integer(0, 1), std::round(rng.uniform(0, 10)) / 10, random_box(rng, 30, 4)));
        ok = ok && postprocess::nms(dets, 0.3) == nms_trace(dets, 0.3);
    }
    return check("postprocess.nms_greedy_trace", ok, "chain {A,C} and 50 random lists");
}

CheckResult linking_brute_force() {
    // Crossing pattern: the higher-score detection of frame 1 overlaps the
    // lower-score tube more.
    std::vector<linking::FrameDetections> cross{
        {0, {det(0, 0, 0.9, {0, 0, 10, 10}), det(0, 0, 0.5, {8, 0, 18, 10})}},
        {1, {det(1, 0, 0.6, {1, 0, 11, 10}), det(1, 0, 0.8, {9, 0, 19, 10})}}};
    bool ok = same_tubes(linking::link(cross, 0), link_brute_force(cross, 0, {}));
    Rng rng(21);
    int agree = 0;
    for (int i = 0; i < 100; ++i) {
        const auto frames = random_link_frames(rng, 5, 4, i % 2 == 1);
        const linking::LinkConfig cfg{rng.uniform(0.0, 2.0), rng.integer(0, 2)};
        bool same = true;
        for (int c = 0; c < 2; ++c) same = same && same_tubes(linking::link(frames, c, cfg), link_brute_force(frames, c, cfg));
        agree += same ? 1 : 0;
    }
    ok = ok && agree == 100;
    return check("linking.exhaustive_matching", ok, "crossing fixture and " + std::to_string(agree) + "/100 random");
}

CheckResult ap_hand() {
    evaluation::MatchLedger l;
    l.num_gt = 2;
    l.entries = {{0.9, true}, {0.8, false}, {0.7, true}};
    const double ap = evaluation::average_precision(l);
    return check("evaluation.ap_five_sixths", std::abs(ap - 5.0 / 6.0) <= 1e-9 && std::abs(ap_envelope({true, false, true}, 2) - ap) <= 1e-12,
                 "AP " + fmt(ap));
}

CheckResult frame_map_random() {
    Rng rng(22);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        std::vector<GroundTruthInstance> gts;
        std::vector<Detection> dets;
        for (int f = 0; f < 3; ++f) {
            const int g = rng.integer(0, 3);
            for (int j = 0; j < g; ++j) {
                const Box b = random_box(rng, 40, 6);
                gts.push_back({b, {rng.integer(0, 1)}, "v", f, j});
                for (int r = rng.integer(0, 2); r > 0; --r) {
                    const double d = rng.uniform(-3, 3);
                    dets.push_back(det(f, rng.integer(0, 1), rng.uniform(0.1, 1), {b.x1 + d, b.y1, b.x2 + d, b.y2}));
                }
            }
            for (int r = rng.integer(0, 2); r > 0; --r) dets.push_back(det(f, rng.integer(0, 1), rng.uniform(0.1, 1), random_box(rng, 40, 4)));
        }
        const auto rep = evaluation::frame_map(dets, gts);
        const auto ref = frame_aps(dets, gts, 0.5);
        if (rep.classes.size() != ref.size()) return check("evaluation.frame_map_oracle", false, "class sets differ");
        for (std::size_t c = 0; c < ref.size(); ++c) worst = std::max(worst, std::abs(rep.classes[c].ap - ref[c].second));
    }
    return check("evaluation.frame_map_oracle", worst <= 1e-9, "50 random 3-frame, 2-class sets, max |diff| " + fmt(worst));
}

CheckResult video_map_random() {
    Rng rng(23);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        std::vector<ActionTube> gt, pred;
        for (int v = 0; v < 2; ++v) {
            const std::string name = "v" + std::to_string(v);
            for (int t = rng.integer(1, 2); t > 0; --t) {
                ActionTube g{name, rng.integer(0, 1), {}};
                const int start = rng.integer(0, 3);
                const Box b = random_box(rng, 40, 6);
                for (int f = start; f < start + rng.integer(2, 5); ++f) g.members.push_back({f, b, 1.0});
                gt.push_back(g);
                ActionTube p{name, rng.uniform() < 0.8 ? g.class_id : 1 - g.class_id, {}};
                const int shift = rng.integer(-2, 2);
                for (const auto& m : g.members)
                    if (m.frame + shift >= 0) p.members.push_back({m.frame + shift, {b.x1 + rng.uniform(-2, 2), b.y1, b.x2, b.y2}, rng.uniform(0.1, 1)});
                if (!p.members.empty()) pred.push_back(p);
            }
        }
        const auto rep = evaluation::video_map(pred, gt);
        const auto ref = video_aps(pred, gt, 0.5);
        if (rep.classes.size() != ref.size()) return check("evaluation.video_map_oracle", false, "class sets differ");
        for (std::size_t c = 0; c < ref.size(); ++c) worst = std::max(worst, std::abs(rep.classes[c].ap - ref[c].second));
    }
    return check("evaluation.video_map_oracle", worst <= 1e-9, "50 random 2-video sets, max |diff| " + fmt(worst));
}

CheckResult rasterization() {
    harness::SyntheticSpec spec{1, 3, 6, 16, 1.5, 0.25};
    double worst = 0.0;
    bool counted = true;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto v = harness::make_synthetic_video(seed, spec, 6, 64, 64, 3);
        for (std::size_t t = 0; t < v.frames.size(); ++t)
            for (const auto& gt : v.frame_gts[t]) {
                const auto found = boxes_from_pixels(v.frames[t], harness::class_color(gt.labels[0]));
                double best = INFINITY;
                for (const auto& b : found)
                    best = std::min(best, std::max({std::abs(b.x1 - gt.box.x1), std::abs(b.y1 - gt.box.y1),
                                                    std::abs(b.x2 - gt.box.x2), std::abs(b.y2 - gt.box.y2)}));
                counted = counted && !found.empty();
                worst = std::max(worst, best);
            }
    }
    return check("harness.rasterization", counted && worst <= 1.0, "max extent error " + fmt(worst) + " px");
}

CheckResult ava_round_trip() {
    Rng rng(24);
    std::vector<harness::AnnotationRecord> records;
    for (int i = 0; i < 30; ++i) {
        const Box b = random_box(rng, 1.0, 0.05);
        records.push_back({"video_" + std::to_string(i % 4), 900 + i, b, rng.integer(0, 79), rng.integer(0, 5)});
    }
    std::stringstream io;
    harness::write_ava_csv(io, records);
    const auto back = harness::parse_ava_csv(io, 80);
    return check("harness.ava_csv_round_trip", back.errors.empty() && back.records == records,
                 std::to_string(back.records.size()) + " records");
}

CheckResult model_gradient() {
    const auto r = harness::gradient_check(harness::RunConfig::gradcheck(), 0);
    return check("model.end_to_end_gradient", r.max_relative_error < 1e-3,
                 "max rel error " + fmt(r.max_relative_error) + " (" + r.worst_tensor + ")");
}

}  // namespace

SelftestReport run_selftest(bool with_model) {
    SelftestReport report;
    const std::vector<std::function<CheckResult()>> checks{
        conv_direct,       matmul_hand,        softmax_hand,      op_gradients,      zero_weight_conv,
        geometry_hand,     geometry_random,    round_trip,        tube_iou_hand,     attention_staged_fixture,
        branches_composition, position_count,  assignment_hand,   assignment_brute_force, loss_hand,
        decode_enumeration, nms_cases,         linking_brute_force, ap_hand,         frame_map_random,
        video_map_random,  rasterization,      ava_round_trip};
    for (const auto& c : checks) {
        try {
            report.checks.push_back(c());
        } catch (const std::exception& e) {
            report.checks.push_back({"(exception)", false, e.what()});
        }
    }
    if (with_model) {
        try {
            report.checks.push_back(model_gradient());
        } catch (const std::exception& e) {
            report.checks.push_back({"model.end_to_end_gradient", false, e.what()});
        }
    }
    return report;
}

}  // namespace yowo::oracle
