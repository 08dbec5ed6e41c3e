#include "yowo/predictions.hpp"

#include "yowo/error.hpp"

namespace yowo {

namespace {

std::size_t grid_size(const LevelPrediction& level) {
    return static_cast<std::size_t>(level.conf.height) * level.conf.width;
}

}  // namespace

std::size_t PredictionSet::position_count() const {
    std::size_t total = 0;
    for (const auto& level : levels) total += grid_size(level);
    return total;
}

geometry::GridCell PredictionSet::cell_of(std::size_t position) const {
    for (int l = 0; l < 3; ++l) {
        const std::size_t n = grid_size(levels[l]);
        if (position < n) {
            const int w = levels[l].conf.width;
            return geometry::GridCell{l, static_cast<int>(position % w), static_cast<int>(position / w)};
        }
        position -= n;
    }
    throw ContractViolation("PredictionSet: position index out of range");
}

std::size_t PredictionSet::position_of(const geometry::GridCell& cell) const {
    std::size_t base = 0;
    for (int l = 0; l < cell.level; ++l) base += grid_size(levels[l]);
    return base + static_cast<std::size_t>(cell.y) * levels[cell.level].conf.width + cell.x;
}

double PredictionSet::confidence(std::size_t position) const {
    const auto cell = cell_of(position);
    return levels[cell.level].conf.at(cell.y, cell.x, 0);
}

double PredictionSet::class_probability(std::size_t position, int class_id) const {
    const auto cell = cell_of(position);
    return levels[cell.level].cls.at(cell.y, cell.x, class_id);
}

std::array<double, 4> PredictionSet::raw_offsets(std::size_t position) const {
    const auto cell = cell_of(position);
    const auto& reg = levels[cell.level].reg;
    return {reg.at(cell.y, cell.x, 0), reg.at(cell.y, cell.x, 1), reg.at(cell.y, cell.x, 2),
            reg.at(cell.y, cell.x, 3)};
}

Box PredictionSet::box(std::size_t position) const {
    return geometry::decode_offsets(cell_of(position), raw_offsets(position));
}

PredictionGradient PredictionGradient::zeros_like(const PredictionSet& preds) {
    PredictionGradient g;
    for (int l = 0; l < 3; ++l) {
        const auto& lv = preds.levels[l];
        g.cls[l] = numeric::FeatureMap(lv.cls.height, lv.cls.width, lv.cls.channels);
        g.reg[l] = numeric::FeatureMap(lv.reg.height, lv.reg.width, lv.reg.channels);
        g.conf[l] = numeric::FeatureMap(lv.conf.height, lv.conf.width, lv.conf.channels);
    }
    return g;
}

}  // namespace yowo
