#pragma once

#include <array>
#include <cstddef>

#include "yowo/geometry.hpp"
#include "yowo/numeric.hpp"

namespace yowo {

/// Raw head outputs on one pyramid level. `cls` and `conf` are sigmoid
/// probabilities; `reg` holds the four raw log-distance offsets.
struct LevelPrediction {
    int stride = 8;
    numeric::FeatureMap cls;
    numeric::FeatureMap reg;
    numeric::FeatureMap conf;
};

/// One prediction tuple per spatial position on each of the three levels.
/// Positions are indexed level-major, then row, then column.
struct PredictionSet {
    geometry::FrameSize frame;
    int num_classes = 0;
    std::array<LevelPrediction, 3> levels;

    [[nodiscard]] std::size_t position_count() const;
    [[nodiscard]] geometry::GridCell cell_of(std::size_t position) const;
    [[nodiscard]] std::size_t position_of(const geometry::GridCell& cell) const;

    [[nodiscard]] double confidence(std::size_t position) const;
    [[nodiscard]] double class_probability(std::size_t position, int class_id) const;
    [[nodiscard]] std::array<double, 4> raw_offsets(std::size_t position) const;
    /// Decoded, unclamped box of a position.
    [[nodiscard]] Box box(std::size_t position) const;
};

/// Gradient of a scalar with respect to every entry of a PredictionSet.
struct PredictionGradient {
    std::array<numeric::FeatureMap, 3> cls;
    std::array<numeric::FeatureMap, 3> reg;
    std::array<numeric::FeatureMap, 3> conf;

    static PredictionGradient zeros_like(const PredictionSet& preds);
};

}  // namespace yowo
