#pragma once

// Checkpoint file (JSON, version 1):
//   {"format": "yowo-toy-checkpoint", "version": 1,
//    "model": {"c_o1", "c_o2", "c_o3", "num_classes", "clip_length", "head", "backbone_width", "init"},
//    "tensors": {"<layer>.weights": {"shape": [k, k, in, out], "values": [...]},
//                "<layer>.bias" / ".scale" / ".shift": {"shape": [out], "values": [...]}}}
// Values are written with round-trip precision, so save/load is lossless.

#include <string>

#include "yowo/model.hpp"

namespace yowo::harness {

inline constexpr const char* kCheckpointFormat = "yowo-toy-checkpoint";
inline constexpr int kCheckpointVersion = 1;

std::string checkpoint_to_json(const model::YowoModel& model);
/// Throws std::runtime_error on a wrong format tag, version, missing tensor or shape mismatch.
model::YowoModel checkpoint_from_json(const std::string& text);

void save_checkpoint(const model::YowoModel& model, const std::string& path);
model::YowoModel load_checkpoint(const std::string& path);

/// True when both models have the same config and bit-identical parameters.
bool same_parameters(const model::YowoModel& a, const model::YowoModel& b);

}  // namespace yowo::harness
