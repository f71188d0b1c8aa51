#pragma once

#include "graftnet/network.hpp"
#include "graftnet/orchestrator.hpp"

#include <filesystem>
#include <string>

namespace graftnet {

/// Experiment files are YAML documents with nested sections:
///
///   seed, students, teachers, max_iterations
///   architecture / teacher_architecture: { input: [C,H,W], layers: [...] }
///   trainer: base TrainerConfig (+ diversify: bool), or trainers: [...]
///   graft, distill, data, output
///
/// Unknown keys are rejected. Relative paths resolve against base_dir.
ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Accepts either a bare { input, layers } mapping or a document with an
/// `architecture` key.
Architecture parse_architecture(const std::string& text);
Architecture load_architecture(const std::filesystem::path& path);

/// Network k gets SEED + k for both initialisation and batch order.
void reseed(ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace graftnet
