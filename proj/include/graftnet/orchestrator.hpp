#pragma once

#include "graftnet/data.hpp"
#include "graftnet/distill.hpp"
#include "graftnet/graft.hpp"
#include "graftnet/network.hpp"
#include "graftnet/optim.hpp"
#include "graftnet/report.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace graftnet {

struct DataConfig {
  enum class Source { Synthetic, Csv };
  Source source = Source::Synthetic;

  // synthetic
  std::size_t num_classes = 4;
  std::size_t train_per_class = 200;
  std::size_t test_per_class = 50;
  std::size_t image_size = 16;
  std::uint64_t seed = 1;  // train split; the test split uses seed + 1
  SyntheticStyle style;

  // csv
  std::filesystem::path train_csv;
  std::filesystem::path test_csv;
  Shape image_shape;

  bool augment = false;
};

struct ExperimentConfig {
  std::size_t num_students = 1;
  std::size_t num_teachers = 0;
  /// Students first, then teachers; length num_students + num_teachers.
  std::vector<TrainerConfig> trainers;
  GraftConfig graft;
  bool graft_enabled = true;
  DistillConfig distill;
  /// Pre-trained, frozen teachers; when empty teachers are co-trained.
  std::vector<std::filesystem::path> teacher_checkpoints;
  Architecture architecture;
  std::optional<Architecture> teacher_architecture;
  DataConfig data;
  /// 0 means epochs * iterations per epoch.
  std::size_t max_iterations = 0;
  std::optional<std::filesystem::path> output_dir;
  MetricsFormat metrics_format = MetricsFormat::Csv;
  /// 0 writes only final checkpoints.
  std::size_t checkpoint_every_epochs = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Hyper-parameters of network k derived from a shared base: seeds offset by
/// k and the learning rate scaled by a fixed per-k factor.
TrainerConfig diversify(const TrainerConfig& base, std::size_t k);

/// Pre-graft snapshots of every student, captured before any is modified.
struct GraftBarrierState {
  std::vector<ParameterSet> snapshots;
  std::vector<bool> completed;
};

/// Round-robin external graft: student k receives from the snapshot of
/// student k-1 (student 0 from student K-1). All students must report the
/// same iteration count.
std::vector<GraftEvent> barrier_graft(std::span<ParameterSet* const> students,
                                      std::span<const std::size_t> iterations, const GraftConfig& cfg,
                                      std::size_t epoch = 0);
std::vector<GraftEvent> barrier_graft(std::vector<Network>& students, const GraftConfig& cfg,
                                      std::size_t epoch = 0);

struct ExperimentResult {
  std::vector<EpochMetrics> metrics;
  std::vector<GraftEvent> events;
  /// Final parameters, students then teachers.
  std::vector<ParameterSet> final_parameters;
  std::vector<double> final_test_accuracy;
  std::size_t iterations = 0;
  std::size_t iterations_per_epoch = 0;
};

struct PreparedData {
  Dataset train;
  Dataset test;
};

/// Loads or generates the splits and normalises both with train statistics.
PreparedData prepare_data(const DataConfig& cfg);

/// Trains num_students (+ num_teachers) networks concurrently with a graft
/// barrier every graft_period_iters iterations. Metrics are streamed to
/// output_dir/metrics.{csv,jsonl} when an output directory is set.
ExperimentResult run_experiment(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const ExperimentConfig& cfg, const PreparedData& data);

}  // namespace graftnet
