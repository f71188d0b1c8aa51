#pragma once

#include "graftnet/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace graftnet {

/// Labelled images [N, C, H, W] with labels in [0, num_classes).
struct Dataset {
  Tensor images;
  std::vector<int> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  Shape sample_shape() const { return Shape(images.shape().begin() + 1, images.shape().end()); }
  void validate() const;
};

/// Knobs of the synthetic generator beyond the four positional arguments.
/// Class prototypes depend only on pattern_seed, so two datasets drawn with
/// different sample seeds are train/test splits of the same task.
struct SyntheticStyle {
  std::size_t channels = 1;
  std::size_t blobs_per_class = 3;
  double pixel_noise = 0.25;
  std::size_t max_shift = 2;
  std::uint64_t pattern_seed = 0x5eed;
};

/// Class-conditional Gaussian-blob images in [0, 1], classes interleaved
/// (sample i has label i % num_classes).
Dataset generate_synthetic(std::size_t num_classes, std::size_t samples_per_class,
                           std::size_t image_size, std::uint64_t seed,
                           const SyntheticStyle& style = {});

/// Rows "label,p0,...,p{CHW-1}" with pixels in [0, 255], scaled to [0, 1].
/// No normalisation is applied here; see channel_stats / normalize.
Dataset load_csv_images(const std::filesystem::path& path, std::size_t num_classes,
                        const Shape& image_shape);
/// Inverse of load_csv_images for images in [0, 1] (values are clamped and
/// rounded to the nearest 1/255).
void write_csv_images(const Dataset& ds, const std::filesystem::path& path);

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

ChannelStats channel_stats(const Dataset& ds);
/// In place (x - mean_c) / std_c; channels with zero spread only get centred.
void normalize(Dataset& ds, const ChannelStats& stats);

struct LoaderConfig {
  std::uint64_t shuffle_seed = 0;
  std::size_t batch_size = 32;
  bool augment = false;  // horizontal flip + pad-4 random crop
};

struct Batch {
  Tensor images;
  std::vector<int> labels;
  std::vector<std::size_t> indices;
};

/// Permutation of [0, n) that depends only on (seed, epoch).
std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, std::size_t epoch);

/// One epoch of batches; the final partial batch is kept.
std::vector<Batch> epoch_batches(const Dataset& ds, const LoaderConfig& cfg, std::size_t epoch);

/// Gathers the given samples into a batch without augmentation.
Batch gather(const Dataset& ds, const std::vector<std::size_t>& indices);

std::size_t batches_per_epoch(std::size_t samples, std::size_t batch_size);

}  // namespace graftnet
