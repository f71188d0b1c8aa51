#include "graftnet/data.hpp"

#include "graftnet/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <string_view>

namespace graftnet {

void Dataset::validate() const {
  if (labels.empty()) throw DataError("dataset is empty");
  if (images.rank() != 4 || images.dim(0) != labels.size())
    throw DataError("dataset images " + shape_string(images.shape()) + " do not match " +
                    std::to_string(labels.size()) + " labels");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes)
      throw DataError("sample " + std::to_string(i) + " has label " + std::to_string(labels[i]) +
                      " outside [0, " + std::to_string(num_classes) + ")");
}

// ---------------------------------------------------------------- synthetic

namespace {

struct Blob {
  double cy, cx, sigma, amplitude;
};

}  // namespace

Dataset generate_synthetic(std::size_t num_classes, std::size_t samples_per_class,
                           std::size_t image_size, std::uint64_t seed, const SyntheticStyle& style) {
  if (num_classes == 0 || samples_per_class == 0 || image_size == 0 || style.channels == 0)
    throw ArgumentError("generate_synthetic arguments must be positive");

  const double s = static_cast<double>(image_size);
  std::mt19937_64 pattern_rng(style.pattern_seed);
  std::uniform_real_distribution<double> centre(0.2 * s, 0.8 * s);
  std::uniform_real_distribution<double> width(s / 10.0, s / 5.0);
  std::uniform_real_distribution<double> magnitude(0.6, 1.0);
  std::bernoulli_distribution positive(0.5);

  // prototypes[class][channel] -> blobs
  std::vector<std::vector<std::vector<Blob>>> prototypes(num_classes);
  for (auto& per_class : prototypes) {
    per_class.resize(style.channels);
    for (auto& blobs : per_class)
      for (std::size_t b = 0; b < style.blobs_per_class; ++b) {
        const double cy = centre(pattern_rng), cx = centre(pattern_rng), sg = width(pattern_rng);
        const double amp = magnitude(pattern_rng) * (positive(pattern_rng) ? 1.0 : -1.0);
        blobs.push_back({cy, cx, sg, amp});
      }
  }

  const std::size_t n = num_classes * samples_per_class;
  Dataset ds;
  ds.num_classes = num_classes;
  ds.images = Tensor({n, style.channels, image_size, image_size});
  ds.labels.resize(n);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, style.pixel_noise);
  std::uniform_int_distribution<long> shift(-static_cast<long>(style.max_shift), static_cast<long>(style.max_shift));
  std::uniform_real_distribution<double> gain(0.8, 1.2);

  std::size_t offset = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % num_classes;
    ds.labels[i] = static_cast<int>(label);
    const double dy = static_cast<double>(shift(rng));
    const double dx = static_cast<double>(shift(rng));
    const double g = gain(rng);
    for (std::size_t c = 0; c < style.channels; ++c)
      for (std::size_t y = 0; y < image_size; ++y)
        for (std::size_t x = 0; x < image_size; ++x) {
          double v = 0.0;
          for (const auto& b : prototypes[label][c]) {
            const double ry = static_cast<double>(y) - (b.cy + dy);
            const double rx = static_cast<double>(x) - (b.cx + dx);
            v += b.amplitude * std::exp(-(ry * ry + rx * rx) / (2.0 * b.sigma * b.sigma));
          }
          ds.images[offset++] = std::clamp(0.5 + 0.3 * g * v + noise(rng), 0.0, 1.0);
        }
  }
  return ds;
}

// ---------------------------------------------------------------- CSV

namespace {

double parse_number(std::string_view field, long line, std::size_t column) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
    field.remove_suffix(1);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || end != field.data() + field.size() || field.empty())
    throw ParseError("column " + std::to_string(column + 1) + ": '" + std::string(field) +
                         "' is not a number",
                     line);
  return value;
}

}  // namespace

Dataset load_csv_images(const std::filesystem::path& path, std::size_t num_classes,
                        const Shape& image_shape) {
  if (image_shape.size() != 3) throw ArgumentError("image_shape must be [C,H,W]");
  if (num_classes == 0) throw ArgumentError("num_classes must be positive");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV: " + path.string());

  const std::size_t pixels = shape_numel(image_shape);
  std::vector<double> values;
  std::vector<int> labels;
  std::string text;
  long line = 0;
  while (std::getline(in, text)) {
    ++line;
    std::string_view row(text);
    if (row.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    std::size_t column = 0;
    std::size_t start = 0;
    const std::size_t before = values.size();
    while (true) {
      const std::size_t comma = row.find(',', start);
      const auto field = row.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      const double v = parse_number(field, line, column);
      if (column == 0) {
        if (v != std::floor(v)) throw ParseError("label must be an integer", line);
        if (v < 0 || v >= static_cast<double>(num_classes))
          throw DataError(path.string() + " line " + std::to_string(line) + ": label " +
                          std::to_string(static_cast<long>(v)) + " outside [0, " +
                          std::to_string(num_classes) + ")");
        labels.push_back(static_cast<int>(v));
      } else {
        if (v < 0.0 || v > 255.0)
          throw DataError(path.string() + " line " + std::to_string(line) + ": pixel " +
                          std::to_string(v) + " outside [0, 255]");
        values.push_back(v / 255.0);
      }
      ++column;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (values.size() - before != pixels)
      throw ParseError("expected " + std::to_string(pixels) + " pixel values, found " +
                           std::to_string(values.size() - before),
                       line);
  }
  if (labels.empty()) throw DataError(path.string() + ": no samples");

  Dataset ds;
  ds.num_classes = num_classes;
  Shape shape{labels.size()};
  shape.insert(shape.end(), image_shape.begin(), image_shape.end());
  ds.images = Tensor(shape, Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
  ds.labels = std::move(labels);
  return ds;
}

void write_csv_images(const Dataset& ds, const std::filesystem::path& path) {
  ds.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open CSV for writing: " + path.string());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.labels[i];
    for (double v : ds.images.slice(i)) out << ',' << std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
    out << '\n';
  }
  if (!out) throw IoError("failed writing CSV: " + path.string());
}

ChannelStats channel_stats(const Dataset& ds) {
  const std::size_t n = ds.images.dim(0), channels = ds.images.dim(1);
  const std::size_t plane = ds.images.dim(2) * ds.images.dim(3);
  ChannelStats stats{std::vector<double>(channels, 0.0), std::vector<double>(channels, 0.0)};
  const double count = static_cast<double>(n * plane);
  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < plane; ++p) sum += ds.images[(i * channels + c) * plane + p];
    const double mean = sum / count;
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t p = 0; p < plane; ++p) {
        const double d = ds.images[(i * channels + c) * plane + p] - mean;
        sq += d * d;
      }
    stats.mean[c] = mean;
    stats.stddev[c] = std::sqrt(sq / count);
  }
  return stats;
}

void normalize(Dataset& ds, const ChannelStats& stats) {
  const std::size_t n = ds.images.dim(0), channels = ds.images.dim(1);
  if (stats.mean.size() != channels || stats.stddev.size() != channels)
    throw ArgumentError("channel statistics do not match dataset channels");
  const std::size_t plane = ds.images.dim(2) * ds.images.dim(3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < channels; ++c) {
      const double scale = stats.stddev[c] > 0.0 ? 1.0 / stats.stddev[c] : 1.0;
      auto seg = ds.images.data().segment(static_cast<Eigen::Index>((i * channels + c) * plane),
                                          static_cast<Eigen::Index>(plane));
      seg = (seg.array() - stats.mean[c]) * scale;
    }
}

// ---------------------------------------------------------------- loading

std::size_t batches_per_epoch(std::size_t samples, std::size_t batch_size) {
  if (batch_size == 0) throw ArgumentError("batch_size must be >= 1");
  return (samples + batch_size - 1) / batch_size;
}

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  return order;
}

Batch gather(const Dataset& ds, const std::vector<std::size_t>& indices) {
  Shape shape = ds.images.shape();
  shape[0] = indices.size();
  Batch batch{Tensor(shape), {}, indices};
  const auto per = static_cast<Eigen::Index>(ds.images.slice_size());
  batch.labels.reserve(indices.size());
  for (std::size_t b = 0; b < indices.size(); ++b) {
    batch.images.data().segment(static_cast<Eigen::Index>(b) * per, per) =
        ds.images.data().segment(static_cast<Eigen::Index>(indices[b]) * per, per);
    batch.labels.push_back(ds.labels[indices[b]]);
  }
  return batch;
}

namespace {

void augment_in_place(Tensor& images, std::mt19937_64& rng) {
  constexpr long kPad = 4;
  const std::size_t n = images.dim(0), channels = images.dim(1), h = images.dim(2), w = images.dim(3);
  std::bernoulli_distribution flip(0.5);
  std::uniform_int_distribution<long> offset(-kPad, kPad);
  std::vector<double> plane(h * w);
  for (std::size_t i = 0; i < n; ++i) {
    const bool mirror = flip(rng);
    const long oy = offset(rng), ox = offset(rng);
    for (std::size_t c = 0; c < channels; ++c) {
      double* p = images.data().data() + ((i * channels + c) * h) * w;
      std::copy(p, p + h * w, plane.begin());
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          const long sy = static_cast<long>(y) + oy;
          long sx = static_cast<long>(x) + ox;
          if (mirror) sx = static_cast<long>(w) - 1 - sx;
          const bool inside = sy >= 0 && sx >= 0 && sy < static_cast<long>(h) && sx < static_cast<long>(w);
          p[y * w + x] = inside ? plane[static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)] : 0.0;
        }
    }
  }
}

}  // namespace

std::vector<Batch> epoch_batches(const Dataset& ds, const LoaderConfig& cfg, std::size_t epoch) {
  const auto order = epoch_permutation(ds.size(), cfg.shuffle_seed, epoch);
  const std::size_t count = batches_per_epoch(ds.size(), cfg.batch_size);
  std::mt19937_64 aug_rng(cfg.shuffle_seed ^ (0x9E3779B97F4A7C15ull * (epoch + 1)));
  std::vector<Batch> batches;
  batches.reserve(count);
  for (std::size_t b = 0; b < count; ++b) {
    const auto first = order.begin() + static_cast<long>(b * cfg.batch_size);
    const auto last = order.begin() + static_cast<long>(std::min(ds.size(), (b + 1) * cfg.batch_size));
    batches.push_back(gather(ds, std::vector<std::size_t>(first, last)));
    if (cfg.augment) augment_in_place(batches.back().images, aug_rng);
  }
  return batches;
}

}  // namespace graftnet
