#pragma once

#include "graftnet/graft.hpp"
#include "graftnet/network.hpp"
#include "graftnet/tensor.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace graftnet {

/// One network's measurements at the end of one epoch.
struct EpochMetrics {
  std::size_t epoch = 0;
  std::size_t network_id = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double effective_lr = 0.0;
  std::map<double, double> invalid_ratio_at;  // threshold -> ratio
  double network_entropy = 0.0;
  double mean_alpha = 0.5;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

/// Thresholds reported in the CSV columns invalid_ratio_1e-3 / invalid_ratio_1e-1.
inline constexpr double kDiagnosticThresholds[] = {1e-3, 1e-1};

/// Fraction of conv filters whose l1 norm is strictly below threshold.
double invalid_filter_ratio(const ParameterSet& params, double threshold);
inline double invalid_filter_ratio(const Network& net, double threshold) {
  return invalid_filter_ratio(net.parameters(), threshold);
}

struct FilterRecord {
  std::string layer;
  std::size_t index = 0;
  double l1_norm = 0.0;
  bool valid = false;
};

/// Valid/invalid classification of every conv filter with class averages.
/// An empty class has no average (nullopt), not 0.
struct FilterCensus {
  std::vector<FilterRecord> filters;
  std::optional<double> threshold;  // absent when a fixed partition was supplied
  std::size_t valid_count = 0;
  std::size_t invalid_count = 0;
  std::optional<double> valid_average_l1;
  std::optional<double> invalid_average_l1;

  /// valid flags in filter order, for reuse as a fixed partition.
  std::vector<bool> partition() const;
};

FilterCensus filter_census(const ParameterSet& params, double threshold);
/// Census under an externally fixed partition (e.g. taken from a baseline).
FilterCensus filter_census(const ParameterSet& params, const std::vector<bool>& valid);

enum class MetricsFormat { Csv, JsonLines };

inline constexpr char kMetricsVersionLine[] = "# graftnet-metrics v1";
inline constexpr char kMetricsCsvHeader[] =
    "epoch,network_id,train_loss,train_accuracy,test_accuracy,effective_lr,"
    "invalid_ratio_1e-3,invalid_ratio_1e-1,network_entropy,mean_alpha";

/// Single-writer metrics stream, flushed after every record.
class MetricsWriter {
 public:
  enum class Mode { Truncate, Append };

  MetricsWriter(std::filesystem::path path, MetricsFormat format, Mode mode = Mode::Truncate);
  void write(const EpochMetrics& record);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  MetricsFormat format_;
  std::ofstream out_;
};

void export_metrics(const std::vector<EpochMetrics>& records, const std::filesystem::path& path,
                    MetricsFormat format);

/// Reads a metrics file written in either format (detected from content).
/// A truncated final line is ignored.
std::vector<EpochMetrics> read_metrics(const std::filesystem::path& path);

std::string format_metrics_csv_row(const EpochMetrics& m);
std::string format_metrics_json(const EpochMetrics& m);
EpochMetrics parse_metrics_json(const std::string& line);

std::string format_graft_event_json(const GraftEvent& e);
GraftEvent parse_graft_event_json(const std::string& line);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

struct MetricsComparison {
  struct Row {
    std::size_t epoch;
    std::size_t network_id;
    double test_accuracy_a;
    double test_accuracy_b;
    double train_loss_a;
    double train_loss_b;
  };
  std::vector<Row> rows;
  double final_accuracy_a = 0.0;
  double final_accuracy_b = 0.0;
  double mean_accuracy_delta = 0.0;  // b - a over matched rows
};

/// Matches records by (epoch, network_id) for one network.
MetricsComparison compare_metrics(const std::vector<EpochMetrics>& a, const std::vector<EpochMetrics>& b,
                                  std::size_t network_id = 0);

}  // namespace graftnet
