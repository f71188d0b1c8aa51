#include "graftnet/report.hpp"

#include "graftnet/criteria.hpp"
#include "graftnet/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <iterator>
#include <sstream>

namespace graftnet {

double invalid_filter_ratio(const ParameterSet& params, double threshold) {
  if (!(threshold >= 0.0)) throw ArgumentError("threshold must be >= 0");
  std::size_t total = 0, invalid = 0;
  for (const auto& p : params) {
    if (!is_conv_weight(p.name)) continue;
    for (double l1 : filter_l1_norms(p.value)) {
      ++total;
      if (l1 < threshold) ++invalid;
    }
  }
  if (total == 0) throw ArgumentError("network has no conv filters");
  return static_cast<double>(invalid) / static_cast<double>(total);
}

std::vector<bool> FilterCensus::partition() const {
  std::vector<bool> valid;
  valid.reserve(filters.size());
  for (const auto& f : filters) valid.push_back(f.valid);
  return valid;
}

namespace {

std::vector<FilterRecord> census_records(const ParameterSet& params) {
  std::vector<FilterRecord> records;
  for (const auto& p : params) {
    if (!is_conv_weight(p.name)) continue;
    const auto norms = filter_l1_norms(p.value);
    for (std::size_t j = 0; j < norms.size(); ++j) records.push_back({layer_prefix(p.name), j, norms[j], false});
  }
  return records;
}

void summarize(FilterCensus& census) {
  double valid_sum = 0.0, invalid_sum = 0.0;
  for (const auto& f : census.filters) {
    if (f.valid) {
      ++census.valid_count;
      valid_sum += f.l1_norm;
    } else {
      ++census.invalid_count;
      invalid_sum += f.l1_norm;
    }
  }
  if (census.valid_count) census.valid_average_l1 = valid_sum / static_cast<double>(census.valid_count);
  if (census.invalid_count) census.invalid_average_l1 = invalid_sum / static_cast<double>(census.invalid_count);
}

}  // namespace

FilterCensus filter_census(const ParameterSet& params, double threshold) {
  if (!(threshold >= 0.0)) throw ArgumentError("threshold must be >= 0");
  FilterCensus census;
  census.threshold = threshold;
  census.filters = census_records(params);
  for (auto& f : census.filters) f.valid = !(f.l1_norm < threshold);
  summarize(census);
  return census;
}

FilterCensus filter_census(const ParameterSet& params, const std::vector<bool>& valid) {
  FilterCensus census;
  census.filters = census_records(params);
  if (valid.size() != census.filters.size())
    throw ArgumentError("partition has " + std::to_string(valid.size()) + " entries for " +
                        std::to_string(census.filters.size()) + " filters");
  for (std::size_t i = 0; i < valid.size(); ++i) census.filters[i].valid = valid[i];
  summarize(census);
  return census;
}

// ---------------------------------------------------------------- formatting

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw IoError("number formatting failed");
  return std::string(buf, end);
}

namespace {

double ratio_at(const EpochMetrics& m, double threshold) {
  const auto it = m.invalid_ratio_at.find(threshold);
  return it == m.invalid_ratio_at.end() ? std::nan("") : it->second;
}

double parse_field(const std::string& s, long line) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw ParseError("bad metrics value '" + s + "'", line);
  return v;
}

}  // namespace

std::string format_metrics_csv_row(const EpochMetrics& m) {
  std::ostringstream os;
  os << m.epoch << ',' << m.network_id << ',' << format_double(m.train_loss) << ','
     << format_double(m.train_accuracy) << ',' << format_double(m.test_accuracy) << ','
     << format_double(m.effective_lr) << ',' << format_double(ratio_at(m, kDiagnosticThresholds[0])) << ','
     << format_double(ratio_at(m, kDiagnosticThresholds[1])) << ',' << format_double(m.network_entropy) << ','
     << format_double(m.mean_alpha);
  return os.str();
}

std::string format_metrics_json(const EpochMetrics& m) {
  nlohmann::ordered_json j;
  j["epoch"] = m.epoch;
  j["network_id"] = m.network_id;
  j["train_loss"] = m.train_loss;
  j["train_accuracy"] = m.train_accuracy;
  j["test_accuracy"] = m.test_accuracy;
  j["effective_lr"] = m.effective_lr;
  auto ratios = nlohmann::ordered_json::object();
  for (const auto& [t, r] : m.invalid_ratio_at) ratios[format_double(t)] = r;
  j["invalid_ratio_at"] = ratios;
  j["network_entropy"] = m.network_entropy;
  j["mean_alpha"] = m.mean_alpha;
  return j.dump();
}

EpochMetrics parse_metrics_json(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    EpochMetrics m;
    m.epoch = j.at("epoch").get<std::size_t>();
    m.network_id = j.at("network_id").get<std::size_t>();
    m.train_loss = j.at("train_loss").get<double>();
    m.train_accuracy = j.at("train_accuracy").get<double>();
    m.test_accuracy = j.at("test_accuracy").get<double>();
    m.effective_lr = j.at("effective_lr").get<double>();
    for (const auto& [k, v] : j.at("invalid_ratio_at").items()) m.invalid_ratio_at[std::stod(k)] = v.get<double>();
    m.network_entropy = j.at("network_entropy").get<double>();
    m.mean_alpha = j.at("mean_alpha").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad metrics json: ") + e.what());
  }
}

std::string format_graft_event_json(const GraftEvent& e) {
  nlohmann::ordered_json j;
  j["epoch"] = e.epoch;
  j["layer"] = e.layer_name;
  j["alpha"] = e.alpha;
  j["h_self"] = e.h_self;
  j["h_other"] = e.h_other;
  j["source_network"] = e.source_network;
  j["target_network"] = e.target_network;
  return j.dump();
}

GraftEvent parse_graft_event_json(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    return {j.at("epoch").get<std::size_t>(),       j.at("layer").get<std::string>(),
            j.at("alpha").get<double>(),            j.at("h_self").get<double>(),
            j.at("h_other").get<double>(),          j.at("source_network").get<std::size_t>(),
            j.at("target_network").get<std::size_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad graft event json: ") + e.what());
  }
}

// ---------------------------------------------------------------- writer

namespace {

void drop_torn_tail(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (content.empty() || content.back() == '\n') return;
  const auto keep = content.find_last_of('\n');
  std::filesystem::resize_file(path, keep == std::string::npos ? 0 : keep + 1);
}

}  // namespace

MetricsWriter::MetricsWriter(std::filesystem::path path, MetricsFormat format, Mode mode)
    : path_(std::move(path)), format_(format) {
  if (mode == Mode::Append && std::filesystem::exists(path_)) drop_torn_tail(path_);
  const bool fresh = mode == Mode::Truncate || !std::filesystem::exists(path_) ||
                     std::filesystem::file_size(path_) == 0;
  out_.open(path_, fresh ? std::ios::trunc : std::ios::app);
  if (!out_) throw IoError("cannot open metrics file: " + path_.string());
  if (fresh && format_ == MetricsFormat::Csv) {
    out_ << kMetricsVersionLine << '\n' << kMetricsCsvHeader << '\n';
    out_.flush();
    if (!out_) throw IoError("failed writing metrics header: " + path_.string());
  }
}

void MetricsWriter::write(const EpochMetrics& record) {
  out_ << (format_ == MetricsFormat::Csv ? format_metrics_csv_row(record) : format_metrics_json(record)) << '\n';
  out_.flush();
  if (!out_) throw IoError("failed writing metrics: " + path_.string());
}

void export_metrics(const std::vector<EpochMetrics>& records, const std::filesystem::path& path,
                    MetricsFormat format) {
  MetricsWriter writer(path, format);
  for (const auto& r : records) writer.write(r);
}

std::vector<EpochMetrics> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open metrics file: " + path.string());
  std::vector<EpochMetrics> records;
  std::string line;
  long number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (in.eof()) break;  // no trailing newline: torn by an interrupted writer
    if (line.empty() || line[0] == '#' || line.rfind("epoch,", 0) == 0) continue;
    if (line[0] == '{') {
      records.push_back(parse_metrics_json(line));
      continue;
    }
    {
      std::vector<std::string> fields;
      std::stringstream ss(line);
      for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
      if (fields.size() != 10) throw ParseError("expected 10 metrics columns", number);
      EpochMetrics m;
      m.epoch = static_cast<std::size_t>(parse_field(fields[0], number));
      m.network_id = static_cast<std::size_t>(parse_field(fields[1], number));
      m.train_loss = parse_field(fields[2], number);
      m.train_accuracy = parse_field(fields[3], number);
      m.test_accuracy = parse_field(fields[4], number);
      m.effective_lr = parse_field(fields[5], number);
      m.invalid_ratio_at[kDiagnosticThresholds[0]] = parse_field(fields[6], number);
      m.invalid_ratio_at[kDiagnosticThresholds[1]] = parse_field(fields[7], number);
      m.network_entropy = parse_field(fields[8], number);
      m.mean_alpha = parse_field(fields[9], number);
      records.push_back(std::move(m));
    }
  }
  return records;
}

MetricsComparison compare_metrics(const std::vector<EpochMetrics>& a, const std::vector<EpochMetrics>& b,
                                  std::size_t network_id) {
  std::map<std::size_t, const EpochMetrics*> by_epoch;
  for (const auto& m : b)
    if (m.network_id == network_id) by_epoch[m.epoch] = &m;
  MetricsComparison cmp;
  double delta_sum = 0.0;
  for (const auto& m : a) {
    if (m.network_id != network_id) continue;
    const auto it = by_epoch.find(m.epoch);
    if (it == by_epoch.end()) continue;
    const auto& other = *it->second;
    cmp.rows.push_back({m.epoch, network_id, m.test_accuracy, other.test_accuracy, m.train_loss, other.train_loss});
    delta_sum += other.test_accuracy - m.test_accuracy;
  }
  if (cmp.rows.empty()) throw DataError("metrics files share no epochs for network " + std::to_string(network_id));
  cmp.final_accuracy_a = cmp.rows.back().test_accuracy_a;
  cmp.final_accuracy_b = cmp.rows.back().test_accuracy_b;
  cmp.mean_accuracy_delta = delta_sum / static_cast<double>(cmp.rows.size());
  return cmp;
}

}  // namespace graftnet
