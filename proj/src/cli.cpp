#include "graftnet/cli.hpp"

#include "graftnet/checkpoint.hpp"
#include "graftnet/config.hpp"
#include "graftnet/criteria.hpp"
#include "graftnet/errors.hpp"
#include "graftnet/gradcheck.hpp"
#include "graftnet/graft.hpp"
#include "graftnet/orchestrator.hpp"
#include "graftnet/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <optional>
#include <random>
#include <sstream>

namespace graftnet {

namespace {

struct TrainArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

struct AnalyzeArgs {
  std::string checkpoint;
  std::vector<double> thresholds{kDiagnosticThresholds[0], kDiagnosticThresholds[1]};
  std::string format = "csv";
  std::string baseline;
  std::size_t bins = 256;
};

struct GraftDemoArgs {
  std::string self;
  std::string other;
  std::string out;
  std::string criterion = "entropy";
  GraftConfig graft;
};

struct CompareArgs {
  std::vector<std::string> files;
  std::size_t network = 0;
};

struct GradcheckArgs {
  std::string architecture;
  std::uint64_t seed = 0;
  std::size_t batch = 4;
  double tolerance = 1e-5;
  double epsilon = 1e-6;
};

std::string optional_text(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

int run_train(const TrainArgs& a, std::ostream& out) {
  ExperimentConfig cfg;
  try {
    cfg = load_experiment_config(a.config);
    if (a.seed) reseed(cfg, *a.seed);
    if (!a.out.empty()) cfg.output_dir = a.out;
    cfg.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(a.config + ": " + e.what());
  }
  const auto result = run_experiment(cfg);
  for (std::size_t k = 0; k < result.final_test_accuracy.size(); ++k)
    out << (k < cfg.num_students ? "student " : "teacher ") << k << " test_accuracy "
        << format_double(result.final_test_accuracy[k]) << '\n';
  out << "iterations " << result.iterations << " graft_events " << result.events.size() << '\n';
  return 0;
}

int run_analyze(const AnalyzeArgs& a, std::ostream& out) {
  for (double t : a.thresholds)
    if (!(t >= 0.0)) throw ArgumentError("thresholds must be >= 0");
  if (a.format != "csv" && a.format != "json") throw ArgumentError("--format must be csv or json");
  const ParameterSet params = load_checkpoint(a.checkpoint);
  std::optional<ParameterSet> baseline;
  if (!a.baseline.empty()) baseline = load_checkpoint(a.baseline);
  const double info = network_information(params, HistogramSpec{a.bins});

  std::vector<FilterCensus> censuses;
  for (double t : a.thresholds) {
    auto census = baseline ? filter_census(params, filter_census(*baseline, t).partition()) : filter_census(params, t);
    census.threshold = t;
    censuses.push_back(std::move(census));
  }

  if (a.format == "csv") {
    out << "threshold,partition,total,valid_count,invalid_count,invalid_ratio,valid_average_l1,invalid_average_l1,"
           "network_information\n";
    for (const auto& c : censuses) {
      const std::size_t total = c.filters.size();
      out << format_double(*c.threshold) << ',' << (baseline ? "baseline" : "own") << ',' << total << ','
          << c.valid_count << ',' << c.invalid_count << ','
          << format_double(static_cast<double>(c.invalid_count) / static_cast<double>(total)) << ','
          << optional_text(c.valid_average_l1) << ',' << optional_text(c.invalid_average_l1) << ','
          << format_double(info) << '\n';
    }
    return 0;
  }

  nlohmann::ordered_json j;
  j["checkpoint"] = a.checkpoint;
  j["network_information"] = info;
  auto list = nlohmann::ordered_json::array();
  for (const auto& c : censuses) {
    nlohmann::ordered_json e;
    e["threshold"] = *c.threshold;
    e["partition"] = baseline ? "baseline" : "own";
    e["valid_count"] = c.valid_count;
    e["invalid_count"] = c.invalid_count;
    e["invalid_ratio"] = static_cast<double>(c.invalid_count) / static_cast<double>(c.filters.size());
    e["valid_average_l1"] = optional_json(c.valid_average_l1);
    e["invalid_average_l1"] = optional_json(c.invalid_average_l1);
    auto filters = nlohmann::ordered_json::array();
    for (const auto& f : c.filters)
      filters.push_back({{"layer", f.layer}, {"index", f.index}, {"l1_norm", f.l1_norm}, {"valid", f.valid}});
    e["filters"] = filters;
    list.push_back(e);
  }
  j["censuses"] = list;
  out << j.dump(2) << '\n';
  return 0;
}

int run_graft_demo(GraftDemoArgs a, std::ostream& out) {
  a.graft.criterion = parse_criterion(a.criterion);
  a.graft.validate();
  ParameterSet self = load_checkpoint(a.self);
  const ParameterSet other = load_checkpoint(a.other);
  const auto events = graft_pair(self, other, a.graft, 0, 1, 0);
  for (const auto& e : events) out << format_graft_event_json(e) << '\n';
  if (!a.out.empty()) save_checkpoint(a.out, self);
  return 0;
}

int run_compare(const CompareArgs& a, std::ostream& out) {
  const auto cmp = compare_metrics(read_metrics(a.files[0]), read_metrics(a.files[1]), a.network);
  out << "epoch,network_id,test_accuracy_a,test_accuracy_b,delta,train_loss_a,train_loss_b\n";
  for (const auto& r : cmp.rows)
    out << r.epoch << ',' << r.network_id << ',' << format_double(r.test_accuracy_a) << ','
        << format_double(r.test_accuracy_b) << ',' << format_double(r.test_accuracy_b - r.test_accuracy_a) << ','
        << format_double(r.train_loss_a) << ',' << format_double(r.train_loss_b) << '\n';
  out << "# final_accuracy_a " << format_double(cmp.final_accuracy_a) << '\n'
      << "# final_accuracy_b " << format_double(cmp.final_accuracy_b) << '\n'
      << "# mean_accuracy_delta " << format_double(cmp.mean_accuracy_delta) << '\n';
  return 0;
}

int run_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  Architecture arch;
  try {
    arch = load_architecture(a.architecture);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(a.architecture + ": " + e.what());
  }
  if (a.batch == 0) throw ArgumentError("--batch must be positive");
  Network net = Network::build(arch, a.seed);
  Shape shape{a.batch};
  shape.insert(shape.end(), arch.input.begin(), arch.input.end());
  Tensor batch(shape);
  std::mt19937_64 rng(a.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& v : batch.values()) v = u(rng);
  std::vector<int> labels(a.batch);
  for (std::size_t i = 0; i < a.batch; ++i) labels[i] = static_cast<int>(i % net.num_classes());

  const auto report = gradient_check(net, batch, labels, a.tolerance, a.epsilon);
  out << "parameter,max_relative_error,status\n";
  for (const auto& p : report.parameters)
    out << p.name << ',' << format_double(p.max_relative_error) << ',' << (p.flagged ? "FLAGGED" : "ok") << '\n';
  out << "# max_relative_error " << format_double(report.max_relative_error()) << " tolerance "
      << format_double(a.tolerance) << ' ' << (report.passed() ? "PASS" : "FAIL") << '\n';
  return report.passed() ? 0 : 2;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Filter grafting for convolutional networks", "graftnet"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Run an experiment config");
  train_cmd->add_option("--config", train.config, "Experiment YAML file")->required();
  train_cmd->add_option("--out", train.out, "Output directory (overrides output.dir)");
  train_cmd->add_option("--seed", train.seed, "Re-seed network k with SEED + k");

  AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Filter census and invalid-filter ratios of a checkpoint");
  analyze_cmd->add_option("--checkpoint", analyze.checkpoint, "Checkpoint file")->required();
  analyze_cmd->add_option("--thresholds", analyze.thresholds, "l1 thresholds")->delimiter(',');
  analyze_cmd->add_option("--format", analyze.format, "csv or json");
  analyze_cmd->add_option("--baseline", analyze.baseline, "Classify filters with this checkpoint's partition");
  analyze_cmd->add_option("--bins", analyze.bins, "Histogram bins for network information");

  GraftDemoArgs demo;
  auto* demo_cmd = app.add_subcommand("graft-demo", "Graft one checkpoint with another and print the events");
  demo_cmd->add_option("--self", demo.self, "Receiving checkpoint")->required();
  demo_cmd->add_option("--other", demo.other, "Scion checkpoint")->required();
  demo_cmd->add_option("--out", demo.out, "Where to write the grafted checkpoint");
  demo_cmd->add_option("--criterion", demo.criterion, "entropy or l1");
  demo_cmd->add_option("--A", demo.graft.A, "Coefficient amplitude");
  demo_cmd->add_option("--c", demo.graft.c, "Coefficient steepness");
  demo_cmd->add_option("--bins", demo.graft.bin_count, "Histogram bins");
  demo_cmd->add_option("--epsilon", demo.graft.alpha_clamp_epsilon, "Coefficient clamp margin");
  demo_cmd->add_flag("--graft-dense", demo.graft.graft_dense, "Also graft dense layers");

  CompareArgs compare;
  auto* compare_cmd = app.add_subcommand("compare", "Per-epoch accuracy deltas between two metrics files");
  compare_cmd->add_option("files", compare.files, "Metrics files A and B")->required()->expected(2);
  compare_cmd->add_option("--network", compare.network, "Network id to compare");

  GradcheckArgs grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check of an architecture");
  grad_cmd->add_option("--architecture", grad.architecture, "Architecture YAML file")->required();
  grad_cmd->add_option("--seed", grad.seed, "Initialisation seed");
  grad_cmd->add_option("--batch", grad.batch, "Random batch size");
  grad_cmd->add_option("--tolerance", grad.tolerance, "Maximum relative error");
  grad_cmd->add_option("--epsilon", grad.epsilon, "Finite-difference step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*train_cmd) return run_train(train, out);
    if (*analyze_cmd) return run_analyze(analyze, out);
    if (*demo_cmd) return run_graft_demo(demo, out);
    if (*compare_cmd) return run_compare(compare, out);
    if (*grad_cmd) return run_gradcheck(grad, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "failed: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace graftnet
