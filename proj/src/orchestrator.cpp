#include "graftnet/orchestrator.hpp"

#include "graftnet/checkpoint.hpp"
#include "graftnet/criteria.hpp"
#include "graftnet/errors.hpp"
#include "graftnet/loss.hpp"

#include <array>
#include <atomic>
#include <barrier>
#include <cmath>
#include <fstream>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

namespace graftnet {

void ExperimentConfig::validate() const {
  if (num_students < 1) throw ConfigError("at least one student network is required");
  if (trainers.size() != num_students + num_teachers)
    throw ConfigError("expected " + std::to_string(num_students + num_teachers) + " trainer configs, got " +
                      std::to_string(trainers.size()));
  for (std::size_t k = 0; k < trainers.size(); ++k) {
    try {
      trainers[k].validate();
    } catch (const ConfigError& e) {
      throw ConfigError("trainer " + std::to_string(k) + ": " + e.what());
    }
    if (trainers[k].epochs != trainers.front().epochs)
      throw ConfigError("all networks must train for the same number of epochs");
  }
  graft.validate();
  if (num_teachers > 0) distill.validate();
  if (!teacher_checkpoints.empty() && teacher_checkpoints.size() != num_teachers)
    throw ConfigError("teacher_checkpoints must list one checkpoint per teacher");
  if (data.source == DataConfig::Source::Csv && (data.train_csv.empty() || data.test_csv.empty()))
    throw ConfigError("csv data source needs train_csv and test_csv");
}

TrainerConfig diversify(const TrainerConfig& base, std::size_t k) {
  static constexpr std::array<double, 8> kLrFactors{1.0, 0.9, 1.1, 0.8, 1.2, 0.7, 1.3, 0.6};
  TrainerConfig cfg = base;
  cfg.seed = base.seed + k;
  cfg.loader_seed = base.loader_seed + k;
  cfg.learning_rate = base.learning_rate * kLrFactors[k % kLrFactors.size()];
  return cfg;
}

std::vector<GraftEvent> barrier_graft(std::span<ParameterSet* const> students,
                                      std::span<const std::size_t> iterations, const GraftConfig& cfg,
                                      std::size_t epoch) {
  if (iterations.size() != students.size()) throw ProtocolError("one iteration count per student required");
  for (auto n : iterations)
    if (n != iterations.front())
      throw ProtocolError("graft barrier reached at different iterations (" + std::to_string(iterations.front()) +
                          " vs " + std::to_string(n) + ")");
  const std::size_t k_count = students.size();
  if (k_count < 2) return {};

  GraftBarrierState state;
  state.snapshots.reserve(k_count);
  for (const auto* s : students) state.snapshots.push_back(*s);
  state.completed.assign(k_count, false);

  std::vector<GraftEvent> events;
  for (std::size_t k = 0; k < k_count; ++k) {
    const std::size_t source = (k + k_count - 1) % k_count;
    auto e = graft_pair(*students[k], state.snapshots[source], cfg, epoch, source, k);
    events.insert(events.end(), e.begin(), e.end());
    state.completed[k] = true;
  }
  return events;
}

std::vector<GraftEvent> barrier_graft(std::vector<Network>& students, const GraftConfig& cfg, std::size_t epoch) {
  std::vector<ParameterSet*> params;
  for (auto& s : students) params.push_back(&s.mutable_parameters());
  const std::vector<std::size_t> iterations(students.size(), 0);
  return barrier_graft(params, iterations, cfg, epoch);
}

PreparedData prepare_data(const DataConfig& cfg) {
  PreparedData data;
  if (cfg.source == DataConfig::Source::Synthetic) {
    data.train = generate_synthetic(cfg.num_classes, cfg.train_per_class, cfg.image_size, cfg.seed, cfg.style);
    data.test = generate_synthetic(cfg.num_classes, cfg.test_per_class, cfg.image_size, cfg.seed + 1, cfg.style);
  } else {
    data.train = load_csv_images(cfg.train_csv, cfg.num_classes, cfg.image_shape);
    data.test = load_csv_images(cfg.test_csv, cfg.num_classes, cfg.image_shape);
  }
  const auto stats = channel_stats(data.train);
  normalize(data.train, stats);
  normalize(data.test, stats);
  return data;
}

namespace {

constexpr std::size_t kEvalChunk = 256;

double evaluate_accuracy(const Network& net, const Dataset& ds) {
  std::size_t correct = 0;
  for (std::size_t first = 0; first < ds.size(); first += kEvalChunk) {
    std::vector<std::size_t> idx;
    for (std::size_t i = first; i < std::min(ds.size(), first + kEvalChunk); ++i) idx.push_back(i);
    const Batch b = gather(ds, idx);
    correct += static_cast<std::size_t>(std::lround(accuracy(net.predict(b.images), b.labels) *
                                                    static_cast<double>(idx.size())));
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = a * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull;
  h ^= b + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
  h ^= c + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
  return h;
}

struct Trainer {
  std::size_t id = 0;
  bool teacher = false;
  bool frozen = false;
  Network net;
  ParameterSet velocity{};
  TrainerConfig cfg;
  LoaderConfig loader{};
  std::vector<Batch> batches{};
  Tensor teacher_avg{};
  double loss_sum = 0.0;
  double correct_sum = 0.0;
  std::size_t seen = 0;
  std::size_t iterations_done = 0;
};

// Invoked by the last trainer to arrive; the others stay blocked until it
// returns, so it may read and write every network.
struct PhaseCompletion {
  std::function<void()>* body;
  void operator()() noexcept { (*body)(); }
};

class ExperimentRunner {
 public:
  ExperimentRunner(const ExperimentConfig& cfg, const PreparedData& data) : cfg_(cfg), data_(data) {
    cfg_.validate();
    data_.train.validate();
    data_.test.validate();
    const std::size_t total = cfg_.num_students + cfg_.num_teachers;
    ipe_ = batches_per_epoch(data_.train.size(), cfg_.trainers.front().batch_size);
    for (std::size_t k = 0; k < total; ++k) {
      if (batches_per_epoch(data_.train.size(), cfg_.trainers[k].batch_size) != ipe_)
        throw ConfigError("all networks must run the same number of iterations per epoch");
    }
    max_iter_ = cfg_.max_iterations ? cfg_.max_iterations : cfg_.trainers.front().epochs * ipe_;
    period_ = cfg_.graft.graft_period_iters ? cfg_.graft.graft_period_iters : ipe_;
    if (period_ <= max_iter_ && ipe_ % period_ != 0 && period_ % ipe_ != 0)
      throw ConfigError("graft period " + std::to_string(period_) + " must divide or be a multiple of the " +
                        std::to_string(ipe_) + " iterations per epoch");

    for (std::size_t k = 0; k < total; ++k) {
      const bool teacher = k >= cfg_.num_students;
      const TrainerConfig& tc = cfg_.trainers[k];
      const Architecture& arch = teacher && cfg_.teacher_architecture ? *cfg_.teacher_architecture : cfg_.architecture;
      Trainer t{.id = k, .teacher = teacher, .net = Network::build(arch, tc.seed), .cfg = tc};
      if (teacher && !cfg_.teacher_checkpoints.empty()) {
        t.net.set_parameters(load_checkpoint(cfg_.teacher_checkpoints[k - cfg_.num_students]));
        t.frozen = true;
      }
      if (t.net.num_classes() != data_.train.num_classes)
        throw ConfigError("network " + std::to_string(k) + " emits " + std::to_string(t.net.num_classes()) +
                          " logits for " + std::to_string(data_.train.num_classes) + " classes");
      t.velocity = zero_velocity(t.net.parameters());
      t.loader = {tc.loader_seed, tc.batch_size, cfg_.data.augment};
      trainers_.push_back(std::move(t));
    }

    if (cfg_.output_dir) {
      std::filesystem::create_directories(*cfg_.output_dir);
      if (cfg_.checkpoint_every_epochs) std::filesystem::create_directories(*cfg_.output_dir / "checkpoints");
      const auto name = cfg_.metrics_format == MetricsFormat::Csv ? "metrics.csv" : "metrics.jsonl";
      writer_.emplace(*cfg_.output_dir / name, cfg_.metrics_format);
      events_path_ = *cfg_.output_dir / "graft_events.jsonl";
      events_out_.open(events_path_, std::ios::trunc);
      if (!events_out_) throw IoError("cannot open " + events_path_.string());
    }
  }

  ExperimentResult run() {
    std::function<void()> after_targets = [this] { stop_ = abort_.load(); };
    std::function<void()> after_step = [this] {
      if (!abort_.load()) {
        try {
          on_iteration_end(iteration_);
        } catch (...) {
          record_error(std::current_exception());
        }
      }
      ++iteration_;
      stop_ = abort_.load();
    };
    const auto participants = static_cast<std::ptrdiff_t>(trainers_.size());
    std::barrier targets_barrier(participants, PhaseCompletion{&after_targets});
    std::barrier step_barrier(participants, PhaseCompletion{&after_step});
    const bool distilling = cfg_.num_teachers > 0;
    iteration_ = 1;

    auto body = [&](Trainer& t) {
      for (std::size_t n = 1; n <= max_iter_; ++n) {
        if (distilling) {
          if (!abort_.load()) guarded([&] { prepare_targets(t, n); });
          targets_barrier.arrive_and_wait();
          if (stop_) return;
        } else if (!abort_.load()) {
          guarded([&] { load_epoch(t, n); });
        }
        if (!abort_.load()) guarded([&] { train_step(t, n); });
        step_barrier.arrive_and_wait();
        if (stop_) return;
      }
    };

    std::vector<std::thread> threads;
    for (auto& t : trainers_) threads.emplace_back(body, std::ref(t));
    for (auto& th : threads) th.join();
    if (first_error_) std::rethrow_exception(first_error_);

    result_.iterations = max_iter_;
    result_.iterations_per_epoch = ipe_;
    for (auto& t : trainers_) {
      result_.final_parameters.push_back(t.net.parameters());
      result_.final_test_accuracy.push_back(evaluate_accuracy(t.net, data_.test));
      if (cfg_.output_dir)
        save_checkpoint(*cfg_.output_dir / ("net" + std::to_string(t.id) + "_final.ckpt"), t.net.parameters());
    }
    return std::move(result_);
  }

 private:
  template <typename F>
  void guarded(F&& f) {
    try {
      f();
    } catch (...) {
      record_error(std::current_exception());
    }
  }

  void record_error(std::exception_ptr e) {
    std::lock_guard lock(error_mutex_);
    if (!first_error_) first_error_ = e;
    abort_ = true;
  }

  std::size_t epoch_of(std::size_t n) const { return (n - 1) / ipe_; }

  void load_epoch(Trainer& t, std::size_t n) {
    if ((n - 1) % ipe_ == 0) t.batches = epoch_batches(data_.train, t.loader, epoch_of(n));
  }

  // Phase 1 of a distillation iteration: teachers are read-only here.
  void prepare_targets(Trainer& t, std::size_t n) {
    load_epoch(t, n);
    if (t.teacher) return;
    const Batch& batch = t.batches[(n - 1) % ipe_];
    std::vector<Tensor> probs;
    for (std::size_t m = cfg_.num_students; m < trainers_.size(); ++m)
      probs.push_back(temperature_softmax(trainers_[m].net.predict(batch.images), cfg_.distill.temperature).probs);
    t.teacher_avg = teacher_average(probs);
  }

  void train_step(Trainer& t, std::size_t n) {
    t.iterations_done = n;
    if (t.frozen) return;
    const Batch& batch = t.batches[(n - 1) % ipe_];
    const Tensor logits = t.net.forward(batch.images);
    double loss = 0.0;
    Tensor grad;
    if (!t.teacher && cfg_.num_teachers > 0) {
      auto sl = student_total_loss(logits, batch.labels, t.teacher_avg, cfg_.distill);
      loss = sl.total;
      grad = std::move(sl.grad);
    } else {
      auto ce = cross_entropy(logits, batch.labels);
      loss = ce.loss;
      grad = std::move(ce.grad);
    }
    if (!std::isfinite(loss))
      throw std::runtime_error("network " + std::to_string(t.id) + " diverged at iteration " + std::to_string(n));
    const auto bs = static_cast<double>(batch.labels.size());
    t.loss_sum += loss * bs;
    t.correct_sum += accuracy(logits, batch.labels) * bs;
    t.seen += batch.labels.size();
    t.net.backward(grad);
    sgd_step(t.net.mutable_parameters(), t.net.gradients(), t.velocity, t.cfg, epoch_of(n));
  }

  void on_iteration_end(std::size_t n) {
    const std::size_t epoch = epoch_of(n);
    if (cfg_.graft_enabled && n % period_ == 0) graft(n, epoch);
    if (n % ipe_ == 0 || n == max_iter_) end_epoch(epoch);
  }

  void graft(std::size_t n, std::size_t epoch) {
    const std::size_t k_count = cfg_.num_students;
    switch (cfg_.graft.scion_source) {
      case ScionSource::External: {
        std::vector<ParameterSet*> params;
        std::vector<std::size_t> iterations;
        for (std::size_t k = 0; k < k_count; ++k) {
          params.push_back(&trainers_[k].net.mutable_parameters());
          iterations.push_back(trainers_[k].iterations_done);
        }
        auto events = barrier_graft(params, iterations, cfg_.graft, epoch);
        if (events_out_.is_open()) {
          for (const auto& e : events) events_out_ << format_graft_event_json(e) << '\n';
          events_out_.flush();
          if (!events_out_) throw IoError("failed writing " + events_path_.string());
        }
        epoch_events_.insert(epoch_events_.end(), events.begin(), events.end());
        result_.events.insert(result_.events.end(), events.begin(), events.end());
        break;
      }
      case ScionSource::Noise:
        for (std::size_t k = 0; k < k_count; ++k)
          noise_graft(trainers_[k].net.mutable_parameters(), epoch, cfg_.graft, mix_seed(cfg_.seed, k, n));
        break;
      case ScionSource::Internal:
        for (std::size_t k = 0; k < k_count; ++k)
          for (auto& p : trainers_[k].net.mutable_parameters())
            if (is_conv_weight(p.name))
              internal_graft(p.value, cfg_.graft.invalid_threshold_gamma, cfg_.graft.internal_additive);
        break;
    }
  }

  void end_epoch(std::size_t epoch) {
    for (auto& t : trainers_) {
      EpochMetrics m;
      m.epoch = epoch;
      m.network_id = t.id;
      m.train_loss = t.seen ? t.loss_sum / static_cast<double>(t.seen) : 0.0;
      m.train_accuracy = t.seen ? t.correct_sum / static_cast<double>(t.seen) : 0.0;
      m.test_accuracy = evaluate_accuracy(t.net, data_.test);
      m.effective_lr = effective_learning_rate(t.cfg, epoch);
      for (double th : kDiagnosticThresholds) m.invalid_ratio_at[th] = invalid_filter_ratio(t.net.parameters(), th);
      m.network_entropy = network_information(t.net.parameters(), cfg_.graft.histogram());
      double alpha_sum = 0.0;
      std::size_t alpha_count = 0;
      for (const auto& e : epoch_events_)
        if (e.target_network == t.id) {
          alpha_sum += e.alpha;
          ++alpha_count;
        }
      m.mean_alpha = alpha_count ? alpha_sum / static_cast<double>(alpha_count) : 0.5;
      t.loss_sum = t.correct_sum = 0.0;
      t.seen = 0;

      if (writer_) writer_->write(m);
      result_.metrics.push_back(std::move(m));
      if (cfg_.output_dir && cfg_.checkpoint_every_epochs && (epoch + 1) % cfg_.checkpoint_every_epochs == 0)
        save_checkpoint(*cfg_.output_dir / "checkpoints" /
                            ("net" + std::to_string(t.id) + "_epoch" + std::to_string(epoch) + ".ckpt"),
                        t.net.parameters());
    }
    epoch_events_.clear();
  }

  ExperimentConfig cfg_;
  const PreparedData& data_;
  std::vector<Trainer> trainers_;
  std::size_t ipe_ = 0;
  std::size_t max_iter_ = 0;
  std::size_t period_ = 0;
  std::size_t iteration_ = 1;
  std::optional<MetricsWriter> writer_;
  std::vector<GraftEvent> epoch_events_;
  std::filesystem::path events_path_;
  std::ofstream events_out_;
  ExperimentResult result_;

  std::atomic<bool> abort_{false};
  bool stop_ = false;  // written only by barrier completions
  std::mutex error_mutex_;
  std::exception_ptr first_error_;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const PreparedData& data) {
  return ExperimentRunner(cfg, data).run();
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const PreparedData data = prepare_data(cfg.data);
  return run_experiment(cfg, data);
}

}  // namespace graftnet
