// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include "graftnet/config.hpp"
#include "graftnet/criteria.hpp"
#include "graftnet/distill.hpp"
#include "graftnet/gradcheck.hpp"
#include "graftnet/graft.hpp"
#include "graftnet/orchestrator.hpp"
#include "graftnet/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace graftnet;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = GRAFTNET_SOURCE_DIR;
constexpr int kSeeds = 5;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void report(int id, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("criterion %2d %s:%s (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", o.detail.str().c_str(), secs);
  std::fflush(stdout);
}

double elapsed_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::vector<double> sort_and_count(std::vector<double> values, std::size_t bins) {
  std::sort(values.begin(), values.end());
  const double lo = values.front(), range = values.back() - lo;
  std::vector<double> p(bins, 0.0);
  std::size_t k = 0;
  for (double v : values) {
    while (k + 1 < bins && (v - lo) / range * static_cast<double>(bins) >= static_cast<double>(k + 1)) ++k;
    p[k] += 1.0;
  }
  for (auto& x : p) x /= static_cast<double>(values.size());
  return p;
}

double entropy_of(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0) h -= x * std::log(x);
  return h;
}

bool same_conv_tensors(const ParameterSet& a, const ParameterSet& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].name.find("conv") != std::string::npos && !(a[i].value == b[i].value)) return false;
  return true;
}

// Runs of the three desk-scale configurations, shared by criteria 7, 8 and 10.
struct SeedRun {
  ExperimentResult baseline, graft, graftplus;
};

ExperimentConfig seeded(const std::string& name, int seed) {
  auto cfg = load_experiment_config(kSource / "configs" / name);
  reseed(cfg, static_cast<std::uint64_t>(seed));
  cfg.output_dir.reset();
  return cfg;
}

}  // namespace

int main() {
  report(1, [](Outcome& o) {
    const auto arch = load_architecture(kSource / "configs" / "gradcheck_arch.yaml");
    Network net = Network::build(arch, 1);
    const std::size_t params = net.parameter_count();
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Shape shape{4};
    shape.insert(shape.end(), arch.input.begin(), arch.input.end());
    Tensor batch(shape);
    for (auto& v : batch.values()) v = u(rng);
    const std::vector<int> labels{0, 1, 2, 0};
    const auto start = std::chrono::steady_clock::now();
    const auto r = gradient_check(net, batch, labels, 1e-5, 1e-6);
    const double secs = elapsed_since(start);
    std::set<LayerSpec::Kind> kinds;
    for (const auto& layer : arch.layers) kinds.insert(layer.kind);
    o.detail << " " << params << " parameters, layer types " << kinds.size() << ", max relative error "
             << r.max_relative_error();
    o.require(params <= 10000, "parameter budget");
    o.require(r.passed(), "relative error < 1e-5");
    o.require(secs < 60.0, "runtime < 60 s");
  });

  report(2, [](Outcome& o) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    const auto start = std::chrono::steady_clock::now();
    for (int trial = 0; trial < 100; ++trial) {
      const auto rows = 1 + rng() % 6, cols = 1 + rng() % 6;
      Eigen::MatrixXd joint(rows, cols);
      for (Eigen::Index i = 0; i < joint.size(); ++i) joint(i) = rng() % 5 == 0 ? 0.0 : u(rng);
      if (joint.sum() == 0.0) joint(0) = 1.0;
      joint /= joint.sum();
      std::vector<long> xs, ys;
      for (std::size_t i = 0; i < rows; ++i) xs.push_back(static_cast<long>(rng() % 7) + 7 * static_cast<long>(i) - 10);
      for (std::size_t j = 0; j < cols; ++j) ys.push_back(static_cast<long>(rng() % 5) + 5 * static_cast<long>(j));
      const auto h = joint_entropy_oracle(joint, xs, ys);
      worst = std::max({worst, std::abs(h.xy - h.xz), std::abs(h.xy - h.yz)});
    }
    o.detail << " max |H(X,Y) - H(.,Z)| over 100 joints " << worst;
    o.require(worst < 1e-12, "difference < 1e-12");
    o.require(elapsed_since(start) < 5.0, "runtime < 5 s");
  });

  report(3, [](Outcome& o) {
    o.require(adaptive_alpha_raw(0.0, 0.4, 500.0) == 0.5, "raw(0) == 0.5");
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 0.01);
    std::vector<double> deltas(10000);
    double worst = 0.0;
    for (auto& d : deltas) {
      d = n(rng) * std::pow(10.0, static_cast<double>(rng() % 5));
      worst = std::max(worst, std::abs(adaptive_alpha_raw(d, 0.4, 500.0) + adaptive_alpha_raw(-d, 0.4, 500.0) - 1.0));
    }
    o.require(worst <= 1e-15, "antisymmetry within 1e-15");
    std::sort(deltas.begin(), deltas.end());
    bool monotone = true;
    for (std::size_t i = 1; i < deltas.size(); ++i)
      monotone &= adaptive_alpha_raw(deltas[i - 1], 0.4, 500.0) <= adaptive_alpha_raw(deltas[i], 0.4, 500.0);
    o.require(monotone, "monotone");
    GraftConfig cfg;
    bool clamped = true;
    for (double d : deltas) {
      const double a = adaptive_alpha(d, 0.0, cfg);
      clamped &= a >= cfg.alpha_clamp_epsilon && a <= 1.0 - cfg.alpha_clamp_epsilon;
    }
    o.require(clamped, "clamp bounds");
    const double example = adaptive_alpha_raw(0.001, 0.4, 500.0);
    o.detail << " antisymmetry error " << worst << ", raw(0.001) = " << std::setprecision(9) << example;
    o.require(std::abs(example - 0.6854590) <= 1e-6, "raw(0.001) = 0.6854590");
  });

  report(4, [](Outcome& o) {
    int identical = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      std::vector<Network> nets{Network::build(small_convnet({3, 8, 8}, 6, 8, 5), seed),
                                Network::build(small_convnet({3, 8, 8}, 6, 8, 5), seed + 100)};
      const bool distinct = !same_conv_tensors(nets[0].parameters(), nets[1].parameters());
      barrier_graft(nets, GraftConfig{});
      if (distinct && same_conv_tensors(nets[0].parameters(), nets[1].parameters())) ++identical;
    }
    o.detail << " " << identical << "/10 distinct pairs bit-identical after the barrier";
    o.require(identical == 10, "identical post-graft conv weights");
  });

  report(5, [](Outcome& o) {
    const auto arch = small_convnet({1, 6, 6}, 3, 4, 2);
    std::vector<ParameterSet> nets;
    for (double v : {1.0, 2.0, 3.0}) {
      auto p = Network::zeros(arch).parameters();
      for (auto& t : p) t.value.data().setConstant(v);
      nets.push_back(p);
    }
    std::vector<ParameterSet*> ptrs{&nets[0], &nets[1], &nets[2]};
    const std::vector<std::size_t> its(3, 1);
    barrier_graft(ptrs, its, GraftConfig{}, 0);
    const double want[3] = {2.0, 1.5, 2.5};
    for (std::size_t k = 0; k < 3; ++k) {
      bool exact = true;
      for (const auto& p : nets[k])
        if (p.name.find("conv") != std::string::npos) exact &= p.value.data().isConstant(want[k], 0.0);
      o.detail << " net" << k << "=" << nets[k][0].value[0];
      o.require(exact, "network " + std::to_string(k) + " constant");
    }
  });

  report(6, [](Outcome& o) {
    o.require(tensor_entropy(std::vector<double>(50, 2.5)).value == 0.0, "constant tensor");
    for (std::size_t bins : {2, 16, 256}) {
      std::vector<double> v;
      for (std::size_t k = 0; k < bins; ++k)
        for (int rep = 0; rep < 3; ++rep) v.push_back(static_cast<double>(k));
      o.require(std::abs(tensor_entropy(v, {bins}).value - std::log(static_cast<double>(bins))) < 1e-12,
                "equal fill with B=" + std::to_string(bins));
    }
    std::mt19937_64 rng(6);
    bool affine = true;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> v(300), w(300);
      for (auto& x : v) x = static_cast<double>(static_cast<long>(rng() % 4001) - 2000) / 512.0;
      const double a = std::ldexp(1.0, static_cast<int>(rng() % 17) - 8);
      const double b = static_cast<double>(static_cast<long>(rng() % 1001) - 500) / 32.0;
      for (std::size_t i = 0; i < v.size(); ++i) w[i] = a * v[i] + b;
      const auto bins = 2 + rng() % 256;
      affine &= tensor_entropy(v, {bins}).value == tensor_entropy(w, {bins}).value;
    }
    o.require(affine, "affine invariance exact");
    double worst = 0.0;
    std::uniform_real_distribution<double> u(-4.0, 6.0);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> v(500 + rng() % 1000);
      for (auto& x : v) x = u(rng);
      const std::size_t bins = 2 + rng() % 300;
      const auto want = sort_and_count(v, bins);
      const auto got = tensor_entropy(v, {bins});
      for (std::size_t k = 0; k < bins; ++k) worst = std::max(worst, std::abs(got.bin_probabilities[k] - want[k]));
      worst = std::max(worst, std::abs(got.value - entropy_of(want)));
    }
    o.detail << " histogram oracle max difference " << worst;
    o.require(worst < 1e-12, "oracle within 1e-12");
  });

  // Desk-scale experiments.
  const PreparedData data = prepare_data(seeded("baseline.yaml", 1).data);
  std::vector<SeedRun> runs(kSeeds);
  double baseline_secs = 0.0, graft_secs = 0.0, graftplus_secs = 0.0;
  const fs::path work = fs::temp_directory_path() / "graftnet_acceptance";
  fs::remove_all(work);

  report(7, [&](Outcome& o) {
    int acc_wins = 0, ratio_ok = 0, info_ok = 0;
    double mean_base = 0.0, mean_graft = 0.0;
    for (int s = 0; s < kSeeds; ++s) {
      auto t = std::chrono::steady_clock::now();
      runs[s].baseline = run_experiment(seeded("baseline.yaml", s + 1), data);
      baseline_secs += elapsed_since(t);
      t = std::chrono::steady_clock::now();
      runs[s].graft = run_experiment(seeded("graft2.yaml", s + 1), data);
      graft_secs += elapsed_since(t);

      const auto& b = runs[s].baseline;
      const auto& g = runs[s].graft;
      const double acc_b = b.final_test_accuracy[0], acc_g = g.final_test_accuracy[0];
      const double ratio_b = invalid_filter_ratio(b.final_parameters[0], 1e-3);
      const double ratio_g = invalid_filter_ratio(g.final_parameters[0], 1e-3);
      const double info_b = network_information(b.final_parameters[0]);
      const double info_g = network_information(g.final_parameters[0]);
      mean_base += acc_b / kSeeds;
      mean_graft += acc_g / kSeeds;
      acc_wins += acc_g > acc_b;
      ratio_ok += ratio_g <= ratio_b;
      info_ok += info_g >= info_b;
      std::printf("  seed %d: accuracy %.3f vs %.3f, invalid@1e-3 %.3f vs %.3f, invalid@1e-1 %.3f vs %.3f, "
                  "information %.4f vs %.4f (graft vs baseline)\n",
                  s + 1, acc_g, acc_b, ratio_g, ratio_b, invalid_filter_ratio(g.final_parameters[0], 1e-1),
                  invalid_filter_ratio(b.final_parameters[0], 1e-1), info_g, info_b);
    }
    o.detail << " mean accuracy " << mean_graft << " vs " << mean_base << ", strictly better " << acc_wins
             << "/5, invalid ratio no worse " << ratio_ok << "/5, information no lower " << info_ok << "/5";
    o.require(mean_graft >= mean_base - 0.005, "(a) mean accuracy within 0.5 points");
    o.require(acc_wins >= 3, "(a) strictly better in >= 3/5 seeds");
    o.require(ratio_ok >= 4, "(b) invalid ratio in >= 4/5 seeds");
    o.require(info_ok >= 4, "(c) information in >= 4/5 seeds");
    o.require(baseline_secs + graft_secs < 15 * 60, "runtime < 15 min");
  });

  report(8, [&](Outcome& o) {
    int raised = 0;
    double mean_plus = 0.0, mean_graft = 0.0;
    for (int s = 0; s < kSeeds; ++s) {
      auto cfg = seeded("graftplus.yaml", s + 1);
      if (s == 0) cfg.output_dir = work / "graftplus_a";
      const auto t = std::chrono::steady_clock::now();
      runs[s].graftplus = run_experiment(cfg, data);
      graftplus_secs += elapsed_since(t);

      const auto& p = runs[s].graftplus;
      const auto& g = runs[s].graft;
      for (std::size_t k = 0; k < 2; ++k) {
        mean_plus += p.final_test_accuracy[k] / (2 * kSeeds);
        mean_graft += g.final_test_accuracy[k] / (2 * kSeeds);
      }
      const auto partition = filter_census(runs[s].baseline.final_parameters[0], 0.1).partition();
      const auto base = filter_census(runs[s].baseline.final_parameters[0], partition);
      const auto plus = filter_census(p.final_parameters[0], partition);
      const bool up = base.invalid_average_l1 && plus.invalid_average_l1 &&
                      *plus.invalid_average_l1 > *base.invalid_average_l1;
      raised += up;
      std::printf("  seed %d: student accuracy %.3f/%.3f (grafting+) vs %.3f/%.3f (grafting), teacher %.3f, "
                  "%zu invalid filters, invalid average l1 %.4f vs %.4f\n",
                  s + 1, p.final_test_accuracy[0], p.final_test_accuracy[1], g.final_test_accuracy[0],
                  g.final_test_accuracy[1], p.final_test_accuracy[2], base.invalid_count,
                  plus.invalid_average_l1.value_or(NAN), base.invalid_average_l1.value_or(NAN));
    }
    o.detail << " mean student accuracy " << mean_plus << " vs " << mean_graft << ", invalid average l1 raised "
             << raised << "/5";
    o.require(mean_plus >= mean_graft - 0.005, "mean accuracy within 0.5 points of grafting");
    o.require(raised >= 4, "invalid average l1 raised in >= 4/5 seeds");
    o.require(graftplus_secs < 20 * 60, "runtime < 20 min");
  });

  report(9, [](Outcome& o) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    bool ratio_exact = true;
    for (int trial = 0; trial < 50; ++trial) {
      Tensor z({4, 5});
      for (auto& v : z.values()) v = u(rng);
      Tensor z2 = z;
      z2.data() *= 2.0;
      const Tensor matched = temperature_softmax(z, 1.0).probs;
      ratio_exact &= kd_loss(z2, matched, 2.0) / kd_loss(z, matched, 1.0) == 4.0;
    }
    o.require(ratio_exact, "ratio exactly 4");
    const double uniform = kd_loss(Tensor({3, 4}), Tensor({3, 4}, 0.25), 1.0);
    o.require(std::abs(uniform - std::log(4.0)) < 1e-12, "uniform case ln 4");
    double worst = 0.0;
    for (double tau : {1.0, 2.0, 4.0}) {
      Tensor z({5, 4}), t({5, 4});
      for (auto& v : z.values()) v = u(rng);
      for (auto& v : t.values()) v = u(rng);
      t = temperature_softmax(t, 1.0).probs;
      const auto g = kd_loss_with_grad(z, t, tau).grad;
      for (std::size_t i = 0; i < z.size(); ++i) {
        Tensor plus = z, minus = z;
        plus[i] += 1e-6;
        minus[i] -= 1e-6;
        const double numeric = (kd_loss(plus, t, tau) - kd_loss(minus, t, tau)) / 2e-6;
        worst = std::max(worst, std::abs(numeric - g[i]) / std::max({std::abs(numeric), std::abs(g[i]), 1e-4}));
      }
    }
    o.detail << " uniform K=4 loss " << std::setprecision(15) << uniform << std::setprecision(6)
             << ", gradient relative error " << worst;
    o.require(worst < 1e-6, "gradient within 1e-6");
  });

  report(10, [&](Outcome& o) {
    auto cfg = seeded("graftplus.yaml", 1);
    cfg.output_dir = work / "graftplus_b";
    run_experiment(cfg, data);
    const auto a = slurp(work / "graftplus_a" / "metrics.csv");
    const auto b = slurp(work / "graftplus_b" / "metrics.csv");
    o.detail << " metrics files of " << a.size() << " and " << b.size() << " bytes";
    o.require(!a.empty() && a == b, "metrics byte-identical");
    o.require(slurp(work / "graftplus_a" / "graft_events.jsonl") == slurp(work / "graftplus_b" / "graft_events.jsonl"),
              "graft events byte-identical");
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
