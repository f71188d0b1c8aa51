#include "graftnet/graft.hpp"

#include "graftnet/errors.hpp"
#include "graftnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace graftnet {

std::string to_string(ScionSource s) {
  switch (s) {
    case ScionSource::Noise: return "noise";
    case ScionSource::Internal: return "internal";
    case ScionSource::External: return "external";
  }
  return "?";
}

std::string to_string(Criterion c) { return c == Criterion::L1 ? "l1" : "entropy"; }

ScionSource parse_scion_source(const std::string& s) {
  if (s == "noise") return ScionSource::Noise;
  if (s == "internal") return ScionSource::Internal;
  if (s == "external") return ScionSource::External;
  throw ConfigError("unknown scion source '" + s + "' (noise|internal|external)");
}

Criterion parse_criterion(const std::string& s) {
  if (s == "l1") return Criterion::L1;
  if (s == "entropy") return Criterion::Entropy;
  throw ConfigError("unknown criterion '" + s + "' (l1|entropy)");
}

void GraftConfig::validate() const {
  if (!(A > 0.0)) throw ConfigError("graft A must be > 0");
  if (!(c > 0.0)) throw ConfigError("graft c must be > 0");
  if (bin_count < 2) throw ConfigError("graft bin_count must be >= 2");
  if (!(invalid_threshold_gamma >= 0.0)) throw ConfigError("invalid_threshold_gamma must be >= 0");
  if (!(noise_decay_a > 0.0 && noise_decay_a < 1.0)) throw ConfigError("noise_decay_a must be in (0, 1)");
  if (!(alpha_clamp_epsilon > 0.0 && alpha_clamp_epsilon < 0.5))
    throw ConfigError("alpha_clamp_epsilon must be in (0, 0.5)");
}

double adaptive_alpha_raw(double delta_h, double A, double c) { return A * std::atan(c * delta_h) + 0.5; }

double adaptive_alpha(double h_self, double h_other, const GraftConfig& cfg) {
  const double raw = adaptive_alpha_raw(h_self - h_other, cfg.A, cfg.c);
  return std::clamp(raw, cfg.alpha_clamp_epsilon, 1.0 - cfg.alpha_clamp_epsilon);
}

Tensor graft_layer(const Tensor& w_self, const Tensor& w_other, double alpha) {
  if (w_self.shape() != w_other.shape())
    throw ArgumentError("graft_layer shape mismatch " + shape_string(w_self.shape()) + " vs " +
                        shape_string(w_other.shape()));
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("graft coefficient must lie in [0, 1]");
  return Tensor(w_self.shape(), alpha * w_self.data() + (1.0 - alpha) * w_other.data());
}

double layer_information(const Tensor& weight, const GraftConfig& cfg) {
  if (cfg.criterion == Criterion::Entropy) return tensor_entropy(weight, cfg.histogram()).value;
  return weight.data().cwiseAbs().sum();
}

namespace {

bool graftable_weight(const std::string& name, const GraftConfig& cfg) {
  if (is_conv_weight(name)) return true;
  return cfg.graft_dense && name.ends_with(std::string(".") + kDenseWeight);
}

std::string companion_bias(const std::string& weight_name) {
  const auto prefix = layer_prefix(weight_name);
  return prefix + "." + (is_conv_weight(weight_name) ? kConvBias : kDenseBias);
}

// Canonical operand order shared by both directions of a pair.
struct PairCoefficients {
  bool self_is_high;
  double beta;  // weight on the higher-information side
  double self_weight() const { return self_is_high ? beta : 1.0 - beta; }
};

PairCoefficients pair_coefficients(double h_self, double h_other, const GraftConfig& cfg) {
  if (h_self >= h_other) return {true, adaptive_alpha(h_self, h_other, cfg)};
  return {false, adaptive_alpha(h_other, h_self, cfg)};
}

Tensor combine(const Tensor& self, const Tensor& other, const PairCoefficients& k) {
  return k.self_is_high ? graft_layer(self, other, k.beta) : graft_layer(other, self, k.beta);
}

}  // namespace

std::vector<GraftEvent> graft_pair(ParameterSet& self, const ParameterSet& other, const GraftConfig& cfg,
                                   std::size_t epoch, std::size_t source_network, std::size_t target_network) {
  require_congruent(self, other, "graft_pair");
  std::vector<GraftEvent> events;
  for (std::size_t i = 0; i < self.size(); ++i) {
    if (!graftable_weight(self[i].name, cfg)) continue;
    const double h_self = layer_information(self[i].value, cfg);
    const double h_other = layer_information(other[i].value, cfg);
    const auto k = pair_coefficients(h_self, h_other, cfg);

    self[i].value = combine(self[i].value, other[i].value, k);
    const auto bias_name = companion_bias(self[i].name);
    for (std::size_t b = 0; b < self.size(); ++b)
      if (self[b].name == bias_name) self[b].value = combine(self[b].value, other[b].value, k);

    events.push_back({epoch, layer_prefix(self[i].name), k.self_weight(), h_self, h_other, source_network,
                      target_network});
  }
  return events;
}

double noise_sigma(const GraftConfig& cfg, std::size_t epoch) {
  return std::pow(cfg.noise_decay_a, static_cast<double>(epoch));
}

std::vector<FilterId> noise_graft(ParameterSet& params, std::size_t epoch, const GraftConfig& cfg,
                                  std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> noise(0.0, noise_sigma(cfg, epoch));
  std::vector<FilterId> modified;
  for (auto& p : params) {
    if (!is_conv_weight(p.name)) continue;
    for (std::size_t j = 0; j < p.value.dim(0); ++j) {
      auto filter = p.value.slice(j);
      if (!(filter_l1(filter) < cfg.invalid_threshold_gamma)) continue;
      for (auto& v : filter) v += noise(rng);
      modified.push_back({layer_prefix(p.name), j});
    }
  }
  return modified;
}

InternalGraftResult internal_graft(Tensor& conv_weight, double gamma, bool additive) {
  const auto norms = filter_l1_norms(conv_weight);
  const std::size_t n = norms.size();
  std::vector<std::size_t> ascending(n);
  std::iota(ascending.begin(), ascending.end(), 0);
  std::stable_sort(ascending.begin(), ascending.end(),
                   [&](std::size_t a, std::size_t b) { return norms[a] < norms[b]; });
  std::vector<std::size_t> descending(n);
  std::iota(descending.begin(), descending.end(), 0);
  std::stable_sort(descending.begin(), descending.end(),
                   [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

  const auto invalid = static_cast<std::size_t>(
      std::count_if(norms.begin(), norms.end(), [&](double v) { return v < gamma; }));

  InternalGraftResult result;
  result.overlap_warning = 2 * invalid > n;
  const Tensor before = conv_weight;
  for (std::size_t i = 0; i < invalid; ++i) {
    const std::size_t recipient = ascending[i];
    const std::size_t donor = descending[i];
    if (donor == recipient) continue;
    auto dst = conv_weight.slice(recipient);
    const auto src = before.slice(donor);
    for (std::size_t e = 0; e < dst.size(); ++e) dst[e] = additive ? dst[e] + src[e] : src[e];
    result.pairs.emplace_back(donor, recipient);
  }
  return result;
}

}  // namespace graftnet
