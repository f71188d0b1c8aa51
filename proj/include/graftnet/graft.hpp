#pragma once

#include "graftnet/criteria.hpp"
#include "graftnet/tensor.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace graftnet {

enum class ScionSource { Noise, Internal, External };
enum class Criterion { L1, Entropy };

std::string to_string(ScionSource s);
std::string to_string(Criterion c);
ScionSource parse_scion_source(const std::string& s);
Criterion parse_criterion(const std::string& s);

struct GraftConfig {
  ScionSource scion_source = ScionSource::External;
  Criterion criterion = Criterion::Entropy;
  double A = 0.4;
  double c = 500.0;
  std::size_t bin_count = 256;
  double invalid_threshold_gamma = 1e-2;
  double noise_decay_a = 0.9;
  /// Iterations between barriers; 0 means once per epoch.
  std::size_t graft_period_iters = 0;
  double alpha_clamp_epsilon = 0.05;
  /// Also graft dense-layer parameters (off: only conv layers are grafted).
  bool graft_dense = false;
  /// Internal scions add the donor filter; false replaces the recipient.
  bool internal_additive = true;

  void validate() const;
  HistogramSpec histogram() const { return {bin_count}; }
};

/// Audit record of one layer-level external graft.
struct GraftEvent {
  std::size_t epoch = 0;
  std::string layer_name;
  double alpha = 0.5;  // weight kept on the receiver's own tensor
  double h_self = 0.0;
  double h_other = 0.0;
  std::size_t source_network = 0;
  std::size_t target_network = 0;
};

/// Unclamped A * atan(c * delta_h) + 0.5.
double adaptive_alpha_raw(double delta_h, double A, double c);

/// Receiver's weight for its own tensor: the raw coefficient for
/// H_self - H_other clamped to [eps, 1 - eps].
double adaptive_alpha(double h_self, double h_other, const GraftConfig& cfg);

/// alpha * w_self + (1 - alpha) * w_other, elementwise.
Tensor graft_layer(const Tensor& w_self, const Tensor& w_other, double alpha);

/// Information of a layer weight under the configured criterion (whole-layer
/// histogram entropy, or the sum of per-filter l1 norms).
double layer_information(const Tensor& weight, const GraftConfig& cfg);

/// Grafts every conv layer of `self` (weight and bias, same coefficient)
/// with the matching layer of the read-only `other` snapshot.
///
/// Both directions of a pair are evaluated as beta * w_hi + (1 - beta) * w_lo
/// where w_hi is the side with the larger information and beta its
/// coefficient, so two networks grafting from each other's snapshots end with
/// bit-identical grafted layers.
std::vector<GraftEvent> graft_pair(ParameterSet& self, const ParameterSet& other, const GraftConfig& cfg,
                                   std::size_t epoch = 0, std::size_t source_network = 0,
                                   std::size_t target_network = 0);

struct FilterId {
  std::string layer_name;
  std::size_t index = 0;
  friend bool operator==(const FilterId&, const FilterId&) = default;
};

/// Noise scale a^epoch.
double noise_sigma(const GraftConfig& cfg, std::size_t epoch);

/// Adds N(0, a^epoch) noise to every conv filter whose l1 norm is below gamma.
std::vector<FilterId> noise_graft(ParameterSet& params, std::size_t epoch, const GraftConfig& cfg,
                                  std::uint64_t rng_seed);

struct InternalGraftResult {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (donor, recipient)
  /// More than half the filters were invalid, so donor and recipient sets overlap.
  bool overlap_warning = false;
};

/// Within one conv layer, the i-th largest filter (by l1) is grafted into the
/// i-th smallest for each of the m filters with l1 < gamma. Donor values are
/// read from the pre-graft layer; ties rank the lower index first.
InternalGraftResult internal_graft(Tensor& conv_weight, double gamma, bool additive = true);

}  // namespace graftnet
