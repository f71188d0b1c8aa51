#pragma once

#include "graftnet/tensor.hpp"

#include <cstdint>

namespace graftnet {

/// Per-network optimisation hyper-parameters.
struct TrainerConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  double lr_decay_factor = 0.1;
  std::size_t lr_decay_period_epochs = 60;
  std::uint64_t seed = 0;         // weight init
  std::uint64_t loader_seed = 0;  // data order

  void validate() const;
  friend bool operator==(const TrainerConfig&, const TrainerConfig&) = default;
};

/// learning_rate * lr_decay_factor ^ floor(epoch / lr_decay_period_epochs)
double effective_learning_rate(const TrainerConfig& cfg, std::size_t epoch);

/// Zero-initialised velocity congruent with params.
ParameterSet zero_velocity(const ParameterSet& params);

/// SGD with heavy-ball momentum and L2 weight decay:
///   g = grad + wd * w;  v = momentum * v + g;  w -= lr_eff * v
void sgd_step(ParameterSet& params, const ParameterSet& grads, ParameterSet& velocity,
              const TrainerConfig& cfg, std::size_t epoch);

}  // namespace graftnet
