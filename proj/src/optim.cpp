#include "graftnet/optim.hpp"

#include "graftnet/errors.hpp"

#include <cmath>

namespace graftnet {

void TrainerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) throw ConfigError("lr_decay_factor must be in (0, 1]");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (lr_decay_period_epochs == 0) throw ConfigError("lr_decay_period_epochs must be >= 1");
}

double effective_learning_rate(const TrainerConfig& cfg, std::size_t epoch) {
  const auto steps = static_cast<double>(epoch / cfg.lr_decay_period_epochs);
  return cfg.learning_rate * std::pow(cfg.lr_decay_factor, steps);
}

ParameterSet zero_velocity(const ParameterSet& params) {
  ParameterSet v;
  v.reserve(params.size());
  for (const auto& p : params) v.push_back({p.name, Tensor(p.value.shape())});
  return v;
}

void sgd_step(ParameterSet& params, const ParameterSet& grads, ParameterSet& velocity,
              const TrainerConfig& cfg, std::size_t epoch) {
  require_congruent(params, grads, "sgd_step gradients");
  require_congruent(params, velocity, "sgd_step velocity");
  const double lr = effective_learning_rate(cfg, epoch);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i].value.data();
    auto& v = velocity[i].value.data();
    v = cfg.momentum * v + (grads[i].value.data() + cfg.weight_decay * w);
    w -= lr * v;
  }
}

}  // namespace graftnet
