#include "dhedge/hedge.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace dhedge {

void HedgeConfig::validate() const {
  if (!(beta > 0.0 && beta <= 1.0))
    throw ConfigError(fmt::format("beta must lie in (0,1], got {}", beta));
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw ConfigError(fmt::format("gamma must lie in (0,1], got {}", gamma));
  if (num_experts < 1) throw ConfigError("need at least one expert");
  if (!(initial_weight > 0.0) || !std::isfinite(initial_weight))
    throw ConfigError("initial weight must be positive");
}

HedgeState HedgeState::initial(const HedgeConfig& cfg) {
  cfg.validate();
  HedgeState s;
  s.log_weights.assign(cfg.num_experts, std::log(cfg.initial_weight));
  s.discounted_expert_losses.assign(cfg.num_experts, 0.0);
  return s;
}

std::vector<double> power_normalize(std::span<const double> log_weights,
                                    double exponent) {
  std::vector<double> p(log_weights.size());
  if (p.empty()) return p;
  double top = -INFINITY;
  for (double lw : log_weights) top = std::max(top, exponent * lw);
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::exp(exponent * log_weights[k] - top);
    total += p[k];
  }
  for (double& x : p) x /= total;
  return p;
}

std::vector<double> expert_probabilities(const HedgeState& state, double gamma) {
  return power_normalize(state.log_weights, gamma);
}

std::vector<double> combine(std::span<const double> p,
                            std::span<const BlendedDistribution> dists) {
  if (p.size() != dists.size())
    throw ConfigError(fmt::format("{} expert probabilities for {} distributions",
                                  p.size(), dists.size()));
  std::size_t extent = 0;
  for (const auto& d : dists) extent = std::max(extent, d.probs.size());
  std::vector<double> mix(extent, 0.0);
  for (std::size_t k = 0; k < dists.size(); ++k) {
    const auto& probs = dists[k].probs;
    for (std::size_t s = 0; s < probs.size(); ++s) mix[s] += p[k] * probs[s];
  }
  return mix;
}

std::optional<SymbolId> predict(std::span<const double> mixture) {
  return argmax_symbol<double>(mixture);
}

double zero_one_loss(SymbolId actual, std::optional<SymbolId> predicted) {
  return (predicted && *predicted == actual) ? 0.0 : 1.0;
}

double discount_accumulate(double prev, double instant_loss, double gamma) {
  return gamma * prev + instant_loss;
}

void update_weights(HedgeState& state, std::span<const double> losses,
                    double gamma, double beta) {
  const std::size_t k_count = state.num_experts();
  if (losses.size() != k_count)
    throw ConfigError(
        fmt::format("{} losses for {} experts", losses.size(), k_count));
  for (double l : losses)
    if (!(l >= 0.0 && l <= 1.0))
      throw InputError(fmt::format("loss {} outside [0,1]", l));

  const auto p = expert_probabilities(state, gamma);
  double expected = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) expected += p[k] * losses[k];

  const double log_beta = std::log(beta);
  for (std::size_t k = 0; k < k_count; ++k) {
    state.log_weights[k] = gamma * state.log_weights[k] + log_beta * losses[k];
    state.discounted_expert_losses[k] =
        discount_accumulate(state.discounted_expert_losses[k], losses[k], gamma);
  }
  state.discounted_predictor_loss =
      discount_accumulate(state.discounted_predictor_loss, expected, gamma);
  ++state.step;
}

double max_discounted_loss(double gamma, std::size_t horizon) {
  if (gamma >= 1.0) return static_cast<double>(horizon);
  // 1 - gamma^N without cancellation for gamma near 1
  const double num = -std::expm1(static_cast<double>(horizon) * std::log(gamma));
  return num / (1.0 - gamma);
}

double optimal_beta(double gamma, std::size_t horizon, std::size_t num_experts) {
  if (horizon < 1) throw ConfigError("horizon must be at least 1");
  if (num_experts < 1) throw ConfigError("need at least one expert");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw ConfigError(fmt::format("gamma must lie in (0,1], got {}", gamma));
  const double ln_k = std::log(static_cast<double>(num_experts));
  return 1.0 / (1.0 + std::sqrt(2.0 * ln_k / max_discounted_loss(gamma, horizon)));
}

double loss_bound(double gamma, std::size_t horizon, std::size_t num_experts,
                  double best_loss) {
  const double ln_k = std::log(static_cast<double>(num_experts));
  return best_loss + std::sqrt(2.0 * ln_k * max_discounted_loss(gamma, horizon)) +
         ln_k;
}

}  // namespace dhedge
