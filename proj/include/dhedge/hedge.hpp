#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dhedge/core.hpp"
#include "dhedge/ppm.hpp"

namespace dhedge {

struct HedgeConfig {
  double beta = 1.0;            // (0, 1]
  double gamma = 1.0;           // (0, 1]
  std::size_t num_experts = 1;  // >= 1
  double initial_weight = 1.0;  // > 0

  /// Throws ConfigError when a parameter is out of range.
  void validate() const;
};

/// Discounted HEDGE state. Weights live in the log domain: under gamma < 1
/// the raw weights shrink double-exponentially and would underflow.
struct HedgeState {
  std::vector<double> log_weights;
  std::size_t step = 0;  // updates applied so far
  std::vector<double> discounted_expert_losses;
  double discounted_predictor_loss = 0.0;

  static HedgeState initial(const HedgeConfig& cfg);
  std::size_t num_experts() const { return log_weights.size(); }
};

/// exp(e * log_w) normalised to the simplex, evaluated in the log domain.
std::vector<double> power_normalize(std::span<const double> log_weights,
                                    double exponent);

/// p_k = w_k^gamma / sum_j w_j^gamma.
std::vector<double> expert_probabilities(const HedgeState& state, double gamma);

/// Pointwise convex mixture of the expert distributions.
std::vector<double> combine(std::span<const double> p,
                            std::span<const BlendedDistribution> dists);

/// Argmax of a mixture; ties to the smallest id, empty -> no prediction.
std::optional<SymbolId> predict(std::span<const double> mixture);

double zero_one_loss(SymbolId actual, std::optional<SymbolId> predicted);

/// gamma * prev + instant_loss.
double discount_accumulate(double prev, double instant_loss, double gamma);

/// One step of the weight recursion w <- w^gamma * beta^loss, in logs. The
/// discounted expert losses and the predictor's expected loss p.l (with p
/// taken before the update) are accumulated alongside.
void update_weights(HedgeState& state, std::span<const double> losses,
                    double gamma, double beta);

/// Largest discounted loss reachable in N steps: (1-gamma^N)/(1-gamma),
/// or N when gamma = 1.
double max_discounted_loss(double gamma, std::size_t horizon);

/// Learning rate minimising the regret bound for (gamma, N, K).
double optimal_beta(double gamma, std::size_t horizon, std::size_t num_experts);

/// best_loss + sqrt(2 ln K * Lmax) + ln K.
double loss_bound(double gamma, std::size_t horizon, std::size_t num_experts,
                  double best_loss);

}  // namespace dhedge
