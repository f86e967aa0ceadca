#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dhedge/core.hpp"
#include "dhedge/hedge.hpp"
#include "dhedge/ppm.hpp"
#include "dhedge/trie.hpp"

namespace dhedge {

struct PredictorConfig {
  std::size_t max_order = 4;        // experts of orders 0..max_order
  double gamma = 1.0;
  std::optional<double> beta;       // nullopt selects the optimal beta
  std::optional<std::size_t> horizon;
  double initial_weight = 1.0;

  std::size_t num_experts() const { return max_order + 1; }
  /// Explicit beta, or the optimal one for (gamma, horizon, experts).
  /// The automatic choice needs a horizon (ConfigError otherwise).
  double resolved_beta() const;
  void validate() const;
};

struct StepRecord {
  std::size_t step = 0;  // 1-based
  SymbolId actual;
  std::optional<SymbolId> predicted;
  double loss = 0.0;     // 0/1 loss of the aggregate prediction
  double cum_acc = 0.0;  // hits / step
  double disc_loss = 0.0;  // discounted expected loss of the predictor
  double bound = 0.0;      // regret bound evaluated at this step
  std::vector<double> expert_probs;             // p[n] used for this step
  std::vector<std::optional<SymbolId>> expert_predictions;
  std::vector<double> expert_losses;            // instantaneous 0/1
  std::vector<double> expert_disc_losses;       // after this step
};

struct MetricsTrace {
  PredictorConfig config;
  double beta = 1.0;
  std::vector<StepRecord> steps;
  std::vector<std::string> tokens;  // id -> token, for export
  /// Largest |sum - 1| over every expert blend and every p[n] produced.
  double max_normalization_error = 0.0;

  std::size_t size() const { return steps.size(); }
  bool empty() const { return steps.empty(); }
};

/// Everything the predictor derives before seeing the next symbol.
struct Forecast {
  std::vector<double> expert_probs;
  std::vector<BlendedDistribution> blends;  // empty before the first symbol
  std::vector<std::optional<SymbolId>> expert_predictions;
  std::vector<double> mixture;
  std::optional<SymbolId> predicted;
};

/// Discounted HEDGE over the PPM experts of orders 0..K sharing one trie.
/// Each observe() forecasts, scores, updates the weights, then ingests, so
/// the trie never contains the symbol being predicted.
class OnlinePredictor {
 public:
  explicit OnlinePredictor(const PredictorConfig& cfg);

  Forecast forecast() const;
  StepRecord observe(SymbolId actual);

  const PredictorConfig& config() const { return cfg_; }
  double beta() const { return beta_; }
  const HedgeState& state() const { return state_; }
  const ContextTrie& trie() const { return trie_; }
  double max_normalization_error() const { return max_norm_err_; }

 private:
  PredictorConfig cfg_;
  double beta_;
  ContextTrie trie_;
  HedgeState state_;
  std::size_t hits_ = 0;
  double max_norm_err_ = 0.0;
};

MetricsTrace run_online(const PredictorConfig& cfg, std::span<const SymbolId> seq,
                        const Alphabet* names = nullptr);
MetricsTrace run_online(const PredictorConfig& cfg, SequenceStream& stream);

struct BestExpert {
  std::size_t index = 0;
  double loss = 0.0;
};

/// Expert with the smallest final discounted loss; ties to the lowest order.
BestExpert best_expert(const MetricsTrace& trace);

/// L_N(gamma) divided by the largest attainable discounted loss.
double normalized_loss(const MetricsTrace& trace, double gamma, std::size_t horizon);

struct BoundReport {
  bool holds = false;
  double loss = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // bound - loss
  double normalized_loss = 0.0;
  double normalized_bound = 0.0;
  std::size_t best_expert = 0;
  double best_loss = 0.0;
  std::vector<std::string> warnings;
};

/// Compares the final discounted loss with the regret bound. Warns when the
/// run's beta is not the optimal one for its horizon, since the bound is
/// only guaranteed for that choice.
BoundReport verify_bound(const MetricsTrace& trace, const PredictorConfig& cfg);

/// Sorted prefix sums of p(gamma^M) never exceed those of p(gamma), and the
/// totals agree, within 1e-12. `weights` are raw positive weights.
bool check_majorization(std::span<const double> weights, double gamma, unsigned m);

enum class LemmaOutcome { kHolds, kViolated, kInapplicable };

/// With weights ascending and losses descending in the same expert order,
/// p(gamma^M).l >= p(gamma).l - 1e-12. kInapplicable when the ordering
/// precondition does not hold.
LemmaOutcome check_ordered_inequality(std::span<const double> weights,
                                      std::span<const double> losses, double gamma,
                                      unsigned m);

/// Accuracy of the aggregate prediction per step: cumulative when `window`
/// is empty, otherwise over the trailing `window` steps (ConfigError for 0).
std::vector<double> accuracy_curve(const MetricsTrace& trace,
                                   std::optional<std::size_t> window = std::nullopt);

/// CSV: step,actual,predicted,loss,cum_acc,disc_loss,bound then optionally
/// p_0..p_K and L_0..L_K.
void write_trace_csv(const MetricsTrace& trace, std::ostream& out,
                     bool per_expert = false);

nlohmann::json trace_summary(const MetricsTrace& trace);

}  // namespace dhedge
