#include "dhedge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace dhedge {

double PredictorConfig::resolved_beta() const {
  if (beta) return *beta;
  if (!horizon) throw ConfigError("automatic beta needs a horizon");
  return optimal_beta(gamma, *horizon, num_experts());
}

void PredictorConfig::validate() const {
  HedgeConfig{resolved_beta(), gamma, num_experts(), initial_weight}.validate();
  if (horizon && *horizon == 0) throw ConfigError("horizon must be at least 1");
}

OnlinePredictor::OnlinePredictor(const PredictorConfig& cfg)
    : cfg_(cfg),
      beta_(cfg.resolved_beta()),
      trie_(cfg.max_order),
      state_(HedgeState::initial(
          HedgeConfig{beta_, cfg.gamma, cfg.num_experts(), cfg.initial_weight})) {
  cfg_.validate();
}

Forecast OnlinePredictor::forecast() const {
  Forecast f;
  f.expert_probs = expert_probabilities(state_, cfg_.gamma);
  if (trie_.empty()) {
    f.expert_predictions.assign(cfg_.num_experts(), std::nullopt);
    return f;
  }
  f.blends = all_order_distributions<double>(trie_, cfg_.max_order);
  f.expert_predictions.reserve(f.blends.size());
  for (const auto& b : f.blends)
    f.expert_predictions.push_back(argmax_symbol<double>(b.probs));
  f.mixture = combine(f.expert_probs, f.blends);
  f.predicted = predict(f.mixture);
  return f;
}

namespace {

double simplex_error(std::span<const double> v) {
  return std::abs(std::accumulate(v.begin(), v.end(), 0.0) - 1.0);
}

}  // namespace

StepRecord OnlinePredictor::observe(SymbolId actual) {
  Forecast f = forecast();

  max_norm_err_ = std::max(max_norm_err_, simplex_error(f.expert_probs));
  for (const auto& b : f.blends)
    max_norm_err_ = std::max(max_norm_err_, simplex_error(b.probs));
  if (!f.mixture.empty())
    max_norm_err_ = std::max(max_norm_err_, simplex_error(f.mixture));

  StepRecord rec;
  rec.step = state_.step + 1;
  rec.actual = actual;
  rec.predicted = f.predicted;
  rec.loss = zero_one_loss(actual, f.predicted);
  if (rec.loss == 0.0) ++hits_;
  rec.cum_acc = static_cast<double>(hits_) / static_cast<double>(rec.step);

  rec.expert_losses.reserve(f.expert_predictions.size());
  for (const auto& p : f.expert_predictions)
    rec.expert_losses.push_back(zero_one_loss(actual, p));

  update_weights(state_, rec.expert_losses, cfg_.gamma, beta_);
  trie_.ingest(actual);

  rec.disc_loss = state_.discounted_predictor_loss;
  rec.expert_disc_losses = state_.discounted_expert_losses;
  const double best = *std::min_element(rec.expert_disc_losses.begin(),
                                        rec.expert_disc_losses.end());
  rec.bound = loss_bound(cfg_.gamma, rec.step, cfg_.num_experts(), best);
  rec.expert_probs = std::move(f.expert_probs);
  rec.expert_predictions = std::move(f.expert_predictions);
  return rec;
}

MetricsTrace run_online(const PredictorConfig& cfg, std::span<const SymbolId> seq,
                        const Alphabet* names) {
  OnlinePredictor predictor(cfg);
  MetricsTrace trace;
  trace.config = cfg;
  trace.beta = predictor.beta();
  trace.steps.reserve(seq.size());
  for (SymbolId s : seq) trace.steps.push_back(predictor.observe(s));
  trace.max_normalization_error = predictor.max_normalization_error();
  if (names) trace.tokens = names->tokens();
  return trace;
}

MetricsTrace run_online(const PredictorConfig& cfg, SequenceStream& stream) {
  OnlinePredictor predictor(cfg);
  Alphabet alphabet;
  MetricsTrace trace;
  trace.config = cfg;
  trace.beta = predictor.beta();
  while (auto tok = stream.next())
    trace.steps.push_back(predictor.observe(alphabet.intern(*tok)));
  trace.max_normalization_error = predictor.max_normalization_error();
  trace.tokens = alphabet.tokens();
  return trace;
}

BestExpert best_expert(const MetricsTrace& trace) {
  if (trace.empty()) throw InputError("best expert of an empty trace");
  const auto& losses = trace.steps.back().expert_disc_losses;
  BestExpert best{0, losses[0]};
  for (std::size_t k = 1; k < losses.size(); ++k)
    if (losses[k] < best.loss) best = {k, losses[k]};
  return best;
}

double normalized_loss(const MetricsTrace& trace, double gamma, std::size_t horizon) {
  if (trace.empty()) return 0.0;
  return trace.steps.back().disc_loss / max_discounted_loss(gamma, horizon);
}

BoundReport verify_bound(const MetricsTrace& trace, const PredictorConfig& cfg) {
  if (trace.empty()) throw InputError("cannot verify the bound of an empty trace");
  const std::size_t n = trace.size();
  const std::size_t experts = cfg.num_experts();
  BoundReport r;
  auto best = best_expert(trace);
  r.best_expert = best.index;
  r.best_loss = best.loss;
  r.loss = trace.steps.back().disc_loss;
  r.bound = loss_bound(cfg.gamma, n, experts, best.loss);
  r.margin = r.bound - r.loss;
  r.holds = r.loss <= r.bound;
  const double lmax = max_discounted_loss(cfg.gamma, n);
  r.normalized_loss = r.loss / lmax;
  r.normalized_bound = r.bound / lmax;

  if (cfg.horizon && *cfg.horizon != n)
    r.warnings.push_back(
        fmt::format("declared horizon {} but trace has {} steps", *cfg.horizon, n));
  const double opt = optimal_beta(cfg.gamma, n, experts);
  if (std::abs(trace.beta - opt) > 1e-12)
    r.warnings.push_back(fmt::format(
        "beta {} is not the optimal {} for this horizon; the bound is not guaranteed",
        trace.beta, opt));
  return r;
}

namespace {

std::vector<double> log_of(std::span<const double> w) {
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] > 0.0)) throw InputError("weights must be positive");
    out[i] = std::log(w[i]);
  }
  return out;
}

}  // namespace

bool check_majorization(std::span<const double> weights, double gamma, unsigned m) {
  const auto lw = log_of(weights);
  auto flat = power_normalize(lw, std::pow(gamma, static_cast<double>(m)));
  auto sharp = power_normalize(lw, gamma);
  std::sort(flat.begin(), flat.end(), std::greater<>());
  std::sort(sharp.begin(), sharp.end(), std::greater<>());
  double sf = 0.0;
  double ss = 0.0;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    sf += flat[i];
    ss += sharp[i];
    if (sf > ss + 1e-12) return false;
  }
  return std::abs(sf - ss) <= 1e-12;
}

LemmaOutcome check_ordered_inequality(std::span<const double> weights,
                                      std::span<const double> losses, double gamma,
                                      unsigned m) {
  if (weights.size() != losses.size() || weights.empty())
    return LemmaOutcome::kInapplicable;
  for (std::size_t i = 1; i < weights.size(); ++i)
    if (weights[i] < weights[i - 1] || losses[i] > losses[i - 1])
      return LemmaOutcome::kInapplicable;
  for (double l : losses)
    if (!(l >= 0.0 && l <= 1.0)) return LemmaOutcome::kInapplicable;

  const auto lw = log_of(weights);
  const auto flat = power_normalize(lw, std::pow(gamma, static_cast<double>(m)));
  const auto sharp = power_normalize(lw, gamma);
  double ef = 0.0;
  double es = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    ef += flat[i] * losses[i];
    es += sharp[i] * losses[i];
  }
  return ef >= es - 1e-12 ? LemmaOutcome::kHolds : LemmaOutcome::kViolated;
}

std::vector<double> accuracy_curve(const MetricsTrace& trace,
                                   std::optional<std::size_t> window) {
  if (window && *window == 0) throw ConfigError("accuracy window must be >= 1");
  std::vector<double> out;
  out.reserve(trace.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.steps[i].loss == 0.0) ++hits;
    std::size_t span = i + 1;
    if (window && i >= *window) {
      if (trace.steps[i - *window].loss == 0.0) --hits;
      span = *window;
    }
    out.push_back(static_cast<double>(hits) / static_cast<double>(span));
  }
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q.push_back('"');
    q.push_back(c);
  }
  q.push_back('"');
  return q;
}

std::string token_of(const MetricsTrace& trace, SymbolId s) {
  if (s.value < trace.tokens.size()) return csv_field(trace.tokens[s.value]);
  return std::to_string(s.value);
}

}  // namespace

void write_trace_csv(const MetricsTrace& trace, std::ostream& out, bool per_expert) {
  const std::size_t experts = trace.config.num_experts();
  out << "step,actual,predicted,loss,cum_acc,disc_loss,bound";
  if (per_expert) {
    for (std::size_t k = 0; k < experts; ++k) out << ",p_" << k;
    for (std::size_t k = 0; k < experts; ++k) out << ",L_" << k;
  }
  out << '\n';
  for (const auto& r : trace.steps) {
    out << fmt::format("{},{},{},{},{},{},{}", r.step, token_of(trace, r.actual),
                       r.predicted ? token_of(trace, *r.predicted) : std::string(),
                       r.loss, r.cum_acc, r.disc_loss, r.bound);
    if (per_expert) {
      for (double p : r.expert_probs) out << ',' << fmt::format("{}", p);
      for (double l : r.expert_disc_losses) out << ',' << fmt::format("{}", l);
    }
    out << '\n';
  }
}

nlohmann::json trace_summary(const MetricsTrace& trace) {
  const auto& cfg = trace.config;
  nlohmann::json j;
  j["steps"] = trace.size();
  j["max_order"] = cfg.max_order;
  j["experts"] = cfg.num_experts();
  j["gamma"] = cfg.gamma;
  j["beta"] = trace.beta;
  j["beta_auto"] = !cfg.beta.has_value();
  if (trace.empty()) return j;
  const auto& last = trace.steps.back();
  auto report = verify_bound(trace, cfg);
  j["accuracy"] = last.cum_acc;
  j["loss"] = last.disc_loss;
  j["best_expert"] = report.best_expert;
  j["best_loss"] = report.best_loss;
  j["bound"] = report.bound;
  j["bound_holds"] = report.holds;
  j["normalized_loss"] = report.normalized_loss;
  j["normalized_bound"] = report.normalized_bound;
  j["warnings"] = report.warnings;
  return j;
}

}  // namespace dhedge
