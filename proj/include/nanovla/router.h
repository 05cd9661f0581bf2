#ifndef NANOVLA_ROUTER_H_
#define NANOVLA_ROUTER_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace nanovla {

struct TrialRecord {
  std::string model_id;
  std::string task_id;
  std::int64_t successes = 0;
  std::int64_t trials = 0;
};

struct BetaPosterior {
  double alpha = 1.0;
  double beta = 1.0;

  double mean() const { return alpha / (alpha + beta); }
};

BetaPosterior posterior_from_trials(const TrialRecord& r, double alpha0 = 1.0,
                                    double beta0 = 1.0);

// P(p_i > p_j) by the finite sum over k < alpha_i; NotApplicableError unless
// pi.alpha is a positive integer.
double win_prob_closed_form(const BetaPosterior& pi, const BetaPosterior& pj);
double win_prob_mc(const BetaPosterior& pi, const BetaPosterior& pj, std::size_t draws,
                   std::uint64_t seed);
// Closed form when either alpha is integral, Monte Carlo otherwise.
double win_prob(const BetaPosterior& pi, const BetaPosterior& pj, std::size_t mc_draws = 100000,
                std::uint64_t seed = 0);

inline constexpr double kDefaultClip = 1e-4;
double clip_target(double p, double eps = kDefaultClip);

// Fixed seeded hash of lowercase word tokens into `dim` signed buckets,
// L2-normalized.
std::vector<double> hash_features(const std::string& text, std::size_t dim = 64,
                                  std::uint64_t seed = 0x5eed);

// Logistic pairwise classifier. The input for (i, j, l) is the outer product
// (e_i - e_j) x [phi(l), 1], so swapping i and j negates the logit and
// P(i>j|l) + P(j>i|l) = 1 holds exactly; bias stays at zero.
struct RouterModel {
  std::vector<std::string> models;
  std::size_t task_dim = 0;
  std::vector<double> weights;  // models.size() * (task_dim + 1)
  double bias = 0.0;
  double final_loss = 0.0;
  std::string feature_spec;

  std::size_t feature_dim() const { return weights.size(); }
  std::size_t model_index(const std::string& id) const;
  double logit(std::span<const double> task_features, std::size_t i, std::size_t j) const;
  double win_probability(std::span<const double> task_features, const std::string& i,
                         const std::string& j) const;
};

struct PairwiseTarget {
  std::size_t task = 0;  // row into the feature matrix
  std::size_t i = 0;
  std::size_t j = 0;
  double target = 0.5;  // pre-clipped P(i > j | task)
};

struct FitOptions {
  std::size_t epochs = 500;
  double lr = 0.5;
  std::uint64_t seed = 0;
  std::size_t batch = 0;  // 0 = full batch; otherwise shuffled minibatches
};

struct FitResult {
  RouterModel model;
  std::vector<double> loss_curve;  // mean loss before each epoch, then final
};

FitResult fit_pairwise(const std::vector<std::vector<double>>& task_features,
                       const std::vector<std::string>& models,
                       const std::vector<PairwiseTarget>& targets, const FitOptions& opts);

// Soft-label Bernoulli log-loss averaged over targets.
double pairwise_loss(const RouterModel& m, const std::vector<std::vector<double>>& features,
                     const std::vector<PairwiseTarget>& targets);

enum class EscalationRule { kAsWritten, kMargin };

struct RoutePolicy {
  double tau = 0.5;
  std::string light_model_id = "light";
  std::string heavy_model_id = "heavy";
  EscalationRule rule = EscalationRule::kAsWritten;

  void validate() const;
};

// Heavy iff the score exceeds tau. Score is P(heavy > light | task), or
// 2P - 1 under the margin rule. Ties route light.
std::string route(std::span<const double> task_features, const RouterModel& m,
                  const RoutePolicy& policy);

// Per-task naive decision from point estimates s/n: heavy iff p_heavy > tau
// and p_heavy > p_light. Missing trials fall back to the prior mean 1/2.
std::vector<std::string> route_naive_sr(const std::vector<TrialRecord>& trials,
                                        const std::vector<std::string>& task_ids,
                                        const RoutePolicy& policy);

double expected_params(const std::vector<std::string>& decisions,
                       const std::map<std::string, double>& model_sizes);

// Trial log CSV: task_id,model_id,successes,trials.
std::vector<TrialRecord> read_trial_csv(const std::string& path);
void write_trial_csv(const std::string& path, const std::vector<TrialRecord>& trials);

}  // namespace nanovla

#endif  // NANOVLA_ROUTER_H_
