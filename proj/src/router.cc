#include "nanovla/router.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>

#include "nanovla/config.h"
#include "nanovla/csv.h"
#include "nanovla/errors.h"
#include "nanovla/rng.h"
#include "nanovla/stubs.h"

namespace nanovla {
namespace {

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

bool is_positive_integer(double x) {
  return x >= 1.0 && std::abs(x - std::round(x)) < 1e-12;
}

void check_posterior(const BetaPosterior& p, const char* what) {
  if (!(p.alpha > 0.0) || !(p.beta > 0.0) || !std::isfinite(p.alpha) ||
      !std::isfinite(p.beta)) {
    throw DataError(std::string(what) + ": Beta parameters must be finite and > 0");
  }
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
double soft_bce(double z, double y) {
  const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return softplus - y * z;
}

std::vector<double> augmented(std::span<const double> phi) {
  std::vector<double> x(phi.begin(), phi.end());
  x.push_back(1.0);
  return x;
}

}  // namespace

BetaPosterior posterior_from_trials(const TrialRecord& r, double alpha0, double beta0) {
  if (!(alpha0 > 0.0) || !(beta0 > 0.0)) throw ConfigError("posterior: prior must be > 0");
  if (r.trials < 0 || r.successes < 0 || r.successes > r.trials) {
    throw DataError("posterior: invalid counts s=" + std::to_string(r.successes) +
                    " n=" + std::to_string(r.trials) + " for " + r.model_id + "/" +
                    r.task_id);
  }
  return BetaPosterior{static_cast<double>(r.successes) + alpha0,
                       static_cast<double>(r.trials - r.successes) + beta0};
}

double win_prob_closed_form(const BetaPosterior& pi, const BetaPosterior& pj) {
  check_posterior(pi, "closed form");
  check_posterior(pj, "closed form");
  if (!is_positive_integer(pi.alpha)) {
    throw NotApplicableError("closed form needs integer alpha_i, got " +
                             format_double(pi.alpha));
  }
  const auto terms = static_cast<std::int64_t>(std::llround(pi.alpha));
  const double lg_bi = std::lgamma(pi.beta);
  const double lb_j = log_beta(pj.alpha, pj.beta);
  double sum = 0.0;
  for (std::int64_t k = 0; k < terms; ++k) {
    const double kd = static_cast<double>(k);
    const double log_binom = std::lgamma(pi.beta + kd) - std::lgamma(kd + 1.0) - lg_bi;
    sum += std::exp(log_binom + log_beta(pj.alpha + kd, pi.beta + pj.beta) - lb_j);
  }
  return std::clamp(sum, 0.0, 1.0);
}

double win_prob_mc(const BetaPosterior& pi, const BetaPosterior& pj, std::size_t draws,
                   std::uint64_t seed) {
  check_posterior(pi, "monte carlo");
  check_posterior(pj, "monte carlo");
  if (draws == 0) throw ConfigError("monte carlo: R must be >= 1");
  Rng rng(seed);
  std::size_t wins = 0;
  for (std::size_t r = 0; r < draws; ++r) {
    const double x = rng.beta(pi.alpha, pi.beta);
    const double y = rng.beta(pj.alpha, pj.beta);
    if (x > y) ++wins;
  }
  return static_cast<double>(wins) / static_cast<double>(draws);
}

double win_prob(const BetaPosterior& pi, const BetaPosterior& pj, std::size_t mc_draws,
                std::uint64_t seed) {
  if (is_positive_integer(pi.alpha)) return win_prob_closed_form(pi, pj);
  if (is_positive_integer(pj.alpha)) return 1.0 - win_prob_closed_form(pj, pi);
  return win_prob_mc(pi, pj, mc_draws, seed);
}

double clip_target(double p, double eps) {
  if (!(p >= 0.0 && p <= 1.0)) throw DataError("clip_target: p outside [0,1]");
  return std::max(eps, std::min(1.0 - eps, p));
}

std::vector<double> hash_features(const std::string& text, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw ConfigError("hash features: dim must be >= 1");
  std::vector<double> phi(dim, 0.0);
  for (std::string_view w : word_tokens(text)) {
    std::string lower(w);
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    const std::uint64_t h = mix_seed(fnv1a(lower), seed);
    phi[h % dim] += (h >> 63) ? -1.0 : 1.0;
  }
  const double n = std::sqrt(std::inner_product(phi.begin(), phi.end(), phi.begin(), 0.0));
  if (n > 0) {
    for (double& v : phi) v /= n;
  }
  return phi;
}

std::size_t RouterModel::model_index(const std::string& id) const {
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (models[i] == id) return i;
  }
  throw ConfigError("router: unknown model id '" + id + "'");
}

double RouterModel::logit(std::span<const double> phi, std::size_t i, std::size_t j) const {
  if (phi.size() != task_dim) {
    throw DimensionError("router: task features have dim " + std::to_string(phi.size()) +
                         ", model expects " + std::to_string(task_dim));
  }
  const std::size_t stride = task_dim + 1;
  double z = bias;
  for (std::size_t f = 0; f <= task_dim; ++f) {
    const double x = f < task_dim ? phi[f] : 1.0;
    z += (weights[i * stride + f] - weights[j * stride + f]) * x;
  }
  return z;
}

double RouterModel::win_probability(std::span<const double> phi, const std::string& i,
                                    const std::string& j) const {
  return sigmoid(logit(phi, model_index(i), model_index(j)));
}

double pairwise_loss(const RouterModel& m, const std::vector<std::vector<double>>& features,
                     const std::vector<PairwiseTarget>& targets) {
  double total = 0.0;
  for (const PairwiseTarget& t : targets) {
    total += soft_bce(m.logit(features.at(t.task), t.i, t.j), t.target);
  }
  return total / static_cast<double>(targets.size());
}

FitResult fit_pairwise(const std::vector<std::vector<double>>& task_features,
                       const std::vector<std::string>& models,
                       const std::vector<PairwiseTarget>& targets, const FitOptions& opts) {
  if (task_features.empty()) throw ConfigError("fit_pairwise: need at least one task");
  if (models.size() < 2) throw ConfigError("fit_pairwise: need at least two models");
  if (targets.empty()) throw ConfigError("fit_pairwise: no targets");
  if (!(opts.lr > 0.0)) throw ConfigError("fit_pairwise: lr must be > 0");
  const std::size_t dim = task_features[0].size();
  for (const auto& f : task_features) {
    if (f.size() != dim) throw DimensionError("fit_pairwise: ragged task features");
  }
  for (const PairwiseTarget& t : targets) {
    if (t.task >= task_features.size() || t.i >= models.size() || t.j >= models.size() ||
        t.i == t.j) {
      throw DataError("fit_pairwise: target references an unknown task or model pair");
    }
    if (!(t.target >= 0.0 && t.target <= 1.0)) {
      throw DataError("fit_pairwise: target outside [0,1]");
    }
  }

  FitResult result;
  RouterModel& m = result.model;
  m.models = models;
  m.task_dim = dim;
  m.weights.assign(models.size() * (dim + 1), 0.0);
  m.feature_spec = "hash" + std::to_string(dim) + "(words) x (e_i - e_j), bias 0";
  const std::size_t stride = dim + 1;

  std::vector<std::size_t> order(targets.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(opts.seed);
  const std::size_t batch = opts.batch == 0 ? targets.size() : opts.batch;
  std::vector<double> grad(m.weights.size());

  auto checked_loss = [&] {
    const double loss = pairwise_loss(m, task_features, targets);
    if (!std::isfinite(loss)) throw NumericError("fit_pairwise: non-finite loss", "weights");
    return loss;
  };

  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    result.loss_curve.push_back(checked_loss());
    if (opts.batch != 0) {
      for (std::size_t k = order.size(); k > 1; --k) {
        std::swap(order[k - 1], order[rng.below(k)]);
      }
    }
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = begin; b < end; ++b) {
        const PairwiseTarget& t = targets[order[b]];
        const std::vector<double> x = augmented(task_features[t.task]);
        const double dz = sigmoid(m.logit(task_features[t.task], t.i, t.j)) - t.target;
        for (std::size_t f = 0; f < stride; ++f) {
          grad[t.i * stride + f] += dz * x[f];
          grad[t.j * stride + f] -= dz * x[f];
        }
      }
      const double scale = opts.lr / static_cast<double>(end - begin);
      for (std::size_t w = 0; w < grad.size(); ++w) m.weights[w] -= scale * grad[w];
    }
  }
  m.final_loss = checked_loss();
  result.loss_curve.push_back(m.final_loss);
  return result;
}

void RoutePolicy::validate() const {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("route policy: tau must be in [0,1]");
  if (light_model_id.empty() || heavy_model_id.empty() || light_model_id == heavy_model_id) {
    throw ConfigError("route policy: need two distinct model ids");
  }
}

std::string route(std::span<const double> phi, const RouterModel& m, const RoutePolicy& policy) {
  policy.validate();
  const double p = m.win_probability(phi, policy.heavy_model_id, policy.light_model_id);
  const double score = policy.rule == EscalationRule::kMargin ? 2.0 * p - 1.0 : p;
  return score > policy.tau ? policy.heavy_model_id : policy.light_model_id;
}

std::vector<std::string> route_naive_sr(const std::vector<TrialRecord>& trials,
                                        const std::vector<std::string>& task_ids,
                                        const RoutePolicy& policy) {
  policy.validate();
  std::map<std::pair<std::string, std::string>, std::pair<std::int64_t, std::int64_t>> counts;
  for (const TrialRecord& r : trials) {
    if (r.trials < 0 || r.successes < 0 || r.successes > r.trials) {
      throw DataError("naive router: invalid counts for " + r.model_id + "/" + r.task_id);
    }
    auto& c = counts[{r.task_id, r.model_id}];
    c.first += r.successes;
    c.second += r.trials;
  }
  auto estimate = [&](const std::string& task, const std::string& model) {
    auto it = counts.find({task, model});
    if (it == counts.end() || it->second.second == 0) return 0.5;
    return static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
  };
  std::vector<std::string> out;
  out.reserve(task_ids.size());
  for (const std::string& task : task_ids) {
    const double heavy = estimate(task, policy.heavy_model_id);
    const double light = estimate(task, policy.light_model_id);
    out.push_back(heavy > policy.tau && heavy > light ? policy.heavy_model_id
                                                      : policy.light_model_id);
  }
  return out;
}

double expected_params(const std::vector<std::string>& decisions,
                       const std::map<std::string, double>& model_sizes) {
  if (decisions.empty()) throw ConfigError("expected_params: no routing decisions");
  double total = 0.0;
  for (const std::string& d : decisions) {
    auto it = model_sizes.find(d);
    if (it == model_sizes.end()) throw ConfigError("expected_params: no size for '" + d + "'");
    total += it->second;
  }
  return total / static_cast<double>(decisions.size());
}

std::vector<TrialRecord> read_trial_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::size_t task = t.column("task_id"), model = t.column("model_id"),
                    succ = t.column("successes"), n = t.column("trials");
  std::vector<TrialRecord> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::string where = path + ":" + std::to_string(t.line_numbers[r]);
    TrialRecord rec;
    rec.task_id = row[task];
    rec.model_id = row[model];
    try {
      rec.successes = parse_int(row[succ], "successes");
      rec.trials = parse_int(row[n], "trials");
    } catch (const std::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    if (rec.successes < 0 || rec.successes > rec.trials) {
      throw DataError(where + ": need 0 <= successes <= trials");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_trial_csv(const std::string& path, const std::vector<TrialRecord>& trials) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  CsvWriter w(out, {"task_id", "model_id", "successes", "trials"});
  for (const TrialRecord& r : trials) {
    w.row({r.task_id, r.model_id, std::to_string(r.successes), std::to_string(r.trials)});
  }
}

}  // namespace nanovla
