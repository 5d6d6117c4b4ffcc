#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "tiera/errors.hpp"

namespace tiera {

using Logits = std::vector<double>;
using ProbDist = std::vector<double>;

// Floor applied to probabilities inside logarithms. Prevents -inf without
// measurably biasing losses at double precision.
inline constexpr double kProbFloor = 1e-12;

// Tolerance for "entries sum to 1" when validating a probability vector.
inline constexpr double kProbSumTol = 1e-9;

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument(std::string(what) + ": non-finite entry");
    }
  }
}

inline void require_prob_dist(const ProbDist& p, const char* what) {
  require(p.size() >= 2, std::string(what) + ": needs at least 2 classes");
  double sum = 0.0;
  for (double x : p) {
    require(x >= 0.0 && x <= 1.0,
            std::string(what) + ": entry outside [0, 1]");
    sum += x;
  }
  require(std::abs(sum - 1.0) <= kProbSumTol,
          std::string(what) + ": entries do not sum to 1");
}

inline double clamped_log(double x) {
  return std::log(std::max(x, kProbFloor));
}

}  // namespace detail

// softmax(l / t), stabilized by shifting with the max logit so that the
// largest exponent is exp(0) and no finite input can overflow.
inline ProbDist temp_softmax(const Logits& logits, double temperature) {
  detail::require(logits.size() >= 2, "temp_softmax: needs at least 2 logits");
  detail::require_finite(logits, "temp_softmax");
  detail::require(temperature > 0.0 && std::isfinite(temperature),
                  "temp_softmax: temperature must be positive");
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  ProbDist p(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp((logits[k] - max_logit) / temperature);
    sum += p[k];
  }
  for (double& x : p) x /= sum;
  return p;
}

// -log p_y with the probability floor.
inline double cross_entropy(const ProbDist& p, int label) {
  detail::require_prob_dist(p, "cross_entropy");
  detail::require(label >= 0 && static_cast<std::size_t>(label) < p.size(),
                  "cross_entropy: label out of range");
  return -detail::clamped_log(p[static_cast<std::size_t>(label)]);
}

// Shannon entropy -sum p log p with the 0 log 0 := 0 convention.
// The negative information entropy regularizer is NIE(p) = -entropy(p).
inline double entropy(const ProbDist& p) {
  detail::require_prob_dist(p, "entropy");
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

// KL(target || q) = sum target_k log(target_k / q_k). The soft label goes in
// the first slot; q is floor-clamped, and 0 log(0/q) := 0.
inline double kl_div(const ProbDist& target, const ProbDist& q) {
  detail::require_prob_dist(target, "kl_div target");
  detail::require_prob_dist(q, "kl_div q");
  detail::require(target.size() == q.size(), "kl_div: length mismatch");
  double d = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    if (target[k] > 0.0) {
      d += target[k] * (std::log(target[k]) - detail::clamped_log(q[k]));
    }
  }
  return d;
}

// Elementwise arithmetic mean of the replicas' predictions (the soft label).
inline ProbDist aggregate(const std::vector<ProbDist>& preds) {
  detail::require(!preds.empty(), "aggregate: empty input");
  const std::size_t k_classes = preds.front().size();
  for (const auto& p : preds) {
    detail::require(p.size() == k_classes, "aggregate: length mismatch");
    detail::require_prob_dist(p, "aggregate");
  }
  ProbDist mean(k_classes, 0.0);
  for (const auto& p : preds) {
    for (std::size_t k = 0; k < k_classes; ++k) mean[k] += p[k];
  }
  for (double& x : mean) x /= static_cast<double>(preds.size());
  return mean;
}

// Per-example loss decomposition for one replica.
struct LossTerms {
  double ce = 0.0;   // cross entropy, >= 0
  double nie = 0.0;  // negative information entropy, in [-log K, 0]
  double kl = 0.0;   // KL(soft label || p_i), >= 0; 0 in warm-up mode
  double total = 0.0;
};

struct ObjectiveSettings {
  double temperature = 1.0;
  double alpha = 0.0;  // NIE coefficient
  double beta = 0.0;   // joint-training coefficient
  bool joint = true;   // false during warm-up: the KL term is dropped
};

struct ObjectiveEval {
  std::vector<ProbDist> probs;  // p_i = temp_softmax(l_i, T) per replica
  ProbDist soft_label;          // mean of probs; empty in warm-up mode
  std::vector<LossTerms> loss;  // per replica
  std::vector<std::vector<double>> logit_grad;  // d loss_i / d l_i
};

// Loss terms and the analytic gradient of each replica's objective
//   CE(p_i, y) + alpha * NIE(p_i) + beta * KL(p_st, p_i)
// with respect to that replica's logits. The soft label p_st is treated as a
// constant target, so no gradient flows through the aggregation and each
// replica's gradient involves only its own logits:
//   d/dl = [(p - onehot(y)) + alpha * p .* (log p + H(p)) + beta * (p - p_st)] / T
inline ObjectiveEval objective_and_grad(const std::vector<Logits>& logits,
                                        int label,
                                        const ObjectiveSettings& cfg) {
  detail::require(!logits.empty(), "objective_and_grad: empty input");
  const std::size_t k_classes = logits.front().size();
  for (const auto& l : logits) {
    detail::require(l.size() == k_classes, "objective_and_grad: length mismatch");
  }
  detail::require(label >= 0 && static_cast<std::size_t>(label) < k_classes,
                  "objective_and_grad: label out of range");

  ObjectiveEval out;
  out.probs.reserve(logits.size());
  for (const auto& l : logits) {
    out.probs.push_back(temp_softmax(l, cfg.temperature));
  }
  if (cfg.joint) out.soft_label = aggregate(out.probs);

  const double beta_eff = cfg.joint ? cfg.beta : 0.0;
  out.loss.resize(logits.size());
  out.logit_grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const ProbDist& p = out.probs[i];
    const double h = entropy(p);

    LossTerms& lt = out.loss[i];
    lt.ce = cross_entropy(p, label);
    lt.nie = -h;
    lt.kl = cfg.joint ? kl_div(out.soft_label, p) : 0.0;
    lt.total = lt.ce + cfg.alpha * lt.nie + beta_eff * lt.kl;

    std::vector<double>& g = out.logit_grad[i];
    g.resize(k_classes);
    for (std::size_t k = 0; k < k_classes; ++k) {
      g[k] = p[k] - (static_cast<int>(k) == label ? 1.0 : 0.0);
    }
    if (cfg.alpha != 0.0) {
      for (std::size_t k = 0; k < k_classes; ++k) {
        g[k] += cfg.alpha * (p[k] * (detail::clamped_log(p[k]) + h));
      }
    }
    if (beta_eff != 0.0) {
      for (std::size_t k = 0; k < k_classes; ++k) {
        g[k] += beta_eff * (p[k] - out.soft_label[k]);
      }
    }
    for (double& x : g) x /= cfg.temperature;
  }
  return out;
}

}  // namespace tiera
