#pragma once

#include "fxliq/neural/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fxliq::neural {

enum class LossKind { mse, weighted_topk, cross_entropy, focal };

struct LossSpec {
  LossKind kind = LossKind::mse;
  double gamma = 0.0;  // focal only

  static LossSpec mse() { return {LossKind::mse, 0.0}; }
  static LossSpec weighted_topk() { return {LossKind::weighted_topk, 0.0}; }
  static LossSpec cross_entropy() { return {LossKind::cross_entropy, 0.0}; }
  static LossSpec focal(double gamma) { return {LossKind::focal, gamma}; }
};

std::string to_string(const LossSpec& spec);

inline constexpr double kProbClamp = 1e-7;

/// Sum over ranks k = 1..J of (pred_k - target_k)^2 / k. Heads past J are ignored.
template <typename Scalar>
Scalar weighted_topk_loss(const Eigen::Ref<const VectorX<Scalar>>& pred,
                          const Eigen::Ref<const VectorX<Scalar>>& targets) {
  const Eigen::Index j = targets.size();
  if (j == 0) throw std::invalid_argument("weighted_topk_loss: empty targets");
  if (j > pred.size()) throw std::invalid_argument("weighted_topk_loss: more targets than heads");
  Scalar loss = 0;
  for (Eigen::Index k = 0; k < j; ++k) {
    const Scalar diff = pred(k) - targets(k);
    loss += Scalar(1) / static_cast<Scalar>(k + 1) * (diff * diff);
  }
  return loss;
}

/// -(1 - p)^gamma * log(p), p clamped into [1e-7, 1 - 1e-7].
template <typename Scalar>
Scalar focal_loss(Scalar prob_of_target, Scalar gamma) {
  const Scalar p = std::clamp(prob_of_target, Scalar(kProbClamp), Scalar(1 - kProbClamp));
  if (gamma == Scalar(0)) return -std::log(p);
  return -std::pow(Scalar(1) - p, gamma) * std::log(p);
}

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  return z >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-z)) : std::exp(z) / (Scalar(1) + std::exp(z));
}

/// Binary cross-entropy on a single logit, target in {0, 1}.
template <typename Scalar>
Scalar binary_cross_entropy(Scalar logit, Scalar target) {
  // log(1 + exp(-|z|)) + max(z, 0) - y z
  return std::log1p(std::exp(-std::abs(logit))) + std::max(logit, Scalar(0)) - target * logit;
}

/// Per-sample loss and its gradient with respect to the raw network output.
template <typename Scalar>
Scalar sample_loss(const LossSpec& spec, const Eigen::Ref<const VectorX<Scalar>>& output,
                   const Eigen::Ref<const VectorX<Scalar>>& target,
                   Eigen::Ref<VectorX<Scalar>> grad) {
  grad.setZero();
  switch (spec.kind) {
    case LossKind::mse: {
      if (target.size() != output.size())
        throw std::invalid_argument("mse: target size does not match output size");
      Scalar loss = 0;
      for (Eigen::Index i = 0; i < output.size(); ++i) {
        const Scalar diff = output(i) - target(i);
        loss += diff * diff;
        grad(i) = Scalar(2) * diff;
      }
      return loss;
    }
    case LossKind::weighted_topk: {
      const Scalar loss = weighted_topk_loss<Scalar>(output, target);
      for (Eigen::Index k = 0; k < target.size(); ++k)
        grad(k) = Scalar(2) / static_cast<Scalar>(k + 1) * (output(k) - target(k));
      return loss;
    }
    case LossKind::cross_entropy: {
      if (output.size() != 1 || target.size() != 1)
        throw std::invalid_argument("cross_entropy: expects a single logit");
      grad(0) = sigmoid(output(0)) - target(0);
      return binary_cross_entropy(output(0), target(0));
    }
    case LossKind::focal: {
      if (output.size() != 1 || target.size() != 1)
        throw std::invalid_argument("focal: expects a single logit");
      const Scalar gamma = static_cast<Scalar>(spec.gamma);
      const bool positive = target(0) > Scalar(0.5);
      const Scalar p = sigmoid(output(0));
      const Scalar pt = std::clamp(positive ? p : Scalar(1) - p, Scalar(kProbClamp),
                                   Scalar(1 - kProbClamp));
      const Scalar sign = positive ? Scalar(1) : Scalar(-1);
      const Scalar one_minus = Scalar(1) - pt;
      // d/dz of -(1-pt)^g log pt, using dpt/dz = sign * pt (1 - pt).
      const Scalar pow_g = gamma == Scalar(0) ? Scalar(1) : std::pow(one_minus, gamma);
      grad(0) = sign * (gamma * pt * pow_g * std::log(pt) - pow_g * one_minus);
      return focal_loss(pt, gamma);
    }
  }
  throw std::logic_error("sample_loss: unknown loss kind");
}

inline std::string to_string(const LossSpec& spec) {
  switch (spec.kind) {
    case LossKind::mse: return "mse";
    case LossKind::weighted_topk: return "weighted_topk";
    case LossKind::cross_entropy: return "cross_entropy";
    case LossKind::focal: return "focal(" + std::to_string(spec.gamma) + ")";
  }
  return "unknown";
}

}  // namespace fxliq::neural
