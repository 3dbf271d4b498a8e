#pragma once

#include "fxliq/neural/losses.hpp"
#include "fxliq/neural/mlp.hpp"

#include <cmath>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fxliq::neural {

template <typename Scalar = double>
struct AdamState {
  double learning_rate = 0.003;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  LayerStack<Scalar> first_moment;
  LayerStack<Scalar> second_moment;

  AdamState() = default;
  explicit AdamState(const Mlp<Scalar>& model, double lr = 0.003) : learning_rate(lr) {
    for (const auto& layer : model.layers()) {
      first_moment.push_back({MatrixX<Scalar>::Zero(layer.out_dim(), layer.in_dim()),
                              VectorX<Scalar>::Zero(layer.out_dim())});
      second_moment.push_back(first_moment.back());
    }
  }

  bool matches(const Mlp<Scalar>& model) const {
    if (first_moment.size() != model.layers().size()) return false;
    for (std::size_t l = 0; l < first_moment.size(); ++l)
      if (first_moment[l].weight.rows() != model.layers()[l].out_dim() ||
          first_moment[l].weight.cols() != model.layers()[l].in_dim())
        return false;
    return true;
  }
};

template <typename Scalar>
void adam_update(Mlp<Scalar>& model, AdamState<Scalar>& opt, const LayerStack<Scalar>& grads) {
  if (!opt.matches(model)) throw std::invalid_argument("adam: optimizer shape mismatch");
  ++opt.step;
  const Scalar b1 = static_cast<Scalar>(opt.beta1);
  const Scalar b2 = static_cast<Scalar>(opt.beta2);
  const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(opt.step));
  const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(opt.step));
  const Scalar lr = static_cast<Scalar>(opt.learning_rate);
  const Scalar eps = static_cast<Scalar>(opt.epsilon);
  auto apply = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < grads.size(); ++l) {
    auto& layer = model.layers()[l];
    apply(layer.weight, opt.first_moment[l].weight, opt.second_moment[l].weight, grads[l].weight);
    apply(layer.bias, opt.first_moment[l].bias, opt.second_moment[l].bias, grads[l].bias);
  }
}

template <typename Scalar>
struct LossGradient {
  Scalar loss = 0;  // batch mean
  LayerStack<Scalar> grads;
};

/// Mean loss over a batch (samples as columns of `inputs`) and its parameter gradient.
template <typename Scalar>
LossGradient<Scalar> loss_and_gradient(const Mlp<Scalar>& model, const MatrixX<Scalar>& inputs,
                                       std::span<const VectorX<Scalar>> targets,
                                       const LossSpec& spec) {
  const Eigen::Index batch = inputs.cols();
  if (batch == 0) throw std::invalid_argument("train_step: empty batch");
  if (static_cast<std::size_t>(batch) != targets.size())
    throw std::invalid_argument("train_step: input/target count mismatch");
  typename Mlp<Scalar>::Trace trace;
  const MatrixX<Scalar> out = model.forward_batch(inputs, &trace);
  MatrixX<Scalar> out_grad(out.rows(), batch);
  VectorX<Scalar> g(out.rows());
  Scalar total = 0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    total += sample_loss<Scalar>(spec, out.col(i), targets[static_cast<std::size_t>(i)], g);
    out_grad.col(i) = g;
  }
  const Scalar inv = Scalar(1) / static_cast<Scalar>(batch);
  out_grad *= inv;
  LossGradient<Scalar> result;
  result.loss = total * inv;
  result.grads = model.backward(trace, out_grad);
  return result;
}

/// One Adam step on the mean batch loss. Returns the loss before the update.
template <typename Scalar>
Scalar train_step(Mlp<Scalar>& model, AdamState<Scalar>& opt, const MatrixX<Scalar>& inputs,
                  std::span<const VectorX<Scalar>> targets, const LossSpec& spec) {
  auto lg = loss_and_gradient(model, inputs, targets, spec);
  if (!std::isfinite(static_cast<double>(lg.loss))) {
    std::ostringstream msg;
    msg << "train_step: non-finite " << to_string(spec) << " loss at optimizer step "
        << opt.step << " (batch " << inputs.cols() << ")";
    throw std::runtime_error(msg.str());
  }
  adam_update(model, opt, lg.grads);
  return lg.loss;
}

template <typename Scalar>
struct Sample {
  VectorX<Scalar> input;
  VectorX<Scalar> target;
};

template <typename Scalar>
Scalar train_step(Mlp<Scalar>& model, AdamState<Scalar>& opt,
                  std::span<const Sample<Scalar>> batch, const LossSpec& spec) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  MatrixX<Scalar> inputs(model.input_dim(), static_cast<Eigen::Index>(batch.size()));
  std::vector<VectorX<Scalar>> targets;
  targets.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].input.size() != model.input_dim())
      throw std::invalid_argument("train_step: input dimension mismatch");
    inputs.col(static_cast<Eigen::Index>(i)) = batch[i].input;
    targets.push_back(batch[i].target);
  }
  return train_step(model, opt, inputs, std::span<const VectorX<Scalar>>(targets), spec);
}

/// Max relative error between backprop and central differences (step 1e-5).
template <typename Scalar>
Scalar gradient_check(const Mlp<Scalar>& model, const Sample<Scalar>& sample,
                      const LossSpec& spec) {
  MatrixX<Scalar> input = sample.input;
  const std::vector<VectorX<Scalar>> target{sample.target};
  const auto analytic = loss_and_gradient(model, input, std::span<const VectorX<Scalar>>(target), spec);
  const Scalar h = Scalar(1e-5);
  Mlp<Scalar> probe = model;
  Scalar worst = 0;
  auto loss_at = [&]() {
    return loss_and_gradient(probe, input, std::span<const VectorX<Scalar>>(target), spec).loss;
  };
  auto check = [&](Scalar& param, Scalar grad) {
    const Scalar saved = param;
    param = saved + h;
    const Scalar up = loss_at();
    param = saved - h;
    const Scalar down = loss_at();
    param = saved;
    const Scalar numeric = (up - down) / (Scalar(2) * h);
    const Scalar err =
        std::abs(grad - numeric) / std::max(Scalar(1e-8), std::abs(grad) + std::abs(numeric));
    worst = std::max(worst, err);
  };
  for (std::size_t l = 0; l < probe.layers().size(); ++l) {
    auto& layer = probe.layers()[l];
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
        check(layer.weight(i, j), analytic.grads[l].weight(i, j));
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) check(layer.bias(i), analytic.grads[l].bias(i));
  }
  return worst;
}

}  // namespace fxliq::neural
