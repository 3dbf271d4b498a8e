#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fxliq::neural {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// One affine layer, y = W x + b. Also used as the gradient container.
template <typename Scalar>
struct DenseLayer {
  MatrixX<Scalar> weight;  // out x in
  VectorX<Scalar> bias;    // out

  Eigen::Index in_dim() const { return weight.cols(); }
  Eigen::Index out_dim() const { return weight.rows(); }
};

template <typename Scalar>
using LayerStack = std::vector<DenseLayer<Scalar>>;

/// Feedforward network with rectified hidden layers and an identity output.
///
/// `layer_dims` lists every width including input and output, so the default
/// learner network is {input, 256, 128, output}. Samples are columns when a
/// batch is passed as a matrix.
template <typename Scalar = double>
class Mlp {
 public:
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;

  /// Activations kept from a batched forward pass for backpropagation.
  struct Trace {
    std::vector<Matrix> activations;  // activations[0] is the input
  };

  Mlp() = default;

  /// Scaled-uniform fan-in initialization: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mlp(std::vector<int> layer_dims, std::uint64_t seed) : dims_(std::move(layer_dims)) {
    validate_dims(dims_);
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      const int fan_in = dims_[l];
      const Scalar bound = Scalar(1) / std::sqrt(static_cast<Scalar>(fan_in));
      std::uniform_real_distribution<double> dist(-static_cast<double>(bound),
                                                  static_cast<double>(bound));
      DenseLayer<Scalar> layer{Matrix(dims_[l + 1], fan_in), Vector(dims_[l + 1])};
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
        for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
          layer.weight(i, j) = static_cast<Scalar>(dist(rng));
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i)
        layer.bias(i) = static_cast<Scalar>(dist(rng));
      layers_.push_back(std::move(layer));
    }
  }

  static Mlp zeros(std::vector<int> layer_dims) {
    Mlp m;
    m.dims_ = std::move(layer_dims);
    validate_dims(m.dims_);
    for (std::size_t l = 0; l + 1 < m.dims_.size(); ++l)
      m.layers_.push_back({Matrix::Zero(m.dims_[l + 1], m.dims_[l]), Vector::Zero(m.dims_[l + 1])});
    return m;
  }

  static Mlp from_layers(LayerStack<Scalar> layers) {
    if (layers.empty()) throw std::invalid_argument("mlp: no layers");
    Mlp m;
    m.dims_.push_back(static_cast<int>(layers.front().in_dim()));
    for (const auto& layer : layers) {
      if (layer.in_dim() != m.dims_.back() || layer.bias.size() != layer.out_dim())
        throw std::invalid_argument("mlp: inconsistent layer shapes");
      m.dims_.push_back(static_cast<int>(layer.out_dim()));
    }
    m.layers_ = std::move(layers);
    return m;
  }

  const std::vector<int>& layer_dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  const LayerStack<Scalar>& layers() const { return layers_; }
  LayerStack<Scalar>& layers() { return layers_; }

  std::size_t parameter_count() const { return parameter_count(dims_); }

  static std::size_t parameter_count(const std::vector<int>& dims) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l)
      n += static_cast<std::size_t>(dims[l + 1]) * (static_cast<std::size_t>(dims[l]) + 1);
    return n;
  }

  Vector forward(const Eigen::Ref<const Vector>& input) const {
    if (input.size() != input_dim())
      throw std::invalid_argument("mlp_forward: expected input of size " +
                                  std::to_string(input_dim()) + ", got " +
                                  std::to_string(input.size()));
    if (!input.allFinite()) throw std::invalid_argument("mlp_forward: non-finite input");
    Vector a = input;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Vector z = layers_[l].weight * a + layers_[l].bias;
      a = (l + 1 < layers_.size()) ? Vector(z.cwiseMax(Scalar(0))) : z;
    }
    return a;
  }

  Matrix forward_batch(const Matrix& inputs) const { return forward_batch(inputs, nullptr); }

  Matrix forward_batch(const Matrix& inputs, Trace* trace) const {
    if (inputs.rows() != input_dim())
      throw std::invalid_argument("mlp_forward: expected " + std::to_string(input_dim()) +
                                  " input rows, got " + std::to_string(inputs.rows()));
    if (!inputs.allFinite()) throw std::invalid_argument("mlp_forward: non-finite input");
    if (trace) {
      trace->activations.clear();
      trace->activations.push_back(inputs);
    }
    Matrix a = inputs;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix z = layers_[l].weight * a;
      z.colwise() += layers_[l].bias;
      if (l + 1 < layers_.size()) z = z.cwiseMax(Scalar(0));
      a = std::move(z);
      if (trace) trace->activations.push_back(a);
    }
    return a;
  }

  /// Backpropagates dL/d(output) (out x batch) through a recorded trace.
  LayerStack<Scalar> backward(const Trace& trace, const Matrix& output_grad) const {
    LayerStack<Scalar> grads(layers_.size());
    Matrix delta = output_grad;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const Matrix& input = trace.activations[l];
      grads[l].weight = delta * input.transpose();
      grads[l].bias = delta.rowwise().sum();
      if (l > 0) {
        Matrix upstream = layers_[l].weight.transpose() * delta;
        // ReLU derivative, read off the post-activation values.
        delta = upstream.cwiseProduct(
            (input.array() > Scalar(0)).template cast<Scalar>().matrix());
      }
    }
    return grads;
  }

  bool same_shape(const Mlp& other) const { return dims_ == other.dims_; }

  bool operator==(const Mlp& other) const {
    if (dims_ != other.dims_) return false;
    for (std::size_t l = 0; l < layers_.size(); ++l)
      if (layers_[l].weight != other.layers_[l].weight || layers_[l].bias != other.layers_[l].bias)
        return false;
    return true;
  }

 private:
  static void validate_dims(const std::vector<int>& dims) {
    if (dims.size() < 2) throw std::invalid_argument("mlp: need at least input and output dims");
    for (int d : dims)
      if (d < 1) throw std::invalid_argument("mlp: layer widths must be positive");
  }

  std::vector<int> dims_;
  LayerStack<Scalar> layers_;
};

/// Hidden widths used by every learner unless overridden.
inline std::vector<int> default_hidden() { return {256, 128}; }

inline std::vector<int> make_dims(int input, const std::vector<int>& hidden, int output) {
  std::vector<int> dims{input};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output);
  return dims;
}

/// Frozen copy of a network used for bootstrapped targets.
template <typename Scalar = double>
struct TargetModel {
  Mlp<Scalar> net;
  int staleness = 0;

  TargetModel() = default;
  explicit TargetModel(const Mlp<Scalar>& model) : net(model) {}
};

template <typename Scalar>
void sync_target(const Mlp<Scalar>& model, TargetModel<Scalar>& target) {
  if (!target.net.layer_dims().empty() && !model.same_shape(target.net))
    throw std::invalid_argument("sync_target: shape mismatch");
  target.net = model;
  target.staleness = 0;
}

}  // namespace fxliq::neural
