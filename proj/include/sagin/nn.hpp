#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "sagin/rng.hpp"

namespace sagin::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class OutputActivation { Linear, Tanh };

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

/// Fully connected network with ReLU hidden layers. Inputs and outputs are
/// column-major batches: one sample per column.
class Mlp {
 public:
  Mlp() = default;

  /// Hidden layers use a fan-in scaled uniform init; the output layer is
  /// drawn from [-final_scale, final_scale] (0 gives a zero output layer).
  Mlp(int inputs, const std::vector<int>& hidden, int outputs, OutputActivation act, Engine& rng,
      double final_scale = 3e-3)
      : act_(act) {
    std::vector<int> sizes{inputs};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(outputs);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const bool last = l + 2 == sizes.size();
      const double bound = last ? final_scale : 1.0 / std::sqrt(static_cast<double>(sizes[l]));
      Matrix w(sizes[l + 1], sizes[l]);
      Vector b(sizes[l + 1]);
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = uniform(rng, -bound, bound);
      for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = uniform(rng, -bound, bound);
      weights_.push_back(std::move(w));
      biases_.push_back(std::move(b));
    }
  }

  int input_dim() const { return static_cast<int>(weights_.front().cols()); }
  int output_dim() const { return static_cast<int>(weights_.back().rows()); }
  int num_layers() const { return static_cast<int>(weights_.size()); }
  OutputActivation output_activation() const { return act_; }
  std::vector<Matrix>& weights() { return weights_; }
  std::vector<Vector>& biases() { return biases_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  const std::vector<Vector>& biases() const { return biases_; }

  /// Activations recorded during a forward pass, needed by backward().
  struct Tape {
    std::vector<Matrix> inputs;  // input to each layer
    std::vector<Matrix> pre;     // pre-activation of each layer
    Matrix output;
  };

  Matrix forward(const Matrix& x) const {
    Tape tape;
    return forward(x, tape);
  }

  Matrix forward(const Matrix& x, Tape& tape) const {
    if (x.rows() != input_dim())
      throw std::invalid_argument("Mlp: expected " + std::to_string(input_dim()) +
                                  " inputs, got " + std::to_string(x.rows()));
    tape.inputs.clear();
    tape.pre.clear();
    Matrix h = x;
    for (int l = 0; l < num_layers(); ++l) {
      tape.inputs.push_back(h);
      Matrix z = (weights_[l] * h).colwise() + biases_[l];
      tape.pre.push_back(z);
      if (l + 1 < num_layers())
        h = z.cwiseMax(0.0);
      else
        h = act_ == OutputActivation::Tanh ? Matrix(z.array().tanh()) : z;
    }
    tape.output = h;
    return h;
  }

  /// Back-propagates d(loss)/d(output); accumulates nothing, overwrites
  /// `grads` when given, and returns d(loss)/d(input).
  Matrix backward(const Tape& tape, const Matrix& d_out, Gradients* grads = nullptr) const {
    Matrix delta = d_out;
    if (act_ == OutputActivation::Tanh)
      delta = delta.cwiseProduct((1.0 - tape.output.array().square()).matrix());
    if (grads) {
      grads->weights.resize(num_layers());
      grads->biases.resize(num_layers());
    }
    for (int l = num_layers() - 1; l >= 0; --l) {
      if (grads) {
        grads->weights[l] = delta * tape.inputs[l].transpose();
        grads->biases[l] = delta.rowwise().sum();
      }
      Matrix d_in = weights_[l].transpose() * delta;
      if (l > 0) d_in = d_in.cwiseProduct((tape.pre[l - 1].array() > 0.0).cast<double>().matrix());
      delta = std::move(d_in);
    }
    return delta;
  }

  int num_params() const {
    int n = 0;
    for (int l = 0; l < num_layers(); ++l)
      n += static_cast<int>(weights_[l].size() + biases_[l].size());
    return n;
  }

  /// Parameters flattened layer by layer, weights (column-major) then bias.
  Vector flat() const {
    Vector v(num_params());
    Eigen::Index o = 0;
    for (int l = 0; l < num_layers(); ++l) {
      v.segment(o, weights_[l].size()) = weights_[l].reshaped();
      o += weights_[l].size();
      v.segment(o, biases_[l].size()) = biases_[l];
      o += biases_[l].size();
    }
    return v;
  }

  void set_flat(const Vector& v) {
    if (v.size() != num_params()) throw std::invalid_argument("Mlp::set_flat: size mismatch");
    Eigen::Index o = 0;
    for (int l = 0; l < num_layers(); ++l) {
      weights_[l].reshaped() = v.segment(o, weights_[l].size());
      o += weights_[l].size();
      biases_[l] = v.segment(o, biases_[l].size());
      o += biases_[l].size();
    }
  }

  bool same_shape(const Mlp& other) const {
    if (num_layers() != other.num_layers() || act_ != other.act_) return false;
    for (int l = 0; l < num_layers(); ++l)
      if (weights_[l].rows() != other.weights_[l].rows() ||
          weights_[l].cols() != other.weights_[l].cols())
        return false;
    return true;
  }

 private:
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
  OutputActivation act_ = OutputActivation::Linear;
};

inline Vector flatten(const Gradients& g) {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < g.weights.size(); ++l) n += g.weights[l].size() + g.biases[l].size();
  Vector v(n);
  Eigen::Index o = 0;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    v.segment(o, g.weights[l].size()) = g.weights[l].reshaped();
    o += g.weights[l].size();
    v.segment(o, g.biases[l].size()) = g.biases[l];
    o += g.biases[l].size();
  }
  return v;
}

/// Adaptive-moment optimizer over a flattened parameter vector.
class Adam {
 public:
  Adam() = default;
  Adam(int num_params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
        m_(Vector::Zero(num_params)), v_(Vector::Zero(num_params)) {}

  /// One descent step along `grads` (gradient of the loss to minimize).
  void step(Mlp& net, const Gradients& grads) {
    const Vector g = flatten(grads);
    if (g.size() != m_.size()) throw std::invalid_argument("Adam: gradient size mismatch");
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * g;
    v_ = beta2_ * v_ + (1.0 - beta2_) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const Vector update =
        (m_ / c1).array() / ((v_ / c2).array().sqrt() + eps_);
    net.set_flat(net.flat() - lr_ * update);
  }

  long steps() const { return t_; }
  double lr() const { return lr_; }

  friend void to_json(nlohmann::json& j, const Adam& a);
  friend void from_json(const nlohmann::json& j, Adam& a);

 private:
  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  Vector m_;
  Vector v_;
  long t_ = 0;
};

/// target <- tau * online + (1 - tau) * target.
inline void soft_update(Mlp& target, const Mlp& online, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("soft_update: tau must be in (0,1]");
  if (!target.same_shape(online)) throw std::invalid_argument("soft_update: shape mismatch");
  for (int l = 0; l < target.num_layers(); ++l) {
    target.weights()[l] = tau * online.weights()[l] + (1.0 - tau) * target.weights()[l];
    target.biases()[l] = tau * online.biases()[l] + (1.0 - tau) * target.biases()[l];
  }
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline void to_json(nlohmann::json& j, const Mlp& net) {
  std::vector<int> sizes{net.input_dim()};
  for (const auto& w : net.weights()) sizes.push_back(static_cast<int>(w.rows()));
  j = {{"sizes", sizes},
       {"output", net.output_activation() == OutputActivation::Tanh ? "tanh" : "linear"},
       {"params", to_std(net.flat())}};
}

inline void from_json(const nlohmann::json& j, Mlp& net) {
  const auto sizes = j.at("sizes").get<std::vector<int>>();
  if (sizes.size() < 2) throw std::invalid_argument("network needs at least two layer sizes");
  const auto act = j.at("output").get<std::string>() == "tanh" ? OutputActivation::Tanh
                                                               : OutputActivation::Linear;
  Engine dummy(0);
  net = Mlp(sizes.front(), std::vector<int>(sizes.begin() + 1, sizes.end() - 1), sizes.back(), act,
            dummy);
  net.set_flat(from_std(j.at("params").get<std::vector<double>>()));
}

inline void to_json(nlohmann::json& j, const Adam& a) {
  j = {{"lr", a.lr_},          {"beta1", a.beta1_}, {"beta2", a.beta2_}, {"eps", a.eps_},
       {"m", to_std(a.m_)},    {"v", to_std(a.v_)}, {"t", a.t_}};
}

inline void from_json(const nlohmann::json& j, Adam& a) {
  a.lr_ = j.at("lr").get<double>();
  a.beta1_ = j.at("beta1").get<double>();
  a.beta2_ = j.at("beta2").get<double>();
  a.eps_ = j.at("eps").get<double>();
  a.m_ = from_std(j.at("m").get<std::vector<double>>());
  a.v_ = from_std(j.at("v").get<std::vector<double>>());
  a.t_ = j.at("t").get<long>();
}

}  // namespace sagin::nn
