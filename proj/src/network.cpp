// Copyright 2026 The lipcert Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lipcert/network.hpp"

#include <cmath>
#include <stdexcept>

namespace lipcert {

void MlpNetwork::validate() const {
  if (layers.size() < 2) {
    throw DimensionError("network needs at least one hidden layer");
  }
  for (size_t k = 0; k < layers.size(); ++k) {
    const auto& L = layers[k];
    if (L.weight.size() == 0) {
      throw DimensionError("layer " + std::to_string(k) + ": empty weight");
    }
    if (L.bias.size() != L.weight.rows()) {
      throw DimensionError("layer " + std::to_string(k) + ": bias length " +
                           std::to_string(L.bias.size()) + " != rows " +
                           std::to_string(L.weight.rows()));
    }
    if (k > 0 && layers[k - 1].weight.rows() != L.weight.cols()) {
      throw DimensionError("layer " + std::to_string(k) + ": expects input " +
                           std::to_string(L.weight.cols()) + " but layer " +
                           std::to_string(k - 1) + " outputs " +
                           std::to_string(layers[k - 1].weight.rows()));
    }
    if (!L.weight.allFinite() || !L.bias.allFinite()) {
      throw DimensionError("layer " + std::to_string(k) + ": non-finite entries");
    }
  }
}

int MlpNetwork::phi_dim() const {
  int n = 0;
  for (size_t k = 0; k + 1 < layers.size(); ++k) {
    n += static_cast<int>(layers[k].weight.rows());
  }
  return n;
}

std::vector<int> MlpNetwork::dims() const {
  std::vector<int> d;
  d.push_back(input_dim());
  for (const auto& L : layers) d.push_back(static_cast<int>(L.weight.rows()));
  return d;
}

void Gradients::set_zero(const MlpNetwork& net) {
  d_weight.resize(net.layers.size());
  d_bias.resize(net.layers.size());
  for (size_t k = 0; k < net.layers.size(); ++k) {
    d_weight[k] = Matrix::Zero(net.layers[k].weight.rows(), net.layers[k].weight.cols());
    d_bias[k] = Vector::Zero(net.layers[k].bias.size());
  }
}

void Gradients::axpy(double a, const Gradients& other) {
  for (size_t k = 0; k < d_weight.size(); ++k) {
    d_weight[k] += a * other.d_weight[k];
    d_bias[k] += a * other.d_bias[k];
  }
}

double Gradients::squared_norm() const {
  double s = 0.0;
  for (size_t k = 0; k < d_weight.size(); ++k) {
    s += d_weight[k].squaredNorm() + d_bias[k].squaredNorm();
  }
  return s;
}

Vector forward(const MlpNetwork& net, const Vector& x) {
  if (x.size() != net.input_dim()) {
    throw DimensionError("forward: input length " + std::to_string(x.size()) +
                         " != layer 0 input " + std::to_string(net.input_dim()));
  }
  Vector h = x;
  const size_t l = net.layers.size() - 1;
  for (size_t k = 0; k < l; ++k) {
    h = net.activation.apply(net.layers[k].weight * h + net.layers[k].bias);
  }
  return net.layers[l].weight * h + net.layers[l].bias;
}

ForwardTrace forward_trace(const MlpNetwork& net, const Vector& x) {
  if (x.size() != net.input_dim()) {
    throw DimensionError("forward_trace: input length " + std::to_string(x.size()) +
                         " != layer 0 input " + std::to_string(net.input_dim()));
  }
  ForwardTrace t;
  t.v_phi.resize(net.phi_dim());
  t.x_phi.resize(net.phi_dim());
  Vector h = x;
  int off = 0;
  const size_t l = net.layers.size() - 1;
  for (size_t k = 0; k < l; ++k) {
    const Vector v = net.layers[k].weight * h + net.layers[k].bias;
    const Vector a = net.activation.apply(v);
    t.v_phi.segment(off, v.size()) = v;
    t.x_phi.segment(off, v.size()) = a;
    off += static_cast<int>(v.size());
    h = a;
  }
  t.y = net.layers[l].weight * h + net.layers[l].bias;
  return t;
}

BlockMap assemble_block_map(const MlpNetwork& net) {
  const int nx = net.input_dim();
  const int ny = net.output_dim();
  const int nphi = net.phi_dim();
  const size_t l = net.layers.size() - 1;

  BlockMap N;
  N.vx = Matrix::Zero(nphi, nx);
  N.vxphi = Matrix::Zero(nphi, nphi);
  N.psi_x = Matrix::Zero(ny, nx);
  N.psi_xphi = Matrix::Zero(ny, nphi);

  N.vx.topRows(net.layers[0].weight.rows()) = net.layers[0].weight;

  int row = static_cast<int>(net.layers[0].weight.rows());
  int col = 0;
  for (size_t k = 1; k < l; ++k) {
    const auto& W = net.layers[k].weight;
    N.vxphi.block(row, col, W.rows(), W.cols()) = W;
    row += static_cast<int>(W.rows());
    col += static_cast<int>(W.cols());
  }
  N.psi_xphi.rightCols(net.layers[l].weight.cols()) = net.layers[l].weight;
  return N;
}

Vector stack_hidden_biases(const MlpNetwork& net) {
  Vector b(net.phi_dim());
  int off = 0;
  for (size_t k = 0; k + 1 < net.layers.size(); ++k) {
    b.segment(off, net.layers[k].bias.size()) = net.layers[k].bias;
    off += static_cast<int>(net.layers[k].bias.size());
  }
  return b;
}

ActivationSector global_sector(const MlpNetwork& net) {
  const auto [a, b] = net.activation.global_sector();
  ActivationSector s;
  s.alpha = Vector::Constant(net.phi_dim(), a);
  s.beta = Vector::Constant(net.phi_dim(), b);
  return s;
}

namespace {

// Returns per-sample output gradients dL/dy (n_y x B) and the summed loss.
double loss_and_output_grad(const Matrix& y, const Matrix& targets,
                            LossKind loss, Matrix* dy) {
  const Eigen::Index ny = y.rows();
  const Eigen::Index B = y.cols();
  double total = 0.0;
  if (dy != nullptr) dy->resize(ny, B);

  if (loss == LossKind::kMse) {
    const double scale = 1.0 / (static_cast<double>(B) * static_cast<double>(ny));
    for (Eigen::Index j = 0; j < B; ++j) {
      const Vector r = y.col(j) - targets.col(j);
      total += scale * r.squaredNorm();
      if (dy != nullptr) dy->col(j) = 2.0 * scale * r;
    }
    return total;
  }

  // Cross-entropy over softmax, stabilized with log-sum-exp.
  const double scale = 1.0 / static_cast<double>(B);
  for (Eigen::Index j = 0; j < B; ++j) {
    const double m = y.col(j).maxCoeff();
    const Vector e = (y.col(j).array() - m).exp();
    const double Z = e.sum();
    const double lse = m + std::log(Z);
    const double sample = lse - y.col(j).dot(targets.col(j));
    if (!std::isfinite(sample)) {
      throw DataError("cross-entropy produced non-finite loss at sample " +
                      std::to_string(j));
    }
    total += scale * sample;
    if (dy != nullptr) dy->col(j) = scale * (e / Z - targets.col(j));
  }
  return total;
}

}  // namespace

double backprop(const MlpNetwork& net, const Batch& batch, LossKind loss,
                Gradients* grads) {
  if (batch.inputs.cols() == 0) throw DataError("backprop: empty batch");
  if (batch.inputs.rows() != net.input_dim() ||
      batch.targets.rows() != net.output_dim() ||
      batch.targets.cols() != batch.inputs.cols()) {
    throw DimensionError("backprop: batch shape mismatch");
  }

  const size_t l = net.layers.size() - 1;
  std::vector<Matrix> acts(l + 1);   // acts[k] feeds layer k
  std::vector<Matrix> pre(l);        // hidden pre-activations
  acts[0] = batch.inputs;
  for (size_t k = 0; k < l; ++k) {
    pre[k] = (net.layers[k].weight * acts[k]).colwise() + net.layers[k].bias;
    acts[k + 1].resize(pre[k].rows(), pre[k].cols());
    for (Eigen::Index j = 0; j < pre[k].cols(); ++j) {
      acts[k + 1].col(j) = net.activation.apply(pre[k].col(j));
    }
  }
  const Matrix y = (net.layers[l].weight * acts[l]).colwise() + net.layers[l].bias;

  Matrix delta;
  const double total = loss_and_output_grad(y, batch.targets, loss,
                                            grads != nullptr ? &delta : nullptr);
  if (grads == nullptr) return total;

  grads->set_zero(net);
  grads->d_weight[l] = delta * acts[l].transpose();
  grads->d_bias[l] = delta.rowwise().sum();
  for (size_t k = l; k-- > 0;) {
    Matrix back = net.layers[k + 1].weight.transpose() * delta;
    for (Eigen::Index j = 0; j < back.cols(); ++j) {
      back.col(j).array() *= net.activation.apply_deriv(pre[k].col(j)).array();
    }
    delta = std::move(back);
    grads->d_weight[k] = delta * acts[k].transpose();
    grads->d_bias[k] = delta.rowwise().sum();
  }
  return total;
}

Vector input_grad(const MlpNetwork& net, const Vector& x, const Vector& seed_grad) {
  const size_t l = net.layers.size() - 1;
  std::vector<Vector> pre(l);
  Vector h = x;
  for (size_t k = 0; k < l; ++k) {
    pre[k] = net.layers[k].weight * h + net.layers[k].bias;
    h = net.activation.apply(pre[k]);
  }
  Vector delta = net.layers[l].weight.transpose() * seed_grad;
  for (size_t k = l; k-- > 0;) {
    delta.array() *= net.activation.apply_deriv(pre[k]).array();
    delta = net.layers[k].weight.transpose() * delta;
  }
  return delta;
}

double loss_value(const MlpNetwork& net, const Batch& batch, LossKind loss) {
  return backprop(net, batch, loss, nullptr);
}

}  // namespace lipcert
