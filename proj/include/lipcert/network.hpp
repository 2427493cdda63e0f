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

#pragma once

#include <string>
#include <vector>

#include "lipcert/activation.hpp"
#include "lipcert/types.hpp"

namespace lipcert {

struct LayerParams {
  Matrix weight;
  Vector bias;
};

// Dense feed-forward network x^{k+1} = phi(W^k x^k + b^k), y = W^l x^l + b^l.
// The same activation applies to every hidden layer; the output layer is
// affine. `layers` holds l+1 entries, W^0..W^l.
struct MlpNetwork {
  std::vector<LayerParams> layers;
  Activation activation;

  // Throws DimensionError naming the offending layer if the dimension chain
  // is broken, a bias length disagrees with its weight, any entry is
  // non-finite, or there is no hidden layer.
  void validate() const;

  int input_dim() const { return static_cast<int>(layers.front().weight.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().weight.rows()); }
  // Number of hidden layers l.
  int hidden_count() const { return static_cast<int>(layers.size()) - 1; }
  // n_phi = sum of hidden widths.
  int phi_dim() const;
  // Widths n_0..n_{l+1}.
  std::vector<int> dims() const;
};

// Stacked pre-activations and activations across all hidden layers (layer 0
// first), plus the network output.
struct ForwardTrace {
  Vector v_phi;
  Vector x_phi;
  Vector y;
};

// The linear operator N with [v_phi; y] = N [x; x_phi] + [b_phi; b_out].
// For a plain MLP: vx carries W^0 in its top block, vxphi is strictly
// block-subdiagonal with W^1..W^{l-1}, psi_x is zero and psi_xphi carries
// W^l in its rightmost block.
struct BlockMap {
  Matrix vx;        // n_phi x n_x
  Matrix vxphi;     // n_phi x n_phi
  Matrix psi_x;     // n_y x n_x
  Matrix psi_xphi;  // n_y x n_phi

  int nx() const { return static_cast<int>(vx.cols()); }
  int nphi() const { return static_cast<int>(vx.rows()); }
  int ny() const { return static_cast<int>(psi_x.rows()); }
};

// Elementwise slope bounds alpha_i <= beta_i for the stacked hidden
// coordinates.
struct ActivationSector {
  Vector alpha;
  Vector beta;
};

enum class LossKind { kCrossEntropy, kMse };

struct Batch {
  Matrix inputs;   // n_x x B, one sample per column
  Matrix targets;  // n_y x B (one-hot for cross-entropy)
};

struct Gradients {
  std::vector<Matrix> d_weight;
  std::vector<Vector> d_bias;

  void set_zero(const MlpNetwork& net);
  void axpy(double a, const Gradients& other);
  double squared_norm() const;
};

Vector forward(const MlpNetwork& net, const Vector& x);
ForwardTrace forward_trace(const MlpNetwork& net, const Vector& x);
BlockMap assemble_block_map(const MlpNetwork& net);

// Stacked hidden biases b_phi (length n_phi) and the output bias.
Vector stack_hidden_biases(const MlpNetwork& net);

// Sector from the activation's global slope bounds, replicated across n_phi.
ActivationSector global_sector(const MlpNetwork& net);

// Mean batch loss and its exact gradient with respect to every layer.
// Cross-entropy applies a log-sum-exp stabilized softmax to the output;
// mse is mean over both batch and output coordinates.
double backprop(const MlpNetwork& net, const Batch& batch, LossKind loss,
                Gradients* grads);

// Gradient of loss(x) with respect to the input of a single sample; used for
// empirical Lipschitz probing. `seed_grad` is d(loss)/d(y).
Vector input_grad(const MlpNetwork& net, const Vector& x, const Vector& seed_grad);

double loss_value(const MlpNetwork& net, const Batch& batch, LossKind loss);

}  // namespace lipcert
