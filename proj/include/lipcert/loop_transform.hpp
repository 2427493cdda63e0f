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

#include <vector>

#include "lipcert/bounds.hpp"
#include "lipcert/network.hpp"
#include "lipcert/types.hpp"

namespace lipcert {

// Reparameterized network whose nonlinearity lies in sector [-1, 1]:
//   v = Nt_vx x + Nt_vxphi g(v_orig...) ... evaluated via eval_transformed.
// Constructed from a BlockMap and a sector with beta > alpha elementwise.
struct LoopTransformedMap {
  BlockMap nt;
  Vector bt_phi;
  Vector bt_out;
  ActivationSector sector_used;
};

// Normalized activation g(v) = D^{-1} (phi(v) - S v) with D = diag((b-a)/2),
// S = diag((a+b)/2); its secant slopes lie in [-1, 1]. Throws DataError on
// any coordinate with beta == alpha (affine; caller must fold or widen it).
Vector normalize_activation(const Activation& act, const ActivationSector& sector,
                            const Vector& v);

LoopTransformedMap loop_transform(const BlockMap& n, const Vector& b_phi,
                                  const Vector& b_out, const ActivationSector& sector);

// Evaluates the transformed representation with the normalized nonlinearity;
// must reproduce the original network output exactly.
Vector eval_transformed(const LoopTransformedMap& m, const Activation& act,
                        const Vector& x);

// Inverse of loop_transform: recovers the original-coordinates map and
// biases. Requires the recorded sector.
void inverse_transform(const LoopTransformedMap& m, BlockMap* n, Vector* b_phi,
                       Vector* b_out);

// Decision variables of the convex certificate
//   [ Lsq*I  0    K1^T  K3^T ]
//   [ 0      Q1   K2^T  K4^T ]
//   [ K1     K2   Q1    0    ]  >= 0
//   [ K3     K4   0     I    ]
// together with the scaled dual matrix for the consensus constraint.
// hidden_dims records the per-layer widths so K2's strictly-lower block
// structure can be enforced and the trained map unstacked.
struct LmiVariables {
  double lsq = 0.0;
  Vector q1;
  Matrix k1, k2, k3, k4;
  Matrix y;  // (n_phi+n_y) x (n_x+n_phi), dual of f(N)Q = K
  std::vector<int> hidden_dims;

  int nx() const { return static_cast<int>(k1.cols()); }
  int nphi() const { return static_cast<int>(q1.size()); }
  int ny() const { return static_cast<int>(k3.rows()); }
  int lmi_dim() const { return nx() + 2 * nphi() + ny(); }
};

Matrix build_lmi(const LmiVariables& v);

// T = Q1^{-1}; Nt = K Q^{-1} block by block. Throws on nonpositive Q1.
void recover(const LmiVariables& v, Vector* t_lambda, BlockMap* nt);

// Zeroes every entry of m outside the strictly-lower block-triangular
// pattern induced by the hidden layer widths.
void mask_strictly_lower_blocks(const std::vector<int>& hidden_dims, Matrix* m);

// Reads W^0..W^l out of a block map with MLP structure. Off-structure mass
// (entries outside the expected blocks) is reported via *off_structure if
// non-null; it is discarded from the returned network.
MlpNetwork extract_network(const BlockMap& n, const Vector& b_phi, const Vector& b_out,
                           const std::vector<int>& hidden_dims, const Activation& act,
                           double* off_structure = nullptr);

}  // namespace lipcert
