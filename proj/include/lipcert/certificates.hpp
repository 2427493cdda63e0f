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

#include <cstdint>
#include <optional>
#include <string>

#include "lipcert/bounds.hpp"
#include "lipcert/network.hpp"
#include "lipcert/types.hpp"

namespace lipcert {

// Diagonal multiplier weighting the per-coordinate slope constraints.
struct TMultiplier {
  Vector lambda;  // >= 0 elementwise
};

enum class CertMethod { kLipsdp, kLayerwiseProduct, kSpectralProduct, kRslmi };

std::string cert_method_name(CertMethod m);

struct LipCertificate {
  double bound = 0.0;
  CertMethod method = CertMethod::kLipsdp;
  SectorMode mode = SectorMode::kGlobal;
  std::optional<InputBox> box;       // present when mode == kBoxed
  std::optional<TMultiplier> witness;
  std::optional<Vector> layer_tau;   // layerwise / sketched-training methods
  // lambda_max of the certified quadratic form at (bound, witness); must be
  // <= verification tolerance for the certificate to be valid.
  double max_eig_residual = 0.0;
};

// The quadratic-form matrix (dimension n_x + n_phi) whose negative
// semidefiniteness certifies |Psi(u)-Psi(w)| <= L|u-w| on the sector:
//   [Nvx Nvxphi; 0 I]^T [-2 diag(a.*b)T  diag(a+b)T; diag(a+b)T  -2T] [..]
//   + [Npsix Npsixphi]^T [Npsix Npsixphi] - diag(Lsq*I, 0)
Matrix lipsdp_matrix(const BlockMap& n, const ActivationSector& sector,
                     const TMultiplier& t, double lsq);

struct CertifyOptions {
  double bisect_rel_tol = 1e-3;   // on L
  int multiplier_iters = 500;     // projected subgradient budget per probe
  double margin_tol = 1e-9;       // stop when improvement stalls
  double verify_tol = 1e-6;       // residual allowed on the final witness
  // Initial multiplier for the search; defaults to the downstream seed.
  std::optional<TMultiplier> seed;
};

// Smallest certifiable L: outer bisection on L^2 (feasibility monotone),
// inner projected-subgradient search over the diagonal multiplier,
// warm-started across bisection probes. Result carries the witness and its
// independently evaluated residual.
LipCertificate certify_lipsdp(const MlpNetwork& net, const ActivationSector& sector,
                              const CertifyOptions& opt = {});

// sigma_max via power iteration (deterministic start, tol 1e-10), dense SVD
// on stagnation.
double spectral_norm(const Matrix& w);

// L = prod_k sigma_max(W^k).
LipCertificate spectral_product_bound(const MlpNetwork& net);

// Minimal tau with tau*I - W^T W >= 0, i.e. sigma_max(W)^2.
double layer_sdp_tau(const Matrix& w);

// L = prod_k sqrt(tau_k) with tau_k from layer_sdp_tau.
LipCertificate layerwise_product_bound(const MlpNetwork& net);

struct LowerBoundSampler {
  enum class Kind { kBox, kGaussian };
  Kind kind = Kind::kGaussian;
  InputBox box;        // used for kBox
  int n_pairs = 2000;
  std::uint64_t seed = 0;
  int ascent_steps = 30;
  double ascent_lr = 0.05;
};

// max ||Psi(u)-Psi(w)|| / ||u-w|| over sampled pairs refined by gradient
// ascent on the ratio; a lower bound on the true constant.
double empirical_lip_lower_bound(const MlpNetwork& net, const LowerBoundSampler& cfg);

// Analytic multiplier: each hidden coordinate weighted by the squared
// spectral mass of everything downstream. Feasible for the certificate at
// the spectral-product bound; used to seed searches and warm-start training.
Vector downstream_multiplier_seed(const MlpNetwork& net, const ActivationSector& sector);

}  // namespace lipcert
