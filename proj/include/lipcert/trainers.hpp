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
#include <functional>
#include <vector>

#include "lipcert/batch.hpp"
#include "lipcert/bounds.hpp"
#include "lipcert/certificates.hpp"
#include "lipcert/loop_transform.hpp"
#include "lipcert/network.hpp"
#include "lipcert/sdp.hpp"

namespace lipcert {

struct SgdConfig {
  int epochs = 50;
  double lr = 1e-2;
  double momentum = 0.9;
  int batch_size = 64;
  LossKind loss = LossKind::kCrossEntropy;
  std::uint64_t seed = 0;
};

// Plain minibatch SGD with momentum; deterministic given the seed.
MlpNetwork train_nominal(const MlpNetwork& net0, const Batch& data,
                         const SgdConfig& cfg);

// As train_nominal with weight decay added to the weight gradients.
MlpNetwork train_l2(const MlpNetwork& net0, const Batch& data, const SgdConfig& cfg,
                    double weight_decay);

// Consensus terms of the augmented Lagrangian at the current weights:
//   tr(Y^T (f(N)Q - K)) + (rho/2) ||f(N)Q - K||_F^2
// with f the loop transform under `sector`. Returns the value; when grads is
// non-null, adds the exact chain-rule gradients through the transform's block
// algebra to grads (bias entries untouched; the consensus constrains only the
// linear map).
double consensus_value_grad(const MlpNetwork& net, const ActivationSector& sector,
                            const LmiVariables& vars, double rho, Gradients* grads);

// ||f(N)Q - K||_F for monitoring and the stopping rule.
double consensus_residual(const MlpNetwork& net, const ActivationSector& sector,
                          const LmiVariables& vars);

// Several epochs of minibatch descent on loss + consensus terms with the
// sector frozen. On a NaN the round restarts once from the entering weights
// at half the learning rate.
MlpNetwork n_update(const MlpNetwork& net, const Batch& data,
                    const ActivationSector& sector, const LmiVariables& vars,
                    double rho, const SgdConfig& cfg);

struct AdmmConfig {
  double eta = 1e-3;    // weight on Lsq in the certificate step
  double rho = 1.0;     // consensus penalty
  double sigma = 1e-3;  // stopping tolerance on the consensus residual
  int outer_iters = 20;
  SgdConfig sgd;  // per-round epochs (default 50) and learning rate
  double lr_decay = 1.0;  // per-round multiplier on the weight-update lr
  // Penalty schedule: rho multiplies by rho_growth each round, capped at
  // rho_max (0 = uncapped). Ramping tightens consensus late in the run.
  double rho_growth = 1.0;
  double rho_max = 0.0;
  // Bias-only fine-tune of the deployed network. Biases do not enter the
  // Lipschitz certificate, so this recovers accuracy at unchanged L.
  int bias_tune_epochs = 0;
  double bias_tune_lr = 0.0;  // 0 reuses sgd.lr
  // Projection budget for polishing the certificate to strict feasibility
  // before deployment (each iteration costs one dense eigendecomposition).
  int polish_iters = 2000;
  SectorMode sector_mode = SectorMode::kGlobal;
  InputBox box;  // used when sector_mode == kBoxed
  // Degenerate sector coordinates (beta == alpha) are widened upward by this
  // amount before transforming; widening a sector keeps every certificate
  // valid.
  double sector_widen = 1e-3;
  LmiStepOptions lmi;
  CertifyOptions certify;

  void validate() const;
};

struct AdmmTraceRow {
  int round = 0;
  double loss = 0.0;
  double residual = 0.0;
  double lsq = 0.0;
  double lmi_min_eig = 0.0;
  bool sdp_converged = false;
};

// Snapshot handed to an optional per-round observer (used by contract tests).
struct AdmmRoundState {
  int round;
  double rho;                   // penalty used for this round's dual update
  const MlpNetwork& net;        // after the weight update
  const LmiVariables& vars;     // after the certificate step, before dual update
  const Matrix& residual;       // f(N)Q - K used for the dual update
  const Matrix& y_before;
  const Matrix& y_after;
};

struct AdmmResult {
  MlpNetwork net;              // deployable network recovered from the LMI side
  LipCertificate certificate;  // freshly re-verified on the recovered network
  std::vector<AdmmTraceRow> trace;
  double final_residual = 0.0;
  bool consensus_met = false;
};

AdmmResult admm_lip_loop(const MlpNetwork& net0, const Batch& data,
                         const AdmmConfig& cfg,
                         const std::function<void(const AdmmRoundState&)>& observer = {});

// Fixed per-layer random subspaces. Layers whose input dimension is at most
// m keep an identity sketch (exact constraint).
struct SketchSet {
  std::vector<Matrix> g;  // g[k]: n_{k-1} x min(m, n_{k-1})
  int sketch_dim = 0;
  std::uint64_t seed = 0;
  bool orthonormalized = false;
};

// Gaussian draw followed by column orthonormalization, so G^T G = I and the
// sketched constraint G^T (tau I - W^T W) G >= 0 matches the penalty's
// comparison against tau I.
SketchSet draw_sketch(const std::vector<int>& layer_input_dims, int m,
                      std::uint64_t seed);

// Penalty P(W, tau) = ||[G^T W^T W G - tau I]_+||_F^2 with its exact
// gradients dW = 4 W G [S]_+ G^T and dtau = -2 tr([S]_+).
double rslmi_penalty(const Matrix& w, double tau, const Matrix& g, Matrix* dw,
                     double* dtau);

struct RslmiConfig {
  int sketch_dim = 64;
  int epochs = 100;
  double lr = 1e-2;
  double tau_lr = 1e-2;
  double momentum = 0.9;
  int batch_size = 64;
  LossKind loss = LossKind::kCrossEntropy;
  double tau_weight = 1.0;   // coefficient on sum(tau_k) in the objective
  double alpha0 = 1.0;       // initial penalty weight per layer
  double alpha_mult = 10.0;  // escalation when the exact check fails
  double alpha_cap = 1e6;
  double check_tol = 1e-6;
  int check_every = 10;  // epochs between exact per-layer checks
  // Tightening stops once prod_k sqrt(tau_k) reaches this bound (0 = keep
  // pushing); later epochs then fine-tune accuracy under a fixed constraint.
  double l_target = 0.0;
  // Frobenius cap per layer on the weighted penalty gradient (0 = off).
  // Inert near equilibrium; guards the jolt after a sketch redraw.
  double grad_clip = 0.0;
  double lr_decay = 1.0;  // per-epoch multiplier on the weight lr
  std::uint64_t seed = 0;
};

struct RslmiResult {
  MlpNetwork net;
  LipCertificate certificate;  // method rslmi, layer_tau = tau_hat
  Vector tau;                  // trained values before the soundness clamp
  Vector tau_hat;              // max(tau_k, sigma_max(W_k)^2)
  std::vector<double> alpha;
  bool exact_check_ok = false;
};

RslmiResult train_rslmi(const MlpNetwork& net0, const Batch& data,
                        const RslmiConfig& cfg);

struct SketchBenchRow {
  int n = 0;
  int m = 0;
  int trials = 0;
  double sketched_ms = 0.0;
  double exact_ms = 0.0;
  double mean_gap = 0.0;  // sigma_max^2 - lambda_max(G^T W^T W G), >= 0
};

// Wall-time and tightness comparison of the sketched penalty against the
// full-dimension eigendecomposition penalty on random square layers.
std::vector<SketchBenchRow> sketch_bench(const std::vector<int>& dims,
                                         const std::vector<int>& sketch_dims,
                                         int trials, std::uint64_t seed);

}  // namespace lipcert
