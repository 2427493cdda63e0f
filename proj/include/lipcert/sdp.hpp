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

#include <functional>

#include "lipcert/loop_transform.hpp"
#include "lipcert/types.hpp"

namespace lipcert {

// Dense symmetric matrix; symmetry enforced on construction.
struct SymmetricMatrix {
  Matrix m;

  SymmetricMatrix() = default;
  explicit SymmetricMatrix(const Matrix& a) : m(0.5 * (a + a.transpose())) {}
  Eigen::Index dim() const { return m.rows(); }
};

struct EigResult {
  Vector values;   // ascending
  Matrix vectors;  // orthonormal columns
};

// Full symmetric eigendecomposition (LAPACK divide-and-conquer when built
// in, Eigen otherwise).
EigResult sym_eig(const SymmetricMatrix& s);

double min_eigenvalue(const SymmetricMatrix& s);
double max_eigenvalue(const SymmetricMatrix& s);

// [S]_+ : zero out negative eigenvalues.
SymmetricMatrix psd_project(const SymmetricMatrix& s);

// Largest eigenvalue of a symmetric operator given only as a matvec, via
// Lanczos with full reorthogonalization. `v` is both warm start and output
// Ritz vector (pass an empty vector for a deterministic default start).
double top_eigenvalue(const std::function<Vector(const Vector&)>& matvec, int dim,
                      Vector* v, int max_iter = 120, double tol = 1e-9);

struct SolverReport {
  int iterations = 0;
  double objective = 0.0;
  double min_eig = 0.0;
  double primal_change = 0.0;
  bool converged = false;
};

struct LmiStepOptions {
  double feas_tol = 1e-6;
  int max_iter = 60;   // prox-gradient iterations per call
  double q_min = 1e-6;
  int dykstra_iters = 25;  // projection refinements per prox iteration
  double lsq_floor = 0.0;  // lower clamp on the squared-gain variable
};

// One ADMM block update in the certificate variables: minimizes
//   eta*Lsq + tr(Y^T (F Q - K)) + (rho/2) ||F Q - K||_F^2
// over (Lsq, Q1, K) subject to build_lmi(...) >= 0, where F is the current
// transformed network map stacked as [F1 F2; F3 F4]. Proximal gradient with
// Dykstra-corrected alternating projection onto the PSD cone intersected
// with the variable embedding.
LmiVariables solve_lmi_step(const Matrix& f_stacked, const LmiVariables& init,
                            double eta, double rho, const LmiStepOptions& opt,
                            SolverReport* report);

// Monotone bisection for the smallest feasible value: `feasible` must be
// false below the threshold and true above; `hi` must be feasible. Returns
// the upper endpoint of the final bracket.
double bisect_feasibility(const std::function<bool(double)>& feasible, double lo,
                          double hi, double rel_tol);

// Dykstra projection of the variables onto the PSD-feasible embedded set,
// used to polish a near-feasible iterate before deployment: the congruence
// back to original coordinates amplifies PSD violations, so a deployed
// certificate needs much less slack than the per-round projection budget
// leaves. Returns lambda_min of the final embedded LMI.
double project_certificate(LmiVariables* v, double q_min, double lsq_floor,
                           int iters, double feas_tol);

}  // namespace lipcert
