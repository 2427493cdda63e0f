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

#include "lipcert/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#ifdef LIPCERT_HAVE_LAPACKE
#include <lapacke.h>
#endif

#include <Eigen/Eigenvalues>

namespace lipcert {

EigResult sym_eig(const SymmetricMatrix& s) {
  if (!s.m.allFinite()) throw DataError("sym_eig: non-finite entries");
  const int n = static_cast<int>(s.dim());
  EigResult r;
#ifdef LIPCERT_HAVE_LAPACKE
  r.vectors = s.m;
  r.values.resize(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                         r.vectors.data(), n, r.values.data());
  if (info != 0) {
    throw SolverError("sym_eig: dsyevd failed to converge (info=" +
                      std::to_string(info) + ")");
  }
#else
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.m);
  if (es.info() != Eigen::Success) {
    throw SolverError("sym_eig: eigensolver failed (info=" +
                      std::to_string(static_cast<int>(es.info())) + ")");
  }
  r.values = es.eigenvalues();
  r.vectors = es.eigenvectors();
#endif
  return r;
}

double min_eigenvalue(const SymmetricMatrix& s) { return sym_eig(s).values[0]; }

double max_eigenvalue(const SymmetricMatrix& s) {
  const EigResult r = sym_eig(s);
  return r.values[r.values.size() - 1];
}

SymmetricMatrix psd_project(const SymmetricMatrix& s) {
  const EigResult r = sym_eig(s);
  const int n = static_cast<int>(s.dim());
  // Reconstruct from the positive part only.
  int first_pos = n;
  for (int i = 0; i < n; ++i) {
    if (r.values[i] > 0.0) {
      first_pos = i;
      break;
    }
  }
  SymmetricMatrix out;
  if (first_pos == n) {
    out.m = Matrix::Zero(n, n);
    return out;
  }
  const int npos = n - first_pos;
  const Matrix vp = r.vectors.rightCols(npos);
  const Vector lp = r.values.tail(npos);
  out.m = vp * lp.asDiagonal() * vp.transpose();
  out.m = 0.5 * (out.m + out.m.transpose()).eval();
  return out;
}

double top_eigenvalue(const std::function<Vector(const Vector&)>& matvec, int dim,
                      Vector* v, int max_iter, double tol) {
  Vector q;
  if (v != nullptr && v->size() == dim && v->norm() > 0 && v->allFinite()) {
    q = *v / v->norm();
  } else {
    std::mt19937_64 rng(0x5eedULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    q.resize(dim);
    for (int i = 0; i < dim; ++i) q[i] = gauss(rng);
    q /= q.norm();
  }

  const int m = std::min(max_iter, dim);
  Matrix basis(dim, m);
  Vector a(m), b(m);
  double theta = 0.0;
  Vector ritz = q;
  int steps = 0;

  for (int j = 0; j < m; ++j) {
    basis.col(j) = q;
    Vector w = matvec(q);
    a[j] = q.dot(w);
    w -= a[j] * q;
    if (j > 0) w -= b[j - 1] * basis.col(j - 1);
    // Full reorthogonalization, twice for stability.
    for (int pass = 0; pass < 2; ++pass) {
      w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
    }
    b[j] = w.norm();
    steps = j + 1;

    Matrix tri = Matrix::Zero(steps, steps);
    for (int i = 0; i < steps; ++i) {
      tri(i, i) = a[i];
      if (i + 1 < steps) {
        tri(i, i + 1) = b[i];
        tri(i + 1, i) = b[i];
      }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(tri);
    theta = es.eigenvalues()[steps - 1];
    const Vector s = es.eigenvectors().col(steps - 1);
    ritz = basis.leftCols(steps) * s;
    const double resid = std::abs(b[j] * s[steps - 1]);
    if (resid <= tol * std::max(1.0, std::abs(theta)) || b[j] < 1e-13) break;
    q = w / b[j];
  }

  if (v != nullptr) *v = ritz;
  return theta;
}

double bisect_feasibility(const std::function<bool(double)>& feasible, double lo,
                          double hi, double rel_tol) {
  if (lo > hi) throw DataError("bisect_feasibility: lo > hi");
  if (feasible(lo)) return lo;
  if (!feasible(hi)) {
    throw SolverError(
        "bisect_feasibility: upper endpoint infeasible; widen the initial "
        "bracket");
  }
  while (hi - lo > rel_tol * std::max(hi, 1e-300)) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

namespace {

struct LmiView {
  int nx, nphi, ny;
};

// Least-squares projection of a symmetric matrix onto the embedded-variable
// set: each variable averages the entries it occupies, then box clamps and
// the K2 block pattern are applied.
void project_vars(const Matrix& m, const LmiView& d, double q_min,
                  double lsq_floor, LmiVariables* v) {
  const int nx = d.nx, nphi = d.nphi, ny = d.ny;
  double lsq = 0.0;
  for (int i = 0; i < nx; ++i) lsq += m(i, i);
  // Raising lsq only adds to the diagonal, so the floor never breaks
  // feasibility.
  v->lsq = std::max(lsq_floor, std::max(0.0, lsq / nx));

  for (int i = 0; i < nphi; ++i) {
    v->q1[i] = std::max(q_min, 0.5 * (m(nx + i, nx + i) +
                                      m(nx + nphi + i, nx + nphi + i)));
  }
  // m is symmetric, so the lower blocks hold the same data as their mirrors.
  v->k1 = m.block(nx + nphi, 0, nphi, nx);
  v->k2 = m.block(nx + nphi, nx, nphi, nphi);
  v->k3 = m.block(nx + 2 * nphi, 0, ny, nx);
  v->k4 = m.block(nx + 2 * nphi, nx, ny, nphi);
  if (!v->hidden_dims.empty()) mask_strictly_lower_blocks(v->hidden_dims, &v->k2);
}

struct Objective {
  const Matrix& f;  // stacked (nphi+ny) x (nx+nphi)
  const Matrix& y;
  double eta, rho;
  LmiView d;

  Matrix residual(const LmiVariables& v) const {
    Matrix r(d.nphi + d.ny, d.nx + d.nphi);
    r.topLeftCorner(d.nphi, d.nx) = f.topLeftCorner(d.nphi, d.nx) - v.k1;
    r.topRightCorner(d.nphi, d.nphi) =
        f.topRightCorner(d.nphi, d.nphi) * v.q1.asDiagonal() - v.k2;
    r.bottomLeftCorner(d.ny, d.nx) = f.bottomLeftCorner(d.ny, d.nx) - v.k3;
    r.bottomRightCorner(d.ny, d.nphi) =
        f.bottomRightCorner(d.ny, d.nphi) * v.q1.asDiagonal() - v.k4;
    return r;
  }

  double value(const LmiVariables& v) const {
    const Matrix r = residual(v);
    return eta * v.lsq + (y.array() * r.array()).sum() + 0.5 * rho * r.squaredNorm();
  }

  // Gradient with respect to (lsq, q1, k1..k4).
  void gradient(const LmiVariables& v, double* g_lsq, Vector* g_q,
                Matrix* g_k1, Matrix* g_k2, Matrix* g_k3, Matrix* g_k4) const {
    const Matrix r = residual(v);
    const Matrix z = y + rho * r;
    *g_lsq = eta;
    *g_k1 = -z.topLeftCorner(d.nphi, d.nx);
    *g_k2 = -z.topRightCorner(d.nphi, d.nphi);
    *g_k3 = -z.bottomLeftCorner(d.ny, d.nx);
    *g_k4 = -z.bottomRightCorner(d.ny, d.nphi);
    g_q->resize(d.nphi);
    const Matrix f2 = f.topRightCorner(d.nphi, d.nphi);
    const Matrix f4 = f.bottomRightCorner(d.ny, d.nphi);
    const Matrix z2 = z.topRightCorner(d.nphi, d.nphi);
    const Matrix z4 = z.bottomRightCorner(d.ny, d.nphi);
    for (int i = 0; i < d.nphi; ++i) {
      (*g_q)[i] = z2.col(i).dot(f2.col(i)) + z4.col(i).dot(f4.col(i));
    }
  }
};

// Dykstra-corrected alternating projection between the PSD cone and the
// embedded-variable set, starting from the embedding of *v. Returns lambda_min
// of the final embedded matrix, always from a dense factorization.
//
// Dense eigendecompositions dominate the cost, so the per-iteration
// feasibility test first tries to prove "still infeasible" with a short
// Lanczos run on -X (its estimate lower-bounds -lambda_min, which is sound
// for skipping); the dense check runs only when that screen passes.
double restore_feasibility(const LmiView& d, double q_min, double feas_tol,
                           double lsq_floor, int iters, LmiVariables* v) {
  Matrix x = build_lmi(*v);
  double mineig = min_eigenvalue(SymmetricMatrix(x));
  if (mineig >= -feas_tol) return mineig;

  Matrix p = Matrix::Zero(x.rows(), x.cols());
  Matrix qc = Matrix::Zero(x.rows(), x.cols());
  Vector warm;
  bool mineig_fresh = false;
  for (int it = 0; it < iters; ++it) {
    const SymmetricMatrix y1 = psd_project(SymmetricMatrix(x + p));
    p = x + p - y1.m;
    project_vars(0.5 * ((y1.m + qc) + (y1.m + qc).transpose()), d, q_min,
                 lsq_floor, v);
    const Matrix x2 = build_lmi(*v);
    qc = y1.m + qc - x2;
    x = x2;
    mineig_fresh = false;

    const auto neg_matvec = [&x](const Vector& u) { return Vector(-(x * u)); };
    const double neg_top =
        top_eigenvalue(neg_matvec, static_cast<int>(x.rows()), &warm, 25, 1e-8);
    if (neg_top > feas_tol) continue;  // certainly lambda_min < -feas_tol

    mineig = min_eigenvalue(SymmetricMatrix(x));
    mineig_fresh = true;
    if (mineig >= -feas_tol) break;
  }
  if (!mineig_fresh) mineig = min_eigenvalue(SymmetricMatrix(x));
  return mineig;
}

}  // namespace

double project_certificate(LmiVariables* v, double q_min, double lsq_floor,
                           int iters, double feas_tol) {
  const LmiView d{v->nx(), v->nphi(), v->ny()};
  return restore_feasibility(d, q_min, feas_tol, lsq_floor, iters, v);
}

LmiVariables solve_lmi_step(const Matrix& f_stacked, const LmiVariables& init,
                            double eta, double rho, const LmiStepOptions& opt,
                            SolverReport* report) {
  if (rho <= 0.0) throw DataError("solve_lmi_step: rho must be positive");
  LmiVariables v = init;
  const LmiView d{init.nx(), init.nphi(), init.ny()};
  if (f_stacked.rows() != d.nphi + d.ny || f_stacked.cols() != d.nx + d.nphi) {
    throw DimensionError("solve_lmi_step: f shape mismatch");
  }
  const Objective obj{f_stacked, init.y, eta, rho, d};

  // 1/L step from the curvature of the quadratic consensus term; with it the
  // projected step decreases the objective, so the safeguard below fires
  // rarely (only when the truncated Dykstra projection is too approximate).
  double max_col = 1.0;
  for (int i = 0; i < d.nphi; ++i) {
    max_col = std::max(max_col, f_stacked.col(d.nx + i).squaredNorm());
  }
  const double step0 = 1.0 / (rho * (2.0 + 2.0 * max_col));
  double step = step0;

  double mineig = restore_feasibility(d, opt.q_min, opt.feas_tol, opt.lsq_floor,
                                      opt.dykstra_iters, &v);
  double best_obj = obj.value(v);

  int it = 0;
  double primal_change = 0.0;
  bool converged = mineig >= -opt.feas_tol;
  for (; it < opt.max_iter; ++it) {
    double g_lsq;
    Vector g_q;
    Matrix g_k1, g_k2, g_k3, g_k4;
    obj.gradient(v, &g_lsq, &g_q, &g_k1, &g_k2, &g_k3, &g_k4);

    bool accepted = false;
    LmiVariables cand = v;
    double cand_eig = mineig;
    for (int bt = 0; bt < 8; ++bt) {
      cand = v;
      // The Lsq term is linear (no curvature), so its descent uses a relative
      // step: eta ~ 1 attempts a ~10% reduction per iteration and the cone
      // projection pushes back whatever is infeasible.
      const double step_lsq = 0.1 * (1.0 + v.lsq) * (step / step0);
      cand.lsq = std::max(opt.lsq_floor, std::max(0.0, v.lsq - step_lsq * g_lsq));
      cand.q1 = (v.q1 - step * g_q).cwiseMax(opt.q_min);
      cand.k1 = v.k1 - step * g_k1;
      cand.k2 = v.k2 - step * g_k2;
      cand.k3 = v.k3 - step * g_k3;
      cand.k4 = v.k4 - step * g_k4;
      if (!cand.hidden_dims.empty()) {
        mask_strictly_lower_blocks(cand.hidden_dims, &cand.k2);
      }
      cand_eig = restore_feasibility(d, opt.q_min, opt.feas_tol, opt.lsq_floor,
                                     opt.dykstra_iters, &cand);
      const double cand_obj = obj.value(cand);
      if (cand_obj <= best_obj + 1e-12 * std::max(1.0, std::abs(best_obj))) {
        accepted = true;
        best_obj = cand_obj;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    primal_change = std::sqrt(
        (cand.k1 - v.k1).squaredNorm() + (cand.k2 - v.k2).squaredNorm() +
        (cand.k3 - v.k3).squaredNorm() + (cand.k4 - v.k4).squaredNorm() +
        (cand.q1 - v.q1).squaredNorm() +
        (cand.lsq - v.lsq) * (cand.lsq - v.lsq));
    v = cand;
    mineig = cand_eig;
    converged = mineig >= -opt.feas_tol;
    if (primal_change < 1e-9 * std::max(1.0, std::sqrt(v.q1.squaredNorm()))) break;
    step = std::min(step * 1.5, step0);
  }

  if (report != nullptr) {
    report->iterations = it;
    report->objective = best_obj;
    report->min_eig = mineig;
    report->primal_change = primal_change;
    report->converged = converged;
  }
  return v;
}

}  // namespace lipcert
