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

#include "lipcert/loop_transform.hpp"

#include <Eigen/LU>

#include <cmath>
#include <string>

namespace lipcert {

namespace {

void check_sector(const ActivationSector& s) {
  for (Eigen::Index i = 0; i < s.alpha.size(); ++i) {
    if (!(s.beta[i] > s.alpha[i])) {
      throw DataError("sector coordinate " + std::to_string(i) +
                      " has beta == alpha; fold or widen it before transforming");
    }
  }
}

}  // namespace

Vector normalize_activation(const Activation& act, const ActivationSector& sector,
                            const Vector& v) {
  if (v.size() != sector.alpha.size()) {
    throw DimensionError("normalize_activation: length mismatch");
  }
  check_sector(sector);
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double d = 0.5 * (sector.beta[i] - sector.alpha[i]);
    const double s = 0.5 * (sector.beta[i] + sector.alpha[i]);
    out[i] = (act.value(v[i]) - s * v[i]) / d;
  }
  return out;
}

LoopTransformedMap loop_transform(const BlockMap& n, const Vector& b_phi,
                                  const Vector& b_out, const ActivationSector& sector) {
  const int nphi = n.nphi();
  if (sector.alpha.size() != nphi || b_phi.size() != nphi ||
      b_out.size() != n.ny()) {
    throw DimensionError("loop_transform: dimension mismatch");
  }
  check_sector(sector);

  const Vector d = 0.5 * (sector.beta - sector.alpha);
  const Vector s = 0.5 * (sector.beta + sector.alpha);

  const Matrix c1 = n.vxphi * d.asDiagonal();
  const Matrix c2 = n.vxphi * s.asDiagonal();
  const Matrix c3 = n.psi_xphi * d.asDiagonal();
  const Matrix c4 = n.psi_xphi * s.asDiagonal();

  Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(nphi, nphi) - c2);
  // For feed-forward stacking N_vxphi is strictly lower block triangular, so
  // I - C2 is unit lower triangular and always invertible; guard anyway.
  const double rcond_probe = lu.determinant();
  if (!std::isfinite(rcond_probe) || rcond_probe == 0.0) {
    throw SolverError("loop_transform: I - C2 is singular");
  }

  LoopTransformedMap m;
  m.nt.vx = lu.solve(n.vx);
  m.nt.vxphi = lu.solve(c1);
  m.bt_phi = lu.solve(b_phi);
  m.nt.psi_x = n.psi_x + c4 * m.nt.vx;
  m.nt.psi_xphi = c3 + c4 * m.nt.vxphi;
  m.bt_out = c4 * m.bt_phi + b_out;
  m.sector_used = sector;
  return m;
}

Vector eval_transformed(const LoopTransformedMap& m, const Activation& act,
                        const Vector& x) {
  const int nphi = m.nt.nphi();
  // v = Nt_vx x + Nt_vxphi g(v) + bt_phi is lower triangular in the stacked
  // coordinates, so a forward sweep with full recomputation converges in
  // n_phi passes at most; for block-structured maps a handful suffice. We
  // iterate to a fixed point, which also covers dense transformed maps.
  Vector v = m.nt.vx * x + m.bt_phi;
  for (int pass = 0; pass < nphi + 1; ++pass) {
    const Vector g = normalize_activation(act, m.sector_used, v);
    Vector v_next = m.nt.vx * x + m.nt.vxphi * g + m.bt_phi;
    const double change = (v_next - v).lpNorm<Eigen::Infinity>();
    v = std::move(v_next);
    if (change == 0.0) break;
  }
  const Vector g = normalize_activation(act, m.sector_used, v);
  return m.nt.psi_x * x + m.nt.psi_xphi * g + m.bt_out;
}

void inverse_transform(const LoopTransformedMap& m, BlockMap* n, Vector* b_phi,
                       Vector* b_out) {
  const int nphi = m.nt.nphi();
  const Vector d = 0.5 * (m.sector_used.beta - m.sector_used.alpha);
  const Vector s = 0.5 * (m.sector_used.beta + m.sector_used.alpha);
  check_sector(m.sector_used);

  // Nt_vxphi = (I - Nvxphi S)^{-1} Nvxphi D  =>  Nvxphi = Bt (D + S Bt)^{-1}.
  Matrix dsb = m.nt.vxphi;
  dsb = s.asDiagonal() * dsb;
  dsb += Matrix(d.asDiagonal());
  Eigen::PartialPivLU<Matrix> lu(dsb);
  if (!std::isfinite(lu.determinant()) || lu.determinant() == 0.0) {
    throw SolverError("inverse_transform: D + S*Nt_vxphi is singular");
  }
  const Matrix inv_dsb = lu.inverse();

  n->vxphi = m.nt.vxphi * inv_dsb;
  n->psi_xphi = m.nt.psi_xphi * inv_dsb;
  const Matrix i_minus_c2 =
      Matrix::Identity(nphi, nphi) - n->vxphi * s.asDiagonal();
  n->vx = i_minus_c2 * m.nt.vx;
  n->psi_x = m.nt.psi_x - n->psi_xphi * s.asDiagonal() * m.nt.vx;
  *b_phi = i_minus_c2 * m.bt_phi;
  *b_out = m.bt_out - n->psi_xphi * s.asDiagonal() * m.bt_phi;
}

Matrix build_lmi(const LmiVariables& v) {
  const int nx = v.nx();
  const int nphi = v.nphi();
  const int ny = v.ny();
  const int d = nx + 2 * nphi + ny;
  Matrix m = Matrix::Zero(d, d);

  m.topLeftCorner(nx, nx) = v.lsq * Matrix::Identity(nx, nx);
  m.block(nx, nx, nphi, nphi) = Matrix(v.q1.asDiagonal());
  m.block(nx + nphi, nx + nphi, nphi, nphi) = Matrix(v.q1.asDiagonal());
  m.bottomRightCorner(ny, ny) = Matrix::Identity(ny, ny);

  m.block(nx + nphi, 0, nphi, nx) = v.k1;
  m.block(0, nx + nphi, nx, nphi) = v.k1.transpose();
  m.block(nx + nphi, nx, nphi, nphi) = v.k2;
  m.block(nx, nx + nphi, nphi, nphi) = v.k2.transpose();
  m.block(nx + 2 * nphi, 0, ny, nx) = v.k3;
  m.block(0, nx + 2 * nphi, nx, ny) = v.k3.transpose();
  m.block(nx + 2 * nphi, nx, ny, nphi) = v.k4;
  m.block(nx, nx + 2 * nphi, nphi, ny) = v.k4.transpose();
  return m;
}

void recover(const LmiVariables& v, Vector* t_lambda, BlockMap* nt) {
  for (Eigen::Index i = 0; i < v.q1.size(); ++i) {
    if (!(v.q1[i] > 0.0)) {
      throw DataError("recover: Q1 entry " + std::to_string(i) + " is not positive");
    }
  }
  if (t_lambda != nullptr) *t_lambda = v.q1.cwiseInverse();
  if (nt != nullptr) {
    const Vector qinv = v.q1.cwiseInverse();
    nt->vx = v.k1;
    nt->vxphi = v.k2 * qinv.asDiagonal();
    nt->psi_x = v.k3;
    nt->psi_xphi = v.k4 * qinv.asDiagonal();
  }
}

void mask_strictly_lower_blocks(const std::vector<int>& hidden_dims, Matrix* m) {
  int row = 0;
  for (size_t bi = 0; bi < hidden_dims.size(); ++bi) {
    int col = 0;
    for (size_t bj = 0; bj < hidden_dims.size(); ++bj) {
      if (bj >= bi) {
        m->block(row, col, hidden_dims[bi], hidden_dims[bj]).setZero();
      }
      col += hidden_dims[bj];
    }
    row += hidden_dims[bi];
  }
}

MlpNetwork extract_network(const BlockMap& n, const Vector& b_phi, const Vector& b_out,
                           const std::vector<int>& hidden_dims, const Activation& act,
                           double* off_structure) {
  const int lcount = static_cast<int>(hidden_dims.size());
  MlpNetwork net;
  net.activation = act;
  net.layers.resize(lcount + 1);

  net.layers[0].weight = n.vx.topRows(hidden_dims[0]);
  double off = n.vx.bottomRows(n.nphi() - hidden_dims[0]).squaredNorm();
  off += n.psi_x.squaredNorm();

  int row = hidden_dims[0];
  int col = 0;
  Matrix residual = n.vxphi;
  for (int k = 1; k < lcount; ++k) {
    net.layers[k].weight = n.vxphi.block(row, col, hidden_dims[k], hidden_dims[k - 1]);
    residual.block(row, col, hidden_dims[k], hidden_dims[k - 1]).setZero();
    row += hidden_dims[k];
    col += hidden_dims[k - 1];
  }
  off += residual.squaredNorm();

  net.layers[lcount].weight = n.psi_xphi.rightCols(hidden_dims[lcount - 1]);
  off += n.psi_xphi.leftCols(n.nphi() - hidden_dims[lcount - 1]).squaredNorm();

  int boff = 0;
  for (int k = 0; k < lcount; ++k) {
    net.layers[k].bias = b_phi.segment(boff, hidden_dims[k]);
    boff += hidden_dims[k];
  }
  net.layers[lcount].bias = b_out;

  if (off_structure != nullptr) *off_structure = std::sqrt(off);
  net.validate();
  return net;
}

}  // namespace lipcert
