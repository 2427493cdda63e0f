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

#include "lipcert/certificates.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/SVD>

#include "lipcert/sdp.hpp"

namespace lipcert {

std::string cert_method_name(CertMethod m) {
  switch (m) {
    case CertMethod::kLipsdp:
      return "lipsdp";
    case CertMethod::kLayerwiseProduct:
      return "layerwise_product";
    case CertMethod::kSpectralProduct:
      return "spectral_product";
    case CertMethod::kRslmi:
      return "rslmi";
  }
  return "unknown";
}

Matrix lipsdp_matrix(const BlockMap& n, const ActivationSector& sector,
                     const TMultiplier& t, double lsq) {
  const int nx = n.nx();
  const int nphi = n.nphi();
  const int dim = nx + nphi;
  if (sector.alpha.size() != nphi || t.lambda.size() != nphi) {
    throw DimensionError("lipsdp_matrix: sector or multiplier length mismatch");
  }

  const Vector m11 =
      (-2.0 * sector.alpha.array() * sector.beta.array() * t.lambda.array()).matrix();
  const Vector m12 =
      ((sector.alpha.array() + sector.beta.array()) * t.lambda.array()).matrix();
  const Vector m22 = (-2.0 * t.lambda.array()).matrix();

  Matrix j(nphi, dim);
  j << n.vx, n.vxphi;
  Matrix p(n.ny(), dim);
  p << n.psi_x, n.psi_xphi;

  Matrix m = j.transpose() * m11.asDiagonal() * j;
  m.rightCols(nphi) += j.transpose() * m12.asDiagonal();
  m.bottomRows(nphi) += m12.asDiagonal() * j;
  m.bottomRightCorner(nphi, nphi) += Matrix(m22.asDiagonal());
  m += p.transpose() * p;
  m.topLeftCorner(nx, nx) -= lsq * Matrix::Identity(nx, nx);
  return 0.5 * (m + m.transpose()).eval();
}

namespace {

// lambda_max of the certificate matrix plus the subgradient with respect to
// the multiplier, shared by dense and matrix-free paths.
struct CertProbe {
  const BlockMap& n;
  const ActivationSector& sector;
  Matrix j, p;  // [Nvx Nvxphi], [Npsix Npsixphi]
  int nx, nphi, dim;
  bool use_dense;

  explicit CertProbe(const BlockMap& bm, const ActivationSector& s)
      : n(bm), sector(s), nx(bm.nx()), nphi(bm.nphi()), dim(bm.nx() + bm.nphi()) {
    j.resize(nphi, dim);
    j << bm.vx, bm.vxphi;
    p.resize(bm.ny(), dim);
    p << bm.psi_x, bm.psi_xphi;
    use_dense = dim <= 160;
  }

  Vector matvec(const Vector& lambda, double lsq, const Vector& v) const {
    const Vector u = j * v;
    const Vector q = v.tail(nphi);
    const Vector m11u =
        (-2.0 * sector.alpha.array() * sector.beta.array() * lambda.array() *
         u.array())
            .matrix();
    const Vector sab = (sector.alpha.array() + sector.beta.array()).matrix();
    const Vector m12q = (sab.array() * lambda.array() * q.array()).matrix();
    const Vector m12u = (sab.array() * lambda.array() * u.array()).matrix();
    Vector out = j.transpose() * (m11u + m12q);
    out.tail(nphi) += m12u - 2.0 * (lambda.array() * q.array()).matrix();
    out += p.transpose() * (p * v);
    out.head(nx) -= lsq * v.head(nx);
    return out;
  }

  // Largest eigenvalue; `warm` is reused across calls. When the matrix-free
  // estimate claims feasibility it is confirmed densely (Lanczos only lower
  // bounds lambda_max, so a negative estimate alone is not a certificate).
  double top_eig(const Vector& lambda, double lsq, Vector* warm) const {
    if (use_dense) {
      const Matrix m = lipsdp_matrix(n, sector, TMultiplier{lambda}, lsq);
      const EigResult r = sym_eig(SymmetricMatrix(m));
      *warm = r.vectors.col(dim - 1);
      return r.values[dim - 1];
    }
    const double est = top_eigenvalue(
        [&](const Vector& v) { return matvec(lambda, lsq, v); }, dim, warm, 140,
        1e-10);
    if (est <= 0.0) {
      const Matrix m = lipsdp_matrix(n, sector, TMultiplier{lambda}, lsq);
      const EigResult r = sym_eig(SymmetricMatrix(m));
      *warm = r.vectors.col(dim - 1);
      return r.values[dim - 1];
    }
    return est;
  }

  Vector subgradient(const Vector& lambda, const Vector& eigvec) const {
    const Vector u = j * eigvec;
    const Vector q = eigvec.tail(nphi);
    Vector g(nphi);
    for (int i = 0; i < nphi; ++i) {
      const double a = sector.alpha[i];
      const double b = sector.beta[i];
      g[i] = -2.0 * a * b * u[i] * u[i] + 2.0 * (a + b) * u[i] * q[i] -
             2.0 * q[i] * q[i];
    }
    return g;
  }
};

// Minimizes lambda_max over the nonnegative multiplier by projected
// subgradient with a Polyak-style step aimed at 0. Returns the best value
// found and leaves the best multiplier in *lambda.
double search_multiplier(const CertProbe& probe, double lsq, Vector* lambda,
                         Vector* warm, int max_iter, double margin_tol) {
  Vector cur = *lambda;
  double h = probe.top_eig(cur, lsq, warm);
  double best = h;
  *lambda = cur;
  if (best <= 0.0) return best;

  int since_improve = 0;
  for (int it = 0; it < max_iter; ++it) {
    // *warm holds the top eigenvector of the current iterate.
    const Vector g = probe.subgradient(cur, *warm);
    const double gn2 = g.squaredNorm();
    if (gn2 < 1e-30) break;
    const double step = std::max(h, 1e-12) / gn2 / std::sqrt(1.0 + 0.05 * it);
    cur = (cur - step * g).cwiseMax(0.0);
    h = probe.top_eig(cur, lsq, warm);
    if (h < best - margin_tol) {
      best = h;
      *lambda = cur;
      since_improve = 0;
    } else {
      ++since_improve;
    }
    if (best <= 0.0) return best;
    if (since_improve >= 60) break;
  }
  return best;
}

}  // namespace

Vector downstream_multiplier_seed(const MlpNetwork& net,
                                  const ActivationSector& sector) {
  const int lcount = net.hidden_count();
  std::vector<double> layer_sigma(lcount + 1);
  for (int k = 0; k <= lcount; ++k) {
    layer_sigma[k] = spectral_norm(net.layers[k].weight);
  }
  const double beta_max = sector.beta.size() > 0 ? sector.beta.maxCoeff() : 1.0;
  Vector lambda(net.phi_dim());
  int off = 0;
  for (int k = 0; k < lcount; ++k) {
    double down = 1.0;
    for (int jj = k + 1; jj <= lcount; ++jj) {
      const double s = layer_sigma[jj] * (jj < lcount ? beta_max : 1.0);
      down *= s * s;
    }
    const int width = static_cast<int>(net.layers[k].weight.rows());
    for (int i = 0; i < width; ++i) lambda[off + i] = std::max(down, 1e-8);
    off += width;
  }
  return lambda;
}

LipCertificate certify_lipsdp(const MlpNetwork& net, const ActivationSector& sector,
                              const CertifyOptions& opt) {
  net.validate();
  const BlockMap n = assemble_block_map(net);
  if (sector.alpha.size() != n.nphi()) {
    throw DimensionError("certify_lipsdp: sector length mismatch");
  }

  LipCertificate cert;
  cert.method = CertMethod::kLipsdp;

  const double beta_max = sector.beta.maxCoeff();
  double product = 1.0;
  for (size_t k = 0; k < net.layers.size(); ++k) {
    double s = spectral_norm(net.layers[k].weight);
    if (k + 1 < net.layers.size()) s *= std::max(beta_max, 0.0);
    product *= s;
  }

  const CertProbe probe(n, sector);
  Vector lambda = downstream_multiplier_seed(net, sector);
  if (opt.seed.has_value()) {
    if (opt.seed->lambda.size() != n.nphi()) {
      throw DimensionError("certify_lipsdp: seed multiplier length mismatch");
    }
    lambda = opt.seed->lambda.cwiseMax(0.0);
  }
  Vector warm;

  if (product <= 1e-100) {
    // Degenerate chain: some layer is exactly zero, the map is constant.
    cert.bound = 0.0;
    cert.witness = TMultiplier{Vector::Ones(n.nphi())};
    cert.max_eig_residual = max_eigenvalue(SymmetricMatrix(
        lipsdp_matrix(n, sector, *cert.witness, 0.0)));
    return cert;
  }

  Vector best_lambda = lambda;
  const auto feasible = [&](double lsq) {
    Vector trial = lambda;
    const double margin =
        search_multiplier(probe, lsq, &trial, &warm, opt.multiplier_iters,
                          opt.margin_tol);
    if (margin <= 0.0) {
      lambda = trial;  // carry the witness to the next probe
      best_lambda = trial;
      return true;
    }
    return false;
  };

  double hi = product * product * 1.05 + 1e-12;
  bool hi_ok = feasible(hi);
  if (!hi_ok && opt.seed.has_value()) {
    // A caller-provided seed can sit in a bad basin; retry from the
    // downstream seed before concluding anything.
    lambda = downstream_multiplier_seed(net, sector);
    hi_ok = feasible(hi);
  }
  for (int attempt = 0; !hi_ok && attempt < 6; ++attempt) {
    hi *= 4.0;
    hi_ok = feasible(hi);
  }
  if (!hi_ok) {
    throw SolverError(
        "certify_lipsdp: no feasible multiplier found even above the "
        "spectral-product bound");
  }

  // rel tol applied to L^2 gives roughly half of it on L, comfortably inside
  // the documented 1e-3 relative tolerance on L.
  const double lsq = bisect_feasibility(feasible, 0.0, hi, opt.bisect_rel_tol);

  cert.bound = std::sqrt(std::max(0.0, lsq));
  cert.witness = TMultiplier{best_lambda};
  cert.max_eig_residual = max_eigenvalue(
      SymmetricMatrix(lipsdp_matrix(n, sector, *cert.witness, lsq)));
  if (cert.max_eig_residual > opt.verify_tol) {
    throw SolverError("certify_lipsdp: witness residual " +
                      std::to_string(cert.max_eig_residual) +
                      " exceeds tolerance at L=" + std::to_string(cert.bound));
  }
  return cert;
}

double spectral_norm(const Matrix& w) {
  if (w.size() == 0) return 0.0;
  const Eigen::Index n = w.cols();
  Vector v = Vector::Ones(n);
  // Deterministic, mildly uneven start so a symmetric top space is not missed.
  for (Eigen::Index i = 0; i < n; ++i) v[i] += 1e-3 * static_cast<double>(i % 7);
  v /= v.norm();

  double sigma = 0.0;
  for (int it = 0; it < 500; ++it) {
    Vector u = w.transpose() * (w * v);
    const double lam = u.norm();
    if (lam < 1e-300) return 0.0;
    u /= lam;
    const double sigma_new = std::sqrt(lam);
    const bool settled = std::abs(sigma_new - sigma) <= 1e-10 * std::max(1.0, sigma_new);
    sigma = sigma_new;
    const double resid = (w.transpose() * (w * u) - lam * u).norm();
    v = u;
    if (settled && resid <= 1e-8 * std::max(1.0, lam)) return sigma;
  }
  // Stagnated: fall back to a dense SVD.
  Eigen::JacobiSVD<Matrix> svd(w);
  return svd.singularValues()[0];
}

LipCertificate spectral_product_bound(const MlpNetwork& net) {
  net.validate();
  LipCertificate cert;
  cert.method = CertMethod::kSpectralProduct;
  const double act_gain = net.activation.global_sector().second;
  double L = 1.0;
  for (size_t k = 0; k < net.layers.size(); ++k) {
    L *= spectral_norm(net.layers[k].weight);
    if (k + 1 < net.layers.size()) L *= act_gain;
  }
  cert.bound = L;
  return cert;
}

double layer_sdp_tau(const Matrix& w) {
  const double s = spectral_norm(w);
  return s * s;
}

LipCertificate layerwise_product_bound(const MlpNetwork& net) {
  net.validate();
  LipCertificate cert;
  cert.method = CertMethod::kLayerwiseProduct;
  Vector tau(net.layers.size());
  const double act_gain = net.activation.global_sector().second;
  double L = 1.0;
  for (size_t k = 0; k < net.layers.size(); ++k) {
    tau[static_cast<Eigen::Index>(k)] = layer_sdp_tau(net.layers[k].weight);
    L *= std::sqrt(tau[static_cast<Eigen::Index>(k)]);
    if (k + 1 < net.layers.size()) L *= act_gain;
  }
  cert.layer_tau = tau;
  cert.bound = L;
  return cert;
}

double empirical_lip_lower_bound(const MlpNetwork& net, const LowerBoundSampler& cfg) {
  net.validate();
  if (cfg.n_pairs < 1) throw DataError("empirical_lip_lower_bound: n_pairs < 1");
  const int nx = net.input_dim();

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Matrix us(nx, cfg.n_pairs), ws(nx, cfg.n_pairs);
  for (int k = 0; k < cfg.n_pairs; ++k) {
    for (int i = 0; i < nx; ++i) {
      if (cfg.kind == LowerBoundSampler::Kind::kBox) {
        us(i, k) = cfg.box.lo[i] + unif(rng) * (cfg.box.hi[i] - cfg.box.lo[i]);
        ws(i, k) = cfg.box.lo[i] + unif(rng) * (cfg.box.hi[i] - cfg.box.lo[i]);
      } else {
        us(i, k) = gauss(rng);
        ws(i, k) = gauss(rng);
      }
    }
  }

  std::vector<double> ratio(cfg.n_pairs, 0.0);
#pragma omp parallel for schedule(dynamic, 64)
  for (int k = 0; k < cfg.n_pairs; ++k) {
    const Vector du = us.col(k) - ws.col(k);
    const double dn = du.norm();
    if (dn < 1e-12) continue;
    ratio[k] = (forward(net, us.col(k)) - forward(net, ws.col(k))).norm() / dn;
  }

  double best = 0.0;
  for (int k = 0; k < cfg.n_pairs; ++k) best = std::max(best, ratio[k]);

  // Refine the strongest candidates by ascent on the difference ratio.
  std::vector<int> order(cfg.n_pairs);
  for (int k = 0; k < cfg.n_pairs; ++k) order[k] = k;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return ratio[a] != ratio[b] ? ratio[a] > ratio[b]
                                                            : a < b; });
  const int n_seeds = std::min<int>(8, cfg.n_pairs);

  for (int s = 0; s < n_seeds; ++s) {
    Vector u = us.col(order[s]);
    Vector w = ws.col(order[s]);
    for (int it = 0; it < cfg.ascent_steps; ++it) {
      const Vector diff = u - w;
      const double dn = diff.norm();
      if (dn < 1e-12) break;
      const Vector fu = forward(net, u);
      const Vector fw = forward(net, w);
      Vector fd = fu - fw;
      const double fn = fd.norm();
      const double r = fn / dn;
      best = std::max(best, r);
      if (fn < 1e-14) break;
      fd /= fn;
      const Vector gu = input_grad(net, u, fd) / dn - (r / (dn * dn)) * diff;
      const Vector gw = -input_grad(net, w, fd) / dn + (r / (dn * dn)) * diff;
      u += cfg.ascent_lr * dn * gu;
      w += cfg.ascent_lr * dn * gw;
      if (cfg.kind == LowerBoundSampler::Kind::kBox) {
        u = u.cwiseMax(cfg.box.lo).cwiseMin(cfg.box.hi);
        w = w.cwiseMax(cfg.box.lo).cwiseMin(cfg.box.hi);
      }
    }
    const double dn = (u - w).norm();
    if (dn > 1e-12) {
      best = std::max(best, (forward(net, u) - forward(net, w)).norm() / dn);
    }
  }
  return best;
}

}  // namespace lipcert
