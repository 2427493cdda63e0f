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

#include "lipcert/bounds.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace lipcert {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void InputBox::validate() const {
  if (lo.size() != hi.size()) throw DimensionError("InputBox: lo/hi length mismatch");
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (std::isnan(lo[i]) || std::isnan(hi[i]) || lo[i] > hi[i]) {
      throw DataError("InputBox: invalid interval at coordinate " + std::to_string(i));
    }
  }
}

bool InputBox::is_finite() const { return lo.allFinite() && hi.allFinite(); }

InputBox InputBox::unbounded(int n) {
  return {Vector::Constant(n, -kInf), Vector::Constant(n, kInf)};
}

InputBox InputBox::uniform(int n, double lo, double hi) {
  return {Vector::Constant(n, lo), Vector::Constant(n, hi)};
}

PreactivationBounds propagate_intervals(const MlpNetwork& net, const InputBox& box) {
  box.validate();
  if (box.lo.size() != net.input_dim()) {
    throw DimensionError("propagate_intervals: box dimension " +
                         std::to_string(box.lo.size()) + " != input " +
                         std::to_string(net.input_dim()));
  }
  PreactivationBounds out;
  out.lo.resize(net.phi_dim());
  out.hi.resize(net.phi_dim());

  if (!box.is_finite()) {
    out.lo.setConstant(-kInf);
    out.hi.setConstant(kInf);
    return out;
  }

  Vector c = 0.5 * (box.lo + box.hi);
  Vector r = 0.5 * (box.hi - box.lo);
  int off = 0;
  for (size_t k = 0; k + 1 < net.layers.size(); ++k) {
    const auto& W = net.layers[k].weight;
    const Vector vc = W * c + net.layers[k].bias;
    const Vector vr = W.cwiseAbs() * r;
    out.lo.segment(off, vc.size()) = vc - vr;
    out.hi.segment(off, vc.size()) = vc + vr;

    const Vector alo = net.activation.apply(vc - vr);
    const Vector ahi = net.activation.apply(vc + vr);
    c = 0.5 * (alo + ahi);
    r = 0.5 * (ahi - alo);
    off += static_cast<int>(vc.size());
  }
  return out;
}

ActivationSector local_sector(const MlpNetwork& net, const PreactivationBounds& b) {
  ActivationSector s;
  s.alpha.resize(b.lo.size());
  s.beta.resize(b.lo.size());
  for (Eigen::Index i = 0; i < b.lo.size(); ++i) {
    const auto [a, bt] = net.activation.secant_bounds(b.lo[i], b.hi[i]);
    s.alpha[i] = a;
    s.beta[i] = bt;
  }
  return s;
}

ActivationSector sector_for(const MlpNetwork& net, SectorMode mode, const InputBox& box) {
  if (mode == SectorMode::kGlobal) return global_sector(net);
  return local_sector(net, propagate_intervals(net, box));
}

}  // namespace lipcert
