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
#include <utility>

#include "lipcert/types.hpp"

namespace lipcert {

enum class ActivationKind { kRelu, kTanh, kSigmoid, kLeakyRelu };

/// Scalar activation applied elementwise to every hidden layer.
///
/// `secant_bounds` returns (alpha, beta) such that every secant slope
/// (psi(u)-psi(w))/(u-w) with u, w in [lo, hi] lies in [alpha, beta].
/// tanh and sigmoid have unimodal derivatives peaking at 0, so the bounds
/// are alpha = min(psi'(lo), psi'(hi)) and beta = psi'(clamp(0, lo, hi));
/// relu and leaky_relu are handled by sign cases. Infinite endpoints give
/// the global sector: relu/tanh (0,1), sigmoid (0,1/4), leaky (slope,1).
struct Activation {
  ActivationKind kind = ActivationKind::kRelu;
  double leaky_slope = 0.01;  // only used by kLeakyRelu, must be in [0,1)

  double value(double v) const;
  double deriv(double v) const;
  Vector apply(const Vector& v) const;
  Vector apply_deriv(const Vector& v) const;

  std::pair<double, double> global_sector() const;
  std::pair<double, double> secant_bounds(double lo, double hi) const;

  std::string name() const;
  static Activation parse(const std::string& name);
};

}  // namespace lipcert
