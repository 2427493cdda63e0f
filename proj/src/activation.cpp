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

#include "lipcert/activation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lipcert {

namespace {
double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }
}  // namespace

double Activation::value(double v) const {
  switch (kind) {
    case ActivationKind::kRelu:
      return v > 0.0 ? v : 0.0;
    case ActivationKind::kTanh:
      return std::tanh(v);
    case ActivationKind::kSigmoid:
      return sigmoid(v);
    case ActivationKind::kLeakyRelu:
      return v > 0.0 ? v : leaky_slope * v;
  }
  throw DataError("unknown activation kind");
}

double Activation::deriv(double v) const {
  switch (kind) {
    case ActivationKind::kRelu:
      return v > 0.0 ? 1.0 : 0.0;
    case ActivationKind::kTanh: {
      const double t = std::tanh(v);
      return 1.0 - t * t;
    }
    case ActivationKind::kSigmoid: {
      const double s = sigmoid(v);
      return s * (1.0 - s);
    }
    case ActivationKind::kLeakyRelu:
      return v > 0.0 ? 1.0 : leaky_slope;
  }
  throw DataError("unknown activation kind");
}

Vector Activation::apply(const Vector& v) const {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = value(v[i]);
  return out;
}

Vector Activation::apply_deriv(const Vector& v) const {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = deriv(v[i]);
  return out;
}

std::pair<double, double> Activation::global_sector() const {
  switch (kind) {
    case ActivationKind::kRelu:
    case ActivationKind::kTanh:
      return {0.0, 1.0};
    case ActivationKind::kSigmoid:
      return {0.0, 0.25};
    case ActivationKind::kLeakyRelu:
      return {leaky_slope, 1.0};
  }
  throw DataError("unknown activation kind");
}

std::pair<double, double> Activation::secant_bounds(double lo, double hi) const {
  if (lo > hi) throw DataError("secant_bounds: lo > hi");
  if (std::isinf(lo) || std::isinf(hi)) return global_sector();

  switch (kind) {
    case ActivationKind::kRelu:
      if (lo >= 0.0) return {1.0, 1.0};
      if (hi <= 0.0) return {0.0, 0.0};
      return {0.0, 1.0};
    case ActivationKind::kLeakyRelu:
      if (lo >= 0.0) return {1.0, 1.0};
      if (hi <= 0.0) return {leaky_slope, leaky_slope};
      return {leaky_slope, 1.0};
    case ActivationKind::kTanh:
    case ActivationKind::kSigmoid: {
      // Unimodal derivative, max at 0: the derivative range over [lo, hi]
      // bounds every secant by the mean value theorem.
      const double a = std::min(deriv(lo), deriv(hi));
      const double b = deriv(std::clamp(0.0, lo, hi));
      return {a, b};
    }
  }
  throw DataError("unknown activation kind");
}

std::string Activation::name() const {
  switch (kind) {
    case ActivationKind::kRelu:
      return "relu";
    case ActivationKind::kTanh:
      return "tanh";
    case ActivationKind::kSigmoid:
      return "sigmoid";
    case ActivationKind::kLeakyRelu:
      return "leaky_relu(" + std::to_string(leaky_slope) + ")";
  }
  return "unknown";
}

Activation Activation::parse(const std::string& name) {
  if (name == "relu") return {ActivationKind::kRelu};
  if (name == "tanh") return {ActivationKind::kTanh};
  if (name == "sigmoid") return {ActivationKind::kSigmoid};
  if (name.rfind("leaky_relu", 0) == 0) {
    Activation a{ActivationKind::kLeakyRelu};
    const auto open = name.find('(');
    const auto close = name.rfind(')');
    if (open != std::string::npos && close != std::string::npos && close > open) {
      a.leaky_slope = std::stod(name.substr(open + 1, close - open - 1));
    }
    if (a.leaky_slope < 0.0 || a.leaky_slope >= 1.0) {
      throw DataError("leaky_relu slope must lie in [0,1): " + name);
    }
    return a;
  }
  throw DataError("unknown activation kind: " + name);
}

}  // namespace lipcert
