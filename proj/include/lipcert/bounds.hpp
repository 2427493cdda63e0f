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

#include "lipcert/network.hpp"
#include "lipcert/types.hpp"

namespace lipcert {

// Axis-aligned input region. Infinite entries mark unbounded coordinates;
// an all-infinite box reproduces global sectors downstream.
struct InputBox {
  Vector lo;
  Vector hi;

  void validate() const;
  bool is_finite() const;
  static InputBox unbounded(int n);
  static InputBox uniform(int n, double lo, double hi);
};

// Elementwise pre-activation intervals for the stacked hidden coordinates,
// layer 0 first.
struct PreactivationBounds {
  Vector lo;
  Vector hi;
};

// Interval arithmetic through the hidden layers: each affine map is bounded
// via its center/radius form, each activation via monotonicity. Any infinite
// input coordinate makes every downstream interval infinite.
PreactivationBounds propagate_intervals(const MlpNetwork& net, const InputBox& box);

// Secant slope bounds per hidden coordinate from its pre-activation interval.
ActivationSector local_sector(const MlpNetwork& net, const PreactivationBounds& b);

enum class SectorMode { kGlobal, kBoxed };

// Sector for the requested mode; kBoxed propagates the box first.
ActivationSector sector_for(const MlpNetwork& net, SectorMode mode, const InputBox& box);

}  // namespace lipcert
