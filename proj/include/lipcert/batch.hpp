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

// Samples per OpenMP work unit. Partial losses and gradients are accumulated
// per chunk and combined serially in chunk order, so results are identical
// for any thread count.
inline constexpr int kBatchChunk = 64;

// Parallel batched forward pass, one sample per column.
Matrix batch_forward(const MlpNetwork& net, const Matrix& inputs);

// Straight per-sample loop kept as the reference implementation.
Matrix batch_forward_serial(const MlpNetwork& net, const Matrix& inputs);

// Mean batch loss and gradient, parallel over sample chunks. Pass
// grads=nullptr for loss only.
double batch_loss_grad(const MlpNetwork& net, const Batch& batch, LossKind loss,
                       Gradients* grads);

// Per-sample reference combining single-sample backprops.
double batch_loss_grad_serial(const MlpNetwork& net, const Batch& batch,
                              LossKind loss, Gradients* grads);

// Fraction of argmax-correct predictions against one-hot targets.
double batch_accuracy(const MlpNetwork& net, const Batch& batch);

}  // namespace lipcert
