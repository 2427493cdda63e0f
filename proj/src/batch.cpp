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

#include "lipcert/batch.hpp"

#include <omp.h>

#include <string>
#include <vector>

namespace lipcert {

namespace {
int chunk_count(Eigen::Index cols) {
  return static_cast<int>((cols + kBatchChunk - 1) / kBatchChunk);
}
}  // namespace

Matrix batch_forward(const MlpNetwork& net, const Matrix& inputs) {
  if (inputs.rows() != net.input_dim()) {
    throw DimensionError("batch_forward: input rows " + std::to_string(inputs.rows()) +
                         " != layer 0 input " + std::to_string(net.input_dim()));
  }
  Matrix out(net.output_dim(), inputs.cols());
  const int nc = chunk_count(inputs.cols());
  const size_t l = net.layers.size() - 1;

#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < nc; ++c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * kBatchChunk;
    const Eigen::Index width = std::min<Eigen::Index>(kBatchChunk, inputs.cols() - begin);
    Matrix h = inputs.middleCols(begin, width);
    for (size_t k = 0; k < l; ++k) {
      Matrix v = (net.layers[k].weight * h).colwise() + net.layers[k].bias;
      for (Eigen::Index j = 0; j < v.cols(); ++j) {
        v.col(j) = net.activation.apply(v.col(j));
      }
      h = std::move(v);
    }
    out.middleCols(begin, width) =
        (net.layers[l].weight * h).colwise() + net.layers[l].bias;
  }
  return out;
}

Matrix batch_forward_serial(const MlpNetwork& net, const Matrix& inputs) {
  Matrix out(net.output_dim(), inputs.cols());
  for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
    out.col(j) = forward(net, inputs.col(j));
  }
  return out;
}

double batch_loss_grad(const MlpNetwork& net, const Batch& batch, LossKind loss,
                       Gradients* grads) {
  const Eigen::Index B = batch.inputs.cols();
  if (B == 0) throw DataError("batch_loss_grad: empty batch");
  const int nc = chunk_count(B);

  std::vector<double> partial_loss(nc, 0.0);
  std::vector<Gradients> partial_grads(grads != nullptr ? nc : 0);
  std::string failure;

#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < nc; ++c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * kBatchChunk;
    const Eigen::Index width = std::min<Eigen::Index>(kBatchChunk, B - begin);
    Batch sub;
    sub.inputs = batch.inputs.middleCols(begin, width);
    sub.targets = batch.targets.middleCols(begin, width);
    try {
      const double w = static_cast<double>(width) / static_cast<double>(B);
      partial_loss[c] =
          w * backprop(net, sub, loss, grads != nullptr ? &partial_grads[c] : nullptr);
      if (grads != nullptr) {
        for (auto& g : partial_grads[c].d_weight) g *= w;
        for (auto& g : partial_grads[c].d_bias) g *= w;
      }
    } catch (const std::exception& e) {
#pragma omp critical
      if (failure.empty()) {
        failure = std::string(e.what()) + " (chunk starting at sample " +
                  std::to_string(begin) + ")";
      }
    }
  }
  if (!failure.empty()) throw DataError(failure);

  double total = 0.0;
  for (int c = 0; c < nc; ++c) total += partial_loss[c];
  if (grads != nullptr) {
    grads->set_zero(net);
    for (int c = 0; c < nc; ++c) grads->axpy(1.0, partial_grads[c]);
  }
  return total;
}

double batch_loss_grad_serial(const MlpNetwork& net, const Batch& batch,
                              LossKind loss, Gradients* grads) {
  const Eigen::Index B = batch.inputs.cols();
  if (B == 0) throw DataError("batch_loss_grad_serial: empty batch");
  double total = 0.0;
  if (grads != nullptr) grads->set_zero(net);
  Gradients g;
  for (Eigen::Index j = 0; j < B; ++j) {
    Batch one;
    one.inputs = batch.inputs.col(j);
    one.targets = batch.targets.col(j);
    const double w = 1.0 / static_cast<double>(B);
    total += w * backprop(net, one, loss, grads != nullptr ? &g : nullptr);
    if (grads != nullptr) grads->axpy(w, g);
  }
  return total;
}

double batch_accuracy(const MlpNetwork& net, const Batch& batch) {
  const Matrix y = batch_forward(net, batch.inputs);
  Eigen::Index correct = 0;
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    Eigen::Index pred, truth;
    y.col(j).maxCoeff(&pred);
    batch.targets.col(j).maxCoeff(&truth);
    if (pred == truth) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(y.cols());
}

}  // namespace lipcert
