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

#ifndef LIPCERT_DATA_HPP_
#define LIPCERT_DATA_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "lipcert/network.hpp"
#include "lipcert/types.hpp"

namespace lipcert {

// Labeled samples, one row per sample. The normalization record describes the
// map applied to the raw features (x = scale .* (raw - offset)) so train and
// test splits can be checked for consistency.
struct Dataset {
  Matrix inputs;            // n_samples x n_x
  std::vector<int> labels;  // class indices in [0, n_classes)
  int n_classes = 0;
  std::string split;        // "train", "test", or empty
  Vector feature_scale;
  Vector feature_offset;
  bool clamp01 = false;  // valid feature range is [0,1] (image data)

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }
  void validate() const;

  // Column-per-sample batch with one-hot targets.
  Batch to_batch() const;
};

// Parses the IDX image/label pair bit-exactly and scales pixels to [0,1].
// limit > 0 keeps the first `limit` samples; limit < 0 keeps everything.
Dataset load_mnist_idx(const std::string& images_path,
                       const std::string& labels_path, int limit);

// Two interleaved half circles with Gaussian jitter, shuffled so a prefix is
// class-balanced. Deterministic in (n, noise_std, seed).
Dataset gen_two_moons(int n, double noise_std, std::uint64_t seed);

// Adds i.i.d. N(0, sigma^2) noise to every feature, clamping to [0,1] when
// the dataset declares that range. Labels unchanged. sigma = 0 is identity.
Dataset corrupt_gaussian(const Dataset& data, double sigma_noise,
                         std::uint64_t seed);

}  // namespace lipcert

#endif  // LIPCERT_DATA_HPP_
