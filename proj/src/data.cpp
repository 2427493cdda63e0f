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

#include "lipcert/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace lipcert {

void Dataset::validate() const {
  if (inputs.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw DataError("dataset has " + std::to_string(inputs.rows()) +
                    " rows but " + std::to_string(labels.size()) + " labels");
  }
  if (!inputs.allFinite()) throw DataError("dataset inputs contain non-finite values");
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) {
      throw DataError("label " + std::to_string(labels[i]) + " at sample " +
                      std::to_string(i) + " outside [0, " +
                      std::to_string(n_classes) + ")");
    }
  }
}

Batch Dataset::to_batch() const {
  validate();
  Batch b;
  b.inputs = inputs.transpose();
  b.targets = Matrix::Zero(n_classes, inputs.rows());
  for (Eigen::Index j = 0; j < inputs.rows(); ++j) {
    b.targets(labels[static_cast<size_t>(j)], j) = 1.0;
  }
  return b;
}

namespace {

std::string read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::uint32_t read_be32(const std::string& bytes, size_t offset,
                        const std::string& path) {
  if (offset + 4 > bytes.size()) {
    throw DataError("truncated IDX file " + path + ": header needs " +
                    std::to_string(offset + 4) + " bytes, file has " +
                    std::to_string(bytes.size()));
  }
  const auto b = [&](size_t i) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i]));
  };
  return (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
}

std::string hex32(std::uint32_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s = "0x00000000";
  for (int i = 0; i < 8; ++i) s[9 - i] = digits[(v >> (4 * i)) & 0xf];
  return s;
}

void check_magic(const std::string& bytes, std::uint32_t expected,
                 const std::string& path) {
  const std::uint32_t found = read_be32(bytes, 0, path);
  if (found != expected) {
    throw DataError("IDX magic mismatch in " + path + ": expected " +
                    hex32(expected) + ", found " + hex32(found));
  }
}

}  // namespace

Dataset load_mnist_idx(const std::string& images_path,
                       const std::string& labels_path, int limit) {
  if (limit == 0) throw DataError("load_mnist_idx: limit of 0 selects no samples");

  const std::string img = read_binary(images_path);
  check_magic(img, 0x00000803u, images_path);
  const std::uint32_t n_img = read_be32(img, 4, images_path);
  const std::uint32_t rows = read_be32(img, 8, images_path);
  const std::uint32_t cols = read_be32(img, 12, images_path);
  const size_t pixels = static_cast<size_t>(rows) * cols;
  const size_t img_need = 16 + static_cast<size_t>(n_img) * pixels;
  if (img.size() < img_need) {
    throw DataError("truncated IDX file " + images_path + ": expected " +
                    std::to_string(img_need) + " bytes, file has " +
                    std::to_string(img.size()));
  }

  const std::string lab = read_binary(labels_path);
  check_magic(lab, 0x00000801u, labels_path);
  const std::uint32_t n_lab = read_be32(lab, 4, labels_path);
  const size_t lab_need = 8 + static_cast<size_t>(n_lab);
  if (lab.size() < lab_need) {
    throw DataError("truncated IDX file " + labels_path + ": expected " +
                    std::to_string(lab_need) + " bytes, file has " +
                    std::to_string(lab.size()));
  }
  if (n_img != n_lab) {
    throw DataError("image/label count mismatch: " + std::to_string(n_img) +
                    " images in " + images_path + " vs " + std::to_string(n_lab) +
                    " labels in " + labels_path);
  }

  const std::uint32_t keep =
      limit < 0 ? n_img : std::min<std::uint32_t>(n_img, static_cast<std::uint32_t>(limit));
  Dataset d;
  d.inputs.resize(keep, static_cast<Eigen::Index>(pixels));
  d.labels.resize(keep);
  d.n_classes = 10;
  d.clamp01 = true;
  for (std::uint32_t s = 0; s < keep; ++s) {
    const size_t base = 16 + static_cast<size_t>(s) * pixels;
    for (size_t p = 0; p < pixels; ++p) {
      d.inputs(s, static_cast<Eigen::Index>(p)) =
          static_cast<unsigned char>(img[base + p]) / 255.0;
    }
    d.labels[s] = static_cast<unsigned char>(lab[8 + s]);
  }
  d.feature_scale = Vector::Constant(static_cast<Eigen::Index>(pixels), 1.0 / 255.0);
  d.feature_offset = Vector::Zero(static_cast<Eigen::Index>(pixels));
  d.validate();
  return d;
}

Dataset gen_two_moons(int n, double noise_std, std::uint64_t seed) {
  if (n < 2) throw DataError("gen_two_moons: need n >= 2");
  if (noise_std < 0.0) throw DataError("gen_two_moons: noise_std must be >= 0");

  const int n_outer = n / 2 + n % 2;
  const int n_inner = n / 2;
  Dataset d;
  d.inputs.resize(n, 2);
  d.labels.resize(n);
  d.n_classes = 2;

  const auto arc = [](int i, int count) {
    return count > 1 ? M_PI * i / (count - 1) : 0.0;
  };
  for (int i = 0; i < n_outer; ++i) {
    const double t = arc(i, n_outer);
    d.inputs(i, 0) = std::cos(t);
    d.inputs(i, 1) = std::sin(t);
    d.labels[i] = 0;
  }
  for (int i = 0; i < n_inner; ++i) {
    const double t = arc(i, n_inner);
    d.inputs(n_outer + i, 0) = 1.0 - std::cos(t);
    d.inputs(n_outer + i, 1) = 0.5 - std::sin(t);
    d.labels[n_outer + i] = 1;
  }

  std::mt19937_64 rng(seed);
  if (noise_std > 0.0) {
    std::normal_distribution<double> gauss(0.0, noise_std);
    for (int i = 0; i < n; ++i) {
      d.inputs(i, 0) += gauss(rng);
      d.inputs(i, 1) += gauss(rng);
    }
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Dataset shuffled = d;
  for (int i = 0; i < n; ++i) {
    shuffled.inputs.row(i) = d.inputs.row(order[i]);
    shuffled.labels[i] = d.labels[order[i]];
  }
  shuffled.feature_scale = Vector::Ones(2);
  shuffled.feature_offset = Vector::Zero(2);
  shuffled.validate();
  return shuffled;
}

Dataset corrupt_gaussian(const Dataset& data, double sigma_noise,
                         std::uint64_t seed) {
  if (sigma_noise < 0.0) throw DataError("corrupt_gaussian: sigma must be >= 0");
  if (sigma_noise == 0.0) return data;

  Dataset out = data;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma_noise);
  for (Eigen::Index i = 0; i < out.inputs.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.inputs.cols(); ++j) {
      double v = out.inputs(i, j) + gauss(rng);
      if (data.clamp01) v = std::clamp(v, 0.0, 1.0);
      out.inputs(i, j) = v;
    }
  }
  return out;
}

}  // namespace lipcert
