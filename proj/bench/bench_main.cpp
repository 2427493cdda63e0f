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

// Timing comparison between the OpenMP batch kernels and the per-sample
// serial references, plus the sketched-penalty benchmark grid.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

#include "lipcert/batch.hpp"
#include "lipcert/experiment.hpp"
#include "lipcert/network.hpp"
#include "lipcert/trainers.hpp"

namespace {

using lipcert::Batch;
using lipcert::Matrix;
using lipcert::MlpNetwork;

double ms_per_call(const std::function<void()>& fn, int reps) {
  using Clock = std::chrono::steady_clock;
  fn();  // warm up
  const auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) fn();
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count() / reps;
}

Batch random_batch(int nx, int ny, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, ny - 1);
  Batch b;
  b.inputs.resize(nx, samples);
  b.targets = Matrix::Zero(ny, samples);
  for (int j = 0; j < samples; ++j) {
    for (int i = 0; i < nx; ++i) b.inputs(i, j) = gauss(rng);
    b.targets(cls(rng), j) = 1.0;
  }
  return b;
}

void bench_batch_kernels() {
  std::printf("batch kernels: parallel vs serial reference\n");
  std::printf("%-28s %10s %10s %8s\n", "kernel", "par ms", "ser ms", "speedup");
  const struct {
    int nx, hidden, ny, samples;
  } grid[] = {{64, 128, 10, 2048}, {784, 64, 10, 4096}, {256, 256, 16, 8192}};
  for (const auto& g : grid) {
    const MlpNetwork net = lipcert::init_network(
        {g.nx, g.hidden, g.hidden, g.ny},
        lipcert::Activation{lipcert::ActivationKind::kRelu}, 7);
    const Batch b = random_batch(g.nx, g.ny, g.samples, 11);

    const double fwd_p =
        ms_per_call([&] { lipcert::batch_forward(net, b.inputs); }, 5);
    const double fwd_s =
        ms_per_call([&] { lipcert::batch_forward_serial(net, b.inputs); }, 5);
    std::printf("%-28s %10.3f %10.3f %7.2fx\n",
                ("forward " + std::to_string(g.nx) + "x" + std::to_string(g.hidden) +
                 " n=" + std::to_string(g.samples))
                    .c_str(),
                fwd_p, fwd_s, fwd_s / fwd_p);

    lipcert::Gradients grads;
    const double bp_p = ms_per_call(
        [&] {
          lipcert::batch_loss_grad(net, b, lipcert::LossKind::kCrossEntropy, &grads);
        },
        5);
    const double bp_s = ms_per_call(
        [&] {
          lipcert::batch_loss_grad_serial(net, b, lipcert::LossKind::kCrossEntropy,
                                          &grads);
        },
        5);
    std::printf("%-28s %10.3f %10.3f %7.2fx\n",
                ("loss_grad " + std::to_string(g.nx) + "x" +
                 std::to_string(g.hidden) + " n=" + std::to_string(g.samples))
                    .c_str(),
                bp_p, bp_s, bp_s / bp_p);
  }
}

void bench_sketch() {
  std::printf("\nsketched penalty vs exact penalty\n");
  std::printf("%6s %6s %12s %12s %8s %12s\n", "n", "m", "sketched ms", "exact ms",
              "speedup", "mean gap");
  const auto rows = lipcert::sketch_bench({256, 512}, {16, 64, 128, 256, 512}, 3, 0);
  for (const auto& r : rows) {
    std::printf("%6d %6d %12.3f %12.3f %7.2fx %12.4e\n", r.n, r.m, r.sketched_ms,
                r.exact_ms, r.exact_ms / r.sketched_ms, r.mean_gap);
  }
}

}  // namespace

int main() {
  bench_batch_kernels();
  bench_sketch();
  return 0;
}
