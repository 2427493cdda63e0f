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

#ifndef LIPCERT_EXPERIMENT_HPP_
#define LIPCERT_EXPERIMENT_HPP_

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lipcert/certificates.hpp"
#include "lipcert/data.hpp"
#include "lipcert/network.hpp"
#include "lipcert/toml.hpp"

namespace lipcert {

// One trained-and-certified method. `status` is "ok" or carries the failing
// stage and message; metrics of failed stages stay NaN.
struct ExperimentRecord {
  std::string method;
  std::string status = "ok";
  double train_cross_entropy = std::numeric_limits<double>::quiet_NaN();
  double test_accuracy = std::numeric_limits<double>::quiet_NaN();
  double certified_l = std::numeric_limits<double>::quiet_NaN();
  std::string cert_method;
  std::string cert_mode;
  double cert_residual = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;
  std::uint64_t peak_rss_bytes = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::optional<LipCertificate> certificate;
  std::optional<MlpNetwork> net;
  // Mean test accuracy under input noise, one entry per requested sigma.
  std::vector<std::pair<double, double>> noise_accuracy;
};

// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);

// Hash of the resolved key/value entries, stable across reordering.
std::string config_hash_hex(const ConfigTable& cfg);

// High-water resident set size of this process, in bytes.
std::uint64_t peak_rss_bytes();

// He-style Gaussian init, fan-in scaled, deterministic in seed.
MlpNetwork init_network(const std::vector<int>& dims, const Activation& act,
                        std::uint64_t seed, double scale = 1.0);

// Train/test pair described by the [data] section.
std::pair<Dataset, Dataset> load_experiment_data(const ConfigTable& cfg);

// Mean accuracy over `trials` independent corruptions of the test set.
double noisy_accuracy(const MlpNetwork& net, const Dataset& test, double sigma,
                      int trials, std::uint64_t seed);

// Runs every configured [train.<method>] section in file order: train,
// certify, evaluate, optional noise sweep. Per-method failures are recorded
// and the remaining methods still run. Writes the [output] files.
std::vector<ExperimentRecord> run_experiment(const ConfigTable& cfg);
std::vector<ExperimentRecord> run_experiment_file(const std::string& config_path);

// Fixed column order, one line per record.
std::string records_to_csv(const std::vector<ExperimentRecord>& records);
// One line per (method, sigma) pair.
std::string noise_sweep_to_csv(const std::vector<ExperimentRecord>& records);

// When set, LIPCERT_SEED replaces every seed key in the table.
void apply_seed_override(ConfigTable* cfg);

}  // namespace lipcert

#endif  // LIPCERT_EXPERIMENT_HPP_
