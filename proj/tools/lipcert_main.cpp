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

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lipcert/certificates.hpp"
#include "lipcert/data.hpp"
#include "lipcert/experiment.hpp"
#include "lipcert/serialize.hpp"
#include "lipcert/toml.hpp"
#include "lipcert/trainers.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitTraining = 3;
constexpr int kExitCertification = 4;

std::uint64_t seed_or_env(std::uint64_t seed) {
  const char* env = std::getenv("LIPCERT_SEED");
  if (env == nullptr || *env == '\0') return seed;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') {
    throw lipcert::DataError(std::string("LIPCERT_SEED is not an integer: ") + env);
  }
  return v;
}

int cmd_train(const std::string& config_path) {
  const auto records = lipcert::run_experiment_file(config_path);
  std::cout << lipcert::records_to_csv(records);
  bool train_failed = false;
  bool cert_failed = false;
  for (const auto& r : records) {
    if (r.status.rfind("error(train)", 0) == 0) train_failed = true;
    if (r.status.rfind("error(certify)", 0) == 0) cert_failed = true;
    if (r.status.rfind("error(eval)", 0) == 0) train_failed = true;
  }
  if (train_failed) return kExitTraining;
  if (cert_failed) return kExitCertification;
  return kExitOk;
}

int cmd_certify(const std::string& weights, const std::string& method,
                const std::string& mode, const std::vector<double>& box_pair,
                const std::string& out_path) {
  const lipcert::MlpNetwork net = lipcert::load_network(weights);
  lipcert::SectorMode sector_mode = lipcert::SectorMode::kGlobal;
  lipcert::InputBox box;
  if (mode == "box") {
    if (box_pair.size() != 2) {
      throw lipcert::DataError("--mode box needs --box lo,hi");
    }
    sector_mode = lipcert::SectorMode::kBoxed;
    box.lo = lipcert::Vector::Constant(net.input_dim(), box_pair[0]);
    box.hi = lipcert::Vector::Constant(net.input_dim(), box_pair[1]);
    box.validate();
  } else if (mode != "global") {
    throw lipcert::DataError("--mode must be global or box");
  }

  lipcert::LipCertificate cert;
  if (method == "lipsdp") {
    const auto sector = lipcert::sector_for(net, sector_mode, box);
    cert = lipcert::certify_lipsdp(net, sector);
    cert.mode = sector_mode;
    if (sector_mode == lipcert::SectorMode::kBoxed) cert.box = box;
  } else if (method == "product") {
    cert = lipcert::spectral_product_bound(net);
  } else if (method == "layerwise") {
    cert = lipcert::layerwise_product_bound(net);
  } else {
    throw lipcert::DataError("--method must be lipsdp, product, or layerwise");
  }
  const std::string text = lipcert::certificate_to_text(cert);
  std::cout << text;
  if (!out_path.empty()) lipcert::save_certificate(out_path, cert);
  return kExitOk;
}

int cmd_eval_noise(const std::string& weights, const std::string& config_path,
                   const std::vector<double>& sigmas, int trials,
                   std::uint64_t seed) {
  const lipcert::MlpNetwork net = lipcert::load_network(weights);
  lipcert::ConfigTable cfg = lipcert::parse_config_file(config_path);
  auto [train_set, test_set] = lipcert::load_experiment_data(cfg);
  (void)train_set;
  std::cout << "sigma,mean_accuracy\n";
  for (double sigma : sigmas) {
    std::cout << sigma << ","
              << lipcert::noisy_accuracy(net, test_set, sigma, trials, seed)
              << "\n";
  }
  return kExitOk;
}

int cmd_sketch_bench(const std::vector<int>& dims, const std::vector<int>& ms,
                     int trials, std::uint64_t seed) {
  const auto rows = lipcert::sketch_bench(dims, ms, trials, seed);
  std::cout << "n,m,trials,sketched_ms,exact_ms,speedup,mean_gap\n";
  for (const auto& r : rows) {
    std::cout << r.n << "," << r.m << "," << r.trials << "," << r.sketched_ms
              << "," << r.exact_ms << "," << r.exact_ms / r.sketched_ms << ","
              << r.mean_gap << "\n";
  }
  return kExitOk;
}

int cmd_gen_data(int n, double noise, std::uint64_t seed,
                 const std::string& out_path) {
  const lipcert::Dataset d = lipcert::gen_two_moons(n, noise, seed);
  std::ostringstream out;
  out.precision(17);
  out << "x0,x1,label\n";
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    out << d.inputs(i, 0) << "," << d.inputs(i, 1) << ","
        << d.labels[static_cast<size_t>(i)] << "\n";
  }
  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    std::ofstream file(out_path);
    if (!file) throw lipcert::DataError("cannot write " + out_path);
    file << out.str();
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lipschitz-certified training and certification for dense nets"};
  app.require_subcommand(1);

  std::string config_path;
  auto* train = app.add_subcommand("train", "Run every [train.*] method in a config");
  train->add_option("config", config_path, "TOML config file")->required();

  std::string weights, method = "lipsdp", mode = "global", cert_out;
  std::vector<double> box_pair;
  auto* certify = app.add_subcommand("certify", "Certify a saved network");
  certify->add_option("weights", weights, "lipcert-net-v1 JSON file")->required();
  certify->add_option("--method", method, "lipsdp | product | layerwise");
  certify->add_option("--mode", mode, "global | box");
  certify->add_option("--box", box_pair, "lo,hi uniform input box")->delimiter(',');
  certify->add_option("--out", cert_out, "write certificate text here");

  std::string noise_weights, noise_config;
  std::vector<double> sigmas;
  int trials = 10;
  std::uint64_t seed = 0;
  auto* eval_noise =
      app.add_subcommand("eval-noise", "Accuracy under Gaussian input noise");
  eval_noise->add_option("weights", noise_weights, "network file")->required();
  eval_noise->add_option("--config", noise_config, "config providing [data]")
      ->required();
  eval_noise->add_option("--sigmas", sigmas, "noise levels")->delimiter(',')
      ->required();
  eval_noise->add_option("--trials", trials, "corruptions per level");
  eval_noise->add_option("--seed", seed, "noise seed");

  std::vector<int> bench_dims{512};
  std::vector<int> bench_ms{16, 64, 128, 256, 512};
  int bench_trials = 3;
  std::uint64_t bench_seed = 0;
  auto* bench = app.add_subcommand(
      "sketch-bench", "Sketched vs exact penalty evaluation timings");
  bench->add_option("--dims", bench_dims, "layer dimensions")->delimiter(',');
  bench->add_option("--sketch-dims", bench_ms, "sketch sizes")->delimiter(',');
  bench->add_option("--trials", bench_trials, "random matrices per cell");
  bench->add_option("--seed", bench_seed, "rng seed");

  int gen_n = 500;
  double gen_noise = 0.1;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-data", "Write a two-moons dataset as CSV");
  gen->add_option("--n", gen_n, "sample count");
  gen->add_option("--noise", gen_noise, "Gaussian jitter std");
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_option("--out", gen_out, "output path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(config_path);
    if (certify->parsed()) return cmd_certify(weights, method, mode, box_pair, cert_out);
    if (eval_noise->parsed()) {
      return cmd_eval_noise(noise_weights, noise_config, sigmas, trials,
                            seed_or_env(seed));
    }
    if (bench->parsed()) {
      return cmd_sketch_bench(bench_dims, bench_ms, bench_trials,
                              seed_or_env(bench_seed));
    }
    if (gen->parsed()) {
      return cmd_gen_data(gen_n, gen_noise, seed_or_env(gen_seed), gen_out);
    }
  } catch (const lipcert::SolverError& e) {
    std::cerr << "certification error: " << e.what() << "\n";
    return kExitCertification;
  } catch (const lipcert::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const lipcert::DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTraining;
  }
  return kExitOk;
}
