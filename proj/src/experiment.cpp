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

#include "lipcert/experiment.hpp"

#include <sys/resource.h>

#include <chrono>
#include <iostream>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "lipcert/batch.hpp"
#include "lipcert/serialize.hpp"
#include "lipcert/trainers.hpp"

namespace lipcert {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash_hex(const ConfigTable& cfg) {
  std::ostringstream canon;
  canon.precision(17);
  for (const auto& [key, value] : cfg.entries()) {
    canon << key << "=";
    if (const auto* s = std::get_if<std::string>(&value)) {
      canon << "s:" << *s;
    } else if (const auto* d = std::get_if<double>(&value)) {
      canon << "n:" << *d;
    } else if (const auto* b = std::get_if<bool>(&value)) {
      canon << "b:" << (*b ? "true" : "false");
    } else if (const auto* da = std::get_if<std::vector<double>>(&value)) {
      canon << "na:";
      for (double v : *da) canon << v << ",";
    } else if (const auto* sa = std::get_if<std::vector<std::string>>(&value)) {
      canon << "sa:";
      for (const auto& v : *sa) canon << v << ",";
    }
    canon << "\n";
  }
  const std::uint64_t h = fnv1a(canon.str());
  std::ostringstream hex;
  hex << std::hex;
  hex.width(16);
  hex.fill('0');
  hex << h;
  return hex.str();
}

std::uint64_t peak_rss_bytes() {
  struct rusage usage;
  if (getrusage(RUSAGE_SELF, &usage) != 0) return 0;
  // ru_maxrss is in kilobytes on Linux.
  return static_cast<std::uint64_t>(usage.ru_maxrss) * 1024ULL;
}

MlpNetwork init_network(const std::vector<int>& dims, const Activation& act,
                        std::uint64_t seed, double scale) {
  if (dims.size() < 2) throw DataError("init_network: need at least two dims");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MlpNetwork net;
  net.activation = act;
  for (size_t k = 0; k + 1 < dims.size(); ++k) {
    if (dims[k] < 1 || dims[k + 1] < 1) {
      throw DataError("init_network: dims must be positive");
    }
    LayerParams p;
    p.weight.resize(dims[k + 1], dims[k]);
    const double std_dev = scale * std::sqrt(2.0 / dims[k]);
    for (Eigen::Index j = 0; j < p.weight.cols(); ++j) {
      for (Eigen::Index i = 0; i < p.weight.rows(); ++i) {
        p.weight(i, j) = std_dev * gauss(rng);
      }
    }
    p.bias = Vector::Zero(dims[k + 1]);
    net.layers.push_back(std::move(p));
  }
  net.validate();
  return net;
}

void apply_seed_override(ConfigTable* cfg) {
  const char* env = std::getenv("LIPCERT_SEED");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') {
    throw DataError(std::string("LIPCERT_SEED is not an integer: ") + env);
  }
  std::vector<std::string> seed_keys;
  for (const auto& [key, value] : cfg->entries()) {
    const size_t dot = key.rfind('.');
    const std::string leaf = dot == std::string::npos ? key : key.substr(dot + 1);
    if (leaf == "seed") seed_keys.push_back(key);
  }
  for (const auto& key : seed_keys) {
    cfg->set(key, static_cast<double>(v));
  }
  cfg->set("seed_override", static_cast<double>(v));
}

std::pair<Dataset, Dataset> load_experiment_data(const ConfigTable& cfg) {
  const std::string kind = cfg.get_string("data.kind");
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("data.seed", 0));
  if (kind == "two_moons") {
    const int train_n = static_cast<int>(cfg.get_int("data.train_n", 500));
    const int test_n = static_cast<int>(cfg.get_int("data.test_n", 200));
    const double noise = cfg.get_double("data.noise_std", 0.1);
    Dataset train = gen_two_moons(train_n, noise, seed);
    Dataset test = gen_two_moons(test_n, noise, seed + 1);
    train.split = "train";
    test.split = "test";
    return {std::move(train), std::move(test)};
  }
  if (kind == "mnist") {
    Dataset train = load_mnist_idx(
        cfg.get_string("data.images"), cfg.get_string("data.labels"),
        static_cast<int>(cfg.get_int("data.train_limit", -1)));
    Dataset test = load_mnist_idx(
        cfg.get_string("data.test_images"), cfg.get_string("data.test_labels"),
        static_cast<int>(cfg.get_int("data.test_limit", -1)));
    train.split = "train";
    test.split = "test";
    return {std::move(train), std::move(test)};
  }
  throw DataError("data.kind must be two_moons or mnist, got '" + kind + "'");
}

double noisy_accuracy(const MlpNetwork& net, const Dataset& test, double sigma,
                      int trials, std::uint64_t seed) {
  if (trials < 1) throw DataError("noisy_accuracy: trials must be >= 1");
  double acc = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Dataset noisy = corrupt_gaussian(test, sigma, seed + 7919ULL * t);
    acc += batch_accuracy(net, noisy.to_batch());
  }
  return acc / trials;
}

namespace {

LossKind parse_loss(const std::string& s) {
  if (s == "cross_entropy") return LossKind::kCrossEntropy;
  if (s == "mse") return LossKind::kMse;
  throw DataError("loss must be cross_entropy or mse, got '" + s + "'");
}

SgdConfig sgd_from(const ConfigTable& cfg, const std::string& prefix) {
  SgdConfig sgd;
  sgd.epochs = static_cast<int>(cfg.get_int(prefix + ".epochs", sgd.epochs));
  sgd.lr = cfg.get_double(prefix + ".lr", sgd.lr);
  sgd.momentum = cfg.get_double(prefix + ".momentum", sgd.momentum);
  sgd.batch_size = static_cast<int>(cfg.get_int(prefix + ".batch_size", sgd.batch_size));
  sgd.loss = parse_loss(cfg.get_string(prefix + ".loss", "cross_entropy"));
  sgd.seed = static_cast<std::uint64_t>(cfg.get_int(prefix + ".seed", 0));
  return sgd;
}

InputBox box_from(const ConfigTable& cfg, int nx, bool clamp01) {
  InputBox box;
  if (cfg.has("certify.box_lo") && cfg.has("certify.box_hi")) {
    const auto lo = cfg.get_double_array("certify.box_lo");
    const auto hi = cfg.get_double_array("certify.box_hi");
    if (lo.size() == 1) {
      box.lo = Vector::Constant(nx, lo[0]);
    } else {
      box.lo = Eigen::Map<const Vector>(lo.data(), lo.size());
    }
    if (hi.size() == 1) {
      box.hi = Vector::Constant(nx, hi[0]);
    } else {
      box.hi = Eigen::Map<const Vector>(hi.data(), hi.size());
    }
  } else if (clamp01) {
    box.lo = Vector::Zero(nx);
    box.hi = Vector::Ones(nx);
  } else {
    throw DataError("box sector mode needs certify.box_lo / certify.box_hi");
  }
  box.validate();
  if (box.lo.size() != nx) {
    throw DataError("certificate box dimension " + std::to_string(box.lo.size()) +
                    " does not match input dimension " + std::to_string(nx));
  }
  return box;
}

CertifyOptions certify_from(const ConfigTable& cfg) {
  CertifyOptions opt;
  opt.bisect_rel_tol = cfg.get_double("certify.bisect_rel_tol", opt.bisect_rel_tol);
  opt.multiplier_iters =
      static_cast<int>(cfg.get_int("certify.multiplier_iters", opt.multiplier_iters));
  opt.verify_tol = cfg.get_double("certify.verify_tol", opt.verify_tol);
  return opt;
}

struct MethodContext {
  const ConfigTable& cfg;
  const Dataset& train_set;
  const Batch& train;
  const Batch& test;
  const MlpNetwork& net0;
  SectorMode mode;
  InputBox box;
  CertifyOptions certify_opt;
  const MlpNetwork* nominal_net;  // populated once method "nominal" has run
};

MlpNetwork warm_start_net(const MethodContext& ctx, const std::string& prefix) {
  if (!ctx.cfg.get_bool(prefix + ".warm_start", false)) return ctx.net0;
  if (ctx.nominal_net != nullptr) return *ctx.nominal_net;
  return train_nominal(ctx.net0, ctx.train, sgd_from(ctx.cfg, "train.nominal"));
}

MlpNetwork train_method(const MethodContext& ctx, const std::string& method,
                        LipCertificate* cert) {
  const std::string prefix = "train." + method;
  if (method == "nominal") {
    return train_nominal(ctx.net0, ctx.train, sgd_from(ctx.cfg, prefix));
  }
  if (method == "l2") {
    return train_l2(ctx.net0, ctx.train, sgd_from(ctx.cfg, prefix),
                    ctx.cfg.get_double(prefix + ".weight_decay", 1e-4));
  }
  if (method == "lip_loop") {
    AdmmConfig admm;
    admm.sgd = sgd_from(ctx.cfg, prefix);
    admm.sgd.epochs =
        static_cast<int>(ctx.cfg.get_int(prefix + ".epochs_per_round", 1));
    admm.eta = ctx.cfg.get_double(prefix + ".eta", admm.eta);
    admm.rho = ctx.cfg.get_double(prefix + ".rho", admm.rho);
    admm.sigma = ctx.cfg.get_double(prefix + ".sigma", admm.sigma);
    admm.outer_iters =
        static_cast<int>(ctx.cfg.get_int(prefix + ".outer_iters", admm.outer_iters));
    admm.lr_decay = ctx.cfg.get_double(prefix + ".lr_decay", admm.lr_decay);
    admm.rho_growth = ctx.cfg.get_double(prefix + ".rho_growth", admm.rho_growth);
    admm.rho_max = ctx.cfg.get_double(prefix + ".rho_max", admm.rho_max);
    admm.sector_widen =
        ctx.cfg.get_double(prefix + ".sector_widen", admm.sector_widen);
    admm.sector_mode = ctx.mode;
    admm.box = ctx.box;
    admm.lmi.max_iter =
        static_cast<int>(ctx.cfg.get_int(prefix + ".lmi_max_iter", admm.lmi.max_iter));
    admm.lmi.dykstra_iters = static_cast<int>(
        ctx.cfg.get_int(prefix + ".lmi_dykstra_iters", admm.lmi.dykstra_iters));
    admm.lmi.feas_tol = ctx.cfg.get_double(prefix + ".lmi_feas_tol", admm.lmi.feas_tol);
    const double l_floor = ctx.cfg.get_double(prefix + ".l_floor", 0.0);
    admm.lmi.lsq_floor = l_floor * l_floor;
    admm.bias_tune_epochs =
        static_cast<int>(ctx.cfg.get_int(prefix + ".bias_tune_epochs", 0));
    admm.bias_tune_lr = ctx.cfg.get_double(prefix + ".bias_tune_lr", 0.0);
    admm.polish_iters = static_cast<int>(
        ctx.cfg.get_int(prefix + ".polish_iters", admm.polish_iters));
    admm.certify = ctx.certify_opt;
    const bool verbose = ctx.cfg.get_bool(prefix + ".verbose", false);
    std::function<void(const AdmmRoundState&)> observer;
    if (verbose) {
      observer = [](const AdmmRoundState& st) {
        std::cerr << "lip_loop round " << st.round << ": rho=" << st.rho
                  << " residual=" << st.residual.norm()
                  << " lsq=" << st.vars.lsq << "\n";
      };
    }
    const AdmmResult res =
        admm_lip_loop(warm_start_net(ctx, prefix), ctx.train, admm, observer);
    if (verbose) {
      std::cerr << "lip_loop consensus_met=" << res.consensus_met
                << " final_residual=" << res.final_residual << "\n";
    }
    *cert = res.certificate;
    return res.net;
  }
  if (method == "rslmi") {
    RslmiConfig rc;
    rc.sketch_dim = static_cast<int>(ctx.cfg.get_int(prefix + ".sketch_dim", rc.sketch_dim));
    rc.epochs = static_cast<int>(ctx.cfg.get_int(prefix + ".epochs", rc.epochs));
    rc.lr = ctx.cfg.get_double(prefix + ".lr", rc.lr);
    rc.tau_lr = ctx.cfg.get_double(prefix + ".tau_lr", rc.tau_lr);
    rc.momentum = ctx.cfg.get_double(prefix + ".momentum", rc.momentum);
    rc.batch_size = static_cast<int>(ctx.cfg.get_int(prefix + ".batch_size", rc.batch_size));
    rc.loss = parse_loss(ctx.cfg.get_string(prefix + ".loss", "cross_entropy"));
    rc.tau_weight = ctx.cfg.get_double(prefix + ".tau_weight", rc.tau_weight);
    rc.alpha0 = ctx.cfg.get_double(prefix + ".alpha0", rc.alpha0);
    rc.alpha_mult = ctx.cfg.get_double(prefix + ".alpha_mult", rc.alpha_mult);
    rc.alpha_cap = ctx.cfg.get_double(prefix + ".alpha_cap", rc.alpha_cap);
    rc.check_every =
        static_cast<int>(ctx.cfg.get_int(prefix + ".check_every", rc.check_every));
    rc.l_target = ctx.cfg.get_double(prefix + ".l_target", rc.l_target);
    rc.grad_clip = ctx.cfg.get_double(prefix + ".grad_clip", rc.grad_clip);
    rc.lr_decay = ctx.cfg.get_double(prefix + ".lr_decay", rc.lr_decay);
    rc.seed = static_cast<std::uint64_t>(ctx.cfg.get_int(prefix + ".seed", 0));
    const RslmiResult res = train_rslmi(warm_start_net(ctx, prefix), ctx.train, rc);
    *cert = res.certificate;
    return res.net;
  }
  throw DataError("unknown training method '" + method +
                  "' (expected nominal, l2, lip_loop, or rslmi)");
}

std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream out;
  out.precision(12);
  out << v;
  return out.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << text;
  if (!out) throw DataError("failed writing " + path);
}

}  // namespace

std::string records_to_csv(const std::vector<ExperimentRecord>& records) {
  std::ostringstream out;
  out << "method,status,train_cross_entropy,test_accuracy,certified_l,"
         "cert_method,cert_mode,cert_residual,wall_seconds,peak_rss_bytes,"
         "seed,config_hash\n";
  for (const auto& r : records) {
    std::string status = r.status;
    for (char& c : status) {
      if (c == ',' || c == '\n') c = ';';
    }
    out << r.method << "," << status << "," << csv_num(r.train_cross_entropy)
        << "," << csv_num(r.test_accuracy) << "," << csv_num(r.certified_l) << ","
        << r.cert_method << "," << r.cert_mode << "," << csv_num(r.cert_residual)
        << "," << csv_num(r.wall_seconds) << "," << r.peak_rss_bytes << ","
        << r.seed << "," << r.config_hash << "\n";
  }
  return out.str();
}

std::string noise_sweep_to_csv(const std::vector<ExperimentRecord>& records) {
  std::ostringstream out;
  out << "method,sigma,mean_accuracy\n";
  for (const auto& r : records) {
    for (const auto& [sigma, acc] : r.noise_accuracy) {
      out << r.method << "," << csv_num(sigma) << "," << csv_num(acc) << "\n";
    }
  }
  return out.str();
}

std::vector<ExperimentRecord> run_experiment(const ConfigTable& cfg) {
  const std::string hash = config_hash_hex(cfg);
  const auto methods = cfg.sections("train");
  if (methods.empty()) throw DataError("config has no [train.<method>] sections");

  auto [train_set, test_set] = load_experiment_data(cfg);
  const Batch train = train_set.to_batch();
  const Batch test = test_set.to_batch();

  std::vector<int> dims;
  dims.push_back(static_cast<int>(train_set.dim()));
  for (double h : cfg.get_double_array("model.hidden")) {
    dims.push_back(static_cast<int>(h));
  }
  dims.push_back(train_set.n_classes);
  const Activation act =
      Activation::parse(cfg.get_string("model.activation", "relu"));
  const std::uint64_t model_seed =
      static_cast<std::uint64_t>(cfg.get_int("model.seed", 0));
  const MlpNetwork net0 =
      init_network(dims, act, model_seed, cfg.get_double("model.init_scale", 1.0));

  const std::string mode_str = cfg.get_string("certify.mode", "global");
  if (mode_str != "global" && mode_str != "box") {
    throw DataError("certify.mode must be global or box, got '" + mode_str + "'");
  }
  const SectorMode mode =
      mode_str == "box" ? SectorMode::kBoxed : SectorMode::kGlobal;
  MethodContext ctx{cfg,  train_set, train, test, net0, mode, InputBox{},
                    certify_from(cfg), nullptr};
  if (mode == SectorMode::kBoxed) {
    ctx.box = box_from(cfg, dims[0], train_set.clamp01);
  }

  const std::vector<double> sigmas =
      cfg.has("eval.noise_sigmas") ? cfg.get_double_array("eval.noise_sigmas")
                                   : std::vector<double>{};
  const int noise_trials = static_cast<int>(cfg.get_int("eval.noise_trials", 10));
  const std::uint64_t eval_seed =
      static_cast<std::uint64_t>(cfg.get_int("eval.seed", 0));

  std::vector<ExperimentRecord> records;
  MlpNetwork nominal_net;
  for (const auto& method : methods) {
    ExperimentRecord rec;
    rec.method = method;
    rec.config_hash = hash;
    rec.seed = static_cast<std::uint64_t>(cfg.get_int("train." + method + ".seed", 0));
    const auto t0 = std::chrono::steady_clock::now();
    std::string stage = "train";
    try {
      LipCertificate cert;
      MlpNetwork net = train_method(ctx, method, &cert);
      const bool have_cert = method == "lip_loop" || method == "rslmi";

      stage = "eval";
      rec.train_cross_entropy =
          batch_loss_grad(net, train, LossKind::kCrossEntropy, nullptr);
      rec.test_accuracy = batch_accuracy(net, test);

      stage = "certify";
      if (!have_cert) {
        const ActivationSector sector = sector_for(net, ctx.mode, ctx.box);
        cert = certify_lipsdp(net, sector, ctx.certify_opt);
        cert.mode = ctx.mode;
        if (ctx.mode == SectorMode::kBoxed) cert.box = ctx.box;
      }
      rec.certified_l = cert.bound;
      rec.cert_method = cert_method_name(cert.method);
      rec.cert_mode = cert.mode == SectorMode::kBoxed ? "box" : "global";
      rec.cert_residual = cert.max_eig_residual;
      rec.certificate = cert;

      stage = "eval";
      for (double sigma : sigmas) {
        rec.noise_accuracy.emplace_back(
            sigma, noisy_accuracy(net, test_set, sigma, noise_trials, eval_seed));
      }
      if (method == "nominal") {
        nominal_net = net;
        ctx.nominal_net = &nominal_net;
      }
      rec.net = std::move(net);
    } catch (const std::exception& e) {
      rec.status = "error(" + stage + "): " + e.what();
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.peak_rss_bytes = peak_rss_bytes();
    records.push_back(std::move(rec));
  }

  if (cfg.has("output.csv")) {
    write_file(cfg.get_string("output.csv"), records_to_csv(records));
  }
  if (cfg.has("output.noise_csv") && !sigmas.empty()) {
    write_file(cfg.get_string("output.noise_csv"), noise_sweep_to_csv(records));
  }
  if (cfg.has("output.certificates")) {
    std::ostringstream all;
    for (const auto& r : records) {
      all << "method: " << r.method << "\nstatus: " << r.status << "\n";
      if (r.certificate) all << certificate_to_text(*r.certificate);
      all << "\n";
    }
    write_file(cfg.get_string("output.certificates"), all.str());
  }
  if (cfg.has("output.weights_dir")) {
    const std::string dir = cfg.get_string("output.weights_dir");
    for (const auto& r : records) {
      if (r.net) save_network(dir + "/" + r.method + ".json", *r.net);
    }
  }
  return records;
}

std::vector<ExperimentRecord> run_experiment_file(const std::string& config_path) {
  ConfigTable cfg = parse_config_file(config_path);
  apply_seed_override(&cfg);
  return run_experiment(cfg);
}

}  // namespace lipcert
