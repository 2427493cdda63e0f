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

#include "lipcert/serialize.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lipcert {

namespace {

constexpr const char* kFormatTag = "lipcert-net-v1";

using Json = nlohmann::json;

Json matrix_rows(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_entries(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Matrix matrix_from(const Json& rows, const std::string& where) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw DataError("weight file: " + where + " must be a nested array");
  }
  Matrix m(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != static_cast<size_t>(m.cols())) {
      throw DataError("weight file: ragged rows in " + where);
    }
    for (size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j].get<double>();
    }
  }
  return m;
}

Vector vector_from(const Json& arr, const std::string& where) {
  if (!arr.is_array()) throw DataError("weight file: " + where + " must be an array");
  Vector v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

}  // namespace

std::string network_to_json(const MlpNetwork& net) {
  Json doc;
  doc["format"] = kFormatTag;
  doc["activation"] = net.activation.name();
  Json dims = Json::array();
  for (int d : net.dims()) dims.push_back(d);
  doc["dims"] = std::move(dims);
  Json layers = Json::array();
  for (const auto& layer : net.layers) {
    Json entry;
    entry["weight"] = matrix_rows(layer.weight);
    entry["bias"] = vector_entries(layer.bias);
    layers.push_back(std::move(entry));
  }
  doc["layers"] = std::move(layers);
  return doc.dump(1);
}

MlpNetwork network_from_json(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw DataError(std::string("weight file is not valid JSON: ") + e.what());
  }
  const std::string tag = doc.value("format", std::string("<missing>"));
  if (tag != kFormatTag) {
    throw DataError("weight file format mismatch: expected " +
                    std::string(kFormatTag) + ", found " + tag);
  }
  MlpNetwork net;
  net.activation = Activation::parse(doc.at("activation").get<std::string>());
  const Json& layers = doc.at("layers");
  if (!layers.is_array() || layers.empty()) {
    throw DataError("weight file: layers must be a non-empty array");
  }
  for (size_t k = 0; k < layers.size(); ++k) {
    const std::string where = "layers[" + std::to_string(k) + "]";
    LayerParams p;
    p.weight = matrix_from(layers[k].at("weight"), where + ".weight");
    p.bias = vector_from(layers[k].at("bias"), where + ".bias");
    net.layers.push_back(std::move(p));
  }
  if (doc.contains("dims")) {
    const auto claimed = doc["dims"].get<std::vector<int>>();
    const auto actual = net.dims();
    if (claimed != actual) {
      throw DataError("weight file: dims field disagrees with layer shapes");
    }
  }
  net.validate();
  return net;
}

void save_network(const std::string& path, const MlpNetwork& net) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << network_to_json(net) << "\n";
  if (!out) throw DataError("failed writing " + path);
}

MlpNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return network_from_json(buf.str());
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string certificate_to_text(const LipCertificate& cert) {
  std::ostringstream out;
  out.precision(17);
  out << "certificate\n";
  out << "  method: " << cert_method_name(cert.method) << "\n";
  out << "  bound: " << cert.bound << "\n";
  out << "  sector_mode: "
      << (cert.mode == SectorMode::kGlobal ? "global" : "box") << "\n";
  if (cert.box) {
    out << "  box_lo:";
    for (Eigen::Index i = 0; i < cert.box->lo.size(); ++i) out << " " << cert.box->lo[i];
    out << "\n  box_hi:";
    for (Eigen::Index i = 0; i < cert.box->hi.size(); ++i) out << " " << cert.box->hi[i];
    out << "\n";
  }
  out << "  max_eig_residual: " << cert.max_eig_residual << "\n";
  if (cert.layer_tau) {
    out << "  layer_tau:";
    for (Eigen::Index i = 0; i < cert.layer_tau->size(); ++i) {
      out << " " << (*cert.layer_tau)[i];
    }
    out << "\n";
  }
  if (cert.witness) {
    out << "  multiplier:";
    for (Eigen::Index i = 0; i < cert.witness->lambda.size(); ++i) {
      out << " " << cert.witness->lambda[i];
    }
    out << "\n";
  }
  return out.str();
}

void save_certificate(const std::string& path, const LipCertificate& cert) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << certificate_to_text(cert);
  if (!out) throw DataError("failed writing " + path);
}

}  // namespace lipcert
