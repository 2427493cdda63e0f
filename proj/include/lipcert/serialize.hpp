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

#ifndef LIPCERT_SERIALIZE_HPP_
#define LIPCERT_SERIALIZE_HPP_

#include <string>

#include "lipcert/certificates.hpp"
#include "lipcert/network.hpp"

namespace lipcert {

// Weight files are JSON tagged "lipcert-net-v1":
//   format, activation, dims, layers[k].weight (row-major nested), .bias.
// Round-trips doubles exactly.
void save_network(const std::string& path, const MlpNetwork& net);
MlpNetwork load_network(const std::string& path);
std::string network_to_json(const MlpNetwork& net);
MlpNetwork network_from_json(const std::string& text);

// Human-readable certificate block: method, bound, sector mode, residual,
// and per-layer or per-neuron witness data when present.
std::string certificate_to_text(const LipCertificate& cert);
void save_certificate(const std::string& path, const LipCertificate& cert);

}  // namespace lipcert

#endif  // LIPCERT_SERIALIZE_HPP_
