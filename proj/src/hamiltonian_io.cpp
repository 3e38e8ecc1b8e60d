// Copyright 2026 The trotterdiff Authors
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

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "trotterdiff/errors.hpp"
#include "trotterdiff/pauli.hpp"

namespace trotterdiff {

using nlohmann::json;

std::string hamiltonian_to_json(const Hamiltonian& h) {
  json j;
  j["n"] = h.num_qubits();
  j["t"] = h.time();
  j["terms"] = json::array();
  for (const auto& term : h.terms()) {
    j["terms"].push_back({{"pauli", term.string.str()}, {"coeff", term.coeff}});
  }
  return j.dump(2);
}

Hamiltonian hamiltonian_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    const int n = j.at("n").get<int>();
    const double t = j.at("t").get<double>();
    std::vector<PauliTerm> terms;
    for (const auto& item : j.at("terms")) {
      terms.push_back({PauliString(item.at("pauli").get<std::string>()),
                       item.at("coeff").get<double>()});
    }
    return Hamiltonian(n, std::move(terms), t);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed Hamiltonian JSON: ") + e.what());
  } catch (const InputError& e) {
    throw FormatError(std::string("invalid Hamiltonian: ") + e.what());
  }
}

void save_hamiltonian(const std::filesystem::path& path, const Hamiltonian& h) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << hamiltonian_to_json(h) << '\n';
}

Hamiltonian load_hamiltonian(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return hamiltonian_from_json(buf.str());
}

}  // namespace trotterdiff
