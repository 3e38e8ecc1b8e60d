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

#include "trotterdiff/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "trotterdiff/errors.hpp"

namespace trotterdiff::nn {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFormat = "trotterdiff-checkpoint";

std::uint32_t to_little(std::uint32_t x) {
  if constexpr (std::endian::native == std::endian::little) {
    return x;
  } else {
    return ((x & 0xffu) << 24) | ((x & 0xff00u) << 8) | ((x >> 8) & 0xff00u) | (x >> 24);
  }
}

}  // namespace

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

const Matrix& Checkpoint::get(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t.value;
  }
  throw FormatError("checkpoint has no tensor named '" + name + "'");
}

void Checkpoint::add(std::string name, Matrix value) {
  for (auto& t : tensors) {
    if (t.name == name) {
      t.value = std::move(value);
      return;
    }
  }
  tensors.push_back({std::move(name), std::move(value)});
}

fs::path manifest_path(const fs::path& prefix) { return fs::path(prefix.string() + ".manifest.json"); }
fs::path blob_path(const fs::path& prefix) { return fs::path(prefix.string() + ".blob"); }

void save_checkpoint(const fs::path& prefix, const Checkpoint& ckpt) {
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  nlohmann::json manifest;
  manifest["format"] = kFormat;
  manifest["version"] = 1;
  manifest["dtype"] = "float32";
  manifest["byte_order"] = "little";
  manifest["tensors"] = nlohmann::json::array();
  std::ofstream blob(blob_path(prefix), std::ios::binary | std::ios::trunc);
  if (!blob) throw FormatError("cannot write " + blob_path(prefix).string());
  std::uint64_t offset = 0;
  for (const auto& t : ckpt.tensors) {
    manifest["tensors"].push_back(
        {{"name", t.name}, {"shape", {t.value.rows(), t.value.cols()}}, {"offset", offset}});
    for (Eigen::Index i = 0; i < t.value.size(); ++i) {
      const auto f = static_cast<float>(t.value.data()[i]);
      const std::uint32_t bits = to_little(std::bit_cast<std::uint32_t>(f));
      blob.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
    offset += static_cast<std::uint64_t>(t.value.size()) * 4;
  }
  manifest["blob_bytes"] = offset;
  manifest["metadata"] = ckpt.metadata;
  blob.close();
  if (!blob) throw FormatError("failed writing " + blob_path(prefix).string());
  std::ofstream out(manifest_path(prefix), std::ios::trunc);
  if (!out) throw FormatError("cannot write " + manifest_path(prefix).string());
  out << manifest.dump(2) << '\n';
}

Checkpoint load_checkpoint(const fs::path& prefix) {
  std::ifstream in(manifest_path(prefix));
  if (!in) throw FormatError("cannot open " + manifest_path(prefix).string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != kFormat || manifest.value("dtype", "") != "float32") {
    throw FormatError("unsupported checkpoint format in " + manifest_path(prefix).string());
  }
  std::ifstream blob(blob_path(prefix), std::ios::binary);
  if (!blob) throw FormatError("cannot open " + blob_path(prefix).string());
  blob.seekg(0, std::ios::end);
  const auto blob_size = static_cast<std::uint64_t>(blob.tellg());
  blob.seekg(0);
  const auto expected = manifest.at("blob_bytes").get<std::uint64_t>();
  if (blob_size != expected) {
    throw FormatError("checkpoint blob has " + std::to_string(blob_size) + " bytes, manifest expects " +
                      std::to_string(expected));
  }
  std::vector<char> bytes(blob_size);
  blob.read(bytes.data(), static_cast<std::streamsize>(blob_size));

  Checkpoint ckpt;
  try {
    for (const auto& t : manifest.at("tensors")) {
      const auto rows = t.at("shape").at(0).get<Eigen::Index>();
      const auto cols = t.at("shape").at(1).get<Eigen::Index>();
      const auto offset = t.at("offset").get<std::uint64_t>();
      if (rows < 0 || cols < 0) throw FormatError("negative tensor shape");
      const auto count = static_cast<std::uint64_t>(rows * cols);
      if (offset + count * 4 > blob_size) {
        throw FormatError("tensor '" + t.at("name").get<std::string>() + "' exceeds the blob");
      }
      Matrix m(rows, cols);
      for (std::uint64_t i = 0; i < count; ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, bytes.data() + offset + 4 * i, 4);
        m.data()[i] = static_cast<double>(std::bit_cast<float>(to_little(bits)));
      }
      ckpt.tensors.push_back({t.at("name").get<std::string>(), std::move(m)});
    }
    ckpt.metadata = manifest.value("metadata", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  return ckpt;
}

void remove_checkpoint(const fs::path& prefix) {
  fs::remove(manifest_path(prefix));
  fs::remove(blob_path(prefix));
}

void add_parameters(Checkpoint& ckpt, const std::string& scope, const std::vector<ParamPtr>& params) {
  for (const auto& p : params) ckpt.add(scope + "/" + p->name, p->value);
}

void load_parameters(const Checkpoint& ckpt, const std::string& scope, const std::vector<ParamPtr>& params) {
  for (const auto& p : params) {
    const Matrix& m = ckpt.get(scope + "/" + p->name);
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols()) {
      throw FormatError("shape mismatch for tensor '" + scope + "/" + p->name + "'");
    }
    p->value = m;
  }
}

void add_optimizer(Checkpoint& ckpt, const std::string& scope, const std::vector<ParamPtr>& params,
                   const OptimizerState& state) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    ckpt.add(scope + "/m/" + params[i]->name, state.m[i]);
    ckpt.add(scope + "/v/" + params[i]->name, state.v[i]);
  }
  const AdamWConfig& c = state.config;
  ckpt.metadata["optimizers"][scope] = {{"step", state.step},      {"lr", c.lr},
                                        {"beta1", c.beta1},        {"beta2", c.beta2},
                                        {"eps", c.eps},            {"weight_decay", c.weight_decay}};
}

void load_optimizer(const Checkpoint& ckpt, const std::string& scope, const std::vector<ParamPtr>& params,
                    OptimizerState& state) {
  try {
    const auto& meta = ckpt.metadata.at("optimizers").at(scope);
    state.step = meta.at("step").get<long>();
    state.config.lr = meta.at("lr").get<double>();
    state.config.beta1 = meta.at("beta1").get<double>();
    state.config.beta2 = meta.at("beta2").get<double>();
    state.config.eps = meta.at("eps").get<double>();
    state.config.weight_decay = meta.at("weight_decay").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint lacks optimizer state '" + scope + "': " + e.what());
  }
  state.m.clear();
  state.v.clear();
  for (const auto& p : params) {
    state.m.push_back(ckpt.get(scope + "/m/" + p->name));
    state.v.push_back(ckpt.get(scope + "/v/" + p->name));
  }
}

void add_ema(Checkpoint& ckpt, const std::string& scope, const std::vector<ParamPtr>& params,
             const EmaWeights& ema) {
  for (std::size_t i = 0; i < params.size(); ++i) ckpt.add(scope + "/" + params[i]->name, ema.shadow[i]);
  ckpt.metadata["ema"][scope] = {{"decay", ema.decay}};
}

void load_ema(const Checkpoint& ckpt, const std::string& scope, const std::vector<ParamPtr>& params,
              EmaWeights& ema) {
  try {
    ema.decay = ckpt.metadata.at("ema").at(scope).at("decay").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint lacks EMA state '" + scope + "': " + e.what());
  }
  ema.shadow.clear();
  for (const auto& p : params) {
    const Matrix& m = ckpt.get(scope + "/" + p->name);
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols()) {
      throw FormatError("EMA shape mismatch for '" + p->name + "'");
    }
    ema.shadow.push_back(m);
  }
}

}  // namespace trotterdiff::nn
