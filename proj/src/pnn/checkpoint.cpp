// Copyright 2026 The Apprentice Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "apprentice/pnn/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include "apprentice/pnn/mlp.hpp"

namespace apprentice::pnn {

std::unique_ptr<DifferentiableCore> load_mlp_core(const nlohmann::json& j) {
  if (j.value("kind", std::string{}) != "mlp") return nullptr;
  return Mlp::from_json(j);
}

PersonalizedModel model_from_json(const nlohmann::json& j,
                                  const CoreLoader& loader) {
  if (j.value("format", std::string{}) != "apprentice-model v1") {
    throw std::invalid_argument("checkpoint: unsupported format");
  }
  auto core = loader(j.at("core"));
  if (!core) {
    throw std::invalid_argument("checkpoint: unknown core kind '" +
                                j.at("core").value("kind", std::string{"?"}) +
                                "'");
  }
  PersonalizedModel model(ModelSpec::from_json(j.at("spec")), std::move(core));
  model.embeddings() = EmbeddingTable::from_json(j.at("embeddings"));
  if (model.embeddings().dim() != model.spec().embedding_dim) {
    throw std::invalid_argument("checkpoint: embedding width mismatch");
  }
  return model;
}

void save_model(const PersonalizedModel& model,
                const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << model.to_json().dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

PersonalizedModel load_model(const std::filesystem::path& path,
                             const CoreLoader& loader) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("checkpoint " + path.string() + ": " + e.what());
  }
  return model_from_json(j, loader);
}

}  // namespace apprentice::pnn
