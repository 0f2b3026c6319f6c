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

#pragma once

#include <filesystem>
#include <functional>
#include <memory>

#include "json.hpp"

#include "apprentice/pnn/personalized_model.hpp"

namespace apprentice::pnn {

/// Rebuilds a core from its JSON form; returns nullptr for unknown kinds.
using CoreLoader =
    std::function<std::unique_ptr<DifferentiableCore>(const nlohmann::json&)>;

/// Loader that understands MLP cores only.
std::unique_ptr<DifferentiableCore> load_mlp_core(const nlohmann::json& j);

PersonalizedModel model_from_json(const nlohmann::json& j,
                                  const CoreLoader& loader = load_mlp_core);

void save_model(const PersonalizedModel& model,
                const std::filesystem::path& path);
PersonalizedModel load_model(const std::filesystem::path& path,
                             const CoreLoader& loader = load_mlp_core);

}  // namespace apprentice::pnn
