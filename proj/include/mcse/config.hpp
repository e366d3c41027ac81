// Copyright 2026 The MCSE Lab Authors
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

#ifndef MCSE_CONFIG_HPP_
#define MCSE_CONFIG_HPP_

#include <filesystem>

#include "json.hpp"
#include "mcse/runner.hpp"
#include "mcse/synth.hpp"

namespace mcse {

// Flat JSON objects keyed by the field names (tau, tau_prime, lambda,
// learning_rate, batch_size, ...). Unknown keys are rejected.
nlohmann::json to_json(const TrainConfig& cfg);
void apply_json(TrainConfig& cfg, const nlohmann::json& j);

nlohmann::json to_json(const SynthConfig& cfg);
void apply_json(SynthConfig& cfg, const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace mcse

#endif  // MCSE_CONFIG_HPP_
