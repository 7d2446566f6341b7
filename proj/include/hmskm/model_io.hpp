// Copyright 2026 the hmskm authors
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

#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "hmskm/conjugate.hpp"
#include "hmskm/kinetics.hpp"
#include "hmskm/sis.hpp"

// External representations. Serialized regime and reaction indices are
// 1-based; in-memory indices are 0-based.
//
// Model descriptor (JSON): either a preset,
//
//   {"preset": "sis", "overrides": {"theta1": 0.25, "M0": 2, ...}}
//
// or an explicit system,
//
//   {
//     "species": ["I"],
//     "initial": {"x": [50], "regime": 1, "t": 0.0},
//     "horizon": 273.0,
//     "generator": [[-0.0164, 0.0164], [0.0055, -0.0055]],
//     "params": [
//       {"name": "theta1", "value": 0.235, "prior": [25, 100]},
//       {"name": "theta2", "value": 0.25, "prior": [25, 100], "known": true}
//     ],
//     "reactions": [
//       {"name": "infection", "delta": [1],
//        "law": {"name": "sis_infection", "N": 10000, "eta": 2},
//        "rate": {"param": "theta1", "coef": [1.0, 1.15]}},
//       {"name": "recovery", "delta": [-1],
//        "law": {"name": "linear"}, "rate": {"param": "theta2"}}
//     ]
//   }
//
// Event path (CSV): header `time,kind,value`; kind `event` rows carry the
// 1-based reaction index, kind `regime` rows the 1-based regime in force
// from that time. The horizon is not serialized; on load it defaults to
// the last row's time unless overridden.
namespace hmskm {

struct ModelBundle {
  ReactionSystem system;
  RegimeModel regimes;
  SystemState init;
  SufficientStats prior;
  ParamStatus status = ParamStatus::all_estimated(0);
  double horizon = 0.0;
};

ModelBundle bundle_from_sis(const SISParams& p);

ModelBundle load_model(const std::string& json_text);
ModelBundle load_model_file(const std::string& path);
std::string save_model(const ModelBundle& bundle);

EventPath read_event_path(std::istream& in,
                          std::optional<double> horizon = std::nullopt);
EventPath read_event_path_file(const std::string& path,
                               std::optional<double> horizon = std::nullopt);
void write_event_path(std::ostream& out, const EventPath& path);
void write_event_path_file(const std::string& path, const EventPath& p);

}  // namespace hmskm
