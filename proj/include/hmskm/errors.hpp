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

#include <stdexcept>
#include <string>

namespace hmskm {

// A conditional law was requested from a state where it is undefined,
// e.g. the reaction-type distribution when every propensity is zero.
class DegenerateStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure that the caller can usually repair by subdividing the
// offending time interval or rescaling the input.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every particle weight reached log-zero at a single observation, so the
// cloud carries no information forward. Captures where it happened.
class FilterCollapseError : public std::runtime_error {
 public:
  FilterCollapseError(const std::string& what, int event_index, double time,
                      int reaction, double gap)
      : std::runtime_error(what),
        event_index(event_index),
        time(time),
        reaction(reaction),
        gap(gap) {}

  int event_index;
  double time;
  int reaction;
  double gap;
};

}  // namespace hmskm
