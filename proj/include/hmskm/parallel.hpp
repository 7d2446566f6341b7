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

#include <cstdlib>
#include <thread>
#include <vector>

namespace hmskm {

// Worker count from HMSKM_THREADS; unset, empty, or 0 means sequential.
// Parallel callers must write only to disjoint slots, so results are
// identical at every setting.
inline int env_thread_count() {
  const char* v = std::getenv("HMSKM_THREADS");
  if (!v || !*v) return 1;
  const long n = std::strtol(v, nullptr, 10);
  return n > 1 ? static_cast<int>(n) : 1;
}

// Runs fn(begin, end) over a partition of [0, n). Sequential when
// nthreads <= 1; otherwise one thread per contiguous chunk.
template <class Fn>
void parallel_for(int nthreads, int n, Fn&& fn) {
  if (nthreads <= 1 || n < 2 * nthreads) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  const int chunk = (n + nthreads - 1) / nthreads;
  for (int k = 0; k < nthreads; ++k) {
    const int b = k * chunk;
    const int e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace hmskm
