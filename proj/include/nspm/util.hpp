// Copyright 2026 The nspm Authors
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

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace nspm {

// splitmix64 finalizer; used to derive independent streams from one seed.
std::uint64_t mix64(std::uint64_t x);
// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view s);

// Seeded generator with platform-independent derived draws (the standard
// distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(engine_() % static_cast<std::uint64_t>(n));
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Writes to `path.tmp` and renames over `path`.
void write_file_atomic(const std::string& path, std::string_view content);
std::string read_file(const std::string& path);
std::vector<std::string> read_lines(const std::string& path);

}  // namespace nspm
