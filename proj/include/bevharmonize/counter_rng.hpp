// Copyright 2026 The bevharmonize Authors.
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

#ifndef BEVHARMONIZE_COUNTER_RNG_HPP_
#define BEVHARMONIZE_COUNTER_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>

namespace bevh
{

/// Stateless keyed generator: every draw is a pure function of
/// (seed, stream, index, lane). Parallel callers get the same numbers as a
/// serial loop because nothing is carried between draws.
class CounterRng
{
public:
  explicit constexpr CounterRng(std::uint64_t seed) : seed_(seed) {}

  constexpr std::uint64_t seed() const { return seed_; }

  constexpr std::uint64_t bits(
    std::uint64_t stream, std::uint64_t index, std::uint64_t lane = 0) const
  {
    std::uint64_t x = mix(seed_ ^ 0x6a09e667f3bcc908ULL);
    x = mix(x ^ stream);
    x = mix(x ^ (index * 0x9e3779b97f4a7c15ULL));
    x = mix(x ^ (lane + 0xbb67ae8584caa73bULL));
    return x;
  }

  /// Uniform on [0, 1).
  constexpr double uniform(std::uint64_t stream, std::uint64_t index, std::uint64_t lane = 0) const
  {
    return static_cast<double>(bits(stream, index, lane) >> 11) * 0x1.0p-53;
  }

  double uniform(
    double lo, double hi, std::uint64_t stream, std::uint64_t index, std::uint64_t lane = 0) const
  {
    return lo + (hi - lo) * uniform(stream, index, lane);
  }

  /// Standard normal via Box-Muller over lanes (2*lane, 2*lane + 1).
  double normal(std::uint64_t stream, std::uint64_t index, std::uint64_t lane = 0) const
  {
    const double u1 = static_cast<double>((bits(stream, index, 2 * lane) >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform(stream, index, 2 * lane + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  // splitmix64 finalizer
  static constexpr std::uint64_t mix(std::uint64_t z)
  {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
};

}  // namespace bevh

#endif  // BEVHARMONIZE_COUNTER_RNG_HPP_
