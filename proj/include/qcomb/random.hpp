// Copyright 2026 The qcomb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QCOMB_RANDOM_HPP
#define QCOMB_RANDOM_HPP

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace qcomb {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; decorrelates seeds derived from consecutive indices.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream for work item `index` of logical stream `stream` under `seed`.
inline Rng derive_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t a = mix64(seed ^ mix64(stream));
  const std::uint64_t b = mix64(a ^ mix64(index + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32)};
  return Rng(seq);
}

/// Multinomial draw of `n` trials over `probs` by sequential conditional binomials.
/// Negative entries are treated as zero; probabilities are renormalized.
template <std::size_t K>
std::array<std::int64_t, K> multinomial(std::int64_t n, std::array<double, K> probs, Rng& rng) {
  double total = 0.0;
  for (double& p : probs) {
    p = std::max(p, 0.0);
    total += p;
  }
  std::array<std::int64_t, K> out{};
  if (total <= 0.0 || n <= 0) return out;
  std::int64_t remaining = n;
  double mass_left = total;
  for (std::size_t k = 0; k + 1 < K && remaining > 0; ++k) {
    const double q = mass_left > 0.0 ? std::clamp(probs[k] / mass_left, 0.0, 1.0) : 0.0;
    std::binomial_distribution<std::int64_t> draw(remaining, q);
    out[k] = draw(rng);
    remaining -= out[k];
    mass_left -= probs[k];
  }
  out[K - 1] += remaining;
  return out;
}

}  // namespace qcomb

#endif  // QCOMB_RANDOM_HPP
