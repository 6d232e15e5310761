// Copyright 2026-present the vexel project
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

// xoshiro256** (Blackman & Vigna, 2018) seeded through splitmix64. Both are
// fully specified integer recurrences, so any language can regenerate the
// exact same streams from a 64-bit seed.

#include <array>
#include <cstdint>

namespace vexel {

// Identifier written into persisted tables so readers know which generator
// produced the data.
inline constexpr std::uint32_t kPrngXoshiro256StarStar = 1;

class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {
    }

    constexpr std::uint64_t
    next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

class Xoshiro256StarStar {
public:
    using result_type = std::uint64_t;

    explicit constexpr Xoshiro256StarStar(std::uint64_t seed) noexcept {
        SplitMix64 sm(seed);
        for (auto& word : s_) {
            word = sm.next();
        }
    }

    static constexpr result_type
    min() noexcept {
        return 0;
    }

    static constexpr result_type
    max() noexcept {
        return ~result_type{0};
    }

    constexpr result_type
    operator()() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [-1, 1) from the top 24 bits; every value is exactly
    // representable as a float.
    constexpr float
    next_symmetric_float() noexcept {
        const auto bits = static_cast<std::int64_t>((*this)() >> 40);
        return static_cast<float>(bits - (std::int64_t{1} << 23)) * 0x1.0p-23f;
    }

    // Uniform in (0, 1] from the top 53 bits.
    constexpr double
    next_open_unit() noexcept {
        return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
    }

private:
    static constexpr std::uint64_t
    rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> s_{};
};

}  // namespace vexel
