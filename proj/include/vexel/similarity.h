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

#include <cstdint>
#include <span>

namespace vexel {

enum class Metric : std::uint8_t { kCosine, kInnerProduct };

enum class Kernel : std::uint8_t {
    kScalar,      // plain loop, one lane
    kVectorized,  // widest SIMD width the CPU reports at runtime
};

// Dot product; for kCosine both inputs must already be unit length.
// Throws InvalidArgument on length mismatch.
float
similarity(std::span<const float> a, std::span<const float> b, Metric metric, Kernel kernel);

// Unchecked kernels used on hot paths; n is the shared length.
float
dot_scalar(const float* a, const float* b, std::size_t n) noexcept;
float
dot_vectorized(const float* a, const float* b, std::size_t n) noexcept;

using DotFn = float (*)(const float*, const float*, std::size_t) noexcept;

DotFn
dot_function(Kernel kernel) noexcept;

// "avx512", "avx2", or "scalar": what kVectorized resolves to on this CPU.
const char*
vectorized_isa() noexcept;

}  // namespace vexel
