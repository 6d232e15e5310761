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

#include "vexel/similarity.h"

#include <string>

#include "vexel/errors.h"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define VEXEL_X86 1
#endif

namespace vexel {

float
dot_scalar(const float* a, const float* b, std::size_t n) noexcept {
    float sum = 0.0f;
    for (std::size_t i = 0; i < n; ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

#ifdef VEXEL_X86

namespace {

__attribute__((target("avx512f"))) float
dot_avx512(const float* a, const float* b, std::size_t n) noexcept {
    __m512 acc0 = _mm512_setzero_ps();
    __m512 acc1 = _mm512_setzero_ps();
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        acc0 = _mm512_fmadd_ps(_mm512_loadu_ps(a + i), _mm512_loadu_ps(b + i), acc0);
        acc1 = _mm512_fmadd_ps(_mm512_loadu_ps(a + i + 16), _mm512_loadu_ps(b + i + 16), acc1);
    }
    if (i + 16 <= n) {
        acc0 = _mm512_fmadd_ps(_mm512_loadu_ps(a + i), _mm512_loadu_ps(b + i), acc0);
        i += 16;
    }
    if (i < n) {
        const __mmask16 mask = static_cast<__mmask16>((1u << (n - i)) - 1u);
        acc1 = _mm512_fmadd_ps(_mm512_maskz_loadu_ps(mask, a + i), _mm512_maskz_loadu_ps(mask, b + i),
                               acc1);
    }
    return _mm512_reduce_add_ps(_mm512_add_ps(acc0, acc1));
}

__attribute__((target("avx2,fma"))) float
dot_avx2(const float* a, const float* b, std::size_t n) noexcept {
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
    }
    if (i + 8 <= n) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
        i += 8;
    }
    __m256 acc = _mm256_add_ps(acc0, acc1);
    __m128 lo = _mm_add_ps(_mm256_castps256_ps128(acc), _mm256_extractf128_ps(acc, 1));
    lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 0x55));
    float sum = _mm_cvtss_f32(lo);
    for (; i < n; ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

enum class Isa { kScalar, kAvx2, kAvx512 };

Isa
detect_isa() noexcept {
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx512f")) {
        return Isa::kAvx512;
    }
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        return Isa::kAvx2;
    }
    return Isa::kScalar;
}

const Isa kIsa = detect_isa();

DotFn
resolve_vectorized() noexcept {
    switch (kIsa) {
        case Isa::kAvx512:
            return dot_avx512;
        case Isa::kAvx2:
            return dot_avx2;
        case Isa::kScalar:
            break;
    }
    return dot_scalar;
}

const DotFn kVectorizedDot = resolve_vectorized();

}  // namespace

float
dot_vectorized(const float* a, const float* b, std::size_t n) noexcept {
    return kVectorizedDot(a, b, n);
}

const char*
vectorized_isa() noexcept {
    switch (kIsa) {
        case Isa::kAvx512:
            return "avx512";
        case Isa::kAvx2:
            return "avx2";
        case Isa::kScalar:
            break;
    }
    return "scalar";
}

#else

float
dot_vectorized(const float* a, const float* b, std::size_t n) noexcept {
    return dot_scalar(a, b, n);
}

const char*
vectorized_isa() noexcept {
    return "scalar";
}

#endif

DotFn
dot_function(Kernel kernel) noexcept {
#ifdef VEXEL_X86
    return kernel == Kernel::kScalar ? dot_scalar : kVectorizedDot;
#else
    (void)kernel;
    return dot_scalar;
#endif
}

float
similarity(std::span<const float> a, std::span<const float> b, Metric /*metric*/, Kernel kernel) {
    if (a.size() != b.size()) {
        throw InvalidArgument("similarity operands differ in length (" + std::to_string(a.size()) +
                              " vs " + std::to_string(b.size()) + ")");
    }
    return dot_function(kernel)(a.data(), b.data(), a.size());
}

}  // namespace vexel
