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

#include <cstddef>
#include <cstdint>

namespace vexel {

enum class GemmBackend : std::uint8_t {
    kBlas,     // system BLAS sgemm when compiled in, otherwise kBlocked
    kBlocked,  // portable cache-blocked kernel
};

// scores[i * ldc + j] = sum_d a[i * dim + d] * b[j * dim + d]
// for i < m, j < n. Both operands are row-major with stride dim.
void
gemm_abt(const float* a,
         std::size_t m,
         const float* b,
         std::size_t n,
         std::size_t dim,
         float* scores,
         std::size_t ldc,
         GemmBackend backend);

bool
blas_available() noexcept;

// Caps the BLAS library's own worker pool; no-op without BLAS.
void
set_blas_threads(int threads) noexcept;

// Kernel family the BLAS library selected at load time, or "none".
const char*
blas_core_name() noexcept;

// OpenBLAS picks its kernels once, at load time, from CPUID. Some virtual
// CPUs are misidentified as SSE3-era parts, which costs about 6x in sgemm.
// When the detected core is weaker than what the CPU advertises and
// OPENBLAS_CORETYPE is unset, this sets it and re-executes the program with
// the same argv. Returns normally otherwise. Call first thing in main().
void
reexec_with_native_blas_kernels(char** argv) noexcept;

}  // namespace vexel
