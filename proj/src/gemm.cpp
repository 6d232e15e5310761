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

#include "vexel/gemm.h"

#include <unistd.h>

#include <Eigen/Core>
#include <cstdlib>
#include <cstring>

#ifdef VEXEL_HAVE_CBLAS
#include <cblas.h>
#endif

namespace vexel {

namespace {

using RowMajor = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using OutMap = Eigen::Map<RowMajor, Eigen::Unaligned, Eigen::OuterStride<>>;

void
gemm_blocked(const float* a,
             std::size_t m,
             const float* b,
             std::size_t n,
             std::size_t dim,
             float* scores,
             std::size_t ldc) {
    const auto rows_a = static_cast<Eigen::Index>(m);
    const auto rows_b = static_cast<Eigen::Index>(n);
    const auto cols = static_cast<Eigen::Index>(dim);
    ConstMap lhs(a, rows_a, cols);
    ConstMap rhs(b, rows_b, cols);
    OutMap out(scores, rows_a, rows_b, Eigen::OuterStride<>(static_cast<Eigen::Index>(ldc)));
    out.noalias() = lhs * rhs.transpose();
}

}  // namespace

void
gemm_abt(const float* a,
         std::size_t m,
         const float* b,
         std::size_t n,
         std::size_t dim,
         float* scores,
         std::size_t ldc,
         GemmBackend backend) {
    if (m == 0 || n == 0) {
        return;
    }
#ifdef VEXEL_HAVE_CBLAS
    if (backend == GemmBackend::kBlas) {
        if (m == 1) {
            // One query: a matrix-vector product, scores = B * a.
            cblas_sgemv(CblasRowMajor, CblasNoTrans, static_cast<int>(n), static_cast<int>(dim), 1.0f, b,
                        static_cast<int>(dim), a, 1, 0.0f, scores, 1);
            return;
        }
        cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(m),
                    static_cast<int>(n), static_cast<int>(dim), 1.0f, a, static_cast<int>(dim), b,
                    static_cast<int>(dim), 0.0f, scores, static_cast<int>(ldc));
        return;
    }
#else
    (void)backend;
#endif
    gemm_blocked(a, m, b, n, dim, scores, ldc);
}

bool
blas_available() noexcept {
#ifdef VEXEL_HAVE_CBLAS
    return true;
#else
    return false;
#endif
}

void
set_blas_threads(int threads) noexcept {
#ifdef VEXEL_HAVE_OPENBLAS
    openblas_set_num_threads(threads);
#else
    (void)threads;
#endif
}

const char*
blas_core_name() noexcept {
#ifdef VEXEL_HAVE_OPENBLAS
    return openblas_get_corename();
#elif defined(VEXEL_HAVE_CBLAS)
    return "cblas";
#else
    return "none";
#endif
}

void
reexec_with_native_blas_kernels(char** argv) noexcept {
#ifdef VEXEL_HAVE_OPENBLAS
    if (std::getenv("OPENBLAS_CORETYPE") != nullptr || argv == nullptr) {
        return;
    }
    __builtin_cpu_init();
    const char* want = nullptr;
    const char* const* adequate = nullptr;
    static const char* const kAvx512Cores[] = {"SkylakeX", "Cooperlake", "SapphireRapids", nullptr};
    static const char* const kAvx2Cores[] = {"Haswell",  "Zen",           "SkylakeX", "Cooperlake",
                                             "SapphireRapids", "Excavator", nullptr};
    if (__builtin_cpu_supports("avx512f") && __builtin_cpu_supports("avx512bw") &&
        __builtin_cpu_supports("avx512dq") && __builtin_cpu_supports("avx512vl")) {
        want = "SkylakeX";
        adequate = kAvx512Cores;
    } else if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        want = "Haswell";
        adequate = kAvx2Cores;
    } else {
        return;
    }
    const char* core = openblas_get_corename();
    for (const char* const* c = adequate; *c != nullptr; ++c) {
        if (core != nullptr && std::strcmp(core, *c) == 0) {
            return;
        }
    }
    // Setting the variable first also stops a second attempt if exec fails.
    ::setenv("OPENBLAS_CORETYPE", want, 1);
    ::execv("/proc/self/exe", argv);
#else
    (void)argv;
#endif
}

}  // namespace vexel
