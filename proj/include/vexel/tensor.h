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
#include <span>
#include <vector>

#include "vexel/gemm.h"
#include "vexel/result.h"
#include "vexel/table.h"

namespace vexel {

// Dense copy of the qualifying vectors; matrix row j is source row
// source_row_ids[j].
struct GatheredBatch {
    SelectionVector source_row_ids;
    std::uint32_t dim = 0;
    std::vector<float> matrix;

    std::size_t
    rows() const noexcept {
        return source_row_ids.size();
    }
};

// Wall-clock split of one tensor_search call. The phases are measured back to
// back, so total() is the duration of the whole call minus argument checks.
// filter + gather together correspond to a single "filtering" stage when
// compared against a three-phase breakdown.
struct PhaseTimings {
    std::uint64_t filter_ns = 0;
    std::uint64_t gather_ns = 0;
    std::uint64_t normalize_ns = 0;
    std::uint64_t compute_ns = 0;
    std::uint64_t extract_ns = 0;

    std::uint64_t
    total() const noexcept {
        return filter_ns + gather_ns + normalize_ns + compute_ns + extract_ns;
    }
};

struct TensorOptions {
    GemmBackend backend = GemmBackend::kBlas;
    std::size_t threads = 1;
    // Score tile budget in floats; a tile is (query tile) x (data tile).
    std::size_t tile_floats = std::size_t{1} << 20;
    std::size_t max_query_tile = 256;
};

struct TensorOutput {
    SearchResult result;
    PhaseTimings timings;
    std::uint64_t distances_computed = 0;
};

// Throws InvalidArgument for a row id outside the table.
GatheredBatch
gather(const ColumnTable& table, const SelectionVector& sel);

// Filter -> gather -> normalize -> tiled S = Q * G^T -> per-query extraction.
// Unlike the per-tuple scan, a COSINE search over an unnormalized table is
// accepted: the gathered copy is normalized, the table is never modified.
TensorOutput
tensor_search(const ColumnTable& table, const QueryBatch& batch, const TensorOptions& options = {});

// scores is n_queries x ids.size(), row-major.
SearchResult
extract_results(std::span<const float> scores,
                std::size_t n_queries,
                const SelectionVector& ids,
                const SimilarityPredicate& mode);

}  // namespace vexel
