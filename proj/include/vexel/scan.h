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
#include <vector>

#include "vexel/result.h"
#include "vexel/similarity.h"
#include "vexel/table.h"

namespace vexel {

struct ScanOptions {
    Kernel kernel = Kernel::kVectorized;
    std::size_t threads = 1;
};

struct ScanStats {
    std::uint64_t distances_computed = 0;
    std::uint64_t rows_qualified = 0;
};

// Exhaustive per-tuple scan (1:1 for one query, N:1 for batches). The
// relational predicate is checked first; disqualified rows never reach the
// similarity kernel.
SearchResult
scan_per_tuple(const ColumnTable& table,
               const QueryBatch& batch,
               const ScanOptions& options = {},
               ScanStats* stats = nullptr);

// Shared argument checks for the scan family. Returns the query matrix ready
// for execution (normalized copies for COSINE).
std::vector<float>
prepare_queries(const QueryBatch& batch, std::uint32_t table_dim);

}  // namespace vexel
