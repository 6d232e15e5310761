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

#include "vexel/scan.h"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <string>

namespace vexel {

namespace {

// Rows per block so one block of the vector column stays around L2-resident
// while every assigned query streams over it.
std::size_t
block_rows(std::uint32_t dim) {
    constexpr std::size_t kBlockBytes = 256 * 1024;
    return std::clamp<std::size_t>(kBlockBytes / (sizeof(float) * dim), 16, 4096);
}

struct Partition {
    std::size_t row_begin;
    std::size_t row_end;
    std::size_t query_begin;
    std::size_t query_end;
};

void
scan_partition(const ColumnTable& table,
               const std::optional<RelationalPredicate>& predicate,
               const float* queries,
               const Partition& part,
               DotFn dot,
               std::vector<HitCollector>& collectors,
               std::uint64_t& distances,
               std::uint64_t& qualified) {
    const std::uint32_t dim = table.dim();
    const float* data = table.vectors().data().data();
    const std::uint64_t* keys =
        predicate ? table.column(predicate->column).values.data() : nullptr;
    const std::size_t step = block_rows(dim);
    std::vector<RowId> block;
    block.reserve(step);
    for (std::size_t r0 = part.row_begin; r0 < part.row_end; r0 += step) {
        const std::size_t r1 = std::min(part.row_end, r0 + step);
        block.clear();
        for (std::size_t r = r0; r < r1; ++r) {
            if (keys == nullptr || predicate->matches(keys[r])) {
                block.push_back(static_cast<RowId>(r));
            }
        }
        qualified += block.size();
        for (std::size_t q = part.query_begin; q < part.query_end; ++q) {
            const float* qv = queries + q * dim;
            auto& sink = collectors[q - part.query_begin];
            for (RowId r : block) {
                sink.offer(r, dot(qv, data + static_cast<std::size_t>(r) * dim, dim));
            }
        }
        distances += block.size() * (part.query_end - part.query_begin);
    }
}

}  // namespace

void
SimilarityPredicate::validate() const {
    if (mode == Mode::kTopK && k < 1) {
        throw InvalidArgument("top-k search requires k >= 1");
    }
    if (mode == Mode::kThreshold && metric == Metric::kCosine && !(tau >= -1.0f && tau <= 1.0f)) {
        throw InvalidArgument("cosine threshold must lie in [-1, 1]");
    }
}

std::vector<float>
prepare_queries(const QueryBatch& batch, std::uint32_t table_dim) {
    if (batch.dim != table_dim) {
        throw InvalidArgument("query dimensionality " + std::to_string(batch.dim) +
                              " does not match table dimensionality " + std::to_string(table_dim));
    }
    if (batch.vectors.empty() || batch.vectors.size() % batch.dim != 0) {
        throw InvalidArgument("query batch must hold N >= 1 complete vectors");
    }
    batch.similarity.validate();
    if (batch.predicate) {
        batch.predicate->validate();
    }
    std::vector<float> queries = batch.vectors;
    for (float v : queries) {
        if (!std::isfinite(v)) {
            throw InvalidArgument("query vectors must be finite");
        }
    }
    if (batch.similarity.metric == Metric::kCosine) {
        for (std::size_t q = 0; q < batch.size(); ++q) {
            std::span<float> row(queries.data() + q * batch.dim, batch.dim);
            if (normalize_in_place(row) == 0.0) {
                throw InvalidArgument("query " + std::to_string(q) +
                                      " has zero norm; cosine is undefined");
            }
        }
    }
    return queries;
}

SearchResult
scan_per_tuple(const ColumnTable& table,
               const QueryBatch& batch,
               const ScanOptions& options,
               ScanStats* stats) {
    const std::vector<float> queries = prepare_queries(batch, table.dim());
    if (batch.similarity.metric == Metric::kCosine && !table.vectors().normalized()) {
        throw ContractViolation("cosine scan requires a normalized vector column");
    }
    if (batch.predicate) {
        (void)table.column(batch.predicate->column);
    }

    const std::size_t n_queries = batch.size();
    const std::size_t rows = table.row_count();
    const std::size_t threads = std::max<std::size_t>(1, options.threads);
    const DotFn dot = dot_function(options.kernel);

    SearchResult result;
    result.per_query.resize(n_queries);
    std::uint64_t distances = 0;
    std::uint64_t qualified = 0;

    if (n_queries >= threads || rows < threads) {
        // Query-parallel: each worker owns a contiguous range of queries and
        // scans all rows for them.
        const std::size_t workers = std::min(threads, n_queries);
        std::vector<std::uint64_t> dist_by_worker(workers, 0);
        std::vector<std::uint64_t> qual_by_worker(workers, 0);
#pragma omp parallel for num_threads(static_cast<int>(workers)) schedule(static, 1)
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t q0 = n_queries * w / workers;
            const std::size_t q1 = n_queries * (w + 1) / workers;
            std::vector<HitCollector> sinks(q1 - q0, HitCollector(batch.similarity));
            scan_partition(table, batch.predicate, queries.data(), {0, rows, q0, q1}, dot, sinks,
                           dist_by_worker[w], qual_by_worker[w]);
            for (std::size_t q = q0; q < q1; ++q) {
                result.per_query[q] = std::move(sinks[q - q0]).finish();
            }
        }
        for (std::size_t w = 0; w < workers; ++w) {
            distances += dist_by_worker[w];
        }
        qualified = workers > 0 ? qual_by_worker[0] : 0;
    } else {
        // Row-parallel: each worker owns a row range for every query; partial
        // collectors merge in row order so THRESHOLD output stays sorted.
        std::vector<std::vector<HitCollector>> partial(
            threads, std::vector<HitCollector>(n_queries, HitCollector(batch.similarity)));
        std::vector<std::uint64_t> dist_by_worker(threads, 0);
        std::vector<std::uint64_t> qual_by_worker(threads, 0);
#pragma omp parallel for num_threads(static_cast<int>(threads)) schedule(static, 1)
        for (std::size_t w = 0; w < threads; ++w) {
            const std::size_t r0 = rows * w / threads;
            const std::size_t r1 = rows * (w + 1) / threads;
            scan_partition(table, batch.predicate, queries.data(), {r0, r1, 0, n_queries}, dot,
                           partial[w], dist_by_worker[w], qual_by_worker[w]);
        }
        for (std::size_t q = 0; q < n_queries; ++q) {
            HitCollector merged(batch.similarity);
            for (std::size_t w = 0; w < threads; ++w) {
                merged.merge(partial[w][q]);
            }
            result.per_query[q] = std::move(merged).finish();
        }
        for (std::size_t w = 0; w < threads; ++w) {
            distances += dist_by_worker[w];
            qualified += qual_by_worker[w];
        }
    }

    if (stats != nullptr) {
        stats->distances_computed = distances;
        stats->rows_qualified = qualified;
    }
    return result;
}

}  // namespace vexel
