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

#include "vexel/tensor.h"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <numeric>
#include <string>

#include "vexel/scan.h"

namespace vexel {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t
elapsed_ns(Clock::time_point from, Clock::time_point to) {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(to - from).count());
}

}  // namespace

GatheredBatch
gather(const ColumnTable& table, const SelectionVector& sel) {
    const std::uint32_t dim = table.dim();
    const std::size_t rows = table.row_count();
    GatheredBatch out;
    out.dim = dim;
    out.source_row_ids = sel;
    out.matrix.resize(sel.size() * dim);
    const float* src = table.vectors().data().data();
    float* dst = out.matrix.data();
    for (RowId r : sel) {
        if (r >= rows) {
            throw InvalidArgument("selection vector references row " + std::to_string(r) +
                                  " but the table has " + std::to_string(rows) + " rows");
        }
        std::copy_n(src + static_cast<std::size_t>(r) * dim, dim, dst);
        dst += dim;
    }
    return out;
}

SearchResult
extract_results(std::span<const float> scores,
                std::size_t n_queries,
                const SelectionVector& ids,
                const SimilarityPredicate& mode) {
    mode.validate();
    if (scores.size() != n_queries * ids.size()) {
        throw InvalidArgument("score matrix is " + std::to_string(scores.size()) +
                              " entries, expected " + std::to_string(n_queries) + " x " +
                              std::to_string(ids.size()));
    }
    SearchResult out;
    out.per_query.reserve(n_queries);
    const std::size_t m = ids.size();
    for (std::size_t q = 0; q < n_queries; ++q) {
        HitCollector sink(mode);
        const float* row = scores.data() + q * m;
        for (std::size_t j = 0; j < m; ++j) {
            sink.offer(ids[j], row[j]);
        }
        out.per_query.push_back(std::move(sink).finish());
    }
    return out;
}

TensorOutput
tensor_search(const ColumnTable& table, const QueryBatch& batch, const TensorOptions& options) {
    TensorOutput out;
    auto& t = out.timings;
    const std::uint32_t dim = table.dim();
    const std::size_t n_queries = batch.size();
    if (batch.dim != dim) {
        throw InvalidArgument("query dimensionality " + std::to_string(batch.dim) +
                              " does not match table dimensionality " + std::to_string(dim));
    }
    batch.similarity.validate();
    if (batch.predicate) {
        (void)table.column(batch.predicate->column);
    }

    const auto t_start = Clock::now();

    // Filter.
    SelectionVector ids;
    const bool filtered = batch.predicate.has_value();
    if (filtered) {
        ids = evaluate_predicate(table, *batch.predicate);
    }
    const auto t_filter = Clock::now();
    t.filter_ns = elapsed_ns(t_start, t_filter);

    // Gather. Without a predicate the table storage feeds the product
    // directly, unless cosine needs a normalized copy.
    const bool need_data_norm =
        batch.similarity.metric == Metric::kCosine && !table.vectors().normalized();
    GatheredBatch gathered;
    const float* data = table.vectors().data().data();
    std::size_t m = table.row_count();
    if (filtered || need_data_norm) {
        if (!filtered) {
            ids.resize(table.row_count());
            std::iota(ids.begin(), ids.end(), RowId{0});
        }
        gathered = gather(table, ids);
        data = gathered.matrix.data();
        m = gathered.rows();
    }
    const auto t_gather = Clock::now();
    t.gather_ns = elapsed_ns(t_filter, t_gather);

    // Normalize queries always (for cosine) and the gathered copy if needed.
    const std::vector<float> queries = prepare_queries(batch, dim);
    if (need_data_norm) {
        for (std::size_t j = 0; j < m; ++j) {
            std::span<float> row(gathered.matrix.data() + j * dim, dim);
            if (normalize_in_place(row) == 0.0) {
                throw DegenerateVector(ids[j], "row " + std::to_string(ids[j]) + " has zero norm");
            }
        }
    }
    const auto t_norm = Clock::now();
    t.normalize_ns = elapsed_ns(t_gather, t_norm);

    out.result.per_query.resize(n_queries);
    out.distances_computed = static_cast<std::uint64_t>(n_queries) * m;
    if (m == 0) {
        t.compute_ns = 0;
        t.extract_ns = elapsed_ns(t_norm, Clock::now());
        return out;
    }

    // Tiled product + extraction. Query tiles are independent; each owns the
    // collectors of its queries, so results do not depend on thread count.
    const std::size_t q_tile = std::min({n_queries, options.max_query_tile,
                                         std::max<std::size_t>(1, options.tile_floats / 64)});
    const std::size_t d_tile = std::min(m, std::max<std::size_t>(options.tile_floats / q_tile, 64));
    const std::size_t n_qtiles = (n_queries + q_tile - 1) / q_tile;
    const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, n_qtiles);
    if (threads > 1) {
        set_blas_threads(1);
    } else {
        set_blas_threads(static_cast<int>(std::max<std::size_t>(1, options.threads)));
    }
    std::vector<std::uint64_t> compute_by_tile(n_qtiles, 0);
    std::vector<std::uint64_t> extract_by_tile(n_qtiles, 0);
    const auto identity_id = [&](std::size_t j) -> RowId {
        return filtered || need_data_norm ? ids[j] : static_cast<RowId>(j);
    };

#pragma omp parallel num_threads(static_cast<int>(threads))
    {
        std::vector<float> scores(q_tile * d_tile);
#pragma omp for schedule(static, 1)
        for (std::size_t qt = 0; qt < n_qtiles; ++qt) {
            const std::size_t q0 = qt * q_tile;
            const std::size_t nq = std::min(q_tile, n_queries - q0);
            std::vector<HitCollector> sinks(nq, HitCollector(batch.similarity));
            for (std::size_t j0 = 0; j0 < m; j0 += d_tile) {
                const std::size_t nd = std::min(d_tile, m - j0);
                const auto c0 = Clock::now();
                gemm_abt(queries.data() + q0 * dim, nq, data + j0 * dim, nd, dim, scores.data(), nd,
                         options.backend);
                const auto c1 = Clock::now();
                for (std::size_t q = 0; q < nq; ++q) {
                    const float* row = scores.data() + q * nd;
                    auto& sink = sinks[q];
                    for (std::size_t j = 0; j < nd; ++j) {
                        sink.offer(identity_id(j0 + j), row[j]);
                    }
                }
                const auto c2 = Clock::now();
                compute_by_tile[qt] += elapsed_ns(c0, c1);
                extract_by_tile[qt] += elapsed_ns(c1, c2);
            }
            for (std::size_t q = 0; q < nq; ++q) {
                out.result.per_query[q0 + q] = std::move(sinks[q]).finish();
            }
        }
    }
    const auto t_loop = Clock::now();
    // Freeing the gathered copy is part of the call's cost; it is booked to
    // extract so the phases cover the whole call.
    gathered = GatheredBatch{};
    SelectionVector{}.swap(ids);
    const auto t_end = Clock::now();

    // Attribute the tiled section to compute/extract in proportion to the
    // per-tile measurements; the shares sum to the section's wall time.
    const std::uint64_t section = elapsed_ns(t_norm, t_loop);
    const std::uint64_t c_sum = std::accumulate(compute_by_tile.begin(), compute_by_tile.end(),
                                                std::uint64_t{0});
    const std::uint64_t e_sum = std::accumulate(extract_by_tile.begin(), extract_by_tile.end(),
                                                std::uint64_t{0});
    const std::uint64_t busy = c_sum + e_sum;
    t.compute_ns = busy == 0 ? section
                             : static_cast<std::uint64_t>(static_cast<long double>(section) *
                                                          c_sum / busy);
    t.extract_ns = section - t.compute_ns + elapsed_ns(t_loop, t_end);
    return out;
}

}  // namespace vexel
