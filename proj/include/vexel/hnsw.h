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
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "vexel/result.h"
#include "vexel/similarity.h"
#include "vexel/table.h"

namespace vexel {

struct HnswParams {
    std::size_t M = 16;  // per-node cap on layers >= 1; layer 0 allows 2M
    std::size_t ef_construction = 200;
    std::size_t ef_search = 256;
    // kCosine means inner product over a normalized vector column.
    Metric metric = Metric::kCosine;
    // Level multiplier; 0 selects 1 / ln(M).
    double level_lambda = 0.0;

    std::size_t
    max_degree(int layer) const noexcept {
        return layer == 0 ? 2 * M : M;
    }

    double
    effective_lambda() const;

    void
    validate() const;

    friend bool
    operator==(const HnswParams&, const HnswParams&) = default;
};

struct FilterMode {
    enum class Kind : std::uint8_t { kNone, kPre, kPost };

    Kind kind = Kind::kNone;
    std::optional<RelationalPredicate> predicate;
    double overfetch_factor = 1.0;

    static FilterMode
    none() {
        return {};
    }

    static FilterMode
    pre(RelationalPredicate pred) {
        return {Kind::kPre, std::move(pred), 1.0};
    }

    static FilterMode
    post(RelationalPredicate pred, double overfetch_factor = 1.0) {
        return {Kind::kPost, std::move(pred), overfetch_factor};
    }
};

struct ProbeStats {
    std::uint64_t hops = 0;       // nodes expanded, all layers
    std::uint64_t distances = 0;  // similarity evaluations
    bool truncated = false;       // PRE traversal hit the visited-node cap
};

struct ProbeResult {
    std::vector<Hit> hits;  // rank order
    ProbeStats stats;
};

class VisitedPool;

// Layered proximity graph. Node ids are the row ids of the table the index
// was built over, so relational columns can be consulted during traversal.
class HnswIndex {
public:
    HnswIndex(HnswIndex&&) noexcept;
    HnswIndex&
    operator=(HnswIndex&&) noexcept;
    ~HnswIndex();

    // threads == 1 inserts serially and yields a graph that is a pure function
    // of (table, params, seed). Larger values insert concurrently.
    static HnswIndex
    build(std::shared_ptr<const ColumnTable> table,
          const HnswParams& params,
          std::uint64_t seed,
          std::size_t threads = 1);

    // ef_search == 0 uses params().ef_search.
    ProbeResult
    search(std::span<const float> query,
           std::size_t k,
           std::size_t ef_search = 0,
           const FilterMode& filter = FilterMode::none()) const;

    std::size_t
    size() const noexcept {
        return levels_.size();
    }

    int
    max_level() const noexcept {
        return max_level_;
    }

    RowId
    entry_point() const noexcept {
        return entry_point_;
    }

    int
    level(RowId node) const noexcept {
        return levels_[node];
    }

    std::span<const RowId>
    neighbors(RowId node, int layer) const noexcept;

    const HnswParams&
    params() const noexcept {
        return params_;
    }

    std::uint64_t
    seed() const noexcept {
        return seed_;
    }

    const ColumnTable&
    table() const noexcept {
        return *table_;
    }

    bool
    same_graph(const HnswIndex& other) const;

    void
    save(std::ostream& out) const;
    void
    save(const std::filesystem::path& path) const;
    static HnswIndex
    load(std::istream& in, std::shared_ptr<const ColumnTable> table);
    static HnswIndex
    load(const std::filesystem::path& path, std::shared_ptr<const ColumnTable> table);

private:
    struct Candidate {
        float dist;
        RowId id;
    };

    HnswIndex(std::shared_ptr<const ColumnTable> table, const HnswParams& params, std::uint64_t seed);

    float
    distance(const float* query, RowId node) const noexcept;
    std::uint32_t*
    links(RowId node, int layer) noexcept;
    const std::uint32_t*
    links(RowId node, int layer) const noexcept;

    RowId
    greedy_descend(const float* query, RowId entry, int from_layer, int to_layer, ProbeStats& stats)
        const;
    std::vector<Candidate>
    search_layer(const float* query,
                 RowId entry,
                 std::size_t ef,
                 int layer,
                 const RelationalPredicate* predicate,
                 std::size_t hop_cap,
                 ProbeStats& stats) const;
    std::vector<Candidate>
    select_neighbors(std::vector<Candidate> candidates, std::size_t max_count) const;
    void
    insert(RowId node);
    void
    connect(RowId node, int layer, const std::vector<Candidate>& selected);

    std::shared_ptr<const ColumnTable> table_;
    HnswParams params_;
    std::uint64_t seed_ = 0;
    std::vector<std::uint8_t> levels_;
    // Layer 0: fixed stride (2M + 1) per node, count first. Upper layers:
    // per node, level * (M + 1) words.
    std::vector<std::uint32_t> base_links_;
    std::vector<std::vector<std::uint32_t>> upper_links_;
    RowId entry_point_ = 0;
    int max_level_ = -1;

    std::unique_ptr<std::mutex[]> node_locks_;
    std::unique_ptr<std::mutex> global_lock_;
    std::unique_ptr<VisitedPool> visited_;
};

// Mean over queries of |approx ∩ oracle| / |oracle|. The oracle lists are the
// exact top-k; a query whose oracle list is empty contributes 1.
double
recall(const std::vector<std::vector<Hit>>& approx, const SearchResult& oracle);

// Runs index.search per query and scores it against the exhaustive oracle.
double
measure_recall(const HnswIndex& index,
               const QueryBatch& queries,
               std::size_t k,
               std::size_t ef_search,
               const FilterMode& filter,
               const SearchResult& oracle);

}  // namespace vexel
