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
#include <optional>
#include <string>
#include <vector>

#include "vexel/hnsw.h"
#include "vexel/result.h"
#include "vexel/tensor.h"

namespace vexel {

enum class Strategy : std::uint8_t { kFunction, kExplicitSimd, kTensor, kHnswPre, kHnswPost };

const char*
to_string(Strategy s) noexcept;
// Accepts the CSV names; VECTORIZED is an alias of EXPLICIT_SIMD.
Strategy
parse_strategy(const std::string& name);

inline bool
is_probe(Strategy s) noexcept {
    return s == Strategy::kHnswPre || s == Strategy::kHnswPost;
}

inline constexpr int kCsvSchemaVersion = 1;

struct BenchRecord {
    Strategy strategy = Strategy::kFunction;
    std::size_t rows = 0;
    std::uint32_t dim = 0;
    std::size_t batch = 0;
    double selectivity = 0.0;
    std::size_t threads = 1;
    // Timed repeats are numbered from 0; the median row uses -1.
    int repeat_idx = 0;
    std::uint64_t wall_ns = 0;
    std::optional<PhaseTimings> phases;  // tensor only
    std::uint64_t distances_computed = 0;
    std::optional<double> recall;  // probe only
    std::optional<bool> verified;  // set when the sweep runs with verify on
    std::uint64_t rss_kb = 0;
    Metric metric = Metric::kCosine;
    SimilarityPredicate::Mode mode = SimilarityPredicate::Mode::kTopK;
    std::size_t k = 0;
    std::size_t ef_search = 0;

    bool
    is_median() const noexcept {
        return repeat_idx < 0;
    }
};

// Fixed column order; the first column carries kCsvSchemaVersion.
const std::vector<std::string>&
csv_columns();
void
write_csv_header(std::ostream& out);
void
write_csv_row(std::ostream& out, const BenchRecord& r);
// Columns are located by header name. A missing column or a schema version
// other than kCsvSchemaVersion is a FormatError.
std::vector<BenchRecord>
read_csv(std::istream& in);

struct SweepConfig {
    std::vector<Strategy> strategies{Strategy::kFunction, Strategy::kExplicitSimd, Strategy::kTensor};
    std::vector<std::size_t> rows{100000};
    std::vector<std::uint32_t> dims{64, 256, 1024};
    std::vector<std::size_t> batches{1, 100, 10000};
    std::vector<double> selectivities{1.0};
    Metric metric = Metric::kCosine;
    SimilarityPredicate::Mode mode = SimilarityPredicate::Mode::kTopK;
    float tau = 0.9f;
    std::size_t k = 64;
    std::size_t repeats = 5;
    std::uint64_t seed = 42;
    std::size_t threads = 1;
    std::size_t hnsw_M = 64;
    std::size_t hnsw_ef_construction = 512;
    std::size_t hnsw_ef_search = 256;
    double overfetch = 4.0;
    bool verify = false;
    double recall_floor = 0.9;
    std::size_t recall_queries = 100;
    std::string output;

    SimilarityPredicate
    similarity() const;
    std::size_t
    cell_count() const noexcept;
    // 1M rows and 48 threads.
    void
    apply_full_scale();
    void
    validate() const;

    static SweepConfig
    parse(std::istream& in);
    static SweepConfig
    parse(const std::filesystem::path& path);
};

struct SweepOutcome {
    std::vector<BenchRecord> records;
    bool all_verified = true;
};

// Cells run in config order: rows, dims, strategies, batches, selectivities.
// Each cell writes R repeat rows followed by its median row. Pass nullptr to
// skip CSV output.
SweepOutcome
run_sweep(const SweepConfig& config, std::ostream* csv);

struct CellSpec {
    Strategy strategy = Strategy::kTensor;
    std::size_t rows = 10000;
    std::uint32_t dim = 64;
    std::size_t batch = 1;
    double selectivity = 1.0;
};

struct VerifyReport {
    bool pass = false;
    std::size_t mismatches = 0;  // scans: rows outside the boundary band
    std::size_t excused = 0;     // scans: differing rows inside the band
    std::optional<double> recall;
    std::string line;
};

// Scans and the tensor path must match the scalar per-tuple oracle; probes
// must reach config.recall_floor.
VerifyReport
verify_cell(const CellSpec& cell, const SweepConfig& config);

struct ExactComparison {
    std::size_t mismatches = 0;
    std::size_t excused = 0;

    bool
    equal() const noexcept {
        return mismatches == 0;
    }
};

// Row-id set comparison per query. A row present on one side only is excused
// when its score lies within eps of the boundary: tau for THRESHOLD, the
// reference's k-th score for a full TOP_K list.
ExactComparison
compare_exact(const SearchResult& reference,
              const SearchResult& candidate,
              const SimilarityPredicate& sim,
              double eps = 1e-3);

// Resident set size of this process in KiB, 0 where unavailable.
std::uint64_t
current_rss_kb();

}  // namespace vexel
