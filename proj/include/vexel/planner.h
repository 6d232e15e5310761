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
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vexel/hnsw.h"
#include "vexel/result.h"
#include "vexel/similarity.h"
#include "vexel/table.h"

namespace vexel {

enum class AccessPath : std::uint8_t { kScanPerTuple, kScanTensor, kProbePre };

const char*
to_string(AccessPath path) noexcept;

struct PathChoice {
    AccessPath path = AccessPath::kScanPerTuple;
    std::string reason;
};

struct QueryContext {
    double selectivity_est = 1.0;
    std::size_t batch_size = 1;
    std::uint32_t dim = 64;
    std::size_t rows = 0;  // 0: the profile's calibration row count
    bool require_exact = false;
    Metric metric = Metric::kCosine;
    SimilarityPredicate::Mode mode = SimilarityPredicate::Mode::kTopK;
};

// One timed observation feeding the cost models. For probes, wall_ns covers
// the whole batch and hops/distances are per-query means.
struct CalibrationSample {
    AccessPath path = AccessPath::kScanPerTuple;
    std::uint32_t dim = 0;
    std::size_t batch = 1;
    double selectivity = 1.0;
    double wall_ns = 0.0;
    double hops = 0.0;
    double distances = 0.0;
};

// wall = rows * per_row + N * per_query + N * s * rows * per_distance
struct ScanCostModel {
    double per_row_ns = 0.0;        // predicate evaluation
    double per_qualified_ns = 0.0;  // touching a qualifying row
    double per_query_ns = 0.0;
    double per_distance_ns = 0.0;

    double
    predict(std::size_t rows, std::size_t batch, double s) const noexcept;
};

// wall = rows * per_row + s * rows * per_gathered + N * per_query
//        + N * s * rows * per_score
struct TensorCostModel {
    double per_row_ns = 0.0;
    double per_gathered_ns = 0.0;
    double per_query_ns = 0.0;
    double per_score_ns = 0.0;

    double
    predict(std::size_t rows, std::size_t batch, double s) const noexcept;
};

struct ProbePoint {
    double selectivity = 0.0;
    double query_ns = 0.0;  // mean per query
    double hops = 0.0;
    double distances = 0.0;
};

// Per-query probe cost = per_query + per_hop * hops(s) + per_distance * dist(s),
// with hops(s) and dist(s) interpolated in log-selectivity between measured
// points. Without counts the measured latency itself is interpolated.
struct ProbeCostModel {
    std::uint32_t dim = 0;
    std::vector<ProbePoint> points;  // ascending selectivity
    double per_query_ns = 0.0;
    double per_hop_ns = 0.0;
    double per_distance_ns = 0.0;

    bool
    has_counts() const noexcept;

    // Per-query latency at selectivity s, rescaled to another dimensionality
    // by treating distance work as linear in D.
    double
    predict_query_ns(double s, std::uint32_t dim) const;
};

struct BucketKey {
    std::uint32_t dim = 0;
    std::size_t batch = 0;

    friend auto
    operator<=>(const BucketKey&, const BucketKey&) = default;
};

struct Bucket {
    // Probe wins for every selectivity strictly above this value; absent when
    // a scan wins everywhere. 0 means the probe wins everywhere.
    std::optional<double> crossover;
    bool measured = false;  // crossover came from measured curves, not the fit
};

struct CalibrationProfile {
    static constexpr int kVersion = 1;

    std::size_t rows = 0;
    std::size_t k = 64;
    bool probe_available = false;
    Metric index_metric = Metric::kCosine;
    std::size_t index_M = 0;
    std::size_t index_ef_construction = 0;
    std::size_t index_ef_search = 0;

    std::map<std::uint32_t, ScanCostModel> scan;
    std::map<std::uint32_t, TensorCostModel> tensor;
    std::map<std::uint32_t, ProbeCostModel> probe;
    std::map<BucketKey, Bucket> buckets;

    double
    predict(AccessPath path, std::uint32_t dim, std::size_t rows, std::size_t batch, double s) const;
};

struct CalibrationGrid {
    std::size_t rows = 100000;
    std::vector<std::uint32_t> dims{64, 256, 1024};
    std::vector<std::size_t> batches{1, 100, 10000};
    std::vector<double> selectivities{0.01, 0.1, 0.25, 0.5, 1.0};
    std::uint64_t seed = 42;
    std::size_t repeats = 3;
    std::size_t k = 64;
    std::size_t ef_search = 256;
    std::size_t threads = 1;
    // Batch buckets above this are not timed; the fitted models cover them.
    std::size_t max_measured_batch = 100;
    // Queries timed per probe cell.
    std::size_t probe_queries = 32;
};

// Times every path over the grid, then fits the profile. index may be null
// (no probe path); otherwise it must be built over `table`, whose dim is the
// probe dimensionality. Tables for the other grid dims are generated from
// (grid.rows, dim, grid.seed).
CalibrationProfile
calibrate(const ColumnTable& table, const HnswIndex* index, const CalibrationGrid& grid);

// Fitting half of calibrate: least-squares cost models per dim and a
// crossover per (dim, batch) bucket.
CalibrationProfile
fit_profile(const std::vector<CalibrationSample>& samples,
            const std::vector<std::uint32_t>& dims,
            const std::vector<std::size_t>& batches,
            std::size_t rows,
            const CalibrationProfile& meta);

PathChoice
choose_path(const QueryContext& ctx, const CalibrationProfile& profile);

void
save_profile(const CalibrationProfile& profile, std::ostream& out);
void
save_profile(const CalibrationProfile& profile, const std::filesystem::path& path);
CalibrationProfile
load_profile(std::istream& in);
CalibrationProfile
load_profile(const std::filesystem::path& path);

// Non-negative least squares (active-set). Rows of `features` are samples.
std::vector<double>
fit_nonnegative(const std::vector<std::vector<double>>& features, const std::vector<double>& target);

}  // namespace vexel
