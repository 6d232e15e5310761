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

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "reference_curves.h"
#include "vexel/planner.h"

using namespace vexel;

namespace {

CalibrationProfile
meta(bool probe = true) {
    CalibrationProfile m;
    m.probe_available = probe;
    m.index_metric = Metric::kCosine;
    m.index_M = 64;
    m.index_ef_construction = 512;
    m.index_ef_search = 256;
    m.k = 64;
    return m;
}

std::vector<CalibrationSample>
reference_samples() {
    std::vector<CalibrationSample> out;
    for (const auto& c : reference::curves()) {
        const auto add = [&](AccessPath path, const reference::Curve& curve) {
            for (const auto& [pct, ms] : curve) {
                out.push_back({path, c.dim, c.batch, pct / 100.0, ms * 1e6, 0.0, 0.0});
            }
        };
        add(AccessPath::kScanPerTuple, c.scan);
        add(AccessPath::kScanTensor, c.tensor);
        add(AccessPath::kProbePre, c.probe);
    }
    return out;
}

const CalibrationProfile&
reference_profile() {
    static const CalibrationProfile p = fit_profile(reference_samples(), {64, 1024}, {1, 10000}, 1000000, meta());
    return p;
}

QueryContext
ctx(std::uint32_t dim, std::size_t batch, double s) {
    QueryContext c;
    c.dim = dim;
    c.batch_size = batch;
    c.selectivity_est = s;
    return c;
}

}  // namespace

TEST(Nnls, RecoversExactNonNegativeCoefficients) {
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> u(1.0, 1000.0);
    const std::vector<double> truth{2.5, 0.0, 7.0};
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (int i = 0; i < 40; ++i) {
        x.push_back({u(gen), u(gen), u(gen) * 1e4});
        y.push_back(truth[0] * x.back()[0] + truth[1] * x.back()[1] + truth[2] * x.back()[2]);
    }
    const auto c = fit_nonnegative(x, y);
    for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_NEAR(c[j], truth[j], 1e-6 * (1 + truth[j]));
    }
}

TEST(Nnls, ClampsWhatUnconstrainedFitMakesNegative) {
    // y = 3 a - b would need a negative weight on b.
    std::vector<std::vector<double>> x{{1, 0}, {2, 1}, {3, 3}, {4, 1}};
    std::vector<double> y;
    for (const auto& r : x) {
        y.push_back(3 * r[0] - r[1]);
    }
    const auto c = fit_nonnegative(x, y);
    EXPECT_GE(c[0], 0.0);
    EXPECT_EQ(c[1], 0.0);
    EXPECT_THROW(fit_nonnegative({}, {}), InvalidArgument);
}

TEST(PlannerReference, ProbeAtFullSelectivitySmallBatch) {
    const auto choice = choose_path(ctx(64, 1, 1.0), reference_profile());
    EXPECT_EQ(choice.path, AccessPath::kProbePre) << choice.reason;
}

TEST(PlannerReference, PerTupleScanAtOnePercent) {
    const auto choice = choose_path(ctx(64, 1, 0.01), reference_profile());
    EXPECT_EQ(choice.path, AccessPath::kScanPerTuple) << choice.reason;
}

TEST(PlannerReference, TensorForLargeBatchHighDim) {
    const auto choice = choose_path(ctx(1024, 10000, 0.3), reference_profile());
    EXPECT_EQ(choice.path, AccessPath::kScanTensor) << choice.reason;
}

TEST(PlannerReference, CrossoversLieBetweenMeasuredIntersections) {
    const auto& p = reference_profile();
    // Intersections of the published curves, bracketed by neighbouring grid points.
    const std::map<BucketKey, std::pair<double, double>> expect{
        {{64, 1}, {0.10, 0.20}}, {{1024, 1}, {0.20, 0.25}}, {{64, 10000}, {0.20, 0.25}}, {{1024, 10000}, {0.30, 0.40}}};
    for (const auto& [key, range] : expect) {
        const auto& b = p.buckets.at(key);
        ASSERT_TRUE(b.crossover.has_value()) << key.dim << "/" << key.batch;
        EXPECT_TRUE(b.measured);
        EXPECT_GT(*b.crossover, range.first) << key.dim << "/" << key.batch;
        EXPECT_LT(*b.crossover, range.second) << key.dim << "/" << key.batch;
    }
}

TEST(PlannerReference, ExactnessAndModeGuards) {
    const auto& p = reference_profile();
    for (double s : {0.0, 0.01, 0.5, 1.0}) {
        for (std::size_t n : {1u, 100u, 10000u}) {
            QueryContext c = ctx(64, n, s);
            c.require_exact = true;
            EXPECT_NE(choose_path(c, p).path, AccessPath::kProbePre);
            c.require_exact = false;
            c.mode = SimilarityPredicate::Mode::kThreshold;
            EXPECT_NE(choose_path(c, p).path, AccessPath::kProbePre);
            c.mode = SimilarityPredicate::Mode::kTopK;
            c.metric = Metric::kInnerProduct;
            EXPECT_NE(choose_path(c, p).path, AccessPath::kProbePre);
        }
    }
    EXPECT_FALSE(choose_path(ctx(64, 1, 1.0), p).reason.empty());
}

TEST(PlannerProperty, SwitchingIsMonotoneInSelectivity) {
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        // Random but physically shaped samples: scan grows with s, probe shrinks.
        std::vector<CalibrationSample> samples;
        const double scan_slope = 1e6 * (1 + 10 * u(gen));
        const double probe_base = 1e5 * (1 + 10 * u(gen));
        for (double s : {0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0}) {
            const double noise = 1 + 0.2 * (u(gen) - 0.5);
            samples.push_back({AccessPath::kScanPerTuple, 64, 1, s, 1e4 + scan_slope * s * noise, 0, 0});
            samples.push_back({AccessPath::kScanTensor, 64, 1, s, 5e4 + 3 * scan_slope * s, 0, 0});
            samples.push_back({AccessPath::kProbePre, 64, 1, s, probe_base / std::sqrt(s) * noise, 0, 0});
        }
        const auto p = fit_profile(samples, {64, 256}, {1, 100}, 100000, meta());
        for (const auto& [key, b] : p.buckets) {
            if (b.crossover) {
                EXPECT_GE(*b.crossover, 0.0);
                EXPECT_LE(*b.crossover, 1.0);
            }
            bool probed = false;
            for (int i = 0; i <= 200; ++i) {
                const bool now = choose_path(ctx(key.dim, key.batch, i / 200.0), p).path == AccessPath::kProbePre;
                ASSERT_FALSE(probed && !now) << "trial " << trial << " bucket " << key.dim << "/" << key.batch
                                             << " s=" << i / 200.0;
                probed = now;
            }
        }
    }
}

TEST(Planner, NoProbePathMeansScanAndNoCrossover) {
    std::vector<CalibrationSample> samples{{AccessPath::kScanPerTuple, 64, 1, 0.5, 1e3, 0, 0},
                                           {AccessPath::kScanTensor, 64, 1, 0.5, 2e3, 0, 0}};
    const auto p = fit_profile(samples, {64}, {1}, 1, meta(false));
    ASSERT_EQ(p.buckets.size(), 1u);
    EXPECT_FALSE(p.buckets.begin()->second.crossover.has_value());
    EXPECT_NE(choose_path(ctx(64, 1, 1.0), p).path, AccessPath::kProbePre);
}

TEST(Planner, CalibrateOnSingleRowTableNeverProbes) {
    const auto t = generate_table(1, 8, 1);
    const auto norm = t.with_vectors(normalize_vectors(t.vectors()));
    CalibrationGrid g;
    g.dims = {8};
    g.batches = {1};
    g.selectivities = {1.0};
    g.repeats = 1;
    const auto p = calibrate(norm, nullptr, g);
    ASSERT_EQ(p.buckets.size(), 1u);
    EXPECT_FALSE(p.buckets.begin()->second.crossover.has_value());
    EXPECT_NE(choose_path(ctx(8, 1, 1.0), p).path, AccessPath::kProbePre);
}

TEST(Planner, CalibrateRejectsEmptyGrid) {
    const auto t = generate_table(10, 4, 1);
    CalibrationGrid g;
    g.selectivities.clear();
    EXPECT_THROW(calibrate(t, nullptr, g), InvalidArgument);
}

TEST(Planner, CalibrateOneCellGivesOneBucket) {
    auto t = generate_table(2000, 8, 1);
    t = t.with_vectors(normalize_vectors(t.vectors()));
    const auto shared = std::make_shared<const ColumnTable>(t);
    HnswParams hp;
    hp.M = 8;
    hp.ef_construction = 32;
    const auto idx = HnswIndex::build(shared, hp, 1);
    CalibrationGrid g;
    g.dims = {8};
    g.batches = {1};
    g.selectivities = {0.5};
    g.repeats = 1;
    g.k = 8;
    g.ef_search = 32;
    g.probe_queries = 4;
    const auto p = calibrate(*shared, &idx, g);
    EXPECT_EQ(p.buckets.size(), 1u);
    EXPECT_TRUE(p.probe_available);
    EXPECT_EQ(p.rows, 2000u);
    EXPECT_EQ(p.probe.at(8).points.size(), 1u);
}

TEST(Planner, OffGridContextUsesNearestBucket) {
    const auto& p = reference_profile();
    // 900 is nearest to 1024, 5000 is nearer 10000 than 1 on a log scale.
    const auto near = choose_path(ctx(900, 5000, 0.3), p);
    const auto on = choose_path(ctx(1024, 10000, 0.3), p);
    EXPECT_EQ(near.path, on.path);
}

TEST(ProfileIo, RoundTrip) {
    const auto& p = reference_profile();
    std::stringstream buf;
    save_profile(p, buf);
    const auto back = load_profile(buf);
    EXPECT_EQ(back.rows, p.rows);
    EXPECT_EQ(back.probe_available, p.probe_available);
    EXPECT_EQ(back.index_M, 64u);
    ASSERT_EQ(back.buckets.size(), p.buckets.size());
    for (const auto& [k, b] : p.buckets) {
        EXPECT_EQ(back.buckets.at(k).crossover, b.crossover);
        EXPECT_EQ(back.buckets.at(k).measured, b.measured);
    }
    EXPECT_EQ(back.scan.at(64).per_distance_ns, p.scan.at(64).per_distance_ns);
    EXPECT_EQ(back.probe.at(1024).points.size(), p.probe.at(1024).points.size());
    for (double s : {0.01, 0.3, 1.0}) {
        EXPECT_EQ(choose_path(ctx(64, 1, s), back).path, choose_path(ctx(64, 1, s), p).path);
    }
}

TEST(ProfileIo, ErrorsCarryLineNumbers) {
    const auto line_of = [](const std::string& text) -> std::size_t {
        std::stringstream in(text);
        try {
            (void)load_profile(in);
        } catch (const ParseError& e) {
            return e.line();
        }
        return 9999;
    };
    EXPECT_EQ(line_of("version = 2\nrows = 5\n"), 1u);
    EXPECT_EQ(line_of("version = 1\nrows = 5\nscan.64 = 1 2\n"), 3u);
    EXPECT_EQ(line_of("version = 1\nrows = 5\n\nbucket.64.1 = 0.5 guessed\n"), 4u);
    EXPECT_EQ(line_of("version = 1\nrows = x\n"), 2u);
    EXPECT_EQ(line_of("version = 1\n"), 0u);  // missing required key
}
