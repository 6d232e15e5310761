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

#include <cmath>
#include <map>
#include <sstream>

#include "hnsw_checks.h"
#include "oracle.h"
#include "vexel/hnsw.h"
#include "vexel/scan.h"

using namespace vexel;

namespace {

std::shared_ptr<const ColumnTable>
shared_table(std::size_t rows, std::uint32_t dim, std::uint64_t seed, bool normalize = true) {
    auto t = generate_table(rows, dim, seed);
    if (normalize) {
        t = t.with_vectors(normalize_vectors(t.vectors()));
    }
    return std::make_shared<const ColumnTable>(std::move(t));
}

HnswParams
small_params(Metric m = Metric::kCosine) {
    HnswParams p;
    p.M = 12;
    p.ef_construction = 100;
    p.ef_search = 128;
    p.metric = m;
    return p;
}

class HnswSmall : public ::testing::Test {
protected:
    static void
    SetUpTestSuite() {
        table_ = shared_table(4000, 16, 31);
        index_ = new HnswIndex(HnswIndex::build(table_, small_params(), 7));
        queries_ = generate_queries(40, 16, 32);
    }

    static void
    TearDownTestSuite() {
        delete index_;
        index_ = nullptr;
        table_.reset();
    }

    static double
    recall_at(double s, FilterMode::Kind kind, std::size_t k = 10) {
        QueryBatch b{16, queries_, predicate_for_selectivity(s), SimilarityPredicate::top_k(k)};
        const auto ref = scan_per_tuple(*table_, b);
        const auto filter = kind == FilterMode::Kind::kPre    ? FilterMode::pre(*b.predicate)
                            : kind == FilterMode::Kind::kPost ? FilterMode::post(*b.predicate, 4.0)
                                                              : FilterMode::none();
        if (kind == FilterMode::Kind::kNone) {
            b.predicate.reset();
            return measure_recall(*index_, b, k, 0, filter, scan_per_tuple(*table_, b));
        }
        return measure_recall(*index_, b, k, 0, filter, ref);
    }

    static std::shared_ptr<const ColumnTable> table_;
    static HnswIndex* index_;
    static std::vector<float> queries_;
};

std::shared_ptr<const ColumnTable> HnswSmall::table_;
HnswIndex* HnswSmall::index_ = nullptr;
std::vector<float> HnswSmall::queries_;

}  // namespace

TEST_F(HnswSmall, StructureInvariantsHold) {
    const auto rep = checks::walk_graph(*index_);
    EXPECT_TRUE(rep.violations.empty()) << rep.violations.front();
    EXPECT_EQ(rep.reachable_layer0, index_->size());
    EXPECT_EQ(index_->size(), 4000u);
}

TEST_F(HnswSmall, LevelDistributionIsGeometric) {
    // P(level >= 1) = exp(-1 / lambda) with lambda = 1 / ln M, i.e. 1 / M.
    std::size_t upper = 0;
    for (RowId v = 0; v < index_->size(); ++v) {
        upper += index_->level(v) >= 1;
    }
    const double expect = 4000.0 / 12.0;
    EXPECT_NEAR(static_cast<double>(upper), expect, 5 * std::sqrt(expect));
}

TEST_F(HnswSmall, UnfilteredRecall) {
    EXPECT_GE(recall_at(1.0, FilterMode::Kind::kNone), 0.95);
}

TEST_F(HnswSmall, PreFilteredRecallAndSoundness) {
    for (double s : {0.05, 0.3, 0.8}) {
        EXPECT_GE(recall_at(s, FilterMode::Kind::kPre), 0.9) << "s=" << s;
        const auto pred = predicate_for_selectivity(s);
        const auto keep = oracle::key_below(*table_, s);
        for (std::size_t q = 0; q < 40; ++q) {
            const auto r = index_->search({queries_.data() + q * 16, 16}, 10, 0, FilterMode::pre(pred));
            for (const auto& h : r.hits) {
                ASSERT_TRUE(keep(h.row));
            }
            EXPECT_TRUE(std::is_sorted(r.hits.begin(), r.hits.end(), ranks_before));
        }
    }
}

TEST_F(HnswSmall, PostFilterIsSoundButMayReturnFewer) {
    const auto pred = predicate_for_selectivity(0.05);
    const auto keep = oracle::key_below(*table_, 0.05);
    std::size_t short_lists = 0;
    for (std::size_t q = 0; q < 40; ++q) {
        const auto r = index_->search({queries_.data() + q * 16, 16}, 10, 0, FilterMode::post(pred, 1.0));
        for (const auto& h : r.hits) {
            ASSERT_TRUE(keep(h.row));
        }
        short_lists += r.hits.size() < 10;
    }
    // 5% selectivity over a 128-wide beam leaves about 6 survivors.
    EXPECT_GT(short_lists, 0u);
}

TEST_F(HnswSmall, EmptySelectionReturnsNothing) {
    const auto r = index_->search({queries_.data(), 16}, 10, 0, FilterMode::pre(predicate_for_selectivity(0.0)));
    EXPECT_TRUE(r.hits.empty());
}

TEST_F(HnswSmall, LowSelectivityCostsMoreWork) {
    ProbeStats lo, hi;
    for (std::size_t q = 0; q < 40; ++q) {
        lo.distances += index_->search({queries_.data() + q * 16, 16}, 10, 0,
                                       FilterMode::pre(predicate_for_selectivity(0.02)))
                            .stats.distances;
        hi.distances += index_->search({queries_.data() + q * 16, 16}, 10, 0,
                                       FilterMode::pre(predicate_for_selectivity(1.0)))
                            .stats.distances;
    }
    EXPECT_GT(lo.distances, 2 * hi.distances);
}

TEST_F(HnswSmall, SaveLoadRoundTrip) {
    std::stringstream buf;
    index_->save(buf);
    const auto back = HnswIndex::load(buf, table_);
    EXPECT_TRUE(back.same_graph(*index_));
    const auto a = index_->search({queries_.data(), 16}, 5);
    const auto b = back.search({queries_.data(), 16}, 5);
    EXPECT_EQ(a.hits, b.hits);
}

TEST_F(HnswSmall, LoadRejectsMismatchedTable) {
    std::stringstream buf;
    index_->save(buf);
    EXPECT_THROW(HnswIndex::load(buf, shared_table(100, 16, 1)), FormatError);
    std::stringstream junk("VXH0garbage");
    EXPECT_THROW(HnswIndex::load(junk, table_), FormatError);
}

TEST(Hnsw, SerialBuildIsDeterministic) {
    const auto t = shared_table(1500, 8, 41);
    const auto a = HnswIndex::build(t, small_params(), 5);
    const auto b = HnswIndex::build(t, small_params(), 5);
    EXPECT_TRUE(a.same_graph(b));
    const auto c = HnswIndex::build(t, small_params(), 6);
    EXPECT_FALSE(a.same_graph(c));
}

TEST(Hnsw, ParallelBuildKeepsInvariantsAndRecall) {
    const auto t = shared_table(3000, 12, 42);
    const auto idx = HnswIndex::build(t, small_params(), 5, 4);
    const auto rep = checks::walk_graph(idx);
    EXPECT_TRUE(rep.violations.empty()) << rep.violations.front();
    QueryBatch b{12, generate_queries(30, 12, 43), std::nullopt, SimilarityPredicate::top_k(10)};
    EXPECT_GE(measure_recall(idx, b, 10, 128, FilterMode::none(), scan_per_tuple(*t, b)), 0.9);
}

TEST(Hnsw, InnerProductIndexOverRawVectors) {
    const auto t = shared_table(2000, 8, 44, false);
    const auto idx = HnswIndex::build(t, small_params(Metric::kInnerProduct), 1);
    QueryBatch b{8, generate_queries(20, 8, 45), std::nullopt,
                 SimilarityPredicate::top_k(5, Metric::kInnerProduct)};
    EXPECT_GE(measure_recall(idx, b, 5, 128, FilterMode::none(), scan_per_tuple(*t, b)), 0.8);
}

TEST(Hnsw, TinyTablesAreExact) {
    const auto t = shared_table(50, 4, 46);
    const auto idx = HnswIndex::build(t, small_params(), 1);
    QueryBatch b{4, generate_queries(10, 4, 47), std::nullopt, SimilarityPredicate::top_k(8)};
    EXPECT_DOUBLE_EQ(measure_recall(idx, b, 8, 64, FilterMode::none(), scan_per_tuple(*t, b)), 1.0);
    const auto one = HnswIndex::build(shared_table(1, 4, 1), small_params(), 1);
    EXPECT_EQ(one.search(std::vector<float>{1, 0, 0, 0}, 3).hits.size(), 1u);
}

TEST(Hnsw, PreFilterHopCapSetsTruncated) {
    const auto t = shared_table(20000, 8, 48);
    HnswParams p = small_params();
    p.ef_search = 16;
    const auto idx = HnswIndex::build(t, p, 1);
    // A predicate that matches exactly one row forces the walk to the cap.
    const auto key = t->column(kKeyColumn).values[123];
    const auto r = idx.search(std::vector<float>(8, 0.3f), 5, 16,
                              FilterMode::pre(RelationalPredicate::between(kKeyColumn, key, key)));
    EXPECT_TRUE(r.stats.truncated);
    EXPECT_LE(r.hits.size(), 1u);
}

TEST(Hnsw, ParameterAndInputErrors) {
    const auto t = shared_table(100, 4, 1);
    HnswParams bad = small_params();
    bad.M = 1;
    EXPECT_THROW(HnswIndex::build(t, bad, 1), InvalidArgument);
    bad = small_params();
    bad.ef_construction = 0;
    EXPECT_THROW(HnswIndex::build(t, bad, 1), InvalidArgument);
    EXPECT_THROW(HnswIndex::build(shared_table(100, 4, 1, false), small_params(), 1), ContractViolation);
    const auto idx = HnswIndex::build(t, small_params(), 1);
    EXPECT_THROW(idx.search(std::vector<float>(5, 1.0f), 3), InvalidArgument);
    EXPECT_THROW(idx.search(std::vector<float>(4, 1.0f), 0), InvalidArgument);
    EXPECT_THROW(idx.search(std::vector<float>(4, 0.0f), 3), InvalidArgument);
}

TEST(Hnsw, RecallConventions) {
    SearchResult oracle_lists;
    oracle_lists.per_query = {{{1, 0.9f}, {2, 0.8f}}, {}};
    std::vector<std::vector<Hit>> approx{{{2, 0.8f}, {7, 0.5f}}, {}};
    EXPECT_DOUBLE_EQ(recall(approx, oracle_lists), 0.75);
    EXPECT_THROW(recall({{}}, oracle_lists), InvalidArgument);
}
