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

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>
#include <tuple>

#include "vexel/bench.h"
#include "vexel/keyed_text.h"

using namespace vexel;

namespace {

SweepConfig
parse_config(const std::string& text) {
    std::stringstream in(text);
    return SweepConfig::parse(in);
}

std::size_t
error_line(const std::string& text) {
    try {
        (void)parse_config(text);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 9999;
}

}  // namespace

TEST(KeyedText, ParsesValuesCommentsAndLists) {
    std::stringstream in("# header\n a = 1 \nb=x, y ,z # trailing\n\nflag = yes\nf = 0.25\n");
    const auto kt = KeyedText::parse(in);
    EXPECT_EQ(kt.u64("a"), 1u);
    EXPECT_EQ(kt.list("b"), (std::vector<std::string>{"x", "y", "z"}));
    EXPECT_TRUE(kt.boolean("flag", false));
    EXPECT_DOUBLE_EQ(kt.f64("f"), 0.25);
    EXPECT_EQ(kt.entries().at("b").line, 3u);
    EXPECT_EQ(kt.u64("missing", 7), 7u);
}

TEST(KeyedText, ErrorsNameTheLine) {
    const auto line_of = [](const std::string& text) -> std::size_t {
        try {
            std::stringstream in(text);
            const auto kt = KeyedText::parse(in);
            (void)kt.u64("n");
        } catch (const ParseError& e) {
            return e.line();
        }
        return 9999;
    };
    EXPECT_EQ(line_of("n = 1\nno equals here\n"), 2u);
    EXPECT_EQ(line_of("n = 1\n\nn = 2\n"), 3u);
    EXPECT_EQ(line_of("x = 1\nn = -4\n"), 2u);
    EXPECT_EQ(line_of("x = 1\nn = 12abc\n"), 2u);
    EXPECT_EQ(line_of("x = 1\n"), 0u);
}

TEST(Strategy, NamesRoundTrip) {
    for (auto s : {Strategy::kFunction, Strategy::kExplicitSimd, Strategy::kTensor, Strategy::kHnswPre,
                   Strategy::kHnswPost}) {
        EXPECT_EQ(parse_strategy(to_string(s)), s);
    }
    EXPECT_EQ(parse_strategy("vectorized"), Strategy::kExplicitSimd);
    EXPECT_THROW(parse_strategy("GPU"), InvalidArgument);
}

TEST(Csv, HeaderIsFixed) {
    std::stringstream out;
    write_csv_header(out);
    EXPECT_EQ(out.str(),
              "schema_version,strategy,rows,dim,batch,selectivity,threads,repeat_idx,wall_ns,filter_ns,gather_ns,"
              "normalize_ns,compute_ns,extract_ns,distances_computed,recall,verified,rss_kb,metric,mode,k,"
              "ef_search\n");
}

TEST(Csv, RoundTripKeepsOptionalColumns) {
    BenchRecord a;
    a.strategy = Strategy::kTensor;
    a.rows = 10000;
    a.dim = 64;
    a.batch = 100;
    a.selectivity = 0.25;
    a.repeat_idx = -1;
    a.wall_ns = 12345;
    a.phases = PhaseTimings{1, 2, 3, 4, 5};
    a.distances_computed = 250000;
    a.verified = true;
    a.k = 64;
    BenchRecord b = a;
    b.strategy = Strategy::kHnswPre;
    b.phases.reset();
    b.recall = 0.875;
    b.verified.reset();
    b.repeat_idx = 3;
    b.ef_search = 256;
    std::stringstream buf;
    write_csv_header(buf);
    write_csv_row(buf, a);
    write_csv_row(buf, b);
    const auto back = read_csv(buf);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].strategy, Strategy::kTensor);
    ASSERT_TRUE(back[0].phases.has_value());
    EXPECT_EQ(back[0].phases->total(), 15u);
    EXPECT_TRUE(back[0].is_median());
    EXPECT_EQ(back[0].verified, std::optional<bool>(true));
    EXPECT_FALSE(back[0].recall.has_value());
    EXPECT_DOUBLE_EQ(back[0].selectivity, 0.25);
    EXPECT_FALSE(back[1].phases.has_value());
    EXPECT_DOUBLE_EQ(*back[1].recall, 0.875);
    EXPECT_FALSE(back[1].verified.has_value());
    EXPECT_EQ(back[1].ef_search, 256u);
    EXPECT_EQ(back[1].repeat_idx, 3);
}

TEST(Csv, MissingColumnIsNamed) {
    std::stringstream buf("schema_version,strategy,rows\n1,TENSOR,5\n");
    try {
        (void)read_csv(buf);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("'dim'"), std::string::npos) << e.what();
    }
}

TEST(Csv, ForeignSchemaVersionRejected) {
    std::stringstream buf;
    write_csv_header(buf);
    BenchRecord r;
    write_csv_row(buf, r);
    std::string text = buf.str();
    const auto pos = text.find("\n1,");
    text.replace(pos + 1, 1, "9");
    std::stringstream in(text);
    EXPECT_THROW(read_csv(in), FormatError);
}

TEST(SweepConfigParse, DefaultsAndOverrides) {
    const auto c = parse_config(
        "strategies = TENSOR, HNSW_PRE\nrows = 1000\ndims = 8, 16\nbatches = 1\n"
        "selectivities = 0.1, 1\nrepeats = 2\nhnsw.M = 8\nverify = true\nmetric = inner_product\n");
    EXPECT_EQ(c.strategies.size(), 2u);
    EXPECT_EQ(c.dims, (std::vector<std::uint32_t>{8, 16}));
    EXPECT_EQ(c.repeats, 2u);
    EXPECT_EQ(c.hnsw_M, 8u);
    EXPECT_TRUE(c.verify);
    EXPECT_EQ(c.metric, Metric::kInnerProduct);
    EXPECT_EQ(c.cell_count(), 2u * 1 * 2 * 1 * 2);
    const SweepConfig d;
    EXPECT_EQ(d.rows, (std::vector<std::size_t>{100000}));
    EXPECT_EQ(d.repeats, 5u);
}

TEST(SweepConfigParse, ErrorsCarryLineNumbers) {
    EXPECT_EQ(error_line("rows = 10\nbogus = 1\n"), 2u);
    EXPECT_EQ(error_line("rows = 10\n\nstrategies = TENSOR, WARP\n"), 3u);
    EXPECT_EQ(error_line("dims = 8\nmetric = l2\n"), 2u);
    EXPECT_EQ(error_line("repeats = many\n"), 1u);
    EXPECT_EQ(error_line("rows = 10\nrows = 20\n"), 2u);
}

TEST(SweepConfigParse, InconsistentConfigRejected) {
    EXPECT_THROW(parse_config("strategies = HNSW_PRE\nmode = threshold\n"), ParseError);
    EXPECT_THROW(parse_config("selectivities = 0.5, 1.5\n"), ParseError);
    EXPECT_THROW(parse_config("batches =\n"), ParseError);
    EXPECT_THROW(parse_config("repeats = 0\n"), ParseError);
}

TEST(SweepConfigParse, FullScale) {
    SweepConfig c;
    c.apply_full_scale();
    EXPECT_EQ(c.rows, (std::vector<std::size_t>{1000000}));
    EXPECT_EQ(c.threads, 48u);
}

TEST(Sweep, SingleCellEmitsRepeatsPlusMedian) {
    const auto cfg = parse_config(
        "strategies = TENSOR\nrows = 10000\ndims = 64\nbatches = 1\nselectivities = 1.0\nrepeats = 5\n");
    std::stringstream csv;
    const auto outcome = run_sweep(cfg, &csv);
    std::vector<std::string> lines;
    for (std::string l; std::getline(csv, l);) {
        lines.push_back(l);
    }
    ASSERT_EQ(lines.size(), 1u + 1u + 5u);  // header, 5 repeats, median
    const auto records = outcome.records;
    ASSERT_EQ(records.size(), 6u);
    for (int r = 0; r < 5; ++r) {
        EXPECT_EQ(records[static_cast<std::size_t>(r)].repeat_idx, r);
    }
    const auto& med = records.back();
    EXPECT_TRUE(med.is_median());
    std::vector<std::uint64_t> walls;
    for (int r = 0; r < 5; ++r) {
        walls.push_back(records[static_cast<std::size_t>(r)].wall_ns);
    }
    std::sort(walls.begin(), walls.end());
    EXPECT_EQ(med.wall_ns, walls[2]);
    ASSERT_TRUE(med.phases.has_value());
    EXPECT_EQ(med.distances_computed, 10000u);
}

TEST(Sweep, StrategyDimBatchGridIsComplete) {
    // Same grid shape as the desk-scale batching sweep, shrunk in rows.
    const auto cfg = parse_config(
        "strategies = FUNCTION, EXPLICIT_SIMD, TENSOR\nrows = 500\ndims = 64, 256, 1024\n"
        "batches = 1, 100, 1000\nselectivities = 1.0\nrepeats = 1\n");
    const auto outcome = run_sweep(cfg, nullptr);
    std::set<std::tuple<Strategy, std::uint32_t, std::size_t>> cells;
    for (const auto& r : outcome.records) {
        if (r.is_median()) {
            cells.insert({r.strategy, r.dim, r.batch});
        }
    }
    EXPECT_EQ(cells.size(), 27u);
    EXPECT_EQ(parse_config("strategies = FUNCTION, EXPLICIT_SIMD, TENSOR\ndims = 64, 256, 1024\n"
                           "batches = 1, 100, 10000\n")
                  .cell_count(),
              27u);
}

TEST(Sweep, VerificationFlagsScanCellsEqual) {
    const auto cfg = parse_config(
        "strategies = FUNCTION, EXPLICIT_SIMD, TENSOR\nrows = 3000\ndims = 8, 32\nbatches = 1, 20\n"
        "selectivities = 0, 0.3, 1\nrepeats = 1\nverify = true\nmode = threshold\ntau = 0.5\n");
    const auto outcome = run_sweep(cfg, nullptr);
    EXPECT_TRUE(outcome.all_verified);
    for (const auto& r : outcome.records) {
        ASSERT_TRUE(r.verified.has_value());
        EXPECT_TRUE(*r.verified);
    }
}

TEST(Sweep, ProbeCellsCarryRecall) {
    const auto cfg = parse_config(
        "strategies = HNSW_PRE, HNSW_POST\nrows = 3000\ndims = 16\nbatches = 10\nselectivities = 0.5, 1\n"
        "repeats = 2\nhnsw.M = 8\nhnsw.ef_construction = 64\nhnsw.ef_search = 64\nk = 10\n");
    const auto outcome = run_sweep(cfg, nullptr);
    for (const auto& r : outcome.records) {
        ASSERT_TRUE(r.recall.has_value());
        EXPECT_GT(*r.recall, 0.5);
        EXPECT_FALSE(r.phases.has_value());
    }
}

TEST(VerifyCell, TensorAndScansPass) {
    SweepConfig cfg;
    for (auto s : {Strategy::kFunction, Strategy::kExplicitSimd, Strategy::kTensor}) {
        const auto rep = verify_cell({s, 5000, 32, 16, 0.4}, cfg);
        EXPECT_TRUE(rep.pass) << rep.line;
        EXPECT_EQ(rep.line.rfind("PASS", 0), 0u);
    }
}

TEST(VerifyCell, EmptySelectivityPassesWithEmptySets) {
    SweepConfig cfg;
    cfg.hnsw_M = 8;
    cfg.hnsw_ef_construction = 32;
    for (auto s : {Strategy::kTensor, Strategy::kHnswPre}) {
        const auto rep = verify_cell({s, 2000, 16, 4, 0.0}, cfg);
        EXPECT_TRUE(rep.pass) << rep.line;
    }
}

TEST(VerifyCell, ProbeWithTinyBeamFailsFloor) {
    SweepConfig cfg;
    cfg.k = 1;
    cfg.hnsw_ef_search = 1;
    cfg.hnsw_M = 4;
    cfg.hnsw_ef_construction = 8;
    const auto rep = verify_cell({Strategy::kHnswPre, 20000, 32, 50, 1.0}, cfg);
    EXPECT_FALSE(rep.pass) << rep.line;
    ASSERT_TRUE(rep.recall.has_value());
    EXPECT_LT(*rep.recall, cfg.recall_floor);
    EXPECT_EQ(rep.line.rfind("FAIL", 0), 0u);
}

TEST(CompareExact, BoundaryRowsAreExcused) {
    SearchResult ref, got;
    ref.per_query = {{{1, 0.9004f}, {2, 0.95f}}};
    got.per_query = {{{2, 0.95f}}};
    const auto c = compare_exact(ref, got, SimilarityPredicate::threshold(0.9f));
    EXPECT_TRUE(c.equal());
    EXPECT_EQ(c.excused, 1u);
    got.per_query = {{{2, 0.95f}, {3, 0.97f}}};
    EXPECT_FALSE(compare_exact(ref, got, SimilarityPredicate::threshold(0.9f)).equal());
}

TEST(CompareExact, TopKBoundaryIsKthScore) {
    SearchResult ref, got;
    ref.per_query = {{{1, 0.9f}, {2, 0.5f}}};
    got.per_query = {{{1, 0.9f}, {7, 0.5f}}};
    EXPECT_TRUE(compare_exact(ref, got, SimilarityPredicate::top_k(2)).equal());
    got.per_query = {{{7, 0.95f}, {1, 0.9f}}};
    EXPECT_FALSE(compare_exact(ref, got, SimilarityPredicate::top_k(2)).equal());
}

TEST(Rss, ReportsSomething) {
    EXPECT_GT(current_rss_kb(), 0u);
}

#ifdef VEXEL_BENCH_EXE
namespace {

int
run_cli(const std::string& args) {
    const std::string cmd = std::string(VEXEL_BENCH_EXE) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
    const auto dir = std::filesystem::temp_directory_path() / "vexel_cli_test";
    std::filesystem::create_directories(dir);
    const auto table = (dir / "t.vxl").string();
    EXPECT_EQ(run_cli("gen --rows 500 --dim 8 --out " + table), 0);
    EXPECT_EQ(run_cli("build-index --table " + table + " --M 8 --ef-construction 16 --out " + (dir / "i.vxh").string()),
              0);
    EXPECT_EQ(run_cli("verify --strategy TENSOR --rows 2000 --dim 16 --batch 4 --selectivity 0.5"), 0);
    EXPECT_EQ(run_cli("verify --strategy HNSW_PRE --rows 5000 --dim 16 --batch 30 --k 1 --ef-search 1 --M 4 "
                      "--ef-construction 8"),
              1);
    EXPECT_EQ(run_cli("verify --strategy NOPE"), 2);
    EXPECT_EQ(run_cli("sweep --no-such-flag"), 2);
    EXPECT_EQ(run_cli(""), 2);
    {
        std::ofstream cfg(dir / "bad.cfg");
        cfg << "rows = 10\nwhat = 1\n";
    }
    EXPECT_EQ(run_cli("sweep --config " + (dir / "bad.cfg").string()), 2);
    {
        std::ofstream cfg(dir / "ok.cfg");
        cfg << "strategies = TENSOR, FUNCTION\nrows = 1000\ndims = 8\nbatches = 2\nselectivities = 0.5\nrepeats = 1\n";
    }
    const auto csv = (dir / "out.csv").string();
    EXPECT_EQ(run_cli("sweep --verify --config " + (dir / "ok.cfg").string() + " --out " + csv), 0);
    std::ifstream in(csv);
    EXPECT_EQ(read_csv(in).size(), 4u);

    const auto profile = (dir / "p.txt").string();
    {
        std::ofstream grid(dir / "grid.cfg");
        grid << "dims = 8\nbatches = 1\nselectivities = 0.1, 1.0\nrepeats = 1\nprobe_queries = 4\n";
    }
    EXPECT_EQ(run_cli("calibrate --rows 2000 --dim 8 --M 8 --ef-construction 32 --ef-search 32 --k 8 --grid " +
                      (dir / "grid.cfg").string() + " --out " + profile),
              0);
    EXPECT_EQ(run_cli("choose --profile " + profile + " --dim 8 --selectivity 0.5"), 0);
    EXPECT_EQ(run_cli("choose --profile " + profile + " --table"), 0);
    EXPECT_EQ(run_cli("choose --profile " + (dir / "missing.txt").string()), 2);
    std::filesystem::remove_all(dir);
}
#endif
