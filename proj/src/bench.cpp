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

#include "vexel/bench.h"

#include <omp.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "vexel/gemm.h"
#include "vexel/keyed_text.h"
#include "vexel/scan.h"

namespace vexel {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t
elapsed_ns(Clock::time_point t0) {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count());
}

std::string
fmt_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

const char*
metric_name(Metric m) {
    return m == Metric::kCosine ? "cosine" : "inner_product";
}

const char*
mode_name(SimilarityPredicate::Mode m) {
    return m == SimilarityPredicate::Mode::kTopK ? "top_k" : "threshold";
}

Metric
metric_from(const std::string& s, std::size_t line) {
    if (s == "cosine") {
        return Metric::kCosine;
    }
    if (s == "inner_product" || s == "ip") {
        return Metric::kInnerProduct;
    }
    throw ParseError(line, "unknown metric '" + s + "' (cosine, inner_product)");
}

SimilarityPredicate::Mode
mode_from(const std::string& s, std::size_t line) {
    if (s == "top_k" || s == "topk") {
        return SimilarityPredicate::Mode::kTopK;
    }
    if (s == "threshold") {
        return SimilarityPredicate::Mode::kThreshold;
    }
    throw ParseError(line, "unknown mode '" + s + "' (top_k, threshold)");
}

struct CellRun {
    SearchResult result;
    std::uint64_t wall_ns = 0;
    std::optional<PhaseTimings> phases;
    std::uint64_t distances = 0;
};

FilterMode
filter_for(Strategy s, const RelationalPredicate& pred, double overfetch) {
    return s == Strategy::kHnswPre ? FilterMode::pre(pred) : FilterMode::post(pred, overfetch);
}

CellRun
run_once(Strategy strategy,
         const ColumnTable& table,
         const HnswIndex* index,
         const QueryBatch& batch,
         const SweepConfig& cfg) {
    CellRun run;
    switch (strategy) {
        case Strategy::kFunction:
        case Strategy::kExplicitSimd: {
            ScanStats stats;
            const ScanOptions opts{strategy == Strategy::kFunction ? Kernel::kScalar : Kernel::kVectorized,
                                   cfg.threads};
            const auto t0 = Clock::now();
            run.result = scan_per_tuple(table, batch, opts, &stats);
            run.wall_ns = elapsed_ns(t0);
            run.distances = stats.distances_computed;
            break;
        }
        case Strategy::kTensor: {
            const auto t0 = Clock::now();
            auto out = tensor_search(table, batch, {GemmBackend::kBlas, cfg.threads});
            run.wall_ns = elapsed_ns(t0);
            run.result = std::move(out.result);
            run.phases = out.timings;
            run.distances = out.distances_computed;
            break;
        }
        case Strategy::kHnswPre:
        case Strategy::kHnswPost: {
            const auto filter = filter_for(strategy, *batch.predicate, cfg.overfetch);
            const auto n = static_cast<std::int64_t>(batch.size());
            run.result.per_query.resize(batch.size());
            std::uint64_t distances = 0;
            const auto t0 = Clock::now();
#pragma omp parallel for schedule(dynamic, 1) num_threads(static_cast<int>(std::max<std::size_t>(1, cfg.threads))) reduction(+ : distances)
            for (std::int64_t q = 0; q < n; ++q) {
                auto r = index->search(batch.query(static_cast<std::size_t>(q)), cfg.k, cfg.hnsw_ef_search,
                                       filter);
                distances += r.stats.distances;
                run.result.per_query[static_cast<std::size_t>(q)] = std::move(r.hits);
            }
            run.wall_ns = elapsed_ns(t0);
            run.distances = distances;
            break;
        }
    }
    return run;
}

bool
same_rows(const SearchResult& a, const SearchResult& b) {
    if (a.size() != b.size()) {
        return false;
    }
    for (std::size_t q = 0; q < a.size(); ++q) {
        const auto& x = a.per_query[q];
        const auto& y = b.per_query[q];
        if (x.size() != y.size()) {
            return false;
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i].row != y[i].row) {
                return false;
            }
        }
    }
    return true;
}

QueryBatch
make_batch(const SweepConfig& cfg, std::uint32_t dim, std::size_t n, double s) {
    return {dim, generate_queries(n, dim, cfg.seed), predicate_for_selectivity(s), cfg.similarity()};
}

SearchResult
head(const SearchResult& r, std::size_t n) {
    SearchResult out;
    out.per_query.assign(r.per_query.begin(),
                         r.per_query.begin() + static_cast<std::ptrdiff_t>(std::min(n, r.size())));
    return out;
}

QueryBatch
head(const QueryBatch& b, std::size_t n) {
    QueryBatch out = b;
    out.vectors.resize(std::min(n, b.size()) * b.dim);
    return out;
}

// Table and index for the current (rows, dim); the sweep walks cells so that
// one pair is live at a time.
class Workspace {
public:
    explicit Workspace(const SweepConfig& cfg) : cfg_(cfg) {
    }

    const ColumnTable&
    table(std::size_t rows, std::uint32_t dim) {
        select(rows, dim);
        if (!table_) {
            auto raw = generate_table(rows, dim, cfg_.seed);
            if (cfg_.metric == Metric::kCosine) {
                raw = raw.with_vectors(normalize_vectors(raw.vectors()));
            }
            table_ = std::make_shared<const ColumnTable>(std::move(raw));
        }
        return *table_;
    }

    const HnswIndex&
    index(std::size_t rows, std::uint32_t dim) {
        table(rows, dim);
        if (!index_) {
            HnswParams p;
            p.M = cfg_.hnsw_M;
            p.ef_construction = cfg_.hnsw_ef_construction;
            p.ef_search = cfg_.hnsw_ef_search;
            p.metric = cfg_.metric;
            const auto t0 = Clock::now();
            index_ = std::make_unique<HnswIndex>(HnswIndex::build(table_, p, cfg_.seed, cfg_.threads));
            spdlog::info("built index rows={} dim={} M={} ef_construction={} in {:.1f}s", rows, dim, p.M,
                         p.ef_construction, static_cast<double>(elapsed_ns(t0)) / 1e9);
        }
        return *index_;
    }

private:
    void
    select(std::size_t rows, std::uint32_t dim) {
        if (rows != rows_ || dim != dim_) {
            index_.reset();
            table_.reset();
            rows_ = rows;
            dim_ = dim;
        }
    }

    const SweepConfig& cfg_;
    std::size_t rows_ = 0;
    std::uint32_t dim_ = 0;
    std::shared_ptr<const ColumnTable> table_;
    std::unique_ptr<HnswIndex> index_;
};

std::size_t
predicate_violations(const ColumnTable& table, const QueryBatch& batch, const SearchResult& result) {
    if (!batch.predicate) {
        return 0;
    }
    const auto& col = table.column(batch.predicate->column);
    std::size_t bad = 0;
    for (const auto& hits : result.per_query) {
        for (const auto& h : hits) {
            bad += batch.predicate->matches(col.values[h.row]) ? 0 : 1;
        }
    }
    return bad;
}

std::string
cell_label(const CellSpec& c) {
    std::ostringstream os;
    os << to_string(c.strategy) << " rows=" << c.rows << " dim=" << c.dim << " batch=" << c.batch
       << " s=" << fmt_double(c.selectivity);
    return os.str();
}

}  // namespace

const char*
to_string(Strategy s) noexcept {
    switch (s) {
        case Strategy::kFunction:
            return "FUNCTION";
        case Strategy::kExplicitSimd:
            return "EXPLICIT_SIMD";
        case Strategy::kTensor:
            return "TENSOR";
        case Strategy::kHnswPre:
            return "HNSW_PRE";
        case Strategy::kHnswPost:
            return "HNSW_POST";
    }
    return "?";
}

Strategy
parse_strategy(const std::string& name) {
    static const std::map<std::string, Strategy> kNames{
        {"FUNCTION", Strategy::kFunction},   {"EXPLICIT_SIMD", Strategy::kExplicitSimd},
        {"VECTORIZED", Strategy::kExplicitSimd}, {"TENSOR", Strategy::kTensor},
        {"HNSW_PRE", Strategy::kHnswPre},    {"HNSW_POST", Strategy::kHnswPost}};
    std::string upper = name;
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char ch) { return std::toupper(ch); });
    auto it = kNames.find(upper);
    if (it == kNames.end()) {
        throw InvalidArgument("unknown strategy '" + name + "'");
    }
    return it->second;
}

const std::vector<std::string>&
csv_columns() {
    static const std::vector<std::string> kColumns{
        "schema_version", "strategy",     "rows",       "dim",       "batch",     "selectivity",
        "threads",        "repeat_idx",   "wall_ns",    "filter_ns", "gather_ns", "normalize_ns",
        "compute_ns",     "extract_ns",   "distances_computed",      "recall",    "verified",
        "rss_kb",         "metric",       "mode",       "k",         "ef_search"};
    return kColumns;
}

void
write_csv_header(std::ostream& out) {
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        out << (i ? "," : "") << cols[i];
    }
    out << '\n';
}

void
write_csv_row(std::ostream& out, const BenchRecord& r) {
    out << kCsvSchemaVersion << ',' << to_string(r.strategy) << ',' << r.rows << ',' << r.dim << ','
        << r.batch << ',' << fmt_double(r.selectivity) << ',' << r.threads << ',' << r.repeat_idx << ','
        << r.wall_ns << ',';
    if (r.phases) {
        out << r.phases->filter_ns << ',' << r.phases->gather_ns << ',' << r.phases->normalize_ns << ','
            << r.phases->compute_ns << ',' << r.phases->extract_ns << ',';
    } else {
        out << ",,,,,";
    }
    out << r.distances_computed << ',' << (r.recall ? fmt_double(*r.recall) : "") << ','
        << (r.verified ? (*r.verified ? "1" : "0") : "") << ',' << r.rss_kb << ',' << metric_name(r.metric)
        << ',' << mode_name(r.mode) << ',' << r.k << ',';
    if (is_probe(r.strategy)) {
        out << r.ef_search;
    }
    out << '\n';
}

std::vector<BenchRecord>
read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("empty CSV");
    }
    std::map<std::string, std::size_t> pos;
    {
        const auto names = KeyedText::split(line, ',');
        for (std::size_t i = 0; i < names.size(); ++i) {
            pos[names[i]] = i;
        }
    }
    for (const auto& c : csv_columns()) {
        if (!pos.count(c)) {
            throw FormatError("CSV is missing column '" + c + "'");
        }
    }
    std::vector<BenchRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        // split() drops nothing but trims; empty fields must survive.
        std::vector<std::string> f;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            f.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        if (f.size() < pos.size()) {
            throw FormatError("CSV line " + std::to_string(line_no) + " has " + std::to_string(f.size()) +
                              " fields, header has " + std::to_string(pos.size()));
        }
        const auto get = [&](const char* c) -> const std::string& { return f[pos.at(c)]; };
        const auto u64 = [&](const char* c) { return KeyedText::to_u64(get(c), line_no); };
        if (u64("schema_version") != static_cast<std::uint64_t>(kCsvSchemaVersion)) {
            throw FormatError("CSV line " + std::to_string(line_no) + ": unsupported schema_version " +
                              get("schema_version"));
        }
        BenchRecord r;
        r.strategy = parse_strategy(get("strategy"));
        r.rows = u64("rows");
        r.dim = static_cast<std::uint32_t>(u64("dim"));
        r.batch = u64("batch");
        r.selectivity = KeyedText::to_f64(get("selectivity"), line_no);
        r.threads = u64("threads");
        r.repeat_idx = std::stoi(get("repeat_idx"));
        r.wall_ns = u64("wall_ns");
        if (!get("compute_ns").empty()) {
            r.phases = PhaseTimings{u64("filter_ns"), u64("gather_ns"), u64("normalize_ns"), u64("compute_ns"),
                                    u64("extract_ns")};
        }
        r.distances_computed = u64("distances_computed");
        if (!get("recall").empty()) {
            r.recall = KeyedText::to_f64(get("recall"), line_no);
        }
        if (!get("verified").empty()) {
            r.verified = get("verified") == "1";
        }
        r.rss_kb = u64("rss_kb");
        r.metric = metric_from(get("metric"), line_no);
        r.mode = mode_from(get("mode"), line_no);
        r.k = u64("k");
        r.ef_search = get("ef_search").empty() ? 0 : u64("ef_search");
        out.push_back(std::move(r));
    }
    return out;
}

SimilarityPredicate
SweepConfig::similarity() const {
    return mode == SimilarityPredicate::Mode::kTopK ? SimilarityPredicate::top_k(k, metric)
                                                    : SimilarityPredicate::threshold(tau, metric);
}

std::size_t
SweepConfig::cell_count() const noexcept {
    return strategies.size() * rows.size() * dims.size() * batches.size() * selectivities.size();
}

void
SweepConfig::apply_full_scale() {
    rows = {1000000};
    threads = 48;
}

void
SweepConfig::validate() const {
    if (cell_count() == 0) {
        throw InvalidArgument("sweep has no cells: strategies, rows, dims, batches and selectivities must be non-empty");
    }
    if (repeats == 0) {
        throw InvalidArgument("repeats must be >= 1");
    }
    for (double s : selectivities) {
        if (!(s >= 0.0 && s <= 1.0)) {
            throw InvalidArgument("selectivity " + fmt_double(s) + " outside [0, 1]");
        }
    }
    for (auto r : rows) {
        if (r == 0) {
            throw InvalidArgument("rows must be >= 1");
        }
    }
    for (auto d : dims) {
        if (d == 0) {
            throw InvalidArgument("dims must be >= 1");
        }
    }
    for (auto b : batches) {
        if (b == 0) {
            throw InvalidArgument("batch sizes must be >= 1");
        }
    }
    const bool probes = std::any_of(strategies.begin(), strategies.end(), is_probe);
    if (probes && mode != SimilarityPredicate::Mode::kTopK) {
        throw InvalidArgument("HNSW strategies answer top_k queries only");
    }
    similarity().validate();
}

SweepConfig
SweepConfig::parse(std::istream& in) {
    const auto kt = KeyedText::parse(in);
    static const std::vector<std::string> kKnown{
        "strategies", "rows",          "dims",     "batches",        "selectivities",
        "metric",     "mode",          "tau",      "k",              "repeats",
        "seed",       "threads",       "hnsw.M",   "hnsw.ef_construction", "hnsw.ef_search",
        "hnsw.overfetch", "verify",    "recall_floor", "recall_queries", "output"};
    for (const auto& [key, e] : kt.entries()) {
        if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end()) {
            throw ParseError(e.line, "unknown key '" + key + "'");
        }
    }
    const auto line_of = [&](const char* key) { return kt.has(key) ? kt.entries().at(key).line : 0; };
    SweepConfig c;
    if (kt.has("strategies")) {
        c.strategies.clear();
        for (const auto& s : kt.list("strategies")) {
            try {
                c.strategies.push_back(parse_strategy(s));
            } catch (const InvalidArgument& e) {
                throw ParseError(line_of("strategies"), e.what());
            }
        }
    }
    if (kt.has("rows")) {
        c.rows.clear();
        for (auto v : kt.u64_list("rows")) {
            c.rows.push_back(v);
        }
    }
    if (kt.has("dims")) {
        c.dims.clear();
        for (auto v : kt.u64_list("dims")) {
            c.dims.push_back(static_cast<std::uint32_t>(v));
        }
    }
    if (kt.has("batches")) {
        c.batches.clear();
        for (auto v : kt.u64_list("batches")) {
            c.batches.push_back(v);
        }
    }
    if (kt.has("selectivities")) {
        c.selectivities = kt.f64_list("selectivities");
    }
    if (kt.has("metric")) {
        c.metric = metric_from(kt.str("metric"), line_of("metric"));
    }
    if (kt.has("mode")) {
        c.mode = mode_from(kt.str("mode"), line_of("mode"));
    }
    c.tau = static_cast<float>(kt.f64("tau", c.tau));
    c.k = kt.u64("k", c.k);
    c.repeats = kt.u64("repeats", c.repeats);
    c.seed = kt.u64("seed", c.seed);
    c.threads = kt.u64("threads", c.threads);
    c.hnsw_M = kt.u64("hnsw.M", c.hnsw_M);
    c.hnsw_ef_construction = kt.u64("hnsw.ef_construction", c.hnsw_ef_construction);
    c.hnsw_ef_search = kt.u64("hnsw.ef_search", c.hnsw_ef_search);
    c.overfetch = kt.f64("hnsw.overfetch", c.overfetch);
    c.verify = kt.boolean("verify", c.verify);
    c.recall_floor = kt.f64("recall_floor", c.recall_floor);
    c.recall_queries = kt.u64("recall_queries", c.recall_queries);
    c.output = kt.str("output", c.output);
    try {
        c.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(0, e.what());
    }
    return c;
}

SweepConfig
SweepConfig::parse(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw NotFound("cannot open sweep config " + path.string());
    }
    return parse(in);
}

SweepOutcome
run_sweep(const SweepConfig& cfg, std::ostream* csv) {
    cfg.validate();
    set_blas_threads(static_cast<int>(cfg.threads));
    if (csv != nullptr) {
        write_csv_header(*csv);
    }
    SweepOutcome outcome;
    Workspace ws(cfg);
    for (std::size_t rows : cfg.rows) {
        for (std::uint32_t dim : cfg.dims) {
            for (Strategy strategy : cfg.strategies) {
                for (std::size_t n : cfg.batches) {
                    for (double s : cfg.selectivities) {
                        const ColumnTable& table = ws.table(rows, dim);
                        const HnswIndex* index = is_probe(strategy) ? &ws.index(rows, dim) : nullptr;
                        const QueryBatch batch = make_batch(cfg, dim, n, s);

                        (void)run_once(strategy, table, index, batch, cfg);  // warm-up
                        std::vector<CellRun> runs;
                        for (std::size_t r = 0; r < cfg.repeats; ++r) {
                            runs.push_back(run_once(strategy, table, index, batch, cfg));
                            if (!same_rows(runs.front().result, runs.back().result)) {
                                throw ContractViolation("result set changed between repeats in " +
                                                        cell_label({strategy, rows, dim, n, s}));
                            }
                        }

                        std::optional<double> cell_recall;
                        std::optional<bool> verified;
                        if (is_probe(strategy)) {
                            const std::size_t m = std::min(n, std::max<std::size_t>(1, cfg.recall_queries));
                            const auto oracle =
                                scan_per_tuple(table, head(batch, m), {Kernel::kVectorized, cfg.threads});
                            cell_recall = recall(head(runs.front().result, m).per_query, oracle);
                            if (cfg.verify) {
                                verified = *cell_recall >= cfg.recall_floor;
                            }
                        } else if (cfg.verify) {
                            const auto oracle = scan_per_tuple(table, batch, {Kernel::kScalar, cfg.threads});
                            verified = compare_exact(oracle, runs.front().result, batch.similarity).equal();
                        }
                        if (verified && !*verified) {
                            outcome.all_verified = false;
                        }

                        const std::uint64_t rss = current_rss_kb();
                        std::vector<BenchRecord> cell;
                        for (std::size_t r = 0; r < runs.size(); ++r) {
                            BenchRecord rec;
                            rec.strategy = strategy;
                            rec.rows = rows;
                            rec.dim = dim;
                            rec.batch = n;
                            rec.selectivity = s;
                            rec.threads = cfg.threads;
                            rec.repeat_idx = static_cast<int>(r);
                            rec.wall_ns = runs[r].wall_ns;
                            rec.phases = runs[r].phases;
                            rec.distances_computed = runs[r].distances;
                            rec.recall = cell_recall;
                            rec.verified = verified;
                            rec.rss_kb = rss;
                            rec.metric = cfg.metric;
                            rec.mode = cfg.mode;
                            rec.k = cfg.mode == SimilarityPredicate::Mode::kTopK ? cfg.k : 0;
                            rec.ef_search = cfg.hnsw_ef_search;
                            cell.push_back(rec);
                        }
                        // The median row copies the repeat holding the (lower) median wall time, so its
                        // phase columns stay consistent with its wall time.
                        std::vector<std::size_t> order(cell.size());
                        std::iota(order.begin(), order.end(), 0);
                        std::sort(order.begin(), order.end(),
                                  [&](std::size_t a, std::size_t b) { return cell[a].wall_ns < cell[b].wall_ns; });
                        BenchRecord med = cell[order[(order.size() - 1) / 2]];
                        med.repeat_idx = -1;
                        cell.push_back(med);
                        for (const auto& rec : cell) {
                            if (csv != nullptr) {
                                write_csv_row(*csv, rec);
                            }
                            outcome.records.push_back(rec);
                        }
                        if (csv != nullptr) {
                            csv->flush();
                        }
                        spdlog::info("{}: median {:.3f} ms", cell_label({strategy, rows, dim, n, s}),
                                     static_cast<double>(med.wall_ns) / 1e6);
                    }
                }
            }
        }
    }
    return outcome;
}

ExactComparison
compare_exact(const SearchResult& reference,
              const SearchResult& candidate,
              const SimilarityPredicate& sim,
              double eps) {
    if (reference.size() != candidate.size()) {
        throw InvalidArgument("compared results cover different query counts");
    }
    ExactComparison cmp;
    for (std::size_t q = 0; q < reference.size(); ++q) {
        const auto& ref = reference.per_query[q];
        const auto& got = candidate.per_query[q];
        std::optional<double> boundary;
        if (!sim.is_top_k()) {
            boundary = sim.tau;
        } else if (ref.size() == sim.k && !ref.empty()) {
            boundary = ref.back().score;
        }
        std::unordered_map<RowId, float> in_ref;
        for (const auto& h : ref) {
            in_ref.emplace(h.row, h.score);
        }
        std::unordered_map<RowId, float> in_got;
        for (const auto& h : got) {
            in_got.emplace(h.row, h.score);
        }
        const auto judge = [&](float score) {
            if (boundary && std::abs(static_cast<double>(score) - *boundary) <= eps) {
                ++cmp.excused;
            } else {
                ++cmp.mismatches;
            }
        };
        for (const auto& [row, score] : in_ref) {
            if (!in_got.count(row)) {
                judge(score);
            }
        }
        for (const auto& [row, score] : in_got) {
            if (!in_ref.count(row)) {
                judge(score);
            }
        }
    }
    return cmp;
}

VerifyReport
verify_cell(const CellSpec& cell, const SweepConfig& cfg) {
    if (!(cell.selectivity >= 0.0 && cell.selectivity <= 1.0) || cell.rows == 0 || cell.dim == 0 ||
        cell.batch == 0) {
        throw InvalidArgument("invalid cell " + cell_label(cell));
    }
    if (is_probe(cell.strategy) && cfg.mode != SimilarityPredicate::Mode::kTopK) {
        throw InvalidArgument("HNSW strategies answer top_k queries only");
    }
    Workspace ws(cfg);
    const ColumnTable& table = ws.table(cell.rows, cell.dim);
    const QueryBatch batch = make_batch(cfg, cell.dim, cell.batch, cell.selectivity);
    VerifyReport report;
    std::ostringstream line;
    if (is_probe(cell.strategy)) {
        const HnswIndex& index = ws.index(cell.rows, cell.dim);
        const auto run = run_once(cell.strategy, table, &index, batch, cfg);
        const auto oracle = scan_per_tuple(table, batch, {Kernel::kVectorized, cfg.threads});
        report.recall = recall(run.result.per_query, oracle);
        report.mismatches = predicate_violations(table, batch, run.result);
        report.pass = *report.recall >= cfg.recall_floor && report.mismatches == 0;
        line << (report.pass ? "PASS " : "FAIL ") << cell_label(cell) << " recall=" << fmt_double(*report.recall)
             << " floor=" << fmt_double(cfg.recall_floor)
             << " predicate_violations=" << report.mismatches << " ef_search=" << cfg.hnsw_ef_search << " k=" << cfg.k;
    } else {
        const auto run = run_once(cell.strategy, table, nullptr, batch, cfg);
        const auto oracle = scan_per_tuple(table, batch, {Kernel::kScalar, cfg.threads});
        const auto cmp = compare_exact(oracle, run.result, batch.similarity);
        report.mismatches = cmp.mismatches + predicate_violations(table, batch, run.result);
        report.excused = cmp.excused;
        report.pass = report.mismatches == 0;
        line << (report.pass ? "PASS " : "FAIL ") << cell_label(cell) << " mismatches=" << report.mismatches
             << " boundary_ties=" << cmp.excused;
    }
    report.line = line.str();
    return report;
}

std::uint64_t
current_rss_kb() {
    std::ifstream in("/proc/self/status");
    std::string key;
    while (in >> key) {
        if (key == "VmRSS:") {
            std::uint64_t kb = 0;
            in >> kb;
            return kb;
        }
        in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    }
    return 0;
}

}  // namespace vexel
