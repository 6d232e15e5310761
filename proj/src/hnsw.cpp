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

#include "vexel/hnsw.h"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <string>
#include <unordered_set>

#include "binary_io.h"
#include "vexel/prng.h"

namespace vexel {

namespace {

constexpr char kIndexMagic[4] = {'V', 'X', 'H', '1'};
constexpr std::uint32_t kIndexVersion = 1;
constexpr int kMaxLevel = 255;

}  // namespace

// Epoch-tagged visited marks, recycled across searches so a probe does not pay
// for clearing an array the size of the table.
class VisitedList {
public:
    explicit VisitedList(std::size_t n) : marks_(n, 0) {
    }

    void
    reset() {
        if (++epoch_ == 0) {
            std::fill(marks_.begin(), marks_.end(), 0);
            epoch_ = 1;
        }
    }

    // Returns true if id was already marked.
    bool
    test_and_set(RowId id) noexcept {
        if (marks_[id] == epoch_) {
            return true;
        }
        marks_[id] = epoch_;
        return false;
    }

private:
    std::vector<std::uint16_t> marks_;
    std::uint16_t epoch_ = 0;
};

class VisitedPool {
public:
    explicit VisitedPool(std::size_t n) : n_(n) {
    }

    class Lease {
    public:
        Lease(VisitedPool& pool, std::unique_ptr<VisitedList> list)
            : pool_(pool), list_(std::move(list)) {
        }
        Lease(const Lease&) = delete;
        Lease&
        operator=(const Lease&) = delete;
        ~Lease() {
            pool_.release(std::move(list_));
        }

        VisitedList*
        operator->() noexcept {
            return list_.get();
        }

    private:
        VisitedPool& pool_;
        std::unique_ptr<VisitedList> list_;
    };

    Lease
    acquire() {
        std::unique_ptr<VisitedList> list;
        {
            std::lock_guard lk(mu_);
            if (!free_.empty()) {
                list = std::move(free_.back());
                free_.pop_back();
            }
        }
        if (!list) {
            list = std::make_unique<VisitedList>(n_);
        }
        list->reset();
        return Lease(*this, std::move(list));
    }

private:
    void
    release(std::unique_ptr<VisitedList> list) {
        std::lock_guard lk(mu_);
        free_.push_back(std::move(list));
    }

    std::size_t n_;
    std::mutex mu_;
    std::vector<std::unique_ptr<VisitedList>> free_;
};

double
HnswParams::effective_lambda() const {
    return level_lambda > 0.0 ? level_lambda : 1.0 / std::log(static_cast<double>(M));
}

void
HnswParams::validate() const {
    if (M < 2) {
        throw InvalidArgument("HNSW requires M >= 2");
    }
    if (ef_construction < M) {
        throw InvalidArgument("HNSW requires ef_construction >= M");
    }
    if (level_lambda < 0.0) {
        throw InvalidArgument("level_lambda must be non-negative");
    }
}

HnswIndex::HnswIndex(std::shared_ptr<const ColumnTable> table,
                     const HnswParams& params,
                     std::uint64_t seed)
    : table_(std::move(table)),
      params_(params),
      seed_(seed),
      global_lock_(std::make_unique<std::mutex>()),
      visited_(std::make_unique<VisitedPool>(table_->row_count())) {
}

HnswIndex::HnswIndex(HnswIndex&&) noexcept = default;
HnswIndex&
HnswIndex::operator=(HnswIndex&&) noexcept = default;
HnswIndex::~HnswIndex() = default;

float
HnswIndex::distance(const float* query, RowId node) const noexcept {
    const std::uint32_t dim = table_->dim();
    return -dot_vectorized(query, table_->vectors().data().data() + std::size_t{node} * dim, dim);
}

std::uint32_t*
HnswIndex::links(RowId node, int layer) noexcept {
    if (layer == 0) {
        return base_links_.data() + std::size_t{node} * (2 * params_.M + 1);
    }
    return upper_links_[node].data() + static_cast<std::size_t>(layer - 1) * (params_.M + 1);
}

const std::uint32_t*
HnswIndex::links(RowId node, int layer) const noexcept {
    return const_cast<HnswIndex*>(this)->links(node, layer);
}

std::span<const RowId>
HnswIndex::neighbors(RowId node, int layer) const noexcept {
    if (layer > levels_[node]) {
        return {};
    }
    const std::uint32_t* l = links(node, layer);
    return {l + 1, l[0]};
}

RowId
HnswIndex::greedy_descend(const float* query,
                          RowId entry,
                          int from_layer,
                          int to_layer,
                          ProbeStats& stats) const {
    RowId cur = entry;
    float cur_dist = distance(query, cur);
    ++stats.distances;
    std::vector<std::uint32_t> scratch;
    for (int layer = from_layer; layer >= to_layer; --layer) {
        bool changed = true;
        while (changed) {
            changed = false;
            ++stats.hops;
            std::span<const std::uint32_t> adj;
            if (node_locks_) {
                std::lock_guard lk(node_locks_[cur]);
                const std::uint32_t* l = links(cur, layer);
                scratch.assign(l + 1, l + 1 + l[0]);
                adj = scratch;
            } else {
                adj = neighbors(cur, layer);
            }
            for (RowId n : adj) {
                const float d = distance(query, n);
                ++stats.distances;
                if (d < cur_dist || (d == cur_dist && n < cur)) {
                    cur_dist = d;
                    cur = n;
                    changed = true;
                }
            }
        }
    }
    return cur;
}

std::vector<HnswIndex::Candidate>
HnswIndex::search_layer(const float* query,
                        RowId entry,
                        std::size_t ef,
                        int layer,
                        const RelationalPredicate* predicate,
                        std::size_t hop_cap,
                        ProbeStats& stats) const {
    const auto closer = [](const Candidate& a, const Candidate& b) {
        return a.dist < b.dist || (a.dist == b.dist && a.id < b.id);
    };
    const auto farther = [&](const Candidate& a, const Candidate& b) { return closer(b, a); };
    // candidates: closest on top. results: farthest on top.
    std::priority_queue<Candidate, std::vector<Candidate>, decltype(farther)> candidates(farther);
    std::priority_queue<Candidate, std::vector<Candidate>, decltype(closer)> results(closer);

    const std::uint64_t* keys =
        predicate != nullptr ? table_->column(predicate->column).values.data() : nullptr;
    const auto qualifies = [&](RowId id) { return keys == nullptr || predicate->matches(keys[id]); };

    auto visited = visited_->acquire();
    const float d0 = distance(query, entry);
    ++stats.distances;
    visited->test_and_set(entry);
    candidates.push({d0, entry});
    if (qualifies(entry)) {
        results.push({d0, entry});
    }
    float lower_bound = results.empty() ? std::numeric_limits<float>::infinity() : d0;

    std::uint64_t expanded = 0;
    std::vector<std::uint32_t> scratch;
    while (!candidates.empty()) {
        const Candidate c = candidates.top();
        // Unfiltered: stop once the closest open candidate is worse than the
        // worst result. Filtered: only once ef qualifying results are held,
        // so disqualified nodes keep guiding the traversal.
        if (c.dist > lower_bound && (keys == nullptr || results.size() >= ef)) {
            break;
        }
        if (hop_cap != 0 && expanded >= hop_cap) {
            stats.truncated = true;
            break;
        }
        candidates.pop();
        ++expanded;

        std::span<const std::uint32_t> adj;
        if (node_locks_) {
            std::lock_guard lk(node_locks_[c.id]);
            const std::uint32_t* l = links(c.id, layer);
            scratch.assign(l + 1, l + 1 + l[0]);
            adj = scratch;
        } else {
            const std::uint32_t* l = links(c.id, layer);
            adj = {l + 1, l[0]};
        }
        for (RowId n : adj) {
            if (visited->test_and_set(n)) {
                continue;
            }
            const float d = distance(query, n);
            ++stats.distances;
            if (results.size() < ef || d < lower_bound) {
                candidates.push({d, n});
                if (qualifies(n)) {
                    results.push({d, n});
                    if (results.size() > ef) {
                        results.pop();
                    }
                }
                if (!results.empty()) {
                    lower_bound = results.top().dist;
                }
            }
        }
    }
    stats.hops += expanded;

    std::vector<Candidate> out;
    out.reserve(results.size());
    while (!results.empty()) {
        out.push_back(results.top());
        results.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<HnswIndex::Candidate>
HnswIndex::select_neighbors(std::vector<Candidate> candidates, std::size_t max_count) const {
    if (candidates.size() <= max_count) {
        return candidates;
    }
    const std::uint32_t dim = table_->dim();
    const float* data = table_->vectors().data().data();
    std::vector<Candidate> selected;
    selected.reserve(max_count);
    for (const auto& c : candidates) {
        if (selected.size() >= max_count) {
            break;
        }
        // Keep c only if it is closer to the base point than to every
        // neighbor already kept; this favors spreading edges over directions.
        bool keep = true;
        const float* cv = data + std::size_t{c.id} * dim;
        for (const auto& s : selected) {
            const float d = -dot_vectorized(cv, data + std::size_t{s.id} * dim, dim);
            if (d < c.dist) {
                keep = false;
                break;
            }
        }
        if (keep) {
            selected.push_back(c);
        }
    }
    return selected;
}

void
HnswIndex::connect(RowId node, int layer, const std::vector<Candidate>& selected) {
    {
        std::unique_lock<std::mutex> lk;
        if (node_locks_) {
            lk = std::unique_lock(node_locks_[node]);
        }
        std::uint32_t* own = links(node, layer);
        own[0] = static_cast<std::uint32_t>(selected.size());
        for (std::size_t i = 0; i < selected.size(); ++i) {
            own[i + 1] = selected[i].id;
        }
    }

    const std::size_t cap = params_.max_degree(layer);
    const std::uint32_t dim = table_->dim();
    const float* data = table_->vectors().data().data();
    for (const auto& s : selected) {
        std::unique_lock<std::mutex> lk;
        if (node_locks_) {
            lk = std::unique_lock(node_locks_[s.id]);
        }
        std::uint32_t* l = links(s.id, layer);
        const std::uint32_t count = l[0];
        if (std::find(l + 1, l + 1 + count, node) != l + 1 + count) {
            continue;
        }
        if (count < cap) {
            l[count + 1] = node;
            l[0] = count + 1;
            continue;
        }
        const float* sv = data + std::size_t{s.id} * dim;
        std::vector<Candidate> pool;
        pool.reserve(count + 1);
        pool.push_back({s.dist, node});
        for (std::uint32_t i = 0; i < count; ++i) {
            pool.push_back({-dot_vectorized(sv, data + std::size_t{l[i + 1]} * dim, dim), l[i + 1]});
        }
        std::sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
            return a.dist < b.dist || (a.dist == b.dist && a.id < b.id);
        });
        const auto kept = select_neighbors(std::move(pool), cap);
        l[0] = static_cast<std::uint32_t>(kept.size());
        for (std::size_t i = 0; i < kept.size(); ++i) {
            l[i + 1] = kept[i].id;
        }
    }
}

void
HnswIndex::insert(RowId node) {
    const float* q = table_->vectors().data().data() + std::size_t{node} * table_->dim();
    const int level = levels_[node];

    std::unique_lock glk(*global_lock_);
    const int top = max_level_;
    const RowId entry = entry_point_;
    if (level <= top) {
        glk.unlock();
    }

    ProbeStats scratch_stats;
    RowId cur = entry;
    if (level < top) {
        cur = greedy_descend(q, entry, top, level + 1, scratch_stats);
    }
    for (int layer = std::min(level, top); layer >= 0; --layer) {
        auto found = search_layer(q, cur, params_.ef_construction, layer, nullptr, 0, scratch_stats);
        std::erase_if(found, [node](const Candidate& c) { return c.id == node; });
        if (found.empty()) {
            continue;
        }
        cur = found.front().id;
        connect(node, layer, select_neighbors(std::move(found), params_.M));
    }
    if (level > top) {
        entry_point_ = node;
        max_level_ = level;
    }
}

HnswIndex
HnswIndex::build(std::shared_ptr<const ColumnTable> table,
                 const HnswParams& params,
                 std::uint64_t seed,
                 std::size_t threads) {
    if (!table || table->row_count() == 0) {
        throw InvalidArgument("cannot build an HNSW index over an empty table");
    }
    params.validate();
    if (params.metric == Metric::kCosine && !table->vectors().normalized()) {
        throw ContractViolation("cosine HNSW requires a normalized vector column");
    }

    HnswIndex index(std::move(table), params, seed);
    const std::size_t n = index.table_->row_count();
    const double lambda = params.effective_lambda();

    Xoshiro256StarStar rng(seed);
    index.levels_.resize(n);
    index.upper_links_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double level = std::floor(-std::log(rng.next_open_unit()) * lambda);
        index.levels_[i] = static_cast<std::uint8_t>(std::min<double>(level, kMaxLevel));
        index.upper_links_[i].assign(std::size_t{index.levels_[i]} * (params.M + 1), 0);
    }
    index.base_links_.assign(n * (2 * params.M + 1), 0);
    index.entry_point_ = 0;
    index.max_level_ = index.levels_[0];

    if (threads <= 1) {
        for (std::size_t i = 1; i < n; ++i) {
            index.insert(static_cast<RowId>(i));
        }
    } else {
        index.node_locks_ = std::make_unique<std::mutex[]>(n);
#pragma omp parallel for num_threads(static_cast<int>(threads)) schedule(dynamic, 64)
        for (std::size_t i = 1; i < n; ++i) {
            index.insert(static_cast<RowId>(i));
        }
        index.node_locks_.reset();
    }
    return index;
}

ProbeResult
HnswIndex::search(std::span<const float> query,
                  std::size_t k,
                  std::size_t ef_search,
                  const FilterMode& filter) const {
    const std::size_t ef = ef_search == 0 ? params_.ef_search : ef_search;
    if (k < 1) {
        throw InvalidArgument("k must be >= 1");
    }
    if (ef < k) {
        throw InvalidArgument("ef_search (" + std::to_string(ef) + ") must be >= k (" +
                              std::to_string(k) + ")");
    }
    if (query.size() != table_->dim()) {
        throw InvalidArgument("query dimensionality does not match the index");
    }
    std::vector<float> q(query.begin(), query.end());
    if (params_.metric == Metric::kCosine && normalize_in_place(q) == 0.0) {
        throw InvalidArgument("zero-norm query; cosine is undefined");
    }
    if (filter.kind != FilterMode::Kind::kNone) {
        if (!filter.predicate) {
            throw InvalidArgument("filtered search requires a relational predicate");
        }
        filter.predicate->validate();
        (void)table_->column(filter.predicate->column);
    }

    ProbeResult out;
    const auto run = [&](std::size_t want, std::size_t beam, const RelationalPredicate* pred,
                         std::size_t cap) {
        const RowId start = greedy_descend(q.data(), entry_point_, max_level_, 1, out.stats);
        auto found = search_layer(q.data(), start, beam, 0, pred, cap, out.stats);
        found.resize(std::min(found.size(), want));
        std::vector<Hit> hits;
        hits.reserve(found.size());
        for (const auto& c : found) {
            hits.push_back({c.id, -c.dist});
        }
        return hits;
    };

    switch (filter.kind) {
        case FilterMode::Kind::kNone:
            out.hits = run(k, ef, nullptr, 0);
            break;
        case FilterMode::Kind::kPre: {
            const std::size_t cap = std::max<std::size_t>(
                10 * ef, static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(size()))));
            out.hits = run(k, ef, &*filter.predicate, cap);
            break;
        }
        case FilterMode::Kind::kPost: {
            if (!(filter.overfetch_factor >= 1.0)) {
                throw InvalidArgument("overfetch_factor must be >= 1");
            }
            const auto fetch = std::min<std::size_t>(
                size(), static_cast<std::size_t>(std::ceil(static_cast<double>(k) *
                                                           filter.overfetch_factor)));
            auto hits = run(fetch, std::max(ef, fetch), nullptr, 0);
            const auto& keys = table_->column(filter.predicate->column).values;
            std::erase_if(hits, [&](const Hit& h) { return !filter.predicate->matches(keys[h.row]); });
            hits.resize(std::min(hits.size(), k));
            out.hits = std::move(hits);
            break;
        }
    }
    return out;
}

bool
HnswIndex::same_graph(const HnswIndex& other) const {
    return params_ == other.params_ && seed_ == other.seed_ && levels_ == other.levels_ &&
           base_links_ == other.base_links_ && upper_links_ == other.upper_links_ &&
           entry_point_ == other.entry_point_ && max_level_ == other.max_level_;
}

void
HnswIndex::save(std::ostream& out) const {
    out.write(kIndexMagic, sizeof(kIndexMagic));
    io::write_pod(out, kIndexVersion);
    io::write_pod(out, static_cast<std::uint64_t>(params_.M));
    io::write_pod(out, static_cast<std::uint64_t>(params_.ef_construction));
    io::write_pod(out, static_cast<std::uint64_t>(params_.ef_search));
    io::write_pod(out, static_cast<std::uint32_t>(params_.metric));
    io::write_pod(out, params_.level_lambda);
    io::write_pod(out, seed_);
    io::write_pod(out, static_cast<std::uint64_t>(size()));
    io::write_pod(out, entry_point_);
    io::write_pod(out, static_cast<std::int32_t>(max_level_));
    io::write_span(out, std::span<const std::uint8_t>(levels_));
    io::write_span(out, std::span<const std::uint32_t>(base_links_));
    for (const auto& upper : upper_links_) {
        io::write_span(out, std::span<const std::uint32_t>(upper));
    }
    if (!out) {
        throw FormatError("failed writing index");
    }
}

void
HnswIndex::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot open " + path.string() + " for writing");
    }
    save(out);
}

HnswIndex
HnswIndex::load(std::istream& in, std::shared_ptr<const ColumnTable> table) {
    char magic[4];
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(magic, magic + 4, kIndexMagic)) {
        throw FormatError("not a VXH1 index");
    }
    const auto version = io::read_pod<std::uint32_t>(in);
    if (version != kIndexVersion) {
        throw FormatError("unsupported index version " + std::to_string(version));
    }
    HnswParams params;
    params.M = io::read_pod<std::uint64_t>(in);
    params.ef_construction = io::read_pod<std::uint64_t>(in);
    params.ef_search = io::read_pod<std::uint64_t>(in);
    const auto metric = io::read_pod<std::uint32_t>(in);
    if (metric > static_cast<std::uint32_t>(Metric::kInnerProduct)) {
        throw FormatError("unknown metric id " + std::to_string(metric));
    }
    params.metric = static_cast<Metric>(metric);
    params.level_lambda = io::read_pod<double>(in);
    params.validate();
    const auto seed = io::read_pod<std::uint64_t>(in);
    const auto n = io::read_pod<std::uint64_t>(in);
    if (!table || table->row_count() != n) {
        throw FormatError("index has " + std::to_string(n) +
                          " nodes but the bound table does not match");
    }
    HnswIndex index(std::move(table), params, seed);
    index.entry_point_ = io::read_pod<RowId>(in);
    index.max_level_ = io::read_pod<std::int32_t>(in);
    index.levels_.resize(n);
    io::read_span(in, std::span<std::uint8_t>(index.levels_));
    index.base_links_.resize(n * (2 * params.M + 1));
    io::read_span(in, std::span<std::uint32_t>(index.base_links_));
    index.upper_links_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        index.upper_links_[i].resize(std::size_t{index.levels_[i]} * (params.M + 1));
        io::read_span(in, std::span<std::uint32_t>(index.upper_links_[i]));
    }
    if (index.entry_point_ >= n || index.levels_[index.entry_point_] != index.max_level_) {
        throw FormatError("index entry point is inconsistent");
    }
    return index;
}

HnswIndex
HnswIndex::load(const std::filesystem::path& path, std::shared_ptr<const ColumnTable> table) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw NotFound("cannot open " + path.string());
    }
    return load(in, std::move(table));
}

double
recall(const std::vector<std::vector<Hit>>& approx, const SearchResult& oracle) {
    if (approx.size() != oracle.size()) {
        throw InvalidArgument("recall needs one approximate list per oracle query");
    }
    if (approx.empty()) {
        return 1.0;
    }
    double total = 0.0;
    for (std::size_t q = 0; q < approx.size(); ++q) {
        const auto& truth = oracle.per_query[q];
        if (truth.empty()) {
            total += 1.0;
            continue;
        }
        std::unordered_set<RowId> want;
        for (const auto& h : truth) {
            want.insert(h.row);
        }
        std::size_t hit = 0;
        for (const auto& h : approx[q]) {
            hit += want.count(h.row);
        }
        total += static_cast<double>(hit) / static_cast<double>(truth.size());
    }
    return total / static_cast<double>(approx.size());
}

double
measure_recall(const HnswIndex& index,
               const QueryBatch& queries,
               std::size_t k,
               std::size_t ef_search,
               const FilterMode& filter,
               const SearchResult& oracle) {
    if (queries.size() != oracle.size()) {
        throw InvalidArgument("oracle covers " + std::to_string(oracle.size()) + " queries, batch has " +
                              std::to_string(queries.size()));
    }
    std::vector<std::vector<Hit>> approx;
    approx.reserve(queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q) {
        approx.push_back(index.search(queries.query(q), k, ef_search, filter).hits);
    }
    return recall(approx, oracle);
}

}  // namespace vexel
