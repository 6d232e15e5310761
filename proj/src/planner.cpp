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

#include "vexel/planner.h"

#include <spdlog/spdlog.h>

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "vexel/keyed_text.h"
#include "vexel/scan.h"
#include "vexel/tensor.h"

namespace vexel {

namespace {

using Clock = std::chrono::steady_clock;

double
log_distance(double a, double b) {
    return std::abs(std::log(std::max(a, 1e-12)) - std::log(std::max(b, 1e-12)));
}

template <typename Map>
auto
nearest_key(const Map& m, double target) {
    auto best = m.begin();
    for (auto it = m.begin(); it != m.end(); ++it) {
        if (log_distance(static_cast<double>(it->first), target) <
            log_distance(static_cast<double>(best->first), target)) {
            best = it;
        }
    }
    return best;
}

// Piecewise-linear interpolation over (x, y) sorted by x; clamps outside.
double
interpolate(const std::vector<std::pair<double, double>>& pts, double x) {
    if (pts.empty()) {
        return 0.0;
    }
    if (x <= pts.front().first) {
        return pts.front().second;
    }
    if (x >= pts.back().first) {
        return pts.back().second;
    }
    auto hi = std::lower_bound(pts.begin(), pts.end(), x,
                               [](const auto& p, double v) { return p.first < v; });
    auto lo = std::prev(hi);
    const double t = (x - lo->first) / (hi->first - lo->first);
    return lo->second + t * (hi->second - lo->second);
}

double
log_s(double s) {
    return std::log(std::max(s, 1e-6));
}

double
median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Smallest s such that probe beats scan at every grid point >= s; nullopt if
// the scan wins at the largest grid point.
std::optional<double>
find_crossover(const std::vector<double>& grid,
               const std::function<double(double)>& scan_cost,
               const std::function<double(double)>& probe_cost) {
    if (grid.empty()) {
        return std::nullopt;
    }
    std::vector<double> diff(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        diff[i] = probe_cost(grid[i]) - scan_cost(grid[i]);
    }
    if (diff.back() >= 0.0) {
        return std::nullopt;
    }
    std::size_t last_loss = grid.size();
    for (std::size_t i = grid.size(); i-- > 0;) {
        if (diff[i] >= 0.0) {
            last_loss = i;
            break;
        }
    }
    if (last_loss == grid.size()) {
        return 0.0;
    }
    const std::size_t win = last_loss + 1;
    const double d0 = diff[last_loss];
    const double d1 = diff[win];
    const double t = d0 / (d0 - d1);
    return grid[last_loss] + t * (grid[win] - grid[last_loss]);
}

std::string
format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

const char*
metric_name(Metric m) {
    return m == Metric::kCosine ? "cosine" : "inner_product";
}

Metric
parse_metric(const std::string& s, std::size_t line) {
    if (s == "cosine") {
        return Metric::kCosine;
    }
    if (s == "inner_product") {
        return Metric::kInnerProduct;
    }
    throw ParseError(line, "unknown metric '" + s + "'");
}

std::vector<double>
model_grid() {
    std::vector<double> grid;
    constexpr int kPoints = 241;
    for (int i = 0; i < kPoints; ++i) {
        grid.push_back(std::pow(10.0, -3.0 + 3.0 * i / (kPoints - 1)));
    }
    return grid;
}

}  // namespace

const char*
to_string(AccessPath path) noexcept {
    switch (path) {
        case AccessPath::kScanPerTuple:
            return "SCAN_PER_TUPLE";
        case AccessPath::kScanTensor:
            return "SCAN_TENSOR";
        case AccessPath::kProbePre:
            return "PROBE_PRE";
    }
    return "?";
}

double
ScanCostModel::predict(std::size_t rows, std::size_t batch, double s) const noexcept {
    const double r = static_cast<double>(rows);
    const double n = static_cast<double>(batch);
    return r * per_row_ns + s * r * per_qualified_ns + n * per_query_ns + n * s * r * per_distance_ns;
}

double
TensorCostModel::predict(std::size_t rows, std::size_t batch, double s) const noexcept {
    const double r = static_cast<double>(rows);
    const double n = static_cast<double>(batch);
    return r * per_row_ns + s * r * per_gathered_ns + n * per_query_ns + n * s * r * per_score_ns;
}

bool
ProbeCostModel::has_counts() const noexcept {
    return std::any_of(points.begin(), points.end(),
                       [](const ProbePoint& p) { return p.distances > 0.0; });
}

double
ProbeCostModel::predict_query_ns(double s, std::uint32_t target_dim) const {
    if (points.empty()) {
        return std::numeric_limits<double>::infinity();
    }
    const double scale = dim == 0 ? 1.0 : static_cast<double>(target_dim) / dim;
    std::vector<std::pair<double, double>> hops, dists, lat;
    for (const auto& p : points) {
        hops.emplace_back(log_s(p.selectivity), p.hops);
        dists.emplace_back(log_s(p.selectivity), p.distances);
        lat.emplace_back(log_s(p.selectivity), p.query_ns);
    }
    const double x = log_s(s);
    if (!has_counts()) {
        return interpolate(lat, x) * scale;
    }
    return per_query_ns + per_hop_ns * interpolate(hops, x) +
           per_distance_ns * interpolate(dists, x) * scale;
}

double
CalibrationProfile::predict(AccessPath path,
                            std::uint32_t dim,
                            std::size_t n_rows,
                            std::size_t batch,
                            double s) const {
    const std::size_t r = n_rows == 0 ? rows : n_rows;
    switch (path) {
        case AccessPath::kScanPerTuple: {
            if (scan.empty()) {
                break;
            }
            auto it = nearest_key(scan, dim);
            ScanCostModel m = it->second;
            const double scale = static_cast<double>(dim) / it->first;
            m.per_qualified_ns *= scale;
            m.per_distance_ns *= scale;
            return m.predict(r, batch, s);
        }
        case AccessPath::kScanTensor: {
            if (tensor.empty()) {
                break;
            }
            auto it = nearest_key(tensor, dim);
            TensorCostModel m = it->second;
            const double scale = static_cast<double>(dim) / it->first;
            m.per_gathered_ns *= scale;
            m.per_score_ns *= scale;
            return m.predict(r, batch, s);
        }
        case AccessPath::kProbePre: {
            if (probe.empty()) {
                break;
            }
            auto it = nearest_key(probe, dim);
            return static_cast<double>(batch) * it->second.predict_query_ns(s, dim);
        }
    }
    return std::numeric_limits<double>::infinity();
}

namespace {

// Least squares on relative error: timings span several orders of magnitude
// across the grid, and an absolute fit would ignore the small batches.
std::vector<double>
fit_relative(std::vector<std::vector<double>> features, std::vector<double> target) {
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double w = target[i] > 0.0 ? 1.0 / target[i] : 1.0;
        for (auto& f : features[i]) {
            f *= w;
        }
        target[i] *= w;
    }
    return fit_nonnegative(features, target);
}

}  // namespace

std::vector<double>
fit_nonnegative(const std::vector<std::vector<double>>& features, const std::vector<double>& target) {
    if (features.empty() || features.size() != target.size()) {
        throw InvalidArgument("least squares needs one target per sample and at least one sample");
    }
    const std::size_t n_features = features.front().size();
    const auto n_samples = static_cast<Eigen::Index>(features.size());
    std::vector<bool> active(n_features, true);
    std::vector<double> coef(n_features, 0.0);
    // Column scaling keeps the normal system well conditioned when features
    // differ by many orders of magnitude (rows vs N*s*rows).
    std::vector<double> scale(n_features, 1.0);
    for (std::size_t j = 0; j < n_features; ++j) {
        double mx = 0.0;
        for (const auto& row : features) {
            mx = std::max(mx, std::abs(row[j]));
        }
        scale[j] = mx > 0.0 ? mx : 1.0;
    }
    for (std::size_t iter = 0; iter <= n_features; ++iter) {
        std::vector<std::size_t> cols;
        for (std::size_t j = 0; j < n_features; ++j) {
            if (active[j]) {
                cols.push_back(j);
            }
        }
        std::fill(coef.begin(), coef.end(), 0.0);
        if (cols.empty()) {
            break;
        }
        Eigen::MatrixXd a(n_samples, static_cast<Eigen::Index>(cols.size()));
        Eigen::VectorXd b(n_samples);
        for (Eigen::Index i = 0; i < n_samples; ++i) {
            for (std::size_t c = 0; c < cols.size(); ++c) {
                a(i, static_cast<Eigen::Index>(c)) = features[i][cols[c]] / scale[cols[c]];
            }
            b(i) = target[i];
        }
        const Eigen::VectorXd x = a.completeOrthogonalDecomposition().solve(b);
        std::size_t worst = n_features;
        double worst_value = 0.0;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const double v = x(static_cast<Eigen::Index>(c));
            coef[cols[c]] = v / scale[cols[c]];
            if (v < worst_value) {
                worst_value = v;
                worst = cols[c];
            }
        }
        if (worst == n_features) {
            return coef;
        }
        active[worst] = false;
    }
    for (auto& c : coef) {
        c = std::max(c, 0.0);
    }
    return coef;
}

CalibrationProfile
fit_profile(const std::vector<CalibrationSample>& samples,
            const std::vector<std::uint32_t>& dims,
            const std::vector<std::size_t>& batches,
            std::size_t rows,
            const CalibrationProfile& meta) {
    if (dims.empty() || batches.empty()) {
        throw InvalidArgument("calibration grid must name at least one dim and one batch size");
    }
    CalibrationProfile profile = meta;
    profile.rows = rows;
    profile.scan.clear();
    profile.tensor.clear();
    profile.probe.clear();
    profile.buckets.clear();
    const double r = static_cast<double>(rows);

    std::set<std::uint32_t> sample_dims;
    // The per-dim probe model is fitted on the smallest timed batch, the one
    // closest to a single query stream.
    std::map<std::uint32_t, std::size_t> probe_batch;
    for (const auto& s : samples) {
        sample_dims.insert(s.dim);
        if (s.path == AccessPath::kProbePre) {
            auto [it, fresh] = probe_batch.emplace(s.dim, s.batch);
            if (!fresh) {
                it->second = std::min(it->second, s.batch);
            }
        }
    }
    for (std::uint32_t d : sample_dims) {
        std::vector<std::vector<double>> fx_scan, fx_tensor, fx_probe;
        std::vector<double> y_scan, y_tensor, y_probe;
        std::map<double, std::vector<const CalibrationSample*>> probe_by_s;
        for (const auto& s : samples) {
            if (s.dim != d) {
                continue;
            }
            const double n = static_cast<double>(s.batch);
            switch (s.path) {
                case AccessPath::kScanPerTuple:
                    fx_scan.push_back({r, s.selectivity * r, n, n * s.selectivity * r});
                    y_scan.push_back(s.wall_ns);
                    break;
                case AccessPath::kScanTensor:
                    fx_tensor.push_back({r, s.selectivity * r, n, n * s.selectivity * r});
                    y_tensor.push_back(s.wall_ns);
                    break;
                case AccessPath::kProbePre:
                    if (s.batch == probe_batch[d]) {
                        probe_by_s[s.selectivity].push_back(&s);
                    }
                    break;
            }
        }
        if (!y_scan.empty()) {
            const auto c = fit_relative(fx_scan, y_scan);
            profile.scan[d] = {c[0], c[1], c[2], c[3]};
        }
        if (!y_tensor.empty()) {
            const auto c = fit_relative(fx_tensor, y_tensor);
            profile.tensor[d] = {c[0], c[1], c[2], c[3]};
        }
        if (!probe_by_s.empty()) {
            ProbeCostModel pm;
            pm.dim = d;
            for (const auto& [sel, group] : probe_by_s) {
                ProbePoint p{sel, 0.0, 0.0, 0.0};
                for (const auto* g : group) {
                    p.query_ns += g->wall_ns / static_cast<double>(std::max<std::size_t>(1, g->batch));
                    p.hops += g->hops;
                    p.distances += g->distances;
                }
                const double cnt = static_cast<double>(group.size());
                p.query_ns /= cnt;
                p.hops /= cnt;
                p.distances /= cnt;
                pm.points.push_back(p);
                fx_probe.push_back({1.0, p.hops, p.distances});
                y_probe.push_back(p.query_ns);
            }
            if (pm.has_counts()) {
                const auto c = fit_relative(fx_probe, y_probe);
                pm.per_query_ns = c[0];
                pm.per_hop_ns = c[1];
                pm.per_distance_ns = c[2];
            }
            profile.probe[d] = std::move(pm);
        }
    }

    const auto grid = model_grid();
    for (std::uint32_t d : dims) {
        for (std::size_t b : batches) {
            Bucket bucket;
            if (!profile.probe_available || profile.probe.empty()) {
                profile.buckets[{d, b}] = bucket;
                continue;
            }
            // Measured curves for this exact bucket, if both sides were timed.
            std::map<AccessPath, std::vector<std::pair<double, double>>> curves;
            for (const auto& s : samples) {
                if (s.dim == d && s.batch == b && s.path != AccessPath::kProbePre) {
                    curves[s.path].emplace_back(s.selectivity, s.wall_ns);
                }
            }
            // Probe timings for this exact batch when they exist; otherwise the
            // per-query points of this dim scaled by the batch size.
            std::map<double, std::vector<double>> probe_exact;
            for (const auto& s : samples) {
                if (s.dim == d && s.batch == b && s.path == AccessPath::kProbePre) {
                    probe_exact[s.selectivity].push_back(s.wall_ns);
                }
            }
            std::vector<std::pair<double, double>> probe_curve;
            if (!probe_exact.empty()) {
                for (const auto& [sel, walls] : probe_exact) {
                    probe_curve.emplace_back(sel, std::accumulate(walls.begin(), walls.end(), 0.0) /
                                                      static_cast<double>(walls.size()));
                }
            } else if (const auto it = profile.probe.find(d); it != profile.probe.end()) {
                for (const auto& p : it->second.points) {
                    probe_curve.emplace_back(p.selectivity, p.query_ns * static_cast<double>(b));
                }
            }
            if (!curves.empty() && !probe_curve.empty()) {
                std::set<double> xs;
                double lo = probe_curve.front().first;
                double hi = probe_curve.back().first;
                for (auto& [path, pts] : curves) {
                    std::sort(pts.begin(), pts.end());
                    lo = std::max(lo, pts.front().first);
                    hi = std::min(hi, pts.back().first);
                    for (const auto& p : pts) {
                        xs.insert(p.first);
                    }
                }
                for (const auto& p : probe_curve) {
                    xs.insert(p.first);
                }
                std::vector<double> measured_grid;
                for (double x : xs) {
                    if (x >= lo && x <= hi) {
                        measured_grid.push_back(x);
                    }
                }
                const auto scan_cost = [&](double x) {
                    double best = std::numeric_limits<double>::infinity();
                    for (const auto& [path, pts] : curves) {
                        best = std::min(best, interpolate(pts, x));
                    }
                    return best;
                };
                const auto probe_cost = [&](double x) { return interpolate(probe_curve, x); };
                if (measured_grid.size() >= 2) {
                    bucket.crossover = find_crossover(measured_grid, scan_cost, probe_cost);
                    bucket.measured = true;
                    profile.buckets[{d, b}] = bucket;
                    continue;
                }
            }
            const auto scan_cost = [&](double x) {
                return std::min(profile.predict(AccessPath::kScanPerTuple, d, rows, b, x),
                                profile.predict(AccessPath::kScanTensor, d, rows, b, x));
            };
            const auto probe_cost = [&](double x) {
                return profile.predict(AccessPath::kProbePre, d, rows, b, x);
            };
            bucket.crossover = find_crossover(grid, scan_cost, probe_cost);
            profile.buckets[{d, b}] = bucket;
        }
    }
    return profile;
}

CalibrationProfile
calibrate(const ColumnTable& table, const HnswIndex* index, const CalibrationGrid& grid) {
    if (grid.dims.empty() || grid.batches.empty() || grid.selectivities.empty()) {
        throw InvalidArgument("calibration grid is empty");
    }
    if (table.row_count() == 0) {
        throw InvalidArgument("calibration needs a non-empty table");
    }
    if (index != nullptr && &index->table() != &table && index->table().dim() != table.dim()) {
        throw InvalidArgument("index must be built over the calibration table");
    }
    const std::size_t rows = table.row_count();
    const std::size_t repeats = std::max<std::size_t>(1, grid.repeats);

    CalibrationProfile meta;
    meta.rows = rows;
    meta.k = grid.k;
    // A probe over a table no larger than its beam visits every row; the
    // exhaustive scan does the same work exactly.
    meta.probe_available = index != nullptr && rows > grid.ef_search;
    if (index != nullptr) {
        meta.index_metric = index->params().metric;
        meta.index_M = index->params().M;
        meta.index_ef_construction = index->params().ef_construction;
        meta.index_ef_search = grid.ef_search;
    }

    std::vector<std::size_t> measured_batches;
    for (std::size_t b : grid.batches) {
        if (b <= grid.max_measured_batch) {
            measured_batches.push_back(b);
        }
    }
    if (measured_batches.empty()) {
        measured_batches.push_back(*std::min_element(grid.batches.begin(), grid.batches.end()));
    }
    const std::size_t max_batch = *std::max_element(measured_batches.begin(), measured_batches.end());

    const auto time_ns = [&](auto&& fn) {
        fn();  // warm-up, touches the data
        std::vector<double> runs;
        for (std::size_t i = 0; i < repeats; ++i) {
            const auto t0 = Clock::now();
            fn();
            runs.push_back(std::chrono::duration<double, std::nano>(Clock::now() - t0).count());
        }
        return median(runs);
    };

    std::vector<CalibrationSample> samples;
    for (std::uint32_t d : grid.dims) {
        std::optional<ColumnTable> owned;
        const ColumnTable* t = &table;
        if (d != table.dim()) {
            auto raw = generate_table(rows, d, grid.seed);
            owned.emplace(raw.with_vectors(normalize_vectors(raw.vectors())));
            t = &*owned;
        }
        const auto all_queries = generate_queries(std::max(max_batch, grid.probe_queries), d, grid.seed);
        for (std::size_t b : measured_batches) {
            for (double s : grid.selectivities) {
                QueryBatch batch{d,
                                 {all_queries.begin(), all_queries.begin() + b * d},
                                 predicate_for_selectivity(s),
                                 SimilarityPredicate::top_k(grid.k)};
                const double scan_ns = time_ns([&] {
                    (void)scan_per_tuple(*t, batch, {Kernel::kVectorized, grid.threads});
                });
                samples.push_back({AccessPath::kScanPerTuple, d, b, s, scan_ns, 0, 0});
                const double tensor_ns = time_ns([&] {
                    (void)tensor_search(*t, batch, {GemmBackend::kBlas, grid.threads});
                });
                samples.push_back({AccessPath::kScanTensor, d, b, s, tensor_ns, 0, 0});
                spdlog::debug("calibrate d={} b={} s={} per-tuple={:.3f}ms tensor={:.3f}ms", d, b, s,
                              scan_ns / 1e6, tensor_ns / 1e6);
            }
        }
        if (index != nullptr && d == index->table().dim()) {
            const std::size_t pq = std::max<std::size_t>(1, grid.probe_queries);
            for (double s : grid.selectivities) {
                const auto filter = FilterMode::pre(predicate_for_selectivity(s));
                double hops = 0.0;
                double dists = 0.0;
                const double wall = time_ns([&] {
                    hops = 0.0;
                    dists = 0.0;
                    for (std::size_t q = 0; q < pq; ++q) {
                        std::span<const float> qv(all_queries.data() + q * d, d);
                        const auto r = index->search(qv, grid.k, grid.ef_search, filter);
                        hops += static_cast<double>(r.stats.hops);
                        dists += static_cast<double>(r.stats.distances);
                    }
                });
                samples.push_back({AccessPath::kProbePre, d, pq, s, wall, hops / pq, dists / pq});
                spdlog::debug("calibrate probe d={} s={} {:.3f}ms/query", d, s, wall / pq / 1e6);
            }
        }
    }
    return fit_profile(samples, grid.dims, grid.batches, rows, meta);
}

PathChoice
choose_path(const QueryContext& ctx, const CalibrationProfile& profile) {
    const std::size_t rows = ctx.rows == 0 ? profile.rows : ctx.rows;
    const double s = std::clamp(ctx.selectivity_est, 0.0, 1.0);
    const std::size_t n = std::max<std::size_t>(1, ctx.batch_size);

    const double per_tuple = profile.predict(AccessPath::kScanPerTuple, ctx.dim, rows, n, s);
    const double tensor = profile.predict(AccessPath::kScanTensor, ctx.dim, rows, n, s);
    PathChoice scan_choice;
    scan_choice.path = tensor < per_tuple ? AccessPath::kScanTensor : AccessPath::kScanPerTuple;
    std::ostringstream cost;
    cost.precision(3);
    cost << "predicted per-tuple " << per_tuple / 1e6 << " ms vs tensor " << tensor / 1e6 << " ms";

    const auto scan_because = [&](const std::string& why) {
        PathChoice c = scan_choice;
        c.reason = why + "; " + cost.str();
        return c;
    };

    if (ctx.require_exact) {
        return scan_because("exact result required, index is approximate");
    }
    if (ctx.mode == SimilarityPredicate::Mode::kThreshold) {
        return scan_because("similarity threshold query, index answers top-k only");
    }
    if (!profile.probe_available) {
        return scan_because("no probe path calibrated");
    }
    if (ctx.metric != profile.index_metric) {
        return scan_because(std::string("query metric differs from index metric ") +
                            metric_name(profile.index_metric));
    }

    // Nearest bucket: dim first, then batch within that dim.
    std::optional<BucketKey> key;
    for (const auto& [k, b] : profile.buckets) {
        if (!key || log_distance(k.dim, ctx.dim) < log_distance(key->dim, ctx.dim) ||
            (k.dim == key->dim && log_distance(static_cast<double>(k.batch), static_cast<double>(n)) <
                                      log_distance(static_cast<double>(key->batch),
                                                   static_cast<double>(n)))) {
            key = k;
        }
    }
    if (!key) {
        return scan_because("profile has no buckets");
    }
    if (key->dim != ctx.dim || key->batch != n) {
        spdlog::warn("planner: context (dim={}, batch={}) is off-grid, using bucket (dim={}, batch={})",
                     ctx.dim, n, key->dim, key->batch);
    }
    const Bucket& bucket = profile.buckets.at(*key);
    if (!bucket.crossover) {
        return scan_because("scan wins at every selectivity in bucket");
    }
    std::ostringstream why;
    why.precision(3);
    if (s > *bucket.crossover) {
        why << "selectivity " << s << " above crossover " << *bucket.crossover;
        return {AccessPath::kProbePre, why.str()};
    }
    why << "selectivity " << s << " at or below crossover " << *bucket.crossover;
    return scan_because(why.str());
}

void
save_profile(const CalibrationProfile& p, std::ostream& out) {
    out << "# vexel calibration profile\n";
    out << "version = " << CalibrationProfile::kVersion << "\n";
    out << "rows = " << p.rows << "\n";
    out << "k = " << p.k << "\n";
    out << "probe.available = " << (p.probe_available ? "true" : "false") << "\n";
    out << "index.metric = " << metric_name(p.index_metric) << "\n";
    out << "index.M = " << p.index_M << "\n";
    out << "index.ef_construction = " << p.index_ef_construction << "\n";
    out << "index.ef_search = " << p.index_ef_search << "\n";
    out << "# scan.<dim> = per_row_ns per_qualified_ns per_query_ns per_distance_ns\n";
    for (const auto& [d, m] : p.scan) {
        out << "scan." << d << " = " << format_double(m.per_row_ns) << ' '
            << format_double(m.per_qualified_ns) << ' ' << format_double(m.per_query_ns) << ' '
            << format_double(m.per_distance_ns) << "\n";
    }
    out << "# tensor.<dim> = per_row_ns per_gathered_ns per_query_ns per_score_ns\n";
    for (const auto& [d, m] : p.tensor) {
        out << "tensor." << d << " = " << format_double(m.per_row_ns) << ' '
            << format_double(m.per_gathered_ns) << ' ' << format_double(m.per_query_ns) << ' '
            << format_double(m.per_score_ns) << "\n";
    }
    out << "# probe.<dim>.coef = per_query_ns per_hop_ns per_distance_ns\n";
    out << "# probe.<dim>.points = selectivity:query_ns:hops:distances, ...\n";
    for (const auto& [d, m] : p.probe) {
        out << "probe." << d << ".coef = " << format_double(m.per_query_ns) << ' '
            << format_double(m.per_hop_ns) << ' ' << format_double(m.per_distance_ns) << "\n";
        out << "probe." << d << ".points = ";
        for (std::size_t i = 0; i < m.points.size(); ++i) {
            const auto& pt = m.points[i];
            out << (i ? ", " : "") << format_double(pt.selectivity) << ':'
                << format_double(pt.query_ns) << ':' << format_double(pt.hops) << ':'
                << format_double(pt.distances);
        }
        out << "\n";
    }
    out << "# bucket.<dim>.<batch> = <crossover|none> <measured|model>\n";
    for (const auto& [k, b] : p.buckets) {
        out << "bucket." << k.dim << '.' << k.batch << " = "
            << (b.crossover ? format_double(*b.crossover) : std::string("none")) << ' '
            << (b.measured ? "measured" : "model") << "\n";
    }
}

void
save_profile(const CalibrationProfile& profile, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw FormatError("cannot open " + path.string() + " for writing");
    }
    save_profile(profile, out);
}

CalibrationProfile
load_profile(std::istream& in) {
    const auto kt = KeyedText::parse(in);
    const auto version = kt.u64("version");
    if (version != CalibrationProfile::kVersion) {
        throw ParseError(kt.entries().at("version").line,
                         "unsupported profile version " + std::to_string(version));
    }
    CalibrationProfile p;
    p.rows = kt.u64("rows");
    p.k = kt.u64("k", 64);
    p.probe_available = kt.boolean("probe.available", false);
    if (kt.has("index.metric")) {
        p.index_metric = parse_metric(kt.str("index.metric"), kt.entries().at("index.metric").line);
    }
    p.index_M = kt.u64("index.M", 0);
    p.index_ef_construction = kt.u64("index.ef_construction", 0);
    p.index_ef_search = kt.u64("index.ef_search", 0);

    const auto numbers = [](const KeyedText::Entry& e, std::size_t expect) {
        std::vector<double> out;
        for (const auto& tok : KeyedText::split(e.value, ' ')) {
            out.push_back(KeyedText::to_f64(tok, e.line));
        }
        if (out.size() != expect) {
            throw ParseError(e.line, "expected " + std::to_string(expect) + " numbers");
        }
        return out;
    };
    const auto dim_of = [](const std::string& text, std::size_t line) {
        return static_cast<std::uint32_t>(KeyedText::to_u64(text, line));
    };

    for (const auto& [key, e] : kt.entries()) {
        const auto parts = KeyedText::split(key, '.');
        if (parts.size() == 2 && parts[0] == "scan") {
            const auto c = numbers(e, 4);
            p.scan[dim_of(parts[1], e.line)] = {c[0], c[1], c[2], c[3]};
        } else if (parts.size() == 2 && parts[0] == "tensor") {
            const auto c = numbers(e, 4);
            p.tensor[dim_of(parts[1], e.line)] = {c[0], c[1], c[2], c[3]};
        } else if (parts.size() == 3 && parts[0] == "probe") {
            auto& m = p.probe[dim_of(parts[1], e.line)];
            m.dim = dim_of(parts[1], e.line);
            if (parts[2] == "coef") {
                const auto c = numbers(e, 3);
                m.per_query_ns = c[0];
                m.per_hop_ns = c[1];
                m.per_distance_ns = c[2];
            } else if (parts[2] == "points") {
                for (const auto& item : KeyedText::split(e.value, ',')) {
                    const auto f = KeyedText::split(item, ':');
                    if (f.size() != 4) {
                        throw ParseError(e.line, "probe point needs 4 fields, got '" + item + "'");
                    }
                    m.points.push_back({KeyedText::to_f64(f[0], e.line), KeyedText::to_f64(f[1], e.line),
                                        KeyedText::to_f64(f[2], e.line),
                                        KeyedText::to_f64(f[3], e.line)});
                }
            } else {
                throw ParseError(e.line, "unknown probe key '" + key + "'");
            }
        } else if (parts.size() == 3 && parts[0] == "bucket") {
            const auto f = KeyedText::split(e.value, ' ');
            if (f.size() != 2 || (f[1] != "measured" && f[1] != "model")) {
                throw ParseError(e.line, "bucket value must be '<crossover|none> <measured|model>'");
            }
            Bucket b;
            if (f[0] != "none") {
                b.crossover = KeyedText::to_f64(f[0], e.line);
            }
            b.measured = f[1] == "measured";
            p.buckets[{dim_of(parts[1], e.line),
                       static_cast<std::size_t>(KeyedText::to_u64(parts[2], e.line))}] = b;
        } else if (key == "probe.available") {
            continue;
        } else if (parts[0] == "scan" || parts[0] == "tensor" || parts[0] == "probe" ||
                   parts[0] == "bucket") {
            throw ParseError(e.line, "malformed key '" + key + "'");
        }
    }
    return p;
}

CalibrationProfile
load_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw NotFound("cannot open " + path.string());
    }
    return load_profile(in);
}

}  // namespace vexel
