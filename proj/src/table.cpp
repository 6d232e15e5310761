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

#include "vexel/table.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "binary_io.h"
#include "vexel/prng.h"

namespace vexel {

namespace {

constexpr char kTableMagic[4] = {'V', 'X', 'L', '1'};
constexpr std::uint32_t kVectorFlagNormalized = 1u;

const char*
op_name(CompareOp op) {
    switch (op) {
        case CompareOp::kLt:
            return "<";
        case CompareOp::kLe:
            return "<=";
        case CompareOp::kGt:
            return ">";
        case CompareOp::kGe:
            return ">=";
        case CompareOp::kBetween:
            return "between";
    }
    return "?";
}

}  // namespace

VectorColumn::VectorColumn(std::uint32_t dim, std::vector<float> data, bool normalized)
    : dim_(dim), data_(std::move(data)), normalized_(normalized) {
    if (dim_ == 0) {
        throw InvalidArgument("vector column dimensionality must be positive");
    }
    if (data_.size() % dim_ != 0) {
        throw InvalidArgument("vector data length " + std::to_string(data_.size()) +
                              " is not a multiple of dim " + std::to_string(dim_));
    }
}

RelationalPredicate
RelationalPredicate::between(std::string column, std::uint64_t lo, std::uint64_t hi) {
    RelationalPredicate p{std::move(column), CompareOp::kBetween, lo, hi};
    p.validate();
    return p;
}

void
RelationalPredicate::validate() const {
    if (op == CompareOp::kBetween && lo > hi) {
        throw InvalidArgument("BETWEEN predicate requires lower bound <= upper bound");
    }
}

std::string
RelationalPredicate::to_string() const {
    std::ostringstream os;
    os << column << ' ' << op_name(op) << ' ' << lo;
    if (op == CompareOp::kBetween) {
        os << " and " << hi;
    }
    return os.str();
}

ColumnTable::ColumnTable(VectorColumn vectors,
                         std::vector<RelationalColumn> rel_cols,
                         std::uint64_t seed,
                         std::uint32_t prng_id)
    : vectors_(std::move(vectors)), rel_cols_(std::move(rel_cols)), seed_(seed), prng_id_(prng_id) {
    if (vectors_.rows() > std::numeric_limits<RowId>::max()) {
        throw InvalidArgument("row count exceeds the row id range");
    }
    for (const auto& col : rel_cols_) {
        if (col.values.size() != vectors_.rows()) {
            throw InvalidArgument("relational column '" + col.name + "' has " +
                                  std::to_string(col.values.size()) + " rows, expected " +
                                  std::to_string(vectors_.rows()));
        }
    }
}

const RelationalColumn&
ColumnTable::column(const std::string& name) const {
    for (const auto& col : rel_cols_) {
        if (col.name == name) {
            return col;
        }
    }
    throw NotFound("no relational column named '" + name + "'");
}

ColumnTable
ColumnTable::with_vectors(VectorColumn vectors) const {
    return ColumnTable(std::move(vectors), rel_cols_, seed_, prng_id_);
}

bool
ColumnTable::operator==(const ColumnTable& other) const {
    if (dim() != other.dim() || row_count() != other.row_count() || seed_ != other.seed_ ||
        prng_id_ != other.prng_id_ || vectors_.normalized() != other.vectors_.normalized() ||
        rel_cols_.size() != other.rel_cols_.size()) {
        return false;
    }
    // Bitwise comparison so that -0.0f and NaN payloads are not papered over.
    const auto a = vectors_.data();
    const auto b = other.vectors_.data();
    if (!std::equal(a.begin(), a.end(), b.begin(), [](float x, float y) {
            return std::bit_cast<std::uint32_t>(x) == std::bit_cast<std::uint32_t>(y);
        })) {
        return false;
    }
    for (std::size_t c = 0; c < rel_cols_.size(); ++c) {
        if (rel_cols_[c].name != other.rel_cols_[c].name ||
            rel_cols_[c].values != other.rel_cols_[c].values) {
            return false;
        }
    }
    return true;
}

ColumnTable
generate_table(std::size_t rows, std::uint32_t dim, std::uint64_t seed) {
    if (rows == 0 || dim == 0) {
        throw InvalidArgument("generate_table requires rows >= 1 and dim >= 1");
    }
    Xoshiro256StarStar rng(seed);
    std::vector<float> data(rows * dim);
    for (auto& v : data) {
        v = rng.next_symmetric_float();
    }
    RelationalColumn key{kKeyColumn, std::vector<std::uint64_t>(rows)};
    for (auto& v : key.values) {
        v = rng();
    }
    std::vector<RelationalColumn> cols;
    cols.push_back(std::move(key));
    return ColumnTable(VectorColumn(dim, std::move(data)), std::move(cols), seed,
                       kPrngXoshiro256StarStar);
}

std::vector<float>
generate_queries(std::size_t n, std::uint32_t dim, std::uint64_t seed) {
    if (dim == 0) {
        throw InvalidArgument("generate_queries requires dim >= 1");
    }
    SplitMix64 mix(seed);
    Xoshiro256StarStar rng(mix.next() ^ 0x5eed0f9e7e5ULL);
    std::vector<float> out(n * dim);
    for (auto& v : out) {
        v = rng.next_symmetric_float();
    }
    return out;
}

RelationalPredicate
predicate_for_selectivity(double s) {
    if (!(s >= 0.0 && s <= 1.0)) {
        throw InvalidArgument("selectivity must lie in [0, 1]");
    }
    // 2^64 itself is not representable; the full range is expressed as <= max.
    const long double scaled = std::roundl(static_cast<long double>(s) * 0x1.0p64L);
    if (scaled >= 0x1.0p64L) {
        return {kKeyColumn, CompareOp::kLe, std::numeric_limits<std::uint64_t>::max(), 0};
    }
    return {kKeyColumn, CompareOp::kLt, static_cast<std::uint64_t>(scaled), 0};
}

SelectionVector
evaluate_predicate(const ColumnTable& table, const RelationalPredicate& pred) {
    pred.validate();
    const auto& values = table.column(pred.column).values;
    SelectionVector out;
    const std::size_t n = values.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (pred.matches(values[i])) {
            out.push_back(static_cast<RowId>(i));
        }
    }
    return out;
}

double
normalize_in_place(std::span<float> row) noexcept {
    double sq = 0.0;
    for (float v : row) {
        sq += static_cast<double>(v) * v;
    }
    const double norm = std::sqrt(sq);
    if (norm > 0.0) {
        const double inv = 1.0 / norm;
        for (auto& v : row) {
            v = static_cast<float>(v * inv);
        }
    }
    return norm;
}

VectorColumn
normalize_vectors(const VectorColumn& col) {
    VectorColumn out = col;
    const std::size_t n = out.rows();
    for (std::size_t i = 0; i < n; ++i) {
        std::span<float> row(out.data_.data() + i * out.dim_, out.dim_);
        if (normalize_in_place(row) == 0.0) {
            throw DegenerateVector(static_cast<RowId>(i),
                                   "row " + std::to_string(i) + " has zero norm");
        }
    }
    out.normalized_ = true;
    return out;
}

void
save_table(const ColumnTable& table, std::ostream& out) {
    out.write(kTableMagic, sizeof(kTableMagic));
    io::write_pod(out, static_cast<std::uint64_t>(table.row_count()));
    io::write_pod(out, table.dim());
    io::write_pod(out, static_cast<std::uint32_t>(table.relational_columns().size()));
    io::write_pod(out, table.prng_id());
    io::write_pod(out, table.seed());
    io::write_pod(out, table.vectors().normalized() ? kVectorFlagNormalized : 0u);
    io::write_span(out, table.vectors().data());
    for (const auto& col : table.relational_columns()) {
        io::write_string(out, col.name);
        io::write_span(out, std::span<const std::uint64_t>(col.values));
    }
    if (!out) {
        throw FormatError("failed writing table");
    }
}

void
save_table(const ColumnTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot open " + path.string() + " for writing");
    }
    save_table(table, out);
}

ColumnTable
load_table(std::istream& in) {
    char magic[4];
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(magic, magic + 4, kTableMagic)) {
        throw FormatError("not a VXL1 table");
    }
    const auto rows = io::read_pod<std::uint64_t>(in);
    const auto dim = io::read_pod<std::uint32_t>(in);
    const auto n_rel = io::read_pod<std::uint32_t>(in);
    const auto prng_id = io::read_pod<std::uint32_t>(in);
    const auto seed = io::read_pod<std::uint64_t>(in);
    const auto flags = io::read_pod<std::uint32_t>(in);
    if (dim == 0 || rows > std::numeric_limits<RowId>::max()) {
        throw FormatError("invalid table header");
    }
    std::vector<float> data(rows * dim);
    io::read_span(in, std::span<float>(data));
    std::vector<RelationalColumn> cols(n_rel);
    for (auto& col : cols) {
        col.name = io::read_string(in);
        col.values.resize(rows);
        io::read_span(in, std::span<std::uint64_t>(col.values));
    }
    return ColumnTable(VectorColumn(dim, std::move(data), (flags & kVectorFlagNormalized) != 0),
                       std::move(cols), seed, prng_id);
}

ColumnTable
load_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw NotFound("cannot open " + path.string());
    }
    return load_table(in);
}

}  // namespace vexel
