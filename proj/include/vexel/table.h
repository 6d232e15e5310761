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
#include <span>
#include <string>
#include <vector>

#include "vexel/errors.h"

namespace vexel {

// Dense row-major float matrix. Row i occupies data[i*dim, (i+1)*dim).
class VectorColumn {
public:
    VectorColumn() = default;
    VectorColumn(std::uint32_t dim, std::vector<float> data, bool normalized = false);

    std::uint32_t
    dim() const noexcept {
        return dim_;
    }

    std::size_t
    rows() const noexcept {
        return dim_ == 0 ? 0 : data_.size() / dim_;
    }

    bool
    normalized() const noexcept {
        return normalized_;
    }

    std::span<const float>
    row(std::size_t i) const noexcept {
        return {data_.data() + i * dim_, dim_};
    }

    std::span<const float>
    data() const noexcept {
        return data_;
    }

private:
    friend VectorColumn
    normalize_vectors(const VectorColumn& col);

    std::uint32_t dim_ = 0;
    std::vector<float> data_;
    bool normalized_ = false;
};

struct RelationalColumn {
    std::string name;
    std::vector<std::uint64_t> values;
};

enum class CompareOp : std::uint8_t { kLt, kLe, kGt, kGe, kBetween };

struct RelationalPredicate {
    std::string column;
    CompareOp op = CompareOp::kLt;
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;  // only meaningful for kBetween

    static RelationalPredicate
    between(std::string column, std::uint64_t lo, std::uint64_t hi);

    bool
    matches(std::uint64_t v) const noexcept {
        switch (op) {
            case CompareOp::kLt:
                return v < lo;
            case CompareOp::kLe:
                return v <= lo;
            case CompareOp::kGt:
                return v > lo;
            case CompareOp::kGe:
                return v >= lo;
            case CompareOp::kBetween:
                return lo <= v && v <= hi;
        }
        return false;
    }

    // Throws InvalidArgument when BETWEEN bounds are inverted.
    void
    validate() const;

    std::string
    to_string() const;
};

// Sorted, duplicate-free qualifying row ids.
using SelectionVector = std::vector<RowId>;

class ColumnTable {
public:
    ColumnTable() = default;
    ColumnTable(VectorColumn vectors,
                std::vector<RelationalColumn> rel_cols,
                std::uint64_t seed = 0,
                std::uint32_t prng_id = 0);

    std::size_t
    row_count() const noexcept {
        return vectors_.rows();
    }

    std::uint32_t
    dim() const noexcept {
        return vectors_.dim();
    }

    const VectorColumn&
    vectors() const noexcept {
        return vectors_;
    }

    const std::vector<RelationalColumn>&
    relational_columns() const noexcept {
        return rel_cols_;
    }

    // Throws NotFound.
    const RelationalColumn&
    column(const std::string& name) const;

    std::uint64_t
    seed() const noexcept {
        return seed_;
    }

    std::uint32_t
    prng_id() const noexcept {
        return prng_id_;
    }

    // Same relational data, vector column replaced (row count must match).
    ColumnTable
    with_vectors(VectorColumn vectors) const;

    bool
    operator==(const ColumnTable& other) const;

private:
    VectorColumn vectors_;
    std::vector<RelationalColumn> rel_cols_;
    std::uint64_t seed_ = 0;
    std::uint32_t prng_id_ = 0;
};

inline constexpr const char* kKeyColumn = "key";

// Vectors uniform in [-1, 1), one uniform u64 column named "key". Vectors are
// drawn first (row-major), then keys, from a single xoshiro256** stream.
ColumnTable
generate_table(std::size_t rows, std::uint32_t dim, std::uint64_t seed);

// n x dim query vectors from a stream independent of generate_table(seed).
std::vector<float>
generate_queries(std::size_t n, std::uint32_t dim, std::uint64_t seed);

// key < round(s * 2^64); s == 1 becomes key <= UINT64_MAX.
RelationalPredicate
predicate_for_selectivity(double s);

SelectionVector
evaluate_predicate(const ColumnTable& table, const RelationalPredicate& pred);

VectorColumn
normalize_vectors(const VectorColumn& col);

// Scales row to unit length; returns the original Euclidean norm and leaves
// zero rows untouched.
double
normalize_in_place(std::span<float> row) noexcept;

void
save_table(const ColumnTable& table, std::ostream& out);
void
save_table(const ColumnTable& table, const std::filesystem::path& path);
ColumnTable
load_table(std::istream& in);
ColumnTable
load_table(const std::filesystem::path& path);

}  // namespace vexel
