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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vexel/errors.h"
#include "vexel/similarity.h"
#include "vexel/table.h"

namespace vexel {

struct Hit {
    RowId row = 0;
    float score = 0.0f;

    friend bool
    operator==(const Hit&, const Hit&) = default;
};

// Ranking order shared by every access path: higher score first, lower row id
// on ties.
inline bool
ranks_before(const Hit& a, const Hit& b) noexcept {
    return a.score > b.score || (a.score == b.score && a.row < b.row);
}

struct SimilarityPredicate {
    enum class Mode : std::uint8_t { kThreshold, kTopK };

    Metric metric = Metric::kCosine;
    Mode mode = Mode::kTopK;
    float tau = 0.9f;
    std::size_t k = 64;

    static SimilarityPredicate
    threshold(float tau, Metric metric = Metric::kCosine) {
        return {metric, Mode::kThreshold, tau, 0};
    }

    static SimilarityPredicate
    top_k(std::size_t k, Metric metric = Metric::kCosine) {
        return {metric, Mode::kTopK, 0.0f, k};
    }

    bool
    is_top_k() const noexcept {
        return mode == Mode::kTopK;
    }

    void
    validate() const;
};

// N query vectors sharing one relational and one similarity predicate.
struct QueryBatch {
    std::uint32_t dim = 0;
    std::vector<float> vectors;  // N x dim, row-major
    std::optional<RelationalPredicate> predicate;
    SimilarityPredicate similarity;

    std::size_t
    size() const noexcept {
        return dim == 0 ? 0 : vectors.size() / dim;
    }

    std::span<const float>
    query(std::size_t i) const noexcept {
        return {vectors.data() + i * dim, dim};
    }
};

// Per query: THRESHOLD hits ordered by row id, TOP_K hits in rank order.
struct SearchResult {
    std::vector<std::vector<Hit>> per_query;

    std::size_t
    size() const noexcept {
        return per_query.size();
    }
};

// Accumulates the hits for a single query under either predicate mode.
class HitCollector {
public:
    explicit HitCollector(const SimilarityPredicate& sim)
        : top_k_(sim.is_top_k()), k_(sim.k), tau_(sim.tau) {
        if (top_k_) {
            hits_.reserve(k_);
        }
    }

    void
    offer(RowId row, float score) {
        if (!top_k_) {
            if (score >= tau_) {
                hits_.push_back({row, score});
            }
            return;
        }
        const Hit h{row, score};
        if (hits_.size() < k_) {
            hits_.push_back(h);
            std::push_heap(hits_.begin(), hits_.end(), ranks_before);
        } else if (ranks_before(h, hits_.front())) {
            std::pop_heap(hits_.begin(), hits_.end(), ranks_before);
            hits_.back() = h;
            std::push_heap(hits_.begin(), hits_.end(), ranks_before);
        }
    }

    bool
    full() const noexcept {
        return top_k_ && hits_.size() == k_;
    }

    // Appends another collector's hits. For THRESHOLD mode the other collector
    // must cover strictly later row ids.
    void
    merge(const HitCollector& other) {
        if (!top_k_) {
            hits_.insert(hits_.end(), other.hits_.begin(), other.hits_.end());
            return;
        }
        for (const auto& h : other.hits_) {
            offer(h.row, h.score);
        }
    }

    std::vector<Hit>
    finish() && {
        if (top_k_) {
            std::sort_heap(hits_.begin(), hits_.end(), ranks_before);
        }
        return std::move(hits_);
    }

private:
    bool top_k_;
    std::size_t k_;
    float tau_;
    std::vector<Hit> hits_;
};

}  // namespace vexel
