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

// Line-oriented "key = value" text used for sweep configs and calibration
// profiles. '#' starts a comment; blank lines are ignored; keys are unique.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "vexel/errors.h"

namespace vexel {

class KeyedText {
public:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };

    static KeyedText
    parse(std::istream& in);

    bool
    has(const std::string& key) const {
        return entries_.count(key) != 0;
    }

    const std::map<std::string, Entry>&
    entries() const noexcept {
        return entries_;
    }

    // All getters throw ParseError carrying the offending line (or 0 for a
    // missing required key).
    const std::string&
    str(const std::string& key) const;
    std::string
    str(const std::string& key, const std::string& fallback) const;
    std::uint64_t
    u64(const std::string& key) const;
    std::uint64_t
    u64(const std::string& key, std::uint64_t fallback) const;
    double
    f64(const std::string& key) const;
    double
    f64(const std::string& key, double fallback) const;
    bool
    boolean(const std::string& key, bool fallback) const;
    std::vector<std::string>
    list(const std::string& key) const;
    std::vector<std::uint64_t>
    u64_list(const std::string& key) const;
    std::vector<double>
    f64_list(const std::string& key) const;

    // Parse helpers reused for values that are not single scalars.
    static std::uint64_t
    to_u64(const std::string& text, std::size_t line);
    static double
    to_f64(const std::string& text, std::size_t line);
    static std::vector<std::string>
    split(const std::string& text, char sep);

private:
    const Entry&
    require(const std::string& key) const;

    std::map<std::string, Entry> entries_;
};

}  // namespace vexel
