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

#include "vexel/keyed_text.h"

#include <charconv>
#include <istream>
#include <string_view>

namespace vexel {

namespace {

std::string_view
trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

KeyedText
KeyedText::parse(std::istream& in) {
    KeyedText out;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view text(raw);
        if (const auto hash = text.find('#'); hash != std::string_view::npos) {
            text = text.substr(0, hash);
        }
        text = trim(text);
        if (text.empty()) {
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError(line, "expected 'key = value', got '" + std::string(text) + "'");
        }
        const std::string key(trim(text.substr(0, eq)));
        const std::string value(trim(text.substr(eq + 1)));
        if (key.empty()) {
            throw ParseError(line, "empty key");
        }
        if (auto it = out.entries_.find(key); it != out.entries_.end()) {
            throw ParseError(line, "duplicate key '" + key + "' (first set on line " +
                                       std::to_string(it->second.line) + ")");
        }
        out.entries_.emplace(key, Entry{value, line});
    }
    return out;
}

const KeyedText::Entry&
KeyedText::require(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw ParseError(0, "missing required key '" + key + "'");
    }
    return it->second;
}

std::uint64_t
KeyedText::to_u64(const std::string& text, std::size_t line) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ParseError(line, "expected an unsigned integer, got '" + text + "'");
    }
    return v;
}

double
KeyedText::to_f64(const std::string& text, std::size_t line) {
    double v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ParseError(line, "expected a number, got '" + text + "'");
    }
    return v;
}

std::vector<std::string>
KeyedText::split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto pos = text.find(sep, start);
        if (pos == std::string::npos) {
            pos = text.size();
        }
        auto piece = trim(std::string_view(text).substr(start, pos - start));
        if (!piece.empty()) {
            out.emplace_back(piece);
        }
        start = pos + 1;
    }
    return out;
}

const std::string&
KeyedText::str(const std::string& key) const {
    return require(key).value;
}

std::string
KeyedText::str(const std::string& key, const std::string& fallback) const {
    return has(key) ? str(key) : fallback;
}

std::uint64_t
KeyedText::u64(const std::string& key) const {
    const auto& e = require(key);
    return to_u64(e.value, e.line);
}

std::uint64_t
KeyedText::u64(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? u64(key) : fallback;
}

double
KeyedText::f64(const std::string& key) const {
    const auto& e = require(key);
    return to_f64(e.value, e.line);
}

double
KeyedText::f64(const std::string& key, double fallback) const {
    return has(key) ? f64(key) : fallback;
}

bool
KeyedText::boolean(const std::string& key, bool fallback) const {
    if (!has(key)) {
        return fallback;
    }
    const auto& e = require(key);
    if (e.value == "true" || e.value == "1" || e.value == "yes") {
        return true;
    }
    if (e.value == "false" || e.value == "0" || e.value == "no") {
        return false;
    }
    throw ParseError(e.line, "expected a boolean for '" + key + "', got '" + e.value + "'");
}

std::vector<std::string>
KeyedText::list(const std::string& key) const {
    return split(require(key).value, ',');
}

std::vector<std::uint64_t>
KeyedText::u64_list(const std::string& key) const {
    const auto& e = require(key);
    std::vector<std::uint64_t> out;
    for (const auto& item : split(e.value, ',')) {
        out.push_back(to_u64(item, e.line));
    }
    return out;
}

std::vector<double>
KeyedText::f64_list(const std::string& key) const {
    const auto& e = require(key);
    std::vector<double> out;
    for (const auto& item : split(e.value, ',')) {
        out.push_back(to_f64(item, e.line));
    }
    return out;
}

}  // namespace vexel
