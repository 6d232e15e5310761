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

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>

#include "vexel/errors.h"

namespace vexel::io {

static_assert(std::endian::native == std::endian::little,
              "persisted formats are little-endian; add byte swapping for this host");

template <typename T>
void
write_pod(std::ostream& out, const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void
write_span(std::ostream& out, std::span<const T> values) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
}

template <typename T>
T
read_pod(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) {
        throw FormatError("unexpected end of stream");
    }
    return value;
}

template <typename T>
void
read_span(std::istream& in, std::span<T> values) {
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
    if (!in) {
        throw FormatError("unexpected end of stream");
    }
}

inline void
write_string(std::ostream& out, const std::string& s) {
    write_pod(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string
read_string(std::istream& in, std::uint32_t max_len = 1u << 16) {
    const auto len = read_pod<std::uint32_t>(in);
    if (len > max_len) {
        throw FormatError("string length " + std::to_string(len) + " exceeds limit");
    }
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) {
        throw FormatError("unexpected end of stream");
    }
    return s;
}

}  // namespace vexel::io
