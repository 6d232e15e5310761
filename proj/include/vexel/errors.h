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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vexel {

using RowId = std::uint32_t;

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NotFound : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition that is not a plain bad argument,
// e.g. a cosine scan over an unnormalized vector column.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class DegenerateVector : public std::domain_error {
public:
    DegenerateVector(RowId row, const std::string& what)
        : std::domain_error(what), row_(row) {
    }

    RowId
    row() const noexcept {
        return row_;
    }

private:
    RowId row_;
};

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {
    }

    std::size_t
    line() const noexcept {
        return line_;
    }

private:
    std::size_t line_;
};

}  // namespace vexel
