// Copyright 2026 The reclab Authors
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
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace reclab::csv {

// Reads one logical record, joining physical lines while a quoted field is
// open. Returns false at end of input.
bool read_record(std::istream& in, std::string& record);

// Splits a record on `delimiter`, honouring double-quoted fields. Unquoted
// fields are trimmed; quoted ones are taken verbatim.
std::vector<std::string> split_quoted(std::string_view record, char delimiter);

// Splits on a literal multi-character separator (no quoting).
std::vector<std::string_view> split_literal(std::string_view line,
                                            std::string_view separator);

// Quotes a field when it contains the delimiter, a quote, a line break or
// surrounding whitespace.
std::string quote(std::string_view field, char delimiter);

std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

// Shortest representation that parses back to the same double.
std::string format_double(double value);

std::string_view trim(std::string_view text);

}  // namespace reclab::csv
