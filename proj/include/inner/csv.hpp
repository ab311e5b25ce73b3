// Copyright 2026 The inner-series Authors.
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

#ifndef INNER_CSV_HPP_
#define INNER_CSV_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace inner::csv {

/// Decimal floating point with 9 significant digits.
std::string format(double value);

std::vector<std::string> split(std::string_view line, char sep = ',');

/// Strict full-field parse; throws ParseError.
double parse_double(std::string_view field);
long parse_int(std::string_view field);

}  // namespace inner::csv

#endif  // INNER_CSV_HPP_
