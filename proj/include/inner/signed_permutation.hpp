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

#ifndef INNER_SIGNED_PERMUTATION_HPP_
#define INNER_SIGNED_PERMUTATION_HPP_

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace inner {

/// Product of a permutation and a reflection: (P w)_i = signs[i] * w[perm[i]].
/// Indices are zero-based; the text form is one-based.
struct SignedPermutation {
  std::vector<int> perm;
  std::vector<int> signs;

  static SignedPermutation identity(int n);
  static SignedPermutation negated_identity(int n);

  int size() const { return static_cast<int>(perm.size()); }
  bool is_valid() const;

  Eigen::MatrixXd matrix() const;
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& w) const;
  SignedPermutation inverse() const;
  /// (this * other) as matrices.
  SignedPermutation compose(const SignedPermutation& other) const;

  /// `perm=2,1;signs=-1,+1`.
  std::string to_string() const;
  static SignedPermutation parse(const std::string& text);

  bool operator==(const SignedPermutation&) const = default;
};

/// All 2^n * n! elements, ordered lexicographically by (perm, signs) with
/// -1 before +1. Supported for n <= 6.
std::vector<SignedPermutation> all_signed_permutations(int n);

}  // namespace inner

#endif  // INNER_SIGNED_PERMUTATION_HPP_
