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

#include "inner/signed_permutation.hpp"

#include <algorithm>
#include <numeric>

#include "inner/csv.hpp"
#include "inner/error.hpp"

namespace inner {

SignedPermutation SignedPermutation::identity(int n) {
  SignedPermutation p;
  p.perm.resize(static_cast<std::size_t>(n));
  std::iota(p.perm.begin(), p.perm.end(), 0);
  p.signs.assign(static_cast<std::size_t>(n), 1);
  return p;
}

SignedPermutation SignedPermutation::negated_identity(int n) {
  SignedPermutation p = identity(n);
  std::fill(p.signs.begin(), p.signs.end(), -1);
  return p;
}

bool SignedPermutation::is_valid() const {
  if (perm.size() != signs.size()) return false;
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (perm[i] < 0 || perm[i] >= size() || seen[perm[i]]) return false;
    seen[perm[i]] = true;
    if (signs[i] != 1 && signs[i] != -1) return false;
  }
  return true;
}

Eigen::MatrixXd SignedPermutation::matrix() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size(), size());
  for (int i = 0; i < size(); ++i) m(i, perm[i]) = signs[i];
  return m;
}

Eigen::VectorXd SignedPermutation::apply(const Eigen::Ref<const Eigen::VectorXd>& w) const {
  if (w.size() != size()) throw Error(Errc::kDimensionMismatch, "signed permutation size");
  Eigen::VectorXd out(size());
  for (int i = 0; i < size(); ++i) out[i] = signs[i] * w[perm[i]];
  return out;
}

SignedPermutation SignedPermutation::inverse() const {
  SignedPermutation inv;
  inv.perm.resize(perm.size());
  inv.signs.resize(signs.size());
  for (int i = 0; i < size(); ++i) {
    inv.perm[perm[i]] = i;
    inv.signs[perm[i]] = signs[i];
  }
  return inv;
}

SignedPermutation SignedPermutation::compose(const SignedPermutation& other) const {
  // (A B w)_i = sA_i * (B w)_{pA_i} = sA_i * sB_{pA_i} * w_{pB_{pA_i}}
  SignedPermutation out;
  out.perm.resize(perm.size());
  out.signs.resize(signs.size());
  for (int i = 0; i < size(); ++i) {
    out.perm[i] = other.perm[perm[i]];
    out.signs[i] = signs[i] * other.signs[perm[i]];
  }
  return out;
}

std::string SignedPermutation::to_string() const {
  std::string s = "perm=";
  for (int i = 0; i < size(); ++i) {
    if (i) s += ',';
    s += std::to_string(perm[i] + 1);
  }
  s += ";signs=";
  for (int i = 0; i < size(); ++i) {
    if (i) s += ',';
    s += signs[i] > 0 ? "+1" : "-1";
  }
  return s;
}

SignedPermutation SignedPermutation::parse(const std::string& text) {
  const auto parts = csv::split(text, ';');
  if (parts.size() != 2 || parts[0].rfind("perm=", 0) != 0 || parts[1].rfind("signs=", 0) != 0) {
    throw Error(Errc::kParseError, "signed permutation '" + text + "'");
  }
  SignedPermutation p;
  for (const auto& f : csv::split(parts[0].substr(5))) {
    p.perm.push_back(static_cast<int>(csv::parse_int(f)) - 1);
  }
  for (const auto& f : csv::split(parts[1].substr(6))) {
    p.signs.push_back(static_cast<int>(csv::parse_int(f)));
  }
  if (!p.is_valid()) throw Error(Errc::kParseError, "signed permutation '" + text + "'");
  return p;
}

std::vector<SignedPermutation> all_signed_permutations(int n) {
  if (n < 1 || n > 6) {
    throw Error(Errc::kDimensionMismatch, "signed permutation search supports 1 <= N <= 6");
  }
  std::vector<SignedPermutation> out;
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  do {
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      SignedPermutation p;
      p.perm = perm;
      p.signs.resize(static_cast<std::size_t>(n));
      // Bit (n-1-i) clear -> -1, so the most significant sign varies slowest.
      for (int i = 0; i < n; ++i) p.signs[i] = (mask >> (n - 1 - i)) & 1u ? 1 : -1;
      out.push_back(std::move(p));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

}  // namespace inner
