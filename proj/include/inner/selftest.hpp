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

// Built-in oracle suite and the constructed datasets it shares with the tests.

#ifndef INNER_SELFTEST_HPP_
#define INNER_SELFTEST_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "inner/embedding_prep.hpp"

namespace inner {

enum class SelftestLevel { kFast, kFull };

struct SelftestOptions {
  SelftestLevel level = SelftestLevel::kFast;
  bool inject_missigned_whitening = false;
  std::uint64_t seed = 20240611;
};

struct SelftestCheck {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool passed = false;
};

std::vector<SelftestCheck> run_selftest(const SelftestOptions& options);

/// One row per check; returns true when every check passed.
bool print_selftest_table(std::ostream& out, const std::vector<SelftestCheck>& checks);

/// n velocity samples (rows) of A s with s = (unit uniform, unit Laplace).
Eigen::MatrixXd mixed_source_velocities(const Eigen::Ref<const Eigen::MatrixXd>& a,
                                        std::size_t n, std::uint64_t seed);

/// Worst entry of |M A - P| over the best signed permutation P.
double mixing_recovery_error(const Eigen::Ref<const Eigen::MatrixXd>& m,
                             const Eigen::Ref<const Eigen::MatrixXd>& a);

/// 2-D trajectory whose only valid velocities come in 90-degree rotation
/// orbits of Gaussian draws, all located at the origin, surrounded by many
/// isolated frames at the origin. Its fourth-order spectrum is exactly
/// degenerate.
StateSamples isotropic_orbit_state(std::size_t orbits, std::uint64_t seed);

/// Straight line traversed at a constant velocity.
StateSamples constant_velocity_state(std::size_t frames);

}  // namespace inner

#endif  // INNER_SELFTEST_HPP_
