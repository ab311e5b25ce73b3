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

#ifndef INNER_STATE_SPACE_HPP_
#define INNER_STATE_SPACE_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "inner/embedding_prep.hpp"

namespace inner {

/// Trajectory velocity in measurement units per second.
struct VelocitySeries {
  std::vector<double> frame_times;
  Eigen::MatrixXd velocities;  // frames x N
  std::vector<bool> valid_mask;

  std::size_t size() const { return frame_times.size(); }
};

struct Neighborhood {
  int id = 0;
  Eigen::VectorXd center;
  double radius = 0.0;
  std::vector<std::size_t> members;  // frame indices
};

struct Atlas {
  std::vector<Neighborhood> neighborhoods;
  std::size_t min_occupancy = 0;
  double coverage = 0.0;

  std::size_t size() const { return neighborhoods.size(); }
  bool empty() const { return neighborhoods.empty(); }
};

struct AtlasParams {
  std::size_t target_count = 1000;
  std::size_t min_occupancy = 200;
  std::uint64_t seed = 0;
};

/// Frames must be uniformly spaced; frame i is valid only when frames
/// i-1, i, i+1 all are.
VelocitySeries estimate_velocity(const StateSamples& samples);

/// Farthest-point centers, one shared radius covering 99% of the valid frames,
/// and neighborhoods below min_occupancy dropped.
Atlas build_atlas(const StateSamples& samples, std::size_t target_count,
                  std::size_t min_occupancy, std::uint64_t seed);
inline Atlas build_atlas(const StateSamples& samples, const AtlasParams& p) {
  return build_atlas(samples, p.target_count, p.min_occupancy, p.seed);
}

/// Fraction of valid frames lying in at least one neighborhood's member list.
double recount_coverage(const Atlas& atlas, const StateSamples& samples);

/// Nearest center whose disk holds the point, else the nearest center within
/// 1.5 radii, else nothing. `allowed`, when given, restricts the candidates
/// by neighborhood index.
std::optional<int> locate(const Atlas& atlas, const Eigen::Ref<const Eigen::VectorXd>& point,
                          const std::vector<bool>* allowed = nullptr);

/// CSV `id,center_1..center_N,radius,occupancy`.
void write_atlas_csv(std::ostream& out, const Atlas& atlas);

}  // namespace inner

#endif  // INNER_STATE_SPACE_HPP_
