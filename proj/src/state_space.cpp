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

#include "inner/state_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "inner/csv.hpp"
#include "inner/error.hpp"
#include "inner/rng.hpp"

namespace inner {

namespace {

constexpr double kCoverageTarget = 0.99;
constexpr double kSnapFactor = 1.5;
constexpr double kUniformTolerance = 1e-9;

double squared_distance(const Eigen::MatrixXd& points, std::size_t i,
                        const Eigen::VectorXd& c) {
  return (points.row(static_cast<Eigen::Index>(i)).transpose() - c).squaredNorm();
}

}  // namespace

VelocitySeries estimate_velocity(const StateSamples& samples) {
  const std::size_t n = samples.size();
  VelocitySeries v;
  v.frame_times = samples.frame_times;
  v.velocities = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), samples.dimension());
  v.valid_mask.assign(n, false);
  if (n < 3) return v;

  const double dt = samples.frame_times[1] - samples.frame_times[0];
  if (!(dt > 0.0)) throw Error(Errc::kNonUniformSampling, "frame spacing must be positive");
  for (std::size_t i = 1; i < n; ++i) {
    const double step = samples.frame_times[i] - samples.frame_times[i - 1];
    if (std::abs(step - dt) > kUniformTolerance) {
      throw Error(Errc::kNonUniformSampling, "frame " + std::to_string(i) + " breaks spacing");
    }
  }
  const double inv = 1.0 / (2.0 * dt);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(samples.valid_mask[i - 1] && samples.valid_mask[i] && samples.valid_mask[i + 1])) {
      continue;
    }
    const auto r = static_cast<Eigen::Index>(i);
    v.velocities.row(r) = (samples.points.row(r + 1) - samples.points.row(r - 1)) * inv;
    v.valid_mask[i] = true;
  }
  return v;
}

Atlas build_atlas(const StateSamples& samples, std::size_t target_count,
                  std::size_t min_occupancy, std::uint64_t seed) {
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples.valid_mask[i]) valid.push_back(i);
  }
  if (valid.empty() || valid.size() < min_occupancy || target_count == 0) {
    throw Error(Errc::kInsufficientData, std::to_string(valid.size()) +
                                             " valid frames for min_occupancy " +
                                             std::to_string(min_occupancy));
  }
  const Eigen::MatrixXd& pts = samples.points;

  // Farthest-point sampling; nearest[j] tracks the squared distance from
  // valid[j] to its closest chosen center.
  CounterRng rng(seed, "atlas.fps");
  std::vector<std::size_t> centers;
  std::vector<double> nearest(valid.size(), std::numeric_limits<double>::infinity());
  std::size_t next = static_cast<std::size_t>(rng.below(valid.size()));
  while (centers.size() < target_count) {
    centers.push_back(valid[next]);
    const Eigen::VectorXd c = pts.row(static_cast<Eigen::Index>(valid[next])).transpose();
    double far = -1.0;
    std::size_t far_at = 0;
    for (std::size_t j = 0; j < valid.size(); ++j) {
      nearest[j] = std::min(nearest[j], squared_distance(pts, valid[j], c));
      if (nearest[j] > far) {
        far = nearest[j];
        far_at = j;
      }
    }
    if (far <= 0.0) break;
    next = far_at;
  }

  // Smallest radius covering the target fraction: an order statistic of the
  // nearest-center distances.
  std::vector<double> sorted = nearest;
  std::sort(sorted.begin(), sorted.end());
  const auto need = static_cast<std::size_t>(
      std::ceil(kCoverageTarget * static_cast<double>(valid.size())));
  double radius = std::sqrt(sorted[std::max<std::size_t>(need, 1) - 1]);
  if (!(radius > 0.0)) radius = std::numeric_limits<double>::min();
  const double r2 = radius * radius;

  Atlas atlas;
  atlas.min_occupancy = min_occupancy;
  for (std::size_t c : centers) {
    Neighborhood nb;
    nb.center = pts.row(static_cast<Eigen::Index>(c)).transpose();
    nb.radius = radius;
    for (std::size_t i : valid) {
      if (squared_distance(pts, i, nb.center) <= r2) nb.members.push_back(i);
    }
    if (nb.members.size() < std::max<std::size_t>(min_occupancy, 1)) continue;
    nb.id = static_cast<int>(atlas.neighborhoods.size());
    atlas.neighborhoods.push_back(std::move(nb));
  }
  if (atlas.empty()) {
    throw Error(Errc::kInsufficientData, "no neighborhood reaches min_occupancy");
  }
  atlas.coverage = recount_coverage(atlas, samples);
  return atlas;
}

double recount_coverage(const Atlas& atlas, const StateSamples& samples) {
  const std::size_t valid = samples.valid_count();
  if (valid == 0) return 0.0;
  std::vector<bool> covered(samples.size(), false);
  for (const auto& nb : atlas.neighborhoods) {
    for (std::size_t i : nb.members) covered[i] = true;
  }
  std::size_t hit = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (covered[i] && samples.valid_mask[i]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(valid);
}

std::optional<int> locate(const Atlas& atlas, const Eigen::Ref<const Eigen::VectorXd>& point,
                          const std::vector<bool>* allowed) {
  std::optional<int> inside;
  double inside_d2 = std::numeric_limits<double>::infinity();
  std::optional<int> near;
  double near_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < atlas.neighborhoods.size(); ++j) {
    if (allowed != nullptr && !(*allowed)[j]) continue;
    const auto& nb = atlas.neighborhoods[j];
    const double d2 = (point - nb.center).squaredNorm();
    if (d2 <= nb.radius * nb.radius && d2 < inside_d2) {
      inside = nb.id;
      inside_d2 = d2;
    }
    const double snap = kSnapFactor * nb.radius;
    if (d2 <= snap * snap && d2 < near_d2) {
      near = nb.id;
      near_d2 = d2;
    }
  }
  return inside ? inside : near;
}

void write_atlas_csv(std::ostream& out, const Atlas& atlas) {
  const Eigen::Index dims = atlas.empty() ? 0 : atlas.neighborhoods.front().center.size();
  out << "id";
  for (Eigen::Index d = 1; d <= dims; ++d) out << ",center_" << d;
  out << ",radius,occupancy\n";
  for (const auto& nb : atlas.neighborhoods) {
    out << nb.id;
    for (Eigen::Index d = 0; d < dims; ++d) out << ',' << csv::format(nb.center[d]);
    out << ',' << csv::format(nb.radius) << ',' << nb.members.size() << '\n';
  }
}

}  // namespace inner
