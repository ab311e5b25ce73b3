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

#ifndef INNER_INNER_SERIES_HPP_
#define INNER_INNER_SERIES_HPP_

#include <iosfwd>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "inner/local_model.hpp"
#include "inner/signed_permutation.hpp"
#include "inner/state_space.hpp"

namespace inner {

/// Weights w(t) expanding the trajectory velocity in the local V basis.
struct InnerSeries {
  std::vector<double> frame_times;
  Eigen::MatrixXd weights;  // frames x N
  std::vector<bool> valid_mask;

  std::size_t size() const { return frame_times.size(); }
  int dimension() const { return static_cast<int>(weights.cols()); }
  std::size_t valid_count() const;
};

struct ComparisonReport {
  SignedPermutation chosen_p;
  std::vector<double> per_component_pearson;
  std::vector<double> per_component_rmse;
  std::size_t overlap_frames = 0;
  double total_rmse = 0.0;
};

/// w(t) = M(x(t)) xdot(t) using the frame of the neighborhood that locate()
/// assigns to x(t); invalid at velocity gaps and outside the atlas.
InnerSeries derive_inner(const StateSamples& samples, const VelocitySeries& velocities,
                         const FieldOfFrames& field, const Atlas& atlas);

/// Truncated (+-4 sigma) Gaussian, renormalized, applied within each run of
/// valid frames.
InnerSeries gaussian_smooth(const InnerSeries& series, double sigma_frames);

/// Exhaustive search for the signed permutation P minimizing the RMSE of
/// P b - a over frames valid in both at matching times (1e-6 s).
std::pair<SignedPermutation, ComparisonReport> best_alignment(const InnerSeries& a,
                                                              const InnerSeries& b);

/// Pearson and RMSE of P b against a, without searching.
ComparisonReport compare_with(const InnerSeries& a, const InnerSeries& b,
                              const SignedPermutation& p);

InnerSeries apply_alignment(const SignedPermutation& p, const InnerSeries& series);

/// Copy with every frame outside [first, last) marked invalid.
InnerSeries restrict_frames(const InnerSeries& series, std::size_t first, std::size_t last);

/// CSV `time_s,w1,...,wN,valid`.
void write_inner_csv(std::ostream& out, const InnerSeries& series);
InnerSeries read_inner_csv(std::istream& in);

/// Header row `chosen_p,<perm=..;signs=..>` then `component,pearson,rmse`.
void write_report_csv(std::ostream& out, const ComparisonReport& report);

/// One 900x300 panel per component; a solid black, b dashed red.
void write_overlay_svg(std::ostream& out, const InnerSeries& a, const InnerSeries& b);

}  // namespace inner

#endif  // INNER_INNER_SERIES_HPP_
