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

// Feature frames -> low-dimensional, cleaned, variance-normalized trajectory.

#ifndef INNER_EMBEDDING_PREP_HPP_
#define INNER_EMBEDDING_PREP_HPP_

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "inner/signal_frontend.hpp"

namespace inner {

/// Rows of `basis` are principal directions by descending eigenvalue.
struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;
  Eigen::VectorXd eigenvalues;
};

struct PrepConfig {
  int retain_dims = 2;
  double pc1_floor = -10.0;
  double trim_fraction = 0.005;
  /// Refit the PCA on the frames surviving PC1 truncation before reducing.
  bool refit_after_truncation = true;

  void validate(int feature_dims) const;
};

/// The measurement trajectory x(t). Invalid frames are kept in place so that
/// velocity estimation can see the gaps.
struct StateSamples {
  std::vector<double> frame_times;
  Eigen::MatrixXd points;  // frames x N
  std::vector<bool> valid_mask;
  Eigen::VectorXd axis_scales;

  std::size_t size() const { return frame_times.size(); }
  int dimension() const { return static_cast<int>(points.cols()); }
  std::size_t valid_count() const;
};

/// Sample covariance eigendecomposition; each basis row's largest-magnitude
/// entry is made positive.
PcaModel fit_pca(const FeatureSeries& features);
/// As above, restricted to frames whose mask entry is set.
PcaModel fit_pca(const FeatureSeries& features, const std::vector<bool>& mask);

StateSamples project(const PcaModel& model, const FeatureSeries& features, int retain_dims);

StateSamples truncate_low_pc1(StateSamples samples, double pc1_floor);

StateSamples trim_outliers(StateSamples samples, double trim_fraction);

StateSamples normalize_variance(StateSamples samples);

/// Linear-interpolation quantile of the order statistics; `sorted` ascending.
double quantile_sorted(std::span<const double> sorted, double p);

/// Truncate -> reduce -> trim -> normalize.
StateSamples prepare_embedding(const FeatureSeries& features, const PrepConfig& config,
                               PcaModel* fitted = nullptr);

/// CSV `time_s,x1,...,xN,valid`.
void write_state_csv(std::ostream& out, const StateSamples& samples);
StateSamples read_state_csv(std::istream& in);

}  // namespace inner

#endif  // INNER_EMBEDDING_PREP_HPP_
