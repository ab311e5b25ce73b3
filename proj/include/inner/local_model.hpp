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

// Local velocity statistics and the per-neighborhood frame M.
//
// For the velocities observed in one neighborhood, M is the N x N matrix that
// (a) whitens the second central moment, M C2 M^T = I, and (b) diagonalizes
// the fourth central moment contracted over its last two indices after the
// same transform. With W = C2^{-1/2} and whitened samples y = W (v - mean),
// (b) reduces to diagonalizing T = <y y^T |y|^2>, so M = R W with the rows of
// R the eigenvectors of T. M is unique up to a signed permutation whenever
// the eigenvalues of T are distinct.

#ifndef INNER_LOCAL_MODEL_HPP_
#define INNER_LOCAL_MODEL_HPP_

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "inner/signed_permutation.hpp"
#include "inner/state_space.hpp"

namespace inner {

/// Dense, fully symmetric rank-4 tensor over N dimensions.
class Quartic {
 public:
  Quartic() = default;
  explicit Quartic(int n) : n_(n), data_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}

  int dimension() const { return n_; }
  double operator()(int k, int l, int m, int n) const { return data_[index(k, l, m, n)]; }
  double& operator()(int k, int l, int m, int n) { return data_[index(k, l, m, n)]; }

 private:
  std::size_t index(int k, int l, int m, int n) const {
    return ((static_cast<std::size_t>(k) * n_ + l) * n_ + m) * n_ + n;
  }
  int n_ = 0;
  std::vector<double> data_;
};

/// Full fourth-moment tensors are materialized up to this dimension.
inline constexpr int kMaxFullTensorDim = 4;

struct LocalCorrelations {
  Eigen::VectorXd mean_velocity;
  Eigen::MatrixXd c2;
  std::optional<Quartic> c4;
  /// Symmetric C2^{-1/2}.
  Eigen::MatrixXd whitener;
  /// <y y^T |y|^2> over whitened centered velocities.
  Eigen::MatrixXd whitened_quartic;
  std::size_t sample_count = 0;

  int dimension() const { return static_cast<int>(c2.rows()); }
};

struct TransformedCorrelations {
  Eigen::MatrixXd i2;
  Eigen::MatrixXd i4_contracted;
  std::optional<Quartic> i4;
};

struct SolveOptions {
  /// DegenerateSpectrum when the smallest eigenvalue gap of T falls below
  /// this fraction of its spectral radius.
  double relative_gap_tol = 1e-3;
  /// Test hook: use C2^{+1/2} in place of the whitener.
  bool inject_missigned_whitening = false;
};

struct LocalFrame {
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;  // columns V_(i) = columns of M^{-1}
  Eigen::VectorXd d;
  double eigen_gap = 0.0;
  int neighborhood_id = -1;
  std::size_t occupancy = 0;
  /// max |M C2 M^T - I|
  double whitening_residual = 0.0;
  /// max off-diagonal |contracted I4| over the norm of its diagonal.
  double diagonal_residual = 0.0;
};

struct FieldOfFrames {
  std::vector<LocalFrame> frames;
  /// Per frame, the signed permutation applied during harmonization.
  std::vector<SignedPermutation> applied;
  int reference_id = -1;
  std::vector<std::pair<int, int>> adjacency;  // neighborhood ids, first < second
  int component_count = 0;
  bool harmonized = false;

  /// Frame index by neighborhood id, -1 where no frame exists.
  std::vector<int> frame_index;
};

/// Rows of the result are the valid velocities of `members`.
Eigen::MatrixXd gather_velocities(const VelocitySeries& velocities,
                                  const std::vector<std::size_t>& members);

/// Central moments with divisor = sample count. Rows of `velocities` are
/// samples.
LocalCorrelations local_correlations(const Eigen::Ref<const Eigen::MatrixXd>& velocities,
                                     std::size_t min_count = 1);

TransformedCorrelations transform_correlations(const Eigen::Ref<const Eigen::MatrixXd>& m,
                                               const LocalCorrelations& corr,
                                               bool full_tensor = false);

/// Symmetric inverse square root, eigenvalues clamped at 1e-14.
Eigen::MatrixXd inverse_sqrt_spd(const Eigen::Ref<const Eigen::MatrixXd>& a);

LocalFrame solve_frame(const LocalCorrelations& corr, const SolveOptions& options = {},
                       int neighborhood_id = -1);

/// min over signed P of ||a - P b||_F, and the minimizing P.
std::pair<double, SignedPermutation> min_signed_permutation_distance(
    const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b);

struct EquivarianceReport {
  double max_discrepancy = 0.0;
  std::size_t compared = 0;
  std::size_t skipped = 0;
};

/// Solves every neighborhood on `samples` and on `samples` mapped by `a`
/// (same member frames) and reports the worst
/// min_P ||M' - P M a^{-1}|| / ||M||.
EquivarianceReport equivariance_check(const StateSamples& samples,
                                      const Eigen::Ref<const Eigen::MatrixXd>& a,
                                      const AtlasParams& atlas_params,
                                      const SolveOptions& options = {});

/// Frames whose d entries are separated by at least this fraction of max|d|
/// keep their descending-d labelling during harmonization; only their signs
/// follow the neighbors.
inline constexpr double kDefaultOrderLockGap = 0.1;

/// Continuity pass over the neighborhood graph (overlapping disks, else the
/// four nearest centers; remaining islands bridged through their closest
/// centers). Starting from the highest-occupancy frame, the unfixed frame
/// with the clearest choice is fixed next, taking the signed permutation
/// that maximizes the summed cosines of its V columns with those of its
/// already-fixed neighbors.
FieldOfFrames harmonize_field(const Atlas& atlas, std::vector<LocalFrame> frames,
                              double order_lock_gap = kDefaultOrderLockGap);

/// CSV `id,m11..mNN,v11..vNN,d1..dN,eigen_gap,occupancy`.
void write_frames_csv(std::ostream& out, const FieldOfFrames& field);

}  // namespace inner

#endif  // INNER_LOCAL_MODEL_HPP_
