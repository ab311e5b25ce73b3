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

#include "inner/synthetic_process.hpp"

#include <cmath>
#include <numbers>

#include "inner/error.hpp"
#include "inner/rng.hpp"

namespace inner {

Eigen::Matrix2d process_directions(const Eigen::Vector2d& x, double modulation) {
  const double theta = modulation * (0.5 * x[0] + 0.3 * x[1]);
  const double phi = theta + std::numbers::pi / 2.0 + 0.4 * modulation * std::sin(x[0]);
  const double g1 = 1.0 + 0.3 * modulation * std::sin(x[1]);
  const double g2 = 0.6 + 0.2 * modulation * std::cos(x[0]);
  Eigen::Matrix2d v;
  v.col(0) = g1 * Eigen::Vector2d(std::cos(theta), std::sin(theta));
  v.col(1) = g2 * Eigen::Vector2d(std::cos(phi), std::sin(phi));
  return v;
}

StateSamples simulate_process(const ProcessParams& params) {
  if (params.frames < 3 || !(params.dt > 0.0) || !(params.step > 0.0)) {
    throw Error(Errc::kBadConfig, "process needs >= 3 frames and positive dt and step");
  }
  CounterRng rng(params.seed, "process.sources");
  StateSamples s;
  const auto n = static_cast<Eigen::Index>(params.frames);
  s.frame_times.resize(params.frames);
  s.points.resize(n, 2);
  s.valid_mask.assign(params.frames, true);
  s.axis_scales = Eigen::VectorXd::Ones(2);

  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  for (Eigen::Index i = 0; i < n; ++i) {
    s.frame_times[static_cast<std::size_t>(i)] = static_cast<double>(i) * params.dt;
    s.points.row(i) = x.transpose();
    const double u = rng.unit_uniform();
    const double l = rng.laplace();
    x += -params.reversion * x + params.step * process_directions(x, params.modulation) *
                                     Eigen::Vector2d(u, l);
  }
  return s;
}

Eigen::Vector2d warp_observer(const Eigen::Vector2d& x, double angle, double scale) {
  const Eigen::Vector2d w(scale * std::tanh(x[0] / scale), scale * std::tanh(x[1] / scale));
  return Eigen::Rotation2Dd(angle) * w;
}

StateSamples observe_warped(const StateSamples& samples, double angle, double scale) {
  if (samples.dimension() != 2) throw Error(Errc::kDimensionMismatch, "warp observer is 2-D");
  StateSamples out = samples;
  for (Eigen::Index i = 0; i < out.points.rows(); ++i) {
    out.points.row(i) = warp_observer(samples.points.row(i).transpose(), angle, scale).transpose();
  }
  return out;
}

StateSamples observe_linear(const StateSamples& samples,
                            const Eigen::Ref<const Eigen::MatrixXd>& a) {
  if (a.rows() != samples.dimension() || a.cols() != samples.dimension()) {
    throw Error(Errc::kDimensionMismatch, "map must match the state dimension");
  }
  StateSamples out = samples;
  out.points = samples.points * a.transpose();
  return out;
}

}  // namespace inner
