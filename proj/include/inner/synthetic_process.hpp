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

// Synthetic 2-D dynamical system whose velocity at every state is a
// superposition of two state-dependent directions driven by independent
// uniform and Laplacian noise, plus a weak pull towards the origin.

#ifndef INNER_SYNTHETIC_PROCESS_HPP_
#define INNER_SYNTHETIC_PROCESS_HPP_

#include <cstdint>

#include <Eigen/Dense>

#include "inner/embedding_prep.hpp"

namespace inner {

struct ProcessParams {
  std::size_t frames = 300000;
  double dt = 0.005;
  double step = 0.015;       // per-frame displacement scale
  double reversion = 1.1e-4;  // per-frame pull towards the origin
  double modulation = 1.0;    // 0 gives state-independent directions
  std::uint64_t seed = 0;
};

/// Local generating directions at x; columns are the directions driven by
/// the uniform and the Laplacian source.
Eigen::Matrix2d process_directions(const Eigen::Vector2d& x, double modulation);

/// Trajectory sampled every dt; every frame valid.
StateSamples simulate_process(const ProcessParams& params);

/// Second observer: rotation by `angle` after the component-wise warp
/// x -> scale * tanh(x / scale).
Eigen::Vector2d warp_observer(const Eigen::Vector2d& x, double angle, double scale);
StateSamples observe_warped(const StateSamples& samples, double angle, double scale);

/// Samples mapped by a fixed linear transform.
StateSamples observe_linear(const StateSamples& samples, const Eigen::Ref<const Eigen::MatrixXd>& a);

}  // namespace inner

#endif  // INNER_SYNTHETIC_PROCESS_HPP_
