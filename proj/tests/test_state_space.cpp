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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "inner/rng.hpp"
#include "inner/state_space.hpp"
#include "test_util.hpp"

using namespace inner;
using test::expect_errc;

namespace {

StateSamples trajectory(std::size_t n, double dt, auto&& f) {
  StateSamples s;
  s.points = Eigen::MatrixXd(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 0.5 + dt * static_cast<double>(i);
    s.frame_times.push_back(t);
    s.points.row(static_cast<Eigen::Index>(i)) = f(t).transpose();
  }
  s.valid_mask.assign(n, true);
  s.axis_scales = Eigen::VectorXd::Ones(2);
  return s;
}

StateSamples uniform_square(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed, "test.square");
  return trajectory(n, 0.01, [&](double) { return Eigen::Vector2d(rng.uniform(), rng.uniform()); });
}

}  // namespace

TEST_CASE("central differences are exact on linear motion") {
  const auto s = trajectory(20, 0.005, [](double t) { return Eigen::Vector2d(3.0 * t - 1.0, -0.5 * t); });
  const auto v = estimate_velocity(s);
  CHECK_FALSE(v.valid_mask.front());
  CHECK_FALSE(v.valid_mask.back());
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    REQUIRE(v.valid_mask[i]);
    CHECK(v.velocities(static_cast<Eigen::Index>(i), 0) == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(v.velocities(static_cast<Eigen::Index>(i), 1) == doctest::Approx(-0.5).epsilon(1e-9));
  }
}

TEST_CASE("central differences on a sinusoid carry the second-order error") {
  const double dt = 0.01;
  const auto s = trajectory(200, dt, [](double t) { return Eigen::Vector2d(std::sin(t), std::cos(2 * t)); });
  const auto v = estimate_velocity(s);
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    const double t = s.frame_times[i];
    // (f(t+h) - f(t-h)) / 2h = f'(t) sin(h)/h for f = sin.
    CHECK(v.velocities(static_cast<Eigen::Index>(i), 0) ==
          doctest::Approx(std::cos(t) * std::sin(dt) / dt).epsilon(1e-9));
    CHECK(std::abs(v.velocities(static_cast<Eigen::Index>(i), 1) + 2.0 * std::sin(2 * t)) <
          4.0 * dt * dt);
  }
}

TEST_CASE("an invalid frame invalidates itself and both neighbors") {
  auto s = trajectory(10, 0.1, [](double t) { return Eigen::Vector2d(t, t); });
  s.valid_mask[5] = false;
  const auto v = estimate_velocity(s);
  const std::vector<bool> expected{false, true, true, true, false, false, false, true, true, false};
  CHECK(v.valid_mask == expected);
}

TEST_CASE("velocity rejects uneven spacing") {
  auto s = trajectory(10, 0.1, [](double t) { return Eigen::Vector2d(t, t); });
  s.frame_times[6] += 0.01;
  expect_errc(Errc::kNonUniformSampling, [&] { estimate_velocity(s); });
}

TEST_CASE("atlas over the unit square") {
  const auto s = uniform_square(20000, 4);
  const auto atlas = build_atlas(s, 100, 50, 9);
  REQUIRE(atlas.size() > 80);
  CHECK(atlas.size() <= 100);
  const double radius = atlas.neighborhoods.front().radius;
  for (const auto& nb : atlas.neighborhoods) {
    CHECK(nb.radius == radius);
    CHECK(nb.members.size() >= 50);
    CHECK(nb.id == &nb - atlas.neighborhoods.data());
    // Members are exactly the valid frames inside the disk.
    std::size_t count = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double d2 = (s.points.row(static_cast<Eigen::Index>(i)).transpose() - nb.center).squaredNorm();
      if (d2 <= radius * radius) ++count;
    }
    CHECK(count == nb.members.size());
  }
  // Farthest-point sampling on a square: 100 centers leave gaps near 1/sqrt(2*100).
  CHECK(radius > 0.03);
  CHECK(radius < 0.12);
  CHECK(atlas.coverage >= 0.99);
  CHECK(atlas.coverage == recount_coverage(atlas, s));
}

TEST_CASE("the radius is the coverage order statistic of nearest-center distances") {
  const auto s = uniform_square(3000, 6);
  const auto atlas = build_atlas(s, 40, 1, 2);
  REQUIRE(atlas.size() == 40);
  std::vector<double> nearest;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& nb : atlas.neighborhoods) {
      best = std::min(best, (s.points.row(static_cast<Eigen::Index>(i)).transpose() - nb.center).norm());
    }
    nearest.push_back(best);
  }
  std::sort(nearest.begin(), nearest.end());
  CHECK(atlas.neighborhoods.front().radius == doctest::Approx(nearest[2970 - 1]).epsilon(1e-12));
}

TEST_CASE("atlas is deterministic and seed dependent") {
  const auto s = uniform_square(5000, 1);
  const auto a = build_atlas(s, 60, 10, 3);
  const auto b = build_atlas(s, 60, 10, 3);
  const auto c = build_atlas(s, 60, 10, 4);
  std::ostringstream oa, ob, oc;
  write_atlas_csv(oa, a);
  write_atlas_csv(ob, b);
  write_atlas_csv(oc, c);
  CHECK(oa.str() == ob.str());
  CHECK(oa.str() != oc.str());
  CHECK(oa.str().rfind("id,center_1,center_2,radius,occupancy\n", 0) == 0);
}

TEST_CASE("invalid frames never join a neighborhood") {
  auto s = uniform_square(4000, 2);
  for (std::size_t i = 0; i < s.size(); i += 3) s.valid_mask[i] = false;
  const auto atlas = build_atlas(s, 30, 10, 1);
  for (const auto& nb : atlas.neighborhoods)
    for (std::size_t m : nb.members) CHECK(s.valid_mask[m]);
}

TEST_CASE("atlas rejects too little data") {
  const auto s = uniform_square(100, 3);
  expect_errc(Errc::kInsufficientData, [&] { build_atlas(s, 10, 500, 1); });
  expect_errc(Errc::kInsufficientData, [&] { build_atlas(s, 0, 1, 1); });
}

TEST_CASE("locate agrees with an exhaustive scan") {
  const auto s = uniform_square(8000, 11);
  const auto atlas = build_atlas(s, 80, 20, 5);
  CounterRng rng(12, "test.queries");
  std::vector<bool> allowed(atlas.size(), true);
  for (std::size_t j = 0; j < allowed.size(); j += 4) allowed[j] = false;
  for (int q = 0; q < 2000; ++q) {
    const Eigen::Vector2d p(rng.uniform(-0.3, 1.3), rng.uniform(-0.3, 1.3));
    const std::vector<bool>* masks[] = {nullptr, &allowed};
    for (const std::vector<bool>* mask : masks) {
      int inside = -1, near = -1;
      double inside_d = 1e300, near_d = 1e300;
      for (std::size_t j = 0; j < atlas.size(); ++j) {
        if (mask && !(*mask)[j]) continue;
        const auto& nb = atlas.neighborhoods[j];
        const double d = (p - nb.center).norm();
        if (d <= nb.radius && d < inside_d) inside = nb.id, inside_d = d;
        if (d <= 1.5 * nb.radius && d < near_d) near = nb.id, near_d = d;
      }
      const int expected = inside >= 0 ? inside : near;
      const auto got = locate(atlas, p, mask);
      CHECK(got.value_or(-1) == expected);
    }
  }
}

TEST_CASE("a constant trajectory has zero velocity") {
  const auto s = trajectory(30, 0.005, [](double) { return Eigen::Vector2d(1.5, -2.0); });
  const auto v = estimate_velocity(s);
  for (std::size_t i = 1; i + 1 < s.size(); ++i) CHECK(v.velocities.row(static_cast<Eigen::Index>(i)).norm() == 0.0);
}

TEST_CASE("sin(2 pi t) at dt = 0.005 is differentiated to second order") {
  const double dt = 0.005;
  const double w = 2.0 * std::numbers::pi;
  const auto s = trajectory(800, dt, [&](double t) { return Eigen::Vector2d(std::sin(w * t), 0.0); });
  const auto v = estimate_velocity(s);
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    worst = std::max(worst, std::abs(v.velocities(static_cast<Eigen::Index>(i), 0) - w * std::cos(w * s.frame_times[i])));
  }
  // Leading truncation term: w^3 dt^2 / 6.
  const double bound = std::pow(w, 3) * dt * dt / 6.0;
  CHECK(worst <= bound * 1.0001);
  CHECK(worst >= bound * 0.99);
}

TEST_CASE("identical points form a single neighborhood") {
  const auto s = trajectory(500, 0.01, [](double) { return Eigen::Vector2d(0.25, 0.75); });
  const auto atlas = build_atlas(s, 50, 10, 1);
  REQUIRE(atlas.size() == 1);
  CHECK(atlas.neighborhoods[0].members.size() == 500);
  CHECK(atlas.coverage == 1.0);
}

TEST_CASE("locate returns a center's own id and nothing far away") {
  const auto s = uniform_square(5000, 21);
  const auto atlas = build_atlas(s, 50, 20, 2);
  for (const auto& nb : atlas.neighborhoods) CHECK(locate(atlas, nb.center) == nb.id);
  CHECK_FALSE(locate(atlas, Eigen::Vector2d(10.0, 10.0)).has_value());
}
