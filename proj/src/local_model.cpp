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

#include "inner/local_model.hpp"

#include <algorithm>
#include <queue>
#include <tuple>
#include <functional>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "inner/csv.hpp"
#include "inner/error.hpp"

namespace inner {

namespace {

constexpr double kSingularRatio = 1e-10;
constexpr double kEigenClamp = 1e-14;
constexpr int kFallbackNeighbors = 4;

// Smallest gap between distinct entries of d relative to the largest |d|.
double ordered_gap(const Eigen::VectorXd& d) {
  std::vector<double> s(d.data(), d.data() + d.size());
  std::sort(s.begin(), s.end());
  const double scale = std::max(std::abs(s.front()), std::abs(s.back()));
  if (s.size() < 2 || scale == 0.0) return 0.0;
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < s.size(); ++i) gap = std::min(gap, s[i] - s[i - 1]);
  return gap / scale;
}

// True when relabelling by p keeps the ordering of the entries of d.
bool preserves_order(const Eigen::VectorXd& d, const SignedPermutation& p) {
  for (Eigen::Index i = 0; i < d.size(); ++i)
    for (Eigen::Index j = i + 1; j < d.size(); ++j) {
      if ((d[i] < d[j]) != (d[p.perm[i]] < d[p.perm[j]])) return false;
    }
  return true;
}

Eigen::MatrixXd sqrt_spd(const Eigen::Ref<const Eigen::MatrixXd>& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  const Eigen::VectorXd s = eig.eigenvalues().cwiseMax(kEigenClamp).cwiseSqrt();
  return eig.eigenvectors() * s.asDiagonal() * eig.eigenvectors().transpose();
}

// Fills every permutation of (k, l, m, n) with the same value.
void set_symmetric(Quartic& t, std::array<int, 4> idx, double value) {
  std::sort(idx.begin(), idx.end());
  do {
    t(idx[0], idx[1], idx[2], idx[3]) = value;
  } while (std::next_permutation(idx.begin(), idx.end()));
}

// out_{k...} = sum_j m_{kj} t_{j...} applied on every mode.
Quartic transform_full(const Eigen::MatrixXd& m, const Quartic& t) {
  const int n = t.dimension();
  Quartic a(n), b(n);
  auto mode = [&](const Quartic& src, Quartic& dst, int which) {
    for (int i0 = 0; i0 < n; ++i0)
      for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < n; ++i2)
          for (int i3 = 0; i3 < n; ++i3) {
            std::array<int, 4> idx{i0, i1, i2, i3};
            double acc = 0.0;
            for (int j = 0; j < n; ++j) {
              std::array<int, 4> src_idx = idx;
              src_idx[which] = j;
              acc += m(idx[which], j) * src(src_idx[0], src_idx[1], src_idx[2], src_idx[3]);
            }
            dst(i0, i1, i2, i3) = acc;
          }
  };
  mode(t, a, 0);
  mode(a, b, 1);
  mode(b, a, 2);
  mode(a, b, 3);
  return b;
}

double frame_residuals_diagonal(const Eigen::MatrixXd& i4c) {
  const double diag_norm = i4c.diagonal().norm();
  double off = 0.0;
  for (Eigen::Index r = 0; r < i4c.rows(); ++r)
    for (Eigen::Index c = 0; c < i4c.cols(); ++c)
      if (r != c) off = std::max(off, std::abs(i4c(r, c)));
  return diag_norm > 0.0 ? off / diag_norm : (off > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
}

}  // namespace

Eigen::MatrixXd gather_velocities(const VelocitySeries& velocities,
                                  const std::vector<std::size_t>& members) {
  std::size_t count = 0;
  for (std::size_t i : members) count += velocities.valid_mask[i] ? 1 : 0;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(count), velocities.velocities.cols());
  Eigen::Index r = 0;
  for (std::size_t i : members) {
    if (velocities.valid_mask[i]) out.row(r++) = velocities.velocities.row(static_cast<Eigen::Index>(i));
  }
  return out;
}

Eigen::MatrixXd inverse_sqrt_spd(const Eigen::Ref<const Eigen::MatrixXd>& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  const Eigen::VectorXd s = eig.eigenvalues().cwiseMax(kEigenClamp).cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * s.asDiagonal() * eig.eigenvectors().transpose();
}

LocalCorrelations local_correlations(const Eigen::Ref<const Eigen::MatrixXd>& velocities,
                                     std::size_t min_count) {
  const auto count = static_cast<std::size_t>(velocities.rows());
  const int n = static_cast<int>(velocities.cols());
  if (count == 0 || count < min_count || n < 1) {
    throw Error(Errc::kInsufficientData, std::to_string(count) + " velocity samples, need " +
                                             std::to_string(std::max<std::size_t>(min_count, 1)));
  }
  const double inv_count = 1.0 / static_cast<double>(count);

  LocalCorrelations corr;
  corr.sample_count = count;
  corr.mean_velocity = velocities.colwise().mean().transpose();
  const Eigen::MatrixXd centered = velocities.rowwise() - corr.mean_velocity.transpose();
  corr.c2 = (centered.transpose() * centered) * inv_count;
  corr.c2 = 0.5 * (corr.c2 + corr.c2.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr.c2, Eigen::EigenvaluesOnly);
  const double hi = eig.eigenvalues().maxCoeff();
  const double lo = eig.eigenvalues().minCoeff();
  if (!(hi > 0.0) || !(lo > kSingularRatio * hi)) {
    throw Error(Errc::kSingularC2, "second moment is not positive definite");
  }
  corr.whitener = inverse_sqrt_spd(corr.c2);

  const Eigen::MatrixXd y = centered * corr.whitener;  // W symmetric
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index s = 0; s < y.rows(); ++s) {
    const Eigen::VectorXd ys = y.row(s).transpose();
    t.noalias() += ys.squaredNorm() * (ys * ys.transpose());
  }
  t *= inv_count;
  corr.whitened_quartic = 0.5 * (t + t.transpose());

  if (n <= kMaxFullTensorDim) {
    Quartic c4(n);
    for (int k = 0; k < n; ++k)
      for (int l = k; l < n; ++l)
        for (int m = l; m < n; ++m)
          for (int q = m; q < n; ++q) {
            const double acc = (centered.col(k).array() * centered.col(l).array() *
                                centered.col(m).array() * centered.col(q).array())
                                   .sum();
            set_symmetric(c4, {k, l, m, q}, acc * inv_count);
          }
    corr.c4 = std::move(c4);
  }
  return corr;
}

TransformedCorrelations transform_correlations(const Eigen::Ref<const Eigen::MatrixXd>& m,
                                               const LocalCorrelations& corr, bool full_tensor) {
  const int n = corr.dimension();
  if (m.rows() != n || m.cols() != n) {
    throw Error(Errc::kDimensionMismatch, "transform must be " + std::to_string(n) + "x" +
                                              std::to_string(n));
  }
  if (!m.allFinite()) throw Error(Errc::kBadConfig, "transform is not finite");
  if (!corr.c4) {
    throw Error(Errc::kDimensionMismatch, "fourth moment tensor not kept above N = " +
                                              std::to_string(kMaxFullTensorDim));
  }
  TransformedCorrelations out;
  out.i2 = m * corr.c2 * m.transpose();

  // sum_m I_klmm = (M Q M^T)_kl with Q_ab = sum_cd C_abcd (M^T M)_cd.
  const Eigen::MatrixXd g = m.transpose() * m;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  const Quartic& c4 = *corr.c4;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double acc = 0.0;
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) acc += c4(a, b, c, d) * g(c, d);
      q(a, b) = acc;
    }
  out.i4_contracted = m * q * m.transpose();
  if (full_tensor) out.i4 = transform_full(m, c4);
  return out;
}

LocalFrame solve_frame(const LocalCorrelations& corr, const SolveOptions& options,
                       int neighborhood_id) {
  const int n = corr.dimension();
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr.c2, Eigen::EigenvaluesOnly);
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(hi > 0.0) || !(eig.eigenvalues().minCoeff() > kSingularRatio * hi)) {
      throw Error(Errc::kSingularC2, "second moment is not positive definite");
    }
  }
  const Eigen::MatrixXd w =
      options.inject_missigned_whitening ? sqrt_spd(corr.c2) : corr.whitener;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr.whitened_quartic);
  LocalFrame frame;
  frame.neighborhood_id = neighborhood_id;
  frame.occupancy = corr.sample_count;
  frame.d.resize(n);
  Eigen::MatrixXd r(n, n);
  for (int i = 0; i < n; ++i) {
    frame.d[i] = eig.eigenvalues()[n - 1 - i];
    r.row(i) = eig.eigenvectors().col(n - 1 - i).transpose();
  }
  frame.eigen_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i + 1 < n; ++i) {
    frame.eigen_gap = std::min(frame.eigen_gap, frame.d[i] - frame.d[i + 1]);
  }
  const double radius = frame.d.cwiseAbs().maxCoeff();
  if (n > 1 && !(frame.eigen_gap >= options.relative_gap_tol * radius && radius > 0.0)) {
    throw Error(Errc::kDegenerateSpectrum,
                "eigen gap " + csv::format(frame.eigen_gap) + " below " +
                    csv::format(options.relative_gap_tol * radius));
  }

  frame.m = r * w;
  frame.v = frame.m.inverse();
  for (int i = 0; i < n; ++i) {
    Eigen::Index arg = 0;
    frame.v.col(i).cwiseAbs().maxCoeff(&arg);
    if (frame.v(arg, i) < 0.0) {
      frame.v.col(i) *= -1.0;
      frame.m.row(i) *= -1.0;
    }
  }

  frame.whitening_residual =
      (frame.m * corr.c2 * frame.m.transpose() - Eigen::MatrixXd::Identity(n, n))
          .cwiseAbs()
          .maxCoeff();
  Eigen::MatrixXd i4c;
  if (corr.c4) {
    i4c = transform_correlations(frame.m, corr).i4_contracted;
  } else {
    // Exact when M W^{-1} is orthogonal, which the whitening residual checks.
    const Eigen::MatrixXd b = frame.m * corr.whitener.inverse();
    i4c = b * corr.whitened_quartic * b.transpose();
  }
  frame.diagonal_residual = frame_residuals_diagonal(i4c);
  return frame;
}

std::pair<double, SignedPermutation> min_signed_permutation_distance(
    const Eigen::Ref<const Eigen::MatrixXd>& a, const Eigen::Ref<const Eigen::MatrixXd>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(Errc::kDimensionMismatch, "matrix shapes differ");
  }
  double best = std::numeric_limits<double>::infinity();
  SignedPermutation best_p;
  for (const auto& p : all_signed_permutations(static_cast<int>(a.rows()))) {
    double acc = 0.0;
    for (int i = 0; i < p.size(); ++i) {
      acc += (a.row(i) - p.signs[i] * b.row(p.perm[i])).squaredNorm();
    }
    if (acc < best) {
      best = acc;
      best_p = p;
    }
  }
  return {std::sqrt(best), best_p};
}

EquivarianceReport equivariance_check(const StateSamples& samples,
                                      const Eigen::Ref<const Eigen::MatrixXd>& a,
                                      const AtlasParams& atlas_params,
                                      const SolveOptions& options) {
  const int n = samples.dimension();
  if (a.rows() != n || a.cols() != n) {
    throw Error(Errc::kDimensionMismatch, "map must match the state dimension");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const double smax = svd.singularValues().maxCoeff();
  const double smin = svd.singularValues().minCoeff();
  if (!(smin > 0.0) || smax / smin >= 1e6) {
    throw Error(Errc::kSingularTransform, "map is singular or ill-conditioned");
  }
  const Eigen::MatrixXd a_inv = a.inverse();

  StateSamples mapped = samples;
  mapped.points = samples.points * a.transpose();

  const Atlas atlas = build_atlas(samples, atlas_params);
  const VelocitySeries vel = estimate_velocity(samples);
  const VelocitySeries vel_mapped = estimate_velocity(mapped);

  EquivarianceReport report;
  for (const auto& nb : atlas.neighborhoods) {
    try {
      const LocalFrame f = solve_frame(
          local_correlations(gather_velocities(vel, nb.members), atlas.min_occupancy), options);
      const LocalFrame g = solve_frame(
          local_correlations(gather_velocities(vel_mapped, nb.members), atlas.min_occupancy),
          options);
      const Eigen::MatrixXd predicted = f.m * a_inv;
      const double dist = min_signed_permutation_distance(g.m, predicted).first;
      report.max_discrepancy = std::max(report.max_discrepancy, dist / f.m.norm());
      ++report.compared;
    } catch (const Error&) {
      ++report.skipped;
    }
  }
  return report;
}

FieldOfFrames harmonize_field(const Atlas& atlas, std::vector<LocalFrame> frames,
                              double order_lock_gap) {
  if (frames.empty()) throw Error(Errc::kEmptyField, "no frames to harmonize");
  const auto count = static_cast<int>(frames.size());

  FieldOfFrames field;
  field.frame_index.assign(atlas.size(), -1);
  for (int f = 0; f < count; ++f) {
    const int id = frames[f].neighborhood_id;
    if (id < 0 || id >= static_cast<int>(atlas.size()) || field.frame_index[id] != -1) {
      throw Error(Errc::kDimensionMismatch, "frame neighborhood ids must be distinct atlas ids");
    }
    field.frame_index[id] = f;
  }
  auto center = [&](int f) -> const Eigen::VectorXd& {
    return atlas.neighborhoods[frames[f].neighborhood_id].center;
  };
  auto radius = [&](int f) { return atlas.neighborhoods[frames[f].neighborhood_id].radius; };

  // Adjacency over frame indices: overlapping disks, else the k nearest.
  std::vector<std::vector<int>> adj(count);
  for (int i = 0; i < count; ++i)
    for (int j = i + 1; j < count; ++j) {
      if ((center(i) - center(j)).norm() <= radius(i) + radius(j)) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
    }
  for (int i = 0; i < count; ++i) {
    if (!adj[i].empty() || count == 1) continue;
    std::vector<int> others;
    for (int j = 0; j < count; ++j)
      if (j != i) others.push_back(j);
    const auto k = std::min<std::size_t>(kFallbackNeighbors, others.size());
    std::partial_sort(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k), others.end(),
                      [&](int x, int y) {
                        const double dx = (center(x) - center(i)).squaredNorm();
                        const double dy = (center(y) - center(i)).squaredNorm();
                        return dx != dy ? dx < dy : x < y;
                      });
    for (std::size_t e = 0; e < k; ++e) {
      const int j = others[e];
      if (std::find(adj[i].begin(), adj[i].end(), j) == adj[i].end()) adj[i].push_back(j);
      if (std::find(adj[j].begin(), adj[j].end(), i) == adj[j].end()) adj[j].push_back(i);
    }
  }
  // Islands left by the rules above are bridged through their closest pair of
  // centers, shortest bridges first, until the graph is connected.
  {
    std::vector<int> parent(count);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
      return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    int components = count;
    for (int i = 0; i < count; ++i)
      for (int j : adj[i]) {
        const int a = find(i), b = find(j);
        if (a != b) {
          parent[a] = b;
          --components;
        }
      }
    if (components > 1) {
      std::vector<std::tuple<double, int, int>> bridges;
      for (int i = 0; i < count; ++i)
        for (int j = i + 1; j < count; ++j)
          if (find(i) != find(j)) bridges.emplace_back((center(i) - center(j)).squaredNorm(), i, j);
      std::sort(bridges.begin(), bridges.end());
      for (const auto& [dist, i, j] : bridges) {
        const int a = find(i), b = find(j);
        if (a == b) continue;
        parent[a] = b;
        adj[i].push_back(j);
        adj[j].push_back(i);
        if (--components == 1) break;
      }
    }
  }
  for (int i = 0; i < count; ++i) {
    std::sort(adj[i].begin(), adj[i].end(),
              [&](int x, int y) { return frames[x].neighborhood_id < frames[y].neighborhood_id; });
    for (int j : adj[i]) {
      const int a = frames[i].neighborhood_id;
      const int b = frames[j].neighborhood_id;
      if (a < b) field.adjacency.emplace_back(a, b);
    }
  }
  std::sort(field.adjacency.begin(), field.adjacency.end());

  const int n = static_cast<int>(frames.front().m.rows());
  const auto group = all_signed_permutations(n);
  field.applied.assign(frames.size(), SignedPermutation::identity(n));

  // Visit order of references: by occupancy descending, then id.
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    if (frames[x].occupancy != frames[y].occupancy) return frames[x].occupancy > frames[y].occupancy;
    return frames[x].neighborhood_id < frames[y].neighborhood_id;
  });

  std::vector<bool> fixed(frames.size(), false);

  // Scores every signed relabelling of frame v against its fixed neighbors;
  // returns the best one and its lead over the runner-up.
  auto evaluate = [&](int v) {
    const LocalFrame& fv = frames[v];
    const bool locked = ordered_gap(fv.d) >= order_lock_gap;
    double best = -std::numeric_limits<double>::infinity();
    double second = best;
    std::size_t best_g = 0;
    for (std::size_t g = 0; g < group.size(); ++g) {
      const auto& p = group[g];
      if (locked && !preserves_order(fv.d, p)) continue;
      double score = 0.0;
      for (int w : adj[v]) {
        if (!fixed[w]) continue;
        const LocalFrame& fw = frames[w];
        for (int i = 0; i < n; ++i) {
          const Eigen::VectorXd cand = p.signs[i] * fv.v.col(p.perm[i]);
          score += cand.dot(fw.v.col(i)) / (cand.norm() * fw.v.col(i).norm());
        }
      }
      if (score > best) {
        second = best;
        best = score;
        best_g = g;
      } else if (score > second) {
        second = score;
      }
    }
    return std::pair{best_g, best - second};
  };

  // Best-first traversal: the unfixed frame whose choice is most clear-cut is
  // fixed next, so that ambiguous frames cannot mislead their neighbors.
  using Entry = std::tuple<double, int, int>;  // margin, -frame, stamp
  std::vector<int> stamp(frames.size(), 0);
  for (int root : order) {
    if (fixed[root]) continue;
    if (field.component_count == 0) field.reference_id = frames[root].neighborhood_id;
    ++field.component_count;
    fixed[root] = true;
    std::priority_queue<Entry> queue;
    auto refresh = [&](int u) {
      for (int v : adj[u]) {
        if (fixed[v]) continue;
        queue.emplace(evaluate(v).second, -v, ++stamp[v]);
      }
    };
    refresh(root);
    while (!queue.empty()) {
      const auto [margin, neg, st] = queue.top();
      queue.pop();
      const int v = -neg;
      if (fixed[v] || st != stamp[v]) continue;
      const SignedPermutation& p = group[evaluate(v).first];
      const LocalFrame& fv = frames[v];
      LocalFrame out = fv;
      for (int i = 0; i < n; ++i) {
        out.v.col(i) = p.signs[i] * fv.v.col(p.perm[i]);
        out.m.row(i) = p.signs[i] * fv.m.row(p.perm[i]);
        out.d[i] = fv.d[p.perm[i]];
      }
      frames[v] = std::move(out);
      field.applied[v] = p;
      fixed[v] = true;
      refresh(v);
    }
  }
  field.frames = std::move(frames);
  field.harmonized = true;
  return field;
}

void write_frames_csv(std::ostream& out, const FieldOfFrames& field) {
  const int n = field.frames.empty() ? 0 : static_cast<int>(field.frames.front().m.rows());
  out << "id";
  for (const char* name : {"m", "v"})
    for (int r = 1; r <= n; ++r)
      for (int c = 1; c <= n; ++c) out << ',' << name << r << c;
  for (int i = 1; i <= n; ++i) out << ",d" << i;
  out << ",eigen_gap,occupancy\n";
  for (const auto& f : field.frames) {
    out << f.neighborhood_id;
    for (const Eigen::MatrixXd* mat : {&f.m, &f.v})
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) out << ',' << csv::format((*mat)(r, c));
    for (int i = 0; i < n; ++i) out << ',' << csv::format(f.d[i]);
    out << ',' << csv::format(f.eigen_gap) << ',' << f.occupancy << '\n';
  }
}

}  // namespace inner
