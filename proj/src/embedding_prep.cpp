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

#include "inner/embedding_prep.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "inner/csv.hpp"
#include "inner/error.hpp"

namespace inner {

void PrepConfig::validate(int feature_dims) const {
  if (retain_dims < 1 || retain_dims > feature_dims) {
    throw Error(Errc::kBadConfig, "retain_dims must lie in [1, " +
                                      std::to_string(feature_dims) + "]");
  }
  if (!(trim_fraction >= 0.0 && trim_fraction < 0.5)) {
    throw Error(Errc::kBadConfig, "trim_fraction must lie in [0, 0.5)");
  }
  if (std::isnan(pc1_floor)) throw Error(Errc::kBadConfig, "pc1_floor is NaN");
}

std::size_t StateSamples::valid_count() const {
  return static_cast<std::size_t>(std::count(valid_mask.begin(), valid_mask.end(), true));
}

PcaModel fit_pca(const FeatureSeries& features) {
  return fit_pca(features, std::vector<bool>(features.size(), true));
}

PcaModel fit_pca(const FeatureSeries& features, const std::vector<bool>& mask) {
  const auto n = static_cast<Eigen::Index>(features.size());
  const Eigen::Index k = features.frames.cols();
  if (static_cast<Eigen::Index>(mask.size()) != n) {
    throw Error(Errc::kDimensionMismatch, "mask length differs from frame count");
  }
  auto used = [&](Eigen::Index i) { return mask[static_cast<std::size_t>(i)]; };

  Eigen::Index count = 0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!used(i)) continue;
    mean += features.frames.row(i).transpose();
    ++count;
  }
  if (count < k + 1) {
    throw Error(Errc::kTooFewFrames, std::to_string(count) + " frames for " +
                                         std::to_string(k) + " channels");
  }
  mean /= static_cast<double>(count);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!used(i)) continue;
    const Eigen::VectorXd d = features.frames.row(i).transpose() - mean;
    cov.selfadjointView<Eigen::Lower>().rankUpdate(d);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(count - 1);
  if (!cov.allFinite()) throw Error(Errc::kBadConfig, "covariance is not finite");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  PcaModel model;
  model.mean = mean;
  model.basis.resize(k, k);
  model.eigenvalues.resize(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    Eigen::VectorXd dir = eig.eigenvectors().col(k - 1 - r);
    Eigen::Index arg = 0;
    dir.cwiseAbs().maxCoeff(&arg);
    if (dir[arg] < 0.0) dir = -dir;
    model.basis.row(r) = dir.transpose();
    model.eigenvalues[r] = std::max(0.0, eig.eigenvalues()[k - 1 - r]);
  }
  return model;
}

StateSamples project(const PcaModel& model, const FeatureSeries& features, int retain_dims) {
  const Eigen::Index k = model.mean.size();
  if (features.frames.cols() != k || retain_dims < 1 || retain_dims > k) {
    throw Error(Errc::kDimensionMismatch, "feature width or retain_dims does not match the model");
  }
  StateSamples s;
  s.frame_times = features.frame_times;
  const Eigen::MatrixXd centered = features.frames.rowwise() - model.mean.transpose();
  s.points = centered * model.basis.topRows(retain_dims).transpose();
  s.valid_mask.assign(features.size(), true);
  s.axis_scales = Eigen::VectorXd::Ones(retain_dims);
  return s;
}

StateSamples truncate_low_pc1(StateSamples samples, double pc1_floor) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples.points(static_cast<Eigen::Index>(i), 0) < pc1_floor) {
      samples.valid_mask[i] = false;
    }
  }
  return samples;
}

double quantile_sorted(std::span<const double> sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

StateSamples trim_outliers(StateSamples samples, double trim_fraction) {
  if (trim_fraction == 0.0) return samples;
  if (!(trim_fraction > 0.0 && trim_fraction < 0.5)) {
    throw Error(Errc::kBadConfig, "trim_fraction must lie in [0, 0.5)");
  }
  const std::size_t valid = samples.valid_count();
  if (static_cast<double>(valid) < 1.0 / trim_fraction) {
    throw Error(Errc::kInsufficientData, std::to_string(valid) + " valid frames for trim " +
                                             std::to_string(trim_fraction));
  }
  const int dims = samples.dimension();
  std::vector<double> lo(dims), hi(dims);
  std::vector<double> column;
  column.reserve(valid);
  for (int d = 0; d < dims; ++d) {
    column.clear();
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples.valid_mask[i]) column.push_back(samples.points(static_cast<Eigen::Index>(i), d));
    }
    std::sort(column.begin(), column.end());
    lo[d] = quantile_sorted(column, trim_fraction);
    hi[d] = quantile_sorted(column, 1.0 - trim_fraction);
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!samples.valid_mask[i]) continue;
    for (int d = 0; d < dims; ++d) {
      const double v = samples.points(static_cast<Eigen::Index>(i), d);
      if (v < lo[d] || v > hi[d]) {
        samples.valid_mask[i] = false;
        break;
      }
    }
  }
  return samples;
}

StateSamples normalize_variance(StateSamples samples) {
  const std::size_t valid = samples.valid_count();
  if (valid < 2) throw Error(Errc::kInsufficientData, "need two valid frames to normalize");
  const int dims = samples.dimension();
  if (samples.axis_scales.size() != dims) samples.axis_scales = Eigen::VectorXd::Ones(dims);
  for (int d = 0; d < dims; ++d) {
    double mean = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples.valid_mask[i]) mean += samples.points(static_cast<Eigen::Index>(i), d);
    }
    mean /= static_cast<double>(valid);
    double var = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (!samples.valid_mask[i]) continue;
      const double c = samples.points(static_cast<Eigen::Index>(i), d) - mean;
      var += c * c;
    }
    var /= static_cast<double>(valid);
    if (!(var > 0.0)) {
      throw Error(Errc::kZeroVariance, "axis " + std::to_string(d + 1) + " has zero variance");
    }
    const double sd = std::sqrt(var);
    samples.points.col(d) /= sd;
    samples.axis_scales[d] *= sd;
  }
  return samples;
}

StateSamples prepare_embedding(const FeatureSeries& features, const PrepConfig& config,
                               PcaModel* fitted) {
  config.validate(features.channels());
  const PcaModel first = fit_pca(features);
  const StateSamples pc1 = truncate_low_pc1(project(first, features, 1), config.pc1_floor);
  const std::size_t kept = pc1.valid_count();
  if (kept < static_cast<std::size_t>(features.channels()) + 1) {
    throw Error(Errc::kInsufficientData,
                std::to_string(kept) + " frames survive PC1 truncation");
  }

  PcaModel model = first;
  if (config.refit_after_truncation) model = fit_pca(features, pc1.valid_mask);
  StateSamples s = project(model, features, config.retain_dims);
  s.valid_mask = pc1.valid_mask;
  s = trim_outliers(std::move(s), config.trim_fraction);
  s = normalize_variance(std::move(s));
  if (fitted != nullptr) *fitted = model;
  return s;
}

void write_state_csv(std::ostream& out, const StateSamples& samples) {
  out << "time_s";
  for (int d = 1; d <= samples.dimension(); ++d) out << ",x" << d;
  out << ",valid\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out << csv::format(samples.frame_times[i]);
    for (int d = 0; d < samples.dimension(); ++d) {
      out << ',' << csv::format(samples.points(static_cast<Eigen::Index>(i), d));
    }
    out << ',' << (samples.valid_mask[i] ? 1 : 0) << '\n';
  }
}

StateSamples read_state_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::kParseError, "empty state CSV");
  const auto header = csv::split(line);
  if (header.size() < 3 || header.front() != "time_s" || header.back() != "valid") {
    throw Error(Errc::kParseError, "state CSV header must be time_s,x1..xN,valid");
  }
  const int dims = static_cast<int>(header.size()) - 2;
  std::vector<double> times;
  std::vector<double> values;
  std::vector<bool> mask;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split(line);
    if (static_cast<int>(f.size()) != dims + 2) {
      throw Error(Errc::kParseError, "state CSV row has " + std::to_string(f.size()) + " fields");
    }
    times.push_back(csv::parse_double(f[0]));
    for (int d = 0; d < dims; ++d) values.push_back(csv::parse_double(f[d + 1]));
    const long v = csv::parse_int(f.back());
    if (v != 0 && v != 1) throw Error(Errc::kParseError, "valid flag must be 0 or 1");
    mask.push_back(v == 1);
  }
  StateSamples s;
  s.frame_times = std::move(times);
  s.points = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(s.frame_times.size()), dims);
  s.valid_mask = std::move(mask);
  s.axis_scales = Eigen::VectorXd::Ones(dims);
  return s;
}

}  // namespace inner
