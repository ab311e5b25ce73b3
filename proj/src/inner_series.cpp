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

#include "inner/inner_series.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "inner/csv.hpp"
#include "inner/error.hpp"

namespace inner {

namespace {

constexpr double kTimeMatch = 1e-6;

struct Overlap {
  std::vector<std::size_t> ia;
  std::vector<std::size_t> ib;
};

Overlap overlap(const InnerSeries& a, const InnerSeries& b) {
  if (a.dimension() != b.dimension()) {
    throw Error(Errc::kDimensionMismatch, "series dimensions differ");
  }
  Overlap o;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double ta = a.frame_times[i];
    const double tb = b.frame_times[j];
    if (std::abs(ta - tb) <= kTimeMatch) {
      if (a.valid_mask[i] && b.valid_mask[j]) {
        o.ia.push_back(i);
        o.ib.push_back(j);
      }
      ++i;
      ++j;
    } else if (ta < tb) {
      ++i;
    } else {
      ++j;
    }
  }
  if (o.ia.size() < 2) {
    throw Error(Errc::kNoOverlap, std::to_string(o.ia.size()) + " overlapping valid frames");
  }
  return o;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

ComparisonReport report_on(const InnerSeries& a, const InnerSeries& b, const Overlap& o,
                           const SignedPermutation& p) {
  const int n = a.dimension();
  ComparisonReport r;
  r.chosen_p = p;
  r.overlap_frames = o.ia.size();
  double total = 0.0;
  std::vector<double> xa(o.ia.size()), xb(o.ia.size());
  for (int c = 0; c < n; ++c) {
    double sse = 0.0;
    for (std::size_t k = 0; k < o.ia.size(); ++k) {
      xa[k] = a.weights(static_cast<Eigen::Index>(o.ia[k]), c);
      xb[k] = p.signs[c] * b.weights(static_cast<Eigen::Index>(o.ib[k]), p.perm[c]);
      sse += (xb[k] - xa[k]) * (xb[k] - xa[k]);
    }
    total += sse;
    r.per_component_rmse.push_back(std::sqrt(sse / static_cast<double>(o.ia.size())));
    r.per_component_pearson.push_back(pearson(xa, xb));
  }
  r.total_rmse = std::sqrt(total / static_cast<double>(o.ia.size() * static_cast<std::size_t>(n)));
  return r;
}

}  // namespace

std::size_t InnerSeries::valid_count() const {
  return static_cast<std::size_t>(std::count(valid_mask.begin(), valid_mask.end(), true));
}

InnerSeries derive_inner(const StateSamples& samples, const VelocitySeries& velocities,
                         const FieldOfFrames& field, const Atlas& atlas) {
  if (!field.harmonized) throw Error(Errc::kUnharmonizedField, "run harmonize_field first");
  if (velocities.size() != samples.size()) {
    throw Error(Errc::kDimensionMismatch, "velocity and state lengths differ");
  }
  if (field.frame_index.size() != atlas.size()) {
    throw Error(Errc::kDimensionMismatch, "field was built on a different atlas");
  }
  std::vector<bool> allowed(atlas.size());
  for (std::size_t j = 0; j < atlas.size(); ++j) allowed[j] = field.frame_index[j] >= 0;

  InnerSeries out;
  out.frame_times = samples.frame_times;
  out.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(samples.size()),
                                      samples.dimension());
  out.valid_mask.assign(samples.size(), false);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!velocities.valid_mask[i]) continue;
    const auto r = static_cast<Eigen::Index>(i);
    const auto id = locate(atlas, samples.points.row(r).transpose(), &allowed);
    if (!id) continue;
    const LocalFrame& f = field.frames[static_cast<std::size_t>(field.frame_index[*id])];
    out.weights.row(r) = (f.m * velocities.velocities.row(r).transpose()).transpose();
    out.valid_mask[i] = true;
  }
  return out;
}

InnerSeries gaussian_smooth(const InnerSeries& series, double sigma_frames) {
  if (!(sigma_frames > 0.0)) throw Error(Errc::kBadConfig, "sigma must be positive");
  const auto half = static_cast<long>(std::ceil(4.0 * sigma_frames));
  std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
  for (long k = -half; k <= half; ++k) {
    const double x = static_cast<double>(k) / sigma_frames;
    kernel[static_cast<std::size_t>(k + half)] = std::exp(-0.5 * x * x);
  }

  InnerSeries out = series;
  const auto n = static_cast<long>(series.size());
  long start = 0;
  while (start < n) {
    if (!series.valid_mask[static_cast<std::size_t>(start)]) {
      ++start;
      continue;
    }
    long end = start;
    while (end < n && series.valid_mask[static_cast<std::size_t>(end)]) ++end;
    for (long i = start; i < end; ++i) {
      const long lo = std::max(start, i - half);
      const long hi = std::min(end - 1, i + half);
      double norm = 0.0;
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(series.dimension());
      for (long j = lo; j <= hi; ++j) {
        const double k = kernel[static_cast<std::size_t>(j - i + half)];
        norm += k;
        acc += k * series.weights.row(j);
      }
      out.weights.row(i) = acc / norm;
    }
    start = end;
  }
  return out;
}

std::pair<SignedPermutation, ComparisonReport> best_alignment(const InnerSeries& a,
                                                              const InnerSeries& b) {
  const Overlap o = overlap(a, b);
  const int n = a.dimension();
  double best = std::numeric_limits<double>::infinity();
  SignedPermutation best_p;
  for (const auto& p : all_signed_permutations(n)) {
    double sse = 0.0;
    for (std::size_t k = 0; k < o.ia.size(); ++k) {
      const auto ra = static_cast<Eigen::Index>(o.ia[k]);
      const auto rb = static_cast<Eigen::Index>(o.ib[k]);
      for (int c = 0; c < n; ++c) {
        const double diff = p.signs[c] * b.weights(rb, p.perm[c]) - a.weights(ra, c);
        sse += diff * diff;
      }
    }
    if (sse < best) {
      best = sse;
      best_p = p;
    }
  }
  return {best_p, report_on(a, b, o, best_p)};
}

ComparisonReport compare_with(const InnerSeries& a, const InnerSeries& b,
                              const SignedPermutation& p) {
  if (p.size() != a.dimension()) throw Error(Errc::kDimensionMismatch, "permutation size");
  return report_on(a, b, overlap(a, b), p);
}

InnerSeries apply_alignment(const SignedPermutation& p, const InnerSeries& series) {
  if (p.size() != series.dimension()) {
    throw Error(Errc::kDimensionMismatch, "permutation size differs from series dimension");
  }
  InnerSeries out = series;
  for (int c = 0; c < p.size(); ++c) {
    out.weights.col(c) = p.signs[c] * series.weights.col(p.perm[c]);
  }
  return out;
}

InnerSeries restrict_frames(const InnerSeries& series, std::size_t first, std::size_t last) {
  InnerSeries out = series;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i < first || i >= last) out.valid_mask[i] = false;
  }
  return out;
}

void write_inner_csv(std::ostream& out, const InnerSeries& series) {
  out << "time_s";
  for (int c = 1; c <= series.dimension(); ++c) out << ",w" << c;
  out << ",valid\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << csv::format(series.frame_times[i]);
    for (int c = 0; c < series.dimension(); ++c) {
      out << ',' << csv::format(series.weights(static_cast<Eigen::Index>(i), c));
    }
    out << ',' << (series.valid_mask[i] ? 1 : 0) << '\n';
  }
}

InnerSeries read_inner_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::kParseError, "empty inner-series CSV");
  const auto header = csv::split(line);
  if (header.size() < 3 || header.front() != "time_s" || header.back() != "valid") {
    throw Error(Errc::kParseError, "inner-series header must be time_s,w1..wN,valid");
  }
  const int dims = static_cast<int>(header.size()) - 2;
  for (int c = 0; c < dims; ++c) {
    if (header[c + 1] != "w" + std::to_string(c + 1)) {
      throw Error(Errc::kParseError, "unexpected column '" + header[c + 1] + "'");
    }
  }
  InnerSeries s;
  std::vector<double> values;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split(line);
    if (static_cast<int>(f.size()) != dims + 2) {
      throw Error(Errc::kParseError, "row " + std::to_string(row) + " has " +
                                         std::to_string(f.size()) + " fields");
    }
    s.frame_times.push_back(csv::parse_double(f[0]));
    for (int c = 0; c < dims; ++c) values.push_back(csv::parse_double(f[c + 1]));
    const long v = csv::parse_int(f.back());
    if (v != 0 && v != 1) throw Error(Errc::kParseError, "valid flag must be 0 or 1");
    s.valid_mask.push_back(v == 1);
  }
  s.weights = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(s.frame_times.size()), dims);
  return s;
}

void write_report_csv(std::ostream& out, const ComparisonReport& report) {
  out << "chosen_p," << report.chosen_p.to_string() << '\n';
  out << "component,pearson,rmse\n";
  for (std::size_t c = 0; c < report.per_component_pearson.size(); ++c) {
    out << (c + 1) << ',' << csv::format(report.per_component_pearson[c]) << ','
        << csv::format(report.per_component_rmse[c]) << '\n';
  }
}

void write_overlay_svg(std::ostream& out, const InnerSeries& a, const InnerSeries& b) {
  constexpr double kWidth = 900.0;
  constexpr double kHeight = 300.0;
  constexpr double kPad = 20.0;
  const int n = std::max(a.dimension(), b.dimension());

  double t0 = std::numeric_limits<double>::infinity();
  double t1 = -std::numeric_limits<double>::infinity();
  for (const InnerSeries* s : {&a, &b}) {
    if (s->size() == 0) continue;
    t0 = std::min(t0, s->frame_times.front());
    t1 = std::max(t1, s->frame_times.back());
  }
  if (!(t1 > t0)) t1 = t0 + 1.0;

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth
      << "\" height=\"" << kHeight * n << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight * n
      << "\">\n";
  for (int c = 0; c < n; ++c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const InnerSeries* s : {&a, &b}) {
      if (c >= s->dimension()) continue;
      for (std::size_t i = 0; i < s->size(); ++i) {
        if (!s->valid_mask[i]) continue;
        lo = std::min(lo, s->weights(static_cast<Eigen::Index>(i), c));
        hi = std::max(hi, s->weights(static_cast<Eigen::Index>(i), c));
      }
    }
    if (!(hi > lo)) {
      lo = std::isfinite(lo) ? lo - 1.0 : -1.0;
      hi = lo + 2.0;
    }
    const double top = kHeight * c;
    out << "<g id=\"w" << (c + 1) << "\">\n"
        << "<rect x=\"0\" y=\"" << top << "\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" fill=\"white\" stroke=\"#cccccc\"/>\n"
        << "<text x=\"4\" y=\"" << top + 14 << "\" font-size=\"12\">w" << (c + 1) << "</text>\n";
    auto px = [&](double t) { return kPad + (t - t0) / (t1 - t0) * (kWidth - 2 * kPad); };
    auto py = [&](double v) { return top + kHeight - kPad - (v - lo) / (hi - lo) * (kHeight - 2 * kPad); };
    auto emit = [&](const InnerSeries& s, const char* style) {
      if (c >= s.dimension()) return;
      bool open = false;
      for (std::size_t i = 0; i <= s.size(); ++i) {
        const bool ok = i < s.size() && s.valid_mask[i];
        if (ok && !open) {
          out << "<polyline fill=\"none\" " << style << " points=\"";
          open = true;
        }
        if (ok) {
          out << csv::format(px(s.frame_times[i])) << ','
              << csv::format(py(s.weights(static_cast<Eigen::Index>(i), c))) << ' ';
        } else if (open) {
          out << "\"/>\n";
          open = false;
        }
      }
    };
    emit(a, "stroke=\"black\" stroke-width=\"1\"");
    emit(b, "stroke=\"red\" stroke-width=\"1\" stroke-dasharray=\"6,4\"");
    out << "</g>\n";
  }
  out << "</svg>\n";
}

}  // namespace inner
