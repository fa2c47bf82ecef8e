// Copyright 2026 The MomentKit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "momentkit/lengthcls.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "absl/strings/str_cat.h"

namespace momentkit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Preset {
  std::string_view name;
  std::vector<double> thresholds;
};

const std::vector<Preset>& Presets() {
  static const auto* presets = new std::vector<Preset>{
      {"qvhighlights", {12, 36, 65, kInf}},
      {"charades-sta", {5.67, 14, kInf}},
      {"tacos", {10, 19, 38, kInf}},
      {"fixed", {10, 30, 70, kInf}},
  };
  return *presets;
}

int Sign(double v, double tol) { return v > tol ? 1 : (v < -tol ? -1 : 0); }

}  // namespace

absl::StatusOr<LengthClassScheme> LengthClassScheme::Create(
    std::vector<double> thresholds) {
  if (thresholds.empty() || thresholds.back() != kInf) {
    return absl::InvalidArgumentError("thresholds must end with +inf");
  }
  for (size_t i = 0; i + 1 < thresholds.size(); ++i) {
    if (!std::isfinite(thresholds[i]) || thresholds[i] <= 0.0) {
      return absl::InvalidArgumentError(absl::StrCat(
          "threshold ", i, " must be positive and finite, got ",
          thresholds[i]));
    }
    if (i > 0 && thresholds[i] <= thresholds[i - 1]) {
      return absl::InvalidArgumentError("thresholds must strictly increase");
    }
  }
  LengthClassScheme scheme;
  scheme.thresholds_ = std::move(thresholds);
  return scheme;
}

int ClassOf(double duration, const LengthClassScheme& scheme) {
  const auto& t = scheme.thresholds();
  return static_cast<int>(std::lower_bound(t.begin(), t.end(), duration) -
                          t.begin());
}

absl::StatusOr<LengthClassScheme> PresetScheme(std::string_view name) {
  for (const Preset& p : Presets()) {
    if (p.name == name) return LengthClassScheme::Create(p.thresholds);
  }
  return absl::NotFoundError(absl::StrCat("unknown preset '", std::string(name), "'"));
}

std::vector<std::string> PresetNames() {
  std::vector<std::string> names;
  for (const Preset& p : Presets()) names.emplace_back(p.name);
  return names;
}

absl::StatusOr<QualityCurve> CumulativeCurve(
    std::span<const CurvePoint> per_moment) {
  if (per_moment.empty()) {
    return absl::InvalidArgumentError("cannot build a curve from no moments");
  }
  std::vector<CurvePoint> sorted(per_moment.begin(), per_moment.end());
  for (const CurvePoint& p : sorted) {
    if (!(p.length > 0.0) || !std::isfinite(p.length)) {
      return absl::InvalidArgumentError(
          absl::StrCat("moment length must be positive, got ", p.length));
    }
    if (!(p.score >= 0.0 && p.score <= 1.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("score must be in [0, 1], got ", p.score));
    }
  }
  std::stable_sort(
      sorted.begin(), sorted.end(),
      [](const CurvePoint& a, const CurvePoint& b) { return a.length < b.length; });

  QualityCurve curve;
  double sum = 0.0;
  for (size_t i = 0; i < sorted.size(); ++i) {
    sum += sorted[i].score;
    const double mean = sum / static_cast<double>(i + 1);
    if (!curve.points.empty() && curve.points.back().length == sorted[i].length) {
      curve.points.back().score = mean;
    } else {
      curve.points.push_back({sorted[i].length, mean});
    }
  }
  return curve;
}

absl::StatusOr<std::vector<double>> DetectInflections(const QualityCurve& curve,
                                                      int smoothing_window) {
  if (smoothing_window < 1 || smoothing_window % 2 == 0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "smoothing window must be odd and positive, got ", smoothing_window));
  }
  const auto& pts = curve.points;
  const size_t window = static_cast<size_t>(smoothing_window);
  if (pts.size() < window + 3) {
    return absl::InvalidArgumentError(
        absl::StrCat("curve has ", pts.size(), " points, need at least ",
                     window + 3, " for window ", smoothing_window));
  }

  const size_t half = window / 2;
  std::vector<double> xs;
  std::vector<double> ys;
  double scale = 1.0;
  for (size_t i = half; i + half < pts.size(); ++i) {
    double sum = 0.0;
    for (size_t j = i - half; j <= i + half; ++j) sum += pts[j].score;
    xs.push_back(pts[i].length);
    ys.push_back(sum / static_cast<double>(window));
    scale = std::max(scale, std::abs(ys.back()));
  }

  // Second differences that are zero up to rounding carry no sign.
  const double tol = 1e-12 * scale;
  std::vector<double> inflections;
  int last_sign = 0;
  double last_x = 0.0;
  for (size_t i = 1; i + 1 < ys.size(); ++i) {
    const int sign = Sign(ys[i - 1] - 2.0 * ys[i] + ys[i + 1], tol);
    if (sign == 0) continue;
    if (last_sign != 0 && sign != last_sign) {
      inflections.push_back(0.5 * (last_x + xs[i]));
    }
    last_sign = sign;
    last_x = xs[i];
  }
  return inflections;
}

absl::StatusOr<std::vector<double>> KMeans1d(std::span<const double> points,
                                             int k) {
  if (k < 1) {
    return absl::InvalidArgumentError(absl::StrCat("k must be >= 1, got ", k));
  }
  if (static_cast<size_t>(k) > points.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "k = ", k, " exceeds the number of points (", points.size(), ")"));
  }
  std::vector<double> xs(points.begin(), points.end());
  for (double x : xs) {
    if (!std::isfinite(x)) {
      return absl::InvalidArgumentError("points must be finite");
    }
  }
  std::sort(xs.begin(), xs.end());
  const size_t n = xs.size();
  const auto kk = static_cast<size_t>(k);

  std::vector<double> centers(kk);
  for (size_t i = 0; i < kk; ++i) {
    // Nearest-rank (2i+1)/(2k) quantile.
    const size_t idx = std::min(n - 1, (2 * i + 1) * n / (2 * kk));
    centers[i] = xs[idx];
  }

  std::vector<size_t> assign(n, kk);
  for (int iter = 0; iter < 10000; ++iter) {
    bool changed = false;
    for (size_t p = 0; p < n; ++p) {
      size_t best = 0;
      for (size_t c = 1; c < kk; ++c) {
        if (std::abs(xs[p] - centers[c]) < std::abs(xs[p] - centers[best])) {
          best = c;
        }
      }
      if (assign[p] != best) {
        assign[p] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<double> sum(kk, 0.0);
    std::vector<size_t> count(kk, 0);
    for (size_t p = 0; p < n; ++p) {
      sum[assign[p]] += xs[p];
      ++count[assign[p]];
    }
    // An empty cluster keeps its previous center.
    for (size_t c = 0; c < kk; ++c) {
      if (count[c] > 0) centers[c] = sum[c] / static_cast<double>(count[c]);
    }
  }
  std::sort(centers.begin(), centers.end());
  return centers;
}

absl::StatusOr<LengthClassScheme> SchemeFromCenters(
    std::span<const double> centers) {
  for (size_t i = 0; i < centers.size(); ++i) {
    if (!(centers[i] > 0.0) || !std::isfinite(centers[i])) {
      return absl::InvalidArgumentError(absl::StrCat(
          "center ", i, " must be positive and finite, got ", centers[i]));
    }
    if (i > 0 && centers[i] <= centers[i - 1]) {
      return absl::InvalidArgumentError(
          "centers must be sorted and distinct");
    }
  }
  std::vector<double> thresholds(centers.begin(), centers.end());
  thresholds.push_back(kInf);
  return LengthClassScheme::Create(std::move(thresholds));
}

absl::StatusOr<LengthClassScheme> DeriveScheme(
    std::span<const CurvePoint> per_moment, int n_classes,
    int smoothing_window) {
  if (n_classes < 2) {
    return absl::InvalidArgumentError(
        absl::StrCat("need at least 2 classes, got ", n_classes));
  }
  auto curve = CumulativeCurve(per_moment);
  if (!curve.ok()) return curve.status();
  auto inflections = DetectInflections(*curve, smoothing_window);
  if (!inflections.ok()) return inflections.status();
  if (inflections->size() < static_cast<size_t>(n_classes - 1)) {
    return absl::FailedPreconditionError(absl::StrCat(
        "found ", inflections->size(), " inflection points, need at least ",
        n_classes - 1));
  }
  auto centers = KMeans1d(*inflections, n_classes - 1);
  if (!centers.ok()) return centers.status();
  return SchemeFromCenters(*centers);
}

}  // namespace momentkit
