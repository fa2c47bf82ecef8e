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

#ifndef MOMENTKIT_LENGTHCLS_H_
#define MOMENTKIT_LENGTHCLS_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"

namespace momentkit {

// Duration thresholds splitting (0, inf) into length classes. Class k covers
// (thresholds[k-1], thresholds[k]]; a duration equal to a threshold belongs
// to the lower class. The last threshold is always +inf.
class LengthClassScheme {
 public:
  static absl::StatusOr<LengthClassScheme> Create(
      std::vector<double> thresholds);

  const std::vector<double>& thresholds() const { return thresholds_; }
  int n_classes() const { return static_cast<int>(thresholds_.size()); }

  // Exclusive lower / inclusive upper bound of class `k`.
  double lower(int k) const { return k == 0 ? 0.0 : thresholds_[k - 1]; }
  double upper(int k) const { return thresholds_[k]; }
  bool Contains(int k, double duration) const {
    return duration > lower(k) && duration <= upper(k);
  }

  friend bool operator==(const LengthClassScheme&,
                         const LengthClassScheme&) = default;

 private:
  std::vector<double> thresholds_;
};

// Requires duration > 0.
int ClassOf(double duration, const LengthClassScheme& scheme);

// Published schemes: "qvhighlights" [12, 36, 65, inf], "charades-sta"
// [5.67, 14, inf], "tacos" [10, 19, 38, inf] and the dataset-agnostic
// "fixed" [10, 30, 70, inf].
absl::StatusOr<LengthClassScheme> PresetScheme(std::string_view name);
std::vector<std::string> PresetNames();

struct CurvePoint {
  double length = 0.0;
  double score = 0.0;
};

// Sorted by strictly increasing length; score is the mean over every moment
// no longer than `length`.
struct QualityCurve {
  std::vector<CurvePoint> points;
};

// Builds the cumulative (running-mean) quality curve from per-moment
// (length, score) pairs. Moments of equal length share one point.
absl::StatusOr<QualityCurve> CumulativeCurve(
    std::span<const CurvePoint> per_moment);

inline constexpr int kDefaultSmoothingWindow = 3;

// Smooths the curve with a centered moving average of odd width
// `smoothing_window` and returns the lengths where the second difference
// changes sign. Each reported length is the midpoint between the last point
// of one sign and the first point of the other.
absl::StatusOr<std::vector<double>> DetectInflections(
    const QualityCurve& curve, int smoothing_window = kDefaultSmoothingWindow);

// Lloyd's algorithm from nearest-rank quantile seeds, iterated until the
// assignment stops changing. Returns the k centers sorted ascending.
absl::StatusOr<std::vector<double>> KMeans1d(std::span<const double> points,
                                             int k);

// thresholds = centers ++ [inf].
absl::StatusOr<LengthClassScheme> SchemeFromCenters(
    std::span<const double> centers);

// Curve -> inflections -> k-means (k = n_classes - 1) -> scheme.
absl::StatusOr<LengthClassScheme> DeriveScheme(
    std::span<const CurvePoint> per_moment, int n_classes,
    int smoothing_window = kDefaultSmoothingWindow);

}  // namespace momentkit

#endif  // MOMENTKIT_LENGTHCLS_H_
