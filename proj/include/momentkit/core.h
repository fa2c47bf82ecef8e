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

#ifndef MOMENTKIT_CORE_H_
#define MOMENTKIT_CORE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace momentkit {

// A temporal interval in seconds. The struct itself carries raw arithmetic
// results (from FromCenterWidth a start may be negative); IsValidSpan() is
// the predicate every consumer checks before trusting one.
struct Span {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }
  double center() const { return 0.5 * (start + end); }

  friend bool operator==(const Span&, const Span&) = default;
};

// finite, start >= 0, start < end.
bool IsValidSpan(const Span& span);

// The (center, width) view of a span. Either in seconds or normalized by the
// video duration, depending on where it is used.
struct CenterWidth {
  double center = 0.0;
  double width = 0.0;

  friend bool operator==(const CenterWidth&, const CenterWidth&) = default;
};

absl::StatusOr<CenterWidth> ToCenterWidth(const Span& span);
// Same, but normalized to [0, 1] by `duration`.
absl::StatusOr<CenterWidth> ToCenterWidth(const Span& span, double duration);

absl::StatusOr<Span> FromCenterWidth(const CenterWidth& cw);
// Denormalizes a [0, 1] center/width against `duration`.
absl::StatusOr<Span> FromCenterWidth(const CenterWidth& cw, double duration);

// Intersects `span` with [0, duration]. Fails when nothing of positive length
// remains.
absl::StatusOr<Span> ClampToVideo(const Span& span, double duration);

struct Moment {
  Span span;
  std::string query_id;
};

// Row-major clip features.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(size_t rows, size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}

  // Validates that the payload matches the shape and is finite.
  static absl::StatusOr<FeatureMatrix> Create(size_t rows, size_t cols,
                                              std::vector<float> data);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  const std::vector<float>& data() const { return data_; }

  std::span<const float> row(size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<float> mutable_row(size_t r) {
    return {data_.data() + r * cols_, cols_};
  }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<float> data_;
};

// Number of feature rows a video of `duration` seconds has at `clip_len`.
size_t ExpectedRowCount(double duration, double clip_len);

// Clip index holding time `t`.
size_t ClipIndex(double t, double clip_len);

// One (video, query) training sample.
struct VideoSample {
  std::string sample_id;
  std::string video_id;
  double duration = 0.0;
  double clip_len = 0.0;
  FeatureMatrix features;
  std::string query_text;
  // Sorted, pairwise disjoint foreground windows.
  std::vector<Span> gt_moments;
};

// Checks every VideoSample invariant: positive duration and clip length,
// row count, finite features, gt windows valid, in bounds, sorted, disjoint.
absl::Status ValidateVideoSample(const VideoSample& sample);

// Sorts the gt windows and validates. Overlapping windows are rejected.
absl::StatusOr<VideoSample> MakeVideoSample(VideoSample sample);

struct Prediction {
  Span span;
  double score = 0.0;
  std::optional<int> class_slot;
};

}  // namespace momentkit

#endif  // MOMENTKIT_CORE_H_
