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

#include "momentkit/core.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace momentkit {
namespace {

// Absorbs representation error in duration / clip_len ratios such as
// 0.3 / 0.1 before rounding to a clip count.
constexpr double kGridSlack = 1e-9;

std::string SpanString(const Span& s) {
  return absl::StrFormat("[%g, %g]", s.start, s.end);
}

}  // namespace

bool IsValidSpan(const Span& span) {
  return std::isfinite(span.start) && std::isfinite(span.end) &&
         span.start >= 0.0 && span.start < span.end;
}

absl::StatusOr<CenterWidth> ToCenterWidth(const Span& span) {
  if (!IsValidSpan(span)) {
    return absl::InvalidArgumentError(
        absl::StrCat("invalid span ", SpanString(span)));
  }
  return CenterWidth{span.center(), span.length()};
}

absl::StatusOr<CenterWidth> ToCenterWidth(const Span& span, double duration) {
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    return absl::InvalidArgumentError(
        absl::StrCat("duration must be positive, got ", duration));
  }
  auto cw = ToCenterWidth(span);
  if (!cw.ok()) return cw.status();
  return CenterWidth{cw->center / duration, cw->width / duration};
}

absl::StatusOr<Span> FromCenterWidth(const CenterWidth& cw) {
  if (!(cw.width > 0.0) || !std::isfinite(cw.width) ||
      !std::isfinite(cw.center)) {
    return absl::InvalidArgumentError(
        absl::StrCat("width must be positive and finite, got ", cw.width));
  }
  const double half = 0.5 * cw.width;
  return Span{cw.center - half, cw.center + half};
}

absl::StatusOr<Span> FromCenterWidth(const CenterWidth& cw, double duration) {
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    return absl::InvalidArgumentError(
        absl::StrCat("duration must be positive, got ", duration));
  }
  return FromCenterWidth(
      CenterWidth{cw.center * duration, cw.width * duration});
}

absl::StatusOr<Span> ClampToVideo(const Span& span, double duration) {
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    return absl::InvalidArgumentError(
        absl::StrCat("duration must be positive, got ", duration));
  }
  const Span clamped{std::clamp(span.start, 0.0, duration),
                     std::clamp(span.end, 0.0, duration)};
  if (!(clamped.start < clamped.end)) {
    return absl::OutOfRangeError(absl::StrCat(
        "degenerate span: ", SpanString(span), " lies outside [0, ",
        duration, "]"));
  }
  return clamped;
}

absl::StatusOr<FeatureMatrix> FeatureMatrix::Create(size_t rows, size_t cols,
                                                    std::vector<float> data) {
  if (data.size() != rows * cols) {
    return absl::InvalidArgumentError(
        absl::StrCat("feature payload has ", data.size(), " values, shape ",
                     rows, "x", cols, " needs ", rows * cols));
  }
  for (size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      return absl::InvalidArgumentError(
          absl::StrCat("non-finite feature value at row ", i / cols,
                       ", col ", i % cols));
    }
  }
  FeatureMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.data_ = std::move(data);
  return m;
}

size_t ExpectedRowCount(double duration, double clip_len) {
  return static_cast<size_t>(std::ceil(duration / clip_len - kGridSlack));
}

size_t ClipIndex(double t, double clip_len) {
  return static_cast<size_t>(std::floor(t / clip_len + kGridSlack));
}

absl::Status ValidateVideoSample(const VideoSample& sample) {
  const auto fail = [&](const std::string& what) {
    return absl::InvalidArgumentError(
        absl::StrCat("sample ", sample.sample_id, ": ", what));
  };
  if (!(sample.duration > 0.0) || !std::isfinite(sample.duration)) {
    return fail(absl::StrCat("duration must be positive, got ",
                             sample.duration));
  }
  if (!(sample.clip_len > 0.0) || !std::isfinite(sample.clip_len)) {
    return fail(absl::StrCat("clip_len must be positive, got ",
                             sample.clip_len));
  }
  const size_t expected = ExpectedRowCount(sample.duration, sample.clip_len);
  if (sample.features.rows() != expected) {
    return fail(absl::StrCat("feature/duration mismatch: ",
                             sample.features.rows(), " rows, expected ",
                             expected));
  }
  for (float v : sample.features.data()) {
    if (!std::isfinite(v)) return fail("non-finite feature value");
  }
  for (size_t i = 0; i < sample.gt_moments.size(); ++i) {
    const Span& s = sample.gt_moments[i];
    if (!IsValidSpan(s)) return fail("invalid span " + SpanString(s));
    if (s.end > sample.duration) {
      return fail(absl::StrCat("span ", SpanString(s), " exceeds duration ",
                               sample.duration));
    }
    if (i > 0) {
      const Span& prev = sample.gt_moments[i - 1];
      if (s.start < prev.start) return fail("gt windows are not sorted");
      if (s.start < prev.end) {
        return fail(absl::StrCat("overlapping gt windows ", SpanString(prev),
                                 " and ", SpanString(s)));
      }
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<VideoSample> MakeVideoSample(VideoSample sample) {
  std::sort(sample.gt_moments.begin(), sample.gt_moments.end(),
            [](const Span& a, const Span& b) {
              return a.start != b.start ? a.start < b.start : a.end < b.end;
            });
  if (absl::Status s = ValidateVideoSample(sample); !s.ok()) return s;
  return sample;
}

}  // namespace momentkit
