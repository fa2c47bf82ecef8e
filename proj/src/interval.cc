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

#include "momentkit/interval.h"

#include <algorithm>

namespace momentkit {

double IntersectionLength(const Span& a, const Span& b) {
  return std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
}

double HullLength(const Span& a, const Span& b) {
  return std::max(a.end, b.end) - std::min(a.start, b.start);
}

double Iou1d(const Span& a, const Span& b) {
  const double inter = IntersectionLength(a, b);
  const double uni = a.length() + b.length() - inter;
  return inter / uni;
}

double Giou1d(const Span& a, const Span& b) {
  const double inter = IntersectionLength(a, b);
  const double uni = a.length() + b.length() - inter;
  const double hull = HullLength(a, b);
  return inter / uni - (hull - uni) / hull;
}

GiouGradient GiouGrad(const CenterWidth& a, const Span& b) {
  const double s = a.center - 0.5 * a.width;
  const double e = a.center + 0.5 * a.width;
  if (s == b.start || s == b.end || e == b.start || e == b.end) return {};

  const double inter_lo = std::max(s, b.start);
  const double inter_hi = std::min(e, b.end);
  const bool overlapping = inter_hi > inter_lo;
  const double inter = overlapping ? inter_hi - inter_lo : 0.0;
  const double uni = (e - s) + b.length() - inter;
  const double hull = std::max(e, b.end) - std::min(s, b.start);

  // Partial derivatives with respect to a's start (s) and end (e).
  const double d_inter_ds = (overlapping && s > b.start) ? -1.0 : 0.0;
  const double d_inter_de = (overlapping && e < b.end) ? 1.0 : 0.0;
  const double d_uni_ds = -1.0 - d_inter_ds;
  const double d_uni_de = 1.0 - d_inter_de;
  const double d_hull_ds = s < b.start ? -1.0 : 0.0;
  const double d_hull_de = e > b.end ? 1.0 : 0.0;

  // giou = inter/uni - 1 + uni/hull
  const auto d_giou = [&](double d_inter, double d_uni, double d_hull) {
    return (d_inter * uni - inter * d_uni) / (uni * uni) +
           (d_uni * hull - uni * d_hull) / (hull * hull);
  };
  const double g_s = d_giou(d_inter_ds, d_uni_ds, d_hull_ds);
  const double g_e = d_giou(d_inter_de, d_uni_de, d_hull_de);

  // s = c - w/2, e = c + w/2.
  return {g_s + g_e, 0.5 * (g_e - g_s)};
}

}  // namespace momentkit
