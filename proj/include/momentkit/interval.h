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

#ifndef MOMENTKIT_INTERVAL_H_
#define MOMENTKIT_INTERVAL_H_

#include "momentkit/core.h"

namespace momentkit {

// 1-D interval geometry. Inputs are assumed to have positive length; callers
// reject degenerate spans before reaching these kernels.

double IntersectionLength(const Span& a, const Span& b);

// Length of the smallest interval enclosing both spans.
double HullLength(const Span& a, const Span& b);

// |a n b| / |a u b|, zero for disjoint spans.
double Iou1d(const Span& a, const Span& b);

// IoU minus the fraction of the enclosing hull not covered by the union.
// Range (-1, 1].
double Giou1d(const Span& a, const Span& b);

struct GiouGradient {
  double d_center = 0.0;
  double d_width = 0.0;
};

// Analytic derivative of Giou1d(span(a), b) with respect to a's center and
// width, b held fixed. Where any endpoint of `a` coincides with an endpoint
// of `b` the function is not differentiable and the zero subgradient is
// returned.
GiouGradient GiouGrad(const CenterWidth& a, const Span& b);

}  // namespace momentkit

#endif  // MOMENTKIT_INTERVAL_H_
