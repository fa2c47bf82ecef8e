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

#ifndef MOMENTKIT_MATCHING_H_
#define MOMENTKIT_MATCHING_H_

#include <span>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "momentkit/core.h"
#include "momentkit/lengthcls.h"

namespace momentkit {

// Weights of the set-prediction matching cost.
struct CostParams {
  double w_l1 = 10.0;
  double w_giou = 1.0;
  double w_conf = 4.0;
};

absl::Status ValidateCostParams(const CostParams& params);

// w_l1 * |cw(gt) - cw(pred)|_1 - w_giou * gIoU(gt, pred) - w_conf * score.
// Both spans normalized by the video duration.
double MatchCost(const Span& gt, const Span& pred, double score,
                 const CostParams& params);

// Dense row-major cost matrix.
class CostMatrix {
 public:
  CostMatrix(size_t rows, size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  double& at(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double at(size_t r, size_t c) const { return data_[r * cols_ + c]; }

 private:
  size_t rows_;
  size_t cols_;
  std::vector<double> data_;
};

struct HungarianResult {
  // (row, col) pairs sorted by row; min(rows, cols) of them.
  std::vector<std::pair<int, int>> pairs;
  double total_cost = 0.0;
};

// Exact minimum-cost assignment (shortest augmenting paths with potentials,
// O(n^3)). Among all optimal assignments the one whose row-ordered column
// sequence is lexicographically smallest is returned, an unassigned row
// counting as a column past the end.
absl::StatusOr<HungarianResult> Hungarian(const CostMatrix& cost);

// (prediction index, gt index) pairs. Predictions not listed are matched to
// the background.
struct Assignment {
  std::vector<std::pair<int, int>> pairs;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

// Predictions and gts in seconds; costs are computed on spans normalized by
// `duration`.
//
// Length-wise one-to-one matching: predictions are split into classes by
// class_slot (exactly n_q each), gts by ClassOf(length), and each class is
// solved independently with its gts padded by zero-cost background columns
// up to n_q. Entry k of the result is class k's assignment.
absl::StatusOr<std::vector<Assignment>> LengthwiseMatch(
    std::span<const Prediction> preds, std::span<const Span> gts,
    double duration, const LengthClassScheme& scheme, int n_q,
    const CostParams& params);

// Plain one-to-one matching of all predictions against all gts, gts padded
// with background columns up to the prediction count.
absl::StatusOr<Assignment> UnifiedMatch(std::span<const Prediction> preds,
                                        std::span<const Span> gts,
                                        double duration,
                                        const CostParams& params);

// One-to-many baseline: predictions form `n_groups` contiguous equal-sized
// groups and every group is matched against the full gt set.
absl::StatusOr<std::vector<Assignment>> GroupwiseMatch(
    std::span<const Prediction> preds, int n_groups, std::span<const Span> gts,
    double duration, const CostParams& params);

}  // namespace momentkit

#endif  // MOMENTKIT_MATCHING_H_
