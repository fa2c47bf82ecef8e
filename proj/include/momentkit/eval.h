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

// Moment retrieval metrics: Recall@1 at IoU thresholds, mAP over an IoU
// sweep, per-length-bucket breakdowns, and two diagnostics of top-1
// predictions (whether the predicted center falls inside the ground truth,
// and a predicted-length vs ground-truth-length confusion matrix).

#ifndef MOMENTKIT_EVAL_H_
#define MOMENTKIT_EVAL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "momentkit/core.h"

namespace momentkit {

struct ScoredSpan {
  Span span;
  double score = 0.0;
};

struct QueryPredictions {
  int64_t qid = 0;
  std::vector<ScoredSpan> windows;
};

struct QueryGroundTruth {
  int64_t qid = 0;
  double duration = 0.0;
  std::vector<Span> windows;
};

// One query with everything the metrics need.
struct EvalQuery {
  int64_t qid = 0;
  std::vector<ScoredSpan> preds;
  std::vector<Span> gts;
};

// Pairs predictions with ground truth by qid, in ground-truth order. Queries
// without predictions are kept (and count as misses); predictions without a
// ground-truth entry are dropped. Both cases are reported in `diagnostics`.
std::vector<EvalQuery> JoinByQid(std::span<const QueryPredictions> preds,
                                 std::span<const QueryGroundTruth> gts,
                                 std::vector<std::string>* diagnostics);

// A moment-length range. `lo` is inclusive, `hi` inclusive iff
// hi_inclusive.
struct LengthBucket {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  bool hi_inclusive = false;

  bool Contains(double length) const {
    return length >= lo && (hi_inclusive ? length <= hi : length < hi);
  }
};

// short [0, 10), middle [10, 30], long (30, inf).
std::vector<LengthBucket> DefaultLengthBuckets();

// 0.5, 0.55, ..., 0.95.
std::vector<double> DefaultIouThresholds();

struct EvalConfig {
  std::vector<double> iou_thresholds = DefaultIouThresholds();
  std::vector<double> r1_thresholds = {0.5, 0.7};
  std::vector<LengthBucket> buckets = DefaultLengthBuckets();
  double confusion_bin_width = 10.0;
};

absl::Status ValidateEvalConfig(const EvalConfig& config);

// Highest score first; ties by earlier start, then earlier end.
std::vector<ScoredSpan> SortByScore(std::span<const ScoredSpan> preds);
std::optional<ScoredSpan> Top1(std::span<const ScoredSpan> preds);

// Fraction of queries whose top-1 prediction reaches IoU >= tau with one of
// the query's gt windows. Queries without gt windows are skipped; queries
// without predictions count as misses.
double RecallAt1(std::span<const EvalQuery> queries, double tau);

// AP of one query at IoU threshold tau: predictions in score order are
// greedily matched to the unmatched gt with the highest IoU >= tau, and the
// interpolated precision/recall staircase is integrated.
double AveragePrecision(std::span<const ScoredSpan> preds,
                        std::span<const Span> gts, double tau);

// Mean AP over queries that have at least one gt window.
double MeanAveragePrecision(std::span<const EvalQuery> queries, double tau);

struct ThresholdSweep {
  std::vector<std::pair<double, double>> at;  // (threshold, value)
  double average = 0.0;
  size_t n_queries = 0;
};

struct MetricSummary {
  ThresholdSweep r1;   // at r1_thresholds; average over iou_thresholds
  ThresholdSweep map;  // at iou_thresholds
};

// Metrics over every query with at least one gt window.
MetricSummary Evaluate(std::span<const EvalQuery> queries,
                       const EvalConfig& config);

struct BucketMetrics {
  LengthBucket bucket;
  // Absent when no query qualifies for the bucket.
  std::optional<ThresholdSweep> r1;
  std::optional<ThresholdSweep> map;
};

// R1 counts a query only if all its gt windows fall in the bucket; mAP keeps
// every query with at least one in-bucket window and drops the other windows.
// Predictions are never filtered.
std::vector<BucketMetrics> PerLengthBreakdown(std::span<const EvalQuery> queries,
                                              const EvalConfig& config);

// The gt window a prediction is attributed to: highest IoU, ties (including
// the all-disjoint case) by nearest center, then lowest index.
size_t AttributeToGt(const Span& pred, std::span<const Span> gts);

struct CenterRate {
  LengthBucket bucket;
  size_t total = 0;
  size_t inside = 0;
  std::optional<double> rate;
};

// Per gt-length bucket: fraction of top-1 predictions whose center lies in
// the gt window they are attributed to (endpoints inclusive).
std::vector<CenterRate> CenterInGtRate(std::span<const EvalQuery> queries,
                                       std::span<const LengthBucket> buckets);

struct ConfusionMatrix {
  double bin_width = 0.0;
  // counts[gt_bin][pred_bin], bin b covering [b * w, (b + 1) * w).
  std::vector<std::vector<size_t>> counts;
  // Each row as percentages of the row total (zero rows stay zero).
  std::vector<std::vector<double>> row_percent;
};

// Length confusion of top-1 predictions against their attributed gt window.
// The matrix is square and just large enough for every observed length.
absl::StatusOr<ConfusionMatrix> LengthConfusion(
    std::span<const EvalQuery> queries, double bin_width);

}  // namespace momentkit

#endif  // MOMENTKIT_EVAL_H_
