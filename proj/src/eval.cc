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

#include "momentkit/eval.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "absl/strings/str_cat.h"
#include "momentkit/interval.h"

namespace momentkit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double MaxIou(const Span& pred, std::span<const Span> gts) {
  double best = 0.0;
  for (const Span& g : gts) best = std::max(best, Iou1d(pred, g));
  return best;
}

// Precision/recall points of the greedy score-ordered matching.
void GreedyPrecisionRecall(std::span<const ScoredSpan> preds,
                           std::span<const Span> gts, double tau,
                           std::vector<double>& precision,
                           std::vector<double>& recall) {
  const std::vector<ScoredSpan> sorted = SortByScore(preds);
  std::vector<bool> taken(gts.size(), false);
  size_t tp = 0;
  for (size_t i = 0; i < sorted.size(); ++i) {
    int best = -1;
    double best_iou = -1.0;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double iou = Iou1d(sorted[i].span, gts[g]);
      if (iou >= tau && iou > best_iou) {
        best_iou = iou;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      taken[best] = true;
      ++tp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(gts.size()));
  }
}

ThresholdSweep SweepMap(std::span<const EvalQuery> queries,
                        std::span<const double> thresholds) {
  ThresholdSweep sweep;
  for (const EvalQuery& q : queries) sweep.n_queries += q.gts.empty() ? 0 : 1;
  double sum = 0.0;
  for (double tau : thresholds) {
    const double v = MeanAveragePrecision(queries, tau);
    sweep.at.push_back({tau, v});
    sum += v;
  }
  sweep.average = thresholds.empty() ? 0.0 : sum / thresholds.size();
  return sweep;
}

ThresholdSweep SweepR1(std::span<const EvalQuery> queries,
                       const EvalConfig& config) {
  ThresholdSweep sweep;
  for (const EvalQuery& q : queries) sweep.n_queries += q.gts.empty() ? 0 : 1;
  for (double tau : config.r1_thresholds) {
    sweep.at.push_back({tau, RecallAt1(queries, tau)});
  }
  double sum = 0.0;
  for (double tau : config.iou_thresholds) sum += RecallAt1(queries, tau);
  sweep.average = config.iou_thresholds.empty()
                      ? 0.0
                      : sum / config.iou_thresholds.size();
  return sweep;
}

absl::Status CheckThresholds(const std::vector<double>& t, const char* what) {
  for (size_t i = 0; i < t.size(); ++i) {
    if (!(t[i] > 0.0 && t[i] <= 1.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat(what, " must lie in (0, 1], got ", t[i]));
    }
    if (i > 0 && t[i] <= t[i - 1]) {
      return absl::InvalidArgumentError(
          absl::StrCat(what, " must strictly increase"));
    }
  }
  return absl::OkStatus();
}

}  // namespace

std::vector<EvalQuery> JoinByQid(std::span<const QueryPredictions> preds,
                                 std::span<const QueryGroundTruth> gts,
                                 std::vector<std::string>* diagnostics) {
  std::map<int64_t, const QueryPredictions*> by_qid;
  for (const QueryPredictions& p : preds) by_qid[p.qid] = &p;
  std::vector<EvalQuery> out;
  out.reserve(gts.size());
  for (const QueryGroundTruth& g : gts) {
    EvalQuery q{g.qid, {}, g.windows};
    if (auto it = by_qid.find(g.qid); it != by_qid.end()) {
      q.preds = it->second->windows;
      by_qid.erase(it);
    } else if (diagnostics != nullptr) {
      diagnostics->push_back(
          absl::StrCat("qid ", g.qid, ": no predictions, counted as a miss"));
    }
    if (g.windows.empty() && diagnostics != nullptr) {
      diagnostics->push_back(
          absl::StrCat("qid ", g.qid, ": no gt windows, skipped"));
    }
    out.push_back(std::move(q));
  }
  if (diagnostics != nullptr) {
    for (const auto& [qid, p] : by_qid) {
      diagnostics->push_back(
          absl::StrCat("qid ", qid, ": predictions without ground truth"));
    }
  }
  return out;
}

std::vector<LengthBucket> DefaultLengthBuckets() {
  return {{"short", 0.0, 10.0, false},
          {"middle", 10.0, 30.0, true},
          {"long", 30.0, kInf, false}};
}

std::vector<double> DefaultIouThresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50.0 + 5.0 * i) / 100.0);
  return t;
}

absl::Status ValidateEvalConfig(const EvalConfig& config) {
  if (absl::Status s = CheckThresholds(config.iou_thresholds, "iou_thresholds");
      !s.ok()) {
    return s;
  }
  if (absl::Status s = CheckThresholds(config.r1_thresholds, "r1_thresholds");
      !s.ok()) {
    return s;
  }
  if (!(config.confusion_bin_width > 0.0)) {
    return absl::InvalidArgumentError("confusion_bin_width must be positive");
  }
  return absl::OkStatus();
}

std::vector<ScoredSpan> SortByScore(std::span<const ScoredSpan> preds) {
  std::vector<ScoredSpan> sorted(preds.begin(), preds.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredSpan& a, const ScoredSpan& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.span.start != b.span.start) {
                       return a.span.start < b.span.start;
                     }
                     return a.span.end < b.span.end;
                   });
  return sorted;
}

std::optional<ScoredSpan> Top1(std::span<const ScoredSpan> preds) {
  if (preds.empty()) return std::nullopt;
  return SortByScore(preds).front();
}

double RecallAt1(std::span<const EvalQuery> queries, double tau) {
  size_t n = 0;
  size_t hits = 0;
  for (const EvalQuery& q : queries) {
    if (q.gts.empty()) continue;
    ++n;
    const auto top = Top1(q.preds);
    if (top.has_value() && MaxIou(top->span, q.gts) >= tau) ++hits;
  }
  return n == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(n);
}

double AveragePrecision(std::span<const ScoredSpan> preds,
                        std::span<const Span> gts, double tau) {
  if (gts.empty()) return 0.0;
  std::vector<double> precision{0.0};
  std::vector<double> recall{0.0};
  GreedyPrecisionRecall(preds, gts, tau, precision, recall);
  precision.push_back(0.0);
  recall.push_back(1.0);
  for (size_t i = precision.size() - 1; i-- > 0;) {
    precision[i] = std::max(precision[i], precision[i + 1]);
  }
  double ap = 0.0;
  for (size_t i = 1; i < recall.size(); ++i) {
    if (recall[i] != recall[i - 1]) {
      ap += (recall[i] - recall[i - 1]) * precision[i];
    }
  }
  return ap;
}

double MeanAveragePrecision(std::span<const EvalQuery> queries, double tau) {
  size_t n = 0;
  double sum = 0.0;
  for (const EvalQuery& q : queries) {
    if (q.gts.empty()) continue;
    ++n;
    sum += AveragePrecision(q.preds, q.gts, tau);
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

MetricSummary Evaluate(std::span<const EvalQuery> queries,
                       const EvalConfig& config) {
  return {SweepR1(queries, config), SweepMap(queries, config.iou_thresholds)};
}

std::vector<BucketMetrics> PerLengthBreakdown(std::span<const EvalQuery> queries,
                                              const EvalConfig& config) {
  std::vector<BucketMetrics> out;
  for (const LengthBucket& bucket : config.buckets) {
    std::vector<EvalQuery> r1_set;
    std::vector<EvalQuery> map_set;
    for (const EvalQuery& q : queries) {
      if (q.gts.empty()) continue;
      std::vector<Span> inside;
      for (const Span& g : q.gts) {
        if (bucket.Contains(g.length())) inside.push_back(g);
      }
      if (inside.empty()) continue;
      if (inside.size() == q.gts.size()) r1_set.push_back(q);
      map_set.push_back({q.qid, q.preds, std::move(inside)});
    }
    BucketMetrics m{bucket, std::nullopt, std::nullopt};
    if (!r1_set.empty()) m.r1 = SweepR1(r1_set, config);
    if (!map_set.empty()) m.map = SweepMap(map_set, config.iou_thresholds);
    out.push_back(std::move(m));
  }
  return out;
}

size_t AttributeToGt(const Span& pred, std::span<const Span> gts) {
  size_t best = 0;
  for (size_t g = 1; g < gts.size(); ++g) {
    const double iou = Iou1d(pred, gts[g]);
    const double best_iou = Iou1d(pred, gts[best]);
    if (iou > best_iou ||
        (iou == best_iou && std::abs(gts[g].center() - pred.center()) <
                                std::abs(gts[best].center() - pred.center()))) {
      best = g;
    }
  }
  return best;
}

std::vector<CenterRate> CenterInGtRate(std::span<const EvalQuery> queries,
                                       std::span<const LengthBucket> buckets) {
  std::vector<CenterRate> out;
  for (const LengthBucket& b : buckets) out.push_back({b, 0, 0, std::nullopt});
  for (const EvalQuery& q : queries) {
    const auto top = Top1(q.preds);
    if (q.gts.empty() || !top.has_value()) continue;
    const Span& gt = q.gts[AttributeToGt(top->span, q.gts)];
    const double c = top->span.center();
    for (CenterRate& r : out) {
      if (!r.bucket.Contains(gt.length())) continue;
      ++r.total;
      if (c >= gt.start && c <= gt.end) ++r.inside;
      break;
    }
  }
  for (CenterRate& r : out) {
    if (r.total > 0) {
      r.rate = static_cast<double>(r.inside) / static_cast<double>(r.total);
    }
  }
  return out;
}

absl::StatusOr<ConfusionMatrix> LengthConfusion(
    std::span<const EvalQuery> queries, double bin_width) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    return absl::InvalidArgumentError(
        absl::StrCat("bin width must be positive, got ", bin_width));
  }
  std::vector<std::pair<size_t, size_t>> cells;
  size_t n_bins = 0;
  for (const EvalQuery& q : queries) {
    const auto top = Top1(q.preds);
    if (q.gts.empty() || !top.has_value()) continue;
    const Span& gt = q.gts[AttributeToGt(top->span, q.gts)];
    const auto gt_bin = static_cast<size_t>(std::floor(gt.length() / bin_width));
    const auto pred_bin = static_cast<size_t>(
        std::floor(std::max(0.0, top->span.length()) / bin_width));
    cells.push_back({gt_bin, pred_bin});
    n_bins = std::max({n_bins, gt_bin + 1, pred_bin + 1});
  }
  ConfusionMatrix m;
  m.bin_width = bin_width;
  m.counts.assign(n_bins, std::vector<size_t>(n_bins, 0));
  for (const auto& [g, p] : cells) ++m.counts[g][p];
  m.row_percent.assign(n_bins, std::vector<double>(n_bins, 0.0));
  for (size_t g = 0; g < n_bins; ++g) {
    size_t total = 0;
    for (size_t c : m.counts[g]) total += c;
    if (total == 0) continue;
    for (size_t p = 0; p < n_bins; ++p) {
      m.row_percent[g][p] = 100.0 * static_cast<double>(m.counts[g][p]) /
                            static_cast<double>(total);
    }
  }
  return m;
}

}  // namespace momentkit
