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

#include "momentkit/matching.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "absl/strings/str_cat.h"
#include "momentkit/interval.h"

namespace momentkit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Potentials-based shortest augmenting path on a square matrix. Returns the
// row matched to every column and leaves feasible duals in `u` / `v`
// (cost(i, j) - u[i] - v[j] >= 0, with equality on matched edges).
std::vector<int> SolveSquare(const std::vector<double>& a, size_t n,
                             std::vector<double>& u, std::vector<double>& v) {
  // 1-based; column 0 is the virtual source.
  u.assign(n + 1, 0.0);
  v.assign(n + 1, 0.0);
  std::vector<size_t> p(n + 1, 0);
  std::vector<size_t> way(n + 1, 0);
  for (size_t i = 1; i <= n; ++i) {
    p[0] = i;
    size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const size_t i0 = p[j0];
      double delta = kInf;
      size_t j1 = 0;
      for (size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_of_col(n);
  for (size_t j = 1; j <= n; ++j) row_of_col[j - 1] = static_cast<int>(p[j] - 1);
  return row_of_col;
}

// Lexicographically smallest perfect matching of the tight-edge graph, by
// fixing rows in order and repairing the current matching with alternating
// paths.
class LexMinMatcher {
 public:
  LexMinMatcher(std::vector<std::vector<int>> tight, std::vector<int> row_match)
      : tight_(std::move(tight)),
        row_match_(std::move(row_match)),
        col_match_(row_match_.size()),
        fixed_col_(row_match_.size(), false) {
    for (size_t r = 0; r < row_match_.size(); ++r) {
      col_match_[row_match_[r]] = static_cast<int>(r);
    }
  }

  std::vector<int> Run() {
    const int n = static_cast<int>(row_match_.size());
    for (int i = 0; i < n; ++i) {
      for (int j : tight_[i]) {
        if (fixed_col_[j]) continue;
        if (row_match_[i] == j || TryForce(i, j)) break;
      }
      fixed_col_[row_match_[i]] = true;
    }
    return row_match_;
  }

 private:
  // Rewires the matching so that row i takes column j, if a perfect matching
  // using only unfixed rows > i allows it.
  bool TryForce(int i, int j) {
    const int displaced_row = col_match_[j];
    const int freed_col = row_match_[i];
    visited_.assign(row_match_.size(), false);
    visited_[j] = true;
    path_.clear();
    if (!Augment(displaced_row, freed_col)) return false;
    // Apply the alternating path: each (row, col) on it becomes matched.
    for (const auto& [r, c] : path_) {
      row_match_[r] = c;
      col_match_[c] = r;
    }
    row_match_[i] = j;
    col_match_[j] = i;
    return true;
  }

  bool Augment(int row, int target_col) {
    for (int c : tight_[row]) {
      if (fixed_col_[c] || visited_[c]) continue;
      visited_[c] = true;
      if (c == target_col || Augment(col_match_[c], target_col)) {
        path_.push_back({row, c});
        return true;
      }
    }
    return false;
  }

  std::vector<std::vector<int>> tight_;
  std::vector<int> row_match_;
  std::vector<int> col_match_;
  std::vector<bool> fixed_col_;
  std::vector<bool> visited_;
  std::vector<std::pair<int, int>> path_;
};

absl::Status CheckSpans(std::span<const Span> spans, const char* what) {
  for (size_t i = 0; i < spans.size(); ++i) {
    if (!IsValidSpan(spans[i])) {
      return absl::InvalidArgumentError(absl::StrCat(
          what, " ", i, " is not a valid span [", spans[i].start, ", ",
          spans[i].end, "]"));
    }
  }
  return absl::OkStatus();
}

Span Normalize(const Span& s, double duration) {
  return {s.start / duration, s.end / duration};
}

// Matches `pred_idx` against `gt_idx` (padded with zero-cost background
// columns up to the prediction count) and maps the result back to global
// indices.
absl::StatusOr<Assignment> MatchBlock(std::span<const Prediction> preds,
                                      std::span<const Span> gts,
                                      const std::vector<int>& pred_idx,
                                      const std::vector<int>& gt_idx,
                                      double duration,
                                      const CostParams& params) {
  const size_t n = pred_idx.size();
  if (gt_idx.size() > n) {
    return absl::ResourceExhaustedError(absl::StrCat(
        gt_idx.size(), " ground-truth moments exceed the ", n,
        " available query slots"));
  }
  CostMatrix cost(n, n, 0.0);
  for (size_t r = 0; r < n; ++r) {
    const Prediction& p = preds[pred_idx[r]];
    const Span pn = Normalize(p.span, duration);
    for (size_t c = 0; c < gt_idx.size(); ++c) {
      cost.at(r, c) =
          MatchCost(Normalize(gts[gt_idx[c]], duration), pn, p.score, params);
    }
  }
  auto solved = Hungarian(cost);
  if (!solved.ok()) return solved.status();
  Assignment out;
  for (const auto& [r, c] : solved->pairs) {
    if (static_cast<size_t>(c) < gt_idx.size()) {
      out.pairs.push_back({pred_idx[r], gt_idx[c]});
    }
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

absl::Status CheckCommon(std::span<const Prediction> preds,
                         std::span<const Span> gts, double duration,
                         const CostParams& params) {
  if (absl::Status s = ValidateCostParams(params); !s.ok()) return s;
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    return absl::InvalidArgumentError(
        absl::StrCat("duration must be positive, got ", duration));
  }
  if (absl::Status s = CheckSpans(gts, "gt"); !s.ok()) return s;
  for (size_t i = 0; i < preds.size(); ++i) {
    if (!(preds[i].span.length() > 0.0) || !std::isfinite(preds[i].span.start) ||
        !std::isfinite(preds[i].span.end)) {
      return absl::InvalidArgumentError(
          absl::StrCat("prediction ", i, " has a degenerate span"));
    }
    if (!(preds[i].score >= 0.0 && preds[i].score <= 1.0)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "prediction ", i, " score must be in [0, 1], got ", preds[i].score));
    }
  }
  return absl::OkStatus();
}

}  // namespace

absl::Status ValidateCostParams(const CostParams& params) {
  for (double w : {params.w_l1, params.w_giou, params.w_conf}) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      return absl::InvalidArgumentError(
          absl::StrCat("cost weights must be finite and >= 0, got ", w));
    }
  }
  if (params.w_l1 == 0.0 && params.w_giou == 0.0 && params.w_conf == 0.0) {
    return absl::InvalidArgumentError("cost weights are all zero");
  }
  return absl::OkStatus();
}

double MatchCost(const Span& gt, const Span& pred, double score,
                 const CostParams& params) {
  const double l1 = std::abs(gt.center() - pred.center()) +
                    std::abs(gt.length() - pred.length());
  return params.w_l1 * l1 - params.w_giou * Giou1d(gt, pred) -
         params.w_conf * score;
}

absl::StatusOr<HungarianResult> Hungarian(const CostMatrix& cost) {
  const size_t rows = cost.rows();
  const size_t cols = cost.cols();
  double max_abs = 0.0;
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < cols; ++c) {
      if (!std::isfinite(cost.at(r, c))) {
        return absl::InvalidArgumentError(
            absl::StrCat("non-finite cost at (", r, ", ", c, ")"));
      }
      max_abs = std::max(max_abs, std::abs(cost.at(r, c)));
    }
  }
  HungarianResult result;
  const size_t n = std::max(rows, cols);
  if (rows == 0 || cols == 0) return result;

  std::vector<double> a(n * n, 0.0);
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < cols; ++c) a[r * n + c] = cost.at(r, c);
  }
  std::vector<double> u;
  std::vector<double> v;
  const std::vector<int> row_of_col = SolveSquare(a, n, u, v);

  // Every optimal assignment uses only edges that are tight under the
  // optimal duals, so the tie-break is a search over the tight graph.
  const double tol = 1e-9 * (1.0 + max_abs);
  std::vector<std::vector<int>> tight(n);
  for (size_t r = 0; r < n; ++r) {
    for (size_t c = 0; c < n; ++c) {
      if (a[r * n + c] - u[r + 1] - v[c + 1] <= tol) {
        tight[r].push_back(static_cast<int>(c));
      }
    }
  }
  std::vector<int> row_match(n);
  for (size_t c = 0; c < n; ++c) row_match[row_of_col[c]] = static_cast<int>(c);
  row_match = LexMinMatcher(std::move(tight), std::move(row_match)).Run();

  for (size_t r = 0; r < rows; ++r) {
    const int c = row_match[r];
    if (static_cast<size_t>(c) < cols) {
      result.pairs.push_back({static_cast<int>(r), c});
      result.total_cost += cost.at(r, c);
    }
  }
  return result;
}

absl::StatusOr<std::vector<Assignment>> LengthwiseMatch(
    std::span<const Prediction> preds, std::span<const Span> gts,
    double duration, const LengthClassScheme& scheme, int n_q,
    const CostParams& params) {
  if (absl::Status s = CheckCommon(preds, gts, duration, params); !s.ok()) {
    return s;
  }
  const int n_classes = scheme.n_classes();
  if (n_q < 1) {
    return absl::InvalidArgumentError(absl::StrCat("n_q must be >= 1, got ", n_q));
  }
  if (preds.size() != static_cast<size_t>(n_classes * n_q)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "expected ", n_classes, " x ", n_q, " predictions, got ", preds.size()));
  }
  std::vector<std::vector<int>> pred_idx(n_classes);
  for (size_t i = 0; i < preds.size(); ++i) {
    const auto& slot = preds[i].class_slot;
    if (!slot.has_value() || *slot < 0 || *slot >= n_classes) {
      return absl::InvalidArgumentError(
          absl::StrCat("prediction ", i, " has no valid class slot"));
    }
    pred_idx[*slot].push_back(static_cast<int>(i));
  }
  for (int k = 0; k < n_classes; ++k) {
    if (pred_idx[k].size() != static_cast<size_t>(n_q)) {
      return absl::InvalidArgumentError(
          absl::StrCat("class ", k, " has ", pred_idx[k].size(),
                       " predictions, expected ", n_q));
    }
  }
  std::vector<std::vector<int>> gt_idx(n_classes);
  for (size_t g = 0; g < gts.size(); ++g) {
    gt_idx[ClassOf(gts[g].length(), scheme)].push_back(static_cast<int>(g));
  }

  std::vector<Assignment> out;
  out.reserve(n_classes);
  for (int k = 0; k < n_classes; ++k) {
    auto a = MatchBlock(preds, gts, pred_idx[k], gt_idx[k], duration, params);
    if (!a.ok()) {
      return absl::Status(a.status().code(),
                          absl::StrCat("length class ", k, ": ",
                                       a.status().message()));
    }
    out.push_back(*std::move(a));
  }
  return out;
}

absl::StatusOr<Assignment> UnifiedMatch(std::span<const Prediction> preds,
                                        std::span<const Span> gts,
                                        double duration,
                                        const CostParams& params) {
  if (absl::Status s = CheckCommon(preds, gts, duration, params); !s.ok()) {
    return s;
  }
  std::vector<int> pred_idx(preds.size());
  for (size_t i = 0; i < preds.size(); ++i) pred_idx[i] = static_cast<int>(i);
  std::vector<int> gt_idx(gts.size());
  for (size_t g = 0; g < gts.size(); ++g) gt_idx[g] = static_cast<int>(g);
  return MatchBlock(preds, gts, pred_idx, gt_idx, duration, params);
}

absl::StatusOr<std::vector<Assignment>> GroupwiseMatch(
    std::span<const Prediction> preds, int n_groups, std::span<const Span> gts,
    double duration, const CostParams& params) {
  if (absl::Status s = CheckCommon(preds, gts, duration, params); !s.ok()) {
    return s;
  }
  if (n_groups < 1 || preds.size() % static_cast<size_t>(n_groups) != 0) {
    return absl::InvalidArgumentError(absl::StrCat(
        preds.size(), " predictions cannot form ", n_groups, " equal groups"));
  }
  const size_t size = preds.size() / static_cast<size_t>(n_groups);
  std::vector<int> gt_idx(gts.size());
  for (size_t g = 0; g < gts.size(); ++g) gt_idx[g] = static_cast<int>(g);

  std::vector<Assignment> out;
  for (int group = 0; group < n_groups; ++group) {
    std::vector<int> pred_idx(size);
    for (size_t i = 0; i < size; ++i) {
      pred_idx[i] = static_cast<int>(group * size + i);
    }
    auto a = MatchBlock(preds, gts, pred_idx, gt_idx, duration, params);
    if (!a.ok()) {
      return absl::Status(a.status().code(),
                          absl::StrCat("group ", group, ": ",
                                       a.status().message()));
    }
    out.push_back(*std::move(a));
  }
  return out;
}

}  // namespace momentkit
