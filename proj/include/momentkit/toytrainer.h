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

// A desk-scale stand-in for a DETR-style moment decoder. Each decoder query
// is reduced to a trainable (center, width, confidence) slot; slots are
// grouped into one block of n_q per length class. Training is full-batch
// gradient descent on the matched set-prediction loss, so the only thing
// that differs between runs is how slots are matched to ground truth:
//
//   lengthwise  each class block matches only gts of its own length class
//   unified     all slots match all gts one-to-one
//   groupwise   each block matches all gts (one-to-many overall)

#ifndef MOMENTKIT_TOYTRAINER_H_
#define MOMENTKIT_TOYTRAINER_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "momentkit/core.h"
#include "momentkit/lengthcls.h"
#include "momentkit/matching.h"
#include "momentkit/random.h"

namespace momentkit {

enum class MatchStrategy { kLengthwise, kUnified, kGroupwise };

absl::StatusOr<MatchStrategy> ParseMatchStrategy(std::string_view name);
std::string_view MatchStrategyName(MatchStrategy strategy);

// Normalized by video duration.
struct Slot {
  double center = 0.5;
  double width = 0.1;
  double conf_logit = 0.0;

  friend bool operator==(const Slot&, const Slot&) = default;
};

inline constexpr double kMinSlotWidth = 1e-3;
inline constexpr double kMaxLogit = 30.0;

struct QueryBank {
  LengthClassScheme scheme;
  int n_q = 0;
  // Class-major: slot i belongs to class i / n_q.
  std::vector<Slot> slots;

  int n_classes() const { return scheme.n_classes(); }
  int class_of_slot(size_t i) const { return static_cast<int>(i) / n_q; }

  friend bool operator==(const QueryBank&, const QueryBank&) = default;
};

absl::Status ValidateQueryBank(const QueryBank& bank);

// Every class gets the same slots: centers (j + 0.5) / n_q, one width.
absl::StatusOr<QueryBank> UniformQueryBank(const LengthClassScheme& scheme,
                                           int n_q, double width);

// As UniformQueryBank, with each center jittered by up to a quarter of the
// slot spacing so that blocks are not exact copies of each other.
absl::StatusOr<QueryBank> InitQueryBank(const LengthClassScheme& scheme,
                                        int n_q, double width, Rng& rng);

// Keeps center in [0, 1], width in [kMinSlotWidth, 1], logit in
// [-kMaxLogit, kMaxLogit].
void ClampBank(QueryBank& bank);

double Sigmoid(double z);

// Slot predictions denormalized against `duration`, scored by sigmoid(logit).
std::vector<Prediction> BankPredictions(const QueryBank& bank, double duration);

struct SyntheticSpec {
  int n_samples = 500;
  double duration = 60.0;
  // Gt-length range per class, seconds.
  std::vector<std::pair<double, double>> class_ranges;
  int gts_min = 1;
  int gts_max = 1;
  uint64_t seed = 0;
};

absl::Status ValidateSyntheticSpec(const SyntheticSpec& spec);
// Each range must fall inside exactly one class of `scheme`.
absl::Status CheckRangesAgainstScheme(const SyntheticSpec& spec,
                                      const LengthClassScheme& scheme);

struct SyntheticSample {
  double duration = 0.0;
  std::vector<Span> gts;      // sorted, disjoint
  std::vector<int> classes;   // range index of each gt
};

// Each sample draws k in [gts_min, gts_max] gts; each picks a range
// uniformly, a length uniformly in it and a start uniformly in the video.
// A gt overlapping one already placed is redrawn up to 100 times, after
// which the sample keeps the gts it has.
absl::StatusOr<std::vector<SyntheticSample>> GenerateSynthetic(
    const SyntheticSpec& spec);

struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 300;
  double lambda_l1 = 10.0;
  double lambda_giou = 1.0;
  double lambda_conf = 1.0;
  MatchStrategy strategy = MatchStrategy::kLengthwise;
  CostParams cost;
  uint64_t seed = 0;
};

absl::Status ValidateTrainConfig(const TrainConfig& config);

// d(loss) with respect to (center, log width, logit).
struct SlotGradient {
  double d_center = 0.0;
  double d_log_width = 0.0;
  double d_logit = 0.0;
};

struct LossAndGrad {
  double loss = 0.0;
  std::vector<SlotGradient> grads;
  // (slot, gt) pairs the loss was computed against.
  std::vector<std::pair<int, int>> matches;
};

// Runs `strategy` on the bank's current predictions for `sample`.
absl::StatusOr<std::vector<std::pair<int, int>>> MatchBank(
    const QueryBank& bank, const SyntheticSample& sample,
    MatchStrategy strategy, const CostParams& params);

// Loss and analytic gradient for a fixed matching:
//   sum over matches  lambda_l1 * L1(cw) + lambda_giou * (1 - gIoU)
// + lambda_conf * sum over slots  BCE(sigmoid(logit), matched)
LossAndGrad MatchedLoss(const QueryBank& bank, const SyntheticSample& sample,
                        std::span<const std::pair<int, int>> matches,
                        const TrainConfig& config);

absl::StatusOr<LossAndGrad> MatchedLossAndGrad(const QueryBank& bank,
                                               const SyntheticSample& sample,
                                               MatchStrategy strategy,
                                               const CostParams& params,
                                               const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;
  // Mean training loss at the parameters the epoch's step was taken from.
  double loss = 0.0;
  // loss - previous epoch's loss (0 for the first epoch).
  double loss_delta = 0.0;
  // Held-out R1@0.5 per length bucket, after the step. Missing buckets had
  // no qualifying query.
  std::map<std::string, double> heldout_r1;
};

struct TrainResult {
  QueryBank bank;
  std::vector<EpochRecord> history;
  size_t n_train = 0;
  size_t n_heldout = 0;
};

// Samples [0, 80%) train, the rest are held out.
size_t TrainSplit(size_t n_samples);

// Full-batch gradient descent on the mean per-sample matched loss. Fails
// with the epoch index if the loss stops being finite.
absl::StatusOr<TrainResult> Train(const QueryBank& initial,
                                  std::span<const SyntheticSample> dataset,
                                  const TrainConfig& config);

struct ClassSpecialization {
  int class_index = 0;
  double lower = 0.0;  // exclusive, seconds
  double upper = 0.0;  // inclusive, seconds
  double mean_width = 0.0;  // seconds
  double inside_fraction = 0.0;
};

// Per class: mean slot width in seconds and the fraction of its slots whose
// width lies inside the class's length range.
std::vector<ClassSpecialization> SpecializationReport(const QueryBank& bank,
                                                      double duration);

}  // namespace momentkit

#endif  // MOMENTKIT_TOYTRAINER_H_
