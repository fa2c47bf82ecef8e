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

#include "momentkit/toytrainer.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"
#include "momentkit/eval.h"
#include "momentkit/interval.h"

namespace momentkit {
namespace {

constexpr int kPlacementTries = 100;

double SignOf(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// log(1 + e^z) without overflow.
double Softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

Span SlotSpan(const Slot& s) {
  return {s.center - 0.5 * s.width, s.center + 0.5 * s.width};
}

std::vector<std::pair<int, int>> Flatten(const std::vector<Assignment>& per) {
  std::vector<std::pair<int, int>> out;
  for (const Assignment& a : per) {
    out.insert(out.end(), a.pairs.begin(), a.pairs.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::map<std::string, double> HeldoutR1(const QueryBank& bank,
                                        std::span<const SyntheticSample> held) {
  std::vector<EvalQuery> queries;
  queries.reserve(held.size());
  for (size_t i = 0; i < held.size(); ++i) {
    EvalQuery q{static_cast<int64_t>(i), {}, held[i].gts};
    for (const Prediction& p : BankPredictions(bank, held[i].duration)) {
      q.preds.push_back({p.span, p.score});
    }
    queries.push_back(std::move(q));
  }
  EvalConfig config;
  config.r1_thresholds = {0.5};
  std::map<std::string, double> out;
  for (const BucketMetrics& m : PerLengthBreakdown(queries, config)) {
    if (m.r1.has_value()) out[m.bucket.name] = m.r1->at.front().second;
  }
  return out;
}

}  // namespace

absl::StatusOr<MatchStrategy> ParseMatchStrategy(std::string_view name) {
  if (name == "lengthwise") return MatchStrategy::kLengthwise;
  if (name == "unified") return MatchStrategy::kUnified;
  if (name == "groupwise") return MatchStrategy::kGroupwise;
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown matching strategy '", std::string(name),
      "' (expected lengthwise, unified or groupwise)"));
}

std::string_view MatchStrategyName(MatchStrategy strategy) {
  switch (strategy) {
    case MatchStrategy::kLengthwise:
      return "lengthwise";
    case MatchStrategy::kUnified:
      return "unified";
    case MatchStrategy::kGroupwise:
      return "groupwise";
  }
  return "unknown";
}

absl::Status ValidateQueryBank(const QueryBank& bank) {
  if (bank.n_q < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("n_q must be >= 1, got ", bank.n_q));
  }
  if (bank.slots.size() != static_cast<size_t>(bank.n_classes() * bank.n_q)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "bank has ", bank.slots.size(), " slots, expected ", bank.n_classes(),
        " x ", bank.n_q));
  }
  for (size_t i = 0; i < bank.slots.size(); ++i) {
    const Slot& s = bank.slots[i];
    if (!std::isfinite(s.center) || !std::isfinite(s.width) ||
        !std::isfinite(s.conf_logit) || !(s.width > 0.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("slot ", i, " has a non-finite or non-positive value"));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<QueryBank> UniformQueryBank(const LengthClassScheme& scheme,
                                           int n_q, double width) {
  if (!(width >= kMinSlotWidth && width <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("initial width must be in [", kMinSlotWidth, ", 1], got ",
                     width));
  }
  QueryBank bank{scheme, n_q, {}};
  for (int k = 0; k < scheme.n_classes(); ++k) {
    for (int j = 0; j < n_q; ++j) {
      bank.slots.push_back({(j + 0.5) / n_q, width, 0.0});
    }
  }
  if (absl::Status s = ValidateQueryBank(bank); !s.ok()) return s;
  return bank;
}

absl::StatusOr<QueryBank> InitQueryBank(const LengthClassScheme& scheme,
                                        int n_q, double width, Rng& rng) {
  auto bank = UniformQueryBank(scheme, n_q, width);
  if (!bank.ok()) return bank;
  std::uniform_real_distribution<double> jitter(-0.25, 0.25);
  for (Slot& s : bank->slots) s.center += jitter(rng) / n_q;
  ClampBank(*bank);
  return bank;
}

void ClampBank(QueryBank& bank) {
  for (Slot& s : bank.slots) {
    s.center = std::clamp(s.center, 0.0, 1.0);
    s.width = std::clamp(s.width, kMinSlotWidth, 1.0);
    s.conf_logit = std::clamp(s.conf_logit, -kMaxLogit, kMaxLogit);
  }
}

double Sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<Prediction> BankPredictions(const QueryBank& bank,
                                        double duration) {
  std::vector<Prediction> preds;
  preds.reserve(bank.slots.size());
  for (size_t i = 0; i < bank.slots.size(); ++i) {
    const Slot& s = bank.slots[i];
    const Span span = SlotSpan(s);
    preds.push_back({{span.start * duration, span.end * duration},
                     Sigmoid(s.conf_logit),
                     bank.class_of_slot(i)});
  }
  return preds;
}

absl::Status ValidateSyntheticSpec(const SyntheticSpec& spec) {
  if (spec.n_samples < 1) {
    return absl::InvalidArgumentError("n_samples must be >= 1");
  }
  if (!(spec.duration > 0.0) || !std::isfinite(spec.duration)) {
    return absl::InvalidArgumentError("duration must be positive");
  }
  if (spec.class_ranges.empty()) {
    return absl::InvalidArgumentError("no gt-length ranges given");
  }
  for (const auto& [lo, hi] : spec.class_ranges) {
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) {
      return absl::InvalidArgumentError(
          absl::StrCat("invalid length range [", lo, ", ", hi, "]"));
    }
    if (hi > spec.duration) {
      return absl::InvalidArgumentError(
          absl::StrCat("infeasible spec: length range [", lo, ", ", hi,
                       "] exceeds duration ", spec.duration));
    }
  }
  if (spec.gts_min < 1 || spec.gts_max < spec.gts_min) {
    return absl::InvalidArgumentError(absl::StrCat(
        "invalid gts per sample range [", spec.gts_min, ", ", spec.gts_max,
        "]"));
  }
  return absl::OkStatus();
}

absl::Status CheckRangesAgainstScheme(const SyntheticSpec& spec,
                                      const LengthClassScheme& scheme) {
  for (const auto& [lo, hi] : spec.class_ranges) {
    if (ClassOf(lo, scheme) != ClassOf(hi, scheme)) {
      return absl::InvalidArgumentError(
          absl::StrCat("length range [", lo, ", ", hi,
                       "] straddles a class boundary"));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<SyntheticSample>> GenerateSynthetic(
    const SyntheticSpec& spec) {
  if (absl::Status s = ValidateSyntheticSpec(spec); !s.ok()) return s;
  Rng rng = MakeStream(spec.seed, "synthetic");
  std::uniform_int_distribution<int> pick_count(spec.gts_min, spec.gts_max);
  std::uniform_int_distribution<int> pick_range(
      0, static_cast<int>(spec.class_ranges.size()) - 1);

  std::vector<SyntheticSample> out;
  out.reserve(spec.n_samples);
  for (int i = 0; i < spec.n_samples; ++i) {
    SyntheticSample sample;
    sample.duration = spec.duration;
    std::vector<std::pair<Span, int>> placed;
    const int k = pick_count(rng);
    for (int g = 0; g < k; ++g) {
      bool ok = false;
      for (int attempt = 0; attempt < kPlacementTries && !ok; ++attempt) {
        const int cls = pick_range(rng);
        const auto [lo, hi] = spec.class_ranges[cls];
        const double len = std::uniform_real_distribution<double>(lo, hi)(rng);
        const double start =
            std::uniform_real_distribution<double>(0.0, spec.duration - len)(rng);
        const Span span{start, start + len};
        ok = std::none_of(placed.begin(), placed.end(), [&](const auto& p) {
          return span.start < p.first.end && span.end > p.first.start;
        });
        if (ok) placed.push_back({span, cls});
      }
      if (!ok) break;
    }
    std::sort(placed.begin(), placed.end(), [](const auto& a, const auto& b) {
      return a.first.start < b.first.start;
    });
    for (const auto& [span, cls] : placed) {
      sample.gts.push_back(span);
      sample.classes.push_back(cls);
    }
    out.push_back(std::move(sample));
  }
  return out;
}

absl::Status ValidateTrainConfig(const TrainConfig& config) {
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    return absl::InvalidArgumentError(
        absl::StrCat("learning rate must be >= 0, got ", config.learning_rate));
  }
  if (config.epochs < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("epochs must be >= 1, got ", config.epochs));
  }
  for (double l : {config.lambda_l1, config.lambda_giou, config.lambda_conf}) {
    if (!(l >= 0.0) || !std::isfinite(l)) {
      return absl::InvalidArgumentError("loss weights must be >= 0");
    }
  }
  return ValidateCostParams(config.cost);
}

absl::StatusOr<std::vector<std::pair<int, int>>> MatchBank(
    const QueryBank& bank, const SyntheticSample& sample,
    MatchStrategy strategy, const CostParams& params) {
  const std::vector<Prediction> preds = BankPredictions(bank, sample.duration);
  switch (strategy) {
    case MatchStrategy::kLengthwise: {
      auto per_class = LengthwiseMatch(preds, sample.gts, sample.duration,
                                       bank.scheme, bank.n_q, params);
      if (!per_class.ok()) return per_class.status();
      return Flatten(*per_class);
    }
    case MatchStrategy::kUnified: {
      auto a = UnifiedMatch(preds, sample.gts, sample.duration, params);
      if (!a.ok()) return a.status();
      return a->pairs;
    }
    case MatchStrategy::kGroupwise: {
      auto per_group = GroupwiseMatch(preds, bank.n_classes(), sample.gts,
                                      sample.duration, params);
      if (!per_group.ok()) return per_group.status();
      return Flatten(*per_group);
    }
  }
  return absl::InternalError("unhandled matching strategy");
}

LossAndGrad MatchedLoss(const QueryBank& bank, const SyntheticSample& sample,
                        std::span<const std::pair<int, int>> matches,
                        const TrainConfig& config) {
  LossAndGrad out;
  out.grads.resize(bank.slots.size());
  out.matches.assign(matches.begin(), matches.end());
  std::vector<bool> matched(bank.slots.size(), false);

  for (const auto& [slot_index, gt_index] : matches) {
    const Slot& s = bank.slots[slot_index];
    matched[slot_index] = true;
    const Span& g = sample.gts[gt_index];
    const Span gt{g.start / sample.duration, g.end / sample.duration};
    const double dc = s.center - gt.center();
    const double dw = s.width - gt.length();
    out.loss += config.lambda_l1 * (std::abs(dc) + std::abs(dw)) +
                config.lambda_giou * (1.0 - Giou1d(SlotSpan(s), gt));

    const GiouGradient gg = GiouGrad({s.center, s.width}, gt);
    SlotGradient& grad = out.grads[slot_index];
    grad.d_center += config.lambda_l1 * SignOf(dc) - config.lambda_giou * gg.d_center;
    const double d_width =
        config.lambda_l1 * SignOf(dw) - config.lambda_giou * gg.d_width;
    grad.d_log_width += s.width * d_width;
  }

  for (size_t i = 0; i < bank.slots.size(); ++i) {
    const double z = bank.slots[i].conf_logit;
    const double target = matched[i] ? 1.0 : 0.0;
    out.loss += config.lambda_conf * (Softplus(z) - target * z);
    out.grads[i].d_logit += config.lambda_conf * (Sigmoid(z) - target);
  }
  return out;
}

absl::StatusOr<LossAndGrad> MatchedLossAndGrad(const QueryBank& bank,
                                               const SyntheticSample& sample,
                                               MatchStrategy strategy,
                                               const CostParams& params,
                                               const TrainConfig& config) {
  if (absl::Status s = ValidateQueryBank(bank); !s.ok()) return s;
  auto matches = MatchBank(bank, sample, strategy, params);
  if (!matches.ok()) return matches.status();
  return MatchedLoss(bank, sample, *matches, config);
}

size_t TrainSplit(size_t n_samples) {
  if (n_samples <= 1) return n_samples;
  return std::clamp<size_t>(n_samples * 8 / 10, 1, n_samples - 1);
}

absl::StatusOr<TrainResult> Train(const QueryBank& initial,
                                  std::span<const SyntheticSample> dataset,
                                  const TrainConfig& config) {
  if (absl::Status s = ValidateTrainConfig(config); !s.ok()) return s;
  if (absl::Status s = ValidateQueryBank(initial); !s.ok()) return s;
  if (dataset.empty()) {
    return absl::InvalidArgumentError("training set is empty");
  }
  TrainResult result;
  result.bank = initial;
  result.n_train = TrainSplit(dataset.size());
  result.n_heldout = dataset.size() - result.n_train;
  const auto train = dataset.first(result.n_train);
  const auto held = dataset.subspan(result.n_train);
  QueryBank& bank = result.bank;
  const double inv_n = 1.0 / static_cast<double>(train.size());

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<SlotGradient> total(bank.slots.size());
    double loss = 0.0;
    for (const SyntheticSample& sample : train) {
      auto lg = MatchedLossAndGrad(bank, sample, config.strategy, config.cost,
                                   config);
      if (!lg.ok()) {
        return absl::Status(lg.status().code(),
                            absl::StrCat("epoch ", epoch, ": ",
                                         lg.status().message()));
      }
      loss += lg->loss;
      for (size_t i = 0; i < total.size(); ++i) {
        total[i].d_center += lg->grads[i].d_center;
        total[i].d_log_width += lg->grads[i].d_log_width;
        total[i].d_logit += lg->grads[i].d_logit;
      }
    }
    loss *= inv_n;
    if (!std::isfinite(loss)) {
      return absl::InternalError(
          absl::StrCat("training diverged at epoch ", epoch));
    }

    const double lr = config.learning_rate;
    for (size_t i = 0; i < bank.slots.size(); ++i) {
      Slot& s = bank.slots[i];
      s.center -= lr * total[i].d_center * inv_n;
      s.width *= std::exp(-lr * total[i].d_log_width * inv_n);
      s.conf_logit -= lr * total[i].d_logit * inv_n;
    }
    ClampBank(bank);

    EpochRecord record;
    record.epoch = epoch;
    record.loss = loss;
    record.loss_delta =
        result.history.empty() ? 0.0 : loss - result.history.back().loss;
    if (!held.empty()) record.heldout_r1 = HeldoutR1(bank, held);
    result.history.push_back(std::move(record));
  }
  return result;
}

std::vector<ClassSpecialization> SpecializationReport(const QueryBank& bank,
                                                      double duration) {
  std::vector<ClassSpecialization> out;
  for (int k = 0; k < bank.n_classes(); ++k) {
    ClassSpecialization c;
    c.class_index = k;
    c.lower = bank.scheme.lower(k);
    c.upper = bank.scheme.upper(k);
    int inside = 0;
    double sum = 0.0;
    for (int j = 0; j < bank.n_q; ++j) {
      const double w = bank.slots[k * bank.n_q + j].width * duration;
      sum += w;
      if (bank.scheme.Contains(k, w)) ++inside;
    }
    c.mean_width = sum / bank.n_q;
    c.inside_fraction = static_cast<double>(inside) / bank.n_q;
    out.push_back(c);
  }
  return out;
}

}  // namespace momentkit
