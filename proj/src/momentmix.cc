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

#include "momentkit/momentmix.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iterator>
#include <utility>

#include "absl/strings/str_cat.h"

namespace momentkit {
namespace {

using RowRange = std::pair<size_t, size_t>;  // [begin, end)

size_t RangeSize(const RowRange& r) { return r.second - r.first; }

// Draws `count` distinct values from `candidates` uniformly, returned sorted.
std::vector<size_t> DrawCuts(const std::vector<size_t>& candidates,
                             size_t count, Rng& rng) {
  std::vector<size_t> cuts;
  cuts.reserve(count);
  std::sample(candidates.begin(), candidates.end(), std::back_inserter(cuts),
              count, rng);
  return cuts;
}

// Copies `ranges` of `src` (with their provenance) onto the end of `dst`.
void AppendRows(const MixedSample& src, const RowRange& range,
                std::vector<float>& dst_data, Provenance& dst_prov) {
  const FeatureMatrix& f = src.sample.features;
  for (size_t r = range.first; r < range.second; ++r) {
    const auto row = f.row(r);
    dst_data.insert(dst_data.end(), row.begin(), row.end());
    dst_prov.push_back(src.provenance[r]);
  }
}

ForegroundMixResult PassThrough(const VideoSample& sample, MixOutcome outcome,
                                std::string reason) {
  ForegroundMixResult result;
  result.outcome = outcome;
  result.reason = std::move(reason);
  result.mixed = Unmixed(sample);
  return result;
}

// Maximal runs of equal mask value.
std::vector<std::pair<RowRange, bool>> Runs(const std::vector<bool>& mask) {
  std::vector<std::pair<RowRange, bool>> runs;
  size_t begin = 0;
  for (size_t r = 1; r <= mask.size(); ++r) {
    if (r == mask.size() || mask[r] != mask[begin]) {
      runs.push_back({{begin, r}, mask[begin]});
      begin = r;
    }
  }
  return runs;
}

}  // namespace

std::set<std::string> DefaultTemporalWords() {
  return {"before", "after",  "then", "first", "second", "finally", "later",
          "again",  "while",  "until", "begins", "ends",  "starts", "next"};
}

absl::Status ValidateMomentMixConfig(const MomentMixConfig& config) {
  if (!(config.epsilon_cut > 0.0) || !std::isfinite(config.epsilon_cut)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon_cut must be positive, got ", config.epsilon_cut));
  }
  if (config.min_subforegrounds < 2) {
    return absl::InvalidArgumentError(absl::StrCat(
        "min_subforegrounds must be >= 2, got ", config.min_subforegrounds));
  }
  if (!(config.apply_probability >= 0.0 && config.apply_probability <= 1.0)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "apply_probability must be in [0, 1], got ", config.apply_probability));
  }
  return absl::OkStatus();
}

bool IsTemporalQuery(std::string_view query,
                     const std::set<std::string>& words) {
  std::string token;
  const auto flush = [&]() {
    const bool hit = !token.empty() && words.count(token) > 0;
    token.clear();
    return hit;
  };
  for (char ch : query) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else if (flush()) {
      return true;
    }
  }
  return flush();
}

Provenance IdentityProvenance(const VideoSample& sample) {
  Provenance p;
  p.reserve(sample.features.rows());
  for (size_t r = 0; r < sample.features.rows(); ++r) {
    p.push_back({sample.sample_id, r});
  }
  return p;
}

MixedSample Unmixed(const VideoSample& sample) {
  return {sample, IdentityProvenance(sample), sample.sample_id,
          sample.video_id};
}

absl::StatusOr<ForegroundMixResult> ForegroundMix(
    const VideoSample& sample, const Span& fg, const MomentMixConfig& config,
    Rng& rng) {
  if (absl::Status s = ValidateMomentMixConfig(config); !s.ok()) return s;
  if (absl::Status s = ValidateVideoSample(sample); !s.ok()) return s;
  if (std::find(sample.gt_moments.begin(), sample.gt_moments.end(), fg) ==
      sample.gt_moments.end()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "sample ", sample.sample_id, ": foreground [", fg.start, ", ", fg.end,
        "] is not one of its gt windows"));
  }
  if (IsTemporalQuery(sample.query_text, config.temporal_words)) {
    return PassThrough(sample, MixOutcome::kFiltered,
                       "query has an explicit temporal relation");
  }
  if (sample.gt_moments.size() != 1) {
    // Other windows would end up inside the shuffled background.
    return PassThrough(sample, MixOutcome::kNotApplicable,
                       "sample has more than one gt window");
  }

  const double clip = sample.clip_len;
  const size_t rows = sample.features.rows();
  // Rows [0, full) are whole clips; a shorter final clip stays pinned last.
  const size_t full = std::min(
      rows, static_cast<size_t>(std::floor(sample.duration / clip + 1e-9)));
  const auto fg_begin = static_cast<size_t>(std::llround(fg.start / clip));
  const auto fg_end = static_cast<size_t>(std::llround(fg.end / clip));
  if (fg_end > full || fg_begin >= fg_end) {
    return PassThrough(sample, MixOutcome::kNotApplicable,
                       "foreground does not cover whole clips");
  }

  const double fg_len = static_cast<double>(fg_end - fg_begin) * clip;
  const auto n = static_cast<size_t>(
      std::floor(fg_len / config.epsilon_cut + 1e-9));
  if (n < static_cast<size_t>(config.min_subforegrounds)) {
    return PassThrough(
        sample, MixOutcome::kNotApplicable,
        absl::StrCat("foreground yields ", n, " sub-foregrounds"));
  }

  // Foreground cut candidates: clip boundaries strictly inside it.
  std::vector<size_t> fg_candidates;
  for (size_t r = fg_begin + 1; r < fg_end; ++r) fg_candidates.push_back(r);
  // Background timeline: front rows [0, fg_begin) then back rows
  // [fg_end, full), concatenated. The junction is always a cut, so n - 1
  // more cuts give n + 1 pieces.
  const size_t front = fg_begin;
  const size_t bg_len = front + (full - fg_end);
  std::vector<size_t> bg_candidates;
  for (size_t r = 1; r < bg_len; ++r) {
    if (r != front) bg_candidates.push_back(r);
  }
  if (fg_candidates.size() < n - 1 || bg_candidates.size() < n - 1) {
    return PassThrough(sample, MixOutcome::kNotApplicable,
                       "too few clips to place the cuts");
  }

  const std::vector<size_t> fg_cuts = DrawCuts(fg_candidates, n - 1, rng);
  std::vector<size_t> bg_cuts = DrawCuts(bg_candidates, n - 1, rng);
  bg_cuts.push_back(front);
  std::sort(bg_cuts.begin(), bg_cuts.end());

  std::vector<RowRange> fg_pieces;
  size_t at = fg_begin;
  for (size_t cut : fg_cuts) {
    fg_pieces.push_back({at, cut});
    at = cut;
  }
  fg_pieces.push_back({at, fg_end});

  // Background pieces in timeline coordinates; mapped to rows when emitted.
  std::vector<RowRange> bg_pieces;
  at = 0;
  for (size_t cut : bg_cuts) {
    bg_pieces.push_back({at, cut});
    at = cut;
  }
  bg_pieces.push_back({at, bg_len});

  std::shuffle(fg_pieces.begin(), fg_pieces.end(), rng);
  std::shuffle(bg_pieces.begin(), bg_pieces.end(), rng);
  // At most two pieces are empty (an absent front or back). They go to the
  // ends so consecutive sub-foregrounds stay separated by background.
  std::vector<RowRange> nonempty;
  std::vector<RowRange> empty;
  for (const RowRange& p : bg_pieces) {
    (RangeSize(p) > 0 ? nonempty : empty).push_back(p);
  }
  bg_pieces.clear();
  if (empty.size() == 2) {
    bg_pieces.push_back(empty[0]);
    bg_pieces.insert(bg_pieces.end(), nonempty.begin(), nonempty.end());
    bg_pieces.push_back(empty[1]);
  } else if (empty.size() == 1) {
    const bool at_front = std::bernoulli_distribution(0.5)(rng);
    if (at_front) bg_pieces.push_back(empty[0]);
    bg_pieces.insert(bg_pieces.end(), nonempty.begin(), nonempty.end());
    if (!at_front) bg_pieces.push_back(empty[0]);
  } else {
    bg_pieces = std::move(nonempty);
  }

  const MixedSample source = Unmixed(sample);
  const size_t cols = sample.features.cols();
  std::vector<float> data;
  data.reserve(rows * cols);
  Provenance prov;
  prov.reserve(rows);

  ForegroundMixResult result;
  result.outcome = MixOutcome::kApplied;
  // Timeline positions below `front` are front rows; the rest map past the
  // foreground. No piece straddles the junction.
  const auto to_row = [&](size_t t) { return t < front ? t : t - front + fg_end; };
  const auto emit_background = [&](const RowRange& piece) {
    if (RangeSize(piece) == 0) {
      result.background_pieces.push_back({0, 0});
      return;
    }
    const RowRange rows_range{to_row(piece.first),
                              to_row(piece.second - 1) + 1};
    AppendRows(source, rows_range, data, prov);
    result.background_pieces.push_back(rows_range);
  };

  emit_background(bg_pieces[0]);
  for (size_t i = 0; i < n; ++i) {
    const size_t out_begin = prov.size();
    AppendRows(source, fg_pieces[i], data, prov);
    const size_t out_end = prov.size();
    result.new_gt.push_back({static_cast<double>(out_begin) * clip,
                             static_cast<double>(out_end) * clip});
    result.sub_foreground_sources.push_back(
        {static_cast<double>(fg_pieces[i].first) * clip,
         static_cast<double>(fg_pieces[i].second) * clip});
    emit_background(bg_pieces[i + 1]);
  }
  AppendRows(source, {full, rows}, data, prov);

  VideoSample out = sample;
  auto features = FeatureMatrix::Create(rows, cols, std::move(data));
  if (!features.ok()) return features.status();
  out.features = *std::move(features);
  out.gt_moments = result.new_gt;
  if (absl::Status s = ValidateVideoSample(out); !s.ok()) {
    return absl::InternalError(
        absl::StrCat("ForegroundMix produced an invalid sample: ", s.message()));
  }
  result.mixed = {std::move(out), std::move(prov), sample.sample_id,
                  sample.video_id};
  return result;
}

std::vector<bool> ForegroundRowMask(const VideoSample& sample) {
  const size_t rows = sample.features.rows();
  std::vector<bool> mask(rows, false);
  for (const Span& gt : sample.gt_moments) {
    const size_t first = ClipIndex(gt.start, sample.clip_len);
    const size_t last = std::min(rows, ExpectedRowCount(gt.end, sample.clip_len));
    for (size_t r = first; r < last; ++r) mask[r] = true;
  }
  return mask;
}

absl::StatusOr<DonorPool> DonorPool::Create(
    std::span<const VideoSample> donors) {
  if (donors.empty()) {
    return absl::InvalidArgumentError("donor pool is empty");
  }
  DonorPool pool;
  pool.cols_ = donors.front().features.cols();
  for (const VideoSample& d : donors) {
    if (d.features.cols() != pool.cols_) {
      return absl::InvalidArgumentError(absl::StrCat(
          "donor ", d.sample_id, " has ", d.features.cols(),
          " feature columns, pool uses ", pool.cols_));
    }
    if (d.features.rows() == 0) continue;
    Donor donor{&d, {}};
    for (const auto& [range, is_fg] : Runs(ForegroundRowMask(d))) {
      donor.segments.push_back(range);
    }
    pool.donors_.push_back(std::move(donor));
  }
  if (pool.donors_.empty()) {
    return absl::InvalidArgumentError("donor pool has no non-empty samples");
  }
  return pool;
}

absl::StatusOr<BackgroundMixResult> BackgroundMix(const MixedSample& input,
                                                  const DonorPool& pool,
                                                  Rng& rng) {
  const VideoSample& sample = input.sample;
  if (absl::Status s = ValidateVideoSample(sample); !s.ok()) return s;
  if (input.provenance.size() != sample.features.rows()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "sample ", sample.sample_id, ": provenance has ",
        input.provenance.size(), " entries for ", sample.features.rows(),
        " rows"));
  }
  if (sample.features.cols() != pool.cols()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "sample ", sample.sample_id, " has ", sample.features.cols(),
        " feature columns, donor pool has ", pool.cols()));
  }

  std::vector<size_t> eligible;
  for (size_t i = 0; i < pool.size(); ++i) {
    const VideoSample& d = *pool.donor(i).sample;
    if (d.sample_id == input.origin_id || d.sample_id == sample.sample_id) {
      continue;
    }
    if (!input.origin_video_id.empty() && d.video_id == input.origin_video_id) {
      continue;
    }
    eligible.push_back(i);
  }
  if (eligible.empty()) {
    return absl::FailedPreconditionError(absl::StrCat(
        "no donor other than sample ", input.origin_id, " itself"));
  }

  BackgroundMixResult result;
  result.mixed = input;
  FeatureMatrix& features = result.mixed.sample.features;
  Provenance& prov = result.mixed.provenance;
  std::uniform_int_distribution<size_t> pick_donor(0, eligible.size() - 1);

  for (const auto& [run, is_fg] : Runs(ForegroundRowMask(sample))) {
    if (is_fg) continue;
    const size_t need = RangeSize(run);
    const DonorPool::Donor* donor = nullptr;
    size_t crop_begin = 0;
    bool found = false;
    for (int attempt = 0; attempt < kDonorRetries && !found; ++attempt) {
      donor = &pool.donor(eligible[pick_donor(rng)]);
      std::uniform_int_distribution<size_t> pick_segment(
          0, donor->segments.size() - 1);
      const RowRange& seg = donor->segments[pick_segment(rng)];
      if (RangeSize(seg) >= need) {
        std::uniform_int_distribution<size_t> offset(0, RangeSize(seg) - need);
        crop_begin = seg.first + offset(rng);
        found = true;
      }
    }
    if (!found) {
      ++result.fallbacks;
      if (donor->sample->features.rows() < need) {
        std::vector<const DonorPool::Donor*> long_enough;
        for (size_t i : eligible) {
          if (pool.donor(i).sample->features.rows() >= need) {
            long_enough.push_back(&pool.donor(i));
          }
        }
        if (long_enough.empty()) {
          return absl::FailedPreconditionError(absl::StrCat(
              "no donor has ", need, " rows to fill a background run of ",
              sample.sample_id));
        }
        std::uniform_int_distribution<size_t> pick(0, long_enough.size() - 1);
        donor = long_enough[pick(rng)];
      }
      std::uniform_int_distribution<size_t> offset(
          0, donor->sample->features.rows() - need);
      crop_begin = offset(rng);
    }

    const FeatureMatrix& src = donor->sample->features;
    for (size_t k = 0; k < need; ++k) {
      const auto from = src.row(crop_begin + k);
      std::copy(from.begin(), from.end(),
                features.mutable_row(run.first + k).begin());
      prov[run.first + k] = {donor->sample->sample_id, crop_begin + k};
    }
    result.background_runs.push_back(run);
  }
  return result;
}

absl::StatusOr<MomentMixOutput> MomentMix(std::span<const VideoSample> dataset,
                                          const MomentMixConfig& config,
                                          const DonorPool& donors) {
  if (absl::Status s = ValidateMomentMixConfig(config); !s.ok()) return s;
  MomentMixOutput out;
  out.samples.reserve(dataset.size() * 2);
  for (const VideoSample& sample : dataset) {
    out.samples.push_back(sample);
    Rng rng = MakeStream(config.seed, sample.sample_id);
    if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) >=
        config.apply_probability) {
      ++out.stats.skipped;
      continue;
    }
    if (sample.gt_moments.empty()) {
      ++out.stats.not_applicable;
      continue;
    }
    auto fg = ForegroundMix(sample, sample.gt_moments.front(), config, rng);
    if (!fg.ok()) return fg.status();
    if (fg->outcome == MixOutcome::kFiltered) {
      ++out.stats.filtered;
      continue;
    }
    if (fg->outcome == MixOutcome::kNotApplicable) {
      ++out.stats.not_applicable;
      continue;
    }
    auto bg = BackgroundMix(fg->mixed, donors, rng);
    if (!bg.ok()) return bg.status();
    ++out.stats.applied;
    out.stats.fallbacks += bg->fallbacks;

    VideoSample augmented = std::move(bg->mixed.sample);
    augmented.sample_id = sample.sample_id + std::string(kAugmentedSuffix);
    out.records.push_back({augmented.sample_id, sample.sample_id,
                           fg->sub_foreground_sources, fg->new_gt,
                           std::move(bg->mixed.provenance)});
    out.samples.push_back(std::move(augmented));
  }
  return out;
}

}  // namespace momentkit
