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

// MomentMix: a two-stage, feature-level augmentation for moment retrieval.
//
// ForegroundMix cuts one long foreground window into n = floor(len / eps_cut)
// contiguous sub-foregrounds, cuts the surrounding background into n + 1
// pieces, shuffles both lists and interleaves them as
//
//   b'_0 f'_1 b'_1 f'_2 ... f'_n b'_n
//
// so a single long moment becomes n shorter moments of the same query.
// BackgroundMix then keeps every foreground row and replaces each maximal
// background run with an equally long crop taken from a segment of some other
// video.
//
// All cuts happen on clip boundaries. Every output row records the
// (sample, row) it was copied from.

#ifndef MOMENTKIT_MOMENTMIX_H_
#define MOMENTKIT_MOMENTMIX_H_

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "momentkit/core.h"
#include "momentkit/random.h"

namespace momentkit {

inline constexpr double kEpsilonCutQvHighlights = 5.0;
inline constexpr double kEpsilonCutCharadesSta = 10.0;
inline constexpr double kEpsilonCutTacos = 10.0;

// Number of donor draws BackgroundMix makes for one background run before
// falling back to a window over a donor's whole timeline.
inline constexpr int kDonorRetries = 3;

std::set<std::string> DefaultTemporalWords();

struct MomentMixConfig {
  double epsilon_cut = kEpsilonCutQvHighlights;
  int min_subforegrounds = 2;
  double apply_probability = 1.0;
  std::set<std::string> temporal_words = DefaultTemporalWords();
  uint64_t seed = 0;
};

absl::Status ValidateMomentMixConfig(const MomentMixConfig& config);

// True iff a lowercased token of `query` (split on anything that is not a
// letter or digit) is in `words`.
bool IsTemporalQuery(std::string_view query,
                     const std::set<std::string>& words);

struct RowSource {
  std::string sample_id;
  size_t row = 0;

  friend bool operator==(const RowSource&, const RowSource&) = default;
};

// One entry per feature row.
using Provenance = std::vector<RowSource>;

Provenance IdentityProvenance(const VideoSample& sample);

// A sample plus the audit trail of where each of its rows came from.
struct MixedSample {
  VideoSample sample;
  Provenance provenance;
  // Id of the original sample this one was derived from.
  std::string origin_id;
  std::string origin_video_id;
};

MixedSample Unmixed(const VideoSample& sample);

enum class MixOutcome { kApplied, kNotApplicable, kFiltered };

struct ForegroundMixResult {
  MixOutcome outcome = MixOutcome::kNotApplicable;
  // Why the sample passed through; empty when applied.
  std::string reason;
  // The input unchanged unless outcome == kApplied.
  MixedSample mixed;
  // Output positions of f'_1..f'_n, sorted.
  std::vector<Span> new_gt;
  // Source position of each sub-foreground, aligned with new_gt.
  std::vector<Span> sub_foreground_sources;
  // Background pieces b'_0..b'_n in output order, as source row ranges.
  std::vector<std::pair<size_t, size_t>> background_pieces;
};

// Applies ForegroundMix to `fg`, which must be one of sample.gt_moments.
// Returns an error only for invalid input; every "cannot mix this sample"
// case comes back as kNotApplicable / kFiltered with the input passed
// through.
absl::StatusOr<ForegroundMixResult> ForegroundMix(const VideoSample& sample,
                                                  const Span& fg,
                                                  const MomentMixConfig& config,
                                                  Rng& rng);

// Donor videos for BackgroundMix, with their segment structure precomputed.
class DonorPool {
 public:
  static absl::StatusOr<DonorPool> Create(std::span<const VideoSample> donors);

  size_t size() const { return donors_.size(); }
  size_t cols() const { return cols_; }

  struct Donor {
    const VideoSample* sample;
    // All maximal foreground and background runs, as [begin, end) rows.
    std::vector<std::pair<size_t, size_t>> segments;
  };
  const Donor& donor(size_t i) const { return donors_[i]; }

 private:
  std::vector<Donor> donors_;
  size_t cols_ = 0;
};

struct BackgroundMixResult {
  MixedSample mixed;
  // Background runs replaced, as [begin, end) rows.
  std::vector<std::pair<size_t, size_t>> background_runs;
  // Runs that needed the whole-timeline fallback.
  int fallbacks = 0;
};

// True for rows whose clip overlaps any gt window with positive length.
std::vector<bool> ForegroundRowMask(const VideoSample& sample);

// Replaces every background run of `input` by a donor crop. Donors sharing
// the input's origin sample id or origin video id are never used.
absl::StatusOr<BackgroundMixResult> BackgroundMix(const MixedSample& input,
                                                  const DonorPool& pool,
                                                  Rng& rng);

struct MomentMixStats {
  int applied = 0;
  int filtered = 0;
  int not_applicable = 0;
  int skipped = 0;
  int fallbacks = 0;
};

struct AugmentationRecord {
  std::string sample_id;
  std::string origin_id;
  std::vector<Span> sub_foreground_sources;
  std::vector<Span> new_gt;
  Provenance provenance;
};

struct MomentMixOutput {
  // Originals in input order, each followed by its augmented copy if any.
  std::vector<VideoSample> samples;
  std::vector<AugmentationRecord> records;
  MomentMixStats stats;
};

// Suffix appended to an original sample id to name its augmented copy.
inline constexpr std::string_view kAugmentedSuffix = "-mm";

// Runs both stages over `dataset`. Randomness for each sample comes from
// MakeStream(config.seed, sample_id), so the output does not depend on the
// order samples are processed in.
absl::StatusOr<MomentMixOutput> MomentMix(std::span<const VideoSample> dataset,
                                          const MomentMixConfig& config,
                                          const DonorPool& donors);

}  // namespace momentkit

#endif  // MOMENTKIT_MOMENTMIX_H_
