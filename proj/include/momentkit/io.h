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

// File formats.
//
// FMAT feature files:
//   "FMAT" | u32 version (1) | u32 rows | u32 cols | rows*cols f32
// all little-endian, row-major.
//
// Annotation JSONL, one query per line:
//   {"qid": 1, "query": "...", "vid": "v1", "duration": 150,
//    "clip_len": 2, "relevant_windows": [[10, 24], [80, 92]]}
// Features for a record live in <features_dir>/<vid>.fmat.
//
// Prediction JSONL:
//   {"qid": 1, "pred_relevant_windows": [[start, end, score], ...]}

#ifndef MOMENTKIT_IO_H_
#define MOMENTKIT_IO_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "momentkit/core.h"
#include "momentkit/eval.h"

namespace momentkit {

inline constexpr uint32_t kFmatVersion = 1;
inline constexpr size_t kFmatHeaderBytes = 16;

std::string EncodeFeatureMatrix(const FeatureMatrix& m);
absl::StatusOr<FeatureMatrix> DecodeFeatureMatrix(std::string_view bytes);

absl::Status WriteFeatureFile(const FeatureMatrix& m, const std::string& path);
absl::StatusOr<FeatureMatrix> ReadFeatureFile(const std::string& path);

absl::StatusOr<std::string> ReadFileBytes(const std::string& path);
// Writes to a temporary file next to `path`, then renames it into place.
absl::Status WriteFileAtomic(const std::string& path, std::string_view bytes);

// Lowercase hex SHA-256.
std::string Sha256Hex(std::string_view bytes);

struct DatasetRecord {
  int64_t qid = 0;
  std::string query;
  std::string vid;
  double duration = 0.0;
  double clip_len = 0.0;
  std::vector<Span> windows;
};

absl::StatusOr<DatasetRecord> ParseDatasetRecord(std::string_view line);

struct LoadedDataset {
  std::vector<VideoSample> samples;
  std::vector<DatasetRecord> records;  // aligned with samples
  // One "line N: message" entry per rejected record.
  std::vector<std::string> diagnostics;
};

// Loads and validates every record; bad records are reported and skipped.
// With `fail_fast` the first bad record is returned as an error instead.
absl::StatusOr<LoadedDataset> LoadDataset(const std::string& annotations_path,
                                          const std::string& features_dir,
                                          bool fail_fast);

// Ground truth from annotation JSONL (features are not read).
absl::StatusOr<std::vector<QueryGroundTruth>> LoadGroundTruth(
    const std::string& path);

absl::StatusOr<std::vector<QueryPredictions>> LoadPredictions(
    const std::string& path);

}  // namespace momentkit

#endif  // MOMENTKIT_IO_H_
