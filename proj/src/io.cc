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

#include "momentkit/io.h"

#include <openssl/sha.h>

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "json.hpp"

namespace momentkit {
namespace {

using nlohmann::json;

void PutU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t GetU32(std::string_view bytes, size_t offset) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[offset + i]))
         << (8 * i);
  }
  return v;
}

absl::StatusOr<json> ParseJsonObject(std::string_view line) {
  json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) return absl::InvalidArgumentError("malformed JSON");
  if (!j.is_object()) return absl::InvalidArgumentError("expected a JSON object");
  return j;
}

absl::StatusOr<double> GetNumber(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    return absl::InvalidArgumentError(
        absl::StrCat("missing or non-numeric field '", key, "'"));
  }
  return it->get<double>();
}

absl::StatusOr<int64_t> GetQid(const json& j) {
  auto it = j.find("qid");
  if (it == j.end() || !it->is_number_integer()) {
    return absl::InvalidArgumentError("missing or non-integer field 'qid'");
  }
  return it->get<int64_t>();
}

absl::StatusOr<std::string> GetString(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    return absl::InvalidArgumentError(
        absl::StrCat("missing or non-string field '", key, "'"));
  }
  return it->get<std::string>();
}

template <typename Fn>
absl::Status ForEachLine(const std::string& path, Fn fn) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (absl::Status s = fn(line_no, line); !s.ok()) return s;
  }
  return absl::OkStatus();
}

absl::Status AtLine(const std::string& path, size_t line_no,
                    const absl::Status& s) {
  return absl::Status(s.code(),
                      absl::StrCat(path, ":", line_no, ": ", s.message()));
}

}  // namespace

std::string EncodeFeatureMatrix(const FeatureMatrix& m) {
  std::string out = "FMAT";
  out.reserve(kFmatHeaderBytes + 4 * m.data().size());
  PutU32(out, kFmatVersion);
  PutU32(out, static_cast<uint32_t>(m.rows()));
  PutU32(out, static_cast<uint32_t>(m.cols()));
  for (float f : m.data()) PutU32(out, std::bit_cast<uint32_t>(f));
  return out;
}

absl::StatusOr<FeatureMatrix> DecodeFeatureMatrix(std::string_view bytes) {
  if (bytes.size() < kFmatHeaderBytes) {
    return absl::DataLossError(absl::StrCat(
        "truncated FMAT header: expected ", kFmatHeaderBytes,
        " bytes, got ", bytes.size()));
  }
  if (bytes.substr(0, 4) != "FMAT") {
    return absl::DataLossError("bad FMAT magic");
  }
  const uint32_t version = GetU32(bytes, 4);
  if (version != kFmatVersion) {
    return absl::DataLossError(
        absl::StrCat("unsupported FMAT version ", version));
  }
  const uint64_t rows = GetU32(bytes, 8);
  const uint64_t cols = GetU32(bytes, 12);
  const uint64_t expected = kFmatHeaderBytes + 4 * rows * cols;
  if (bytes.size() != expected) {
    return absl::DataLossError(absl::StrCat(
        "FMAT size mismatch for ", rows, "x", cols, ": expected ", expected,
        " bytes, got ", bytes.size()));
  }
  std::vector<float> data(rows * cols);
  for (size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(GetU32(bytes, kFmatHeaderBytes + 4 * i));
  }
  return FeatureMatrix::Create(rows, cols, std::move(data));
}

absl::Status WriteFeatureFile(const FeatureMatrix& m, const std::string& path) {
  return WriteFileAtomic(path, EncodeFeatureMatrix(m));
}

absl::StatusOr<FeatureMatrix> ReadFeatureFile(const std::string& path) {
  auto bytes = ReadFileBytes(path);
  if (!bytes.ok()) return bytes.status();
  auto m = DecodeFeatureMatrix(*bytes);
  if (!m.ok()) {
    return absl::Status(m.status().code(),
                        absl::StrCat(path, ": ", m.status().message()));
  }
  return m;
}

absl::StatusOr<std::string> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

absl::Status WriteFileAtomic(const std::string& path, std::string_view bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return absl::InternalError(absl::StrCat("cannot write ", tmp));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      return absl::InternalError(absl::StrCat("short write to ", tmp));
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    return absl::InternalError(
        absl::StrCat("cannot rename ", tmp, " to ", path, ": ", ec.message()));
  }
  return absl::OkStatus();
}

std::string Sha256Hex(std::string_view bytes) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(),
         digest);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char c : digest) {
    out.push_back(kHex[c >> 4]);
    out.push_back(kHex[c & 0xf]);
  }
  return out;
}

absl::StatusOr<DatasetRecord> ParseDatasetRecord(std::string_view line) {
  auto j = ParseJsonObject(line);
  if (!j.ok()) return j.status();
  DatasetRecord r;
  auto qid = GetQid(*j);
  if (!qid.ok()) return qid.status();
  r.qid = *qid;
  auto query = GetString(*j, "query");
  if (!query.ok()) return query.status();
  r.query = *query;
  auto vid = GetString(*j, "vid");
  if (!vid.ok()) return vid.status();
  r.vid = *vid;
  auto duration = GetNumber(*j, "duration");
  if (!duration.ok()) return duration.status();
  r.duration = *duration;
  auto clip_len = GetNumber(*j, "clip_len");
  if (!clip_len.ok()) return clip_len.status();
  r.clip_len = *clip_len;

  auto it = j->find("relevant_windows");
  if (it == j->end() || !it->is_array()) {
    return absl::InvalidArgumentError(
        "missing or non-array field 'relevant_windows'");
  }
  for (const json& w : *it) {
    if (!w.is_array() || w.size() != 2 || !w[0].is_number() ||
        !w[1].is_number()) {
      return absl::InvalidArgumentError(
          "relevant_windows entries must be [start, end]");
    }
    r.windows.push_back({w[0].get<double>(), w[1].get<double>()});
  }
  return r;
}

absl::StatusOr<LoadedDataset> LoadDataset(const std::string& annotations_path,
                                          const std::string& features_dir,
                                          bool fail_fast) {
  LoadedDataset out;
  std::map<std::string, absl::StatusOr<FeatureMatrix>> features;
  std::set<int64_t> seen;

  absl::Status status = ForEachLine(
      annotations_path,
      [&](size_t line_no, const std::string& line) -> absl::Status {
        auto reject = [&](const absl::Status& s) -> absl::Status {
          if (fail_fast) return AtLine(annotations_path, line_no, s);
          out.diagnostics.push_back(
              absl::StrCat("line ", line_no, ": ", s.message()));
          return absl::OkStatus();
        };
        auto record = ParseDatasetRecord(line);
        if (!record.ok()) return reject(record.status());
        if (!seen.insert(record->qid).second) {
          return reject(absl::InvalidArgumentError(
              absl::StrCat("duplicate qid ", record->qid)));
        }
        auto [it, inserted] = features.try_emplace(record->vid, FeatureMatrix());
        if (inserted) {
          it->second = ReadFeatureFile(
              (std::filesystem::path(features_dir) / (record->vid + ".fmat"))
                  .string());
        }
        if (!it->second.ok()) return reject(it->second.status());

        VideoSample sample;
        sample.sample_id = absl::StrCat(record->qid);
        sample.video_id = record->vid;
        sample.duration = record->duration;
        sample.clip_len = record->clip_len;
        sample.features = *it->second;
        sample.query_text = record->query;
        sample.gt_moments = record->windows;
        auto made = MakeVideoSample(std::move(sample));
        if (!made.ok()) {
          return reject(absl::Status(
              made.status().code(),
              absl::StrCat("qid ", record->qid, ": ", made.status().message())));
        }
        out.samples.push_back(*std::move(made));
        out.records.push_back(*std::move(record));
        return absl::OkStatus();
      });
  if (!status.ok()) return status;
  return out;
}

absl::StatusOr<std::vector<QueryGroundTruth>> LoadGroundTruth(
    const std::string& path) {
  std::vector<QueryGroundTruth> out;
  absl::Status status = ForEachLine(
      path, [&](size_t line_no, const std::string& line) -> absl::Status {
        auto r = ParseDatasetRecord(line);
        if (!r.ok()) return AtLine(path, line_no, r.status());
        for (const Span& w : r->windows) {
          if (!IsValidSpan(w) || w.end > r->duration) {
            return AtLine(path, line_no,
                          absl::InvalidArgumentError(absl::StrCat(
                              "invalid span [", w.start, ", ", w.end, "]")));
          }
        }
        out.push_back({r->qid, r->duration, r->windows});
        return absl::OkStatus();
      });
  if (!status.ok()) return status;
  return out;
}

absl::StatusOr<std::vector<QueryPredictions>> LoadPredictions(
    const std::string& path) {
  std::vector<QueryPredictions> out;
  absl::Status status = ForEachLine(
      path, [&](size_t line_no, const std::string& line) -> absl::Status {
        auto j = ParseJsonObject(line);
        if (!j.ok()) return AtLine(path, line_no, j.status());
        auto qid = GetQid(*j);
        if (!qid.ok()) return AtLine(path, line_no, qid.status());
        auto it = j->find("pred_relevant_windows");
        if (it == j->end() || !it->is_array()) {
          return AtLine(path, line_no,
                        absl::InvalidArgumentError(
                            "missing or non-array 'pred_relevant_windows'"));
        }
        QueryPredictions q{*qid, {}};
        for (const json& w : *it) {
          if (!w.is_array() || w.size() != 3 || !w[0].is_number() ||
              !w[1].is_number() || !w[2].is_number()) {
            return AtLine(path, line_no,
                          absl::InvalidArgumentError(
                              "predictions must be [start, end, score]"));
          }
          q.windows.push_back(
              {{w[0].get<double>(), w[1].get<double>()}, w[2].get<double>()});
        }
        out.push_back(std::move(q));
        return absl::OkStatus();
      });
  if (!status.ok()) return status;
  return out;
}

}  // namespace momentkit
