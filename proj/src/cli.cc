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

#include "momentkit/cli.h"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "json.hpp"
#include "momentkit/eval.h"
#include "momentkit/io.h"
#include "momentkit/lengthcls.h"
#include "momentkit/matching.h"
#include "momentkit/momentmix.h"
#include "momentkit/random.h"
#include "momentkit/toytrainer.h"

namespace momentkit {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct CommonOptions {
  uint64_t seed = 0;
  std::string config_path;
  std::string preset;
  std::string out_dir;
  bool fail_fast = false;
  bool error_json = false;
};

// Shortest round-tripping decimal, "inf" for infinity.
std::string Num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return json(v).dump();
}

json ThresholdJson(double v) {
  if (std::isinf(v)) return "inf";
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    return static_cast<int64_t>(v);
  }
  return v;
}

json SchemeJson(const LengthClassScheme& scheme) {
  json arr = json::array();
  for (double t : scheme.thresholds()) arr.push_back(ThresholdJson(t));
  return arr;
}

json SpanJson(const Span& s) { return json::array({s.start, s.end}); }

absl::StatusOr<std::vector<double>> ParseThresholds(const json& j) {
  if (!j.is_array()) {
    return absl::InvalidArgumentError("thresholds must be an array");
  }
  std::vector<double> out;
  for (const json& v : j) {
    if (v.is_string() && (v == "inf" || v == "Infinity")) {
      out.push_back(kInf);
    } else if (v.is_number()) {
      out.push_back(v.get<double>());
    } else {
      return absl::InvalidArgumentError(
          "thresholds entries must be numbers or \"inf\"");
    }
  }
  return out;
}

// Reads the JSON config file, rejecting keys outside `allowed`.
absl::StatusOr<json> LoadConfig(const std::string& path,
                                const std::set<std::string>& allowed) {
  if (path.empty()) return json::object();
  auto bytes = ReadFileBytes(path);
  if (!bytes.ok()) return bytes.status();
  json j = json::parse(*bytes, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": config must be a JSON object"));
  }
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      return absl::InvalidArgumentError(absl::StrCat(
          path, ": unknown config key '", key, "' (allowed: ",
          absl::StrJoin(allowed, ", "), ")"));
    }
  }
  return j;
}

// Collects the artifacts of one run and writes them with a manifest.
class ArtifactWriter {
 public:
  ArtifactWriter(std::string subcommand, const CommonOptions& opts)
      : subcommand_(std::move(subcommand)), opts_(opts) {}

  absl::Status AddInput(const std::string& path) {
    auto bytes = ReadFileBytes(path);
    if (!bytes.ok()) return bytes.status();
    inputs_[path] = Sha256Hex(*bytes);
    return absl::OkStatus();
  }

  absl::Status Write(const std::string& relative, std::string_view bytes) {
    const fs::path path = fs::path(opts_.out_dir) / relative;
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
      return absl::InternalError(absl::StrCat(
          "cannot create ", path.parent_path().string(), ": ", ec.message()));
    }
    if (absl::Status s = WriteFileAtomic(path.string(), bytes); !s.ok()) {
      return s;
    }
    outputs_[relative] = Sha256Hex(bytes);
    return absl::OkStatus();
  }

  absl::Status WriteManifest(const json& config) {
    json m;
    m["tool"] = kToolName;
    m["version"] = kToolVersion;
    m["subcommand"] = subcommand_;
    m["seed"] = opts_.seed;
    m["config"] = config;
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    m["created_unix"] = std::chrono::duration_cast<std::chrono::seconds>(
                            std::chrono::system_clock::now().time_since_epoch())
                            .count();
    const fs::path path = fs::path(opts_.out_dir) / "manifest.json";
    return WriteFileAtomic(path.string(), m.dump(2) + "\n");
  }

 private:
  std::string subcommand_;
  const CommonOptions& opts_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
};

absl::Status RequireOutDir(const CommonOptions& opts) {
  if (opts.out_dir.empty()) {
    return absl::InvalidArgumentError("--out-dir is required");
  }
  return absl::OkStatus();
}

// ---------------------------------------------------------------- augment

struct AugmentArgs {
  std::string annotations;
  std::string features;
};

absl::Status RunAugment(const AugmentArgs& args, const CommonOptions& opts,
                        std::ostream& out) {
  if (absl::Status s = RequireOutDir(opts); !s.ok()) return s;
  auto cfg_json = LoadConfig(opts.config_path,
                             {"epsilon_cut", "min_subforegrounds",
                              "apply_probability", "temporal_words"});
  if (!cfg_json.ok()) return cfg_json.status();

  MomentMixConfig config;
  config.seed = opts.seed;
  try {
    const json& c = *cfg_json;
    if (c.contains("epsilon_cut")) config.epsilon_cut = c["epsilon_cut"];
    if (c.contains("min_subforegrounds")) {
      config.min_subforegrounds = c["min_subforegrounds"];
    }
    if (c.contains("apply_probability")) {
      config.apply_probability = c["apply_probability"];
    }
    if (c.contains("temporal_words")) {
      config.temporal_words = c["temporal_words"].get<std::set<std::string>>();
    }
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("config: ", e.what()));
  }
  if (!opts.preset.empty()) {
    if (opts.preset == "qvhighlights") {
      config.epsilon_cut = kEpsilonCutQvHighlights;
    } else if (opts.preset == "charades-sta") {
      config.epsilon_cut = kEpsilonCutCharadesSta;
    } else if (opts.preset == "tacos") {
      config.epsilon_cut = kEpsilonCutTacos;
    } else {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown augment preset '", opts.preset, "'"));
    }
  }
  if (absl::Status s = ValidateMomentMixConfig(config); !s.ok()) return s;

  auto loaded = LoadDataset(args.annotations, args.features, opts.fail_fast);
  if (!loaded.ok()) return loaded.status();
  auto pool = DonorPool::Create(loaded->samples);
  if (!pool.ok()) return pool.status();
  auto mixed = MomentMix(loaded->samples, config, *pool);
  if (!mixed.ok()) return mixed.status();

  ArtifactWriter writer("augment", opts);
  if (absl::Status s = writer.AddInput(args.annotations); !s.ok()) return s;
  std::set<std::string> vids;
  for (const DatasetRecord& r : loaded->records) vids.insert(r.vid);
  for (const std::string& vid : vids) {
    const std::string path = (fs::path(args.features) / (vid + ".fmat")).string();
    if (absl::Status s = writer.AddInput(path); !s.ok()) return s;
  }

  std::map<std::string, const DatasetRecord*> by_id;
  int64_t next_qid = 0;
  for (const DatasetRecord& r : loaded->records) {
    by_id[absl::StrCat(r.qid)] = &r;
    next_qid = std::max(next_qid, r.qid + 1);
  }

  std::string annotations;
  std::set<std::string> written_vids;
  for (const VideoSample& s : mixed->samples) {
    json row;
    auto it = by_id.find(s.sample_id);
    std::string vid = s.video_id;
    if (it != by_id.end()) {
      row["qid"] = it->second->qid;
    } else {
      const std::string origin =
          s.sample_id.substr(0, s.sample_id.size() - kAugmentedSuffix.size());
      const DatasetRecord* parent = by_id.at(origin);
      row["qid"] = next_qid++;
      row["aug_of"] = parent->qid;
      row["sample_id"] = s.sample_id;
      vid = absl::StrCat(parent->vid, "-mm-", parent->qid);
    }
    row["query"] = s.query_text;
    row["vid"] = vid;
    row["duration"] = s.duration;
    row["clip_len"] = s.clip_len;
    json windows = json::array();
    for (const Span& w : s.gt_moments) windows.push_back(SpanJson(w));
    row["relevant_windows"] = windows;
    annotations += row.dump() + "\n";
    if (written_vids.insert(vid).second) {
      if (absl::Status st = writer.Write(
              absl::StrCat("features/", vid, ".fmat"),
              EncodeFeatureMatrix(s.features));
          !st.ok()) {
        return st;
      }
    }
  }
  if (absl::Status s = writer.Write("annotations.jsonl", annotations); !s.ok()) {
    return s;
  }

  std::string records;
  for (const AugmentationRecord& r : mixed->records) {
    json row;
    row["sample_id"] = r.sample_id;
    row["origin_id"] = r.origin_id;
    json subs = json::array();
    for (const Span& w : r.sub_foreground_sources) subs.push_back(SpanJson(w));
    row["sub_foreground_sources"] = subs;
    json gts = json::array();
    for (const Span& w : r.new_gt) gts.push_back(SpanJson(w));
    row["new_gt"] = gts;
    json prov = json::array();
    for (const RowSource& src : r.provenance) {
      prov.push_back(json::array({src.sample_id, src.row}));
    }
    row["provenance"] = prov;
    records += row.dump() + "\n";
  }
  if (absl::Status s = writer.Write("provenance.jsonl", records); !s.ok()) {
    return s;
  }

  json summary;
  summary["input_samples"] = loaded->samples.size();
  summary["rejected_records"] = loaded->diagnostics;
  summary["applied"] = mixed->stats.applied;
  summary["filtered"] = mixed->stats.filtered;
  summary["not_applicable"] = mixed->stats.not_applicable;
  summary["skipped"] = mixed->stats.skipped;
  summary["fallbacks"] = mixed->stats.fallbacks;
  if (absl::Status s = writer.Write("summary.json", summary.dump(2) + "\n");
      !s.ok()) {
    return s;
  }

  json effective;
  effective["epsilon_cut"] = config.epsilon_cut;
  effective["min_subforegrounds"] = config.min_subforegrounds;
  effective["apply_probability"] = config.apply_probability;
  effective["temporal_words"] = config.temporal_words;
  if (absl::Status s = writer.WriteManifest(effective); !s.ok()) return s;
  out << summary.dump() << "\n";
  return absl::OkStatus();
}

// ------------------------------------------------------------- thresholds

struct ThresholdArgs {
  std::string input;
  int k = 3;
  int window = kDefaultSmoothingWindow;
};

// CSV with header "length,score" (or any two-column header).
absl::StatusOr<std::vector<CurvePoint>> ReadCurveCsv(const std::string& path) {
  auto bytes = ReadFileBytes(path);
  if (!bytes.ok()) return bytes.status();
  std::vector<CurvePoint> points;
  size_t line_no = 0;
  for (absl::string_view line : absl::StrSplit(*bytes, '\n')) {
    ++line_no;
    std::string l(line);
    if (!l.empty() && l.back() == '\r') l.pop_back();
    if (l.empty() || line_no == 1) continue;
    std::vector<std::string> cells = absl::StrSplit(l, ',');
    CurvePoint p;
    size_t used_a = 0;
    size_t used_b = 0;
    try {
      if (cells.size() != 2) throw std::invalid_argument("cells");
      p.length = std::stod(cells[0], &used_a);
      p.score = std::stod(cells[1], &used_b);
    } catch (const std::exception&) {
      used_a = 0;
    }
    if (cells.size() != 2 || used_a == 0 || used_b == 0) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ":", line_no, ": expected 'length,score'"));
    }
    points.push_back(p);
  }
  return points;
}

absl::Status RunThresholds(const ThresholdArgs& args, const CommonOptions& opts,
                           std::ostream& out) {
  json result;
  absl::StatusOr<LengthClassScheme> scheme;
  if (!opts.preset.empty() == !args.input.empty()) {
    return absl::InvalidArgumentError(
        "give exactly one of --preset or --input");
  }
  ArtifactWriter writer("thresholds", opts);
  if (!opts.preset.empty()) {
    scheme = PresetScheme(opts.preset);
    if (!scheme.ok()) {
      return absl::InvalidArgumentError(absl::StrCat(
          scheme.status().message(), " (known: ",
          absl::StrJoin(PresetNames(), ", "), ")"));
    }
    result["preset"] = opts.preset;
  } else {
    auto points = ReadCurveCsv(args.input);
    if (!points.ok()) return points.status();
    scheme = DeriveScheme(*points, args.k, args.window);
    if (!scheme.ok()) return scheme.status();
    if (absl::Status s = writer.AddInput(args.input); !s.ok()) return s;
  }
  result["thresholds"] = SchemeJson(*scheme);
  out << result.dump() << "\n";
  if (!opts.out_dir.empty()) {
    if (absl::Status s = writer.Write("scheme.json", result.dump(2) + "\n");
        !s.ok()) {
      return s;
    }
    json config;
    config["k"] = args.k;
    config["window"] = args.window;
    config["preset"] = opts.preset;
    return writer.WriteManifest(config);
  }
  return absl::OkStatus();
}

// ------------------------------------------------------------- match-demo

absl::Status RunMatchDemo(const CommonOptions& opts, std::ostream& out) {
  auto cfg = LoadConfig(opts.config_path,
                        {"duration", "n_q", "gts", "preds", "thresholds"});
  if (!cfg.ok()) return cfg.status();
  const json& c = *cfg;
  Rng rng = MakeStream(opts.seed, "match-demo");

  absl::StatusOr<LengthClassScheme> scheme =
      PresetScheme(opts.preset.empty() ? "qvhighlights" : opts.preset);
  double duration = 150.0;
  int n_q = 2;
  std::vector<Span> gts;
  std::vector<Prediction> preds;
  try {
    if (c.contains("thresholds")) {
      auto t = ParseThresholds(c["thresholds"]);
      if (!t.ok()) return t.status();
      scheme = LengthClassScheme::Create(*t);
    }
    if (!scheme.ok()) return scheme.status();
    if (c.contains("duration")) duration = c["duration"];
    if (c.contains("n_q")) n_q = c["n_q"];
    if (c.contains("gts")) {
      for (const json& g : c["gts"]) gts.push_back({g.at(0), g.at(1)});
    }
    if (c.contains("preds")) {
      for (const json& p : c["preds"]) {
        preds.push_back({{p.at(0), p.at(1)}, p.at(2), p.at(3).get<int>()});
      }
    }
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("config: ", e.what()));
  }
  if (!(duration > 0.0) || n_q < 1) {
    return absl::InvalidArgumentError("duration must be > 0 and n_q >= 1");
  }
  if (gts.empty()) {
    // One gt per class, when it fits in the video.
    double cursor = 0.0;
    for (int k = 0; k < scheme->n_classes(); ++k) {
      const double lo = scheme->lower(k);
      const double hi = std::min(scheme->upper(k), duration);
      if (hi <= lo) continue;
      const double len =
          std::uniform_real_distribution<double>(lo + 0.5 * (hi - lo), hi)(rng);
      if (cursor + len > duration) break;
      gts.push_back({cursor, cursor + len});
      cursor += len;
    }
  }
  if (preds.empty()) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < scheme->n_classes(); ++k) {
      for (int j = 0; j < n_q; ++j) {
        const double a = u(rng) * duration;
        const double b = u(rng) * duration;
        preds.push_back({{std::min(a, b), std::max(a, b) + 1e-3}, u(rng), k});
      }
    }
  }

  auto lengthwise = LengthwiseMatch(preds, gts, duration, *scheme, n_q, {});
  if (!lengthwise.ok()) return lengthwise.status();
  auto unified = UnifiedMatch(preds, gts, duration, {});
  if (!unified.ok()) return unified.status();

  json result;
  result["duration"] = duration;
  result["n_q"] = n_q;
  result["thresholds"] = SchemeJson(*scheme);
  json jg = json::array();
  for (const Span& g : gts) {
    jg.push_back({{"span", SpanJson(g)}, {"class", ClassOf(g.length(), *scheme)}});
  }
  result["gts"] = jg;
  json jp = json::array();
  for (const Prediction& p : preds) {
    jp.push_back({{"span", SpanJson(p.span)},
                  {"score", p.score},
                  {"class", *p.class_slot}});
  }
  result["preds"] = jp;
  json per_class = json::array();
  for (const Assignment& a : *lengthwise) per_class.push_back(a.pairs);
  result["lengthwise"] = per_class;
  result["unified"] = unified->pairs;
  out << result.dump(2) << "\n";

  if (!opts.out_dir.empty()) {
    ArtifactWriter writer("match-demo", opts);
    if (absl::Status s = writer.Write("match.json", result.dump(2) + "\n");
        !s.ok()) {
      return s;
    }
    return writer.WriteManifest(c);
  }
  return absl::OkStatus();
}

// -------------------------------------------------------------- toy-train

struct ToyTrainArgs {
  std::string strategy;
};

absl::Status RunToyTrain(const ToyTrainArgs& args, const CommonOptions& opts,
                         std::ostream& out) {
  if (absl::Status s = RequireOutDir(opts); !s.ok()) return s;
  auto cfg = LoadConfig(
      opts.config_path,
      {"n_samples", "duration", "class_ranges", "gts_min", "gts_max", "n_q",
       "init_width", "thresholds", "learning_rate", "epochs", "lambda_l1",
       "lambda_giou", "lambda_conf", "strategy", "cost"});
  if (!cfg.ok()) return cfg.status();
  const json& c = *cfg;

  SyntheticSpec spec;
  spec.class_ranges = {{2.0, 8.0}, {12.0, 25.0}, {35.0, 55.0}};
  spec.gts_min = 1;
  spec.gts_max = 1;
  spec.seed = opts.seed;
  TrainConfig train;
  train.seed = opts.seed;
  int n_q = 1;
  double init_width = 0.25;
  std::vector<double> thresholds = {10.0, 30.0, kInf};
  std::string strategy = "lengthwise";
  try {
    if (c.contains("n_samples")) spec.n_samples = c["n_samples"];
    if (c.contains("duration")) spec.duration = c["duration"];
    if (c.contains("class_ranges")) {
      spec.class_ranges.clear();
      for (const json& r : c["class_ranges"]) {
        spec.class_ranges.push_back({r.at(0), r.at(1)});
      }
    }
    if (c.contains("gts_min")) spec.gts_min = c["gts_min"];
    if (c.contains("gts_max")) spec.gts_max = c["gts_max"];
    if (c.contains("n_q")) n_q = c["n_q"];
    if (c.contains("init_width")) init_width = c["init_width"];
    if (c.contains("thresholds")) {
      auto t = ParseThresholds(c["thresholds"]);
      if (!t.ok()) return t.status();
      thresholds = *t;
    }
    if (c.contains("learning_rate")) train.learning_rate = c["learning_rate"];
    if (c.contains("epochs")) train.epochs = c["epochs"];
    if (c.contains("lambda_l1")) train.lambda_l1 = c["lambda_l1"];
    if (c.contains("lambda_giou")) train.lambda_giou = c["lambda_giou"];
    if (c.contains("lambda_conf")) train.lambda_conf = c["lambda_conf"];
    if (c.contains("strategy")) strategy = c["strategy"];
    if (c.contains("cost")) {
      const json& k = c["cost"];
      if (k.contains("w_l1")) train.cost.w_l1 = k["w_l1"];
      if (k.contains("w_giou")) train.cost.w_giou = k["w_giou"];
      if (k.contains("w_conf")) train.cost.w_conf = k["w_conf"];
    }
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("config: ", e.what()));
  }
  if (!args.strategy.empty()) strategy = args.strategy;
  auto parsed = ParseMatchStrategy(strategy);
  if (!parsed.ok()) return parsed.status();
  train.strategy = *parsed;

  absl::StatusOr<LengthClassScheme> scheme =
      opts.preset.empty() ? LengthClassScheme::Create(thresholds)
                          : PresetScheme(opts.preset);
  if (!scheme.ok()) return scheme.status();
  if (absl::Status s = CheckRangesAgainstScheme(spec, *scheme); !s.ok()) {
    return s;
  }
  auto data = GenerateSynthetic(spec);
  if (!data.ok()) return data.status();
  Rng init_rng = MakeStream(opts.seed, "init");
  auto bank = InitQueryBank(*scheme, n_q, init_width, init_rng);
  if (!bank.ok()) return bank.status();
  auto result = Train(*bank, *data, train);
  if (!result.ok()) return result.status();

  ArtifactWriter writer("toy-train", opts);
  std::string history = "epoch,loss,loss_delta,r1_short,r1_middle,r1_long\n";
  for (const EpochRecord& r : result->history) {
    auto r1 = [&](const char* name) -> std::string {
      auto it = r.heldout_r1.find(name);
      return it == r.heldout_r1.end() ? "" : Num(it->second);
    };
    absl::StrAppend(&history, r.epoch, ",", Num(r.loss), ",",
                    Num(r.loss_delta), ",", r1("short"), ",", r1("middle"),
                    ",", r1("long"), "\n");
  }
  if (absl::Status s = writer.Write("history.csv", history); !s.ok()) return s;

  json jb;
  jb["thresholds"] = SchemeJson(result->bank.scheme);
  jb["n_q"] = result->bank.n_q;
  json slots = json::array();
  for (size_t i = 0; i < result->bank.slots.size(); ++i) {
    const Slot& s = result->bank.slots[i];
    slots.push_back({{"class", result->bank.class_of_slot(i)},
                     {"center", s.center},
                     {"width", s.width},
                     {"conf_logit", s.conf_logit}});
  }
  jb["slots"] = slots;
  if (absl::Status s = writer.Write("bank.json", jb.dump(2) + "\n"); !s.ok()) {
    return s;
  }

  const EpochRecord& last = result->history.back();
  json specialization = json::array();
  for (const ClassSpecialization& cs :
       SpecializationReport(result->bank, spec.duration)) {
    specialization.push_back({{"class", cs.class_index},
                              {"lower", ThresholdJson(cs.lower)},
                              {"upper", ThresholdJson(cs.upper)},
                              {"mean_width", cs.mean_width},
                              {"inside_fraction", cs.inside_fraction}});
  }
  json report = {{"strategy", std::string(MatchStrategyName(train.strategy))},
                 {"epochs", train.epochs},
                 {"n_train", result->n_train},
                 {"n_heldout", result->n_heldout},
                 {"final_loss", last.loss},
                 {"heldout_r1", last.heldout_r1},
                 {"specialization", specialization}};
  if (absl::Status s = writer.Write("report.json", report.dump(2) + "\n");
      !s.ok()) {
    return s;
  }

  json effective;
  effective["n_samples"] = spec.n_samples;
  effective["duration"] = spec.duration;
  json ranges = json::array();
  for (const auto& [lo, hi] : spec.class_ranges) ranges.push_back({lo, hi});
  effective["class_ranges"] = ranges;
  effective["gts_min"] = spec.gts_min;
  effective["gts_max"] = spec.gts_max;
  effective["n_q"] = n_q;
  effective["init_width"] = init_width;
  effective["thresholds"] = SchemeJson(*scheme);
  effective["learning_rate"] = train.learning_rate;
  effective["epochs"] = train.epochs;
  effective["lambda_l1"] = train.lambda_l1;
  effective["lambda_giou"] = train.lambda_giou;
  effective["lambda_conf"] = train.lambda_conf;
  effective["strategy"] = std::string(MatchStrategyName(train.strategy));
  effective["cost"] = {{"w_l1", train.cost.w_l1},
                       {"w_giou", train.cost.w_giou},
                       {"w_conf", train.cost.w_conf}};
  if (absl::Status s = writer.WriteManifest(effective); !s.ok()) return s;

  json summary = {{"final_loss", last.loss}, {"heldout_r1", last.heldout_r1}};
  out << summary.dump() << "\n";
  return absl::OkStatus();
}

// ----------------------------------------------------------- eval/analyze

struct EvalArgs {
  std::string predictions;
  std::string ground_truth;
};

absl::StatusOr<std::vector<EvalQuery>> LoadEvalQueries(
    const EvalArgs& args, ArtifactWriter& writer,
    std::vector<std::string>* diagnostics) {
  auto preds = LoadPredictions(args.predictions);
  if (!preds.ok()) return preds.status();
  auto gts = LoadGroundTruth(args.ground_truth);
  if (!gts.ok()) return gts.status();
  if (absl::Status s = writer.AddInput(args.predictions); !s.ok()) return s;
  if (absl::Status s = writer.AddInput(args.ground_truth); !s.ok()) return s;
  return JoinByQid(*preds, *gts, diagnostics);
}

absl::StatusOr<EvalConfig> LoadEvalConfig(const CommonOptions& opts,
                                          json* effective) {
  auto cfg = LoadConfig(opts.config_path, {"iou_thresholds", "r1_thresholds",
                                           "confusion_bin_width"});
  if (!cfg.ok()) return cfg.status();
  EvalConfig config;
  try {
    const json& c = *cfg;
    if (c.contains("iou_thresholds")) {
      config.iou_thresholds = c["iou_thresholds"].get<std::vector<double>>();
    }
    if (c.contains("r1_thresholds")) {
      config.r1_thresholds = c["r1_thresholds"].get<std::vector<double>>();
    }
    if (c.contains("confusion_bin_width")) {
      config.confusion_bin_width = c["confusion_bin_width"];
    }
  } catch (const json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("config: ", e.what()));
  }
  if (absl::Status s = ValidateEvalConfig(config); !s.ok()) return s;
  (*effective)["iou_thresholds"] = config.iou_thresholds;
  (*effective)["r1_thresholds"] = config.r1_thresholds;
  (*effective)["confusion_bin_width"] = config.confusion_bin_width;
  return config;
}

json SweepJson(const ThresholdSweep& sweep) {
  json at = json::object();
  for (const auto& [t, v] : sweep.at) at[Num(t)] = v;
  return {{"at", at}, {"average", sweep.average}, {"n_queries", sweep.n_queries}};
}

std::string ConfusionCsv(const ConfusionMatrix& m, bool percent) {
  const size_t n = m.counts.size();
  std::string csv = "gt_bin";
  for (size_t b = 0; b < n; ++b) {
    absl::StrAppend(&csv, ",pred_", Num(b * m.bin_width), "-",
                    Num((b + 1) * m.bin_width));
  }
  csv += "\n";
  for (size_t g = 0; g < n; ++g) {
    absl::StrAppend(&csv, Num(g * m.bin_width), "-", Num((g + 1) * m.bin_width));
    for (size_t p = 0; p < n; ++p) {
      csv += ",";
      csv += percent ? Num(m.row_percent[g][p]) : absl::StrCat(m.counts[g][p]);
    }
    csv += "\n";
  }
  return csv;
}

absl::Status RunEval(const EvalArgs& args, const CommonOptions& opts,
                     std::ostream& out) {
  if (absl::Status s = RequireOutDir(opts); !s.ok()) return s;
  json effective;
  auto config = LoadEvalConfig(opts, &effective);
  if (!config.ok()) return config.status();
  ArtifactWriter writer("eval", opts);
  std::vector<std::string> diagnostics;
  auto queries = LoadEvalQueries(args, writer, &diagnostics);
  if (!queries.ok()) return queries.status();

  const MetricSummary summary = Evaluate(*queries, *config);
  json metrics;
  metrics["r1"] = SweepJson(summary.r1);
  metrics["map"] = SweepJson(summary.map);
  metrics["diagnostics"] = diagnostics;
  if (absl::Status s = writer.Write("metrics.json", metrics.dump(2) + "\n");
      !s.ok()) {
    return s;
  }

  std::string buckets = "bucket,metric,threshold,value,n_queries\n";
  for (const BucketMetrics& b : PerLengthBreakdown(*queries, *config)) {
    auto emit = [&](const char* metric,
                    const std::optional<ThresholdSweep>& sweep) {
      if (!sweep.has_value()) {
        absl::StrAppend(&buckets, b.bucket.name, ",", metric, ",,,0\n");
        return;
      }
      for (const auto& [t, v] : sweep->at) {
        absl::StrAppend(&buckets, b.bucket.name, ",", metric, ",", Num(t), ",",
                        Num(v), ",", sweep->n_queries, "\n");
      }
      absl::StrAppend(&buckets, b.bucket.name, ",", metric, ",avg,",
                      Num(sweep->average), ",", sweep->n_queries, "\n");
    };
    emit("r1", b.r1);
    emit("map", b.map);
  }
  if (absl::Status s = writer.Write("buckets.csv", buckets); !s.ok()) return s;

  auto confusion = LengthConfusion(*queries, config->confusion_bin_width);
  if (!confusion.ok()) return confusion.status();
  if (absl::Status s =
          writer.Write("confusion.csv", ConfusionCsv(*confusion, false));
      !s.ok()) {
    return s;
  }
  if (absl::Status s = writer.WriteManifest(effective); !s.ok()) return s;
  out << metrics.dump() << "\n";
  return absl::OkStatus();
}

absl::Status RunAnalyze(const EvalArgs& args, const CommonOptions& opts,
                        std::ostream& out) {
  if (absl::Status s = RequireOutDir(opts); !s.ok()) return s;
  json effective;
  auto config = LoadEvalConfig(opts, &effective);
  if (!config.ok()) return config.status();
  ArtifactWriter writer("analyze", opts);
  std::vector<std::string> diagnostics;
  auto queries = LoadEvalQueries(args, writer, &diagnostics);
  if (!queries.ok()) return queries.status();

  std::string rates = "bucket,total,inside,rate\n";
  json jr = json::object();
  for (const CenterRate& r : CenterInGtRate(*queries, config->buckets)) {
    absl::StrAppend(&rates, r.bucket.name, ",", r.total, ",", r.inside, ",",
                    r.rate.has_value() ? Num(*r.rate) : "", "\n");
    jr[r.bucket.name] = r.rate.has_value() ? json(*r.rate) : json(nullptr);
  }
  if (absl::Status s = writer.Write("center_rate.csv", rates); !s.ok()) {
    return s;
  }
  auto confusion = LengthConfusion(*queries, config->confusion_bin_width);
  if (!confusion.ok()) return confusion.status();
  if (absl::Status s = writer.Write("confusion_percent.csv",
                                    ConfusionCsv(*confusion, true));
      !s.ok()) {
    return s;
  }
  if (absl::Status s = writer.WriteManifest(effective); !s.ok()) return s;
  out << json({{"center_in_gt_rate", jr}, {"diagnostics", diagnostics}}).dump()
      << "\n";
  return absl::OkStatus();
}

void ReportError(const absl::Status& status, const CommonOptions& opts,
                 int code, std::ostream& err) {
  if (opts.error_json) {
    json e = {{"error",
               {{"code", absl::StatusCodeToString(status.code())},
                {"exit", code},
                {"message", std::string(status.message())}}}};
    err << e.dump() << "\n";
  } else {
    err << "error: " << status.message() << "\n";
  }
}

}  // namespace

int ExitCodeFor(const absl::Status& status) {
  if (status.ok()) return kExitOk;
  if (status.code() == absl::StatusCode::kInternal ||
      status.code() == absl::StatusCode::kUnknown) {
    return kExitInternal;
  }
  return kExitValidation;
}

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Moment retrieval toolkit: augmentation, length-aware "
               "matching, and evaluation.",
               kToolName};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kToolVersion);

  CommonOptions opts;
  app.add_option("--seed", opts.seed, "Seed for all randomness");
  app.add_option("--config", opts.config_path, "JSON config file");
  app.add_option("--preset", opts.preset, "Named preset");
  app.add_option("--out-dir", opts.out_dir, "Directory for artifacts");
  app.add_flag("--fail-fast", opts.fail_fast,
               "Stop at the first invalid input record");
  app.add_flag("--error-json", opts.error_json,
               "Report errors as JSON on stderr");

  AugmentArgs augment_args;
  CLI::App* augment = app.add_subcommand("augment", "Apply MomentMix");
  augment->add_option("--annotations", augment_args.annotations)->required();
  augment->add_option("--features", augment_args.features)->required();

  ThresholdArgs threshold_args;
  CLI::App* thresholds =
      app.add_subcommand("thresholds", "Length-class thresholds");
  thresholds->add_option("--input", threshold_args.input,
                         "CSV of per-moment length,score");
  thresholds->add_option("--k", threshold_args.k, "Number of classes")
      ->check(CLI::PositiveNumber);
  thresholds->add_option("--window", threshold_args.window,
                         "Smoothing window (odd)")
      ->check(CLI::PositiveNumber);

  CLI::App* match_demo =
      app.add_subcommand("match-demo", "Length-wise vs unified matching");

  ToyTrainArgs toy_args;
  CLI::App* toy_train =
      app.add_subcommand("toy-train", "Train a toy query bank");
  toy_train->add_option("--strategy", toy_args.strategy,
                        "lengthwise, unified or groupwise");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "Moment retrieval metrics");
  eval->add_option("--predictions", eval_args.predictions)->required();
  eval->add_option("--ground-truth", eval_args.ground_truth)->required();

  EvalArgs analyze_args;
  CLI::App* analyze = app.add_subcommand("analyze", "Top-1 diagnostics");
  analyze->add_option("--predictions", analyze_args.predictions)->required();
  analyze->add_option("--ground-truth", analyze_args.ground_truth)->required();

  std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1),
                               args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  absl::Status status;
  try {
    if (augment->parsed()) {
      status = RunAugment(augment_args, opts, out);
    } else if (thresholds->parsed()) {
      status = RunThresholds(threshold_args, opts, out);
    } else if (match_demo->parsed()) {
      status = RunMatchDemo(opts, out);
    } else if (toy_train->parsed()) {
      status = RunToyTrain(toy_args, opts, out);
    } else if (eval->parsed()) {
      status = RunEval(eval_args, opts, out);
    } else if (analyze->parsed()) {
      status = RunAnalyze(analyze_args, opts, out);
    }
  } catch (const std::exception& e) {
    status = absl::InternalError(e.what());
  }
  if (status.ok()) return kExitOk;
  const int code = ExitCodeFor(status);
  ReportError(status, opts, code, err);
  return code;
}

}  // namespace momentkit
