/* Copyright 2026 The Podscale Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "podscale/scenario.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "json.hpp"
#include "podscale/status_macros.h"

namespace podscale {
namespace {

using json = nlohmann::ordered_json;

std::string Child(const std::string& path, absl::string_view key) {
  return path.empty() ? std::string(key) : absl::StrCat(path, ".", key);
}

std::string Index(const std::string& path, size_t i) {
  return absl::StrCat(path, "[", i, "]");
}

absl::Status Invalid(const std::string& path, absl::string_view message) {
  return absl::InvalidArgumentError(absl::StrCat(path, ": ", message));
}

absl::Status ExpectObject(const json& j, const std::string& path) {
  if (!j.is_object()) return Invalid(path, "expected an object");
  return absl::OkStatus();
}

absl::Status CheckKeys(const json& j, const std::string& path,
                       std::initializer_list<absl::string_view> allowed) {
  PODSCALE_RETURN_IF_ERROR(ExpectObject(j, path));
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) ==
        allowed.end()) {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown key: ", Child(path, item.key()),
                       " (allowed: ", absl::StrJoin(allowed, ", "), ")"));
    }
  }
  return absl::OkStatus();
}

absl::Status Convert(const json& j, const std::string& path, int64_t* out) {
  if (!j.is_number_integer()) return Invalid(path, "expected an integer");
  *out = j.get<int64_t>();
  return absl::OkStatus();
}

absl::Status Convert(const json& j, const std::string& path, int* out) {
  int64_t v = 0;
  PODSCALE_RETURN_IF_ERROR(Convert(j, path, &v));
  if (v < INT32_MIN || v > INT32_MAX) return Invalid(path, "out of range");
  *out = static_cast<int>(v);
  return absl::OkStatus();
}

absl::Status Convert(const json& j, const std::string& path, double* out) {
  if (!j.is_number()) return Invalid(path, "expected a number");
  *out = j.get<double>();
  if (!std::isfinite(*out)) return Invalid(path, "must be finite");
  return absl::OkStatus();
}

absl::Status Convert(const json& j, const std::string& path, float* out) {
  double v;
  PODSCALE_RETURN_IF_ERROR(Convert(j, path, &v));
  *out = static_cast<float>(v);
  return absl::OkStatus();
}

absl::Status Convert(const json& j, const std::string& path, bool* out) {
  if (!j.is_boolean()) return Invalid(path, "expected true or false");
  *out = j.get<bool>();
  return absl::OkStatus();
}

absl::Status Convert(const json& j, const std::string& path, std::string* out) {
  if (!j.is_string()) return Invalid(path, "expected a string");
  *out = j.get<std::string>();
  return absl::OkStatus();
}

absl::Status Convert(const json& j, const std::string& path, ElemType* out) {
  std::string s;
  PODSCALE_RETURN_IF_ERROR(Convert(j, path, &s));
  if (s == "f32") {
    *out = ElemType::kF32;
  } else if (s == "bf16") {
    *out = ElemType::kBF16;
  } else {
    return Invalid(path,
                   absl::StrCat("unknown element type '", s, "' (f32, bf16)"));
  }
  return absl::OkStatus();
}

absl::Status Convert(const json& j, const std::string& path, Direction* out) {
  std::string s;
  PODSCALE_RETURN_IF_ERROR(Convert(j, path, &s));
  if (s == "bidirectional") {
    *out = Direction::kBidirectional;
  } else if (s == "unidirectional") {
    *out = Direction::kUnidirectional;
  } else {
    return Invalid(path, absl::StrCat("unknown direction '", s,
                                      "' (unidirectional, bidirectional)"));
  }
  return absl::OkStatus();
}

absl::Status Convert(const json& j, const std::string& path,
                     OptimizerKind* out) {
  std::string s;
  PODSCALE_RETURN_IF_ERROR(Convert(j, path, &s));
  absl::StatusOr<OptimizerKind> kind = ParseOptimizerKind(s);
  if (!kind.ok()) return Invalid(path, kind.status().message());
  *out = *kind;
  return absl::OkStatus();
}

template <typename T>
absl::Status Convert(const json& j, const std::string& path,
                     std::vector<T>* out) {
  if (!j.is_array()) return Invalid(path, "expected an array");
  out->clear();
  for (size_t i = 0; i < j.size(); ++i) {
    T v;
    PODSCALE_RETURN_IF_ERROR(Convert(j[i], Index(path, i), &v));
    out->push_back(v);
  }
  return absl::OkStatus();
}

// Reads obj[key] into *out when present.
template <typename T>
absl::Status Read(const json& obj, const std::string& path,
                  absl::string_view key, T* out) {
  auto it = obj.find(std::string(key));
  if (it == obj.end()) return absl::OkStatus();
  return Convert(*it, Child(path, key), out);
}

absl::Status Check(bool ok, const std::string& path,
                   absl::string_view message) {
  return ok ? absl::OkStatus() : Invalid(path, message);
}

absl::Status ParseMesh(const json& j, MeshConfig* m) {
  const std::string path = "mesh";
  PODSCALE_RETURN_IF_ERROR(
      CheckKeys(j, path,
                {"pods", "pod_x", "pod_y", "y_torus", "x_torus",
                 "devices_per_host", "allow_tile_straddle"}));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "pods", &m->pods));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "pod_x", &m->pod_x));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "pod_y", &m->pod_y));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "y_torus", &m->y_torus));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "x_torus", &m->x_torus));
  PODSCALE_RETURN_IF_ERROR(
      Read(j, path, "devices_per_host", &m->devices_per_host));
  PODSCALE_RETURN_IF_ERROR(
      Read(j, path, "allow_tile_straddle", &m->allow_tile_straddle));
  PODSCALE_RETURN_IF_ERROR(Check(m->pods >= 1, "mesh.pods", "must be >= 1"));
  PODSCALE_RETURN_IF_ERROR(Check(m->pod_x >= 1, "mesh.pod_x", "must be >= 1"));
  PODSCALE_RETURN_IF_ERROR(Check(m->pod_y >= 1, "mesh.pod_y", "must be >= 1"));
  return Check(m->devices_per_host >= 1, "mesh.devices_per_host",
               "must be >= 1");
}

absl::Status ParsePayload(const json& j, PayloadConfig* p) {
  const std::string path = "payload";
  PODSCALE_RETURN_IF_ERROR(CheckKeys(
      j, path, {"elements", "elem_type", "y_direction", "x_direction"}));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "elements", &p->elements));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "elem_type", &p->elem_type));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "y_direction", &p->y_direction));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "x_direction", &p->x_direction));
  return Check(p->elements >= 0, "payload.elements", "must be >= 0");
}

absl::Status ParseLinkValues(const json& j, const std::string& path,
                             std::array<double, kNumLinkClasses>* values) {
  PODSCALE_RETURN_IF_ERROR(
      CheckKeys(j, path, {"within_pod", "cross_pod", "torus_wrap"}));
  for (int i = 0; i < kNumLinkClasses; ++i) {
    PODSCALE_RETURN_IF_ERROR(
        Read(j, path, LinkClassName(static_cast<LinkClass>(i)), &(*values)[i]));
  }
  return absl::OkStatus();
}

absl::Status ParseCost(const json& j, LinkCostModel* cost) {
  PODSCALE_RETURN_IF_ERROR(CheckKeys(j, "cost", {"alpha", "beta"}));
  if (j.contains("alpha")) {
    PODSCALE_RETURN_IF_ERROR(
        ParseLinkValues(j["alpha"], "cost.alpha", &cost->alpha));
  }
  if (j.contains("beta")) {
    PODSCALE_RETURN_IF_ERROR(
        ParseLinkValues(j["beta"], "cost.beta", &cost->beta));
  }
  absl::Status valid = cost->Validate();
  if (!valid.ok()) return Invalid("cost", valid.message());
  return absl::OkStatus();
}

absl::Status ParseCompute(const json& j, ComputeModel* c) {
  const std::string path = "compute";
  PODSCALE_RETURN_IF_ERROR(
      CheckKeys(j, path, {"work_per_example", "flops_rate", "fixed_overhead"}));
  PODSCALE_RETURN_IF_ERROR(
      Read(j, path, "work_per_example", &c->work_per_example));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "flops_rate", &c->flops_rate));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "fixed_overhead", &c->fixed_overhead));
  absl::Status valid = c->Validate();
  if (!valid.ok()) return Invalid(path, valid.message());
  return absl::OkStatus();
}

absl::Status ParseOptimizer(const json& j, OptimizerConfig* o) {
  const std::string path = "optimizer";
  PODSCALE_RETURN_IF_ERROR(CheckKeys(
      j, path,
      {"kind", "learning_rate", "momentum", "beta1", "beta2", "epsilon",
       "weight_decay", "clip_global_norm", "flops_per_param", "cost_chips"}));
  OptimizerSpec& s = o->spec;
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "kind", &s.kind));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "learning_rate", &s.learning_rate));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "momentum", &s.momentum));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "beta1", &s.beta1));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "beta2", &s.beta2));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "epsilon", &s.epsilon));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "weight_decay", &s.weight_decay));
  PODSCALE_RETURN_IF_ERROR(
      Read(j, path, "clip_global_norm", &s.clip_global_norm));
  PODSCALE_RETURN_IF_ERROR(
      Read(j, path, "flops_per_param", &o->flops_per_param));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "cost_chips", &o->cost_chips));
  PODSCALE_RETURN_IF_ERROR(Check(o->flops_per_param >= 0.0,
                                 "optimizer.flops_per_param", "must be >= 0"));
  return Check(o->cost_chips >= 0, "optimizer.cost_chips", "must be >= 0");
}

absl::Status ParseEpochs(const json& j, EpochTable* table) {
  const std::string path = "epochs";
  if (!j.is_array()) return Invalid(path, "expected an array");
  std::map<int64_t, double> entries;
  for (size_t i = 0; i < j.size(); ++i) {
    const std::string at = Index(path, i);
    PODSCALE_RETURN_IF_ERROR(CheckKeys(j[i], at, {"batch", "epochs"}));
    int64_t batch = 0;
    double epochs = 0.0;
    if (!j[i].contains("batch")) return Invalid(at, "missing key: batch");
    if (!j[i].contains("epochs")) return Invalid(at, "missing key: epochs");
    PODSCALE_RETURN_IF_ERROR(Read(j[i], at, "batch", &batch));
    PODSCALE_RETURN_IF_ERROR(Read(j[i], at, "epochs", &epochs));
    PODSCALE_RETURN_IF_ERROR(
        Check(batch >= 1, Child(at, "batch"), "must be >= 1"));
    PODSCALE_RETURN_IF_ERROR(
        Check(epochs > 0.0, Child(at, "epochs"), "must be > 0"));
    if (!entries.emplace(batch, epochs).second) {
      return Invalid(Child(at, "batch"),
                     absl::StrCat("duplicate batch ", batch));
    }
  }
  *table = EpochTable(std::move(entries));
  return absl::OkStatus();
}

absl::Status ParseSweep(const json& j, std::vector<SweepPoint>* points) {
  const std::string path = "sweep";
  if (!j.is_array()) return Invalid(path, "expected an array");
  points->clear();
  for (size_t i = 0; i < j.size(); ++i) {
    const std::string at = Index(path, i);
    PODSCALE_RETURN_IF_ERROR(CheckKeys(j[i], at, {"chips", "batch"}));
    SweepPoint p;
    if (!j[i].contains("chips")) return Invalid(at, "missing key: chips");
    if (!j[i].contains("batch")) return Invalid(at, "missing key: batch");
    PODSCALE_RETURN_IF_ERROR(Read(j[i], at, "chips", &p.chips));
    PODSCALE_RETURN_IF_ERROR(Read(j[i], at, "batch", &p.batch));
    PODSCALE_RETURN_IF_ERROR(
        Check(p.chips >= 1, Child(at, "chips"), "must be >= 1"));
    PODSCALE_RETURN_IF_ERROR(
        Check(p.batch >= 1, Child(at, "batch"), "must be >= 1"));
    points->push_back(p);
  }
  return absl::OkStatus();
}

absl::Status ParseCalibration(const json& j, CalibrationConfig* c) {
  const std::string path = "calibration";
  PODSCALE_RETURN_IF_ERROR(
      CheckKeys(j, path, {"chips", "target_fraction", "tolerance"}));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "chips", &c->chips));
  PODSCALE_RETURN_IF_ERROR(
      Read(j, path, "target_fraction", &c->target_fraction));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "tolerance", &c->tolerance));
  return Check(c->tolerance >= 0.0, "calibration.tolerance", "must be >= 0");
}

absl::Status ParsePlacement(const json& j, PlacementConfig* p) {
  const std::string path = "placement";
  PODSCALE_RETURN_IF_ERROR(CheckKeys(
      j, path, {"devices", "capacity_bytes", "threshold_bytes", "tables"}));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "devices", &p->devices));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "capacity_bytes", &p->capacity_bytes));
  PODSCALE_RETURN_IF_ERROR(
      Read(j, path, "threshold_bytes", &p->threshold_bytes));
  PODSCALE_RETURN_IF_ERROR(
      Check(p->devices >= 1, "placement.devices", "must be >= 1"));
  PODSCALE_RETURN_IF_ERROR(Check(p->capacity_bytes >= 0,
                                 "placement.capacity_bytes", "must be >= 0"));
  if (j.contains("tables")) {
    const json& tables = j["tables"];
    const std::string tpath = "placement.tables";
    if (!tables.is_array()) return Invalid(tpath, "expected an array");
    p->tables.clear();
    for (size_t i = 0; i < tables.size(); ++i) {
      const std::string at = Index(tpath, i);
      PODSCALE_RETURN_IF_ERROR(CheckKeys(tables[i], at, {"rows", "row_bytes"}));
      EmbeddingTable t;
      PODSCALE_RETURN_IF_ERROR(Read(tables[i], at, "rows", &t.rows));
      PODSCALE_RETURN_IF_ERROR(Read(tables[i], at, "row_bytes", &t.row_bytes));
      PODSCALE_RETURN_IF_ERROR(
          Check(t.rows >= 1, Child(at, "rows"), "must be >= 1"));
      PODSCALE_RETURN_IF_ERROR(
          Check(t.row_bytes >= 1, Child(at, "row_bytes"), "must be >= 1"));
      p->tables.push_back(t);
    }
  }
  return absl::OkStatus();
}

absl::Status ParseShuffle(const json& j, ShuffleConfig* s) {
  const std::string path = "shuffle";
  PODSCALE_RETURN_IF_ERROR(
      CheckKeys(j, path,
                {"files", "examples_per_file", "buffer_sizes", "epochs", "runs",
                 "batch_size"}));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "files", &s->files));
  PODSCALE_RETURN_IF_ERROR(
      Read(j, path, "examples_per_file", &s->examples_per_file));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "buffer_sizes", &s->buffer_sizes));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "epochs", &s->epochs));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "runs", &s->runs));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "batch_size", &s->batch_size));
  PODSCALE_RETURN_IF_ERROR(
      Check(s->files >= 1, "shuffle.files", "must be >= 1"));
  PODSCALE_RETURN_IF_ERROR(Check(s->examples_per_file >= 1,
                                 "shuffle.examples_per_file", "must be >= 1"));
  PODSCALE_RETURN_IF_ERROR(Check(!s->buffer_sizes.empty(),
                                 "shuffle.buffer_sizes", "must not be empty"));
  for (size_t i = 0; i < s->buffer_sizes.size(); ++i) {
    PODSCALE_RETURN_IF_ERROR(Check(s->buffer_sizes[i] >= 1,
                                   Index("shuffle.buffer_sizes", i),
                                   "must be >= 1"));
  }
  PODSCALE_RETURN_IF_ERROR(
      Check(s->epochs >= 1, "shuffle.epochs", "must be >= 1"));
  PODSCALE_RETURN_IF_ERROR(Check(s->runs >= 2, "shuffle.runs", "must be >= 2"));
  return Check(s->batch_size >= 1, "shuffle.batch_size", "must be >= 1");
}

absl::Status ParseMetrics(const json& j, MetricsConfig* m) {
  const std::string path = "metrics";
  PODSCALE_RETURN_IF_ERROR(
      CheckKeys(j, path,
                {"eval_examples", "devices", "per_device_batch",
                 "steps_per_transfer", "auc_samples", "score_levels"}));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "eval_examples", &m->eval_examples));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "devices", &m->devices));
  PODSCALE_RETURN_IF_ERROR(
      Read(j, path, "per_device_batch", &m->per_device_batch));
  PODSCALE_RETURN_IF_ERROR(
      Read(j, path, "steps_per_transfer", &m->steps_per_transfer));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "auc_samples", &m->auc_samples));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "score_levels", &m->score_levels));
  PODSCALE_RETURN_IF_ERROR(
      Check(m->eval_examples >= 1, "metrics.eval_examples", "must be >= 1"));
  PODSCALE_RETURN_IF_ERROR(Check(m->devices >= 1 && m->devices <= 4096,
                                 "metrics.devices", "must be in [1, 4096]"));
  PODSCALE_RETURN_IF_ERROR(Check(m->per_device_batch >= 1,
                                 "metrics.per_device_batch", "must be >= 1"));
  PODSCALE_RETURN_IF_ERROR(Check(m->steps_per_transfer >= 1,
                                 "metrics.steps_per_transfer", "must be >= 1"));
  PODSCALE_RETURN_IF_ERROR(
      Check(m->auc_samples >= 2, "metrics.auc_samples", "must be >= 2"));
  return Check(m->score_levels >= 1, "metrics.score_levels", "must be >= 1");
}

absl::Status ParseVerify(const json& j, VerifyConfig* v) {
  const std::string path = "verify";
  PODSCALE_RETURN_IF_ERROR(
      CheckKeys(j, path, {"payload_sizes", "instances", "auc_samples"}));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "payload_sizes", &v->payload_sizes));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "instances", &v->instances));
  PODSCALE_RETURN_IF_ERROR(Read(j, path, "auc_samples", &v->auc_samples));
  for (size_t i = 0; i < v->payload_sizes.size(); ++i) {
    PODSCALE_RETURN_IF_ERROR(Check(v->payload_sizes[i] >= 1,
                                   Index("verify.payload_sizes", i),
                                   "must be >= 1"));
  }
  PODSCALE_RETURN_IF_ERROR(
      Check(v->instances >= 1, "verify.instances", "must be >= 1"));
  return Check(v->auc_samples >= 2, "verify.auc_samples", "must be >= 2");
}

// Cross-field checks once every block is parsed.
absl::Status ValidateScenario(const Scenario& s) {
  const int x_extent = s.mesh.pods * s.mesh.pod_x;
  if (s.stride < 1 || x_extent % s.stride != 0) {
    return Invalid("stride",
                   absl::StrFormat("%d does not divide mesh x extent %d "
                                   "(pods * pod_x)",
                                   s.stride, x_extent));
  }
  for (size_t i = 0; i < s.sweep.size(); ++i) {
    const std::string at = Child(Index("sweep", i), "chips");
    absl::StatusOr<DeviceMesh> mesh =
        MeshForChips(s.sweep[i].chips, s.mesh.pod_x, s.mesh.pod_y);
    if (!mesh.ok()) return Invalid(at, mesh.status().message());
    if (mesh->x_size() % s.stride != 0) {
      return Invalid(at,
                     absl::StrFormat("stride %d does not divide the %dx%d "
                                     "slice",
                                     s.stride, mesh->x_size(), mesh->y_size()));
    }
    if (!s.epochs.empty()) {
      absl::StatusOr<double> e = s.epochs.EpochsFor(s.sweep[i].batch);
      if (!e.ok())
        return Invalid(Child(Index("sweep", i), "batch"), e.status().message());
    }
  }
  auto in_sweep = [&](int64_t chips) {
    return std::any_of(s.sweep.begin(), s.sweep.end(),
                       [&](const SweepPoint& p) { return p.chips == chips; });
  };
  if (s.calibration.chips > 0 && !in_sweep(s.calibration.chips)) {
    return Invalid("calibration.chips",
                   absl::StrCat(s.calibration.chips, " is not a sweep point"));
  }
  if (s.optimizer.cost_chips > 0 && !in_sweep(s.optimizer.cost_chips)) {
    return Invalid(
        "optimizer.cost_chips",
        absl::StrCat(s.optimizer.cost_chips, " is not a sweep point"));
  }
  return absl::OkStatus();
}

json LinkValuesJson(const std::array<double, kNumLinkClasses>& values) {
  json j = json::object();
  for (int i = 0; i < kNumLinkClasses; ++i) {
    j[std::string(LinkClassName(static_cast<LinkClass>(i)))] = values[i];
  }
  return j;
}

}  // namespace

absl::StatusOr<DeviceMesh> MeshConfig::Build() const {
  MeshOptions options;
  options.x_torus = x_torus;
  options.devices_per_host = devices_per_host;
  options.allow_tile_straddle = allow_tile_straddle;
  return BuildMultipod(pods, pod_x, pod_y, y_torus, options);
}

ScalingScenario Scenario::ToScaling() const {
  ScalingScenario s;
  s.pod_x = mesh.pod_x;
  s.pod_y = mesh.pod_y;
  s.stride = stride;
  s.payload_elements = payload.elements;
  s.elem_type = payload.elem_type;
  s.y_direction = payload.y_direction;
  s.x_direction = payload.x_direction;
  s.cost = cost;
  s.compute = compute;
  s.epochs = epochs;
  s.points = sweep;
  return s;
}

absl::StatusOr<Scenario> ParseScenario(absl::string_view text) {
  json root;
  if (text.find_first_not_of(" \t\r\n") == absl::string_view::npos) {
    root = json::object();
  } else {
    try {
      root = json::parse(text.begin(), text.end(), /*cb=*/nullptr,
                         /*allow_exceptions=*/true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
      return absl::InvalidArgumentError(
          absl::StrCat("malformed scenario: ", e.what()));
    }
  }
  if (!root.is_object()) {
    return absl::InvalidArgumentError("scenario must be a JSON object");
  }
  PODSCALE_RETURN_IF_ERROR(
      CheckKeys(root, "",
                {"name", "mesh", "stride", "payload", "cost", "compute",
                 "optimizer", "epochs", "sweep", "calibration", "placement",
                 "shuffle", "metrics", "verify"}));
  if (!root.contains("mesh")) {
    return absl::InvalidArgumentError("missing required key: mesh");
  }
  Scenario s;
  PODSCALE_RETURN_IF_ERROR(Read(root, "", "name", &s.name));
  PODSCALE_RETURN_IF_ERROR(ParseMesh(root["mesh"], &s.mesh));
  PODSCALE_RETURN_IF_ERROR(Read(root, "", "stride", &s.stride));
  if (root.contains("payload")) {
    PODSCALE_RETURN_IF_ERROR(ParsePayload(root["payload"], &s.payload));
  }
  if (root.contains("cost"))
    PODSCALE_RETURN_IF_ERROR(ParseCost(root["cost"], &s.cost));
  if (root.contains("compute")) {
    PODSCALE_RETURN_IF_ERROR(ParseCompute(root["compute"], &s.compute));
  }
  if (root.contains("optimizer")) {
    PODSCALE_RETURN_IF_ERROR(ParseOptimizer(root["optimizer"], &s.optimizer));
  }
  if (root.contains("epochs")) {
    PODSCALE_RETURN_IF_ERROR(ParseEpochs(root["epochs"], &s.epochs));
  }
  if (root.contains("sweep")) {
    PODSCALE_RETURN_IF_ERROR(ParseSweep(root["sweep"], &s.sweep));
  }
  if (root.contains("calibration")) {
    PODSCALE_RETURN_IF_ERROR(
        ParseCalibration(root["calibration"], &s.calibration));
  }
  if (root.contains("placement")) {
    PODSCALE_RETURN_IF_ERROR(ParsePlacement(root["placement"], &s.placement));
  }
  if (root.contains("shuffle")) {
    PODSCALE_RETURN_IF_ERROR(ParseShuffle(root["shuffle"], &s.shuffle));
  }
  if (root.contains("metrics")) {
    PODSCALE_RETURN_IF_ERROR(ParseMetrics(root["metrics"], &s.metrics));
  }
  if (root.contains("verify")) {
    PODSCALE_RETURN_IF_ERROR(ParseVerify(root["verify"], &s.verify));
  }
  PODSCALE_RETURN_IF_ERROR(ValidateScenario(s));
  return s;
}

absl::StatusOr<Scenario> LoadScenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseScenario(buffer.str());
}

std::string SerializeScenario(const Scenario& s) {
  json root = json::object();
  root["name"] = s.name;
  root["mesh"] = {{"pods", s.mesh.pods},
                  {"pod_x", s.mesh.pod_x},
                  {"pod_y", s.mesh.pod_y},
                  {"y_torus", s.mesh.y_torus},
                  {"x_torus", s.mesh.x_torus},
                  {"devices_per_host", s.mesh.devices_per_host},
                  {"allow_tile_straddle", s.mesh.allow_tile_straddle}};
  root["stride"] = s.stride;
  root["payload"] = {
      {"elements", s.payload.elements},
      {"elem_type", std::string(ElemTypeName(s.payload.elem_type))},
      {"y_direction", std::string(DirectionName(s.payload.y_direction))},
      {"x_direction", std::string(DirectionName(s.payload.x_direction))}};
  root["cost"] = {{"alpha", LinkValuesJson(s.cost.alpha)},
                  {"beta", LinkValuesJson(s.cost.beta)}};
  root["compute"] = {{"work_per_example", s.compute.work_per_example},
                     {"flops_rate", s.compute.flops_rate},
                     {"fixed_overhead", s.compute.fixed_overhead}};
  const OptimizerSpec& o = s.optimizer.spec;
  root["optimizer"] = {{"kind", std::string(OptimizerKindName(o.kind))},
                       {"learning_rate", o.learning_rate},
                       {"momentum", o.momentum},
                       {"beta1", o.beta1},
                       {"beta2", o.beta2},
                       {"epsilon", o.epsilon},
                       {"weight_decay", o.weight_decay},
                       {"clip_global_norm", o.clip_global_norm},
                       {"flops_per_param", s.optimizer.flops_per_param},
                       {"cost_chips", s.optimizer.cost_chips}};
  json epochs = json::array();
  for (const auto& [batch, e] : s.epochs.entries()) {
    epochs.push_back({{"batch", batch}, {"epochs", e}});
  }
  root["epochs"] = epochs;
  json sweep = json::array();
  for (const SweepPoint& p : s.sweep) {
    sweep.push_back({{"chips", p.chips}, {"batch", p.batch}});
  }
  root["sweep"] = sweep;
  root["calibration"] = {{"chips", s.calibration.chips},
                         {"target_fraction", s.calibration.target_fraction},
                         {"tolerance", s.calibration.tolerance}};
  json tables = json::array();
  for (const EmbeddingTable& t : s.placement.tables) {
    tables.push_back({{"rows", t.rows}, {"row_bytes", t.row_bytes}});
  }
  root["placement"] = {{"devices", s.placement.devices},
                       {"capacity_bytes", s.placement.capacity_bytes},
                       {"threshold_bytes", s.placement.threshold_bytes},
                       {"tables", tables}};
  root["shuffle"] = {{"files", s.shuffle.files},
                     {"examples_per_file", s.shuffle.examples_per_file},
                     {"buffer_sizes", s.shuffle.buffer_sizes},
                     {"epochs", s.shuffle.epochs},
                     {"runs", s.shuffle.runs},
                     {"batch_size", s.shuffle.batch_size}};
  root["metrics"] = {{"eval_examples", s.metrics.eval_examples},
                     {"devices", s.metrics.devices},
                     {"per_device_batch", s.metrics.per_device_batch},
                     {"steps_per_transfer", s.metrics.steps_per_transfer},
                     {"auc_samples", s.metrics.auc_samples},
                     {"score_levels", s.metrics.score_levels}};
  root["verify"] = {{"payload_sizes", s.verify.payload_sizes},
                    {"instances", s.verify.instances},
                    {"auc_samples", s.verify.auc_samples}};
  return root.dump(2) + "\n";
}

std::string ScenarioHash(const Scenario& scenario) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : SerializeScenario(scenario)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return absl::StrFormat("%016x", h);
}

}  // namespace podscale
