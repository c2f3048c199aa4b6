#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "waveplanes/data.hpp"
#include "waveplanes/errors.hpp"
#include "waveplanes/field.hpp"
#include "waveplanes/optim.hpp"

namespace wvpl {

struct TrainSection {
  int steps = 2000;
  int batch_size = 1024;
  double lr = 0.01;
  int warmup = 512;
  RegWeights weights;
  uint64_t seed = 0;
  int samples_per_ray = 48;
  double near = 2.0;
  double far = 6.0;
  int render_every = 500;  // validation render cadence, 0 disables
};

struct DataSection {
  std::string kind = "synthetic";  // "dnerf" or "synthetic"
  std::string path;                // dnerf directory
  SyntheticSceneSpec synthetic;
  Background background = Background::White;
};

struct OutputSection {
  std::string directory = "out";
};

struct RunConfig {
  ModelConfig model;
  TrainSection train;
  DataSection data;
  OutputSection output;
};

namespace detail {

inline void expect_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                        const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a json object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("unknown key \"" + item.key() + "\" in " + where);
  }
}

template <typename T, size_t N>
std::array<T, N> fixed_array(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.size() != N)
    throw ConfigError(where + " must be an array of " + std::to_string(N));
  std::array<T, N> out;
  for (size_t i = 0; i < N; ++i) out[i] = j[i].get<T>();
  return out;
}

inline SyntheticSceneSpec parse_synthetic(const nlohmann::json& j) {
  expect_keys(j,
              {"center_start", "center_end", "radius", "peak_density", "color_a",
               "color_b", "gradient", "bbox_min", "bbox_max", "train_frames",
               "test_frames", "width", "height", "fov_x", "cam_distance",
               "cam_elevation", "near", "far", "gt_samples"},
              "data.synthetic");
  SyntheticSceneSpec s;
  if (j.contains("center_start")) s.center_start = fixed_array<double, 3>(j["center_start"], "center_start");
  if (j.contains("center_end")) s.center_end = fixed_array<double, 3>(j["center_end"], "center_end");
  if (j.contains("radius")) s.radius = j["radius"].get<double>();
  if (j.contains("peak_density")) s.peak_density = j["peak_density"].get<double>();
  if (j.contains("color_a")) s.color_a = fixed_array<double, 3>(j["color_a"], "color_a");
  if (j.contains("color_b")) s.color_b = fixed_array<double, 3>(j["color_b"], "color_b");
  if (j.contains("gradient")) s.gradient = j["gradient"].get<bool>();
  if (j.contains("bbox_min")) s.bbox_min = fixed_array<double, 3>(j["bbox_min"], "bbox_min");
  if (j.contains("bbox_max")) s.bbox_max = fixed_array<double, 3>(j["bbox_max"], "bbox_max");
  if (j.contains("train_frames")) s.train_frames = j["train_frames"].get<int>();
  if (j.contains("test_frames")) s.test_frames = j["test_frames"].get<int>();
  if (j.contains("width")) s.width = j["width"].get<int>();
  if (j.contains("height")) s.height = j["height"].get<int>();
  if (j.contains("fov_x")) s.fov_x = j["fov_x"].get<double>();
  if (j.contains("cam_distance")) s.cam_distance = j["cam_distance"].get<double>();
  if (j.contains("cam_elevation")) s.cam_elevation = j["cam_elevation"].get<double>();
  if (j.contains("near")) s.near = j["near"].get<double>();
  if (j.contains("far")) s.far = j["far"].get<double>();
  if (j.contains("gt_samples")) s.gt_samples = j["gt_samples"].get<int>();
  return s;
}

inline nlohmann::json synthetic_json(const SyntheticSceneSpec& s) {
  return {{"center_start", s.center_start}, {"center_end", s.center_end},
          {"radius", s.radius},             {"peak_density", s.peak_density},
          {"color_a", s.color_a},           {"color_b", s.color_b},
          {"gradient", s.gradient},         {"bbox_min", s.bbox_min},
          {"bbox_max", s.bbox_max},         {"train_frames", s.train_frames},
          {"test_frames", s.test_frames},   {"width", s.width},
          {"height", s.height},             {"fov_x", s.fov_x},
          {"cam_distance", s.cam_distance}, {"cam_elevation", s.cam_elevation},
          {"near", s.near},                 {"far", s.far},
          {"gt_samples", s.gt_samples}};
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& doc) {
  detail::expect_keys(doc, {"model", "train", "data", "output"}, "config");
  RunConfig rc;
  if (doc.contains("model")) {
    const auto& m = doc["model"];
    detail::expect_keys(m,
                        {"feature_len", "levels", "family", "spatial_rows",
                         "spatial_cols", "time_res", "scales", "fusion", "k",
                         "bbox_min", "bbox_max", "t_range", "static_mode",
                         "decoder_hidden_layers"},
                        "model");
    if (m.contains("feature_len")) rc.model.feature_len = m["feature_len"].get<int>();
    if (m.contains("levels")) rc.model.levels = m["levels"].get<int>();
    if (m.contains("family")) rc.model.family = m["family"].get<std::string>();
    if (m.contains("spatial_rows")) rc.model.spatial_rows = m["spatial_rows"].get<int>();
    if (m.contains("spatial_cols")) rc.model.spatial_cols = m["spatial_cols"].get<int>();
    if (m.contains("time_res")) rc.model.time_res = m["time_res"].get<int>();
    if (m.contains("scales")) {
      rc.model.scales = m["scales"].get<std::vector<int>>();
    } else if (m.contains("levels")) {
      // scales not pinned: use every level of the new decomposition depth
      rc.model.scales.clear();
      for (int s = 1; s <= rc.model.levels; ++s) rc.model.scales.push_back(s);
    }
    if (m.contains("fusion")) rc.model.fusion = fusion_from_name(m["fusion"].get<std::string>());
    if (m.contains("k")) rc.model.k = m["k"].get<std::vector<double>>();
    if (m.contains("bbox_min")) rc.model.bbox_min = detail::fixed_array<double, 3>(m["bbox_min"], "model.bbox_min");
    if (m.contains("bbox_max")) rc.model.bbox_max = detail::fixed_array<double, 3>(m["bbox_max"], "model.bbox_max");
    if (m.contains("t_range")) {
      const auto r = detail::fixed_array<double, 2>(m["t_range"], "model.t_range");
      rc.model.t_min = r[0];
      rc.model.t_max = r[1];
    }
    if (m.contains("static_mode")) rc.model.static_mode = m["static_mode"].get<bool>();
    if (m.contains("decoder_hidden_layers"))
      rc.model.decoder_hidden_layers = m["decoder_hidden_layers"].get<int>();
  }
  validate_config(rc.model);

  if (doc.contains("train")) {
    const auto& t = doc["train"];
    detail::expect_keys(t,
                        {"steps", "batch_size", "lr", "warmup", "reg_tv", "reg_sst",
                         "reg_ts", "reg_time_smooth", "seed", "samples_per_ray",
                         "near", "far", "render_every"},
                        "train");
    if (t.contains("steps")) rc.train.steps = t["steps"].get<int>();
    if (t.contains("batch_size")) rc.train.batch_size = t["batch_size"].get<int>();
    if (t.contains("lr")) rc.train.lr = t["lr"].get<double>();
    if (t.contains("warmup")) rc.train.warmup = t["warmup"].get<int>();
    if (t.contains("reg_tv")) rc.train.weights.tv = t["reg_tv"].get<double>();
    if (t.contains("reg_sst")) rc.train.weights.sst = t["reg_sst"].get<double>();
    if (t.contains("reg_ts")) rc.train.weights.ts = t["reg_ts"].get<double>();
    if (t.contains("reg_time_smooth"))
      rc.train.weights.time_smooth = t["reg_time_smooth"].get<double>();
    if (t.contains("seed")) rc.train.seed = t["seed"].get<uint64_t>();
    if (t.contains("samples_per_ray")) rc.train.samples_per_ray = t["samples_per_ray"].get<int>();
    if (t.contains("near")) rc.train.near = t["near"].get<double>();
    if (t.contains("far")) rc.train.far = t["far"].get<double>();
    if (t.contains("render_every")) rc.train.render_every = t["render_every"].get<int>();
    if (rc.train.steps < 1 || rc.train.batch_size < 1 || rc.train.samples_per_ray < 1 ||
        !(rc.train.near < rc.train.far) || rc.train.warmup < 1 || rc.train.lr <= 0)
      throw ConfigError("invalid train section");
  }

  if (doc.contains("data")) {
    const auto& d = doc["data"];
    detail::expect_keys(d, {"kind", "path", "synthetic", "background"}, "data");
    if (d.contains("kind")) rc.data.kind = d["kind"].get<std::string>();
    if (rc.data.kind != "dnerf" && rc.data.kind != "synthetic")
      throw ConfigError("data.kind must be \"dnerf\" or \"synthetic\"");
    if (d.contains("path")) rc.data.path = d["path"].get<std::string>();
    if (d.contains("background"))
      rc.data.background = background_from_name(d["background"].get<std::string>());
    if (d.contains("synthetic")) rc.data.synthetic = detail::parse_synthetic(d["synthetic"]);
    if (rc.data.kind == "dnerf" && rc.data.path.empty())
      throw ConfigError("data.kind \"dnerf\" requires data.path");
  }
  rc.data.synthetic.background = rc.data.background;

  if (doc.contains("output")) {
    detail::expect_keys(doc["output"], {"directory"}, "output");
    if (doc["output"].contains("directory"))
      rc.output.directory = doc["output"]["directory"].get<std::string>();
  }
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid json in " + path + ": " + e.what());
  }
  return parse_run_config(doc);
}

/// All defaults materialized, so the saved file is a complete run record.
inline nlohmann::json run_config_json(const RunConfig& rc) {
  nlohmann::json doc;
  doc["model"] = {{"feature_len", rc.model.feature_len},
                  {"levels", rc.model.levels},
                  {"family", rc.model.family},
                  {"spatial_rows", rc.model.spatial_rows},
                  {"spatial_cols", rc.model.spatial_cols},
                  {"time_res", rc.model.time_res},
                  {"scales", rc.model.scales},
                  {"fusion", fusion_name(rc.model.fusion)},
                  {"k", rc.model.k},
                  {"bbox_min", rc.model.bbox_min},
                  {"bbox_max", rc.model.bbox_max},
                  {"t_range", std::array<double, 2>{rc.model.t_min, rc.model.t_max}},
                  {"static_mode", rc.model.static_mode},
                  {"decoder_hidden_layers", rc.model.decoder_hidden_layers}};
  doc["train"] = {{"steps", rc.train.steps},
                  {"batch_size", rc.train.batch_size},
                  {"lr", rc.train.lr},
                  {"warmup", rc.train.warmup},
                  {"reg_tv", rc.train.weights.tv},
                  {"reg_sst", rc.train.weights.sst},
                  {"reg_ts", rc.train.weights.ts},
                  {"reg_time_smooth", rc.train.weights.time_smooth},
                  {"seed", rc.train.seed},
                  {"samples_per_ray", rc.train.samples_per_ray},
                  {"near", rc.train.near},
                  {"far", rc.train.far},
                  {"render_every", rc.train.render_every}};
  doc["data"] = {{"kind", rc.data.kind},
                 {"path", rc.data.path},
                 {"background", background_name(rc.data.background)},
                 {"synthetic", detail::synthetic_json(rc.data.synthetic)}};
  doc["output"] = {{"directory", rc.output.directory}};
  return doc;
}

/// Round trip through parse keeps the resolved config self-contained.
inline void save_run_config(const RunConfig& rc, const std::string& path) {
  std::ofstream out(path);
  out << run_config_json(rc).dump(2) << '\n';
  if (!out) throw ConfigError("cannot write resolved config to " + path);
}

}  // namespace wvpl
