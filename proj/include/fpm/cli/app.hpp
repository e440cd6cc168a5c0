/* Copyright 2026 The fpmkit Authors. All Rights Reserved.

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

#pragma once

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fpm/container.hpp"
#include "fpm/datasets/idx.hpp"
#include "fpm/datasets/image_dir.hpp"
#include "fpm/error.hpp"
#include "fpm/forward.hpp"
#include "fpm/metrics.hpp"
#include "fpm/multiplex.hpp"
#include "fpm/parallel.hpp"
#include "fpm/raster.hpp"
#include "fpm/recon.hpp"

// Command-line front end. Machine-readable JSON goes to `out` (stdout in the
// binary) or to --out/--metrics files; diagnostics go to stderr through the
// "fpm" logger, whose level is read from FPM_LOG (trace, debug, info, warn,
// error, off; default info).
//
// Exit codes: 0 success, 1 unexpected internal error, 2 configuration error,
// 3 I/O or file-format error, 4 numerical error.

namespace fpm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline std::shared_ptr<spdlog::logger> logger() {
  static const auto log = [] {
    auto l = std::make_shared<spdlog::logger>("fpm", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[fpm] %l: %v");
    return l;
  }();
  const char* env = std::getenv("FPM_LOG");
  log->set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
  return log;
}

/// JSON has no infinity; identical images report the string "inf".
inline json db_value(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return v;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

inline void emit_json(const json& doc, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << doc.dump(2) << '\n';
    return;
  }
  std::ofstream file(path);
  if (!file) throw IoError("cannot write " + path);
  file << doc.dump(2) << '\n';
  if (!file) throw IoError("write failed for " + path);
}

inline void require_file(const std::string& path, const char* what) {
  if (!fs::exists(path)) throw IoError(std::string(what) + " not found: " + path);
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::string input;
  std::string labels;
  std::string format;  // idx | dir; inferred when empty
  int size = 100;
  std::string color = "gray";
  int limit = 0;
  int grid_side = 5;
  int spacing = 0;  // 0: same as radius
  int radius = 5;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::string weights;
  int jobs = 1;
  std::string out;
  std::string gt_out;
  std::string summary;
};

struct LoadedDataset {
  std::vector<DatasetRecord> records;
  std::size_t skipped = 0;
  json provenance;
};

inline LoadedDataset load_dataset(const SimulateOptions& o) {
  require_file(o.input, "input");
  std::string format = o.format;
  if (format.empty()) format = fs::is_directory(o.input) ? "dir" : "idx";
  const ColorMode color = color_mode_from_string(o.color);
  LoadedDataset ds;
  if (format == "idx") {
    if (color == ColorMode::rgb) throw ConfigError("IDX input is grayscale; use --color gray");
    std::optional<fs::path> labels;
    if (!o.labels.empty()) {
      require_file(o.labels, "label file");
      labels = o.labels;
    }
    std::optional<std::uint32_t> limit;
    if (o.limit > 0) limit = static_cast<std::uint32_t>(o.limit);
    ds.records = parse_idx(o.input, labels, limit);
    ds.provenance = {{"format", "idx"}, {"input", fs::path(o.input).filename().string()}};
  } else if (format == "dir") {
    ImageDirResult r = load_image_dir(o.input, o.size, color);
    for (const auto& p : r.skipped) logger()->warn("skipped undecodable file {}", p.string());
    ds.skipped = r.skipped.size();
    ds.records = std::move(r.records);
    if (o.limit > 0 && ds.records.size() > static_cast<std::size_t>(o.limit)) {
      ds.records.resize(static_cast<std::size_t>(o.limit));
    }
    ds.provenance = {{"format", "dir"},
                     {"size", o.size},
                     {"classes", r.class_names},
                     {"skipped", ds.skipped}};
  } else {
    throw ConfigError("unknown --format '" + format + "' (expected idx or dir)");
  }
  ds.provenance["color"] = o.color;
  if (ds.records.empty()) throw ConfigError("input contains no records");
  return ds;
}

inline int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  if (o.out.empty()) throw ConfigError("--out is required");
  if (o.jobs < 1) throw ConfigError("--jobs must be >= 1");
  const LedGrid grid(o.grid_side, o.spacing > 0 ? o.spacing : o.radius, o.radius);
  const NoiseSpec noise = o.noise_sigma > 0.0 ? NoiseSpec::gaussian(o.noise_sigma, o.seed)
                                              : NoiseSpec{NoiseKind::none, 0.0, o.seed};
  std::optional<MultiplexMatrix> beta;
  if (!o.weights.empty()) {
    require_file(o.weights, "weight file");
    beta = load_weights(o.weights);
    if (beta->cols() != grid.count()) {
      throw ConfigError("weight file has k=" + std::to_string(beta->cols()) + " but the grid has " +
                        std::to_string(grid.count()) + " LEDs");
    }
  }

  LoadedDataset ds = load_dataset(o);
  const Extent extent = ds.records.front().extent();
  const int colors = static_cast<int>(ds.records.front().planes.size());
  for (const auto& r : ds.records) {
    if (r.extent() != extent || static_cast<int>(r.planes.size()) != colors) {
      throw ConfigError("record " + r.id + " differs in size from the first record");
    }
  }
  make_pupil_masks(grid, extent);  // rejects grids that do not fit the image

  const int per_color = beta ? beta->rows() : grid.count();
  std::vector<std::vector<RealImage>> channels(ds.records.size());
  parallel_for(ds.records.size(), o.jobs, [&](std::size_t i) {
    const auto& rec = ds.records[i];
    const NoiseSpec record_noise = noise.derive(i);
    std::vector<RealImage> chans;
    chans.reserve(static_cast<std::size_t>(per_color * colors));
    for (int c = 0; c < colors; ++c) {
      const NoiseSpec plane_noise = colors == 1 ? record_noise : record_noise.derive(static_cast<std::uint64_t>(c));
      const RealImage& plane = rec.planes[static_cast<std::size_t>(c)];
      MeasurementStack s = beta ? forward_multiplexed(plane, grid, *beta, plane_noise, rec.id)
                                : forward_stack(plane, grid, plane_noise, rec.id);
      for (auto& ch : s.channels) chans.push_back(std::move(ch));
    }
    channels[i] = std::move(chans);
  });

  ContainerMetadata meta;
  meta.kind = ContainerKind::measurements;
  meta.grid = grid;
  meta.noise = noise;
  meta.multiplex = beta;
  meta.colors = colors;
  meta.extra = {{"dataset", ds.provenance}, {"seed", o.seed}};
  StackContainer container(extent, per_color * colors, meta);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    container.append(ds.records[i].id, ds.records[i].label, channels[i]);
  }
  write_stack(container, o.out);

  if (!o.gt_out.empty()) {
    ContainerMetadata gt_meta;
    gt_meta.kind = ContainerKind::ground_truth;
    gt_meta.grid = grid;
    gt_meta.colors = colors;
    gt_meta.extra = {{"dataset", ds.provenance}};
    StackContainer gt(extent, colors, gt_meta);
    for (const auto& r : ds.records) gt.append(r.id, r.label, r.planes);
    write_stack(gt, o.gt_out);
  }

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  logger()->info("simulated {} records, {} channels each, into {}", ds.records.size(),
                 container.channels(), o.out);
  emit_json({{"command", "simulate"},
             {"count", container.count()},
             {"channels", container.channels()},
             {"height", extent.height},
             {"width", extent.width},
             {"colors", colors},
             {"grid", {{"side", grid.side()}, {"spacing", grid.spacing()}, {"radius", grid.radius()}}},
             {"multiplexed", beta.has_value()},
             {"skipped", ds.skipped},
             {"out", o.out},
             {"elapsed_s", elapsed}},
            o.summary, out);
  return 0;
}

// ---------------------------------------------------------------------------
// reconstruct / evaluate

struct ReconstructOptions {
  std::string input;
  std::string ground_truth;
  double alpha = 1e-3;
  double step = 1.0;
  int iterations = 500;
  std::string fidelity = "l1_smoothed";
  std::string init = "cc_measurement";
  double eps_abs = 1e-8;
  double eps_fid = 1e-6;
  bool no_backtracking = false;
  int jobs = 1;
  int limit = 0;
  double peak = 1.0;
  bool trace = false;
  std::string out;
  std::string metrics;
};

inline json settings_json(const ReconSettings& s) {
  return {{"alpha", s.alpha},         {"step", s.step},
          {"iterations", s.iterations}, {"fidelity", to_string(s.fidelity)},
          {"init", to_string(s.init)},  {"eps_abs", s.eps_abs},
          {"eps_fid", s.eps_fid},       {"backtracking", s.backtracking}};
}

/// Joins two containers on record id. Throws ConfigError on missing ids or
/// shape mismatch.
inline std::vector<int> match_records(const StackContainer& a, const StackContainer& b) {
  if (a.extent() != b.extent() || a.channels() != b.channels()) {
    throw ConfigError("containers differ in shape: " + to_string(a.extent()) + "x" +
                      std::to_string(a.channels()) + " vs " + to_string(b.extent()) + "x" +
                      std::to_string(b.channels()));
  }
  std::map<std::string, int> index;
  for (int i = 0; i < b.count(); ++i) index.emplace(b.metadata().ids[static_cast<std::size_t>(i)], i);
  std::vector<int> match;
  match.reserve(static_cast<std::size_t>(a.count()));
  for (const auto& id : a.metadata().ids) {
    auto it = index.find(id);
    if (it == index.end()) throw ConfigError("record id '" + id + "' missing from the reference");
    match.push_back(it->second);
  }
  return match;
}

/// Mean squared error over all channels of two matched records.
inline double record_mse(const StackContainer& a, int ia, const StackContainer& b, int ib) {
  double acc = 0.0;
  for (int k = 0; k < a.channels(); ++k) acc += mse(a.channel(ia, k), b.channel(ib, k));
  return acc / a.channels();
}

inline json aggregate_json(const std::vector<double>& mses, const std::vector<double>& psnrs) {
  return {{"count", psnrs.size()},
          {"mean_mse", mean(mses)},
          {"mean_psnr", db_value(mean(psnrs))},
          {"median_psnr", db_value(median(psnrs))}};
}

inline double psnr_from_mse(double err, double peak) {
  return err == 0.0 ? std::numeric_limits<double>::infinity()
                    : 10.0 * std::log10(peak * peak / err);
}

inline int cmd_reconstruct(const ReconstructOptions& o, std::ostream& out) {
  if (o.out.empty()) throw ConfigError("--out is required");
  if (o.jobs < 1) throw ConfigError("--jobs must be >= 1");
  ReconSettings s;
  s.alpha = o.alpha;
  s.step = o.step;
  s.iterations = o.iterations;
  s.fidelity = fidelity_from_string(o.fidelity);
  s.init = init_from_string(o.init);
  s.eps_abs = o.eps_abs;
  s.eps_fid = o.eps_fid;
  s.backtracking = !o.no_backtracking;
  s.validate();

  require_file(o.input, "stack file");
  const StackContainer stacks = read_stack(o.input);
  if (stacks.metadata().kind != ContainerKind::measurements) {
    throw ConfigError(o.input + " does not hold measurements");
  }
  std::optional<StackContainer> gt;
  if (!o.ground_truth.empty()) {
    require_file(o.ground_truth, "ground-truth file");
    gt = read_stack(o.ground_truth);
  }

  const int colors = stacks.metadata().colors;
  const int n = o.limit > 0 ? std::min(o.limit, stacks.count()) : stacks.count();
  std::vector<std::vector<ReconResult>> results(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), o.jobs, [&](std::size_t i) {
    for (int c = 0; c < colors; ++c) {
      try {
        results[i].push_back(reconstruct(stacks.stack(static_cast<int>(i), c), s));
      } catch (const ReconAborted& e) {
        logger()->error("record {} aborted after {} iterations", stacks.metadata().ids[i],
                        e.partial().energy_trace.size());
        throw;
      }
    }
  });

  ContainerMetadata meta;
  meta.kind = ContainerKind::reconstruction;
  meta.grid = stacks.metadata().grid;
  meta.noise = stacks.metadata().noise;
  meta.multiplex = stacks.metadata().multiplex;
  meta.colors = colors;
  meta.extra = {{"settings", settings_json(s)}, {"source", stacks.metadata().extra}};
  // Estimates are one image per color; the acquisition metadata is provenance.
  StackContainer estimates(stacks.extent(), colors, meta);
  estimates.metadata().kind = ContainerKind::reconstruction;
  for (int i = 0; i < n; ++i) {
    std::vector<RealImage> planes;
    for (const auto& r : results[static_cast<std::size_t>(i)]) planes.push_back(r.estimate);
    estimates.append(stacks.metadata().ids[static_cast<std::size_t>(i)],
                     stacks.metadata().labels[static_cast<std::size_t>(i)], planes);
  }

  std::vector<int> gt_index;
  if (gt) gt_index = match_records(estimates, *gt);

  json records = json::array();
  std::vector<double> mses, psnrs;
  for (int i = 0; i < n; ++i) {
    const auto& rs = results[static_cast<std::size_t>(i)];
    json rec = {{"id", estimates.metadata().ids[static_cast<std::size_t>(i)]},
                {"iterations", rs.front().energy_trace.size()},
                {"final_energy", rs.front().energy_trace.back()},
                {"stalled", rs.front().stalled}};
    if (colors > 1) {
      json per = json::array();
      for (const auto& r : rs) per.push_back(r.energy_trace.back());
      rec["final_energy_per_color"] = per;
    }
    if (o.trace) rec["energy_trace"] = rs.front().energy_trace;
    if (gt) {
      // Compare at float32 precision, as stored.
      const double err = record_mse(estimates, i, *gt, gt_index[static_cast<std::size_t>(i)]);
      const double p = psnr_from_mse(err, o.peak);
      rec["mse"] = err;
      rec["psnr"] = db_value(p);
      mses.push_back(err);
      psnrs.push_back(p);
    }
    records.push_back(std::move(rec));
  }
  write_stack(estimates, o.out);

  json doc = {{"command", "reconstruct"}, {"settings", settings_json(s)}, {"records", records},
              {"out", o.out}};
  if (gt) doc["aggregate"] = aggregate_json(mses, psnrs);
  logger()->info("reconstructed {} records into {}", n, o.out);
  emit_json(doc, o.metrics, out);
  return 0;
}

struct EvaluateOptions {
  std::string input;
  std::string ground_truth;
  double peak = 1.0;
  std::string out;
};

/// Output schema:
///   {"command": "evaluate",
///    "records": [{"id": str, "mse": float, "psnr": float | "inf"}],
///    "aggregate": {"count": int, "mean_mse": float,
///                  "mean_psnr": float | "inf", "median_psnr": float | "inf"}}
inline int cmd_evaluate(const EvaluateOptions& o, std::ostream& out) {
  if (!(o.peak > 0.0)) throw ConfigError("--peak must be > 0");
  require_file(o.input, "input");
  require_file(o.ground_truth, "ground-truth file");
  const StackContainer est = read_stack(o.input);
  const StackContainer gt = read_stack(o.ground_truth);
  const auto match = match_records(est, gt);
  json records = json::array();
  std::vector<double> mses, psnrs;
  for (int i = 0; i < est.count(); ++i) {
    const double err = record_mse(est, i, gt, match[static_cast<std::size_t>(i)]);
    const double p = psnr_from_mse(err, o.peak);
    records.push_back({{"id", est.metadata().ids[static_cast<std::size_t>(i)]},
                       {"mse", err},
                       {"psnr", db_value(p)}});
    mses.push_back(err);
    psnrs.push_back(p);
  }
  emit_json({{"command", "evaluate"}, {"records", records}, {"aggregate", aggregate_json(mses, psnrs)}},
            o.out, out);
  return 0;
}

// ---------------------------------------------------------------------------
// inspect

struct InspectOptions {
  std::string input;
  std::string ground_truth;
  int index = 0;
  int scale = 4;
  std::string out_dir;
};

inline int cmd_inspect(const InspectOptions& o, std::ostream& out) {
  if (o.out_dir.empty()) throw ConfigError("--out is required");
  if (o.scale < 1) throw ConfigError("--scale must be >= 1");
  require_file(o.input, "stack file");
  const StackContainer c = read_stack(o.input);
  if (o.index < 0 || o.index >= c.count()) {
    throw ConfigError("--index " + std::to_string(o.index) + " out of range (count " +
                      std::to_string(c.count()) + ")");
  }
  fs::create_directories(o.out_dir);

  std::vector<RealImage> channels;
  for (int k = 0; k < c.channels(); ++k) channels.push_back(c.channel(o.index, k));
  const auto& meta = c.metadata();
  int columns = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(c.channels()))));
  if (meta.kind == ContainerKind::measurements && !meta.multiplex && meta.grid) {
    columns = meta.grid->side();
  }
  const GrayImage sheet = contact_sheet(channels, columns);
  const fs::path sheet_path = fs::path(o.out_dir) / "measurements.pgm";
  write_pgm(upscale(sheet, o.scale), sheet_path);

  json doc = {{"command", "inspect"},
              {"record", o.index},
              {"id", meta.ids[static_cast<std::size_t>(o.index)]},
              {"channels", c.channels()},
              {"sheet", sheet_path.string()},
              {"sheet_columns", columns},
              {"sheet_rows", (c.channels() + columns - 1) / columns}};

  if (meta.grid) {
    // Background spectrum: ground truth when available, else the on-axis
    // measurement, else the mean of all channels.
    RealImage background(c.extent(), 0.0);
    if (!o.ground_truth.empty()) {
      require_file(o.ground_truth, "ground-truth file");
      const StackContainer gt = read_stack(o.ground_truth);
      const auto& ids = gt.metadata().ids;
      const auto it = std::find(ids.begin(), ids.end(), meta.ids[static_cast<std::size_t>(o.index)]);
      if (it == ids.end() || gt.extent() != c.extent()) {
        throw ConfigError("ground truth has no matching record for '" +
                          meta.ids[static_cast<std::size_t>(o.index)] + "'");
      }
      background = gt.channel(static_cast<int>(it - ids.begin()), 0);
    } else if (meta.kind == ContainerKind::measurements && !meta.multiplex) {
      background = channels[static_cast<std::size_t>(meta.grid->on_axis_index())];
    } else {
      for (const auto& ch : channels)
        for (std::size_t i = 0; i < background.size(); ++i) background[i] += ch[i];
    }
    const MaskOverlay overlay = render_mask_overlay(*meta.grid, background);
    const fs::path layout_path = fs::path(o.out_dir) / "mask_layout.pgm";
    write_pgm(upscale(overlay.raster, o.scale), layout_path);
    json masks = json::array();
    for (int r = 0; r < meta.grid->side(); ++r) {
      for (int col = 0; col < meta.grid->side(); ++col) {
        const PupilMask m = make_pupil_mask(*meta.grid, {r, col}, c.extent());
        masks.push_back({{"led", {r, col}},
                         {"center", {m.center().fy, m.center().fx}},
                         {"popcount", m.popcount()}});
      }
    }
    doc["layout"] = layout_path.string();
    doc["masks"] = masks;
  }
  emit_json(doc, "", out);
  return 0;
}

// ---------------------------------------------------------------------------
// multiplex

struct MultiplexOptions {
  int k = 25;
  int m = 5;
  std::uint64_t seed = 0;
  bool normalize = false;
  std::string input;
  std::string out;
};

inline json describe(const MultiplexMatrix& beta) {
  json rows = json::array();
  for (int r = 0; r < beta.rows(); ++r) {
    double acc = 0.0;
    for (int c = 0; c < beta.cols(); ++c) acc += beta(r, c);
    rows.push_back(acc);
  }
  const auto [lo, hi] = std::minmax_element(beta.weights().begin(), beta.weights().end());
  return {{"m", beta.rows()}, {"k", beta.cols()}, {"min", *lo}, {"max", *hi}, {"row_sums", rows}};
}

inline int cmd_multiplex(const std::string& action, const MultiplexOptions& o, std::ostream& out) {
  auto finish = [&](MultiplexMatrix beta) {
    if (o.normalize) beta = beta.max_normalized();
    if (o.out.empty()) {
      out << to_json(beta).dump(2) << '\n';
    } else {
      save_weights(beta, o.out);
      emit_json({{"command", "multiplex " + action}, {"out", o.out}, {"summary", describe(beta)}}, "", out);
    }
    return 0;
  };
  if (action == "identity") return finish(identity_multiplex(o.k));
  if (action == "random") return finish(group_multiplex(o.k, o.m, o.seed));
  require_file(o.input, "weight file");
  const MultiplexMatrix beta = load_weights(o.input);
  if (action == "normalize") return finish(beta.max_normalized());
  emit_json({{"command", "multiplex validate"}, {"valid", true}, {"summary", describe(beta)}}, "", out);
  return 0;
}

// ---------------------------------------------------------------------------

/// Parses `args` (without the program name) and runs the chosen subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout) {
  CLI::App app{"Fourier ptychographic measurement simulation and reconstruction", "fpm"};
  app.require_subcommand(1);
  // Repeated flags: the last occurrence wins.
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  // One experiment manifest for all commands, with a [simulate] and a
  // [reconstruct] section; command-line flags take precedence.
  app.set_config("--config", "", "TOML experiment manifest; flags take precedence");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "simulate measurement stacks from images");
  simulate->fallthrough();
  simulate->add_option("--input", sim.input, "IDX image file or class-per-subdirectory image tree")->required();
  simulate->add_option("--labels", sim.labels, "IDX label file");
  simulate->add_option("--format", sim.format, "input format")->check(CLI::IsMember({"idx", "dir"}));
  simulate->add_option("--size", sim.size, "resize target for image directories")->capture_default_str();
  simulate->add_option("--color", sim.color, "gray or rgb (per-plane simulation)")->check(CLI::IsMember({"gray", "rgb"}))->capture_default_str();
  simulate->add_option("--limit", sim.limit, "keep only the first N records");
  simulate->add_option("--grid-side", sim.grid_side, "LEDs per grid side (odd)")->capture_default_str();
  simulate->add_option("--spacing", sim.spacing, "pupil center spacing in frequency pixels (default: radius)");
  simulate->add_option("--radius", sim.radius, "pupil radius in frequency pixels")->capture_default_str();
  simulate->add_option("--noise", sim.noise_sigma, "gaussian noise sigma on intensities")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "noise seed")->capture_default_str();
  simulate->add_option("--weights", sim.weights, "multiplex weight file");
  simulate->add_option("--jobs", sim.jobs, "worker threads")->capture_default_str();
  simulate->add_option("--out", sim.out, "output FPMS container");
  simulate->add_option("--gt-out", sim.gt_out, "also write the ground-truth images as an FPMS container");
  simulate->add_option("--summary", sim.summary, "write the JSON summary here instead of stdout");

  ReconstructOptions rec;
  auto* reconstruct_cmd = app.add_subcommand("reconstruct", "reconstruct images from measurement stacks");
  reconstruct_cmd->fallthrough();
  reconstruct_cmd->add_option("--input", rec.input, "FPMS measurement container")->required();
  reconstruct_cmd->add_option("--ground-truth", rec.ground_truth, "FPMS ground-truth container for PSNR");
  reconstruct_cmd->add_option("--alpha", rec.alpha, "TV weight")->capture_default_str();
  reconstruct_cmd->add_option("--step", rec.step, "initial step size")->capture_default_str();
  reconstruct_cmd->add_option("--iters", rec.iterations, "iterations")->capture_default_str();
  reconstruct_cmd->add_option("--fidelity", rec.fidelity, "l1_smoothed or l2")->check(CLI::IsMember({"l1_smoothed", "l1", "l2"}))->capture_default_str();
  reconstruct_cmd->add_option("--init", rec.init, "zeros or cc_measurement")->check(CLI::IsMember({"zeros", "cc_measurement", "cc"}))->capture_default_str();
  reconstruct_cmd->add_option("--eps-abs", rec.eps_abs, "modulus smoothing")->capture_default_str();
  reconstruct_cmd->add_option("--eps-fid", rec.eps_fid, "l1 smoothing")->capture_default_str();
  reconstruct_cmd->add_flag("--no-backtracking", rec.no_backtracking, "fixed step size");
  reconstruct_cmd->add_option("--jobs", rec.jobs, "worker threads")->capture_default_str();
  reconstruct_cmd->add_option("--limit", rec.limit, "reconstruct only the first N records");
  reconstruct_cmd->add_option("--peak", rec.peak, "PSNR peak value")->capture_default_str();
  reconstruct_cmd->add_flag("--trace", rec.trace, "include full energy traces in the metrics");
  reconstruct_cmd->add_option("--out", rec.out, "output FPMS container of estimates");
  reconstruct_cmd->add_option("--metrics", rec.metrics, "write metrics JSON here instead of stdout");

  MultiplexOptions mux;
  std::string mux_action;
  auto* multiplex = app.add_subcommand("multiplex", "create, validate and normalize weight files");
  multiplex->require_subcommand(1);
  auto* mux_identity = multiplex->add_subcommand("identity", "K x K identity weights");
  auto* mux_random = multiplex->add_subcommand("random", "uniform [0,1) m x k weights");
  auto* mux_validate = multiplex->add_subcommand("validate", "check a weight file");
  auto* mux_normalize = multiplex->add_subcommand("normalize", "scale weights so the maximum is 1");
  for (auto* sub : {mux_identity, mux_random}) {
    sub->add_option("--k", mux.k, "single-LED channel count")->capture_default_str();
    sub->add_option("--out", mux.out, "output weight file (default: stdout)");
    sub->add_flag("--normalize", mux.normalize, "scale so the largest weight is 1");
  }
  mux_random->add_option("--m", mux.m, "multiplexed measurement count")->capture_default_str();
  mux_random->add_option("--seed", mux.seed, "seed")->capture_default_str();
  mux_validate->add_option("--input", mux.input, "weight file")->required();
  mux_normalize->add_option("--input", mux.input, "weight file")->required();
  mux_normalize->add_option("--out", mux.out, "output weight file (default: stdout)");

  InspectOptions ins;
  auto* inspect = app.add_subcommand("inspect", "render mask layout and a measurement contact sheet");
  inspect->add_option("--input", ins.input, "FPMS container")->required();
  inspect->add_option("--index", ins.index, "record index")->capture_default_str();
  inspect->add_option("--ground-truth", ins.ground_truth, "FPMS ground truth for the spectrum background");
  inspect->add_option("--scale", ins.scale, "integer upscaling of the rasters")->capture_default_str();
  inspect->add_option("--out", ins.out_dir, "output directory")->required();

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "PSNR/MSE of estimates against ground truth");
  evaluate->add_option("--input", ev.input, "FPMS container of estimates")->required();
  evaluate->add_option("--ground-truth", ev.ground_truth, "FPMS ground-truth container")->required();
  evaluate->add_option("--peak", ev.peak, "PSNR peak value")->capture_default_str();
  evaluate->add_option("--out", ev.out, "write metrics JSON here instead of stdout");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    logger()->error("{}", e.what());
    return 2;
  }

  try {
    if (*simulate) return cmd_simulate(sim, out);
    if (*reconstruct_cmd) return cmd_reconstruct(rec, out);
    if (*inspect) return cmd_inspect(ins, out);
    if (*evaluate) return cmd_evaluate(ev, out);
    if (*multiplex) {
      for (auto* sub : {mux_identity, mux_random, mux_validate, mux_normalize}) {
        if (*sub) mux_action = sub->get_name();
      }
      return cmd_multiplex(mux_action, mux, out);
    }
  } catch (const Error& e) {
    logger()->error("{}", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    logger()->error("internal error: {}", e.what());
    return 1;
  }
  return 2;
}

}  // namespace fpm::cli
