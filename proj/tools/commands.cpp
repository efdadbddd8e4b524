/* Copyright 2026 The epicon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "commands.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <numeric>
#include <optional>

#include <CLI11.hpp>

#include "epicon/attention.hpp"
#include "epicon/binary_io.hpp"
#include "epicon/config.hpp"
#include "epicon/constraint.hpp"
#include "epicon/epipolar.hpp"
#include "epicon/errors.hpp"
#include "epicon/mask_io.hpp"
#include "epicon/scene.hpp"
#include "epicon/training.hpp"
#include "epicon/trajectory_io.hpp"

namespace epicon::cli {
namespace {

std::string num(double x) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

struct GlobalFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  double threshold = 0.0;
  double percentile = 0.0;
  std::string dims;
  int upscale = 1;
  std::string delta_scope;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threshold_opt = nullptr;
  CLI::Option* percentile_opt = nullptr;
  CLI::Option* scope_opt = nullptr;
};

CliConfig effective_config(const GlobalFlags& g) {
  CliConfig c = g.config_path.empty() ? CliConfig{} : CliConfig::load(g.config_path);
  if (g.seed_opt->count() > 0) c.seed = g.seed;
  if (g.threshold_opt->count() > 0) c.threshold = g.threshold;
  if (g.percentile_opt->count() > 0) c.percentile = g.percentile;
  if (g.scope_opt->count() > 0) c.delta_scope = parse_delta_scope(g.delta_scope);
  c.validate();
  return c;
}

std::optional<LatentDims> requested_dims(const GlobalFlags& g) {
  if (g.dims.empty()) return std::nullopt;
  return parse_latent_dims(g.dims);
}

void check_dims(const std::optional<LatentDims>& requested, const LatentDims& actual,
                const std::string& what) {
  if (requested && *requested != actual) {
    throw DimensionMismatch("--dims " + requested->to_string() + " does not match " + what +
                            " " + actual.to_string());
  }
}

bool all_pairs_degenerate(std::span<const CameraPose> poses) {
  const int n = static_cast<int>(poses.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && pair_fundamental(poses, i, j)) return false;
    }
  }
  return true;
}

/// Background tokens from a human-mask file whose resolution is an integer
/// multiple of the latent grid, or every token when no file is given.
std::vector<int> load_background(const std::string& path, const LatentDims& dims) {
  if (path.empty()) {
    std::vector<int> all(static_cast<std::size_t>(dims.tokens()));
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  const MaskSequence human = load_mask_sequence(path);
  if (human.height % dims.height != 0 || human.width % dims.width != 0 ||
      human.height / dims.height != human.width / dims.width) {
    throw DimensionMismatch("background mask " + std::to_string(human.frames) + "x" +
                            std::to_string(human.height) + "x" +
                            std::to_string(human.width) + " does not tile latent " +
                            dims.to_string());
  }
  return background_token_set(human, dims, human.height / dims.height);
}

std::array<int, 3> parse_triple(const std::string& text) {
  std::array<int, 3> v{};
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int i = 0; i < 3; ++i) {
    const auto [next, ec] = std::from_chars(p, end, v[i]);
    if (ec != std::errc()) throw ParseError(0, "query must look like i,u,v");
    p = next;
    if (i < 2) {
      if (p == end || *p != ',') throw ParseError(0, "query must look like i,u,v");
      ++p;
    }
  }
  if (p != end) throw ParseError(0, "query must look like i,u,v");
  return v;
}

int cmd_mask(const CliConfig& cfg, const GlobalFlags& g, const std::string& traj_path,
             const std::string& out_path, std::ostream& out, std::ostream& err) {
  const Trajectory traj = load_trajectory(traj_path);
  const LatentTrajectory latent = to_latent(traj, cfg.spatial_factor, cfg.temporal_factor);
  check_dims(requested_dims(g), latent.dims, "trajectory latent dims");
  if (latent.poses.size() < 2 || all_pairs_degenerate(latent.poses)) {
    err << "warning: all pairs degenerate\n";
    return kDegenerate;
  }
  const EpipolarMaskVolume volume =
      mask_volume(latent.poses, latent.dims.grid(), cfg.threshold);
  const std::vector<std::uint8_t> bytes = encode_mask_volume(volume);
  write_file_bytes(out_path, bytes);

  out << "dims=" << latent.dims.to_string() << "\n";
  out << "threshold=" << num(cfg.threshold) << "\n";
  int degenerate = 0;
  for (int i = 0; i < latent.dims.frames; ++i) {
    for (int j = 0; j < latent.dims.frames; ++j) {
      const bool fallback = i == j || !pair_fundamental(latent.poses, i, j);
      if (i != j && fallback) ++degenerate;
      out << "pair=" << i << "," << j
          << " fill_fraction=" << num(volume.pair_fill_fraction(i, j))
          << " kind=" << (fallback ? "degenerate" : "band") << "\n";
    }
  }
  out << "degenerate_pairs=" << degenerate << "\n";
  out << "bytes=" << bytes.size() << "\n";
  return kOk;
}

int cmd_loss(const CliConfig& cfg, const GlobalFlags& g, const std::string& attn_path,
             const std::string& mask_path, const std::string& bg_path, std::ostream& out) {
  const AttentionMap attention = load_attention(attn_path);
  const EpipolarMaskVolume mask = load_mask_volume(mask_path);
  check_dims(requested_dims(g), mask.dims(), "mask volume");
  if (attention.tokens() != mask.dims().tokens()) {
    throw DimensionMismatch("attention has L=" + std::to_string(attention.tokens()) +
                            ", mask volume has L=" + std::to_string(mask.dims().tokens()));
  }
  const std::vector<int> background = load_background(bg_path, mask.dims());
  const BatchLossReport report =
      epipolar_loss_batch(attention, mask, background, cfg.percentile, cfg.delta_scope);

  out << "batch=" << attention.batch() << "\n";
  out << "tokens=" << attention.tokens() << "\n";
  out << "percentile=" << num(cfg.percentile) << "\n";
  out << "delta_scope=" << to_string(cfg.delta_scope) << "\n";
  out << "loss=" << num(report.loss) << "\n";
  out << "suppressed_count=" << report.suppressed_count << "\n";
  out << "active_queries=" << report.active_queries << "\n";
  const int frames = mask.dims().frames;
  for (int i = 0; i < frames; ++i) {
    for (int j = 0; j < frames; ++j) {
      out << "pair=" << i << "," << j
          << " loss=" << num(report.pair_loss[static_cast<std::size_t>(i) * frames + j])
          << "\n";
    }
  }
  return kOk;
}

int cmd_gradcheck(const CliConfig& cfg, const GlobalFlags& g, int instances, bool corrupt,
                  std::ostream& out, std::ostream& err) {
  GradCheckOptions options;
  options.seed = cfg.seed;
  options.instances = instances;
  options.dims = requested_dims(g);
  options.percent = cfg.percentile;
  options.corrupt_analytic = corrupt;
  const GradCheckResult result = run_gradient_check(options);
  for (std::size_t i = 0; i < result.instances.size(); ++i) {
    const GradCheckInstance& inst = result.instances[i];
    out << "instance=" << i << " seed=" << inst.seed << " dims=" << inst.dims.to_string()
        << " suppressed=" << inst.suppressed
        << " max_rel_error=" << num(inst.max_relative_error) << "\n";
  }
  out << "max_rel_error=" << num(result.max_relative_error) << "\n";
  out << "tolerance=" << num(options.tolerance) << "\n";
  out << "status=" << (result.passed ? "pass" : "fail") << "\n";
  if (!result.passed) {
    const std::uint64_t seed = result.instances[result.worst].seed;
    out << "failing_seed=" << seed << "\n";
    err << "gradient check failed on instance seed " << seed << "\n";
    return kCheckFailure;
  }
  return kOk;
}

int cmd_render(const GlobalFlags& g, const std::string& mask_path, const std::string& query,
               int key_frame, const std::string& out_path, std::ostream& out) {
  const EpipolarMaskVolume volume = load_mask_volume(mask_path);
  const LatentDims& dims = volume.dims();
  check_dims(requested_dims(g), dims, "mask volume");
  const auto [i, u, v] = parse_triple(query);
  if (!dims.contains({i, u, v})) {
    throw DimensionMismatch("query " + query + " outside latent " + dims.to_string());
  }
  if (key_frame < 0 || key_frame >= dims.frames) {
    throw DimensionMismatch("key frame " + std::to_string(key_frame) + " outside [0, " +
                            std::to_string(dims.frames) + ")");
  }
  const EpipolarMask mask = volume.slice({i, u, v}, key_frame);
  write_file_bytes(out_path, render_pgm(mask, g.upscale));
  out << "query=" << i << "," << u << "," << v << "\n";
  out << "key_frame=" << key_frame << "\n";
  out << "popcount=" << mask.popcount() << "\n";
  out << "all_true=" << (mask.popcount() == dims.frame_area() ? 1 : 0) << "\n";
  out << "width=" << dims.width * g.upscale << "\n";
  out << "height=" << dims.height * g.upscale << "\n";
  return kOk;
}

int cmd_demo_train(const CliConfig& cfg, const GlobalFlags& g, const std::string& traj_path,
                   const std::string& bg_path, int steps, double lr, std::ostream& out,
                   std::ostream& err) {
  const std::optional<LatentDims> requested = requested_dims(g);
  Trajectory traj;
  if (traj_path.empty()) {
    const LatentDims d = requested.value_or(LatentDims{4, 12, 9});
    traj = dolly_trajectory((d.frames - 1) * cfg.temporal_factor + 1, d.grid(),
                            cfg.spatial_factor);
  } else {
    traj = load_trajectory(traj_path);
  }
  const LatentTrajectory latent = to_latent(traj, cfg.spatial_factor, cfg.temporal_factor);
  check_dims(requested, latent.dims, "trajectory latent dims");
  if (latent.poses.size() < 2 || all_pairs_degenerate(latent.poses)) {
    err << "warning: all pairs degenerate\n";
    return kDegenerate;
  }
  const EpipolarMaskVolume mask = mask_volume(latent.poses, latent.dims.grid(), cfg.threshold);
  const std::vector<int> background =
      bg_path.empty()
          ? background_token_set(standing_person_mask(latent.dims, cfg.spatial_factor),
                                 latent.dims, cfg.spatial_factor)
          : load_background(bg_path, latent.dims);

  DemoOptions options;
  options.steps = steps;
  options.lr = lr;
  options.seed = cfg.seed;
  options.percent = cfg.percentile;
  options.scope = cfg.delta_scope;
  const DemoResult result = run_demo_training(mask, background, options);

  out << "dims=" << latent.dims.to_string() << "\n";
  out << "background_queries=" << background.size() << "\n";
  for (const DemoStep& s : result.log) {
    out << "step=" << s.step << " loss=" << num(s.loss)
        << " out_of_epipolar_mass=" << num(s.out_of_epipolar_mass)
        << " suppressed=" << s.suppressed << "\n";
  }
  const double ratio = result.initial_mass > 0.0 ? result.final_mass / result.initial_mass : 1.0;
  out << "initial_mass=" << num(result.initial_mass) << "\n";
  out << "final_mass=" << num(result.final_mass) << "\n";
  out << "mass_ratio=" << num(ratio) << "\n";
  out << "nonincreasing_fraction=" << num(result.nonincreasing_fraction) << "\n";
  out << "final_in_mask_mass=" << num(result.final_in_mask_mass) << "\n";
  out << "final_max_attention=" << num(result.final_max_attention) << "\n";
  return kOk;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kDegenerateMotion:
      return kDegenerate;
    case ErrorCode::kDimensionMismatch:
      return kDimensionError;
    case ErrorCode::kParseError:
    case ErrorCode::kFormatError:
    case ErrorCode::kNonRotation:
    case ErrorCode::kNonFiniteInput:
    case ErrorCode::kInvalidArgument:
      return kParseError;
    default:
      return kIoError;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Epipolar attention masks, losses and checks", "epicon"};
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--config", g.config_path, "JSON config file");
  g.seed_opt = app.add_option("--seed", g.seed, "Random seed");
  g.threshold_opt = app.add_option("--threshold", g.threshold, "Band half-width in latent px");
  g.percentile_opt = app.add_option("--percentile", g.percentile, "Suppression percentile");
  g.scope_opt = app.add_option("--delta-scope", g.delta_scope, "row or block");
  app.add_option("--dims", g.dims, "Latent dims FxHxW");
  app.add_option("--upscale", g.upscale, "Nearest-neighbour upscale for images")
      ->check(CLI::PositiveNumber);

  std::string traj_path, out_path, attn_path, mask_path, bg_path, query;
  int instances = 20, key_frame = 0, steps = 200;
  double lr = 0.05;
  bool corrupt = false;

  auto* mask = app.add_subcommand("mask", "Build an EPMV1 mask volume from a trajectory");
  mask->add_option("--trajectory", traj_path)->required();
  mask->add_option("--out", out_path)->required();

  auto* loss = app.add_subcommand("loss", "Evaluate the epipolar loss");
  loss->add_option("--attention", attn_path)->required();
  loss->add_option("--mask", mask_path)->required();
  loss->add_option("--background", bg_path, "HMASK1 human mask");

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  grad->add_option("--instances", instances)->check(CLI::PositiveNumber);
  grad->add_flag("--corrupt-gradient", corrupt)->group("");

  auto* render = app.add_subcommand("render", "Render one mask slice as a P5 graymap");
  render->add_option("--mask", mask_path)->required();
  render->add_option("--query", query, "i,u,v")->required();
  render->add_option("--key-frame", key_frame)->required();
  render->add_option("--out", out_path)->required();

  auto* demo = app.add_subcommand("demo-train", "Descend on the epipolar loss");
  demo->add_option("--trajectory", traj_path);
  demo->add_option("--background", bg_path, "HMASK1 human mask");
  demo->add_option("--steps", steps)->check(CLI::NonNegativeNumber);
  demo->add_option("--lr", lr);

  auto* config = app.add_subcommand("config", "Print the effective configuration");

  for (CLI::App* sub : {mask, loss, grad, render, demo, config}) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kParseError;
  }

  try {
    const CliConfig cfg = effective_config(g);
    if (*mask) return cmd_mask(cfg, g, traj_path, out_path, out, err);
    if (*loss) return cmd_loss(cfg, g, attn_path, mask_path, bg_path, out);
    if (*grad) return cmd_gradcheck(cfg, g, instances, corrupt, out, err);
    if (*render) return cmd_render(g, mask_path, query, key_frame, out_path, out);
    if (*demo) return cmd_demo_train(cfg, g, traj_path, bg_path, steps, lr, out, err);
    out << cfg.to_json();
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  }
}

}  // namespace epicon::cli
