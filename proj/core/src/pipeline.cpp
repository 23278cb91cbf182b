#include "thermocal/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json_util.hpp"
#include "parallel.hpp"
#include "thermocal/enhance/weights_io.hpp"
#include "thermocal/io.hpp"
#include "thermocal/plot.hpp"

namespace thermocal {

namespace fs = std::filesystem;

namespace {

/// Re-raises the active exception with a context prefix, keeping its type.
[[noreturn]] void rethrow_with_context(const std::string& ctx) {
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(ctx + e.what());
  } catch (const ArgumentError& e) {
    throw ArgumentError(ctx + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(ctx + e.what());
  } catch (const InputError& e) {
    throw InputError(ctx + e.what());
  } catch (const FitError& e) {
    throw FitError(ctx + e.what());
  } catch (const InversionError& e) {
    throw InversionError(ctx + e.what());
  } catch (const CalibrationError& e) {
    throw CalibrationError(ctx + e.what());
  } catch (const DomainError& e) {
    throw DomainError(ctx + e.what());
  } catch (const OptimizationError& e) {
    throw OptimizationError(ctx + e.what());
  } catch (const Error& e) {
    throw Error(ctx + e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    throw InputError(ctx + e.what());
  }
}

std::string stage_ctx(const char* stage) { return std::string("stage ") + stage + ": "; }
std::string frame_ctx(const char* stage, std::size_t f) {
  return std::string("stage ") + stage + ", frame " + std::to_string(f) + ": ";
}

template <typename F>
auto in_stage(const char* stage, F&& f) {
  try {
    return f();
  } catch (...) {
    rethrow_with_context(stage_ctx(stage));
  }
}

template <typename F>
void per_frame(const char* stage, std::size_t n, unsigned jobs, F&& body) {
  detail::parallel_for(n, std::max(1u, jobs), [&](std::size_t i) {
    try {
      body(i);
    } catch (...) {
      rethrow_with_context(frame_ctx(stage, i));
    }
  });
}

std::vector<double> masked(const Plane& p, const RegionMask& m) {
  std::vector<double> v;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (m.bitmap[i] != 0) v.push_back(p[i]);
  }
  return v;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

void PipelineOptions::apply_json(std::string_view text) {
  using detail::json;
  const json j = detail::parse_json(std::string(text), "pipeline config");
  if (!j.is_object()) throw ConfigError("pipeline config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "seed") seed = v.get<std::uint64_t>();
      else if (key == "direct") direct = v.get<bool>();
      else if (key == "calibration_form") calibration_form = model_form_from_string(v.get<std::string>());
      else if (key == "rescale") rescale = rescale_mode_from_string(v.get<std::string>());
      else if (key == "jobs") jobs = v.get<unsigned>();
      else if (key == "train") {
        for (const auto& [k, x] : v.items()) {
          if (k == "learning_rate") train.learning_rate = x.get<double>();
          else if (k == "epochs") train.epochs = x.get<std::size_t>();
          else if (k == "momentum") train.momentum = x.get<double>();
          else if (k == "batch") train.batch = x.get<std::size_t>();
          else if (k == "seed") train.seed = x.get<std::uint64_t>();
          else if (k == "grad_clip") train.grad_clip = x.get<double>();
          else if (k == "max_samples") train.max_samples = x.get<std::size_t>();
          else if (k == "bandwidth_start") train.bandwidth_start = x.get<std::size_t>();
          else if (k == "anneal_fraction") train.anneal_fraction = x.get<double>();
          else if (k == "cosine_decay") train.cosine_decay = x.get<bool>();
          else if (k == "stages") train.attention.stages = x.get<std::size_t>();
          else if (k == "d_k") train.attention.d_k = x.get<std::size_t>();
          else throw ConfigError("unknown train field '" + k + "'");
        }
      } else if (key == "direct_config") {
        for (const auto& [k, x] : v.items()) {
          if (k == "steps") direct_config.steps = x.get<std::size_t>();
          else if (k == "learning_rate") direct_config.learning_rate = x.get<double>();
          else if (k == "max_step") direct_config.max_step = x.get<double>();
          else if (k == "bandwidth_start") direct_config.bandwidth_start = x.get<std::size_t>();
          else if (k == "anneal_fraction") direct_config.anneal_fraction = x.get<double>();
          else throw ConfigError("unknown direct_config field '" + k + "'");
        }
      } else {
        throw ConfigError("unknown pipeline config field '" + key + "'");
      }
    }
  } catch (const detail::json::exception& e) {
    throw ConfigError(std::string("pipeline config: ") + e.what());
  }
  train.validate();
  direct_config.validate();
}

std::vector<ThermalFrame> load_frames(const SequenceManifest& manifest) {
  const std::size_t n = manifest.frames.size();
  std::vector<ThermalFrame> frames(n);
  per_frame("load", n, 1, [&](std::size_t f) { frames[f] = manifest.load_frame(f); });
  for (std::size_t f = 1; f < n; ++f) {
    if (!frames[f].gray.same_shape(frames[0].gray)) {
      throw ShapeError(frame_ctx("load", f) + "frame size differs from frame 0");
    }
  }
  return frames;
}

SequenceRegions build_regions(const SequenceManifest& manifest, const std::vector<ThermalFrame>& frames) {
  return in_stage("masks", [&] {
    SequenceRegions r;
    r.target_mask = manifest.load_mask(manifest.target_label);
    r.reference_mask = manifest.load_mask(manifest.reference_label);
    r.target_eps = manifest.emissivity_of(manifest.target_label);
    r.reference_eps = manifest.emissivity_of(manifest.reference_label);
    require_same_shape(r.target_mask.bitmap, r.reference_mask.bitmap, "masks");
    for (std::size_t i = 0; i < r.target_mask.bitmap.size(); ++i) {
      if (r.target_mask.bitmap[i] != 0 && r.reference_mask.bitmap[i] != 0) {
        throw InputError("target and reference masks overlap");
      }
    }
    r.pairs.resize(frames.size());
    for (std::size_t f = 0; f < frames.size(); ++f) {
      try {
        r.pairs[f].target =
            emissivity_normalize(with_emissivity(extract_region(frames[f].gray, r.target_mask), r.target_eps));
        r.pairs[f].reference = emissivity_normalize(
            with_emissivity(extract_region(frames[f].gray, r.reference_mask), r.reference_eps));
      } catch (...) {
        rethrow_with_context("frame " + std::to_string(f) + ": ");
      }
    }
    return r;
  });
}

CalibrationModel calibrate_sequence(const std::vector<ThermalFrame>& frames, ModelForm form) {
  std::vector<SamplePair> raw;
  for (const auto& f : frames) {
    const auto s = window_smooth(f);
    raw.insert(raw.end(), s.begin(), s.end());
  }
  auto [samples, bounds] = normalize_samples(raw);
  CalibrationModel model = fit_model(samples, form);
  model.bounds = bounds;
  return model;
}

double enhanced_to_gray(double curve_value, Emissivity reference_eps) {
  const double c = std::clamp(curve_value, 0.0, std::nextafter(1.0, 0.0));
  return std::clamp(reference_eps.value() * std::atanh(c), 0.0, 1.0);
}

double gray_to_enhanced(double gray, Emissivity reference_eps) {
  return std::tanh(std::clamp(gray, 0.0, 1.0) / reference_eps.value());
}

std::vector<Plane> enhance_sequence(const SequenceRegions& regions, const PipelineOptions& options,
                                    std::optional<enhance::TrainResult>* training) {
  const std::size_t n = regions.pairs.size();
  std::vector<Plane> curves(n);
  if (options.direct) {
    per_frame("enhance", n, options.jobs, [&](std::size_t f) {
      const auto& p = regions.pairs[f];
      const auto d = enhance::optimize_theta_direct(p.target, p.reference, options.direct_config);
      curves[f] = enhance::curve_forward(p.target, d.params);
    });
    return curves;
  }
  enhance::NetworkWeights weights;
  if (options.weights) {
    weights = in_stage("weights", [&] { return enhance::load_weights(*options.weights); });
  } else {
    auto trained = in_stage("train", [&] { return enhance::train(regions.pairs, options.train); });
    weights = trained.weights;
    if (training != nullptr) *training = std::move(trained);
  }
  per_frame("enhance", n, options.jobs, [&](std::size_t f) {
    const auto& p = regions.pairs[f];
    curves[f] = enhance::enhance_region(p.target, p.reference, weights).plane;
  });
  return curves;
}

std::vector<Plane> enhanced_gray_frames(const std::vector<ThermalFrame>& frames, const SequenceRegions& regions,
                                        const std::vector<Plane>& curves) {
  if (curves.size() != frames.size()) throw ShapeError("one enhanced plane per frame is required");
  const RegionMask& tmask = regions.target_mask;
  std::vector<Plane> out(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    require_same_shape(curves[f], frames[f].gray, "enhanced plane " + std::to_string(f));
    Plane g = frames[f].gray;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (tmask.bitmap[i] != 0) g[i] = enhanced_to_gray(curves[f][i], regions.reference_eps);
    }
    out[f] = std::move(g);
  }
  return out;
}

namespace {
std::string enhanced_name(std::size_t f) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "enhanced_%03zu.pgm", f);
  return buf;
}
}  // namespace

void write_enhanced_frames(const std::vector<Plane>& gray, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t f = 0; f < gray.size(); ++f) io::write_gray_pgm16(dir / enhanced_name(f), gray[f]);
}

std::vector<Plane> read_enhanced_curves(const fs::path& dir, const SequenceRegions& regions) {
  const RegionMask& tmask = regions.target_mask;
  std::vector<Plane> curves(regions.pairs.size());
  for (std::size_t f = 0; f < curves.size(); ++f) {
    const fs::path p = dir / enhanced_name(f);
    if (!fs::exists(p)) throw InputError("missing enhanced frame " + p.string());
    const Plane g = io::read_gray_pgm(p);
    require_same_shape(g, tmask.bitmap, p.string());
    Plane c(g.width(), g.height(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (tmask.bitmap[i] != 0) c[i] = gray_to_enhanced(g[i], regions.reference_eps);
    }
    curves[f] = std::move(c);
  }
  return curves;
}

PipelineResult evaluate_sequence(const SequenceManifest& manifest, const std::vector<ThermalFrame>& frames,
                                 const SequenceRegions& regions, std::vector<Plane> curves,
                                 const PipelineOptions& options) {
  PipelineResult result;
  const std::size_t n = frames.size();
  const unsigned jobs = std::max(1u, options.jobs);
  const RegionMask& tmask = regions.target_mask;
  if (curves.size() != n) throw ShapeError(stage_ctx("evaluate") + "one enhanced plane per frame is required");
  for (std::size_t f = 0; f < n; ++f) {
    if (!curves[f].same_shape(frames[f].gray)) throw ShapeError(frame_ctx("evaluate", f) + "enhanced plane size differs");
  }

  result.frame_losses.resize(n);
  per_frame("loss", n, jobs, [&](std::size_t f) {
    result.frame_losses[f] =
        enhance::loss_total_values(masked(curves[f], tmask), regions.pairs[f].reference.masked_values()).total;
  });

  result.calibration = in_stage("calibrate", [&] {
    if (manifest.calibration) return CalibrationModel::load(manifest.resolve(*manifest.calibration).string());
    return calibrate_sequence(frames, options.calibration_form);
  });
  const CalibrationModel& model = result.calibration;

  std::vector<Plane> enhanced_temp(n), gt(n), measured(n);
  result.enhanced_gray = in_stage("convert", [&] { return enhanced_gray_frames(frames, regions, curves); });
  per_frame("convert", n, jobs, [&](std::size_t f) {
    Plane t = frames[f].temp;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (tmask.bitmap[i] == 0) continue;
      t[i] = gray_to_temp(model, model.bounds.normalize_gray(result.enhanced_gray[f][i])).value;
    }
    enhanced_temp[f] = std::move(t);
  });

  Plane eps_map(tmask.width(), tmask.height(), 1.0);
  for (std::size_t i = 0; i < eps_map.size(); ++i) {
    if (tmask.bitmap[i] != 0) eps_map[i] = regions.target_eps.value();
    else if (regions.reference_mask.bitmap[i] != 0) eps_map[i] = regions.reference_eps.value();
  }
  const RadiometryConstants constants = in_stage("constants", [] { return RadiometryConstants::from_environment(); });
  per_frame("gt", n, 1, [&](std::size_t f) {
    gt[f] = correct_frame(frames[f].temp, eps_map, manifest.env, constants, jobs);
    measured[f] = frames[f].temp;
  });

  MetricsReport& rep = result.report;
  in_stage("profile", [&] {
    rep.anchor = choose_anchor(tmask, options.seed);
    rep.window = kProfileWindow;
    rep.seed = options.seed;
    result.original = extract_profile(measured, rep.anchor, ProfileKind::kOriginal, kProfileWindow, &tmask);
    result.gt = extract_profile(gt, rep.anchor, ProfileKind::kGroundTruth, kProfileWindow, &tmask);
    const auto raw = extract_profile(enhanced_temp, rep.anchor, ProfileKind::kEnhanced, kProfileWindow, &tmask);
    result.enhanced = rescale_profile(minmax_normalize(raw.values), result.gt, options.rescale);
    return 0;
  });

  in_stage("metrics", [&] {
    std::vector<double> ssims(n), ceis(n), ssims_n(n), ceis_n(n), ent(n), ent0(n);
    per_frame("metrics", n, jobs, [&](std::size_t f) {
      const Plane& g0 = frames[f].gray;
      const Plane& g1 = result.enhanced_gray[f];
      const Plane& c0 = regions.pairs[f].target.plane;
      ssims[f] = ssim(g1, g0, &tmask);
      ceis[f] = cei_values(masked(g1, tmask), masked(g0, tmask));
      ssims_n[f] = ssim(curves[f], c0, &tmask);
      ceis_n[f] = cei_values(masked(curves[f], tmask), masked(c0, tmask));
      ent[f] = entropy_values(masked(g1, tmask));
      ent0[f] = entropy_values(masked(g0, tmask));
    });
    rep.ssim = mean_of(ssims);
    rep.cei = mean_of(ceis);
    rep.ssim_normalized = mean_of(ssims_n);
    rep.cei_normalized = mean_of(ceis_n);
    rep.entropy_bits = mean_of(ent);
    rep.entropy_original_bits = mean_of(ent0);
    rep.loss_total = mean_of(result.frame_losses);
    rep.dis_orig_gt = profile_distance(result.original, result.gt);
    rep.dis_en_gt = profile_distance(result.enhanced, result.gt);
    if (n >= 2) {
      const ErrorStats es = error_stats(result.enhanced, result.gt);
      rep.err_mean_c = es.mean_c;
      rep.err_std_c = es.std_c;
    } else {
      rep.err_mean_c = result.enhanced.values[0] - result.gt.values[0];
      rep.err_std_c = 0.0;
    }
    rep.rescale = options.rescale;
    rep.enhancement_mode = options.direct ? "direct" : (options.weights ? "network" : "network (trained in run)");
    rep.frames = n;
    rep.validate();
    return 0;
  });
  result.enhanced_planes = std::move(curves);
  return result;
}

void write_outputs(const PipelineResult& result, const PipelineOptions& options) {
  if (options.out_dir.empty()) return;
  in_stage("write", [&] {
    fs::create_directories(options.out_dir);
    io::write_text(options.out_dir / "profiles.csv", profiles_csv(result.original, result.enhanced, result.gt));
    io::write_text(options.out_dir / "metrics.json", result.report.to_json());
    const TemperatureProfile plots[] = {result.original, result.gt, result.enhanced};
    emit_plot(plots, options.out_dir / "profiles.svg");
    io::write_text(options.out_dir / "calibration.json", result.calibration.to_json());
    if (options.write_frames) write_enhanced_frames(result.enhanced_gray, options.out_dir / "enhanced");
    if (result.training) enhance::save_weights(options.out_dir / "weights.thcw", result.training->weights);
    return 0;
  });
}

PipelineResult run_pipeline(const SequenceManifest& manifest, const PipelineOptions& options) {
  const std::vector<ThermalFrame> frames = load_frames(manifest);
  const SequenceRegions regions = build_regions(manifest, frames);
  std::optional<enhance::TrainResult> training;
  std::vector<Plane> curves = enhance_sequence(regions, options, &training);
  PipelineResult result = evaluate_sequence(manifest, frames, regions, std::move(curves), options);
  result.training = std::move(training);
  write_outputs(result, options);
  return result;
}

}  // namespace thermocal
