#include "thermocal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "json_util.hpp"
#include "thermocal/io.hpp"
#include "thermocal/manifest.hpp"
#include "thermocal/rng.hpp"

namespace thermocal {

namespace fs = std::filesystem;
using detail::json;
using detail::ordered_json;

std::string_view to_string(Ramp ramp) { return ramp == Ramp::kLinear ? "linear" : "logistic"; }

Ramp ramp_from_string(std::string_view name) {
  if (name == "linear") return Ramp::kLinear;
  if (name == "logistic") return Ramp::kLogistic;
  throw ConfigError("unknown ramp '" + std::string(name) + "' (expected linear or logistic)");
}

CalibrationModel SynthConfig::default_gray_law() {
  CalibrationModel m;
  m.form = ModelForm::kLinear;
  m.coefficients = {0.915, 0.05};
  return m;
}

void SynthConfig::validate() const {
  if (width == 0 || height == 0) throw ConfigError("synth: width and height must be positive");
  if (frames < 2) throw ConfigError("synth: at least two frames are required");
  if (!(temp_end_c > temp_start_c)) throw ConfigError("synth: temp_end_c must exceed temp_start_c");
  if (!(noise_std >= 0.0)) throw ConfigError("synth: noise_std must be >= 0");
  if (!(perturbation_c >= 0.0)) throw ConfigError("synth: perturbation_c must be >= 0");
  if (!(split > 0.0 && split < 1.0)) throw ConfigError("synth: split must lie in (0, 1)");
  if (!(interval_s >= 0.0)) throw ConfigError("synth: interval_s must be >= 0");
  if (ramp == Ramp::kLogistic && !(logistic_rate > 0.0)) throw ConfigError("synth: logistic_rate must be > 0");
  const auto cols = static_cast<std::size_t>(std::lround(split * static_cast<double>(width)));
  if (cols == 0 || cols >= width) throw ConfigError("synth: split leaves one material without pixels");
  for (double e : {eps_target, eps_reference}) {
    if (!(e > 0.0 && e <= 1.0)) throw ConfigError("synth: emissivities must lie in (0, 1]");
  }
  try {
    env.validate();
    gray_law.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("synth: ") + e.what());
  } catch (const CalibrationError& e) {
    throw ConfigError(std::string("synth gray law: ") + e.what());
  }
  if (!gray_law.monotone_on_unit_interval()) throw ConfigError("synth: gray law must be monotone");
}

std::string SynthConfig::to_json() const {
  ordered_json j;
  j["name"] = name;
  j["width"] = width;
  j["height"] = height;
  j["frames"] = frames;
  j["temp_start_c"] = temp_start_c;
  j["temp_end_c"] = temp_end_c;
  j["ramp"] = to_string(ramp);
  j["logistic_rate"] = logistic_rate;
  j["logistic_midpoint"] = logistic_midpoint;
  j["eps_target"] = eps_target;
  j["eps_reference"] = eps_reference;
  j["split"] = split;
  j["env"] = detail::env_to_json(env);
  j["gray_law"] = ordered_json::parse(gray_law.to_json());
  j["auto_bounds"] = auto_bounds;
  j["perturbation_c"] = perturbation_c;
  j["noise_std"] = noise_std;
  j["interval_s"] = interval_s;
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

SynthConfig SynthConfig::from_json(std::string_view text) {
  const json j = detail::parse_json(std::string(text), "synth config");
  if (!j.is_object()) throw ConfigError("synth config must be a JSON object");
  SynthConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "name") c.name = v.get<std::string>();
      else if (key == "width") c.width = v.get<std::size_t>();
      else if (key == "height") c.height = v.get<std::size_t>();
      else if (key == "frames") c.frames = v.get<std::size_t>();
      else if (key == "temp_start_c") c.temp_start_c = v.get<double>();
      else if (key == "temp_end_c") c.temp_end_c = v.get<double>();
      else if (key == "ramp") c.ramp = ramp_from_string(v.get<std::string>());
      else if (key == "logistic_rate") c.logistic_rate = v.get<double>();
      else if (key == "logistic_midpoint") c.logistic_midpoint = v.get<double>();
      else if (key == "eps_target") c.eps_target = v.get<double>();
      else if (key == "eps_reference") c.eps_reference = v.get<double>();
      else if (key == "split") c.split = v.get<double>();
      else if (key == "env") c.env = detail::env_from_json(v);
      else if (key == "gray_law") c.gray_law = CalibrationModel::from_json(v.dump());
      else if (key == "auto_bounds") c.auto_bounds = v.get<bool>();
      else if (key == "perturbation_c") c.perturbation_c = v.get<double>();
      else if (key == "noise_std") c.noise_std = v.get<double>();
      else if (key == "interval_s") c.interval_s = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else throw ConfigError("unknown synth config field '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

double ramp_temperature(const SynthConfig& cfg, std::size_t frame) {
  const double s = static_cast<double>(frame) / static_cast<double>(cfg.frames - 1);
  double shape = s;
  if (cfg.ramp == Ramp::kLogistic) {
    auto sig = [&](double u) { return 1.0 / (1.0 + std::exp(-cfg.logistic_rate * (u - cfg.logistic_midpoint))); };
    shape = (sig(s) - sig(0.0)) / (sig(1.0) - sig(0.0));
  }
  return cfg.temp_start_c + shape * (cfg.temp_end_c - cfg.temp_start_c);
}

namespace {

/// Sum of three seeded plane waves, scaled so |P| <= amplitude.
Plane perturbation_field(std::size_t w, std::size_t h, double amplitude, Rng& rng) {
  struct Wave {
    double fx, fy, phase, weight;
  };
  std::array<Wave, 3> waves{};
  double total = 0.0;
  for (auto& wv : waves) {
    wv.fx = rng.uniform(0.5, 2.5);
    wv.fy = rng.uniform(0.5, 2.5);
    wv.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    wv.weight = rng.uniform(0.5, 1.0);
    total += wv.weight;
  }
  Plane p(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double v = 0.0;
      for (const auto& wv : waves) {
        const double arg = 2.0 * std::numbers::pi *
                               (wv.fx * static_cast<double>(x) / static_cast<double>(w) +
                                wv.fy * static_cast<double>(y) / static_cast<double>(h)) + wv.phase;
        v += wv.weight * std::sin(arg);
      }
      p(x, y) = amplitude * v / total;
    }
  }
  return p;
}

}  // namespace

SynthOutput generate(const SynthConfig& config) {
  config.validate();
  SynthOutput out;
  out.config = config;
  const std::size_t w = config.width, h = config.height;
  const auto split_col = static_cast<std::size_t>(std::lround(config.split * static_cast<double>(w)));

  out.target_mask = RegionMask{Bitmap(w, h, 0), "target"};
  out.reference_mask = RegionMask{Bitmap(w, h, 0), "reference"};
  out.emissivity = Plane(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const bool target = x < split_col;
      (target ? out.target_mask : out.reference_mask).bitmap(x, y) = 255;
      out.emissivity(x, y) = target ? config.eps_target : config.eps_reference;
    }
  }

  Rng rng(config.seed);
  const Plane field = perturbation_field(w, h, config.perturbation_c, rng);
  out.tau = atmospheric_transmittance(config.env);

  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t f = 0; f < config.frames; ++f) {
    const double base = ramp_temperature(config, f);
    Plane gt(w, h), measured(w, h);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      gt[i] = base + field[i];
      measured[i] = render_measured(gt[i], Emissivity(out.emissivity[i]), config.env, out.tau);
      lo = std::min(lo, measured[i]);
      hi = std::max(hi, measured[i]);
    }
    out.gt_temps.push_back(std::move(gt));
    out.frames.push_back({Plane(w, h), std::move(measured)});
    out.timestamps.push_back(static_cast<double>(f) * config.interval_s);
  }

  CalibrationModel& law = out.config.gray_law;
  if (config.auto_bounds) {
    law.bounds.temp_min = lo;
    law.bounds.temp_max = hi;
    law.bounds.gray_min = 0.0;
    law.bounds.gray_max = 1.0;
  }
  law.validate();
  for (auto& frame : out.frames) {
    for (std::size_t i = 0; i < frame.gray.size(); ++i) {
      double g = temp_to_gray(law, frame.temp[i]).value;
      if (config.noise_std > 0.0) g += rng.normal(0.0, config.noise_std);
      frame.gray[i] = std::clamp(g, 0.0, 1.0);
    }
  }
  return out;
}

fs::path write_sequence(const SynthOutput& out, const fs::path& dir) {
  fs::create_directories(dir / "frames");
  fs::create_directories(dir / "masks");
  fs::create_directories(dir / "gt");
  SequenceManifest m;
  m.name = out.config.name;
  char buf[64];
  for (std::size_t f = 0; f < out.frames.size(); ++f) {
    std::snprintf(buf, sizeof buf, "%03zu", f);
    const fs::path gray = fs::path("frames") / ("gray_" + std::string(buf) + ".pgm");
    const fs::path temp = fs::path("frames") / ("temp_" + std::string(buf) + ".csv");
    io::write_gray_pgm16(dir / gray, out.frames[f].gray);
    io::write_temperature_csv(dir / temp, out.frames[f].temp);
    io::write_temperature_csv(dir / "gt" / ("gt_" + std::string(buf) + ".csv"), out.gt_temps[f]);
    m.frames.push_back({gray, temp, out.timestamps[f]});
  }
  io::write_mask_pgm(dir / "masks" / "target.pgm", out.target_mask.bitmap);
  io::write_mask_pgm(dir / "masks" / "reference.pgm", out.reference_mask.bitmap);
  m.masks["target"] = fs::path("masks") / "target.pgm";
  m.masks["reference"] = fs::path("masks") / "reference.pgm";
  m.emissivity["target"] = out.config.eps_target;
  m.emissivity["reference"] = out.config.eps_reference;
  m.env = out.config.env;
  io::write_text(dir / "synth_config.json", out.config.to_json());
  const fs::path manifest = dir / "manifest.json";
  m.save(manifest);
  return manifest;
}

}  // namespace thermocal
