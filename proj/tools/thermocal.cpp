#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "thermocal/calibration.hpp"
#include "thermocal/enhance/weights_io.hpp"
#include "thermocal/error.hpp"
#include "thermocal/io.hpp"
#include "thermocal/pipeline.hpp"
#include "thermocal/plot.hpp"
#include "thermocal/synth.hpp"

namespace fs = std::filesystem;
using namespace thermocal;

namespace {

constexpr int kExitNumeric = 1;
constexpr int kExitInput = 2;

struct Common {
  std::string manifest;
  std::string out;
  std::string config;
  std::string weights;
  std::string enhanced;
  std::string form = "linear";
  std::string rescale;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool direct = false;
  unsigned jobs = 1;
};

PipelineOptions make_options(const Common& c) {
  PipelineOptions o;
  if (!c.config.empty()) o.apply_json(io::read_text(c.config));
  if (c.seed_set) {
    o.seed = c.seed;
    o.train.seed = c.seed;
  }
  if (c.direct) o.direct = true;
  if (!c.weights.empty()) o.weights = fs::path(c.weights);
  if (!c.rescale.empty()) o.rescale = rescale_mode_from_string(c.rescale);
  o.calibration_form = model_form_from_string(c.form);
  if (c.jobs == 0) throw ArgumentError("--jobs must be positive");
  o.jobs = c.jobs;
  o.out_dir = c.out;
  return o;
}

struct Loaded {
  SequenceManifest manifest;
  std::vector<ThermalFrame> frames;
  SequenceRegions regions;
};

Loaded load_sequence(const std::string& path) {
  Loaded l;
  l.manifest = SequenceManifest::load(path);
  l.frames = load_frames(l.manifest);
  l.regions = build_regions(l.manifest, l.frames);
  return l;
}

int cmd_synth(const Common& c) {
  SynthConfig cfg;
  if (!c.config.empty()) cfg = SynthConfig::from_json(io::read_text(c.config));
  if (c.seed_set) cfg.seed = c.seed;
  const fs::path manifest = write_sequence(generate(cfg), c.out);
  std::printf("%s\n", manifest.string().c_str());
  return 0;
}

int cmd_calibrate(const Common& c) {
  const SequenceManifest m = SequenceManifest::load(c.manifest);
  const auto frames = load_frames(m);
  const CalibrationModel model = calibrate_sequence(frames, model_form_from_string(c.form));
  const fs::path out = c.out.empty() ? fs::path("calibration.json") : fs::path(c.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  model.save(out.string());
  std::printf("form %s mse %.6g -> %s\n", std::string(to_string(model.form)).c_str(), model.mse,
              out.string().c_str());
  return 0;
}

int cmd_train(const Common& c) {
  const PipelineOptions o = make_options(c);
  const Loaded l = load_sequence(c.manifest);
  const auto r = enhance::train(l.regions.pairs, o.train, [](std::size_t epoch, double loss) {
    std::fprintf(stderr, "epoch %zu soft loss %.6f\n", epoch, loss);
  });
  const fs::path out = c.out.empty() ? fs::path("weights.thcw") : fs::path(c.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  enhance::save_weights(out, r.weights);
  std::printf("samples %zu loss %.6f -> %.6f, weights %s\n", r.samples_seen, r.initial_loss, r.final_loss,
              out.string().c_str());
  return 0;
}

int cmd_enhance(const Common& c) {
  const PipelineOptions o = make_options(c);
  if (!o.direct && !o.weights) throw ArgumentError("enhance needs --weights or --direct");
  const Loaded l = load_sequence(c.manifest);
  const auto curves = enhance_sequence(l.regions, o);
  const auto gray = enhanced_gray_frames(l.frames, l.regions, curves);
  write_enhanced_frames(gray, c.out);
  std::printf("%zu enhanced frames -> %s\n", gray.size(), c.out.c_str());
  return 0;
}

PipelineResult evaluate_enhanced(const Common& c, const PipelineOptions& o) {
  const Loaded l = load_sequence(c.manifest);
  auto curves = read_enhanced_curves(c.enhanced, l.regions);
  return evaluate_sequence(l.manifest, l.frames, l.regions, std::move(curves), o);
}

int cmd_profile(const Common& c) {
  const PipelineOptions o = make_options(c);
  const PipelineResult r = evaluate_enhanced(c, o);
  fs::create_directories(c.out);
  io::write_text(fs::path(c.out) / "profiles.csv", profiles_csv(r.original, r.enhanced, r.gt));
  const TemperatureProfile plots[] = {r.original, r.gt, r.enhanced};
  emit_plot(plots, fs::path(c.out) / "profiles.svg");
  std::printf("anchor (%zu, %zu) Dis(Orig,GT) %.4f Dis(En,GT) %.4f\n", r.report.anchor.x, r.report.anchor.y,
              r.report.dis_orig_gt, r.report.dis_en_gt);
  return 0;
}

int cmd_metrics(const Common& c) {
  PipelineOptions o = make_options(c);
  const PipelineResult r = evaluate_enhanced(c, o);
  const std::string json = r.report.to_json();
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    io::write_text(fs::path(c.out) / "metrics.json", json);
  }
  std::printf("%s", json.c_str());
  return 0;
}

int cmd_pipeline(const Common& c) {
  const PipelineOptions o = make_options(c);
  const SequenceManifest m = SequenceManifest::load(c.manifest);
  const PipelineResult r = run_pipeline(m, o);
  std::printf("%s", r.report.to_json().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emissivity-aware thermal image enhancement and temperature calibration"};
  app.require_subcommand(1);
  Common c;

  auto seed_opt = [&](CLI::App* s) {
    s->add_option("--seed", c.seed, "random seed")->each([&](const std::string&) { c.seed_set = true; });
  };
  auto manifest_opt = [&](CLI::App* s) {
    s->add_option("--manifest", c.manifest, "sequence manifest JSON")->required()->check(CLI::ExistingFile);
  };
  auto pipeline_opts = [&](CLI::App* s) {
    s->add_option("--config", c.config, "pipeline options JSON")->check(CLI::ExistingFile);
    s->add_flag("--direct", c.direct, "optimize curve parameters per frame instead of using the network");
    s->add_option("--weights", c.weights, "network weights (THCW)")->check(CLI::ExistingFile);
    s->add_option("--jobs", c.jobs, "worker threads for per-frame stages");
    s->add_option("--form", c.form, "calibration model form")
        ->check(CLI::IsMember({"linear", "quadratic", "cubic", "logistic"}));
    s->add_option("--rescale", c.rescale, "profile rescale mode")->check(CLI::IsMember({"percentile", "max_fraction"}));
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic two-material sequence");
  synth->add_option("--out", c.out, "output directory")->required();
  synth->add_option("--config", c.config, "synthesis config JSON")->check(CLI::ExistingFile);
  seed_opt(synth);

  auto* calibrate = app.add_subcommand("calibrate", "fit the gray-temperature model");
  manifest_opt(calibrate);
  calibrate->add_option("--out", c.out, "calibration JSON path");
  calibrate->add_option("--form", c.form, "model form")
      ->check(CLI::IsMember({"linear", "quadratic", "cubic", "logistic"}));

  auto* train = app.add_subcommand("train", "train the enhancement network on a sequence");
  manifest_opt(train);
  train->add_option("--out", c.out, "weights path");
  train->add_option("--config", c.config, "pipeline options JSON")->check(CLI::ExistingFile);
  seed_opt(train);

  auto* enhance_cmd = app.add_subcommand("enhance", "write enhanced gray frames");
  manifest_opt(enhance_cmd);
  enhance_cmd->add_option("--out", c.out, "output directory")->required();
  pipeline_opts(enhance_cmd);
  seed_opt(enhance_cmd);

  auto* profile = app.add_subcommand("profile", "extract temperature profiles from enhanced frames");
  manifest_opt(profile);
  profile->add_option("--enhanced", c.enhanced, "directory of enhanced frames")->required()->check(CLI::ExistingDirectory);
  profile->add_option("--out", c.out, "output directory")->required();
  pipeline_opts(profile);
  seed_opt(profile);

  auto* metrics = app.add_subcommand("metrics", "compute quality metrics for enhanced frames");
  manifest_opt(metrics);
  metrics->add_option("--enhanced", c.enhanced, "directory of enhanced frames")->required()->check(CLI::ExistingDirectory);
  metrics->add_option("--out", c.out, "output directory");
  pipeline_opts(metrics);
  seed_opt(metrics);

  auto* pipeline = app.add_subcommand("pipeline", "run every stage end to end");
  manifest_opt(pipeline);
  pipeline->add_option("--out", c.out, "output directory")->required();
  pipeline_opts(pipeline);
  seed_opt(pipeline);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*synth) return cmd_synth(c);
    if (*calibrate) return cmd_calibrate(c);
    if (*train) return cmd_train(c);
    if (*enhance_cmd) return cmd_enhance(c);
    if (*profile) return cmd_profile(c);
    if (*metrics) return cmd_metrics(c);
    if (*pipeline) return cmd_pipeline(c);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_input_error() ? kExitInput : kExitNumeric;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return 0;
}
