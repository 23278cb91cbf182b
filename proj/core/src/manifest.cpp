#include "thermocal/manifest.hpp"

#include <cmath>

#include "json_util.hpp"
#include "thermocal/io.hpp"

namespace thermocal {

namespace fs = std::filesystem;
using detail::json;
using detail::ordered_json;

fs::path SequenceManifest::resolve(const fs::path& p) const {
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

void SequenceManifest::validate() const {
  if (frames.empty()) throw InputError("manifest '" + name + "' lists no frames");
  auto require_file = [&](const fs::path& p, const std::string& what) {
    const fs::path full = resolve(p);
    if (!fs::is_regular_file(full)) throw InputError(what + " not found: " + full.string());
  };
  for (std::size_t i = 0; i < frames.size(); ++i) {
    require_file(frames[i].gray, "gray frame " + std::to_string(i));
    require_file(frames[i].temp, "temperature grid " + std::to_string(i));
    if (!std::isfinite(frames[i].timestamp_s)) {
      throw InputError("frame " + std::to_string(i) + " has a non-finite timestamp");
    }
    if (i > 0 && frames[i].timestamp_s < frames[i - 1].timestamp_s) {
      throw InputError("timestamps decrease at frame " + std::to_string(i));
    }
  }
  for (const auto& label : {target_label, reference_label}) {
    const bool has_mask = masks.count(label) > 0;
    const bool has_colour = labels && labels->colours.count(label) > 0;
    if (!has_mask && !has_colour) throw InputError("no mask given for material '" + label + "'");
    if (emissivity.count(label) == 0) throw InputError("no emissivity given for material '" + label + "'");
  }
  if (target_label == reference_label) throw InputError("target and reference labels must differ");
  for (const auto& [label, path] : masks) require_file(path, "mask '" + label + "'");
  if (labels) require_file(labels->path, "label image");
  for (const auto& [label, value] : emissivity) {
    if (!(value > 0.0 && value <= 1.0)) {
      throw InputError("emissivity of '" + label + "' must lie in (0, 1]");
    }
  }
  if (calibration) require_file(*calibration, "calibration");
  try {
    env.validate();
  } catch (const ArgumentError& e) {
    throw InputError(std::string("manifest env: ") + e.what());
  }
}

std::string SequenceManifest::to_json() const {
  ordered_json j;
  j["name"] = name;
  ordered_json fr = ordered_json::array();
  for (const auto& f : frames) {
    fr.push_back({{"gray", f.gray.generic_string()}, {"temp", f.temp.generic_string()}, {"timestamp", f.timestamp_s}});
  }
  j["frames"] = fr;
  ordered_json m = ordered_json::object();
  for (const auto& [label, path] : masks) m[label] = path.generic_string();
  j["masks"] = m;
  if (labels) {
    ordered_json c = ordered_json::object();
    for (const auto& [label, rgb] : labels->colours) c[label] = {rgb[0], rgb[1], rgb[2]};
    j["labels"] = {{"path", labels->path.generic_string()}, {"colours", c}};
  }
  ordered_json e = ordered_json::object();
  for (const auto& [label, value] : emissivity) e[label] = value;
  j["emissivity"] = e;
  j["target"] = target_label;
  j["reference"] = reference_label;
  j["env"] = detail::env_to_json(env);
  if (calibration) j["calibration"] = calibration->generic_string();
  return j.dump(2) + "\n";
}

SequenceManifest SequenceManifest::from_json(std::string_view text, const fs::path& base_dir) {
  const json j = detail::parse_json(std::string(text), "manifest");
  SequenceManifest m;
  m.base_dir = base_dir;
  try {
    m.name = j.value("name", std::string("sequence"));
    for (const auto& f : j.at("frames")) {
      m.frames.push_back({f.at("gray").get<std::string>(), f.at("temp").get<std::string>(),
                          f.value("timestamp", 0.0)});
    }
    if (j.contains("masks")) {
      for (const auto& [label, path] : j.at("masks").items()) m.masks[label] = path.get<std::string>();
    }
    if (j.contains("labels")) {
      LabelImage li;
      li.path = j.at("labels").at("path").get<std::string>();
      for (const auto& [label, rgb] : j.at("labels").at("colours").items()) {
        const auto v = rgb.get<std::vector<int>>();
        if (v.size() != 3) throw InputError("label colour for '" + label + "' needs three components");
        Rgb c{};
        for (std::size_t i = 0; i < 3; ++i) {
          if (v[i] < 0 || v[i] > 255) throw InputError("label colour component out of range for '" + label + "'");
          c[i] = static_cast<std::uint8_t>(v[i]);
        }
        li.colours[label] = c;
      }
      m.labels = std::move(li);
    }
    for (const auto& [label, value] : j.at("emissivity").items()) m.emissivity[label] = value.get<double>();
    m.target_label = j.value("target", m.target_label);
    m.reference_label = j.value("reference", m.reference_label);
    if (j.contains("env")) m.env = detail::env_from_json(j.at("env"));
    if (j.contains("calibration") && !j.at("calibration").is_null()) {
      m.calibration = j.at("calibration").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("manifest: ") + e.what());
  }
  return m;
}

SequenceManifest SequenceManifest::load(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw InputError("manifest not found: " + path.string());
  SequenceManifest m = from_json(io::read_text(path), path.parent_path());
  m.validate();
  return m;
}

void SequenceManifest::save(const fs::path& path) const { io::write_text(path, to_json()); }

ThermalFrame SequenceManifest::load_frame(std::size_t index) const {
  if (index >= frames.size()) throw ArgumentError("frame index " + std::to_string(index) + " out of range");
  ThermalFrame f{io::read_gray_pgm(resolve(frames[index].gray)), io::read_temperature_csv(resolve(frames[index].temp))};
  if (!f.gray.same_shape(f.temp)) {
    throw ShapeError("frame " + std::to_string(index) + ": gray and temperature grids differ in size");
  }
  return f;
}

RegionMask SequenceManifest::load_mask(const std::string& label) const {
  RegionMask m;
  if (const auto it = masks.find(label); it != masks.end()) {
    m = RegionMask{io::read_mask_pgm(resolve(it->second)), label};
  } else if (labels && labels->colours.count(label) > 0) {
    m = io::mask_from_labels(io::read_png_rgb(resolve(labels->path)), labels->colours.at(label), label);
  } else {
    throw InputError("no mask given for material '" + label + "'");
  }
  if (m.area() == 0) throw InputError("mask for material '" + label + "' is empty");
  return m;
}

Emissivity SequenceManifest::emissivity_of(const std::string& label) const {
  const auto it = emissivity.find(label);
  if (it == emissivity.end()) throw InputError("no emissivity given for material '" + label + "'");
  return Emissivity(it->second);
}

}  // namespace thermocal
