#include "thermocal/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "thermocal/io.hpp"

namespace thermocal {

namespace {

constexpr double kWidth = 640.0, kHeight = 400.0;
constexpr double kLeft = 60.0, kRight = 20.0, kTop = 30.0, kBottom = 50.0;

const char* colour_of(ProfileKind k) {
  switch (k) {
    case ProfileKind::kOriginal: return "#808080";
    case ProfileKind::kGroundTruth: return "#000000";
    case ProfileKind::kEnhanced: return "#ff0000";
  }
  return "#000000";
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string render_profile_svg(std::span<const TemperatureProfile> profiles) {
  if (profiles.empty()) throw ArgumentError("emit_plot: no profiles");
  const std::size_t n = profiles.front().size();
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& p : profiles) {
    p.validate();
    if (p.size() != n) throw ArgumentError("emit_plot: profiles differ in length");
    for (double v : p.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi - lo < 1e-9) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](std::size_t i) {
    return n == 1 ? kLeft + pw / 2.0 : kLeft + pw * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  auto py = [&](double v) { return kTop + ph * (hi - v) / (hi - lo); };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"#ffffff\"/>\n";
  s += "<g stroke=\"#000000\" stroke-width=\"1\" fill=\"none\">\n";
  s += "<line x1=\"" + fmt("%.2f", kLeft) + "\" y1=\"" + fmt("%.2f", kTop + ph) + "\" x2=\"" +
       fmt("%.2f", kLeft + pw) + "\" y2=\"" + fmt("%.2f", kTop + ph) + "\"/>\n";
  s += "<line x1=\"" + fmt("%.2f", kLeft) + "\" y1=\"" + fmt("%.2f", kTop) + "\" x2=\"" + fmt("%.2f", kLeft) +
       "\" y2=\"" + fmt("%.2f", kTop + ph) + "\"/>\n";
  s += "</g>\n";

  s += "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#000000\">\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    const double y = py(v);
    s += "<line x1=\"" + fmt("%.2f", kLeft - 4.0) + "\" y1=\"" + fmt("%.2f", y) + "\" x2=\"" + fmt("%.2f", kLeft) +
         "\" y2=\"" + fmt("%.2f", y) + "\" stroke=\"#000000\"/>\n";
    s += "<text x=\"" + fmt("%.2f", kLeft - 6.0) + "\" y=\"" + fmt("%.2f", y + 4.0) +
         "\" text-anchor=\"end\">" + fmt("%.2f", v) + "</text>\n";
  }
  const std::size_t xticks = n == 1 ? 1 : std::min<std::size_t>(n, 6);
  for (std::size_t t = 0; t < xticks; ++t) {
    const std::size_t i = xticks == 1 ? 0 : t * (n - 1) / (xticks - 1);
    const double x = px(i);
    s += "<line x1=\"" + fmt("%.2f", x) + "\" y1=\"" + fmt("%.2f", kTop + ph) + "\" x2=\"" + fmt("%.2f", x) +
         "\" y2=\"" + fmt("%.2f", kTop + ph + 4.0) + "\" stroke=\"#000000\"/>\n";
    s += "<text x=\"" + fmt("%.2f", x) + "\" y=\"" + fmt("%.2f", kTop + ph + 16.0) + "\" text-anchor=\"middle\">" +
         std::to_string(i) + "</text>\n";
  }
  s += "<text x=\"" + fmt("%.2f", kLeft + pw / 2.0) + "\" y=\"" + fmt("%.2f", kHeight - 10.0) +
       "\" text-anchor=\"middle\">frame index</text>\n";
  s += "<text x=\"15.00\" y=\"" + fmt("%.2f", kTop + ph / 2.0) + "\" text-anchor=\"middle\" transform=\"rotate(-90 15.00 " +
       fmt("%.2f", kTop + ph / 2.0) + ")\">temperature (&#176;C)</text>\n";
  s += "</g>\n";

  for (const auto& p : profiles) {
    const char* colour = colour_of(p.kind);
    const std::string id(to_string(p.kind));
    if (n == 1) {
      s += "<circle class=\"" + id + "\" cx=\"" + fmt("%.2f", px(0)) + "\" cy=\"" + fmt("%.2f", py(p.values[0])) +
           "\" r=\"3\" fill=\"" + colour + "\"/>\n";
      continue;
    }
    s += "<polyline class=\"" + id + "\" fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) s += ' ';
      s += fmt("%.2f", px(i)) + "," + fmt("%.2f", py(p.values[i]));
    }
    s += "\"/>\n";
  }

  s += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  double ly = kTop + 4.0;
  for (const auto& p : profiles) {
    const char* colour = colour_of(p.kind);
    s += "<line x1=\"" + fmt("%.2f", kLeft + pw - 90.0) + "\" y1=\"" + fmt("%.2f", ly) + "\" x2=\"" +
         fmt("%.2f", kLeft + pw - 70.0) + "\" y2=\"" + fmt("%.2f", ly) + "\" stroke=\"" + colour +
         "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + fmt("%.2f", kLeft + pw - 64.0) + "\" y=\"" + fmt("%.2f", ly + 4.0) + "\" fill=\"#000000\">" +
         std::string(to_string(p.kind)) + "</text>\n";
    ly += 16.0;
  }
  s += "</g>\n</svg>\n";
  return s;
}

void emit_plot(std::span<const TemperatureProfile> profiles, const std::filesystem::path& path) {
  io::write_text(path, render_profile_svg(profiles));
}

}  // namespace thermocal
