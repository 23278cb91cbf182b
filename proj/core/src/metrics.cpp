#include "thermocal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "json.hpp"

#include "thermocal/rng.hpp"

namespace thermocal {

namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

/// Inclusive prefix sums with a zero border, so box sums are four lookups.
struct Integral {
  std::size_t w = 0;
  std::vector<double> s;
  Integral(std::size_t width, std::size_t height, auto&& value) : w(width + 1), s((width + 1) * (height + 1), 0.0) {
    for (std::size_t y = 0; y < height; ++y) {
      double row = 0.0;
      for (std::size_t x = 0; x < width; ++x) {
        row += value(x, y);
        s[(y + 1) * w + x + 1] = s[y * w + x + 1] + row;
      }
    }
  }
  double box(std::size_t x, std::size_t y, std::size_t n) const {
    return s[(y + n) * w + x + n] - s[y * w + x + n] - s[(y + n) * w + x] + s[y * w + x];
  }
};

double stddev_of(std::span<const double> v) {
  return value_stats(std::vector<double>(v.begin(), v.end())).stddev;
}

}  // namespace

double ssim(const Plane& a, const Plane& b, const RegionMask* mask, std::size_t window) {
  require_same_shape(a, b, "ssim");
  if (mask != nullptr) require_same_shape(a, mask->bitmap, "ssim mask");
  if (window == 0 || window > a.width() || window > a.height()) {
    throw ArgumentError("ssim: window does not fit the image");
  }
  const double n = static_cast<double>(window * window);
  std::unique_ptr<Integral> inside;
  if (mask != nullptr) {
    inside = std::make_unique<Integral>(a.width(), a.height(),
                                        [&](std::size_t x, std::size_t y) { return mask->contains(x, y) ? 1.0 : 0.0; });
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t y0 = 0; y0 + window <= a.height(); ++y0) {
    for (std::size_t x0 = 0; x0 + window <= a.width(); ++x0) {
      if (inside && inside->box(x0, y0, window) < n) continue;
      double sa = 0.0, sb = 0.0;
      for (std::size_t y = y0; y < y0 + window; ++y) {
        for (std::size_t x = x0; x < x0 + window; ++x) {
          sa += a(x, y);
          sb += b(x, y);
        }
      }
      const double ma = sa / n, mb = sb / n;
      double vaa = 0.0, vbb = 0.0, vab = 0.0;
      for (std::size_t y = y0; y < y0 + window; ++y) {
        for (std::size_t x = x0; x < x0 + window; ++x) {
          const double da = a(x, y) - ma, db = b(x, y) - mb;
          vaa += da * da;
          vbb += db * db;
          vab += da * db;
        }
      }
      vaa /= n;
      vbb /= n;
      vab /= n;
      total += ((2.0 * ma * mb + kC1) * (2.0 * vab + kC2)) /
               ((ma * ma + mb * mb + kC1) * (vaa + vbb + kC2));
      ++count;
    }
  }
  if (count == 0) throw ArgumentError("ssim: no window fits inside the mask");
  return total / static_cast<double>(count);
}

double cei_values(std::span<const double> enhanced, std::span<const double> original) {
  if (enhanced.size() != original.size() || enhanced.empty()) {
    throw ArgumentError("cei: regions must be non-empty and the same size");
  }
  const auto [lo, hi] = std::minmax_element(original.begin(), original.end());
  if (!(*hi > *lo)) throw DomainError("cei: original region has zero contrast");
  const double so = stddev_of(original);
  return stddev_of(enhanced) / so;
}

double cei(const RegionImage& enhanced, const RegionImage& original) {
  if (enhanced.mask.bitmap != original.mask.bitmap) throw ArgumentError("cei: masks differ");
  return cei_values(enhanced.masked_values(), original.masked_values());
}

double entropy_values(std::span<const double> values, std::size_t bins) {
  if (bins < 2) throw ArgumentError("entropy: need at least two bins");
  if (values.empty()) return 0.0;
  std::vector<std::size_t> counts(bins, 0);
  for (double v : values) {
    const double c = std::clamp(v, 0.0, 1.0);
    ++counts[std::min(static_cast<std::size_t>(c * static_cast<double>(bins)), bins - 1)];
  }
  const double n = static_cast<double>(values.size());
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return std::max(0.0, h);
}

double entropy(const Plane& plane, std::size_t bins) { return entropy_values(plane.values(), bins); }

std::string_view to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::kOriginal: return "original";
    case ProfileKind::kEnhanced: return "enhanced";
    case ProfileKind::kGroundTruth: return "gt";
  }
  return "?";
}

void TemperatureProfile::validate() const {
  if (values.empty()) throw ArgumentError(std::string(to_string(kind)) + " profile is empty");
  for (double v : values) {
    if (!std::isfinite(v)) throw DomainError(std::string(to_string(kind)) + " profile has a non-finite value");
  }
}

std::vector<PixelAnchor> valid_anchors(const RegionMask& mask, std::size_t window) {
  std::vector<PixelAnchor> out;
  if (window == 0 || window > mask.width() || window > mask.height()) return out;
  const Integral in(mask.width(), mask.height(),
                    [&](std::size_t x, std::size_t y) { return mask.contains(x, y) ? 1.0 : 0.0; });
  const double full = static_cast<double>(window * window);
  for (std::size_t y = 0; y + window <= mask.height(); ++y) {
    for (std::size_t x = 0; x + window <= mask.width(); ++x) {
      if (in.box(x, y, window) == full) out.push_back({x, y});
    }
  }
  return out;
}

PixelAnchor choose_anchor(const RegionMask& mask, std::uint64_t seed, std::size_t window) {
  const auto anchors = valid_anchors(mask, window);
  if (anchors.empty()) {
    throw ArgumentError("no " + std::to_string(window) + "x" + std::to_string(window) +
                        " window fits inside mask '" + mask.material_label + "'");
  }
  Rng rng(seed);
  return anchors[rng.index(anchors.size())];
}

TemperatureProfile extract_profile(std::span<const Plane> frames, PixelAnchor anchor, ProfileKind kind,
                                   std::size_t window, const RegionMask* mask) {
  if (frames.empty()) throw ArgumentError("extract_profile: no frames");
  if (window == 0) throw ArgumentError("extract_profile: window must be positive");
  const std::size_t w = frames.front().width(), h = frames.front().height();
  if (anchor.x + window > w || anchor.y + window > h) {
    throw ArgumentError("profile window at (" + std::to_string(anchor.x) + "," + std::to_string(anchor.y) +
                        ") exits the " + std::to_string(w) + "x" + std::to_string(h) +
                        " frame; valid anchors are x in [0," + std::to_string(w >= window ? w - window : 0) +
                        "], y in [0," + std::to_string(h >= window ? h - window : 0) + "]");
  }
  if (mask != nullptr) {
    require_same_shape(frames.front(), mask->bitmap, "extract_profile mask");
    const auto anchors = valid_anchors(*mask, window);
    if (std::find(anchors.begin(), anchors.end(), anchor) == anchors.end()) {
      std::string range = "none";
      if (!anchors.empty()) {
        std::size_t x0 = SIZE_MAX, x1 = 0, y0 = SIZE_MAX, y1 = 0;
        for (const auto& a : anchors) {
          x0 = std::min(x0, a.x); x1 = std::max(x1, a.x);
          y0 = std::min(y0, a.y); y1 = std::max(y1, a.y);
        }
        range = "x in [" + std::to_string(x0) + "," + std::to_string(x1) + "], y in [" +
                std::to_string(y0) + "," + std::to_string(y1) + "]";
      }
      throw ArgumentError("profile window at (" + std::to_string(anchor.x) + "," + std::to_string(anchor.y) +
                          ") exits mask '" + mask->material_label + "'; valid anchors: " + range);
    }
  }
  TemperatureProfile p{kind, {}};
  p.values.reserve(frames.size());
  const double n = static_cast<double>(window * window);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const Plane& fr = frames[f];
    if (fr.width() != w || fr.height() != h) {
      throw ShapeError("extract_profile: frame " + std::to_string(f) + " has a different size");
    }
    double s = 0.0;
    for (std::size_t y = anchor.y; y < anchor.y + window; ++y) {
      for (std::size_t x = anchor.x; x < anchor.x + window; ++x) s += fr(x, y);
    }
    p.values.push_back(s / n);
  }
  return p;
}

std::string_view to_string(RescaleMode mode) {
  return mode == RescaleMode::kMaxFraction ? "max_fraction" : "percentile";
}

RescaleMode rescale_mode_from_string(std::string_view name) {
  if (name == "max_fraction") return RescaleMode::kMaxFraction;
  if (name == "percentile") return RescaleMode::kPercentile;
  throw ConfigError("unknown rescale mode '" + std::string(name) + "' (expected max_fraction or percentile)");
}

RescaleRange rescale_range(const TemperatureProfile& gt, RescaleMode mode) {
  gt.validate();
  const auto [lo, hi] = std::minmax_element(gt.values.begin(), gt.values.end());
  if (!(*hi > *lo)) throw DomainError("rescale: GT profile has a degenerate range");
  RescaleRange r{*lo, 0.0};
  if (mode == RescaleMode::kMaxFraction) {
    r.upper = 0.95 * *hi;
  } else {
    std::vector<double> s = gt.values;
    std::sort(s.begin(), s.end());
    const double pos = 0.95 * static_cast<double>(s.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    r.upper = i + 1 < s.size() ? s[i] + frac * (s[i + 1] - s[i]) : s[i];
  }
  if (!(r.upper > r.lower)) throw DomainError("rescale: upper end does not exceed min(gt)");
  return r;
}

TemperatureProfile rescale_profile(std::span<const double> norm_profile, const TemperatureProfile& gt,
                                   RescaleMode mode) {
  const RescaleRange r = rescale_range(gt, mode);
  TemperatureProfile out{ProfileKind::kEnhanced, {}};
  out.values.reserve(norm_profile.size());
  for (double v : norm_profile) {
    out.values.push_back(std::clamp((1.0 - v) * r.lower + v * r.upper, r.lower, r.upper));
  }
  return out;
}

std::vector<double> minmax_normalize(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(*hi > *lo)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / (*hi - *lo);
  return out;
}

double profile_distance(const TemperatureProfile& a, const TemperatureProfile& b) {
  if (a.size() != b.size()) {
    throw ArgumentError("profile_distance: lengths differ (" + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + ")");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    s += d * d;
  }
  return std::sqrt(s);
}

std::string ErrorStats::formatted() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", mean_c, std_c);
  return buf;
}

ErrorStats error_stats(const TemperatureProfile& en, const TemperatureProfile& gt) {
  if (en.size() != gt.size()) throw ArgumentError("error_stats: profile lengths differ");
  if (en.size() < 2) throw ArgumentError("error_stats: need at least two frames");
  std::vector<double> d(en.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = en.values[i] - gt.values[i];
  const RegionStats s = value_stats(d);
  return {s.mean, s.stddev};
}

void MetricsReport::validate() const {
  for (double s : {ssim, ssim_normalized}) {
    if (!(s >= -1.0 && s <= 1.0)) throw DomainError("ssim outside [-1, 1]");
  }
  if (!(entropy_bits >= 0.0 && entropy_bits <= 8.0)) throw DomainError("entropy outside [0, 8] bits");
  if (!(dis_orig_gt >= 0.0 && dis_en_gt >= 0.0)) throw DomainError("negative profile distance");
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["frames"] = frames;
  j["enhancement_mode"] = enhancement_mode;
  j["ssim"] = ssim;
  j["ssim_reference"] = ssim_reference;
  j["cei"] = cei;
  j["ssim_normalized"] = ssim_normalized;
  j["cei_normalized"] = cei_normalized;
  j["entropy_bits"] = entropy_bits;
  j["entropy_original_bits"] = entropy_original_bits;
  j["dis_orig_gt"] = dis_orig_gt;
  j["dis_en_gt"] = dis_en_gt;
  j["err_mean_c"] = err_mean_c;
  j["err_std_c"] = err_std_c;
  j["err_formatted"] = ErrorStats{err_mean_c, err_std_c}.formatted();
  j["loss_total"] = loss_total;
  j["profile"] = {{"anchor_x", anchor.x}, {"anchor_y", anchor.y}, {"window", window}, {"seed", seed}};
  j["rescale"] = to_string(rescale);
  return j.dump(2) + "\n";
}

std::string profiles_csv(const TemperatureProfile& original, const TemperatureProfile& enhanced,
                         const TemperatureProfile& gt) {
  if (original.size() != gt.size() || enhanced.size() != gt.size()) {
    throw ArgumentError("profiles_csv: profile lengths differ");
  }
  std::string out = "frame,original,enhanced,gt\n";
  char buf[128];
  for (std::size_t i = 0; i < gt.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f\n", i, original.values[i], enhanced.values[i],
                  gt.values[i]);
    out += buf;
  }
  return out;
}

}  // namespace thermocal
