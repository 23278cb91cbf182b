#include "thermocal/regions.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace thermocal {

std::size_t RegionMask::area() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(bitmap.values().begin(), bitmap.values().end(), [](auto v) { return v != 0; }));
}

BoundingBox bounding_box(const RegionMask& mask) {
  BoundingBox b{mask.width(), mask.height(), 0, 0};
  for (std::size_t y = 0; y < mask.height(); ++y) {
    for (std::size_t x = 0; x < mask.width(); ++x) {
      if (!mask.contains(x, y)) continue;
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x + 1);
      b.y1 = std::max(b.y1, y + 1);
    }
  }
  if (b.x1 == 0) throw ArgumentError("bounding box of an empty mask");
  return b;
}

std::vector<double> RegionImage::masked_values() const {
  std::vector<double> v;
  for (std::size_t i = 0; i < plane.size(); ++i) {
    if (mask.bitmap[i] != 0) v.push_back(plane[i]);
  }
  return v;
}

std::vector<RegionMask> connected_components(const Bitmap& binary) {
  if (binary.empty()) throw ArgumentError("connected_components: empty image");
  const std::size_t w = binary.width(), h = binary.height();
  Grid<std::uint32_t> label(w, h, 0);
  struct Component {
    std::size_t anchor;
    std::vector<std::size_t> pixels;
  };
  std::vector<Component> comps;
  std::deque<std::size_t> queue;
  for (std::size_t start = 0; start < binary.size(); ++start) {
    if (binary[start] == 0 || label[start] != 0) continue;
    const auto id = static_cast<std::uint32_t>(comps.size() + 1);
    Component c{start, {}};
    label[start] = id;
    queue.push_back(start);
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      c.pixels.push_back(p);
      const std::size_t x = p % w, y = p / w;
      auto visit = [&](std::size_t q) {
        if (binary[q] != 0 && label[q] == 0) {
          label[q] = id;
          queue.push_back(q);
        }
      };
      if (x > 0) visit(p - 1);
      if (x + 1 < w) visit(p + 1);
      if (y > 0) visit(p - w);
      if (y + 1 < h) visit(p + w);
    }
    comps.push_back(std::move(c));
  }
  std::stable_sort(comps.begin(), comps.end(), [](const Component& a, const Component& b) {
    if (a.pixels.size() != b.pixels.size()) return a.pixels.size() > b.pixels.size();
    return a.anchor < b.anchor;
  });
  std::vector<RegionMask> out;
  out.reserve(comps.size());
  for (const auto& c : comps) {
    RegionMask m{Bitmap(w, h, 0), {}};
    for (std::size_t p : c.pixels) m.bitmap[p] = 255;
    out.push_back(std::move(m));
  }
  return out;
}

Plane rgb_to_luma(const RgbImage& rgb) {
  Plane out(rgb.width(), rgb.height());
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    const auto& px = rgb[i];
    out[i] = (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) / 255.0;
  }
  return out;
}

Plane bilinear_resize(const Plane& plane, double factor) {
  if (!(factor > 0.0)) throw ArgumentError("resize factor must be positive");
  const auto ow = static_cast<std::size_t>(std::lround(plane.width() * factor));
  const auto oh = static_cast<std::size_t>(std::lround(plane.height() * factor));
  if (ow == 0 || oh == 0) throw ArgumentError("resize factor produces an empty image");
  return bilinear_resize(plane, ow, oh);
}

Plane bilinear_resize(const Plane& plane, std::size_t ow, std::size_t oh) {
  if (plane.empty()) throw ArgumentError("cannot resize an empty plane");
  if (ow == 0 || oh == 0) throw ArgumentError("resize to zero dimension");
  const std::size_t iw = plane.width(), ih = plane.height();
  const double sx = static_cast<double>(iw) / static_cast<double>(ow);
  const double sy = static_cast<double>(ih) / static_cast<double>(oh);

  struct Tap {
    std::size_t i0, i1;
    double f;
  };
  auto taps = [](std::size_t n_out, std::size_t n_in, double scale) {
    std::vector<Tap> t(n_out);
    for (std::size_t o = 0; o < n_out; ++o) {
      double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(n_in - 1));
      const auto i0 = static_cast<std::size_t>(std::floor(src));
      const std::size_t i1 = std::min(i0 + 1, n_in - 1);
      t[o] = {i0, i1, src - static_cast<double>(i0)};
    }
    return t;
  };
  const auto tx = taps(ow, iw, sx);
  const auto ty = taps(oh, ih, sy);

  Plane out(ow, oh);
  for (std::size_t y = 0; y < oh; ++y) {
    const auto& a = ty[y];
    for (std::size_t x = 0; x < ow; ++x) {
      const auto& b = tx[x];
      const double top = plane(b.i0, a.i0) * (1.0 - b.f) + plane(b.i1, a.i0) * b.f;
      const double bot = plane(b.i0, a.i1) * (1.0 - b.f) + plane(b.i1, a.i1) * b.f;
      out(x, y) = top * (1.0 - a.f) + bot * a.f;
    }
  }
  return out;
}

RegionImage extract_region(const Plane& gray, const RegionMask& mask) {
  require_same_shape(gray, mask.bitmap, "extract_region");
  RegionImage r{Plane(gray.width(), gray.height(), 0.0), mask, std::nullopt};
  for (std::size_t i = 0; i < gray.size(); ++i) {
    if (mask.bitmap[i] != 0) r.plane[i] = gray[i];
  }
  return r;
}

RegionImage with_emissivity(RegionImage region, Emissivity eps) {
  region.emissivity = eps;
  return region;
}

RegionImage emissivity_normalize(const RegionImage& region) {
  if (!region.emissivity) throw ArgumentError("emissivity_normalize: region has no emissivity");
  const double eps = region.emissivity->value();
  RegionImage out = region;
  for (std::size_t i = 0; i < out.plane.size(); ++i) {
    out.plane[i] = region.mask.bitmap[i] != 0 ? std::tanh(region.plane[i] / eps) : 0.0;
  }
  return out;
}

RegionStats value_stats(const std::vector<double>& values) {
  if (values.empty()) throw ArgumentError("statistics of an empty region");
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

RegionStats region_stats(const RegionImage& region) { return value_stats(region.masked_values()); }

Histogram value_histogram(const std::vector<double>& values, std::size_t bins, double epsilon) {
  if (bins < 2) throw ArgumentError("histogram needs at least two bins");
  if (values.empty()) throw ArgumentError("histogram of an empty region");
  if (!(epsilon > 0.0)) throw ArgumentError("histogram smoothing must be positive");
  std::vector<double> counts(bins, 0.0);
  for (double v : values) {
    const double c = std::clamp(v, 0.0, 1.0) * static_cast<double>(bins);
    const auto k = std::min(static_cast<std::size_t>(c), bins - 1);
    counts[k] += 1.0;
  }
  const double n = static_cast<double>(values.size());
  double total = 0.0;
  for (auto& c : counts) {
    c = c / n + epsilon;
    total += c;
  }
  for (auto& c : counts) c /= total;
  return {std::move(counts)};
}

Histogram region_histogram(const RegionImage& region, std::size_t bins, double epsilon) {
  return value_histogram(region.masked_values(), bins, epsilon);
}

}  // namespace thermocal
