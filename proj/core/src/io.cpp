#include "thermocal/io.hpp"

#include <png.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace thermocal::io {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw InputError("failed writing " + path.string());
}

namespace {

struct PnmHeader {
  std::string magic;
  std::size_t width = 0, height = 0;
  unsigned maxval = 0;
  std::size_t data_offset = 0;
};

PnmHeader parse_pnm(const std::string& bytes, const fs::path& path) {
  PnmHeader h;
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto token = [&] {
    skip_space();
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw InputError(path.string() + ": truncated PNM header");
    return bytes.substr(start, pos - start);
  };
  auto number = [&] {
    const std::string t = token();
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size()) throw InputError(path.string() + ": bad PNM header field '" + t + "'");
    return v;
  };
  h.magic = token();
  h.width = number();
  h.height = number();
  h.maxval = static_cast<unsigned>(number());
  if (pos >= bytes.size()) throw InputError(path.string() + ": missing PNM raster");
  h.data_offset = pos + 1;  // exactly one whitespace byte after maxval
  if (h.width == 0 || h.height == 0) throw InputError(path.string() + ": empty image");
  if (h.maxval == 0 || h.maxval > 65535) throw InputError(path.string() + ": invalid maxval");
  return h;
}

std::string pnm_bytes(const fs::path& path, const std::string& magic, PnmHeader& h) {
  std::string bytes = read_text(path);
  h = parse_pnm(bytes, path);
  if (h.magic != magic) throw InputError(path.string() + ": expected " + magic + ", found " + h.magic);
  return bytes;
}

void write_pgm(const fs::path& path, const Plane& plane, unsigned maxval) {
  std::string out = "P5\n" + std::to_string(plane.width()) + " " + std::to_string(plane.height()) + "\n" +
                    std::to_string(maxval) + "\n";
  for (double v : plane.values()) {
    const auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
    if (maxval > 255) out.push_back(static_cast<char>(q >> 8));
    out.push_back(static_cast<char>(q & 0xff));
  }
  write_text(path, out);
}

}  // namespace

Plane read_gray_pgm(const fs::path& path) {
  PnmHeader h;
  const std::string bytes = pnm_bytes(path, "P5", h);
  const std::size_t bpp = h.maxval > 255 ? 2 : 1;
  const std::size_t n = h.width * h.height;
  if (bytes.size() < h.data_offset + n * bpp) throw InputError(path.string() + ": truncated PGM raster");
  Plane p(h.width, h.height);
  const auto* d = reinterpret_cast<const unsigned char*>(bytes.data() + h.data_offset);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned v = bpp == 2 ? (unsigned{d[2 * i]} << 8) | d[2 * i + 1] : d[i];
    if (v > h.maxval) throw InputError(path.string() + ": sample exceeds maxval");
    p[i] = static_cast<double>(v) / h.maxval;
  }
  return p;
}

void write_gray_pgm16(const fs::path& path, const Plane& plane) { write_pgm(path, plane, 65535); }
void write_gray_pgm8(const fs::path& path, const Plane& plane) { write_pgm(path, plane, 255); }

Bitmap read_mask_pgm(const fs::path& path) {
  PnmHeader h;
  const std::string bytes = pnm_bytes(path, "P5", h);
  if (h.maxval > 255) throw InputError(path.string() + ": mask must be an 8-bit PGM");
  const std::size_t n = h.width * h.height;
  if (bytes.size() < h.data_offset + n) throw InputError(path.string() + ": truncated PGM raster");
  Bitmap m(h.width, h.height);
  for (std::size_t i = 0; i < n; ++i) m[i] = bytes[h.data_offset + i] != 0 ? 255 : 0;
  return m;
}

void write_mask_pgm(const fs::path& path, const Bitmap& mask) {
  std::string out = "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n255\n";
  for (auto v : mask.values()) out.push_back(static_cast<char>(v != 0 ? 255 : 0));
  write_text(path, out);
}

RgbImage read_ppm(const fs::path& path) {
  PnmHeader h;
  const std::string bytes = pnm_bytes(path, "P6", h);
  if (h.maxval > 255) throw InputError(path.string() + ": only 8-bit PPM is supported");
  const std::size_t n = h.width * h.height;
  if (bytes.size() < h.data_offset + 3 * n) throw InputError(path.string() + ": truncated PPM raster");
  RgbImage img(h.width, h.height);
  const auto* d = reinterpret_cast<const unsigned char*>(bytes.data() + h.data_offset);
  for (std::size_t i = 0; i < n; ++i) img[i] = {d[3 * i], d[3 * i + 1], d[3 * i + 2]};
  return img;
}

void write_ppm(const fs::path& path, const RgbImage& image) {
  std::string out = "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
  for (const auto& px : image.values()) {
    for (auto c : px) out.push_back(static_cast<char>(c));
  }
  write_text(path, out);
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

}  // namespace

RgbImage read_png_rgb(const fs::path& path) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw InputError("cannot open " + path.string());
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_stdio(&image, fp.get())) {
    throw InputError(path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw InputError(path.string() + ": " + image.message);
  }
  RgbImage img(image.width, image.height);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = {buf[3 * i], buf[3 * i + 1], buf[3 * i + 2]};
  return img;
}

void write_png_rgb(const fs::path& path, const RgbImage& img) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buf;
  buf.reserve(3 * img.size());
  for (const auto& px : img.values()) buf.insert(buf.end(), px.begin(), px.end());
  if (!png_image_write_to_file(&image, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw InputError(path.string() + ": " + image.message);
  }
}

RegionMask mask_from_labels(const RgbImage& labels, Rgb colour, std::string material_label) {
  RegionMask m{Bitmap(labels.width(), labels.height(), 0), std::move(material_label)};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == colour) m.bitmap[i] = 255;
  }
  return m;
}

std::string temperature_csv(const Plane& temps) {
  std::string out;
  out.reserve(temps.size() * 11);
  char buf[64];
  for (std::size_t y = 0; y < temps.height(); ++y) {
    for (std::size_t x = 0; x < temps.width(); ++x) {
      const int len = std::snprintf(buf, sizeof buf, x == 0 ? "%.6f" : ",%.6f", temps(x, y));
      out.append(buf, static_cast<std::size_t>(len));
    }
    out.push_back('\n');
  }
  return out;
}

void write_temperature_csv(const fs::path& path, const Plane& temps) {
  write_text(path, temperature_csv(temps));
}

Plane read_temperature_csv(const fs::path& path) {
  const std::string text = read_text(path);
  std::vector<double> values;
  std::size_t width = 0, height = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    if (line.empty()) continue;
    std::size_t cols = 0, start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      std::string_view cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
      while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
      double v = 0.0;
      const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || p != cell.data() + cell.size() || !std::isfinite(v)) {
        throw InputError(path.string() + ": bad number '" + std::string(cell) + "' at row " +
                         std::to_string(height + 1) + ", column " + std::to_string(cols + 1));
      }
      values.push_back(v);
      ++cols;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (height == 0) {
      width = cols;
    } else if (cols != width) {
      throw InputError(path.string() + ": row " + std::to_string(height + 1) + " has " + std::to_string(cols) +
                       " values, expected " + std::to_string(width));
    }
    ++height;
  }
  if (height == 0) throw InputError(path.string() + ": empty temperature grid");
  return Plane(width, height, std::move(values));
}

}  // namespace thermocal::io
