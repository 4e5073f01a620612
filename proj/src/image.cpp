#include "wmnav/image.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include <zlib.h>

namespace wmnav {

RgbImage::RgbImage(int width, int height, Rgb fill)
    : width_(width), height_(height), pixels_(std::size_t(width) * height * 3) {
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill[0];
    pixels_[i + 1] = fill[1];
    pixels_[i + 2] = fill[2];
  }
}

Rgb RgbImage::at(int x, int y) const {
  const std::size_t i = (std::size_t(y) * width_ + x) * 3;
  return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
}

void RgbImage::set(int x, int y, Rgb c) {
  const std::size_t i = (std::size_t(y) * width_ + x) * 3;
  pixels_[i] = c[0];
  pixels_[i + 1] = c[1];
  pixels_[i + 2] = c[2];
}

void RgbImage::plot(int x, int y, Rgb c) {
  if (x >= 0 && y >= 0 && x < width_ && y < height_) set(x, y, c);
}

namespace {

// Sasha Trubetskoy's 20 distinct colors, first entries.
constexpr std::array<std::pair<const char*, Rgb>, 12> kPalette = {{
    {"red", {230, 25, 75}},
    {"green", {60, 180, 75}},
    {"yellow", {255, 225, 25}},
    {"blue", {0, 130, 200}},
    {"orange", {245, 130, 48}},
    {"purple", {145, 30, 180}},
    {"cyan", {70, 240, 240}},
    {"magenta", {240, 50, 230}},
    {"lime", {210, 245, 60}},
    {"pink", {250, 190, 212}},
    {"teal", {0, 128, 128}},
    {"brown", {170, 110, 40}},
}};

// 5x7 glyphs, one byte per row, low 5 bits used (MSB = leftmost column).
constexpr std::array<std::array<std::uint8_t, 7>, 11> kGlyphs = {{
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
    {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
    {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00},  // -
}};

}  // namespace

Rgb category_color(std::uint16_t id) {
  if (id == 0) return {128, 128, 128};
  return kPalette[(id - 1) % kPalette.size()].second;
}

std::string color_legend(const Scene& scene) {
  std::ostringstream out;
  const auto& cats = scene.categories();
  for (std::size_t i = 0; i < cats.size(); ++i) {
    const auto& [name, c] = kPalette[i % kPalette.size()];
    if (i) out << "; ";
    out << cats[i] << ": " << name << " (" << int(c[0]) << ", " << int(c[1]) << ", " << int(c[2]) << ")";
  }
  out << (cats.empty() ? "" : "; ") << "floor and walls: shades of gray";
  return out.str();
}

RgbImage colorize(const Observation& obs, const CameraModel& cam, const Pose& pose) {
  RgbImage img(obs.depth.width(), obs.depth.height(), {20, 20, 30});
  for (int v = 0; v < obs.depth.height(); ++v) {
    for (int u = 0; u < obs.depth.width(); ++u) {
      const double range = obs.depth.at(u, v);
      if (!DepthImage::is_hit(range)) continue;
      const std::uint16_t id = obs.semantic.at(u, v);
      if (id != 0) {
        img.set(u, v, category_color(id));
        continue;
      }
      const double z = pose.z + range * cam.pixel_ray(u, v).z;
      const double shade = std::clamp(1.0 - range / 12.0, 0.15, 1.0);
      const auto g = std::uint8_t(std::lround((z < 0.02 ? 150.0 : 225.0) * shade));
      img.set(u, v, z < 0.02 ? Rgb{g, g, std::uint8_t(g * 0.8)} : Rgb{g, g, g});
    }
  }
  return img;
}

RgbImage downscale(const RgbImage& img, int factor) {
  if (factor <= 1) return img;
  RgbImage out(img.width() / factor, img.height() / factor);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      std::array<int, 3> acc{};
      for (int dy = 0; dy < factor; ++dy) {
        for (int dx = 0; dx < factor; ++dx) {
          const Rgb c = img.at(x * factor + dx, y * factor + dy);
          for (int k = 0; k < 3; ++k) acc[k] += c[k];
        }
      }
      const int n = factor * factor;
      out.set(x, y, {std::uint8_t(acc[0] / n), std::uint8_t(acc[1] / n), std::uint8_t(acc[2] / n)});
    }
  }
  return out;
}

RgbImage hconcat(const std::vector<RgbImage>& strips, int gap, Rgb gap_color) {
  int width = 0, height = 0;
  for (const auto& s : strips) {
    width += s.width();
    height = std::max(height, s.height());
  }
  if (!strips.empty()) width += gap * int(strips.size() - 1);
  RgbImage out(width, height, gap_color);
  int x0 = 0;
  for (const auto& s : strips) {
    for (int y = 0; y < s.height(); ++y) {
      for (int x = 0; x < s.width(); ++x) out.set(x0 + x, y, s.at(x, y));
    }
    x0 += s.width() + gap;
  }
  return out;
}

void draw_text(RgbImage& img, int x, int y, std::string_view text, Rgb color, int scale) {
  int pen = x;
  for (char ch : text) {
    int glyph = -1;
    if (ch >= '0' && ch <= '9') glyph = ch - '0';
    if (ch == '-') glyph = 10;
    if (glyph >= 0) {
      for (int row = 0; row < 7; ++row) {
        for (int col = 0; col < 5; ++col) {
          if (!(kGlyphs[glyph][row] & (0x10 >> col))) continue;
          for (int sy = 0; sy < scale; ++sy) {
            for (int sx = 0; sx < scale; ++sx) img.plot(pen + col * scale + sx, y + row * scale + sy, color);
          }
        }
      }
    }
    pen += 6 * scale;
  }
}

void draw_disk(RgbImage& img, int cx, int cy, int radius, Rgb color) {
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy <= radius * radius) img.plot(cx + dx, cy + dy, color);
    }
  }
}

void draw_line(RgbImage& img, int x0, int y0, int x1, int y1, Rgb color) {
  // Bresenham
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    img.plot(x0, y0, color);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void draw_marker(RgbImage& img, int cx, int cy, int number) {
  const std::string label = std::to_string(number);
  const int scale = 2;
  const int text_w = int(label.size()) * 6 * scale - scale;
  const int radius = std::max(12, text_w / 2 + 5);
  draw_disk(img, cx, cy, radius + 2, {0, 0, 0});
  draw_disk(img, cx, cy, radius, {255, 255, 255});
  draw_text(img, cx - text_w / 2, cy - 7 * scale / 2, label, {0, 0, 0}, scale);
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(char((v >> shift) & 0xFF));
}

void put_chunk(std::string& out, const char* type, const std::string& data) {
  put_u32(out, std::uint32_t(data.size()));
  const std::string body = std::string(type, 4) + data;
  out += body;
  put_u32(out, std::uint32_t(crc32(0L, reinterpret_cast<const Bytef*>(body.data()), uInt(body.size()))));
}

}  // namespace

std::string encode_png(const RgbImage& img) {
  std::string raw;
  raw.reserve(std::size_t(img.height()) * (img.width() * 3 + 1));
  const auto& px = img.bytes();
  for (int y = 0; y < img.height(); ++y) {
    raw.push_back('\0');  // filter: none
    raw.append(reinterpret_cast<const char*>(px.data()) + std::size_t(y) * img.width() * 3,
               std::size_t(img.width()) * 3);
  }
  uLongf packed_len = compressBound(uLong(raw.size()));
  std::string packed(packed_len, '\0');
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &packed_len, reinterpret_cast<const Bytef*>(raw.data()),
                uLong(raw.size()), 6) != Z_OK) {
    throw std::runtime_error("encode_png: deflate failed");
  }
  packed.resize(packed_len);

  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  put_u32(ihdr, std::uint32_t(img.width()));
  put_u32(ihdr, std::uint32_t(img.height()));
  ihdr += std::string("\x08\x02\x00\x00\x00", 5);  // 8-bit RGB, no interlace
  put_chunk(png, "IHDR", ihdr);
  put_chunk(png, "IDAT", packed);
  put_chunk(png, "IEND", "");
  return png;
}

std::string encode_ppm(const RgbImage& img) {
  std::string out = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.bytes().data()), img.bytes().size());
  return out;
}

}  // namespace wmnav
