#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "wmnav/geometry.hpp"
#include "wmnav/simulator.hpp"

namespace wmnav {

using Rgb = std::array<std::uint8_t, 3>;

class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {0, 0, 0});

  int width() const { return width_; }
  int height() const { return height_; }
  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);
  /// Clipped write; ignores coordinates outside the image.
  void plot(int x, int y, Rgb c);
  const std::vector<std::uint8_t>& bytes() const { return pixels_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Flat color per semantic category (stable for a given scene).
Rgb category_color(std::uint16_t id);
/// "bed: red (230, 25, 75); ..." for every category of the scene.
std::string color_legend(const Scene& scene);

/// Semantic rendering: objects in their category color, floor and walls in
/// depth-shaded grays.
RgbImage colorize(const Observation& obs, const CameraModel& cam, const Pose& pose);

RgbImage downscale(const RgbImage& img, int factor);
RgbImage hconcat(const std::vector<RgbImage>& strips, int gap = 4, Rgb gap_color = {255, 255, 255});

/// Draws digits (and '-') with a 5x7 bitmap font; `scale` multiplies the glyph size.
void draw_text(RgbImage& img, int x, int y, std::string_view text, Rgb color, int scale = 2);
void draw_disk(RgbImage& img, int cx, int cy, int radius, Rgb color);
void draw_line(RgbImage& img, int x0, int y0, int x1, int y1, Rgb color);
/// Filled circle with a number centered in it.
void draw_marker(RgbImage& img, int cx, int cy, int number);

std::string encode_png(const RgbImage& img);
std::string encode_ppm(const RgbImage& img);

}  // namespace wmnav
