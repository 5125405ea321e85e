#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace adlabel {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

double luminance(Rgb c);

// Axis-aligned pixel rectangle [x, x+w) x [y, y+h).
struct Box {
  int x = 0, y = 0, w = 0, h = 0;

  int right() const { return x + w; }
  int bottom() const { return y + h; }
  std::int64_t area() const { return static_cast<std::int64_t>(w) * h; }
  bool empty() const { return w <= 0 || h <= 0; }
  bool inside(int width, int height) const { return x >= 0 && y >= 0 && w > 0 && h > 0 && right() <= width && bottom() <= height; }
  bool operator==(const Box&) const = default;
};

Box box_union(const Box& a, const Box& b);
Box box_intersection(const Box& a, const Box& b);
double iou(const Box& a, const Box& b);

class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {});

  int width() const { return width_; }
  int height() const { return height_; }
  std::vector<std::uint8_t>& bytes() { return pixels_; }
  const std::vector<std::uint8_t>& bytes() const { return pixels_; }

  Rgb at(int x, int y) const {
    const std::size_t i = index(x, y);
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = index(x, y);
    pixels_[i] = c.r;
    pixels_[i + 1] = c.g;
    pixels_[i + 2] = c.b;
  }
  // alpha in [0,1]; 1 replaces the pixel.
  void blend(int x, int y, Rgb c, double alpha);
  void fill_rect(const Box& box, Rgb c);

  bool operator==(const RgbImage&) const = default;

 private:
  std::size_t index(int x, int y) const { return (static_cast<std::size_t>(y) * width_ + x) * 3; }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Binary PPM (P6, maxval 255). Errors raise DataError naming the path.
void write_ppm(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_ppm(const std::filesystem::path& path);

// Row-major luminance plane in [0, 255].
std::vector<float> luminance_plane(const RgbImage& image);

// Draws a 1-pixel rectangle outline clipped to the image.
void draw_outline(RgbImage& image, const Box& box, Rgb c);

}  // namespace adlabel
