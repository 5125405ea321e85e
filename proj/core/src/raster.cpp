#include "adlabel/raster.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "adlabel/error.hpp"

namespace adlabel {

double luminance(Rgb c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b; }

Box box_union(const Box& a, const Box& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  const int x0 = std::min(a.x, b.x), y0 = std::min(a.y, b.y);
  const int x1 = std::max(a.right(), b.right()), y1 = std::max(a.bottom(), b.bottom());
  return {x0, y0, x1 - x0, y1 - y0};
}

Box box_intersection(const Box& a, const Box& b) {
  const int x0 = std::max(a.x, b.x), y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.right(), b.right()), y1 = std::min(a.bottom(), b.bottom());
  if (x1 <= x0 || y1 <= y0) return {};
  return {x0, y0, x1 - x0, y1 - y0};
}

double iou(const Box& a, const Box& b) {
  const std::int64_t inter = box_intersection(a, b).area();
  const std::int64_t uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw ConfigError("image dimensions must be positive");
  pixels_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
  }
}

void RgbImage::blend(int x, int y, Rgb c, double alpha) {
  if (alpha <= 0.0) return;
  if (alpha >= 1.0) {
    set(x, y, c);
    return;
  }
  const Rgb o = at(x, y);
  auto mix = [alpha](std::uint8_t a, std::uint8_t b) {
    return static_cast<std::uint8_t>(std::lround((1.0 - alpha) * a + alpha * b));
  };
  set(x, y, {mix(o.r, c.r), mix(o.g, c.g), mix(o.b, c.b)});
}

void RgbImage::fill_rect(const Box& box, Rgb c) {
  const Box clip = box_intersection(box, Box{0, 0, width_, height_});
  for (int y = clip.y; y < clip.bottom(); ++y) {
    for (int x = clip.x; x < clip.right(); ++x) set(x, y, c);
  }
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open image for writing: " + path.string());
  out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.bytes().data()), static_cast<std::streamsize>(image.bytes().size()));
  if (!out) throw DataError("failed writing image: " + path.string());
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image: " + path.string());
  if (next_token(in) != "P6") throw DataError("not a binary PPM (P6) image: " + path.string());
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token(in));
    h = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw DataError("malformed PPM header: " + path.string());
  }
  if (w < 1 || h < 1 || maxval != 255) throw DataError("unsupported PPM geometry or maxval: " + path.string());
  RgbImage img(w, h);
  in.read(reinterpret_cast<char*>(img.bytes().data()), static_cast<std::streamsize>(img.bytes().size()));
  if (in.gcount() != static_cast<std::streamsize>(img.bytes().size())) {
    throw DataError("truncated PPM payload: " + path.string());
  }
  return img;
}

std::vector<float> luminance_plane(const RgbImage& image) {
  std::vector<float> out(static_cast<std::size_t>(image.width()) * image.height());
  const auto& b = image.bytes();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(0.299 * b[3 * i] + 0.587 * b[3 * i + 1] + 0.114 * b[3 * i + 2]);
  }
  return out;
}

void draw_outline(RgbImage& image, const Box& box, Rgb c) {
  const Box clip = box_intersection(box, Box{0, 0, image.width(), image.height()});
  if (clip.empty()) return;
  for (int x = clip.x; x < clip.right(); ++x) {
    image.set(x, clip.y, c);
    image.set(x, clip.bottom() - 1, c);
  }
  for (int y = clip.y; y < clip.bottom(); ++y) {
    image.set(clip.x, y, c);
    image.set(clip.right() - 1, y, c);
  }
}

}  // namespace adlabel
