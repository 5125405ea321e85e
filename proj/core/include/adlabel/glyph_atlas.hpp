#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adlabel/raster.hpp"

namespace adlabel {

inline constexpr int kGlyphBaseWidth = 5;
inline constexpr int kGlyphBaseHeight = 7;

using Stencil = std::array<std::array<bool, kGlyphBaseWidth>, kGlyphBaseHeight>;

// Built-in 5x7 sans-serif bitmap font: uppercase letters, digits and basic
// punctuation. The same stencils drive rendering and recognition.
class GlyphAtlas {
 public:
  static const GlyphAtlas& builtin();

  const std::string& charset() const { return charset_; }
  bool contains(char c) const;
  const Stencil& stencil(char c) const;

 private:
  GlyphAtlas();
  std::string charset_;
  std::vector<Stencil> stencils_;
};

// Pixel metrics of the atlas scaled to a glyph height (>= 1).
struct GlyphMetrics {
  int height = 7;
  int width = 5;
  int spacing = 1;
  int line_gap = 2;

  static GlyphMetrics for_height(int glyph_height);
  int advance() const { return width + spacing; }
  int line_pitch() const { return height + line_gap; }
};

// Ink coverage in [0,1] for each pixel of a (width x height) cell, row-major.
// Integer scale factors give exactly 0/1 coverage.
std::vector<float> glyph_coverage(const GlyphAtlas& atlas, char c, const GlyphMetrics& metrics);

struct GlyphPlacement {
  char character;
  Box cell;
};

struct TextLayout {
  GlyphMetrics metrics;
  std::vector<std::string> lines;
  std::vector<GlyphPlacement> glyphs;  // non-space characters only
  Box ink_bounds;                      // union of glyph cells
};

// Greedy word wrap of `text` inside `box` leaving `padding` pixels on every
// side; lines are centred horizontally and the block vertically. Returns
// nullopt when the text cannot fit.
std::optional<TextLayout> layout_text(std::string_view text, const Box& box, int glyph_height, int padding = 1);

// Single line starting at (x, y) without wrapping.
TextLayout layout_line(std::string_view text, int x, int y, int glyph_height);

void draw_text(RgbImage& image, const TextLayout& layout, Rgb color, const GlyphAtlas& atlas = GlyphAtlas::builtin());

}  // namespace adlabel
