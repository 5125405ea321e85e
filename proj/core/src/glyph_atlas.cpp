#include "adlabel/glyph_atlas.hpp"

#include <cmath>
#include <sstream>

#include "adlabel/error.hpp"

namespace adlabel {
namespace {

struct GlyphRows {
  char c;
  std::array<const char*, kGlyphBaseHeight> rows;
};

// clang-format off
constexpr GlyphRows kFont[] = {
  {'A', {" ### ", "#   #", "#   #", "#####", "#   #", "#   #", "#   #"}},
  {'B', {"#### ", "#   #", "#   #", "#### ", "#   #", "#   #", "#### "}},
  {'C', {" ### ", "#   #", "#    ", "#    ", "#    ", "#   #", " ### "}},
  {'D', {"#### ", "#   #", "#   #", "#   #", "#   #", "#   #", "#### "}},
  {'E', {"#####", "#    ", "#    ", "#### ", "#    ", "#    ", "#####"}},
  {'F', {"#####", "#    ", "#    ", "#### ", "#    ", "#    ", "#    "}},
  {'G', {" ### ", "#   #", "#    ", "# ###", "#   #", "#   #", " ####"}},
  {'H', {"#   #", "#   #", "#   #", "#####", "#   #", "#   #", "#   #"}},
  {'I', {" ### ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "}},
  {'J', {"  ###", "   # ", "   # ", "   # ", "   # ", "#  # ", " ##  "}},
  {'K', {"#   #", "#  # ", "# #  ", "##   ", "# #  ", "#  # ", "#   #"}},
  {'L', {"#    ", "#    ", "#    ", "#    ", "#    ", "#    ", "#####"}},
  {'M', {"#   #", "## ##", "# # #", "# # #", "#   #", "#   #", "#   #"}},
  {'N', {"#   #", "#   #", "##  #", "# # #", "#  ##", "#   #", "#   #"}},
  {'O', {" ### ", "#   #", "#   #", "#   #", "#   #", "#   #", " ### "}},
  {'P', {"#### ", "#   #", "#   #", "#### ", "#    ", "#    ", "#    "}},
  {'Q', {" ### ", "#   #", "#   #", "#   #", "# # #", "#  # ", " ## #"}},
  {'R', {"#### ", "#   #", "#   #", "#### ", "# #  ", "#  # ", "#   #"}},
  {'S', {" ####", "#    ", "#    ", " ### ", "    #", "    #", "#### "}},
  {'T', {"#####", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  "}},
  {'U', {"#   #", "#   #", "#   #", "#   #", "#   #", "#   #", " ### "}},
  {'V', {"#   #", "#   #", "#   #", "#   #", "#   #", " # # ", "  #  "}},
  {'W', {"#   #", "#   #", "#   #", "# # #", "# # #", "# # #", " # # "}},
  {'X', {"#   #", "#   #", " # # ", "  #  ", " # # ", "#   #", "#   #"}},
  {'Y', {"#   #", "#   #", " # # ", "  #  ", "  #  ", "  #  ", "  #  "}},
  {'Z', {"#####", "    #", "   # ", "  #  ", " #   ", "#    ", "#####"}},
  {'0', {" ### ", "#   #", "#  ##", "# # #", "##  #", "#   #", " ### "}},
  {'1', {"  #  ", " ##  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "}},
  {'2', {" ### ", "#   #", "    #", "   # ", "  #  ", " #   ", "#####"}},
  {'3', {"#####", "   # ", "  #  ", "   # ", "    #", "#   #", " ### "}},
  {'4', {"   # ", "  ## ", " # # ", "#  # ", "#####", "   # ", "   # "}},
  {'5', {"#####", "#    ", "#### ", "    #", "    #", "#   #", " ### "}},
  {'6', {"  ## ", " #   ", "#    ", "#### ", "#   #", "#   #", " ### "}},
  {'7', {"#####", "    #", "   # ", "  #  ", " #   ", " #   ", " #   "}},
  {'8', {" ### ", "#   #", "#   #", " ### ", "#   #", "#   #", " ### "}},
  {'9', {" ### ", "#   #", "#   #", " ####", "    #", "   # ", " ##  "}},
  {'.', {"     ", "     ", "     ", "     ", "     ", " ##  ", " ##  "}},
  {',', {"     ", "     ", "     ", "     ", " ##  ", "  #  ", " #   "}},
  {':', {"     ", " ##  ", " ##  ", "     ", " ##  ", " ##  ", "     "}},
  {';', {"     ", " ##  ", " ##  ", "     ", " ##  ", "  #  ", " #   "}},
  {'!', {"  #  ", "  #  ", "  #  ", "  #  ", "  #  ", "     ", "  #  "}},
  {'?', {" ### ", "#   #", "    #", "   # ", "  #  ", "     ", "  #  "}},
  {'%', {"##   ", "##  #", "   # ", "  #  ", " #   ", "#  ##", "   ##"}},
  {'-', {"     ", "     ", "     ", "#####", "     ", "     ", "     "}},
  {'\'', {"  #  ", "  #  ", " #   ", "     ", "     ", "     ", "     "}},
  {'/', {"     ", "    #", "   # ", "  #  ", " #   ", "#    ", "     "}},
  {'&', {" ##  ", "#  # ", "# #  ", " #   ", "# # #", "#  # ", " ## #"}},
  {'(', {"   # ", "  #  ", " #   ", " #   ", " #   ", "  #  ", "   # "}},
  {')', {" #   ", "  #  ", "   # ", "   # ", "   # ", "  #  ", " #   "}},
  {'+', {"     ", "  #  ", "  #  ", "#####", "  #  ", "  #  ", "     "}},
  {'$', {"  #  ", " ####", "# #  ", " ### ", "  # #", "#### ", "  #  "}},
};
// clang-format on

}  // namespace

GlyphAtlas::GlyphAtlas() {
  for (const auto& g : kFont) {
    Stencil s{};
    for (int r = 0; r < kGlyphBaseHeight; ++r) {
      for (int c = 0; c < kGlyphBaseWidth; ++c) s[r][c] = g.rows[r][c] == '#';
    }
    charset_.push_back(g.c);
    stencils_.push_back(s);
  }
}

const GlyphAtlas& GlyphAtlas::builtin() {
  static const GlyphAtlas atlas;
  return atlas;
}

bool GlyphAtlas::contains(char c) const { return charset_.find(c) != std::string::npos; }

const Stencil& GlyphAtlas::stencil(char c) const {
  const auto pos = charset_.find(c);
  if (pos == std::string::npos) throw ConfigError(std::string("glyph atlas has no character '") + c + "'");
  return stencils_[pos];
}

GlyphMetrics GlyphMetrics::for_height(int glyph_height) {
  if (glyph_height < 1) throw ConfigError("glyph height must be at least 1 pixel");
  GlyphMetrics m;
  m.height = glyph_height;
  m.width = std::max(1, static_cast<int>(std::lround(glyph_height * 5.0 / 7.0)));
  m.spacing = std::max(1, static_cast<int>(std::lround(glyph_height / 7.0)));
  m.line_gap = std::max(1, static_cast<int>(std::lround(glyph_height * 2.0 / 7.0)));
  return m;
}

std::vector<float> glyph_coverage(const GlyphAtlas& atlas, char c, const GlyphMetrics& metrics) {
  constexpr int kSuper = 4;
  const Stencil& s = atlas.stencil(c);
  const double sx = static_cast<double>(kGlyphBaseWidth) / metrics.width;
  const double sy = static_cast<double>(kGlyphBaseHeight) / metrics.height;
  std::vector<float> out(static_cast<std::size_t>(metrics.width) * metrics.height);
  for (int py = 0; py < metrics.height; ++py) {
    for (int px = 0; px < metrics.width; ++px) {
      int hits = 0;
      for (int j = 0; j < kSuper; ++j) {
        const int row = std::min(kGlyphBaseHeight - 1, static_cast<int>((py + (j + 0.5) / kSuper) * sy));
        for (int i = 0; i < kSuper; ++i) {
          const int col = std::min(kGlyphBaseWidth - 1, static_cast<int>((px + (i + 0.5) / kSuper) * sx));
          hits += s[row][col] ? 1 : 0;
        }
      }
      out[static_cast<std::size_t>(py) * metrics.width + px] = static_cast<float>(hits) / (kSuper * kSuper);
    }
  }
  return out;
}

namespace {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

void place_line(TextLayout& layout, std::string_view line, int x, int y) {
  const auto& m = layout.metrics;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == ' ') continue;
    Box cell{x + static_cast<int>(i) * m.advance(), y, m.width, m.height};
    layout.glyphs.push_back({line[i], cell});
    layout.ink_bounds = box_union(layout.ink_bounds, cell);
  }
}

}  // namespace

std::optional<TextLayout> layout_text(std::string_view text, const Box& box, int glyph_height, int padding) {
  TextLayout layout;
  layout.metrics = GlyphMetrics::for_height(glyph_height);
  const auto& m = layout.metrics;
  const int avail_w = box.w - 2 * padding;
  const int avail_h = box.h - 2 * padding;
  if (avail_w < m.width || avail_h < m.height) return std::nullopt;
  const int capacity = (avail_w + m.spacing) / m.advance();

  for (const auto& word : split_words(text)) {
    if (static_cast<int>(word.size()) > capacity) return std::nullopt;
    if (!layout.lines.empty() && static_cast<int>(layout.lines.back().size() + 1 + word.size()) <= capacity) {
      layout.lines.back() += ' ' + word;
    } else {
      layout.lines.push_back(word);
    }
  }
  const int n = static_cast<int>(layout.lines.size());
  if (n == 0) return layout;
  const int block_h = n * m.height + (n - 1) * m.line_gap;
  if (block_h > avail_h) return std::nullopt;

  const int top = box.y + padding + (avail_h - block_h) / 2;
  for (int i = 0; i < n; ++i) {
    const auto& line = layout.lines[static_cast<std::size_t>(i)];
    const int line_w = static_cast<int>(line.size()) * m.advance() - m.spacing;
    place_line(layout, line, box.x + padding + (avail_w - line_w) / 2, top + i * m.line_pitch());
  }
  return layout;
}

TextLayout layout_line(std::string_view text, int x, int y, int glyph_height) {
  TextLayout layout;
  layout.metrics = GlyphMetrics::for_height(glyph_height);
  layout.lines.emplace_back(text);
  place_line(layout, text, x, y);
  return layout;
}

void draw_text(RgbImage& image, const TextLayout& layout, Rgb color, const GlyphAtlas& atlas) {
  for (const auto& g : layout.glyphs) {
    const auto coverage = glyph_coverage(atlas, g.character, layout.metrics);
    for (int py = 0; py < g.cell.h; ++py) {
      const int y = g.cell.y + py;
      if (y < 0 || y >= image.height()) continue;
      for (int px = 0; px < g.cell.w; ++px) {
        const int x = g.cell.x + px;
        if (x < 0 || x >= image.width()) continue;
        image.blend(x, y, color, coverage[static_cast<std::size_t>(py) * g.cell.w + px]);
      }
    }
  }
}

}  // namespace adlabel
