#include "adlabel/text_detect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "adlabel/error.hpp"
#include "adlabel/manifest.hpp"

namespace adlabel {

void DetectConfig::validate() const {
  if (window_radius < 1) throw ConfigError("detect.window_radius must be at least 1");
  if (!(contrast > 0)) throw ConfigError("detect.contrast must be positive");
  if (min_glyph_height < 1) throw ConfigError("detect.min_glyph_height must be at least 1");
  if (!(max_glyph_height_fraction > 0 && max_glyph_height_fraction <= 1)) {
    throw ConfigError("detect.max_glyph_height_fraction must lie in (0, 1]");
  }
  if (!(merge_gap_factor > 0)) throw ConfigError("detect.merge_gap_factor must be positive");
  if (!(similarity_threshold > 0 && similarity_threshold <= 1)) throw ConfigError("detect.similarity_threshold must lie in (0, 1]");
  if (!(min_cell_correlation >= 0 && min_cell_correlation < 1)) throw ConfigError("detect.min_cell_correlation must lie in [0, 1)");
  if (!(min_line_confidence >= 0 && min_line_confidence <= 1)) throw ConfigError("detect.min_line_confidence must lie in [0, 1]");
}

namespace {

// Luminance plus the local-contrast ink mask of one image.
struct Plane {
  int w = 0, h = 0;
  std::vector<float> lum;
  std::vector<std::uint8_t> ink;

  float at(int x, int y) const {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return lum[static_cast<std::size_t>(y) * w + x];
  }
  bool is_ink(int x, int y) const {
    if (x < 0 || y < 0 || x >= w || y >= h) return false;
    return ink[static_cast<std::size_t>(y) * w + x] != 0;
  }
};

Plane make_plane(const RgbImage& image, const DetectConfig& cfg) {
  Plane p;
  p.w = image.width();
  p.h = image.height();
  p.lum = luminance_plane(image);
  const std::size_t W = static_cast<std::size_t>(p.w);
  std::vector<double> integral((W + 1) * (static_cast<std::size_t>(p.h) + 1), 0.0);
  for (int y = 0; y < p.h; ++y) {
    double row = 0;
    for (int x = 0; x < p.w; ++x) {
      row += p.lum[static_cast<std::size_t>(y) * W + x];
      integral[(static_cast<std::size_t>(y) + 1) * (W + 1) + x + 1] = integral[static_cast<std::size_t>(y) * (W + 1) + x + 1] + row;
    }
  }
  p.ink.assign(p.lum.size(), 0);
  const int r = cfg.window_radius;
  for (int y = 0; y < p.h; ++y) {
    const int y0 = std::max(0, y - r), y1 = std::min(p.h, y + r + 1);
    for (int x = 0; x < p.w; ++x) {
      const int x0 = std::max(0, x - r), x1 = std::min(p.w, x + r + 1);
      auto I = [&](int yy, int xx) { return integral[static_cast<std::size_t>(yy) * (W + 1) + xx]; };
      const double sum = I(y1, x1) - I(y0, x1) - I(y1, x0) + I(y0, x0);
      const double mean = sum / ((y1 - y0) * (x1 - x0));
      if (p.lum[static_cast<std::size_t>(y) * W + x] < mean - cfg.contrast) p.ink[static_cast<std::size_t>(y) * W + x] = 1;
    }
  }
  return p;
}

std::vector<Box> connected_components(const Plane& p) {
  std::vector<std::uint8_t> seen(p.ink.size(), 0);
  std::vector<Box> out;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < p.h; ++y) {
    for (int x = 0; x < p.w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * p.w + x;
      if (!p.ink[i] || seen[i]) continue;
      int x0 = x, x1 = x, y0 = y, y1 = y;
      seen[i] = 1;
      stack.assign(1, {x, y});
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        x0 = std::min(x0, cx);
        x1 = std::max(x1, cx);
        y0 = std::min(y0, cy);
        y1 = std::max(y1, cy);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= p.w || ny >= p.h) continue;
            const std::size_t j = static_cast<std::size_t>(ny) * p.w + nx;
            if (p.ink[j] && !seen[j]) {
              seen[j] = 1;
              stack.emplace_back(nx, ny);
            }
          }
        }
      }
      out.push_back({x0, y0, x1 - x0 + 1, y1 - y0 + 1});
    }
  }
  return out;
}

int vertical_overlap(const Box& a, const Box& b) { return std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y); }
int horizontal_gap(const Box& a, const Box& b) { return std::max(a.x, b.x) - std::min(a.right(), b.right()); }

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

std::vector<Box> detect_lines(const Plane& p, const DetectConfig& cfg) {
  const auto comps = connected_components(p);
  const int max_h = std::max(cfg.min_glyph_height, static_cast<int>(std::lround(cfg.max_glyph_height_fraction * p.h)));
  std::vector<std::size_t> glyphs;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const Box& c = comps[i];
    if (c.h >= cfg.min_glyph_height && c.h <= max_h && c.w <= 2 * c.h + 2) glyphs.push_back(i);
  }
  std::sort(glyphs.begin(), glyphs.end(), [&](std::size_t a, std::size_t b) { return comps[a].x < comps[b].x; });

  // Link glyph-like components of similar height on a shared baseline band.
  std::vector<std::size_t> parent(comps.size());
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t ai = 0; ai < glyphs.size(); ++ai) {
    const Box& a = comps[glyphs[ai]];
    for (std::size_t bi = ai + 1; bi < glyphs.size(); ++bi) {
      const Box& b = comps[glyphs[bi]];
      const int min_h = std::min(a.h, b.h);
      if (b.x - a.right() > cfg.merge_gap_factor * max_h) break;
      if (horizontal_gap(a, b) > cfg.merge_gap_factor * min_h) continue;
      if (vertical_overlap(a, b) * 2 < min_h) continue;
      if (min_h * 10 < std::max(a.h, b.h) * 7) continue;
      parent[find_root(parent, glyphs[ai])] = find_root(parent, glyphs[bi]);
    }
  }

  struct Line {
    Box box;
    std::vector<int> heights;
  };
  std::vector<Line> lines;
  std::vector<int> line_of(comps.size(), -1);
  for (std::size_t gi : glyphs) {
    const std::size_t root = find_root(parent, gi);
    if (line_of[root] < 0) {
      line_of[root] = static_cast<int>(lines.size());
      lines.push_back({});
    }
    Line& l = lines[static_cast<std::size_t>(line_of[root])];
    l.box = box_union(l.box, comps[gi]);
    l.heights.push_back(comps[gi].h);
    line_of[gi] = line_of[root];
  }

  // Punctuation and other small marks extend a line horizontally when they
  // sit inside its band.
  std::vector<Box> out;
  for (auto& l : lines) {
    std::nth_element(l.heights.begin(), l.heights.begin() + static_cast<std::ptrdiff_t>(l.heights.size() / 2), l.heights.end());
    const int ref_h = l.heights[l.heights.size() / 2];
    Box extended = l.box;
    for (bool grew = true; grew;) {
      grew = false;
      for (const Box& c : comps) {
        if (c.h >= ref_h || c.y < l.box.y - 1 || c.bottom() > l.box.bottom() + 1) continue;
        if (c.x >= extended.x && c.right() <= extended.right()) continue;
        if (horizontal_gap(c, extended) > cfg.merge_gap_factor * ref_h) continue;
        const Box u = box_union(extended, c);
        extended = {u.x, extended.y, u.w, extended.h};
        grew = true;
      }
    }
    out.push_back(extended);
  }
  std::sort(out.begin(), out.end(), [](const Box& a, const Box& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
  return out;
}

struct Template {
  char c;
  std::vector<double> centered;
  double norm;
};

std::vector<Template> make_templates(const GlyphAtlas& atlas, const GlyphMetrics& m) {
  std::vector<Template> out;
  for (char c : atlas.charset()) {
    if (c == ' ') continue;
    const auto cov = glyph_coverage(atlas, c, m);
    const double mean = std::accumulate(cov.begin(), cov.end(), 0.0) / static_cast<double>(cov.size());
    Template t{c, {}, 0.0};
    t.centered.reserve(cov.size());
    for (float v : cov) {
      t.centered.push_back(v - mean);
      t.norm += (v - mean) * (v - mean);
    }
    t.norm = std::sqrt(t.norm);
    if (t.norm > 0) out.push_back(std::move(t));
  }
  return out;
}

// Reads one line at a fixed glyph height, top row and grid origin.
Recognition read_cells(const Plane& p, const Box& box, const GlyphMetrics& m, int y0, int x0,
                       const std::vector<Template>& templates, const DetectConfig& cfg) {
  Recognition r;
  r.glyph_height = m.height;
  std::string text;
  double score_sum = 0;
  int glyph_cells = 0;
  std::vector<double> cell(static_cast<std::size_t>(m.width) * m.height);
  for (int cx = x0; cx < box.right(); cx += m.advance()) {
    int ink = 0;
    for (int y = y0; y < y0 + m.height; ++y) {
      for (int x = cx; x < cx + m.width; ++x) ink += p.is_ink(x, y) ? 1 : 0;
    }
    if (ink == 0) {
      text.push_back(' ');
      continue;
    }
    double mean = 0;
    for (int y = 0; y < m.height; ++y) {
      for (int x = 0; x < m.width; ++x) {
        const double d = 255.0 - p.at(cx + x, y0 + y);
        cell[static_cast<std::size_t>(y) * m.width + x] = d;
        mean += d;
      }
    }
    mean /= static_cast<double>(cell.size());
    double norm = 0;
    for (auto& v : cell) {
      v -= mean;
      norm += v * v;
    }
    norm = std::sqrt(norm);
    char best_c = '?';
    double best = -1;
    if (norm > 1e-9) {
      for (const auto& t : templates) {
        double dot = 0;
        for (std::size_t k = 0; k < cell.size(); ++k) dot += cell[k] * t.centered[k];
        const double ncc = dot / (norm * t.norm);
        if (ncc > best) {
          best = ncc;
          best_c = t.c;
        }
      }
    }
    ++glyph_cells;
    if (best >= cfg.min_cell_correlation) {
      text.push_back(best_c);
      score_sum += best;
    } else {
      text.push_back('?');
    }
  }
  // Collapse runs of spaces and trim.
  std::string collapsed;
  for (char c : text) {
    if (c == ' ' && (collapsed.empty() || collapsed.back() == ' ')) continue;
    collapsed.push_back(c);
  }
  while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
  r.text = std::move(collapsed);
  r.confidence = glyph_cells > 0 && !r.text.empty() ? score_sum / glyph_cells : 0.0;
  return r;
}

Recognition recognize_plane(const Plane& p, const Box& box, const GlyphAtlas& atlas, const DetectConfig& cfg) {
  Recognition best;
  if (box.empty()) return best;
  std::vector<int> heights{box.h, box.h + 1, box.h + 2};
  if (box.h > 1) heights.push_back(box.h - 1);
  for (int g : heights) {
    const auto m = GlyphMetrics::for_height(g);
    const auto templates = make_templates(atlas, m);
    const int dy_lo = std::min(0, box.h - g), dy_hi = std::max(0, box.h - g);
    for (int dy = dy_lo; dy <= dy_hi; ++dy) {
      const int y0 = box.y + dy;
      // Grid phase: the origin leaving the least ink in spacing columns.
      std::vector<int> phases;
      int least = -1;
      for (int x0 = box.x - (m.width - 1); x0 <= box.x; ++x0) {
        int ink = 0;
        for (int cx = x0; cx < box.right(); cx += m.advance()) {
          for (int y = y0; y < y0 + g; ++y) {
            for (int x = cx + m.width; x < cx + m.advance(); ++x) ink += p.is_ink(x, y) ? 1 : 0;
          }
        }
        if (least < 0 || ink < least) {
          least = ink;
          phases.assign(1, x0);
        } else if (ink == least) {
          phases.push_back(x0);
        }
      }
      for (int x0 : phases) {
        auto r = read_cells(p, box, m, y0, x0, templates, cfg);
        if (r.confidence > best.confidence) best = std::move(r);
      }
    }
    if (g == box.h && best.confidence >= 0.9) break;
  }
  return best;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<TextBox> detect_text_boxes(const RgbImage& image, const DetectConfig& config) {
  config.validate();
  const Plane p = make_plane(image, config);
  std::vector<TextBox> out;
  for (const Box& b : detect_lines(p, config)) out.push_back({b, {}, 0.0});
  return out;
}

Recognition recognize(const RgbImage& image, const Box& box, const GlyphAtlas& atlas, const DetectConfig& config) {
  config.validate();
  if (!box.inside(image.width(), image.height())) throw DataError("recognition box lies outside the image");
  return recognize_plane(make_plane(image, config), box, atlas, config);
}

std::vector<TextBox> read_text(const RgbImage& image, const GlyphAtlas& atlas, const DetectConfig& config) {
  config.validate();
  const Plane p = make_plane(image, config);
  std::vector<TextBox> out;
  for (const Box& b : detect_lines(p, config)) {
    const auto r = recognize_plane(p, b, atlas, config);
    out.push_back({b, r.text, r.confidence});
  }
  return out;
}

std::size_t substring_edit_distance(std::string_view pattern, std::string_view text) {
  // Row i holds distances of pattern[0, i) against suffixes ending at each
  // text position; row 0 is free so a match may start anywhere.
  std::vector<std::size_t> prev(text.size() + 1, 0), cur(text.size() + 1);
  for (std::size_t i = 1; i <= pattern.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= text.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (pattern[i - 1] == text[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return *std::min_element(prev.begin(), prev.end());
}

double warning_similarity(std::string_view line, std::string_view statement) {
  if (line.empty()) return 0.0;
  return 1.0 - static_cast<double>(substring_edit_distance(line, statement)) / static_cast<double>(line.size());
}

std::optional<WarningMatch> match_warning_lines(const std::vector<TextBox>& boxes, const DetectConfig& config) {
  WarningMatch match;
  std::vector<double> heights;
  Box merged;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    if (b.text.size() < config.min_match_length || b.confidence < config.min_line_confidence) continue;
    if (warning_similarity(b.text, kWarningStatement) < config.similarity_threshold) continue;
    match.lines.push_back(i);
    merged = box_union(merged, b.box);
    heights.push_back(b.box.h);
  }
  if (match.lines.empty()) return std::nullopt;
  match.region = {merged, median_of(heights)};
  return match;
}

std::optional<WarningRegion> find_warning_region(const std::vector<TextBox>& boxes, const DetectConfig& config) {
  auto m = match_warning_lines(boxes, config);
  if (!m) return std::nullopt;
  return m->region;
}

Box expand_to_label(const RgbImage& image, const Box& seed, const std::vector<Box>& text) {
  const int W = image.width(), H = image.height();
  Box r = box_intersection(seed, {0, 0, W, H});
  if (r.empty()) return r;
  const auto lum = luminance_plane(image);

  // Label level: upper quartile of the seed, which is mostly label pixels.
  std::vector<float> inside;
  for (int y = r.y; y < r.bottom(); ++y) {
    for (int x = r.x; x < r.right(); ++x) inside.push_back(lum[static_cast<std::size_t>(y) * W + x]);
  }
  const auto q = inside.begin() + static_cast<std::ptrdiff_t>(inside.size() * 3 / 4);
  std::nth_element(inside.begin(), q, inside.end());
  const double threshold = *q - 32.0;

  std::vector<int> label((static_cast<std::size_t>(W) + 1) * (static_cast<std::size_t>(H) + 1), 0);
  std::vector<std::uint8_t> in_text(static_cast<std::size_t>(W) * H, 0);
  for (const Box& t : text) {
    const Box c = box_intersection(t, {0, 0, W, H});
    for (int y = c.y; y < c.bottom(); ++y) {
      for (int x = c.x; x < c.right(); ++x) in_text[static_cast<std::size_t>(y) * W + x] = 1;
    }
  }
  auto L = [&](int y, int x) -> int& { return label[static_cast<std::size_t>(y) * (W + 1) + x]; };
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * W + x;
      const int v = (lum[i] >= threshold || in_text[i]) ? 1 : 0;
      L(y + 1, x + 1) = L(y, x + 1) + L(y + 1, x) - L(y, x) + v;
    }
  }
  auto frac = [&](int x0, int y0, int x1, int y1) {
    const int n = (x1 - x0) * (y1 - y0);
    if (n <= 0) return 0.0;
    return static_cast<double>(L(y1, x1) - L(y0, x1) - L(y1, x0) + L(y0, x0)) / n;
  };

  constexpr double kShrink = 0.5, kGrow = 0.85;
  for (bool changed = true; changed && !r.empty();) {
    changed = false;
    if (r.h > 1 && frac(r.x, r.y, r.right(), r.y + 1) < kShrink) { ++r.y; --r.h; changed = true; }
    if (r.h > 1 && frac(r.x, r.bottom() - 1, r.right(), r.bottom()) < kShrink) { --r.h; changed = true; }
    if (r.w > 1 && frac(r.x, r.y, r.x + 1, r.bottom()) < kShrink) { ++r.x; --r.w; changed = true; }
    if (r.w > 1 && frac(r.right() - 1, r.y, r.right(), r.bottom()) < kShrink) { --r.w; changed = true; }
  }
  for (bool changed = true; changed;) {
    changed = false;
    if (r.y > 0 && frac(r.x, r.y - 1, r.right(), r.y) >= kGrow) { --r.y; ++r.h; changed = true; }
    if (r.bottom() < H && frac(r.x, r.bottom(), r.right(), r.bottom() + 1) >= kGrow) { ++r.h; changed = true; }
    if (r.x > 0 && frac(r.x - 1, r.y, r.x, r.bottom()) >= kGrow) { --r.x; ++r.w; changed = true; }
    if (r.right() < W && frac(r.right(), r.y, r.right() + 1, r.bottom()) >= kGrow) { ++r.w; changed = true; }
  }
  return r;
}

WarningDetection locate_warning(const RgbImage& image, const GlyphAtlas& atlas, const DetectConfig& config) {
  WarningDetection d;
  d.boxes = read_text(image, atlas, config);
  const auto match = match_warning_lines(d.boxes, config);
  if (!match) return d;
  d.lines = match->lines;
  // Unselected lines of similar height inside the label still count as label.
  const double g = match->region.glyph_height;
  std::vector<Box> text;
  for (const auto& b : d.boxes) {
    if (b.box.h >= 0.7 * g && b.box.h <= 1.3 * g) text.push_back(b.box);
  }
  d.region = WarningRegion{expand_to_label(image, match->region.box, text), g};
  return d;
}

std::string detection_to_json(const WarningDetection& d, int indent) {
  nlohmann::ordered_json j;
  j["boxes"] = nlohmann::ordered_json::array();
  for (const auto& b : d.boxes) {
    j["boxes"].push_back({{"x", b.box.x}, {"y", b.box.y}, {"w", b.box.w}, {"h", b.box.h},
                          {"text", b.text}, {"confidence", b.confidence}});
  }
  if (d.region) {
    const auto& r = *d.region;
    j["warning"] = {{"x", r.box.x}, {"y", r.box.y}, {"w", r.box.w}, {"h", r.box.h}, {"glyph_height", r.glyph_height}};
  } else {
    j["warning"] = nullptr;
  }
  j["warning_lines"] = d.lines;
  return j.dump(indent);
}

RgbImage annotate(const RgbImage& image, const WarningDetection& d) {
  RgbImage out = image;
  for (const auto& b : d.boxes) draw_outline(out, b.box, {0, 200, 0});
  if (d.region) draw_outline(out, d.region->box, {230, 0, 0});
  return out;
}

}  // namespace adlabel
