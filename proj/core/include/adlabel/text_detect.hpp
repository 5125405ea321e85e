#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "adlabel/compliance.hpp"
#include "adlabel/glyph_atlas.hpp"
#include "adlabel/raster.hpp"

namespace adlabel {

struct DetectConfig {
  int window_radius = 8;           // local-mean window for binarization
  double contrast = 30.0;          // ink when luminance < local mean - contrast
  int min_glyph_height = 3;
  double max_glyph_height_fraction = 0.12;
  // Components join a line when the horizontal gap is at most this many
  // component heights.
  double merge_gap_factor = 1.5;
  double min_cell_correlation = 0.5;  // below this a cell reads as '?'
  double similarity_threshold = 0.7;
  double min_line_confidence = 0.6;
  std::size_t min_match_length = 3;

  void validate() const;
};

struct TextBox {
  Box box;
  std::string text;
  double confidence = 0;  // mean per-glyph correlation; 0 when text is empty
};

// Boxes only (text empty), sorted top to bottom then left to right.
std::vector<TextBox> detect_text_boxes(const RgbImage& image, const DetectConfig& config = {});

struct Recognition {
  std::string text;
  double confidence = 0;
  int glyph_height = 0;  // atlas scale that matched best
};

// Reads the glyphs inside `box`: the cell grid phase is fixed by the empty
// spacing columns, each cell is matched to the atlas by normalized
// cross-correlation, and empty cells become single spaces.
Recognition recognize(const RgbImage& image, const Box& box, const GlyphAtlas& atlas = GlyphAtlas::builtin(),
                      const DetectConfig& config = {});

// Detection followed by recognition of every box.
std::vector<TextBox> read_text(const RgbImage& image, const GlyphAtlas& atlas = GlyphAtlas::builtin(),
                               const DetectConfig& config = {});

// Minimum Levenshtein distance between `pattern` and any substring of `text`.
std::size_t substring_edit_distance(std::string_view pattern, std::string_view text);

// 1 - substring_edit_distance(line, statement) / |line|; 0 for an empty line.
double warning_similarity(std::string_view line, std::string_view statement);

struct WarningMatch {
  WarningRegion region;
  std::vector<std::size_t> lines;  // indices of the selected boxes
};

// Selects lines similar to the warning statement and merges their boxes;
// glyph_height is the median selected line height.
std::optional<WarningMatch> match_warning_lines(const std::vector<TextBox>& boxes, const DetectConfig& config = {});
std::optional<WarningRegion> find_warning_region(const std::vector<TextBox>& boxes, const DetectConfig& config = {});

// Grows `seed` to the light label rectangle that contains it: rows and
// columns are added while nearly all their pixels are label-coloured or lie
// in one of the `text` boxes.
Box expand_to_label(const RgbImage& image, const Box& seed, const std::vector<Box>& text = {});

struct WarningDetection {
  std::vector<TextBox> boxes;
  std::optional<WarningRegion> region;  // expanded to the label
  std::vector<std::size_t> lines;
};

WarningDetection locate_warning(const RgbImage& image, const GlyphAtlas& atlas = GlyphAtlas::builtin(),
                                const DetectConfig& config = {});

std::string detection_to_json(const WarningDetection& detection, int indent = 2);

// Box outlines in green and the warning region in red.
RgbImage annotate(const RgbImage& image, const WarningDetection& detection);

}  // namespace adlabel
