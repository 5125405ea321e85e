#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include "adlabel/compliance.hpp"
#include "adlabel/glyph_atlas.hpp"
#include "adlabel/manifest.hpp"
#include "adlabel/random.hpp"
#include "adlabel/raster.hpp"

namespace adlabel {

enum class BackgroundKind { kFlat, kGradient, kSpeckle };
enum class MotifKind { kVaping, kNeutral };

std::string_view background_name(BackgroundKind k);

struct Background {
  BackgroundKind kind = BackgroundKind::kFlat;
  Rgb primary;
  Rgb secondary;        // gradient end colour
  bool vertical = true;  // gradient direction
  int noise = 0;         // speckle amplitude per channel, applied to the whole image
};

// Scenario probabilities plus the per-post vaping probability.
struct ScenarioMix {
  double fully_compliant = 0.20;
  double noncompliant_small = 0.10;
  double noncompliant_low = 0.10;
  double noncompliant_tiny_font = 0.10;
  double absent = 0.50;
  double vaping = 0.55;

  double probability(Scenario s) const;
  // Probabilities non-negative and summing to 1 (within 1e-9); vaping in [0,1].
  void validate() const;
  Scenario sample(Rng& rng) const;
};

// Inclusive glyph-height range (pixels) the sampler uses for a scenario at
// image height H. Absent has no range.
std::pair<int, int> glyph_height_range(Scenario s, int image_height);

// Inclusive area-fraction range of the warning banner for a scenario.
std::pair<double, double> area_fraction_range(Scenario s);

struct SpecOptions {
  int width = 64;
  int height = 64;
  int noise = 24;
  double distractor_prob = 0.0;

  void validate() const;
};

struct DistractorText {
  std::string text;
  Box patch;
  int glyph_height = 0;
};

struct ImageSpec {
  int width = 64;
  int height = 64;
  Background background;
  MotifKind motif = MotifKind::kNeutral;
  Scenario scenario = Scenario::kAbsent;
  std::optional<WarningGeometry> warning;
  Rgb banner_color{240, 240, 240};
  Rgb text_color{20, 20, 20};
  std::optional<DistractorText> distractor;
  std::uint64_t render_seed = 0;  // drives motif details and speckle
};

// Region the motif is drawn in: the largest band of the image not covered by
// the warning banner (the whole image when there is none).
Box motif_region(const ImageSpec& spec);

// Samples a spec whose ground-truth verdict violates exactly the rules the
// scenario intends. `vaping` fixes the motif class. Throws DataError when no
// feasible geometry is found in 100 attempts.
ImageSpec sample_spec(Rng& rng, const ScenarioMix& mix, const SpecOptions& options = {});
ImageSpec sample_spec(Rng& rng, Scenario scenario, bool vaping, const SpecOptions& options = {});

// Deterministic in the spec. When `warning_layout` is given it receives the
// glyph layout of the warning text (empty when there is none).
RgbImage render_image(const ImageSpec& spec, TextLayout* warning_layout = nullptr);

struct CorpusConfig {
  int n_posts = 3484;
  // Extra images per post ~ Poisson(mean), capped at max_extra_images.
  double extra_images_mean = 4363.0 / 3484.0 - 1.0;
  int max_extra_images = 9;
  ScenarioMix mix;
  SpecOptions image;
  std::uint64_t seed = 42;

  void validate() const;
};

std::string post_id_for(int post_index, int n_posts);

// Samples every record of the corpus without rendering.
std::vector<std::pair<ManifestRecord, ImageSpec>> plan_corpus(const CorpusConfig& config);

// Writes images/<post>_<k>.ppm and manifest.jsonl under out_dir. Rendering is
// parallel across posts; output does not depend on the worker count.
Manifest generate_corpus(const CorpusConfig& config, const std::filesystem::path& out_dir, int threads = 0);

}  // namespace adlabel
