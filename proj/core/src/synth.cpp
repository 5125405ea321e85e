#include "adlabel/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "adlabel/error.hpp"
#include "adlabel/parallel.hpp"

namespace adlabel {

namespace {

constexpr int kMaxAttempts = 100;
constexpr std::uint64_t kPostStream = 0xffffffffULL;
constexpr int kBannerPadding = 1;

constexpr std::array<std::string_view, 6> kDistractors{"SALE 50% OFF", "NEW FLAVORS", "SHOP NOW",
                                                       "FREE SHIPPING", "BUY 2 GET 1", "LIMITED DROP"};

std::uint8_t channel(Rng& rng, int lo, int hi) { return static_cast<std::uint8_t>(uniform_int(rng, lo, hi)); }

Rgb dark_background(Rng& rng) {
  for (;;) {
    Rgb c{channel(rng, 0, 255), channel(rng, 0, 255), channel(rng, 0, 255)};
    if (luminance(c) <= 170.0) return c;
  }
}

Rgb light_color(Rng& rng) { return {channel(rng, 225, 255), channel(rng, 225, 255), channel(rng, 225, 255)}; }
Rgb ink_color(Rng& rng) { return {channel(rng, 0, 40), channel(rng, 0, 40), channel(rng, 0, 40)}; }

Rgb saturated_color(Rng& rng) {
  std::array<std::uint8_t, 3> c{channel(rng, 200, 255), channel(rng, 0, 60), channel(rng, 0, 255)};
  for (int i = 2; i > 0; --i) std::swap(c[static_cast<std::size_t>(i)], c[static_cast<std::size_t>(uniform_int(rng, 0, i))]);
  return {c[0], c[1], c[2]};
}

int ceil_pct(int pct, int n) { return (pct * n + 99) / 100; }

// Height of the wrapped warning block inside a banner of width w, padding included.
std::optional<int> banner_min_height(int glyph_height, int width) {
  const auto layout = layout_text(kWarningStatement, Box{0, 0, width, 1 << 20}, glyph_height, kBannerPadding);
  if (!layout) return std::nullopt;
  const int n = static_cast<int>(layout->lines.size());
  return n * layout->metrics.height + (n - 1) * layout->metrics.line_gap + 2 * kBannerPadding;
}

std::optional<WarningGeometry> sample_warning(Rng& rng, Scenario s, int W, int H) {
  const auto [g_lo, g_hi] = glyph_height_range(s, H);
  const auto [a_lo, a_hi] = area_fraction_range(s);
  const double total = static_cast<double>(W) * H;
  const bool low = s == Scenario::kNoncompliantLow;
  const int top_limit = 8 * H / 100;
  const int low_start = (3 * H + 9) / 10;
  const ViolationSet intended = intended_violations(s);

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const int g = static_cast<int>(uniform_int(rng, g_lo, g_hi));
    const int w = static_cast<int>(uniform_int(rng, (3 * W + 4) / 5, W));
    const auto min_h = banner_min_height(g, w);
    if (!min_h) continue;
    int h_lo = std::max(*min_h, static_cast<int>(std::ceil(a_lo * total / w)));
    int h_hi = std::min(H, static_cast<int>(std::floor(a_hi * total / w)));
    if (low) h_hi = std::min(h_hi, H - low_start);
    if (h_lo > h_hi) continue;
    const int h = static_cast<int>(uniform_int(rng, h_lo, h_hi));
    const int y = low ? static_cast<int>(uniform_int(rng, low_start, H - h))
                      : static_cast<int>(uniform_int(rng, 0, std::min(top_limit, H - h)));
    const int x = static_cast<int>(uniform_int(rng, 0, W - w));
    WarningGeometry geom;
    geom.box = {x, y, w, h};
    geom.glyph_height = g;
    if (check({W, H}, geom.region()).violations == intended) return geom;
  }
  return std::nullopt;
}

std::optional<DistractorText> sample_distractor(Rng& rng, const Box& region, int H) {
  const auto text = kDistractors[static_cast<std::size_t>(uniform_int(rng, 0, kDistractors.size() - 1))];
  const auto [g_lo, g_hi] = glyph_height_range(Scenario::kFullyCompliant, H);
  for (int g = static_cast<int>(uniform_int(rng, g_lo, g_hi)); g >= g_lo; --g) {
    const auto m = GlyphMetrics::for_height(g);
    const int pw = static_cast<int>(text.size()) * m.advance() - m.spacing + 4;
    const int ph = g + 4;
    if (pw > region.w || ph > region.h) continue;
    DistractorText d;
    d.text = std::string(text);
    d.glyph_height = g;
    d.patch = {region.x + static_cast<int>(uniform_int(rng, 0, region.w - pw)),
               region.y + static_cast<int>(uniform_int(rng, 0, region.h - ph)), pw, ph};
    return d;
  }
  return std::nullopt;
}

// --- rasterization helpers, all clipped to `clip` ---

void fill_ellipse(RgbImage& img, const Box& clip, double cx, double cy, double rx, double ry, Rgb c, double alpha) {
  if (rx <= 0 || ry <= 0) return;
  const int x0 = std::max(clip.x, static_cast<int>(std::floor(cx - rx)));
  const int x1 = std::min(clip.right() - 1, static_cast<int>(std::ceil(cx + rx)));
  const int y0 = std::max(clip.y, static_cast<int>(std::floor(cy - ry)));
  const int y1 = std::min(clip.bottom() - 1, static_cast<int>(std::ceil(cy + ry)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
      if (dx * dx + dy * dy <= 1.0) img.blend(x, y, c, alpha);
    }
  }
}

void fill_rounded_rect(RgbImage& img, const Box& clip, const Box& b, int radius, Rgb c) {
  const Box area = box_intersection(b, clip);
  radius = std::min({radius, b.w / 2, b.h / 2});
  for (int y = area.y; y < area.bottom(); ++y) {
    for (int x = area.x; x < area.right(); ++x) {
      const int dx = std::max({b.x + radius - x - 1, x - (b.right() - radius), 0});
      const int dy = std::max({b.y + radius - y - 1, y - (b.bottom() - radius), 0});
      if (dx * dx + dy * dy <= radius * radius) img.set(x, y, c);
    }
  }
}

void fill_triangle(RgbImage& img, const Box& clip, std::array<double, 6> p, Rgb c) {
  auto edge = [](double ax, double ay, double bx, double by, double px, double py) {
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
  };
  const int x0 = std::max(clip.x, static_cast<int>(std::floor(std::min({p[0], p[2], p[4]}))));
  const int x1 = std::min(clip.right() - 1, static_cast<int>(std::ceil(std::max({p[0], p[2], p[4]}))));
  const int y0 = std::max(clip.y, static_cast<int>(std::floor(std::min({p[1], p[3], p[5]}))));
  const int y1 = std::min(clip.bottom() - 1, static_cast<int>(std::ceil(std::max({p[1], p[3], p[5]}))));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const double e0 = edge(p[0], p[1], p[2], p[3], px, py);
      const double e1 = edge(p[2], p[3], p[4], p[5], px, py);
      const double e2 = edge(p[4], p[5], p[0], p[1], px, py);
      if ((e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0)) img.set(x, y, c);
    }
  }
}

void draw_background(RgbImage& img, const Background& bg) {
  const int W = img.width(), H = img.height();
  if (bg.kind != BackgroundKind::kGradient) {
    img.fill_rect({0, 0, W, H}, bg.primary);
    return;
  }
  const int span = std::max(1, (bg.vertical ? H : W) - 1);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double t = static_cast<double>(bg.vertical ? y : x) / span;
      auto lerp = [t](std::uint8_t a, std::uint8_t b) {
        return static_cast<std::uint8_t>(std::lround(a + t * (static_cast<double>(b) - a)));
      };
      img.set(x, y, {lerp(bg.primary.r, bg.secondary.r), lerp(bg.primary.g, bg.secondary.g),
                     lerp(bg.primary.b, bg.secondary.b)});
    }
  }
}

void draw_vaping(RgbImage& img, const Box& r, Rng& rng) {
  const bool horizontal = r.w >= r.h;
  const int len = horizontal ? r.w : r.h;
  const int thick = horizontal ? r.h : r.w;
  // Work in (u along the device, v across it), then map to image axes.
  auto to_box = [&](int u, int v, int lu, int lv) {
    return horizontal ? Box{r.x + u, r.y + v, lu, lv} : Box{r.x + v, r.y + u, lv, lu};
  };
  auto to_xy = [&](double u, double v) {
    return horizontal ? std::pair{r.x + u, r.y + v} : std::pair{r.x + v, r.y + u};
  };

  const int body_len = std::max(3, static_cast<int>(std::lround(uniform(rng, 0.40, 0.55) * len)));
  const int body_thick = std::max(2, static_cast<int>(std::lround(uniform(rng, 0.30, 0.45) * thick)));
  const int mouth_len = std::max(1, static_cast<int>(std::lround(uniform(rng, 0.15, 0.25) * body_len)));
  const int mouth_thick = std::max(1, body_thick / 2);
  const bool mouth_forward = bernoulli(rng, 0.5);
  const int u_room = std::max(0, len - body_len - mouth_len);
  // Leave the cloud side with the larger share of the free length.
  const int u0 = mouth_forward ? static_cast<int>(uniform_int(rng, 0, u_room / 3))
                               : static_cast<int>(uniform_int(rng, u_room - u_room / 3, u_room)) + mouth_len;
  const int v0 = static_cast<int>(uniform_int(rng, 0, std::max(0, thick - body_thick)));

  const Rgb body{channel(rng, 10, 60), channel(rng, 10, 60), channel(rng, 10, 70)};
  const Rgb mouth{channel(rng, 70, 110), channel(rng, 70, 110), channel(rng, 70, 110)};
  const Rgb button{channel(rng, 190, 255), channel(rng, 150, 255), channel(rng, 60, 255)};

  fill_rounded_rect(img, r, to_box(u0, v0, body_len, body_thick), std::max(1, body_thick / 3), body);
  const int mv = v0 + (body_thick - mouth_thick) / 2;
  const int mu = mouth_forward ? u0 + body_len : u0 - mouth_len;
  fill_rounded_rect(img, r, to_box(mu, mv, mouth_len, mouth_thick), 0, mouth);
  {
    const auto [bx, by] = to_xy(u0 + body_len * uniform(rng, 0.3, 0.7), v0 + body_thick / 2.0);
    const double br = std::max(0.8, body_thick * 0.18);
    fill_ellipse(img, r, bx, by, br, br, button, 1.0);
  }

  const int puffs = static_cast<int>(uniform_int(rng, 3, 6));
  const double tip = mouth_forward ? mu + mouth_len : mu;
  const double dir = mouth_forward ? 1.0 : -1.0;
  const double vc = v0 + body_thick / 2.0;
  for (int i = 0; i < puffs; ++i) {
    const double along = tip + dir * (uniform(rng, 0.05, 0.45) * len);
    const double across = vc + uniform(rng, -0.35, 0.35) * thick;
    const double ru = uniform(rng, 0.08, 0.18) * len;
    const double rv = uniform(rng, 0.15, 0.30) * thick;
    const auto [cx, cy] = to_xy(along, across);
    const Rgb cloud{channel(rng, 215, 250), channel(rng, 215, 250), channel(rng, 220, 255)};
    fill_ellipse(img, r, cx, cy, horizontal ? ru : rv, horizontal ? rv : ru, cloud, uniform(rng, 0.55, 0.85));
  }
}

void draw_neutral(RgbImage& img, const Box& r, Rng& rng) {
  const int shapes = static_cast<int>(uniform_int(rng, 2, 4));
  const int side = std::min(r.w, r.h);
  for (int i = 0; i < shapes; ++i) {
    const int kind = static_cast<int>(uniform_int(rng, 0, 2));
    const double s = std::max(2.0, uniform(rng, 0.3, 0.6) * side);
    const double cx = r.x + uniform(rng, s / 2, std::max(s / 2, r.w - s / 2));
    const double cy = r.y + uniform(rng, s / 2, std::max(s / 2, r.h - s / 2));
    const Rgb c = saturated_color(rng);
    if (kind == 0) {
      fill_ellipse(img, r, cx, cy, s / 2, s / 2, c, 1.0);
    } else if (kind == 1) {
      const double aspect = uniform(rng, 0.6, 1.0);
      const Box b{static_cast<int>(std::lround(cx - s / 2)), static_cast<int>(std::lround(cy - s * aspect / 2)),
                  static_cast<int>(std::lround(s)), static_cast<int>(std::lround(s * aspect))};
      fill_rounded_rect(img, r, b, 0, c);
    } else {
      fill_triangle(img, r, {cx, cy - s / 2, cx - s / 2, cy + s / 2, cx + s / 2, cy + s / 2}, c);
    }
  }
}

std::uint64_t poisson(Rng& rng, double mean) {
  if (mean <= 0) return 0;
  const double limit = std::exp(-mean);
  std::uint64_t k = 0;
  double p = uniform01(rng);
  while (p > limit) {
    ++k;
    p *= uniform01(rng);
  }
  return k;
}

}  // namespace

std::string_view background_name(BackgroundKind k) {
  switch (k) {
    case BackgroundKind::kFlat: return "flat";
    case BackgroundKind::kGradient: return "gradient";
    case BackgroundKind::kSpeckle: return "speckle";
  }
  return "?";
}

double ScenarioMix::probability(Scenario s) const {
  switch (s) {
    case Scenario::kFullyCompliant: return fully_compliant;
    case Scenario::kNoncompliantSmall: return noncompliant_small;
    case Scenario::kNoncompliantLow: return noncompliant_low;
    case Scenario::kNoncompliantTinyFont: return noncompliant_tiny_font;
    case Scenario::kAbsent: return absent;
  }
  return 0;
}

void ScenarioMix::validate() const {
  double sum = 0;
  for (auto s : kAllScenarios) {
    const double p = probability(s);
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("scenario probability for " + std::string(scenario_name(s)) + " must lie in [0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("scenario probabilities must sum to 1, got " + std::to_string(sum));
  if (!(vaping >= 0.0 && vaping <= 1.0)) throw ConfigError("vaping probability must lie in [0, 1]");
}

Scenario ScenarioMix::sample(Rng& rng) const {
  const double u = uniform01(rng);
  double acc = 0;
  Scenario last = Scenario::kAbsent;
  for (auto s : kAllScenarios) {
    const double p = probability(s);
    if (p <= 0) continue;
    acc += p;
    last = s;
    if (u < acc) return s;
  }
  return last;
}

std::pair<int, int> glyph_height_range(Scenario s, int H) {
  const int legal_min = ceil_pct(3, H);                // smallest g with g/H >= 0.03
  const int comfortable = (45 * H + 500) / 1000;       // round(0.045 H)
  const int upper = (7 * H + 50) / 100;                // round(0.07 H)
  switch (s) {
    case Scenario::kFullyCompliant:
    case Scenario::kNoncompliantLow:
      return {std::max(legal_min, comfortable), upper};
    case Scenario::kNoncompliantSmall:
      return {legal_min, upper};
    case Scenario::kNoncompliantTinyFont:
      return {std::max(1, (22 * H + 500) / 1000), (3 * H - 1) / 100};
    case Scenario::kAbsent:
      break;
  }
  return {0, 0};
}

std::pair<double, double> area_fraction_range(Scenario s) {
  switch (s) {
    case Scenario::kNoncompliantSmall: return {0.05, 0.18};
    case Scenario::kAbsent: return {0.0, 0.0};
    default: return {0.21, 0.40};
  }
}

void SpecOptions::validate() const {
  if (width < 32 || height < 32) throw ConfigError("image width and height must be at least 32 pixels");
  for (auto s : kAllScenarios) {
    if (s == Scenario::kAbsent) continue;
    const auto [lo, hi] = glyph_height_range(s, height);
    if (lo > hi) throw ConfigError("image height " + std::to_string(height) + " leaves no glyph size for " + std::string(scenario_name(s)));
  }
  if (noise < 0 || noise > 127) throw ConfigError("noise must lie in [0, 127]");
  if (!(distractor_prob >= 0.0 && distractor_prob <= 1.0)) throw ConfigError("distractor_prob must lie in [0, 1]");
}

Box motif_region(const ImageSpec& spec) {
  const int W = spec.width, H = spec.height;
  if (!spec.warning) return {0, 0, W, H};
  const Box& b = spec.warning->box;
  constexpr int kGap = 2;
  const Box top{0, 0, W, std::max(0, b.y - kGap)};
  const Box bottom{0, b.bottom() + kGap, W, std::max(0, H - b.bottom() - kGap)};
  const Box left{0, 0, std::max(0, b.x - kGap), H};
  const Box right{b.right() + kGap, 0, std::max(0, W - b.right() - kGap), H};
  const Box& tb = top.area() >= bottom.area() ? top : bottom;
  if (tb.h * 5 >= H) return tb;
  Box best = tb;
  for (const Box& c : {left, right}) {
    if (c.area() > best.area()) best = c;
  }
  return best;
}

ImageSpec sample_spec(Rng& rng, Scenario scenario, bool vaping, const SpecOptions& options) {
  options.validate();
  ImageSpec spec;
  spec.width = options.width;
  spec.height = options.height;
  spec.scenario = scenario;
  spec.motif = vaping ? MotifKind::kVaping : MotifKind::kNeutral;

  spec.background.kind = static_cast<BackgroundKind>(uniform_int(rng, 0, 2));
  spec.background.primary = dark_background(rng);
  spec.background.secondary = dark_background(rng);
  spec.background.vertical = bernoulli(rng, 0.5);
  spec.background.noise = spec.background.kind == BackgroundKind::kSpeckle ? options.noise : 0;
  spec.banner_color = light_color(rng);
  spec.text_color = ink_color(rng);

  if (scenario != Scenario::kAbsent) {
    spec.warning = sample_warning(rng, scenario, spec.width, spec.height);
    if (!spec.warning) {
      throw DataError("no feasible " + std::string(scenario_name(scenario)) + " geometry at " +
                      std::to_string(spec.width) + "x" + std::to_string(spec.height) + " after " +
                      std::to_string(kMaxAttempts) + " attempts");
    }
  }
  if (options.distractor_prob > 0 && bernoulli(rng, options.distractor_prob)) {
    spec.distractor = sample_distractor(rng, motif_region(spec), spec.height);
  }
  spec.render_seed = rng();
  return spec;
}

ImageSpec sample_spec(Rng& rng, const ScenarioMix& mix, const SpecOptions& options) {
  mix.validate();
  const Scenario s = mix.sample(rng);
  const bool vaping = bernoulli(rng, mix.vaping);
  return sample_spec(rng, s, vaping, options);
}

RgbImage render_image(const ImageSpec& spec, TextLayout* warning_layout) {
  Rng rng(spec.render_seed);
  RgbImage img(spec.width, spec.height);
  draw_background(img, spec.background);

  const Box region = motif_region(spec);
  if (region.w >= 3 && region.h >= 3) {
    if (spec.motif == MotifKind::kVaping) {
      draw_vaping(img, region, rng);
    } else {
      draw_neutral(img, region, rng);
    }
  }

  if (spec.distractor) {
    const auto& d = *spec.distractor;
    img.fill_rect(d.patch, spec.banner_color);
    draw_text(img, layout_line(d.text, d.patch.x + 2, d.patch.y + 2, d.glyph_height), spec.text_color);
  }

  if (warning_layout) *warning_layout = TextLayout{};
  if (spec.warning) {
    const auto& w = *spec.warning;
    img.fill_rect(w.box, spec.banner_color);
    const auto layout = layout_text(w.text, w.box, w.glyph_height, kBannerPadding);
    if (!layout) throw DataError("warning text does not fit its banner");
    draw_text(img, *layout, spec.text_color);
    if (warning_layout) *warning_layout = *layout;
  }

  if (spec.background.noise > 0) {
    const int n = spec.background.noise;
    for (auto& v : img.bytes()) {
      v = static_cast<std::uint8_t>(std::clamp<std::int64_t>(v + uniform_int(rng, -n, n), 0, 255));
    }
  }
  return img;
}

void CorpusConfig::validate() const {
  if (n_posts < 1) throw ConfigError("n_posts must be at least 1");
  if (!(extra_images_mean >= 0.0) || !std::isfinite(extra_images_mean)) throw ConfigError("extra_images_mean must be non-negative");
  if (max_extra_images < 0) throw ConfigError("max_extra_images must be non-negative");
  mix.validate();
  image.validate();
}

std::string post_id_for(int post_index, int n_posts) {
  const int digits = std::max(5, static_cast<int>(std::to_string(std::max(0, n_posts - 1)).size()));
  std::string num = std::to_string(post_index);
  return "post_" + std::string(static_cast<std::size_t>(std::max(0, digits - static_cast<int>(num.size()))), '0') + num;
}

namespace {

std::vector<std::pair<ManifestRecord, ImageSpec>> plan_post(const CorpusConfig& c, int p) {
  Rng post_rng(derive_seed(c.seed, static_cast<std::uint64_t>(p), kPostStream));
  const bool vaping = bernoulli(post_rng, c.mix.vaping);
  const auto extra = std::min<std::uint64_t>(poisson(post_rng, c.extra_images_mean),
                                             static_cast<std::uint64_t>(c.max_extra_images));
  const std::string post_id = post_id_for(p, c.n_posts);
  std::vector<std::pair<ManifestRecord, ImageSpec>> out;
  for (std::uint64_t k = 0; k <= extra; ++k) {
    Rng rng(derive_seed(c.seed, static_cast<std::uint64_t>(p), k));
    const Scenario s = c.mix.sample(rng);
    ImageSpec spec = sample_spec(rng, s, vaping, c.image);
    ManifestRecord r;
    r.post_id = post_id;
    r.image_path = "images/" + post_id + "_" + std::to_string(k) + ".ppm";
    r.width = spec.width;
    r.height = spec.height;
    r.labels = labels_for(s, vaping);
    r.warning_geometry = spec.warning;
    r.scenario = s;
    out.emplace_back(std::move(r), std::move(spec));
  }
  return out;
}

}  // namespace

std::vector<std::pair<ManifestRecord, ImageSpec>> plan_corpus(const CorpusConfig& config) {
  config.validate();
  std::vector<std::pair<ManifestRecord, ImageSpec>> out;
  for (int p = 0; p < config.n_posts; ++p) {
    auto post = plan_post(config, p);
    for (auto& e : post) out.push_back(std::move(e));
  }
  return out;
}

Manifest generate_corpus(const CorpusConfig& config, const std::filesystem::path& out_dir, int threads) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (ec) throw DataError("cannot create " + (out_dir / "images").string() + ": " + ec.message());

  std::vector<std::vector<ManifestRecord>> per_post(static_cast<std::size_t>(config.n_posts));
  parallel_for(
      per_post.size(),
      [&](std::size_t p) {
        for (auto& [record, spec] : plan_post(config, static_cast<int>(p))) {
          write_ppm(out_dir / record.image_path, render_image(spec));
          per_post[p].push_back(std::move(record));
        }
      },
      threads);

  Manifest m;
  m.base_dir = out_dir;
  for (auto& post : per_post) {
    for (auto& r : post) m.records.push_back(std::move(r));
  }
  write_manifest(out_dir / kManifestFile, m.records);
  return m;
}

}  // namespace adlabel
