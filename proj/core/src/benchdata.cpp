// Copyright 2026 The MCDRL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#include "mcdrl/benchdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "mcdrl/encoders.hpp"
#include "mcdrl/errors.hpp"
#include "mcdrl/rng.hpp"
#include "mcdrl/tensor_io.hpp"

namespace mcdrl {
namespace {

using json = nlohmann::json;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct LesionGeometry {
  double cx = 0, cy = 0;
  double ra = 0, rb = 0;  // semi-axes
  double angle = 0;
  double wobble3 = 0, wobble5 = 0, phase3 = 0, phase5 = 0;
};

// Class shape families: 0 ellipse, 1 lobed blob, 2 elongated ellipse,
// 3 small disc, 4 large disc.
LesionGeometry draw_geometry(std::size_t class_k, double scale, double h, double w, Rng& rng) {
  LesionGeometry g;
  g.cx = rng.uniform(0.3, 0.7) * w;
  g.cy = rng.uniform(0.3, 0.7) * h;
  g.angle = rng.uniform(0.0, std::numbers::pi);
  switch (class_k % 5) {
    case 0:
      g.ra = rng.uniform(5.0, 8.0) * scale;
      g.rb = g.ra * rng.uniform(0.7, 0.95);
      break;
    case 1:
      g.ra = g.rb = rng.uniform(6.0, 9.0) * scale;
      g.wobble3 = rng.uniform(0.15, 0.3);
      g.wobble5 = rng.uniform(0.05, 0.15);
      g.phase3 = rng.uniform(0.0, kTwoPi);
      g.phase5 = rng.uniform(0.0, kTwoPi);
      break;
    case 2:
      g.ra = rng.uniform(9.0, 13.0) * scale;
      g.rb = rng.uniform(3.0, 4.5) * scale;
      break;
    case 3:
      g.ra = g.rb = rng.uniform(3.5, 5.0) * scale;
      break;
    default:
      g.ra = g.rb = rng.uniform(8.0, 11.0) * scale;
      break;
  }
  return g;
}

bool inside(const LesionGeometry& g, double x, double y) {
  const double dx = x - g.cx, dy = y - g.cy;
  const double c = std::cos(g.angle), s = std::sin(g.angle);
  const double u = c * dx + s * dy, v = -s * dx + c * dy;
  const double theta = std::atan2(v, u);
  const double radial = 1.0 + g.wobble3 * std::sin(3.0 * theta + g.phase3) +
                        g.wobble5 * std::sin(5.0 * theta + g.phase5);
  const double r = std::sqrt((u / g.ra) * (u / g.ra) + (v / g.rb) * (v / g.rb));
  return r <= radial;
}

// Luminance texture inside the lesion: period-4 square patterns locked to the
// pixel grid, one orientation per class; class 4 is flat.
double texture(std::size_t class_k, std::size_t x, std::size_t y) {
  constexpr double kAmplitude = 0.2;
  bool up = false;
  switch (class_k % 5) {
    case 0: up = y % 4 < 2; break;
    case 1: up = x % 4 < 2; break;
    case 2: up = (x / 2 + y / 2) % 2 == 0; break;
    case 3: up = (x + y) % 4 < 2; break;
    default: return 0.0;
  }
  return up ? kAmplitude : -kAmplitude;
}

constexpr std::array<std::array<double, 3>, 5> kLesionTint{{
    {0.05, 0.00, 0.00},
    {-0.05, -0.03, 0.02},
    {0.08, -0.05, -0.05},
    {-0.02, 0.04, 0.00},
    {-0.05, 0.05, 0.10},
}};

void box_blur(Image& img, int radius) {
  if (radius <= 0) return;
  const auto h = static_cast<long>(img.height), w = static_cast<long>(img.width);
  Image tmp = img;
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        double s = 0.0;
        for (long k = -radius; k <= radius; ++k) s += img.at(y, std::clamp(x + k, 0L, w - 1), c);
        tmp.at(y, x, c) = s / (2.0 * radius + 1.0);
      }
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        double s = 0.0;
        for (long k = -radius; k <= radius; ++k) s += tmp.at(std::clamp(y + k, 0L, h - 1), x, c);
        img.at(y, x, c) = s / (2.0 * radius + 1.0);
      }
}

void apply_domain(Image& img, const DomainSpec& d, Rng& rng) {
  box_blur(img, d.blur_radius);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = d.brightness_gain * img.at(y, x, c) + d.color_cast[c];
  if (rng.uniform() < d.occlusion_probability) {
    const double scale = static_cast<double>(std::min(img.height, img.width)) / 32.0;
    const double cx = rng.uniform(0.0, static_cast<double>(img.width));
    const double cy = rng.uniform(0.0, static_cast<double>(img.height));
    const double ra = rng.uniform(2.0, 4.0) * scale, rb = rng.uniform(1.5, 3.0) * scale;
    for (std::size_t y = 0; y < img.height; ++y)
      for (std::size_t x = 0; x < img.width; ++x) {
        const double u = (x + 0.5 - cx) / ra, v = (y + 0.5 - cy) / rb;
        if (u * u + v * v <= 1.0)
          for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = 0.97;
      }
  }
  if (d.noise_amplitude > 0.0) {
    for (double& p : img.pixels) p += d.noise_amplitude * rng.normal();
  }
  for (double& p : img.pixels) p = std::clamp(p, 0.0, 1.0);
}

json domain_to_json(const DomainSpec& d) {
  return json{{"site", std::string(1, d.site)},
              {"brightness_gain", d.brightness_gain},
              {"blur_radius", d.blur_radius},
              {"color_cast", d.color_cast},
              {"noise_amplitude", d.noise_amplitude},
              {"occlusion_probability", d.occlusion_probability}};
}

DomainSpec domain_from_json(const json& j) {
  DomainSpec d;
  const auto site = j.at("site").get<std::string>();
  if (site.size() != 1) throw FormatError("site id must be one character");
  d.site = site[0];
  d.brightness_gain = j.at("brightness_gain").get<double>();
  d.blur_radius = j.at("blur_radius").get<int>();
  d.color_cast = j.at("color_cast").get<std::array<double, 3>>();
  d.noise_amplitude = j.at("noise_amplitude").get<double>();
  d.occlusion_probability = j.at("occlusion_probability").get<double>();
  d.validate();
  return d;
}

}  // namespace

void DomainSpec::validate() const {
  const auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  if (!in(brightness_gain, 0.5, 1.5)) throw ParameterError("brightness_gain outside [0.5, 1.5]");
  if (blur_radius < 0 || blur_radius > 3) throw ParameterError("blur_radius outside 0..3");
  for (double c : color_cast)
    if (!in(c, -0.2, 0.2)) throw ParameterError("color_cast outside [-0.2, 0.2]");
  if (!in(noise_amplitude, 0.0, 0.2)) throw ParameterError("noise_amplitude outside [0, 0.2]");
  if (!in(occlusion_probability, 0.0, 1.0)) throw ParameterError("occlusion_probability outside [0, 1]");
}

bool DomainSpec::same_parameters(const DomainSpec& o) const {
  return brightness_gain == o.brightness_gain && blur_radius == o.blur_radius &&
         color_cast == o.color_cast && noise_amplitude == o.noise_amplitude &&
         occlusion_probability == o.occlusion_probability;
}

const std::vector<DomainSpec>& default_sites() {
  static const std::vector<DomainSpec> kSites{
      {'A', 1.25, 0, {0.08, -0.02, -0.05}, 0.02, 0.1},
      {'B', 0.75, 1, {-0.05, 0.03, 0.08}, 0.05, 0.0},
      {'C', 1.00, 1, {0.00, 0.06, -0.06}, 0.03, 0.3},
      {'D', 0.90, 0, {0.10, 0.00, 0.10}, 0.08, 0.2},
      {'E', 1.10, 1, {-0.08, -0.05, 0.00}, 0.01, 0.5},
  };
  return kSites;
}

std::vector<DomainSpec> load_sites(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open site file " + path.string());
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.contains("sites")) throw FormatError(path.string() + ": not a site file");
  std::vector<DomainSpec> sites;
  for (const auto& s : j.at("sites")) sites.push_back(domain_from_json(s));
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (std::size_t k = i + 1; k < sites.size(); ++k)
      if (sites[i].same_parameters(sites[k])) throw ParameterError("two sites share a parameter tuple");
  return sites;
}

std::string sites_to_json(std::span<const DomainSpec> sites) {
  json arr = json::array();
  for (const auto& s : sites) arr.push_back(domain_to_json(s));
  return json{{"sites", arr}}.dump(2) + "\n";
}

SegmentationSample generate_sample(std::uint64_t seed, std::size_t class_k, const DomainSpec& domain,
                                   std::size_t height, std::size_t width, std::size_t domain_index) {
  domain.validate();
  if (height == 0 || width == 0) throw ParameterError("image dims must be positive");
  if (class_k >= 255) throw ParameterError("class id " + std::to_string(class_k) + " does not fit a label");
  const double h = static_cast<double>(height), w = static_cast<double>(width);
  const double scale = std::min(h, w) / 32.0;
  const double pixels = h * w;

  // Content (geometry and tissue) comes from (seed, class) only.
  Rng content(mix_seed(seed, 0x6c6573696f6eULL + class_k));
  LabelMap labels;
  LesionGeometry geo;
  bool ok = false;
  for (int attempt = 0; attempt < kMaxShapeAttempts && !ok; ++attempt) {
    geo = draw_geometry(class_k, scale, h, w, content);
    labels = LabelMap(height, width);
    std::size_t area = 0;
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x)
        if (inside(geo, x + 0.5, y + 0.5)) {
          labels.at(y, x) = static_cast<std::uint8_t>(class_k + 1);
          ++area;
        }
    const double frac = static_cast<double>(area) / pixels;
    ok = frac >= kMinLesionFraction && frac <= kMaxLesionFraction;
  }
  if (!ok) {
    throw ParameterError("could not draw a lesion within area bounds after " +
                         std::to_string(kMaxShapeAttempts) + " attempts");
  }

  Image img(height, width);
  const double fx = content.uniform(0.1, 0.3), fy = content.uniform(0.1, 0.3);
  const double p1 = content.uniform(0.0, kTwoPi), p2 = content.uniform(0.0, kTwoPi);
  constexpr std::array<double, 3> kTissue{0.78, 0.50, 0.45};
  constexpr std::array<double, 3> kLesion{0.62, 0.30, 0.28};
  const auto& tint = kLesionTint[class_k % 5];
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const double shade = 0.06 * std::sin(fx * x + p1) * std::cos(fy * y + p2);
      const double grain = 0.02 * content.normal();
      const bool lesion = labels.at(y, x) != 0;
      const double tex = lesion ? texture(class_k, x, y) : 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        const double base = lesion ? kLesion[c] + tint[c] : kTissue[c];
        img.at(y, x, c) = std::clamp(base + shade + grain + tex, 0.0, 1.0);
      }
    }

  Rng appearance(mix_seed(seed, fnv1a(std::string("site-") + domain.site)));
  apply_domain(img, domain, appearance);
  return SegmentationSample{std::move(img), std::move(labels), class_k, domain_index, seed};
}

Dataset generate_split(std::size_t n_per_domain, std::uint64_t seed, std::span<const DomainSpec> domains,
                       std::size_t height, std::size_t width, std::size_t num_classes) {
  if (n_per_domain == 0) throw ParameterError("n_per_domain must be at least 1");
  if (domains.empty()) throw ParameterError("at least one domain is required");
  if (num_classes == 0 || num_classes > 5) throw ParameterError("num_classes must be 1..5");
  Dataset ds;
  ds.domains.assign(domains.begin(), domains.end());
  ds.num_classes = num_classes;
  ds.height = height;
  ds.width = width;
  ds.samples.reserve(n_per_domain * domains.size());
  for (std::size_t d = 0; d < domains.size(); ++d)
    for (std::size_t i = 0; i < n_per_domain; ++i) {
      const std::uint64_t s = mix_seed(mix_seed(seed, d), i);
      ds.samples.push_back(generate_sample(s, i % num_classes, domains[d], height, width, d));
    }
  return ds;
}

SplitIndices hold_out(const Dataset& dataset, std::size_t held_out) {
  if (held_out >= dataset.domains.size()) {
    throw ParameterError("held-out domain " + std::to_string(held_out) + " does not exist");
  }
  SplitIndices split;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    (dataset.samples[i].domain == held_out ? split.test : split.train).push_back(i);
  }
  return split;
}

std::size_t site_index(const Dataset& dataset, char site) {
  for (std::size_t i = 0; i < dataset.domains.size(); ++i)
    if (dataset.domains[i].site == site) return i;
  throw ParameterError(std::string("unknown site ") + site);
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir, std::uint64_t seed,
                   std::size_t n_per_domain) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "samples", ec);
  if (ec) throw IoError("cannot create " + (dir / "samples").string() + ": " + ec.message());
  json samples = json::array();
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto& s = dataset.samples[i];
    char name[32];
    std::snprintf(name, sizeof name, "samples/%05zu.mcdt", i);
    std::vector<double> packed(s.image.height * s.image.width * 4);
    for (std::size_t p = 0; p < s.image.height * s.image.width; ++p) {
      for (std::size_t c = 0; c < 3; ++c) packed[p * 4 + c] = s.image.pixels[p * 3 + c];
      packed[p * 4 + 3] = s.labels.labels[p];
    }
    save_tensor(dir / name, Tensor::from({s.image.height, s.image.width, 4}, std::move(packed)));
    samples.push_back(json{{"path", name},
                           {"class", s.class_id},
                           {"domain", std::string(1, dataset.domains[s.domain].site)},
                           {"seed", s.seed}});
  }
  json domains = json::array();
  for (const auto& d : dataset.domains) domains.push_back(domain_to_json(d));
  const json manifest{{"format", "mcdrl-dataset"},
                      {"version", 1},
                      {"seed", seed},
                      {"per_domain", n_per_domain},
                      {"height", dataset.height},
                      {"width", dataset.width},
                      {"classes", std::vector<std::string>(default_class_names().begin(),
                                                           default_class_names().begin() +
                                                               static_cast<std::ptrdiff_t>(dataset.num_classes))},
                      {"domains", domains},
                      {"samples", samples}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

Dataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("dataset manifest not found in " + dir.string());
  const json m = json::parse(in, nullptr, false);
  if (m.is_discarded() || m.value("format", "") != "mcdrl-dataset") {
    throw FormatError((dir / "manifest.json").string() + ": not a dataset manifest");
  }
  Dataset ds;
  ds.height = m.at("height").get<std::size_t>();
  ds.width = m.at("width").get<std::size_t>();
  ds.num_classes = m.at("classes").size();
  for (const auto& d : m.at("domains")) ds.domains.push_back(domain_from_json(d));
  for (const auto& rec : m.at("samples")) {
    SegmentationSample s;
    s.class_id = rec.at("class").get<std::size_t>();
    s.seed = rec.at("seed").get<std::uint64_t>();
    const auto site = rec.at("domain").get<std::string>();
    s.domain = site_index(ds, site.empty() ? '?' : site[0]);
    if (s.class_id >= ds.num_classes) throw FormatError("sample class out of range");
    const Tensor t = load_tensor(dir / rec.at("path").get<std::string>());
    if (t.shape() != Shape{ds.height, ds.width, 4}) throw FormatError("sample tensor has wrong shape");
    s.image = Image(ds.height, ds.width);
    s.labels = LabelMap(ds.height, ds.width);
    for (std::size_t p = 0; p < ds.height * ds.width; ++p) {
      for (std::size_t c = 0; c < 3; ++c) s.image.pixels[p * 3 + c] = t[p * 4 + c];
      const double label = t[p * 4 + 3];
      if (label < 0 || label > static_cast<double>(ds.num_classes) || label != std::floor(label)) {
        throw FormatError("sample label channel holds a non-class value");
      }
      s.labels.labels[p] = static_cast<std::uint8_t>(label);
    }
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw FormatError("dataset has no samples");
  return ds;
}

}  // namespace mcdrl
